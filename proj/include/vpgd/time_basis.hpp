#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "vpgd/linalg.hpp"

namespace vpgd {

/// Uniform single-scale time grid over [0, T] with linear shape functions.
class SingleScaleGrid {
public:
    SingleScaleGrid(double horizon, std::size_t n_nodes);

    std::size_t size() const noexcept { return n_; }
    double horizon() const noexcept { return horizon_; }
    double step() const noexcept { return dt_; }
    double node(std::size_t n) const noexcept;
    Vector nodes() const;

    /// Trapezoid quadrature weights; they sum to T.
    const Vector& trapezoid_weights() const noexcept { return weights_; }

    /// Index of the node at t, or nullopt if t is not a node (relative slack 1e-9 of dt).
    std::optional<std::size_t> index_of(double t) const;

private:
    double horizon_;
    std::size_t n_;
    double dt_;
    Vector weights_;
};

/// Macro hat N_i and micro nodal shapes evaluated at one time instant.
struct HatTerm {
    std::size_t hat = 0;
    double value = 0.0;       ///< N_i(t)
    double slope = 0.0;       ///< N_i'(t)
    std::size_t micro = 0;    ///< left micro node of the micro element holding tau = t - t_i
    double micro_weight = 0;  ///< G_{micro+1}(tau); G_micro(tau) = 1 - micro_weight
};

struct Stencil {
    std::array<HatTerm, 2> terms;
};

/// Partition-of-unity temporal basis: uniform macro hats N_i over [0, T] and one shared micro
/// grid over tau in [-dT, dT] (a full hat support), both with linear shape functions.
class MultiScaleBasis {
public:
    MultiScaleBasis(double horizon, std::size_t n_macro, std::size_t n_micro);

    double horizon() const noexcept { return horizon_; }
    std::size_t n_macro() const noexcept { return n_macro_; }
    std::size_t n_micro() const noexcept { return n_micro_; }
    double macro_step() const noexcept { return macro_step_; }
    double micro_step() const noexcept { return micro_step_; }
    double macro_node(std::size_t i) const noexcept;
    double micro_node(std::size_t m) const noexcept;

    double hat(std::size_t i, double t) const;
    double hat_sum(double t) const;

    /// The two hats of the macro element containing t (right element at interior nodes).
    Stencil stencil(double t) const;

    /// Micro element and weight for tau in [-dT, dT].
    std::pair<std::size_t, double> locate_micro(double tau) const;

    bool operator==(const MultiScaleBasis& other) const noexcept;

private:
    double horizon_;
    std::size_t n_macro_;
    std::size_t n_micro_;
    double macro_step_;
    double micro_step_;
};

/// One (q^k, g^k) pair. `micro` has unit Euclidean norm; the scale is carried by `macro`.
struct Submode {
    Vector macro;
    Vector micro;
};

/// Fine-grid samples of lambda_c over [0, T_c].
struct TransientSegment {
    double end_time = 0.0;  ///< T_c
    double step = 0.0;      ///< spacing of `samples`
    Vector samples;         ///< samples[n] = lambda_c(n * step), n = 0 .. T_c / step
};

/// lambda(t) = Pi_{0,Tc}(t) lambda_c(t) + Pi_{Tc,T}(t) sum_k sum_i N_i(t) q_i^k G(t - t_i)^T g^k
class MultiScaleFunction {
public:
    explicit MultiScaleFunction(MultiScaleBasis basis);

    const MultiScaleBasis& basis() const noexcept { return basis_; }
    const std::vector<Submode>& submodes() const noexcept { return submodes_; }
    const std::optional<TransientSegment>& transient() const noexcept { return transient_; }
    std::size_t n_submodes() const noexcept { return submodes_.size(); }
    double transient_end() const noexcept { return transient_ ? transient_->end_time : 0.0; }

    /// Appends (q, g) after rescaling g to unit norm. Throws InvalidParameter for g == 0.
    void add_submode(Vector macro, Vector micro);

    /// T_c must be a whole number of macro elements and a whole number of sample steps.
    void set_transient(TransientSegment segment);

    double eval(double t) const;
    double eval_derivative(double t) const;

    /// Value of the PU expansion alone (no transient splice).
    double eval_expansion(double t) const;

private:
    MultiScaleBasis basis_;
    std::vector<Submode> submodes_;
    std::optional<TransientSegment> transient_;
};

struct DofCount {
    std::size_t macro = 0;
    std::size_t micro = 0;
    std::size_t total = 0;
};

/// (n_macro m_s, n_micro m_s, sum). Throws InvalidParameter for m_s == 0.
DofCount dof_count(const MultiScaleBasis& basis, std::size_t n_submodes);

/// Percentage of single-scale DOFs saved: 100 (1 - total / n_single).
double dof_reduction_percent(const DofCount& dofs, std::size_t n_single);

/// eval() at every grid node. Throws DomainError when the horizons differ.
Vector sample_on_grid(const MultiScaleFunction& f, const SingleScaleGrid& grid);

/// Structured-text (JSON) record of basis dimensions, submodes and transient samples.
std::string serialize(const MultiScaleFunction& f);
MultiScaleFunction deserialize_multiscale(const std::string& text);

}  // namespace vpgd
