#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vpgd/linalg.hpp"
#include "vpgd/time_basis.hpp"

namespace vpgd {

struct FitSettings {
    std::size_t max_submodes = 10;
    double target_rel_error = 0.1;  ///< percent
    std::size_t als_max_iters = 50;
    double als_stagnation_tol = 1e-3;
    std::size_t transient_macro_elements = 2;  ///< T_c in macro elements
    /// Damped Gauss-Newton sweeps on (q, g) jointly after the alternating loop; 0 disables.
    std::size_t joint_refine_iters = 20;

    void validate() const;
};

struct FitResult {
    MultiScaleFunction function;
    Vector samples;                 ///< function sampled on the fit grid
    double rel_error_percent = 0;   ///< 100 |s - f| / |s| in the fit norm, whole grid
    std::vector<double> history;    ///< rel_error_percent after each accepted submode
    std::vector<std::size_t> als_iterations;
};

/// Greedy PU fit in the plain discrete L2 norm over the grid samples.
FitResult fit_signal(std::span<const double> signal, const SingleScaleGrid& grid,
                     const MultiScaleBasis& basis, const FitSettings& settings);

/// Same with the weighted inner product sum_n w_n a_n b_n (w_n >= 0, not all zero).
FitResult fit_weighted(std::span<const double> signal, std::span<const double> weights,
                       const SingleScaleGrid& grid, const MultiScaleBasis& basis,
                       const FitSettings& settings);

/// Same with a symmetric positive semidefinite tridiagonal metric a^T W b.
FitResult fit_metric(std::span<const double> signal, const SymTridiagonal& metric,
                     const SingleScaleGrid& grid, const MultiScaleBasis& basis,
                     const FitSettings& settings);

/// Per-submode relative errors of a fit (non-increasing).
const std::vector<double>& residual_history(const FitResult& result);

/// The alternating least-squares machinery behind the fits, exposed for inspection.
/// Samples before the transient end T_c are excluded from every product.
class MultiScaleFitter {
public:
    MultiScaleFitter(const SingleScaleGrid& grid, const MultiScaleBasis& basis,
                     SymTridiagonal metric, const FitSettings& settings);

    /// First grid index handled by the PU expansion (t_n >= T_c).
    std::size_t expansion_start() const noexcept { return start_; }
    double transient_end() const noexcept { return transient_end_; }

    /// Optimal q for fixed g against `target` (whole-grid vector; only n >= start used).
    Vector solve_macro(std::span<const double> micro, std::span<const double> target) const;
    /// Optimal g for fixed q.
    Vector solve_micro(std::span<const double> macro, std::span<const double> target) const;

    /// Whole-grid samples of one submode (zero before T_c).
    Vector sample_submode(std::span<const double> macro, std::span<const double> micro) const;

    /// sqrt(r^T W r) restricted to the expansion block.
    double block_norm(std::span<const double> r) const;
    /// sqrt(r^T W r) over the whole grid.
    double full_norm(std::span<const double> r) const;

    /// Micro initial guess from the residual around the macro node with the most residual energy;
    /// `rank` picks the next-best node on retries.
    Vector initial_micro(std::span<const double> residual, std::size_t rank) const;

    /// Damped Gauss-Newton on (q, g) jointly; never increases the block residual.
    /// Returns the number of accepted steps.
    std::size_t refine(Vector& macro, Vector& micro, std::span<const double> target,
                       std::size_t max_iters) const;

    FitResult fit(std::span<const double> signal) const;

private:
    double metric_entry(std::size_t n, std::size_t m) const;
    Vector block_apply(std::span<const double> r) const;

    SingleScaleGrid grid_;
    MultiScaleBasis basis_;
    SymTridiagonal metric_;
    FitSettings settings_;
    std::size_t start_ = 0;
    double transient_end_ = 0.0;
    std::vector<Stencil> stencils_;  // indexed by n - start_
};

}  // namespace vpgd
