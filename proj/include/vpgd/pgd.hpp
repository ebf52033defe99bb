#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vpgd/linalg.hpp"
#include "vpgd/model.hpp"
#include "vpgd/multiscale_fit.hpp"
#include "vpgd/oracle.hpp"
#include "vpgd/space_fem.hpp"
#include "vpgd/time_basis.hpp"

namespace vpgd {

enum class TimeMode { SingleScale, MultiScale };

std::string to_string(TimeMode mode);
TimeMode parse_time_mode(const std::string& s);

/// A temporal PGD function: always available as fine-grid samples; in multi-scale mode the
/// samples are those of `multiscale`.
struct TemporalMode {
    Vector samples;
    std::optional<MultiScaleFunction> multiscale;
};

/// sum_i spatial_i (x) temporal_i. Spatial vectors are nodal (displacement) or element-wise
/// (internal variables).
struct SeparatedField {
    FieldLocation location = FieldLocation::Nodes;
    std::vector<Vector> spatial;
    std::vector<TemporalMode> temporal;

    std::size_t rank() const noexcept { return spatial.size(); }
    void add(Vector s, TemporalMode t);
    void pop();
};

/// Space-time inner product of two separated fields (mass-weighted in space, trapezoid in time).
double inner(const SeparatedField& a, const SeparatedField& b, const Mesh1D& mesh,
             const SingleScaleGrid& grid);
double norm(const SeparatedField& a, const Mesh1D& mesh, const SingleScaleGrid& grid);

SpaceTimeField reconstruct(const SeparatedField& field, const Mesh1D& mesh, const SingleScaleGrid& grid);

/// 100 |after - before| / |before|; nullopt when `before` vanishes (first mode).
std::optional<double> eps_u(const SeparatedField& before, const SeparatedField& after,
                            const Mesh1D& mesh, const SingleScaleGrid& grid);

/// Same criterion for internal variable fields; the last mode of `z` is the new one.
std::optional<double> eps_z(const SeparatedField& z, const Mesh1D& mesh, const SingleScaleGrid& grid);

struct PgdSettings {
    TimeMode time_mode = TimeMode::SingleScale;
    double u_mode_tol = 2.0;          ///< eps_u threshold, percent
    double z_mode_tol = 2.0;          ///< eps_z threshold, percent
    double outer_tol = 2.0;           ///< stagnation threshold, percent
    std::size_t max_outer = 50;
    std::size_t max_u_modes = 20;
    std::size_t max_z_modes_per_iter = 10;
    double als_tol = 1e-3;            ///< relative change of a mode between alternating sweeps
    std::size_t als_max_iters = 25;
    std::size_t n_macro = 21;
    std::size_t n_micro = 201;
    FitSettings fit;  ///< joint_refine_iters is ignored inside the solver

    void validate() const;
};

struct SolverState {
    SeparatedField u;
    std::vector<SeparatedField> z;
    std::size_t outer_iterations = 0;
    std::vector<double> stagnation;  ///< percent, one entry per outer iteration
};

struct SolveReport {
    TimeMode time_mode = TimeMode::SingleScale;
    bool converged = false;
    std::string stop_reason;
    std::size_t outer_iterations = 0;
    std::vector<double> stagnation;
    std::size_t u_modes = 0;
    std::vector<std::size_t> z_modes;
    std::vector<std::vector<double>> eps_u_history;  ///< per outer iteration
    std::vector<double> eps_z_last;                  ///< last eps_z per variable (NaN: no mode)
    std::vector<bool> z_criterion_met;               ///< per variable, final outer iteration
    std::size_t single_scale_dofs = 0;               ///< n_t per temporal mode
    std::size_t multiscale_dofs_per_submode = 0;     ///< n_macro + n_micro
    double dof_reduction_percent = 0.0;
    double mean_submodes = 0.0;                      ///< per multi-scale temporal mode
    double first_z_fit_error_percent = std::numeric_limits<double>::quiet_NaN();
    Vector first_z_reference;                        ///< single-scale optimum of that mode
    Vector first_z_multiscale;
    double seconds_total = 0.0;
    double seconds_displacement = 0.0;
    double seconds_internal = 0.0;
};

struct PgdResult {
    SolverState state;
    SolveReport report;
};

/// Precomputed operators shared by the enrichment steps.
class PgdContext {
public:
    PgdContext(const ProblemDefinition& problem, const Mesh1D& mesh, const SingleScaleGrid& grid,
               const PgdSettings& settings);

    const ProblemDefinition& problem() const noexcept { return problem_; }
    const Mesh1D& mesh() const noexcept { return mesh_; }
    const SingleScaleGrid& grid() const noexcept { return grid_; }
    const PgdSettings& settings() const noexcept { return settings_; }
    const Constraints& constraints() const noexcept { return bcs_; }
    const SymTridiagonal& stiffness() const noexcept { return stiffness_; }
    const SymTridiagonal& mass() const noexcept { return mass_; }
    const Vector& load_space() const noexcept { return load_space_; }
    const Vector& load_time() const noexcept { return load_time_; }
    const std::optional<MultiScaleBasis>& basis() const noexcept { return basis_; }
    const MultiScaleFitter& displacement_fitter() const;
    /// Temporal operator A_j of process j (exact P1 integration).
    const SymTridiagonal& relaxation(std::size_t j) const { return relaxation_.at(j); }
    /// Multi-scale fitter under the A_j metric.
    const MultiScaleFitter& internal_fitter(std::size_t j) const;

private:
    ProblemDefinition problem_;
    Mesh1D mesh_;
    SingleScaleGrid grid_;
    PgdSettings settings_;
    Constraints bcs_;
    SymTridiagonal stiffness_;  // E_v A
    SymTridiagonal mass_;
    Vector load_space_;         // F_x + F_N
    Vector load_time_;          // f_t samples
    std::optional<MultiScaleBasis> basis_;
    std::optional<MultiScaleFitter> u_fitter_;
    std::vector<SymTridiagonal> relaxation_;
    std::vector<MultiScaleFitter> z_fitters_;
};

/// One displacement enrichment problem: u_m = u_{m-1} + u_bar lambda, with the load and the
/// internal-variable coupling held fixed. Right-hand sides are kept as sums of separated terms.
class DisplacementProblem {
public:
    DisplacementProblem(const PgdContext& ctx, const SeparatedField& u_prev,
                        const std::vector<SeparatedField>& z);

    /// (int lambda^2) K u_bar = int lambda R dt, clamped nodes eliminated.
    Vector spatial_step(std::span<const double> lambda) const;
    /// lambda*(t) = u_bar^T R(t) / (u_bar^T K u_bar) with lambda*(0) = 0.
    Vector temporal_step(std::span<const double> u_bar) const;
    /// Free-node part of int lambda (R - K u_bar lambda) dt.
    Vector galerkin_residual(std::span<const double> u_bar, std::span<const double> lambda) const;
    /// Spatial start vector: residual displacement at the scanned time of largest residual.
    Vector initial_spatial() const;

private:
    const PgdContext& ctx_;
    std::vector<Vector> spaces_;  // a_r
    std::vector<std::span<const double>> times_;  // theta_r
};

/// One internal-variable enrichment problem for process j: minimizes
///   sum_e h_e int (zb_e psi + f_res_e - zinf_e / tau)^2 dt,   psi = phi' + phi / tau,
/// over (zb, phi), phi(0) = 0, with u and the previous modes of z^[j] fixed.
class InternalVariableProblem {
public:
    InternalVariableProblem(const PgdContext& ctx, std::size_t j, const SeparatedField& u,
                            const SeparatedField& z_prev);

    double beta() const noexcept { return beta_; }
    const SymTridiagonal& relaxation_operator() const noexcept { return a_; }

    /// z̄_e = int psi c_e / int psi^2 ; returns zeros when psi == 0.
    Vector spatial_step(std::span<const double> phi) const;
    /// Exact single-scale temporal minimizer for fixed z̄ (tridiagonal solve, phi(0) = 0).
    Vector temporal_step(std::span<const double> zbar) const;
    /// Objective minus the phi- and z̄-independent constant.
    double objective(std::span<const double> zbar, std::span<const double> phi) const;
    /// z_inf trace at the element of largest equilibrium strain; zero vector when u == 0.
    Vector initial_temporal() const;
    /// True when both z_inf and f_res vanish identically.
    bool trivial() const noexcept { return trivial_; }

private:
    Vector rhs_for(std::span<const double> zbar) const;

    const PgdContext& ctx_;
    double beta_;
    double e_inf_;
    SymTridiagonal a_;
    SymTridiagonal a_reduced_;
    Vector h_;
    std::vector<Vector> strains_;  // eps(u_bar_i), element-wise
    std::vector<Vector> loads_;    // relaxation_load(lambda_i)
    std::vector<std::span<const double>> u_times_;
    const SeparatedField& z_prev_;
    std::vector<Vector> a_phi_;    // A phi_k for previous modes
    bool trivial_ = false;
};

struct EnrichmentStats {
    std::size_t modes_added = 0;
    std::vector<double> eps;   ///< criterion after each accepted mode (first mode: NaN)
    bool criterion_met = false;
    double first_fit_error_percent = std::numeric_limits<double>::quiet_NaN();
    Vector first_reference;
    Vector first_multiscale;
};

/// Greedy enrichment of a fresh displacement field until eps_u <= tol, degeneracy or the mode cap.
EnrichmentStats enrich_displacement(const PgdContext& ctx, SeparatedField& u,
                                    const std::vector<SeparatedField>& z);

/// Adds modes to z^[j] until eps_z <= tol, degeneracy or the per-iteration cap.
EnrichmentStats enrich_internal_variable(const PgdContext& ctx, std::size_t j, const SeparatedField& u,
                                         SeparatedField& z);

/// Staggered fixed point: rebuild u for the current z, enrich every z^[j] for that u, repeat
/// until the displacement stagnates.
PgdResult outer_fixed_point(const ProblemDefinition& problem, const Mesh1D& mesh,
                            const SingleScaleGrid& grid, const PgdSettings& settings);

/// Reconstructed stress sigma = E_v du/dx - sum_j z^[j] (element-wise).
SpaceTimeField reconstruct_stress(const SolverState& state, const PgdContext& ctx);

}  // namespace vpgd
