#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vpgd/linalg.hpp"
#include "vpgd/model.hpp"
#include "vpgd/space_fem.hpp"
#include "vpgd/time_basis.hpp"

namespace vpgd {

/// Row-major (time, space) array. Spatial entries are nodes or elements depending on the field.
class SpaceTimeField {
public:
    SpaceTimeField() = default;
    SpaceTimeField(std::size_t n_times, std::size_t n_space)
        : n_t_(n_times), n_s_(n_space), data_(n_times * n_space, 0.0) {}

    std::size_t n_times() const noexcept { return n_t_; }
    std::size_t n_space() const noexcept { return n_s_; }

    double& operator()(std::size_t n, std::size_t a) { return data_[n * n_s_ + a]; }
    double operator()(std::size_t n, std::size_t a) const { return data_[n * n_s_ + a]; }

    std::span<double> at_time(std::size_t n) { return {data_.data() + n * n_s_, n_s_}; }
    std::span<const double> at_time(std::size_t n) const { return {data_.data() + n * n_s_, n_s_}; }

    /// Samples of one spatial entry over time.
    Vector trace(std::size_t a) const;

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

private:
    std::size_t n_t_ = 0;
    std::size_t n_s_ = 0;
    Vector data_;
};

/// Spatial weighting of a field: the consistent mass matrix for nodal fields, h_e for element fields.
enum class FieldLocation { Nodes, Elements };

/// sqrt( trapezoid-in-time of x^T M x ), M matching the field location.
double spacetime_norm(const SpaceTimeField& field, const Mesh1D& mesh, const SingleScaleGrid& grid,
                      FieldLocation where);

/// 100 |candidate - reference| / |reference| in the space-time norm.
/// Throws DomainError when the reference norm vanishes.
double relative_error(const SpaceTimeField& candidate, const SpaceTimeField& reference,
                      const Mesh1D& mesh, const SingleScaleGrid& grid, FieldLocation where);

/// 100 |a - b|_trap / |b|_trap for time series on one grid.
double relative_error_trace(std::span<const double> candidate, std::span<const double> reference,
                            const SingleScaleGrid& grid);

struct FullOrderSolution {
    SpaceTimeField u;                  ///< n_t x n_x, m
    std::vector<SpaceTimeField> z;     ///< N fields, n_t x n_el, Pa
    SpaceTimeField sigma;              ///< n_t x n_el, Pa
    std::vector<std::string> warnings;
};

/// Backward-Euler full-order solve with static condensation of the internal variables:
/// one tridiagonal solve per step with E_eff = E_v - sum_j p_j E_r a_j / (1 + a_j), a_j = dt / tau_j.
FullOrderSolution solve_full_order(const ProblemDefinition& problem, const Mesh1D& mesh,
                                   const SingleScaleGrid& grid);

/// Backward Euler for dz/dt + (z - modulus * strain) / tau = 0 with z(0) = 0 and a prescribed
/// strain history sampled on the grid.
Vector relax_internal_variable(std::span<const double> strain, double tau, double modulus,
                               const SingleScaleGrid& grid);

/// max over free nodes of |int A sigma v' dx - F(t_n)| at time step n.
double equilibrium_residual(const FullOrderSolution& solution, const ProblemDefinition& problem,
                            const Mesh1D& mesh, const SingleScaleGrid& grid, std::size_t n);

/// Total external nodal force F(t) = (F_x + F_N) f_t(t).
Vector external_force(const ProblemDefinition& problem, const Mesh1D& mesh, double t);

}  // namespace vpgd
