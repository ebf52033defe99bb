#pragma once

#include <span>

#include "vpgd/linalg.hpp"
#include "vpgd/time_basis.hpp"

namespace vpgd::temporal {

/// sum_n w_n a_n b_n with trapezoid weights.
double trapezoid(const SingleScaleGrid& grid, std::span<const double> a, std::span<const double> b);

/// Consistent P1 mass matrix on the time grid.
SymTridiagonal p1_mass(const SingleScaleGrid& grid);

/// Matrix of the bilinear form int (phi' + beta phi)(chi' + beta chi) dt for continuous P1
/// functions, integrated exactly.
SymTridiagonal relaxation_operator(const SingleScaleGrid& grid, double beta);

/// Vector b such that b . phi = int (phi' + beta phi) lambda dt (both P1, exact).
Vector relaxation_load(const SingleScaleGrid& grid, double beta, std::span<const double> lambda);

/// Nodal derivative samples (one-sided at the ends, centred inside); for reporting only.
Vector derivative_samples(const SingleScaleGrid& grid, std::span<const double> f);

/// Drops the first row/column (the t = 0 value is constrained to zero).
SymTridiagonal drop_first(const SymTridiagonal& a);

}  // namespace vpgd::temporal
