#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vpgd {

using Vector = std::vector<double>;

/// Symmetric tridiagonal matrix: `diag` of size n, `off` of size n-1 (off[k] couples k and k+1).
struct SymTridiagonal {
    Vector diag;
    Vector off;

    SymTridiagonal() = default;
    explicit SymTridiagonal(std::size_t n) : diag(n, 0.0), off(n > 0 ? n - 1 : 0, 0.0) {}

    std::size_t size() const noexcept { return diag.size(); }

    Vector apply(std::span<const double> x) const;
    double quadratic(std::span<const double> x, std::span<const double> y) const;
};

/// Thomas algorithm for a symmetric tridiagonal system. Throws SingularSystem on a zero pivot.
Vector solve_tridiagonal(const SymTridiagonal& a, std::span<const double> rhs);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

bool all_finite(std::span<const double> a);

}  // namespace vpgd
