#include "vpgd/linalg.hpp"

#include <cmath>

#include "vpgd/errors.hpp"

namespace vpgd {

Vector SymTridiagonal::apply(std::span<const double> x) const {
    const std::size_t n = size();
    if (x.size() != n) {
        throw ShapeError("tridiagonal apply: size mismatch");
    }
    Vector y(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        y[k] = diag[k] * x[k];
    }
    for (std::size_t k = 0; k + 1 < n; ++k) {
        y[k] += off[k] * x[k + 1];
        y[k + 1] += off[k] * x[k];
    }
    return y;
}

double SymTridiagonal::quadratic(std::span<const double> x, std::span<const double> y) const {
    const Vector ay = apply(y);
    return dot(x, ay);
}

Vector solve_tridiagonal(const SymTridiagonal& a, std::span<const double> rhs) {
    const std::size_t n = a.size();
    if (rhs.size() != n) {
        throw ShapeError("tridiagonal solve: size mismatch");
    }
    if (n == 0) {
        return {};
    }
    Vector c(n, 0.0);
    Vector d(n, 0.0);
    double scale = 0.0;
    for (double v : a.diag) {
        scale = std::max(scale, std::abs(v));
    }
    const double tiny = 1e-300 + 1e-14 * scale;

    double pivot = a.diag[0];
    if (std::abs(pivot) <= tiny) {
        throw SingularSystem("tridiagonal solve: zero pivot at row 0");
    }
    c[0] = n > 1 ? a.off[0] / pivot : 0.0;
    d[0] = rhs[0] / pivot;
    for (std::size_t k = 1; k < n; ++k) {
        pivot = a.diag[k] - a.off[k - 1] * c[k - 1];
        if (std::abs(pivot) <= tiny) {
            throw SingularSystem("tridiagonal solve: zero pivot at row " + std::to_string(k));
        }
        c[k] = k + 1 < n ? a.off[k] / pivot : 0.0;
        d[k] = (rhs[k] - a.off[k - 1] * d[k - 1]) / pivot;
    }
    Vector x(n);
    x[n - 1] = d[n - 1];
    for (std::size_t k = n - 1; k-- > 0;) {
        x[k] = d[k] - c[k] * x[k + 1];
    }
    return x;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ShapeError("dot: size mismatch");
    }
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        s += a[k] * b[k];
    }
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size()) {
        throw ShapeError("axpy: size mismatch");
    }
    for (std::size_t k = 0; k < x.size(); ++k) {
        y[k] += alpha * x[k];
    }
}

bool all_finite(std::span<const double> a) {
    for (double v : a) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

}  // namespace vpgd
