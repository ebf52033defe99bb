#include "vpgd/temporal_ops.hpp"

#include "vpgd/errors.hpp"

namespace vpgd::temporal {

double trapezoid(const SingleScaleGrid& grid, std::span<const double> a, std::span<const double> b) {
    const auto& w = grid.trapezoid_weights();
    if (a.size() != w.size() || b.size() != w.size()) {
        throw ShapeError("trapezoid: sample count does not match the grid");
    }
    double s = 0.0;
    for (std::size_t n = 0; n < w.size(); ++n) {
        s += w[n] * a[n] * b[n];
    }
    return s;
}

SymTridiagonal p1_mass(const SingleScaleGrid& grid) {
    const double h = grid.step();
    SymTridiagonal m(grid.size());
    for (std::size_t e = 0; e + 1 < grid.size(); ++e) {
        m.diag[e] += h / 3.0;
        m.diag[e + 1] += h / 3.0;
        m.off[e] += h / 6.0;
    }
    return m;
}

SymTridiagonal relaxation_operator(const SingleScaleGrid& grid, double beta) {
    const double h = grid.step();
    SymTridiagonal a(grid.size());
    for (std::size_t e = 0; e + 1 < grid.size(); ++e) {
        // int phi'chi' + beta^2 int phi chi on one element
        a.diag[e] += 1.0 / h + beta * beta * h / 3.0;
        a.diag[e + 1] += 1.0 / h + beta * beta * h / 3.0;
        a.off[e] += -1.0 / h + beta * beta * h / 6.0;
    }
    // beta int (phi' chi + phi chi') = beta [phi chi]_0^T
    a.diag.front() -= beta;
    a.diag.back() += beta;
    return a;
}

Vector relaxation_load(const SingleScaleGrid& grid, double beta, std::span<const double> lambda) {
    if (lambda.size() != grid.size()) {
        throw ShapeError("relaxation_load: sample count does not match the grid");
    }
    const double h = grid.step();
    Vector b(grid.size(), 0.0);
    for (std::size_t e = 0; e + 1 < grid.size(); ++e) {
        const double la = lambda[e];
        const double lb = lambda[e + 1];
        const double mean = 0.5 * (la + lb);
        b[e] += -mean + beta * h * (2.0 * la + lb) / 6.0;
        b[e + 1] += mean + beta * h * (la + 2.0 * lb) / 6.0;
    }
    return b;
}

Vector derivative_samples(const SingleScaleGrid& grid, std::span<const double> f) {
    const std::size_t n = grid.size();
    if (f.size() != n) {
        throw ShapeError("derivative_samples: sample count does not match the grid");
    }
    const double h = grid.step();
    Vector d(n);
    d.front() = (f[1] - f[0]) / h;
    d.back() = (f[n - 1] - f[n - 2]) / h;
    for (std::size_t k = 1; k + 1 < n; ++k) {
        d[k] = (f[k + 1] - f[k - 1]) / (2.0 * h);
    }
    return d;
}

SymTridiagonal drop_first(const SymTridiagonal& a) {
    if (a.size() < 2) {
        throw ShapeError("drop_first: operator too small");
    }
    SymTridiagonal r(a.size() - 1);
    std::copy(a.diag.begin() + 1, a.diag.end(), r.diag.begin());
    std::copy(a.off.begin() + 1, a.off.end(), r.off.begin());
    return r;
}

}  // namespace vpgd::temporal
