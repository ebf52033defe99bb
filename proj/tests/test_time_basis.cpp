#include <doctest.h>

#include <cmath>
#include <numbers>

#include "vpgd/errors.hpp"
#include "vpgd/time_basis.hpp"

using namespace vpgd;

namespace {

/// Submode with smooth, non-trivial macro and micro coefficients.
MultiScaleFunction sample_function(const MultiScaleBasis& basis, bool with_transient) {
    MultiScaleFunction f(basis);
    Vector q(basis.n_macro());
    Vector g(basis.n_micro());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = 1.0 + 0.3 * std::sin(0.7 * static_cast<double>(i));
    for (std::size_t m = 0; m < g.size(); ++m) {
        g[m] = 0.4 + std::sin(2.0 * std::numbers::pi * basis.micro_node(m));
    }
    f.add_submode(q, g);
    if (with_transient) {
        TransientSegment seg;
        seg.end_time = 2.0 * basis.macro_step();
        seg.step = basis.micro_step();
        const auto n = static_cast<std::size_t>(std::lround(seg.end_time / seg.step));
        for (std::size_t k = 0; k <= n; ++k) seg.samples.push_back(std::cos(0.3 * static_cast<double>(k)));
        f.set_transient(seg);
    }
    return f;
}

}  // namespace

TEST_CASE("single-scale grid spacing and trapezoid weights") {
    const SingleScaleGrid g(100.0, 2001);
    CHECK(g.step() == doctest::Approx(0.05));
    double sum = 0.0;
    for (double w : g.trapezoid_weights()) sum += w;
    CHECK(sum == doctest::Approx(100.0));
    CHECK(g.index_of(50.0).value() == 1000);
    CHECK_FALSE(g.index_of(50.01).has_value());
    CHECK_THROWS_AS(SingleScaleGrid(100.0, 1), InvalidParameter);
    CHECK_THROWS_AS(SingleScaleGrid(0.0, 10), InvalidParameter);
}

TEST_CASE("macro hats form a partition of unity") {
    const MultiScaleBasis b(100.0, 21, 201);
    double worst = 0.0;
    for (int k = 0; k <= 10000; ++k) {
        const double t = 100.0 * k / 10000.0;
        worst = std::max(worst, std::abs(b.hat_sum(t) - 1.0));
    }
    CHECK(worst <= 1e-13);
}

TEST_CASE("hat supports and the shared micro window") {
    const MultiScaleBasis b(100.0, 21, 201);
    CHECK(b.macro_step() == doctest::Approx(5.0));
    CHECK(b.micro_step() == doctest::Approx(0.05));
    CHECK(b.micro_node(0) == doctest::Approx(-5.0));
    CHECK(b.micro_node(200) == doctest::Approx(5.0));
    CHECK(b.hat(3, b.macro_node(3)) == doctest::Approx(1.0));
    CHECK(b.hat(3, b.macro_node(2)) == 0.0);
    CHECK(b.hat(3, b.macro_node(4)) == 0.0);
    CHECK(b.hat(3, 0.5 * (b.macro_node(3) + b.macro_node(4))) == doctest::Approx(0.5));
    CHECK_THROWS_AS(MultiScaleBasis(100.0, 1, 201), InvalidParameter);
}

TEST_CASE("DOF accounting: 21 + 201 versus 2001") {
    const MultiScaleBasis b(100.0, 21, 201);
    const DofCount d = dof_count(b, 1);
    CHECK(d.macro == 21);
    CHECK(d.micro == 201);
    CHECK(d.total == 222);
    CHECK(dof_reduction_percent(d, 2001) == doctest::Approx(100.0 * (1.0 - 222.0 / 2001.0)));
    CHECK(std::round(dof_reduction_percent(d, 2001) * 10.0) / 10.0 == doctest::Approx(88.9));
    CHECK(dof_count(b, 3).total == 666);
    CHECK_THROWS_AS(dof_count(b, 0), InvalidParameter);
}

TEST_CASE("multi-scale functions are continuous across macro nodes") {
    const MultiScaleBasis b(100.0, 21, 201);
    const double eps = 1e-9 * 100.0;
    for (bool transient : {false, true}) {
        const MultiScaleFunction f = sample_function(b, transient);
        double scale = 0.0;
        for (int k = 0; k <= 2000; ++k) scale = std::max(scale, std::abs(f.eval(0.05 * k)));
        for (std::size_t i = 1; i + 1 < b.n_macro(); ++i) {
            const double t = b.macro_node(i);
            // the transient splice at T_c is a cut by design, not a hat overlap
            if (transient && t <= f.transient_end() + 1e-12) {
                continue;
            }
            CHECK(std::abs(f.eval(t - eps) - f.eval(t + eps)) <= 1e-6 * scale);
        }
    }
}

TEST_CASE("derivative matches central differences to second order away from nodes") {
    const MultiScaleBasis b(100.0, 21, 201);
    const MultiScaleFunction f = sample_function(b, false);
    // points inside micro and macro elements, away from every breakpoint
    for (double t : {12.3456, 31.0123, 57.7771, 88.8219}) {
        const double d = f.eval_derivative(t);
        const double h1 = 1e-3;
        const double h2 = 5e-4;
        const double e1 = std::abs((f.eval(t + h1) - f.eval(t - h1)) / (2 * h1) - d);
        const double e2 = std::abs((f.eval(t + h2) - f.eval(t - h2)) / (2 * h2) - d);
        // piecewise bilinear in t: central differences are exact up to rounding or drop by ~4x
        CHECK((e1 <= 1e-8 * (1.0 + std::abs(d)) || e2 <= 0.3 * e1));
    }
}

TEST_CASE("macro-nodal interpolants are one submode with constant micro function") {
    const MultiScaleBasis b(100.0, 21, 201);
    Vector q(b.n_macro());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = std::exp(0.05 * static_cast<double>(i));
    MultiScaleFunction f(b);
    f.add_submode(q, Vector(b.n_micro(), 1.0));
    for (int k = 0; k <= 1000; ++k) {
        const double t = 0.1 * k;
        double expected = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) expected += b.hat(i, t) * q[i];
        CHECK(f.eval(t) == doctest::Approx(expected).epsilon(1e-13));
    }
    CHECK(norm2(f.submodes()[0].micro) == doctest::Approx(1.0));
}

TEST_CASE("transient segment is spliced in exactly") {
    const MultiScaleBasis b(100.0, 21, 201);
    const MultiScaleFunction f = sample_function(b, true);
    const auto& seg = *f.transient();
    for (std::size_t k = 0; k + 1 < seg.samples.size(); ++k) {
        CHECK(f.eval(static_cast<double>(k) * seg.step) == seg.samples[k]);
    }
    MultiScaleFunction g(b);
    TransientSegment bad;
    bad.end_time = 7.0;
    bad.step = 0.05;
    bad.samples.assign(141, 0.0);
    CHECK_THROWS_AS(g.set_transient(bad), InvalidParameter);
}

TEST_CASE("sampling on a grid and JSON round trip") {
    const MultiScaleBasis b(100.0, 21, 201);
    const MultiScaleFunction f = sample_function(b, true);
    const SingleScaleGrid grid(100.0, 2001);
    const Vector s = sample_on_grid(f, grid);
    CHECK(s.size() == 2001);
    const MultiScaleFunction r = deserialize_multiscale(serialize(f));
    CHECK(r.basis() == f.basis());
    CHECK(r.n_submodes() == 1);
    const Vector s2 = sample_on_grid(r, grid);
    for (std::size_t n = 0; n < s.size(); ++n) CHECK(s2[n] == s[n]);
    CHECK_THROWS_AS(sample_on_grid(f, SingleScaleGrid(50.0, 11)), DomainError);
    CHECK_THROWS_AS(f.eval(100.5), DomainError);
}

TEST_CASE("zero micro function is rejected") {
    MultiScaleFunction f(MultiScaleBasis(10.0, 3, 5));
    CHECK_THROWS_AS(f.add_submode(Vector(3, 1.0), Vector(5, 0.0)), InvalidParameter);
    CHECK_THROWS_AS(f.add_submode(Vector(2, 1.0), Vector(5, 1.0)), ShapeError);
}
