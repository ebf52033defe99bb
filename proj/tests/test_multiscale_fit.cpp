#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "vpgd/errors.hpp"
#include "vpgd/multiscale_fit.hpp"

using namespace vpgd;

namespace {

constexpr double kPi = std::numbers::pi;

const SingleScaleGrid& grid() {
    static const SingleScaleGrid g(100.0, 2001);
    return g;
}

const MultiScaleBasis& basis() {
    static const MultiScaleBasis b(100.0, 21, 201);
    return b;
}

/// Slow drift + slow sine + unit fast sine.
Vector two_scale_signal() {
    Vector s(grid().size());
    for (std::size_t n = 0; n < s.size(); ++n) {
        const double t = grid().node(n);
        s[n] = 1.5 + 0.3 * t / 100.0 + 0.2 * std::sin(2 * kPi * t / 50.0) + std::sin(2 * kPi * t);
    }
    return s;
}

SymTridiagonal unit_metric() {
    SymTridiagonal m(grid().size());
    std::fill(m.diag.begin(), m.diag.end(), 1.0);
    return m;
}

double rel_l2(const Vector& a, const Vector& b, std::size_t from) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t n = from; n < a.size(); ++n) {
        num += (a[n] - b[n]) * (a[n] - b[n]);
        den += b[n] * b[n];
    }
    return 100.0 * std::sqrt(num / den);
}

/// Dense least squares over all macro coefficients for a fixed set of micro functions,
/// restricted to t >= from. Returns the relative error in percent.
double dense_oracle(const Vector& s, std::size_t from, const std::vector<double (*)(double)>& micro) {
    const auto& b = basis();
    const auto rows = static_cast<Eigen::Index>(s.size() - from);
    const auto cols = static_cast<Eigen::Index>(b.n_macro() * micro.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, cols);
    Eigen::VectorXd y(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const double t = grid().node(from + static_cast<std::size_t>(r));
        y(r) = s[from + static_cast<std::size_t>(r)];
        for (std::size_t k = 0; k < micro.size(); ++k) {
            for (std::size_t i = 0; i < b.n_macro(); ++i) {
                const double h = b.hat(i, t);
                if (h != 0.0) {
                    a(r, static_cast<Eigen::Index>(k * b.n_macro() + i)) = h * micro[k](t - b.macro_node(i));
                }
            }
        }
    }
    const Eigen::VectorXd x = a.colPivHouseholderQr().solve(y);
    return 100.0 * (a * x - y).norm() / y.norm();
}

}  // namespace

TEST_CASE("fit settings validation") {
    FitSettings s;
    CHECK_NOTHROW(s.validate());
    s.target_rel_error = 0.0;
    CHECK_THROWS_AS(s.validate(), InvalidParameter);
    s = FitSettings{};
    s.target_rel_error = 100.0;
    CHECK_THROWS_AS(s.validate(), InvalidParameter);
    s = FitSettings{};
    s.max_submodes = 0;
    CHECK_THROWS_AS(s.validate(), InvalidParameter);
}

TEST_CASE("constant signal is one submode") {
    const Vector s(grid().size(), 1.0);
    const FitResult r = fit_signal(s, grid(), basis(), FitSettings{});
    CHECK(r.function.n_submodes() == 1);
    CHECK(r.rel_error_percent <= 1e-10);
    CHECK(residual_history(r).size() == 1);
}

TEST_CASE("zero signal gives an empty fit") {
    const Vector s(grid().size(), 0.0);
    const FitResult r = fit_signal(s, grid(), basis(), FitSettings{});
    CHECK(r.function.n_submodes() == 0);
    CHECK(r.history.empty());
    CHECK(r.rel_error_percent == 0.0);
}

TEST_CASE("two-scale signal: greedy fit reaches the dense least-squares accuracy") {
    const Vector s = two_scale_signal();
    FitSettings settings;
    const MultiScaleFitter fitter(grid(), basis(), unit_metric(), settings);
    const FitResult r = fit_signal(s, grid(), basis(), settings);
    const std::size_t from = fitter.expansion_start();
    // oracle: the best expansion whose micro functions span {1, tau, sin 2 pi tau, cos 2 pi tau}
    const double oracle = dense_oracle(s, from,
                                       {[](double) { return 1.0; }, [](double tau) { return tau; },
                                        [](double tau) { return std::sin(2 * kPi * tau); },
                                        [](double tau) { return std::cos(2 * kPi * tau); }});
    MESSAGE("dense oracle error % = " << oracle << ", greedy = " << r.rel_error_percent);
    CHECK(oracle <= 0.1);
    CHECK(r.rel_error_percent <= 0.1);
    CHECK(r.function.n_submodes() <= 3);
    CHECK(rel_l2(r.samples, s, 0) == doctest::Approx(r.rel_error_percent).epsilon(1e-9));
}

TEST_CASE("greedy residual is nonincreasing") {
    Vector s(grid().size());
    for (std::size_t n = 0; n < s.size(); ++n) {
        const double t = grid().node(n);
        s[n] = std::exp(-t / 30.0) * std::sin(2 * kPi * 1.3 * t) + 0.5 * std::cos(2 * kPi * t / 70.0) +
               0.1 * std::sin(2 * kPi * 3.1 * t);
    }
    FitSettings settings;
    settings.target_rel_error = 1e-6;
    settings.max_submodes = 6;
    const FitResult r = fit_signal(s, grid(), basis(), settings);
    REQUIRE(r.history.size() >= 2);
    for (std::size_t k = 1; k < r.history.size(); ++k) {
        CHECK(r.history[k] <= r.history[k - 1] * (1.0 + 1e-12));
    }
}

TEST_CASE("transient samples are copied exactly") {
    const Vector s = two_scale_signal();
    const FitResult r = fit_signal(s, grid(), basis(), FitSettings{});
    REQUIRE(r.function.transient().has_value());
    CHECK(r.function.transient_end() == doctest::Approx(10.0));
    for (std::size_t n = 0; grid().node(n) < r.function.transient_end() - 1e-12; ++n) {
        CHECK(r.samples[n] == s[n]);
        CHECK(r.function.eval(grid().node(n)) == s[n]);
    }
}

TEST_CASE("manufactured rank-one expansion is recovered with one submode") {
    const MultiScaleFitter fitter(grid(), basis(), unit_metric(), FitSettings{});
    Vector q(basis().n_macro());
    Vector g(basis().n_micro());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = 2.0 + std::cos(0.4 * static_cast<double>(i));
    for (std::size_t m = 0; m < g.size(); ++m) {
        const double tau = basis().micro_node(m);
        g[m] = 1.0 + 0.5 * std::sin(2 * kPi * tau) + 0.1 * tau;
    }
    Vector s = fitter.sample_submode(q, g);
    for (std::size_t n = 0; n < fitter.expansion_start(); ++n) s[n] = std::sin(static_cast<double>(n));
    FitSettings settings;
    settings.target_rel_error = 1e-8;
    settings.max_submodes = 1;
    const FitResult r = fit_signal(s, grid(), basis(), settings);
    CHECK(r.function.n_submodes() == 1);
    CHECK(r.rel_error_percent <= 1e-8 * 100.0);
}

TEST_CASE("alternating half-steps are stationary at convergence") {
    const Vector s = two_scale_signal();
    FitSettings settings;
    settings.max_submodes = 1;
    const MultiScaleFitter fitter(grid(), basis(), unit_metric(), settings);
    const FitResult r = fitter.fit(s);
    REQUIRE(r.function.n_submodes() == 1);
    Vector target = s;
    for (std::size_t n = 0; n < fitter.expansion_start(); ++n) target[n] = 0.0;
    const auto& sm = r.function.submodes()[0];
    auto residual = [&](const Vector& q, const Vector& g) {
        Vector d = target;
        axpy(-1.0, fitter.sample_submode(q, g), d);
        return fitter.block_norm(d);
    };
    const double base = residual(sm.macro, sm.micro);
    const double scale = fitter.block_norm(target);
    const Vector q_opt = fitter.solve_macro(sm.micro, target);
    const Vector g_opt = fitter.solve_micro(sm.macro, target);
    CHECK(base - residual(q_opt, sm.micro) >= -1e-12 * scale);
    CHECK(base - residual(sm.macro, g_opt) >= -1e-12 * scale);
    CHECK((base - residual(q_opt, sm.micro)) / scale < settings.als_stagnation_tol);
    CHECK((base - residual(sm.macro, g_opt)) / scale < settings.als_stagnation_tol);
}

TEST_CASE("weighted fits accept zero weights but not an all-zero or negative set") {
    const Vector s = two_scale_signal();
    Vector w = grid().trapezoid_weights();
    CHECK(fit_weighted(s, w, grid(), basis(), FitSettings{}).rel_error_percent <= 0.2);
    w[0] = 0.0;
    CHECK_NOTHROW(fit_weighted(s, w, grid(), basis(), FitSettings{}));
    CHECK_THROWS_AS(fit_weighted(s, Vector(grid().size(), 0.0), grid(), basis(), FitSettings{}), InvalidParameter);
    w[3] = -1.0;
    CHECK_THROWS_AS(fit_weighted(s, w, grid(), basis(), FitSettings{}), InvalidParameter);
}

TEST_CASE("fit rejects mismatched or non-finite input") {
    CHECK_THROWS_AS(fit_signal(Vector(10, 1.0), grid(), basis(), FitSettings{}), ShapeError);
    Vector s(grid().size(), 1.0);
    s[5] = std::nan("");
    CHECK_THROWS_AS(fit_signal(s, grid(), basis(), FitSettings{}), NumericalFailure);
}
