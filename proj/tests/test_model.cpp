#include <doctest.h>

#include <cmath>

#include "vpgd/errors.hpp"
#include "vpgd/model.hpp"

using namespace vpgd;

TEST_CASE("built spectrum sums to the requested total weight") {
    for (std::size_t n : {1u, 2u, 7u, 50u}) {
        for (double total : {0.025, 1.0, 3.7}) {
            const RelaxationSpectrum s = build_spectrum(n, 6.0, 10.0, total);
            CHECK(s.size() == n);
            CHECK(std::abs(s.total_weight() - total) <= 1e-12 * total);
            CHECK(s.max_tau() == doctest::Approx(10.0));
            CHECK(s.min_tau() == doctest::Approx(n > 1 ? 1e-5 : 10.0));
        }
    }
}

TEST_CASE("built spectrum weights grow like sqrt(tau)") {
    const RelaxationSpectrum s = build_spectrum(5, 4.0, 1.0, 1.0);
    for (std::size_t j = 1; j < s.size(); ++j) {
        CHECK(s[j].tau > s[j - 1].tau);
        CHECK(s[j].weight / s[j - 1].weight == doctest::Approx(std::sqrt(s[j].tau / s[j - 1].tau)));
    }
}

TEST_CASE("zero-decade spectrum gives equal times and weights") {
    const RelaxationSpectrum s = build_spectrum(4, 0.0, 5.0, 1.0);
    for (const auto& p : s.processes()) {
        CHECK(p.tau == doctest::Approx(5.0));
        CHECK(p.weight == doctest::Approx(0.25));
    }
}

TEST_CASE("spectrum rejects invalid processes") {
    CHECK_THROWS_AS(RelaxationSpectrum(std::vector<RelaxationProcess>{}), InvalidParameter);
    CHECK_THROWS_AS(RelaxationSpectrum({{0.0, 0.1}}), InvalidParameter);
    CHECK_THROWS_AS(RelaxationSpectrum({{1.0, 0.0}}), InvalidParameter);
    CHECK_THROWS_AS(RelaxationSpectrum({{2.0, 0.1}, {1.0, 0.1}}), InvalidParameter);
    CHECK_THROWS_AS(build_spectrum(0, 1.0, 1.0, 1.0), InvalidParameter);
    CHECK_THROWS_AS(build_spectrum(3, -1.0, 1.0, 1.0), InvalidParameter);
}

TEST_CASE("problem requires a positive relaxed modulus and a clamped end") {
    ProblemDefinition p = single_process_problem();
    CHECK_NOTHROW(p.validate());
    CHECK(effective_relaxed_modulus(p.material, p.spectrum) == doctest::Approx(1.2e9 - 0.025e9));

    ProblemDefinition soft = p;
    soft.spectrum = RelaxationSpectrum({{1.0, 1.2}});
    CHECK_THROWS_AS(soft.validate(), InvalidParameter);

    ProblemDefinition floating = p;
    floating.left = EndCondition::Traction;
    CHECK_THROWS_AS(floating.validate(), InvalidParameter);

    ProblemDefinition bad = p;
    bad.length = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidParameter);
    bad = p;
    bad.material.area = -1.0;
    CHECK_THROWS_AS(bad.validate(), InvalidParameter);
}

TEST_CASE("load is separable in space and time") {
    ProblemDefinition p = single_process_problem();
    p.load.temporal.shape = TemporalShape::OffsetSine;
    p.load.temporal.offset = 0.4;
    p.load.temporal.frequency = 0.3;
    const double xs[] = {0.0, 0.7e-3, 2.5e-3, 4.1e-3, 5e-3};
    const double ts[] = {0.0, 0.13, 7.7, 42.0, 100.0};
    for (double x : xs) {
        for (double xp : xs) {
            for (double t : ts) {
                for (double tp : ts) {
                    const double lhs = evaluate_load(p, x, t) * evaluate_load(p, xp, tp);
                    const double rhs = evaluate_load(p, x, tp) * evaluate_load(p, xp, t);
                    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12).scale(1.0));
                }
            }
        }
    }
}

TEST_CASE("load shapes evaluate as documented") {
    ProblemDefinition p = single_process_problem();
    CHECK(evaluate_load(p, 2.5e-3, 0.25) == doctest::Approx(1e3));
    CHECK(evaluate_load(p, 0.0, 0.25) == doctest::Approx(0.0));
    CHECK(evaluate_load(p, 1.25e-3, 0.25) == doctest::Approx(500.0));
    p.load.temporal.shape = TemporalShape::Constant;
    p.load.temporal.amplitude = 2.0;
    CHECK(evaluate_load(p, 2.5e-3, 13.0) == doctest::Approx(2e3));
    p.load.temporal.shape = TemporalShape::Table;
    p.load.temporal.table = Table{{0.0, 100.0}, {0.0, 10.0}};
    // the amplitude also scales tabulated factors
    CHECK(evaluate_load(p, 2.5e-3, 50.0) == doctest::Approx(1e4));
    CHECK_THROWS_AS(evaluate_load(p, -1e-3, 1.0), DomainError);
    CHECK_THROWS_AS(evaluate_load(p, 1e-3, 101.0), DomainError);
}

TEST_CASE("enum names round-trip") {
    for (auto s : {SpatialShape::Hat, SpatialShape::Constant, SpatialShape::Table}) {
        CHECK(parse_spatial_shape(to_string(s)) == s);
    }
    for (auto s : {TemporalShape::Sine, TemporalShape::OffsetSine, TemporalShape::Constant, TemporalShape::Table}) {
        CHECK(parse_temporal_shape(to_string(s)) == s);
    }
    for (auto c : {EndCondition::Clamped, EndCondition::Traction}) {
        CHECK(parse_end_condition(to_string(c)) == c);
    }
    CHECK_THROWS_AS(parse_end_condition("pinned"), InvalidParameter);
}

TEST_CASE("presets carry the experiment constants") {
    const ProblemDefinition one = single_process_problem();
    CHECK(one.spectrum.size() == 1);
    CHECK(one.spectrum[0].tau == 5.0);
    CHECK(one.spectrum[0].weight == 0.025);
    CHECK(one.material.vitreous_modulus == 1.2e9);
    CHECK(one.material.relaxed_modulus == 1.0e9);
    CHECK(one.length == 5e-3);
    CHECK(one.material.area == 2.5e-7);
    CHECK(one.equilibrium_modulus(0) == doctest::Approx(0.025e9));
    const ProblemDefinition fifty = fifty_process_problem();
    CHECK(fifty.spectrum.size() == 50);
    CHECK(fifty.spectrum.max_tau() / fifty.spectrum.min_tau() == doctest::Approx(1e6));
}
