#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "vpgd/errors.hpp"
#include "vpgd/oracle.hpp"
#include "vpgd/pgd.hpp"
#include "vpgd/space_fem.hpp"
#include "vpgd/temporal_ops.hpp"

using namespace vpgd;

namespace {

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

ProblemDefinition elastic_problem() {
    ProblemDefinition p = single_process_problem();
    p.material.relaxed_modulus = 0.0;
    return p;
}

SeparatedField one_mode(FieldLocation where, Vector s, Vector t) {
    SeparatedField f{where, {}, {}};
    f.add(std::move(s), TemporalMode{std::move(t), std::nullopt});
    return f;
}

/// Small multi-scale setup: T = 100 s, dt = 0.25 s, 11 macro nodes, micro step 0.25 s.
struct SmallMultiScale {
    ProblemDefinition problem = single_process_problem();
    Mesh1D mesh = Mesh1D::uniform(problem.length, 21);
    SingleScaleGrid grid{problem.horizon, 401};
    PgdSettings settings;

    SmallMultiScale() {
        settings.time_mode = TimeMode::MultiScale;
        settings.n_macro = 11;
        settings.n_micro = 81;
    }
};

}  // namespace

TEST_CASE("time mode names round-trip") {
    CHECK(parse_time_mode("single") == TimeMode::SingleScale);
    CHECK(parse_time_mode("multiscale") == TimeMode::MultiScale);
    CHECK(to_string(TimeMode::MultiScale) == "multiscale");
    CHECK_THROWS_AS(parse_time_mode("both"), InvalidParameter);
}

TEST_CASE("settings validation") {
    PgdSettings s;
    CHECK_NOTHROW(s.validate());
    s.outer_tol = 0.0;
    CHECK_THROWS_AS(s.validate(), InvalidParameter);
    s = PgdSettings{};
    s.max_outer = 0;
    CHECK_THROWS_AS(s.validate(), InvalidParameter);
    s = PgdSettings{};
    s.time_mode = TimeMode::MultiScale;
    s.n_macro = 1;
    CHECK_THROWS_AS(s.validate(), InvalidParameter);
}

TEST_CASE("reconstruct of simple separated fields") {
    const Mesh1D mesh = Mesh1D::uniform(1.0, 5);
    const SingleScaleGrid grid(2.0, 9);
    const SeparatedField ones = one_mode(FieldLocation::Nodes, Vector(5, 1.0), Vector(9, 1.0));
    const SpaceTimeField r = reconstruct(ones, mesh, grid);
    for (double v : r.data()) CHECK(v == 1.0);
    const SeparatedField empty{FieldLocation::Elements, {}, {}};
    const SpaceTimeField e = reconstruct(empty, mesh, grid);
    CHECK(e.n_space() == 4);
    CHECK(max_abs(e.data()) == 0.0);
    CHECK_THROWS_AS(reconstruct(one_mode(FieldLocation::Nodes, Vector(3, 1.0), Vector(9, 1.0)), mesh, grid),
                    ShapeError);
    CHECK(norm(ones, mesh, grid) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("mode criteria on known fields") {
    const Mesh1D mesh = Mesh1D::uniform(1.0, 6);
    const SingleScaleGrid grid(1.0, 11);
    Vector s(6), t(11);
    for (std::size_t a = 0; a < 6; ++a) s[a] = std::sin(0.3 + a);
    for (std::size_t n = 0; n < 11; ++n) t[n] = 0.1 * n * n;
    const SeparatedField before = one_mode(FieldLocation::Nodes, s, t);
    Vector s2 = s;
    for (double& v : s2) v *= 1.01;
    const SeparatedField after = one_mode(FieldLocation::Nodes, s2, t);
    CHECK(eps_u(before, before, mesh, grid).value() == 0.0);
    CHECK(eps_u(before, after, mesh, grid).value() == doctest::Approx(1.0));
    CHECK_FALSE(eps_u(SeparatedField{}, after, mesh, grid).has_value());

    Vector ze(5);
    for (std::size_t e = 0; e < 5; ++e) ze[e] = 1.0 + e;
    SeparatedField z = one_mode(FieldLocation::Elements, ze, t);
    CHECK_FALSE(eps_z(z, mesh, grid).has_value());
    Vector ze2 = ze;
    for (double& v : ze2) v *= 0.03;
    z.add(ze2, TemporalMode{t, std::nullopt});
    CHECK(eps_z(z, mesh, grid).value() == doctest::Approx(3.0));
}

TEST_CASE("elastic separable problem: one mode, one outer iteration, oracle-exact") {
    const ProblemDefinition p = elastic_problem();
    const Mesh1D mesh = Mesh1D::uniform(p.length, 51);
    const SingleScaleGrid grid(p.horizon, 2001);
    const PgdResult r = outer_fixed_point(p, mesh, grid, PgdSettings{});
    CHECK(r.report.converged);
    CHECK(r.report.outer_iterations == 1);
    CHECK(r.report.u_modes == 1);
    CHECK(r.state.z[0].rank() == 0);
    const FullOrderSolution ref = solve_full_order(p, mesh, grid);
    const double err = relative_error(reconstruct(r.state.u, mesh, grid), ref.u, mesh, grid, FieldLocation::Nodes);
    MESSAGE("elastic PGD vs oracle: " << err << " %");
    CHECK(err / 100.0 <= 1e-6);
}

TEST_CASE("elastic spatial mode solves K u = F and the temporal mode follows the load") {
    const ProblemDefinition p = elastic_problem();
    const Mesh1D mesh = Mesh1D::uniform(p.length, 51);
    const SingleScaleGrid grid(p.horizon, 2001);
    const PgdContext ctx(p, mesh, grid, PgdSettings{});
    SeparatedField u{FieldLocation::Nodes, {}, {}};
    const std::vector<SeparatedField> z(1, SeparatedField{FieldLocation::Elements, {}, {}});
    enrich_displacement(ctx, u, z);
    REQUIRE(u.rank() == 1);
    const Vector u_static = solve_constrained(ctx.stiffness(), ctx.load_space(), ctx.constraints());
    // u_bar lambda(t) = u_static f_t(t) for t > 0
    const auto& lambda = u.temporal[0].samples;
    const std::size_t probe = 37;
    REQUIRE(std::abs(ctx.load_time()[probe]) > 0.1);
    const double c = lambda[probe] / ctx.load_time()[probe];
    double diff = 0.0;
    for (std::size_t a = 0; a < mesh.n_nodes(); ++a) {
        diff = std::max(diff, std::abs(c * u.spatial[0][a] - u_static[a]));
    }
    CHECK(diff <= 1e-8 * max_abs(u_static));
    double tdiff = 0.0;
    for (std::size_t n = 1; n < grid.size(); ++n) {
        tdiff = std::max(tdiff, std::abs(lambda[n] - c * ctx.load_time()[n]));
    }
    CHECK(tdiff <= 1e-8 * max_abs(lambda));
}

TEST_CASE("zero load adds no modes") {
    ProblemDefinition p = single_process_problem();
    p.load.spatial.amplitude = 0.0;
    const Mesh1D mesh = Mesh1D::uniform(p.length, 21);
    const SingleScaleGrid grid(p.horizon, 201);
    const PgdResult r = outer_fixed_point(p, mesh, grid, PgdSettings{});
    CHECK(r.report.converged);
    CHECK(r.report.u_modes == 0);
    CHECK(r.state.u.rank() == 0);
    CHECK(r.state.z[0].rank() == 0);
}

TEST_CASE("zero displacement gives no internal-variable modes") {
    const ProblemDefinition p = single_process_problem();
    const Mesh1D mesh = Mesh1D::uniform(p.length, 21);
    const SingleScaleGrid grid(p.horizon, 201);
    const PgdContext ctx(p, mesh, grid, PgdSettings{});
    const SeparatedField u{FieldLocation::Nodes, {}, {}};
    SeparatedField z{FieldLocation::Elements, {}, {}};
    const EnrichmentStats st = enrich_internal_variable(ctx, 0, u, z);
    CHECK(st.modes_added == 0);
    CHECK(z.rank() == 0);
}

TEST_CASE("spatial half-step is Galerkin-orthogonal") {
    const ProblemDefinition p = single_process_problem();
    const Mesh1D mesh = Mesh1D::uniform(p.length, 51);
    const SingleScaleGrid grid(p.horizon, 2001);
    const PgdContext ctx(p, mesh, grid, PgdSettings{});
    // internal variables from a converged run so the coupling term is present
    const PgdResult run = outer_fixed_point(p, mesh, grid, PgdSettings{});
    REQUIRE(run.state.z[0].rank() > 0);
    const SeparatedField u_prev = run.state.u;
    const SeparatedField base{FieldLocation::Nodes, {u_prev.spatial[0]}, {u_prev.temporal[0]}};
    for (const SeparatedField* prev : {&run.state.u, &base}) {
        const DisplacementProblem prob(ctx, *prev, run.state.z);
        Vector lambda(grid.size());
        for (std::size_t n = 0; n < grid.size(); ++n) lambda[n] = std::sin(0.3 * grid.node(n)) + 0.01 * grid.node(n);
        lambda[0] = 0.0;
        const Vector u_bar = prob.spatial_step(lambda);
        const Vector res = prob.galerkin_residual(u_bar, lambda);
        const double scale = max_abs(ctx.load_space()) * temporal::trapezoid(grid, lambda, lambda);
        REQUIRE(scale > 0.0);
        CHECK(max_abs(res) <= 1e-10 * scale);
        for (std::size_t a = 0; a < mesh.n_nodes(); ++a) {
            if (ctx.constraints().is_clamped(a, mesh.n_nodes())) CHECK(u_bar[a] == 0.0);
        }
        const Vector t = prob.temporal_step(u_bar);
        CHECK(t[0] == 0.0);
    }
}

TEST_CASE("internal-variable objective never increases across half-steps") {
    const ProblemDefinition p = fifty_process_problem();
    const Mesh1D mesh = Mesh1D::uniform(p.length, 21);
    const SingleScaleGrid grid(p.horizon, 1001);
    const PgdContext ctx(p, mesh, grid, PgdSettings{});
    SeparatedField u{FieldLocation::Nodes, {}, {}};
    const std::vector<SeparatedField> z0(p.spectrum.size(), SeparatedField{FieldLocation::Elements, {}, {}});
    enrich_displacement(ctx, u, z0);
    REQUIRE(u.rank() > 0);
    for (std::size_t j : {std::size_t{0}, std::size_t{25}, std::size_t{49}}) {
        SeparatedField z{FieldLocation::Elements, {}, {}};
        for (int pass = 0; pass < 2; ++pass) {
            const InternalVariableProblem prob(ctx, j, u, z);
            Vector phi = prob.initial_temporal();
            Vector zbar = prob.spatial_step(phi);
            double last = prob.objective(zbar, phi);
            // the objective drops a large constant, so ties are decided by rounding of order
            // 1e-12 |objective|
            const double scale = std::max(1.0, std::abs(last));
            for (int it = 0; it < 6; ++it) {
                phi = prob.temporal_step(zbar);
                CHECK(phi[0] == 0.0);
                const double after_t = prob.objective(zbar, phi);
                CHECK(after_t <= last + 1e-10 * scale);
                zbar = prob.spatial_step(phi);
                const double after_s = prob.objective(zbar, phi);
                CHECK(after_s <= after_t + 1e-10 * scale);
                last = after_s;
            }
            z.add(zbar, TemporalMode{phi, std::nullopt});
        }
    }
}

TEST_CASE("step strain drives the internal variable along the relaxation exponential") {
    ProblemDefinition p = single_process_problem();
    const Mesh1D mesh = Mesh1D::uniform(p.length, 11);
    const SingleScaleGrid grid(p.horizon, 2001);
    const PgdContext ctx(p, mesh, grid, PgdSettings{});
    // rank-one u: linear profile (uniform strain 1e-3) switched on after t = 0
    Vector s(mesh.n_nodes());
    for (std::size_t a = 0; a < s.size(); ++a) s[a] = 1e-3 * mesh.node(a);
    const double c = 2.0;
    Vector lambda(grid.size(), c);
    lambda[0] = 0.0;
    const SeparatedField u = one_mode(FieldLocation::Nodes, s, lambda);
    SeparatedField z{FieldLocation::Elements, {}, {}};
    enrich_internal_variable(ctx, 0, u, z);
    REQUIRE(z.rank() >= 1);
    const SpaceTimeField zf = reconstruct(z, mesh, grid);
    const double tau = p.spectrum[0].tau;
    const double z_inf = p.equilibrium_modulus(0) * 1e-3 * c;
    for (std::size_t e : {std::size_t{0}, std::size_t{4}, std::size_t{9}}) {
        Vector exact(grid.size());
        for (std::size_t n = 0; n < grid.size(); ++n) exact[n] = z_inf * (1.0 - std::exp(-grid.node(n) / tau));
        const double err = relative_error_trace(zf.trace(e), exact, grid);
        MESSAGE("element " << e << ": " << err << " %");
        CHECK(err <= 1.0);
    }
}

TEST_CASE("single-process run: initial condition holds for every field") {
    const ProblemDefinition p = single_process_problem();
    const Mesh1D mesh = Mesh1D::uniform(p.length, 51);
    const SingleScaleGrid grid(p.horizon, 2001);
    const PgdResult r = outer_fixed_point(p, mesh, grid, PgdSettings{});
    CHECK(r.report.converged);
    REQUIRE(r.state.u.rank() > 0);
    const SpaceTimeField u = reconstruct(r.state.u, mesh, grid);
    CHECK(max_abs(u.at_time(0)) <= 1e-12 * max_abs(u.data()));
    for (const auto& zj : r.state.z) {
        const SpaceTimeField z = reconstruct(zj, mesh, grid);
        CHECK(max_abs(z.at_time(0)) <= 1e-12 * max_abs(z.data()));
    }
    const PgdContext ctx(p, mesh, grid, PgdSettings{});
    for (const auto& s : r.state.u.spatial) {
        CHECK(s.front() == 0.0);
    }
    const SpaceTimeField sigma = reconstruct_stress(r.state, ctx);
    CHECK(sigma.n_space() == mesh.n_elements());
    CHECK(max_abs(sigma.at_time(0)) <= 1e-12 * max_abs(sigma.data()));
    for (std::size_t k = 0; k < r.report.stagnation.size(); ++k) CHECK(std::isfinite(r.report.stagnation[k]));
}

TEST_CASE("multi-scale run: initial condition, DOF accounting, agreement with single scale") {
    SmallMultiScale s;
    const PgdResult ms = outer_fixed_point(s.problem, s.mesh, s.grid, s.settings);
    CHECK(ms.report.converged);
    CHECK(ms.report.multiscale_dofs_per_submode == 11 + 81);
    CHECK(ms.report.single_scale_dofs == 401);
    for (const auto& t : ms.state.u.temporal) {
        REQUIRE(t.multiscale.has_value());
        CHECK(t.samples[0] == 0.0);
    }
    const SpaceTimeField u = reconstruct(ms.state.u, s.mesh, s.grid);
    CHECK(max_abs(u.at_time(0)) <= 1e-12 * max_abs(u.data()));
    const SpaceTimeField z = reconstruct(ms.state.z[0], s.mesh, s.grid);
    CHECK(max_abs(z.at_time(0)) <= 1e-12 * max_abs(z.data()));
    CHECK(ms.report.first_z_fit_error_percent <= 1.0);

    PgdSettings single = s.settings;
    single.time_mode = TimeMode::SingleScale;
    const PgdResult ss = outer_fixed_point(s.problem, s.mesh, s.grid, single);
    const double err = relative_error(u, reconstruct(ss.state.u, s.mesh, s.grid), s.mesh, s.grid,
                                      FieldLocation::Nodes);
    MESSAGE("multi-scale vs single-scale: " << err << " %");
    CHECK(err <= 2.0);
}

TEST_CASE("reference DOF counts: 2001 samples against 21 + 201 coefficients") {
    const ProblemDefinition p = elastic_problem();
    const Mesh1D mesh = Mesh1D::uniform(p.length, 11);
    const SingleScaleGrid grid(p.horizon, 2001);
    PgdSettings settings;
    settings.time_mode = TimeMode::MultiScale;
    const PgdResult r = outer_fixed_point(p, mesh, grid, settings);
    CHECK(r.report.single_scale_dofs == 2001);
    CHECK(r.report.multiscale_dofs_per_submode == 222);
    CHECK(r.report.dof_reduction_percent == doctest::Approx(100.0 * (2001.0 - 222.0) / 2001.0));
    CHECK(std::round(10.0 * r.report.dof_reduction_percent) == 889.0);
}

TEST_CASE("context rejects a multi-scale basis that does not fit the grid") {
    const ProblemDefinition p = single_process_problem();
    const Mesh1D mesh = Mesh1D::uniform(p.length, 11);
    const SingleScaleGrid grid(p.horizon, 2001);
    const PgdContext single(p, mesh, grid, PgdSettings{});
    CHECK_THROWS(single.displacement_fitter());
    CHECK_THROWS(single.internal_fitter(0));
}
