#include "vpgd/pgd.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "vpgd/errors.hpp"
#include "vpgd/temporal_ops.hpp"

namespace vpgd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Spatial inner product matching the field location.
double spatial_dot(const Mesh1D& mesh, FieldLocation where, std::span<const double> a,
                   std::span<const double> b, const SymTridiagonal* mass) {
    if (where == FieldLocation::Nodes) {
        return mass->quadratic(a, b);
    }
    const auto& h = mesh.element_lengths();
    double s = 0.0;
    for (std::size_t e = 0; e < h.size(); ++e) {
        s += h[e] * a[e] * b[e];
    }
    return s;
}

/// |a (x) b - c (x) d| / |a (x) b| for unit-norm spatial vectors a and c.
double product_change(double ac, std::span<const double> b, std::span<const double> d,
                      const SingleScaleGrid& grid) {
    const double bb = temporal::trapezoid(grid, b, b);
    const double dd = temporal::trapezoid(grid, d, d);
    const double bd = temporal::trapezoid(grid, b, d);
    const double diff = std::max(0.0, bb - 2.0 * ac * bd + dd);
    return bb > 0.0 ? std::sqrt(diff / bb) : (dd > 0.0 ? 1.0 : 0.0);
}

void require_finite(std::span<const double> v, const char* what) {
    if (!all_finite(v)) {
        throw NumericalFailure(std::string("non-finite values in ") + what);
    }
}

}  // namespace

std::string to_string(TimeMode mode) {
    return mode == TimeMode::SingleScale ? "single" : "multiscale";
}

TimeMode parse_time_mode(const std::string& s) {
    if (s == "single") return TimeMode::SingleScale;
    if (s == "multiscale") return TimeMode::MultiScale;
    throw InvalidParameter("unknown time mode '" + s + "' (expected single|multiscale)");
}

void SeparatedField::add(Vector s, TemporalMode t) {
    spatial.push_back(std::move(s));
    temporal.push_back(std::move(t));
}

void SeparatedField::pop() {
    if (!spatial.empty()) {
        spatial.pop_back();
        temporal.pop_back();
    }
}

double inner(const SeparatedField& a, const SeparatedField& b, const Mesh1D& mesh,
             const SingleScaleGrid& grid) {
    if (a.location != b.location) {
        throw ShapeError("inner: fields live on different spatial locations");
    }
    const SymTridiagonal mass = a.location == FieldLocation::Nodes ? assemble_mass(mesh) : SymTridiagonal{};
    double s = 0.0;
    for (std::size_t i = 0; i < a.rank(); ++i) {
        for (std::size_t k = 0; k < b.rank(); ++k) {
            const double sp = spatial_dot(mesh, a.location, a.spatial[i], b.spatial[k], &mass);
            if (sp != 0.0) {
                s += sp * temporal::trapezoid(grid, a.temporal[i].samples, b.temporal[k].samples);
            }
        }
    }
    return s;
}

double norm(const SeparatedField& a, const Mesh1D& mesh, const SingleScaleGrid& grid) {
    return std::sqrt(std::max(0.0, inner(a, a, mesh, grid)));
}

SpaceTimeField reconstruct(const SeparatedField& field, const Mesh1D& mesh, const SingleScaleGrid& grid) {
    const std::size_t ns = field.location == FieldLocation::Nodes ? mesh.n_nodes() : mesh.n_elements();
    SpaceTimeField out(grid.size(), ns);
    for (std::size_t i = 0; i < field.rank(); ++i) {
        const auto& s = field.spatial[i];
        const auto& t = field.temporal[i].samples;
        if (s.size() != ns || t.size() != grid.size()) {
            throw ShapeError("reconstruct: mode dimensions do not match mesh x grid");
        }
        for (std::size_t n = 0; n < grid.size(); ++n) {
            if (t[n] == 0.0) {
                continue;
            }
            auto row = out.at_time(n);
            for (std::size_t a = 0; a < ns; ++a) {
                row[a] += s[a] * t[n];
            }
        }
    }
    return out;
}

std::optional<double> eps_u(const SeparatedField& before, const SeparatedField& after,
                            const Mesh1D& mesh, const SingleScaleGrid& grid) {
    const double bb = inner(before, before, mesh, grid);
    if (!(bb > 0.0)) {
        return std::nullopt;
    }
    const double aa = inner(after, after, mesh, grid);
    const double ab = inner(after, before, mesh, grid);
    return 100.0 * std::sqrt(std::max(0.0, aa - 2.0 * ab + bb) / bb);
}

std::optional<double> eps_z(const SeparatedField& z, const Mesh1D& mesh, const SingleScaleGrid& grid) {
    if (z.rank() == 0) {
        return std::nullopt;
    }
    SeparatedField prev = z;
    prev.pop();
    SeparatedField last{z.location, {z.spatial.back()}, {z.temporal.back()}};
    const double pp = inner(prev, prev, mesh, grid);
    if (!(pp > 0.0)) {
        return std::nullopt;
    }
    return 100.0 * std::sqrt(std::max(0.0, inner(last, last, mesh, grid)) / pp);
}

void PgdSettings::validate() const {
    if (!(u_mode_tol > 0.0) || !(z_mode_tol > 0.0) || !(outer_tol > 0.0)) {
        throw InvalidParameter("PGD tolerances must be positive");
    }
    if (max_outer == 0 || max_u_modes == 0 || max_z_modes_per_iter == 0 || als_max_iters == 0) {
        throw InvalidParameter("PGD iteration caps must be positive");
    }
    if (!(als_tol > 0.0)) {
        throw InvalidParameter("PGD mode stagnation tolerance must be positive");
    }
    if (time_mode == TimeMode::MultiScale) {
        if (n_macro < 2 || n_micro < 2) {
            throw InvalidParameter("multi-scale basis needs at least two macro and two micro nodes");
        }
        fit.validate();
    }
}

PgdContext::PgdContext(const ProblemDefinition& problem, const Mesh1D& mesh, const SingleScaleGrid& grid,
                       const PgdSettings& settings)
    : problem_(problem), mesh_(mesh), grid_(grid), settings_(settings), bcs_(Constraints::of(problem)) {
    problem_.validate();
    settings_.validate();
    if (std::abs(mesh.length() - problem.length) > 1e-12 * problem.length) {
        throw ConfigError("mesh length does not match the bar length");
    }
    if (std::abs(grid.horizon() - problem.horizon) > 1e-12 * problem.horizon) {
        throw ConfigError("time grid horizon does not match the problem horizon");
    }
    stiffness_ = assemble_stiffness(mesh_, problem_.material.vitreous_modulus, problem_.material.area);
    mass_ = assemble_mass(mesh_);
    load_space_ = assemble_load_vector(mesh_, [&](double x) { return problem_.load.spatial(x, problem_.length); });
    axpy(1.0, assemble_traction_vector(mesh_, problem_), load_space_);
    load_time_.resize(grid_.size());
    for (std::size_t n = 0; n < grid_.size(); ++n) {
        load_time_[n] = problem_.load.temporal(grid_.node(n));
    }
    // u(x, 0) = 0 regardless of the load value at t = 0
    load_time_.front() = 0.0;
    relaxation_.reserve(problem_.spectrum.size());
    for (const auto& p : problem_.spectrum.processes()) {
        relaxation_.push_back(temporal::relaxation_operator(grid_, 1.0 / p.tau));
    }
    if (settings_.time_mode == TimeMode::MultiScale) {
        basis_.emplace(grid_.horizon(), settings_.n_macro, settings_.n_micro);
        SymTridiagonal w(grid_.size());
        w.diag = grid_.trapezoid_weights();
        // joint refinement costs a dense (n_macro + n_micro) solve per sweep and fits are
        // repeated inside every alternating step
        FitSettings fs = settings_.fit;
        fs.joint_refine_iters = 0;
        u_fitter_.emplace(grid_, *basis_, std::move(w), fs);
        z_fitters_.reserve(relaxation_.size());
        for (const auto& a : relaxation_) {
            z_fitters_.emplace_back(grid_, *basis_, a, fs);
        }
    }
}

const MultiScaleFitter& PgdContext::displacement_fitter() const {
    if (!u_fitter_) {
        throw InvalidParameter("displacement fitter requested in single-scale mode");
    }
    return *u_fitter_;
}

const MultiScaleFitter& PgdContext::internal_fitter(std::size_t j) const {
    if (z_fitters_.empty()) {
        throw InvalidParameter("internal-variable fitter requested in single-scale mode");
    }
    return z_fitters_.at(j);
}

// ---------------------------------------------------------------------------------------------
// displacement

DisplacementProblem::DisplacementProblem(const PgdContext& ctx, const SeparatedField& u_prev,
                                         const std::vector<SeparatedField>& z)
    : ctx_(ctx) {
    spaces_.push_back(ctx.load_space());
    times_.emplace_back(ctx.load_time());
    for (const auto& zj : z) {
        for (std::size_t i = 0; i < zj.rank(); ++i) {
            spaces_.push_back(assemble_stress_force(ctx.mesh(), ctx.problem().material.area, zj.spatial[i]));
            times_.emplace_back(zj.temporal[i].samples);
        }
    }
    for (std::size_t i = 0; i < u_prev.rank(); ++i) {
        Vector ku = ctx.stiffness().apply(u_prev.spatial[i]);
        for (double& v : ku) {
            v = -v;
        }
        spaces_.push_back(std::move(ku));
        times_.emplace_back(u_prev.temporal[i].samples);
    }
}

Vector DisplacementProblem::spatial_step(std::span<const double> lambda) const {
    const auto& grid = ctx_.grid();
    const double ll = temporal::trapezoid(grid, lambda, lambda);
    Vector rhs(ctx_.mesh().n_nodes(), 0.0);
    if (!(ll > 0.0)) {
        return rhs;
    }
    for (std::size_t r = 0; r < spaces_.size(); ++r) {
        const double c = temporal::trapezoid(grid, lambda, times_[r]);
        if (c != 0.0) {
            axpy(c / ll, spaces_[r], rhs);
        }
    }
    return solve_constrained(ctx_.stiffness(), rhs, ctx_.constraints());
}

Vector DisplacementProblem::temporal_step(std::span<const double> u_bar) const {
    const std::size_t n_t = ctx_.grid().size();
    Vector lambda(n_t, 0.0);
    const double kk = ctx_.stiffness().quadratic(u_bar, u_bar);
    if (!(kk > 0.0)) {
        return lambda;
    }
    for (std::size_t r = 0; r < spaces_.size(); ++r) {
        const double c = dot(u_bar, spaces_[r]) / kk;
        if (c != 0.0) {
            axpy(c, times_[r], lambda);
        }
    }
    lambda.front() = 0.0;
    return lambda;
}

Vector DisplacementProblem::galerkin_residual(std::span<const double> u_bar,
                                              std::span<const double> lambda) const {
    const auto& grid = ctx_.grid();
    Vector r(ctx_.mesh().n_nodes(), 0.0);
    for (std::size_t k = 0; k < spaces_.size(); ++k) {
        axpy(temporal::trapezoid(grid, lambda, times_[k]), spaces_[k], r);
    }
    const Vector ku = ctx_.stiffness().apply(u_bar);
    axpy(-temporal::trapezoid(grid, lambda, lambda), ku, r);
    apply_constraints(r, ctx_.constraints());
    return r;
}

Vector DisplacementProblem::initial_spatial() const {
    const std::size_t n_t = ctx_.grid().size();
    const std::size_t n_scan = std::min<std::size_t>(n_t - 1, 64);
    Vector best(ctx_.mesh().n_nodes(), 0.0);
    double best_energy = 0.0;
    for (std::size_t k = 1; k <= n_scan; ++k) {
        const std::size_t n = (k * (n_t - 1) + n_scan / 2) / n_scan;
        Vector r(ctx_.mesh().n_nodes(), 0.0);
        for (std::size_t s = 0; s < spaces_.size(); ++s) {
            if (times_[s][n] != 0.0) {
                axpy(times_[s][n], spaces_[s], r);
            }
        }
        Vector d = solve_constrained(ctx_.stiffness(), r, ctx_.constraints());
        const double energy = ctx_.mass().quadratic(d, d);
        if (energy > best_energy) {
            best_energy = energy;
            best = std::move(d);
        }
    }
    return best;
}

EnrichmentStats enrich_displacement(const PgdContext& ctx, SeparatedField& u,
                                    const std::vector<SeparatedField>& z) {
    const auto& settings = ctx.settings();
    const auto& grid = ctx.grid();
    const bool multiscale = settings.time_mode == TimeMode::MultiScale;
    EnrichmentStats stats;

    auto temporal_solve = [&](const DisplacementProblem& prob, std::span<const double> u_bar,
                              std::optional<MultiScaleFunction>& ms) {
        Vector lambda = prob.temporal_step(u_bar);
        if (multiscale) {
            FitResult fit = ctx.displacement_fitter().fit(lambda);
            lambda = std::move(fit.samples);
            ms.emplace(std::move(fit.function));
        }
        return lambda;
    };

    while (u.rank() < settings.max_u_modes) {
        const DisplacementProblem prob(ctx, u, z);
        Vector u_bar = prob.initial_spatial();
        double nrm = std::sqrt(std::max(0.0, ctx.mass().quadratic(u_bar, u_bar)));
        if (!(nrm > 0.0)) {
            stats.criterion_met = true;
            break;
        }
        for (double& v : u_bar) {
            v /= nrm;
        }
        std::optional<MultiScaleFunction> ms;
        Vector lambda = temporal_solve(prob, u_bar, ms);

        for (std::size_t it = 0; it < settings.als_max_iters; ++it) {
            Vector next = prob.spatial_step(lambda);
            nrm = std::sqrt(std::max(0.0, ctx.mass().quadratic(next, next)));
            if (!(nrm > 0.0)) {
                break;
            }
            for (double& v : next) {
                v /= nrm;
            }
            std::optional<MultiScaleFunction> next_ms;
            Vector next_lambda = temporal_solve(prob, next, next_ms);
            require_finite(next_lambda, "displacement temporal mode");
            const double change =
                product_change(ctx.mass().quadratic(next, u_bar), next_lambda, lambda, grid);
            u_bar = std::move(next);
            lambda = std::move(next_lambda);
            ms = std::move(next_ms);
            if (change < settings.als_tol) {
                break;
            }
        }
        require_finite(u_bar, "displacement spatial mode");

        const double mode_norm = std::sqrt(std::max(0.0, temporal::trapezoid(grid, lambda, lambda)));
        const double prev_norm = norm(u, ctx.mesh(), grid);
        if (!(mode_norm > 0.0) || (prev_norm > 0.0 && mode_norm <= 1e-10 * prev_norm)) {
            stats.criterion_met = true;
            break;
        }
        u.add(std::move(u_bar), TemporalMode{std::move(lambda), std::move(ms)});
        ++stats.modes_added;
        if (prev_norm > 0.0) {
            const double eps = 100.0 * mode_norm / prev_norm;
            stats.eps.push_back(eps);
            if (eps <= settings.u_mode_tol) {
                stats.criterion_met = true;
                break;
            }
        } else {
            stats.eps.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    return stats;
}

// ---------------------------------------------------------------------------------------------
// internal variables

InternalVariableProblem::InternalVariableProblem(const PgdContext& ctx, std::size_t j,
                                                 const SeparatedField& u, const SeparatedField& z_prev)
    : ctx_(ctx),
      beta_(1.0 / ctx.problem().spectrum[j].tau),
      e_inf_(ctx.problem().equilibrium_modulus(j)),
      a_(ctx.relaxation(j)),
      a_reduced_(temporal::drop_first(a_)),
      h_(ctx.mesh().element_lengths()),
      z_prev_(z_prev) {
    bool zero_inf = e_inf_ == 0.0;
    if (!zero_inf) {
        zero_inf = true;
        for (std::size_t i = 0; i < u.rank(); ++i) {
            strains_.push_back(strain_of(ctx.mesh(), u.spatial[i]));
            loads_.push_back(temporal::relaxation_load(ctx.grid(), beta_, u.temporal[i].samples));
            u_times_.emplace_back(u.temporal[i].samples);
            const bool s_zero = std::all_of(strains_.back().begin(), strains_.back().end(),
                                            [](double v) { return v == 0.0; });
            const bool t_zero = std::all_of(u.temporal[i].samples.begin(), u.temporal[i].samples.end(),
                                            [](double v) { return v == 0.0; });
            zero_inf = zero_inf && (s_zero || t_zero);
        }
    }
    for (std::size_t k = 0; k < z_prev.rank(); ++k) {
        a_phi_.push_back(a_.apply(z_prev.temporal[k].samples));
    }
    trivial_ = zero_inf && z_prev.rank() == 0;
}

Vector InternalVariableProblem::spatial_step(std::span<const double> phi) const {
    const std::size_t n_el = h_.size();
    Vector zbar(n_el, 0.0);
    const double pp = a_.quadratic(phi, phi);
    if (!(pp > 0.0)) {
        return zbar;
    }
    const double drive = beta_ * e_inf_;
    for (std::size_t i = 0; i < strains_.size(); ++i) {
        const double b = dot(loads_[i], phi) * drive / pp;
        axpy(b, strains_[i], zbar);
    }
    for (std::size_t k = 0; k < a_phi_.size(); ++k) {
        const double a = dot(a_phi_[k], phi) / pp;
        axpy(-a, z_prev_.spatial[k], zbar);
    }
    return zbar;
}

Vector InternalVariableProblem::rhs_for(std::span<const double> zbar) const {
    Vector r(ctx_.grid().size(), 0.0);
    auto hdot = [&](std::span<const double> v) {
        double s = 0.0;
        for (std::size_t e = 0; e < h_.size(); ++e) {
            s += h_[e] * zbar[e] * v[e];
        }
        return s;
    };
    const double drive = beta_ * e_inf_;
    for (std::size_t i = 0; i < strains_.size(); ++i) {
        const double c = drive * hdot(strains_[i]);
        if (c != 0.0) {
            axpy(c, loads_[i], r);
        }
    }
    for (std::size_t k = 0; k < a_phi_.size(); ++k) {
        const double c = hdot(z_prev_.spatial[k]);
        if (c != 0.0) {
            axpy(-c, a_phi_[k], r);
        }
    }
    return r;
}

Vector InternalVariableProblem::temporal_step(std::span<const double> zbar) const {
    const std::size_t n_t = ctx_.grid().size();
    Vector phi(n_t, 0.0);
    double nn = 0.0;
    for (std::size_t e = 0; e < h_.size(); ++e) {
        nn += h_[e] * zbar[e] * zbar[e];
    }
    if (!(nn > 0.0)) {
        return phi;
    }
    const Vector r = rhs_for(zbar);
    Vector rr(r.begin() + 1, r.end());
    for (double& v : rr) {
        v /= nn;
    }
    const Vector x = solve_tridiagonal(a_reduced_, rr);
    std::copy(x.begin(), x.end(), phi.begin() + 1);
    return phi;
}

double InternalVariableProblem::objective(std::span<const double> zbar, std::span<const double> phi) const {
    double nn = 0.0;
    for (std::size_t e = 0; e < h_.size(); ++e) {
        nn += h_[e] * zbar[e] * zbar[e];
    }
    return nn * a_.quadratic(phi, phi) - 2.0 * dot(phi, rhs_for(zbar));
}

Vector InternalVariableProblem::initial_temporal() const {
    const auto& grid = ctx_.grid();
    Vector phi(grid.size(), 0.0);
    if (strains_.empty() || e_inf_ == 0.0) {
        return phi;
    }
    std::vector<double> amp(strains_.size());
    for (std::size_t i = 0; i < strains_.size(); ++i) {
        amp[i] = std::sqrt(std::max(0.0, temporal::trapezoid(grid, u_times_[i], u_times_[i])));
    }
    std::size_t best = 0;
    double best_val = 0.0;
    for (std::size_t e = 0; e < h_.size(); ++e) {
        double s = 0.0;
        for (std::size_t i = 0; i < strains_.size(); ++i) {
            s += std::abs(strains_[i][e]) * amp[i];
        }
        if (s > best_val) {
            best_val = s;
            best = e;
        }
    }
    if (!(best_val > 0.0)) {
        return phi;
    }
    for (std::size_t i = 0; i < strains_.size(); ++i) {
        axpy(e_inf_ * strains_[i][best], u_times_[i], phi);
    }
    phi.front() = 0.0;
    return phi;
}

EnrichmentStats enrich_internal_variable(const PgdContext& ctx, std::size_t j, const SeparatedField& u,
                                         SeparatedField& z) {
    const auto& settings = ctx.settings();
    const auto& grid = ctx.grid();
    const auto& h = ctx.mesh().element_lengths();
    const bool multiscale = settings.time_mode == TimeMode::MultiScale;
    const bool first_ever = z.rank() == 0;
    EnrichmentStats stats;

    auto h_norm = [&](std::span<const double> v) {
        double s = 0.0;
        for (std::size_t e = 0; e < h.size(); ++e) {
            s += h[e] * v[e] * v[e];
        }
        return std::sqrt(s);
    };

    for (std::size_t added = 0; added < settings.max_z_modes_per_iter; ++added) {
        const InternalVariableProblem prob(ctx, j, u, z);
        if (prob.trivial()) {
            stats.criterion_met = true;
            break;
        }
        Vector phi = prob.initial_temporal();
        Vector zbar = prob.spatial_step(phi);
        if (!(h_norm(zbar) > 0.0)) {
            for (std::size_t n = 0; n < grid.size(); ++n) {
                phi[n] = grid.node(n) / grid.horizon();
            }
            zbar = prob.spatial_step(phi);
        }
        double nrm = h_norm(zbar);
        if (!(nrm > 0.0)) {
            stats.criterion_met = true;
            break;
        }
        std::optional<MultiScaleFunction> ms;
        Vector reference;
        double fit_error = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t it = 0; it < settings.als_max_iters; ++it) {
            Vector next = prob.spatial_step(phi);
            nrm = h_norm(next);
            if (!(nrm > 0.0)) {
                break;
            }
            for (double& v : next) {
                v /= nrm;
            }
            Vector star = prob.temporal_step(next);
            require_finite(star, "internal-variable temporal mode");
            Vector next_phi = star;
            std::optional<MultiScaleFunction> next_ms;
            double err = std::numeric_limits<double>::quiet_NaN();
            if (multiscale) {
                FitResult fit = ctx.internal_fitter(j).fit(star);
                next_phi = std::move(fit.samples);
                next_ms.emplace(std::move(fit.function));
                if (temporal::trapezoid(grid, star, star) > 0.0) {
                    err = relative_error_trace(next_phi, star, grid);
                }
            }
            double zz = 0.0;
            for (std::size_t e = 0; e < h.size(); ++e) {
                zz += h[e] * next[e] * zbar[e];
            }
            zz /= h_norm(zbar);
            const double change = it == 0 ? 1.0 : product_change(zz, next_phi, phi, grid);
            zbar = std::move(next);
            phi = std::move(next_phi);
            ms = std::move(next_ms);
            reference = std::move(star);
            fit_error = err;
            if (it > 0 && change < settings.als_tol) {
                break;
            }
        }
        require_finite(zbar, "internal-variable spatial mode");
        const double zn = h_norm(zbar);
        if (!(zn > 0.0)) {
            stats.criterion_met = true;
            break;
        }
        const double mode_norm = zn * std::sqrt(std::max(0.0, temporal::trapezoid(grid, phi, phi)));
        const double prev_norm = norm(z, ctx.mesh(), grid);
        if (!(mode_norm > 0.0) || (prev_norm > 0.0 && mode_norm <= 1e-10 * prev_norm)) {
            stats.criterion_met = true;
            break;
        }
        if (first_ever && added == 0 && multiscale) {
            stats.first_fit_error_percent = fit_error;
            stats.first_reference = reference;
            stats.first_multiscale = phi;
        }
        z.add(std::move(zbar), TemporalMode{std::move(phi), std::move(ms)});
        ++stats.modes_added;
        if (prev_norm > 0.0) {
            const double eps = 100.0 * mode_norm / prev_norm;
            stats.eps.push_back(eps);
            if (eps <= settings.z_mode_tol) {
                stats.criterion_met = true;
                break;
            }
        } else {
            stats.eps.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    return stats;
}

// ---------------------------------------------------------------------------------------------
// outer loop

PgdResult outer_fixed_point(const ProblemDefinition& problem, const Mesh1D& mesh,
                            const SingleScaleGrid& grid, const PgdSettings& settings) {
    const auto t0 = Clock::now();
    const PgdContext ctx(problem, mesh, grid, settings);
    const std::size_t n_z = problem.spectrum.size();
    const SymTridiagonal mass = ctx.mass();

    PgdResult result;
    auto& state = result.state;
    auto& report = result.report;
    report.time_mode = settings.time_mode;
    state.z.assign(n_z, SeparatedField{FieldLocation::Elements, {}, {}});
    report.eps_z_last.assign(n_z, std::numeric_limits<double>::quiet_NaN());
    report.z_criterion_met.assign(n_z, false);

    SpaceTimeField u_prev(grid.size(), mesh.n_nodes());
    double u_prev_norm = 0.0;
    report.stop_reason = "outer iteration cap reached";
    for (std::size_t k = 1; k <= settings.max_outer; ++k) {
        const auto td = Clock::now();
        SeparatedField u{FieldLocation::Nodes, {}, {}};
        const EnrichmentStats us = enrich_displacement(ctx, u, state.z);
        report.seconds_displacement += seconds_since(td);
        report.eps_u_history.push_back(us.eps);

        const auto tz = Clock::now();
        bool any_added = false;
        for (std::size_t j = 0; j < n_z; ++j) {
            const EnrichmentStats zs = enrich_internal_variable(ctx, j, u, state.z[j]);
            any_added = any_added || zs.modes_added > 0;
            report.z_criterion_met[j] = zs.criterion_met;
            if (!zs.eps.empty()) {
                report.eps_z_last[j] = zs.eps.back();
            }
            if (!std::isnan(zs.first_fit_error_percent)) {
                report.first_z_fit_error_percent = zs.first_fit_error_percent;
                report.first_z_reference = zs.first_reference;
                report.first_z_multiscale = zs.first_multiscale;
            }
        }
        report.seconds_internal += seconds_since(tz);

        SpaceTimeField u_now = reconstruct(u, mesh, grid);
        const double now_norm = spacetime_norm(u_now, mesh, grid, FieldLocation::Nodes);
        double stag = 0.0;
        if (k == 1 || !(u_prev_norm > 0.0)) {
            stag = now_norm > 0.0 ? 100.0 : 0.0;
        } else {
            SpaceTimeField diff = u_now;
            axpy(-1.0, u_prev.data(), diff.data());
            stag = 100.0 * spacetime_norm(diff, mesh, grid, FieldLocation::Nodes) / u_prev_norm;
        }
        state.u = std::move(u);
        state.stagnation.push_back(stag);
        state.outer_iterations = k;
        if (k > 1 && stag <= settings.outer_tol) {
            report.converged = true;
            report.stop_reason = "displacement stagnated";
            break;
        }
        if (!any_added) {
            report.converged = true;
            report.stop_reason = "no internal-variable enrichment needed";
            break;
        }
        u_prev = std::move(u_now);
        u_prev_norm = now_norm;
    }

    report.outer_iterations = state.outer_iterations;
    report.stagnation = state.stagnation;
    report.u_modes = state.u.rank();
    for (const auto& zj : state.z) {
        report.z_modes.push_back(zj.rank());
    }
    report.single_scale_dofs = grid.size();
    if (ctx.basis()) {
        const DofCount d = dof_count(*ctx.basis(), 1);
        report.multiscale_dofs_per_submode = d.total;
        report.dof_reduction_percent = dof_reduction_percent(d, grid.size());
        std::size_t count = 0;
        std::size_t subs = 0;
        auto tally = [&](const SeparatedField& f) {
            for (const auto& t : f.temporal) {
                if (t.multiscale) {
                    ++count;
                    subs += t.multiscale->submodes().size();
                }
            }
        };
        tally(state.u);
        for (const auto& zj : state.z) {
            tally(zj);
        }
        report.mean_submodes = count > 0 ? static_cast<double>(subs) / static_cast<double>(count) : 0.0;
    }
    report.seconds_total = seconds_since(t0);
    return result;
}

SpaceTimeField reconstruct_stress(const SolverState& state, const PgdContext& ctx) {
    const auto& mesh = ctx.mesh();
    const auto& grid = ctx.grid();
    const SpaceTimeField u = reconstruct(state.u, mesh, grid);
    SpaceTimeField sigma(grid.size(), mesh.n_elements());
    const double ev = ctx.problem().material.vitreous_modulus;
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const Vector eps = strain_of(mesh, u.at_time(n));
        auto row = sigma.at_time(n);
        for (std::size_t e = 0; e < eps.size(); ++e) {
            row[e] = ev * eps[e];
        }
    }
    for (const auto& zj : state.z) {
        const SpaceTimeField zf = reconstruct(zj, mesh, grid);
        axpy(-1.0, zf.data(), sigma.data());
    }
    return sigma;
}

}  // namespace vpgd
