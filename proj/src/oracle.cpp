#include "vpgd/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "vpgd/errors.hpp"

namespace vpgd {

Vector SpaceTimeField::trace(std::size_t a) const {
    if (a >= n_s_) {
        throw ShapeError("trace: spatial index out of range");
    }
    Vector out(n_t_);
    for (std::size_t n = 0; n < n_t_; ++n) {
        out[n] = (*this)(n, a);
    }
    return out;
}

namespace {

SymTridiagonal spatial_weight(const Mesh1D& mesh, FieldLocation where) {
    if (where == FieldLocation::Nodes) {
        return assemble_mass(mesh);
    }
    SymTridiagonal m(mesh.n_elements());
    std::copy(mesh.element_lengths().begin(), mesh.element_lengths().end(), m.diag.begin());
    return m;
}

void check_shape(const SpaceTimeField& f, const Mesh1D& mesh, const SingleScaleGrid& grid,
                 FieldLocation where) {
    const std::size_t ns = where == FieldLocation::Nodes ? mesh.n_nodes() : mesh.n_elements();
    if (f.n_times() != grid.size() || f.n_space() != ns) {
        throw ShapeError("field dimensions do not match mesh x grid");
    }
}

double weighted_sq(const SpaceTimeField& f, const SymTridiagonal& m, const SingleScaleGrid& grid) {
    const auto& w = grid.trapezoid_weights();
    double s = 0.0;
    for (std::size_t n = 0; n < f.n_times(); ++n) {
        s += w[n] * m.quadratic(f.at_time(n), f.at_time(n));
    }
    return s;
}

}  // namespace

double spacetime_norm(const SpaceTimeField& field, const Mesh1D& mesh, const SingleScaleGrid& grid,
                      FieldLocation where) {
    check_shape(field, mesh, grid, where);
    return std::sqrt(std::max(0.0, weighted_sq(field, spatial_weight(mesh, where), grid)));
}

double relative_error(const SpaceTimeField& candidate, const SpaceTimeField& reference,
                      const Mesh1D& mesh, const SingleScaleGrid& grid, FieldLocation where) {
    check_shape(candidate, mesh, grid, where);
    check_shape(reference, mesh, grid, where);
    const SymTridiagonal m = spatial_weight(mesh, where);
    const double ref = std::sqrt(std::max(0.0, weighted_sq(reference, m, grid)));
    if (!(ref > 0.0)) {
        throw DomainError("relative error undefined: reference field has zero norm");
    }
    SpaceTimeField diff = candidate;
    axpy(-1.0, reference.data(), diff.data());
    return 100.0 * std::sqrt(std::max(0.0, weighted_sq(diff, m, grid))) / ref;
}

double relative_error_trace(std::span<const double> candidate, std::span<const double> reference,
                            const SingleScaleGrid& grid) {
    const auto& w = grid.trapezoid_weights();
    if (candidate.size() != w.size() || reference.size() != w.size()) {
        throw ShapeError("trace length does not match the grid");
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t n = 0; n < w.size(); ++n) {
        const double d = candidate[n] - reference[n];
        num += w[n] * d * d;
        den += w[n] * reference[n] * reference[n];
    }
    if (!(den > 0.0)) {
        throw DomainError("relative error undefined: reference trace has zero norm");
    }
    return 100.0 * std::sqrt(num / den);
}

Vector external_force(const ProblemDefinition& problem, const Mesh1D& mesh, double t) {
    const double ft = problem.load.temporal(t);
    Vector f = assemble_load_vector(mesh, [&](double x) { return problem.load.spatial(x, problem.length); });
    const Vector fn = assemble_traction_vector(mesh, problem);
    for (std::size_t a = 0; a < f.size(); ++a) {
        f[a] = (f[a] + fn[a]) * ft;
    }
    return f;
}

Vector relax_internal_variable(std::span<const double> strain, double tau, double modulus,
                               const SingleScaleGrid& grid) {
    if (strain.size() != grid.size()) {
        throw ShapeError("strain history length does not match the grid");
    }
    if (!(tau > 0.0)) {
        throw InvalidParameter("relaxation time must be positive");
    }
    const double a = grid.step() / tau;
    Vector z(grid.size(), 0.0);
    for (std::size_t n = 0; n + 1 < grid.size(); ++n) {
        z[n + 1] = (z[n] + a * modulus * strain[n + 1]) / (1.0 + a);
    }
    return z;
}

FullOrderSolution solve_full_order(const ProblemDefinition& problem, const Mesh1D& mesh,
                                   const SingleScaleGrid& grid) {
    problem.validate();
    if (std::abs(mesh.length() - problem.length) > 1e-12 * problem.length) {
        throw ConfigError("mesh length does not match the bar length");
    }
    if (std::abs(grid.horizon() - problem.horizon) > 1e-12 * problem.horizon) {
        throw ConfigError("time grid horizon does not match the problem horizon");
    }
    const Constraints bcs = Constraints::of(problem);
    const std::size_t n_t = grid.size();
    const std::size_t n_el = mesh.n_elements();
    const std::size_t n_z = problem.spectrum.size();
    const double area = problem.material.area;
    const double ev = problem.material.vitreous_modulus;
    const double dt = grid.step();

    FullOrderSolution sol;
    sol.u = SpaceTimeField(n_t, mesh.n_nodes());
    sol.sigma = SpaceTimeField(n_t, n_el);
    sol.z.assign(n_z, SpaceTimeField(n_t, n_el));
    if (dt > problem.spectrum.min_tau()) {
        sol.warnings.push_back("time step " + std::to_string(dt) +
                               " s does not resolve the fastest relaxation time " +
                               std::to_string(problem.spectrum.min_tau()) + " s");
    }

    Vector a(n_z);
    Vector e_inf(n_z);
    double e_eff = ev;
    for (std::size_t j = 0; j < n_z; ++j) {
        a[j] = dt / problem.spectrum[j].tau;
        e_inf[j] = problem.equilibrium_modulus(j);
        e_eff -= e_inf[j] * a[j] / (1.0 + a[j]);
    }
    const SymTridiagonal k_eff = assemble_stiffness(mesh, e_eff, area);
    const Vector f_space = [&] {
        Vector f = assemble_load_vector(mesh, [&](double x) { return problem.load.spatial(x, problem.length); });
        axpy(1.0, assemble_traction_vector(mesh, problem), f);
        return f;
    }();

    Vector history(n_el);
    for (std::size_t n = 0; n + 1 < n_t; ++n) {
        std::fill(history.begin(), history.end(), 0.0);
        for (std::size_t j = 0; j < n_z; ++j) {
            const auto zn = sol.z[j].at_time(n);
            for (std::size_t e = 0; e < n_el; ++e) {
                history[e] += zn[e] / (1.0 + a[j]);
            }
        }
        Vector rhs = assemble_stress_force(mesh, area, history);
        axpy(problem.load.temporal(grid.node(n + 1)), f_space, rhs);
        const Vector u = solve_constrained(k_eff, rhs, bcs);
        if (!all_finite(u)) {
            throw NumericalFailure("full-order solve produced non-finite displacement at step " +
                                   std::to_string(n + 1));
        }
        std::copy(u.begin(), u.end(), sol.u.at_time(n + 1).begin());
        const Vector eps = strain_of(mesh, u);
        auto sig = sol.sigma.at_time(n + 1);
        for (std::size_t e = 0; e < n_el; ++e) {
            sig[e] = ev * eps[e];
        }
        for (std::size_t j = 0; j < n_z; ++j) {
            const auto zn = sol.z[j].at_time(n);
            auto zn1 = sol.z[j].at_time(n + 1);
            for (std::size_t e = 0; e < n_el; ++e) {
                zn1[e] = (zn[e] + a[j] * e_inf[j] * eps[e]) / (1.0 + a[j]);
                sig[e] -= zn1[e];
            }
        }
    }
    return sol;
}

double equilibrium_residual(const FullOrderSolution& solution, const ProblemDefinition& problem,
                            const Mesh1D& mesh, const SingleScaleGrid& grid, std::size_t n) {
    const Vector internal = assemble_stress_force(mesh, problem.material.area, solution.sigma.at_time(n));
    const Vector external = external_force(problem, mesh, grid.node(n));
    const Constraints bcs = Constraints::of(problem);
    double r = 0.0;
    for (std::size_t a = 0; a < mesh.n_nodes(); ++a) {
        if (!bcs.is_clamped(a, mesh.n_nodes())) {
            r = std::max(r, std::abs(internal[a] - external[a]));
        }
    }
    return r;
}

}  // namespace vpgd
