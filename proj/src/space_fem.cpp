#include "vpgd/space_fem.hpp"

#include <algorithm>
#include <cmath>

#include "vpgd/errors.hpp"

namespace vpgd {

Mesh1D::Mesh1D(Vector nodes) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 2) {
        throw MeshError("mesh needs at least two nodes");
    }
    if (nodes_.front() != 0.0) {
        throw MeshError("mesh must start at x = 0");
    }
    h_.resize(nodes_.size() - 1);
    for (std::size_t e = 0; e + 1 < nodes_.size(); ++e) {
        h_[e] = nodes_[e + 1] - nodes_[e];
        if (!(h_[e] > 0.0) || !std::isfinite(h_[e])) {
            throw MeshError("degenerate element " + std::to_string(e));
        }
    }
}

Mesh1D Mesh1D::uniform(double length, std::size_t n_nodes) {
    if (!(length > 0.0)) {
        throw MeshError("mesh length must be positive");
    }
    if (n_nodes < 2) {
        throw MeshError("mesh needs at least two nodes");
    }
    Vector x(n_nodes);
    for (std::size_t a = 0; a < n_nodes; ++a) {
        x[a] = length * static_cast<double>(a) / static_cast<double>(n_nodes - 1);
    }
    x.back() = length;
    return Mesh1D(std::move(x));
}

std::size_t Mesh1D::nearest_node(double x) const {
    std::size_t best = 0;
    for (std::size_t a = 1; a < nodes_.size(); ++a) {
        if (std::abs(nodes_[a] - x) < std::abs(nodes_[best] - x)) {
            best = a;
        }
    }
    return best;
}

double Mesh1D::interpolate(std::span<const double> nodal, double x) const {
    if (nodal.size() != nodes_.size()) {
        throw ShapeError("interpolate: nodal field size mismatch");
    }
    const double slack = 1e-12 * length();
    if (x < -slack || x > length() + slack) {
        throw DomainError("interpolate: x outside the mesh");
    }
    if (x <= 0.0) {
        return nodal.front();
    }
    if (x >= length()) {
        return nodal.back();
    }
    const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
    const std::size_t b = static_cast<std::size_t>(it - nodes_.begin());
    const std::size_t a = b - 1;
    const double w = (x - nodes_[a]) / h_[a];
    return (1.0 - w) * nodal[a] + w * nodal[b];
}

Constraints Constraints::of(const ProblemDefinition& problem) {
    return {problem.left == EndCondition::Clamped, problem.right == EndCondition::Clamped};
}

bool Constraints::is_clamped(std::size_t node, std::size_t n_nodes) const noexcept {
    return (left_clamped && node == 0) || (right_clamped && node + 1 == n_nodes);
}

SymTridiagonal assemble_stiffness(const Mesh1D& mesh, double modulus, double area) {
    if (!(modulus > 0.0) || !(area > 0.0)) {
        throw InvalidParameter("stiffness needs positive modulus and area");
    }
    const double ea = modulus * area;
    SymTridiagonal k(mesh.n_nodes());
    for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
        const double h = mesh.element_length(e);
        if (!(h > 0.0)) {
            throw MeshError("degenerate element");
        }
        const double s = ea / h;
        k.diag[e] += s;
        k.diag[e + 1] += s;
        k.off[e] -= s;
    }
    return k;
}

SymTridiagonal assemble_mass(const Mesh1D& mesh) {
    SymTridiagonal m(mesh.n_nodes());
    for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
        const double h = mesh.element_length(e);
        if (!(h > 0.0)) {
            throw MeshError("degenerate element");
        }
        m.diag[e] += h / 3.0;
        m.diag[e + 1] += h / 3.0;
        m.off[e] += h / 6.0;
    }
    return m;
}

Vector assemble_load_vector(const Mesh1D& mesh, const std::function<double(double)>& line_load) {
    static const double gp = 1.0 / std::sqrt(3.0);
    Vector f(mesh.n_nodes(), 0.0);
    for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
        const double x0 = mesh.node(e);
        const double h = mesh.element_length(e);
        for (double xi : {-gp, gp}) {
            const double na = 0.5 * (1.0 - xi);
            const double nb = 0.5 * (1.0 + xi);
            const double x = x0 + nb * h;
            const double w = 0.5 * h;  // unit Gauss weights on [-1, 1]
            const double val = line_load(x);
            f[e] += w * na * val;
            f[e + 1] += w * nb * val;
        }
    }
    return f;
}

Vector assemble_traction_vector(const Mesh1D& mesh, const ProblemDefinition& problem) {
    Vector f(mesh.n_nodes(), 0.0);
    if (problem.left == EndCondition::Traction) {
        f.front() += problem.load.traction_left;
    }
    if (problem.right == EndCondition::Traction) {
        f.back() += problem.load.traction_right;
    }
    return f;
}

Vector strain_of(const Mesh1D& mesh, std::span<const double> u) {
    if (u.size() != mesh.n_nodes()) {
        throw ShapeError("strain_of: nodal vector has wrong size");
    }
    Vector eps(mesh.n_elements());
    for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
        eps[e] = (u[e + 1] - u[e]) / mesh.element_length(e);
    }
    return eps;
}

Vector assemble_stress_force(const Mesh1D& mesh, double area, std::span<const double> element_stress) {
    if (element_stress.size() != mesh.n_elements()) {
        throw ShapeError("assemble_stress_force: element field has wrong size");
    }
    Vector r(mesh.n_nodes(), 0.0);
    for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
        const double s = area * element_stress[e];
        r[e] -= s;
        r[e + 1] += s;
    }
    return r;
}

Vector solve_constrained(const SymTridiagonal& stiffness, std::span<const double> rhs,
                         const Constraints& constraints) {
    const std::size_t n = stiffness.size();
    if (rhs.size() != n) {
        throw ShapeError("solve_constrained: rhs size mismatch");
    }
    if (!constraints.any()) {
        throw SingularSystem("no clamped node: rigid-body motion is not excluded");
    }
    const std::size_t first = constraints.left_clamped ? 1 : 0;
    const std::size_t last = constraints.right_clamped ? n - 1 : n;  // exclusive
    Vector u(n, 0.0);
    if (last <= first) {
        return u;
    }
    const std::size_t m = last - first;
    SymTridiagonal reduced(m);
    Vector b(m);
    for (std::size_t k = 0; k < m; ++k) {
        reduced.diag[k] = stiffness.diag[first + k];
        b[k] = rhs[first + k];
        if (k + 1 < m) {
            reduced.off[k] = stiffness.off[first + k];
        }
    }
    const Vector x = solve_tridiagonal(reduced, b);
    std::copy(x.begin(), x.end(), u.begin() + static_cast<std::ptrdiff_t>(first));
    return u;
}

void apply_constraints(std::span<double> u, const Constraints& constraints) {
    if (u.empty()) {
        return;
    }
    if (constraints.left_clamped) {
        u.front() = 0.0;
    }
    if (constraints.right_clamped) {
        u.back() = 0.0;
    }
}

}  // namespace vpgd
