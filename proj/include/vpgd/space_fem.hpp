#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "vpgd/linalg.hpp"
#include "vpgd/model.hpp"

namespace vpgd {

/// Sorted node coordinates over [0, L] with linear elements between consecutive nodes.
class Mesh1D {
public:
    /// Throws MeshError unless nodes are strictly increasing with nodes.front() == 0.
    explicit Mesh1D(Vector nodes);

    static Mesh1D uniform(double length, std::size_t n_nodes);

    std::size_t n_nodes() const noexcept { return nodes_.size(); }
    std::size_t n_elements() const noexcept { return nodes_.size() - 1; }
    double length() const noexcept { return nodes_.back(); }
    const Vector& nodes() const noexcept { return nodes_; }
    double node(std::size_t a) const { return nodes_.at(a); }
    double element_length(std::size_t e) const { return nodes_.at(e + 1) - nodes_.at(e); }
    const Vector& element_lengths() const noexcept { return h_; }

    std::size_t nearest_node(double x) const;

    /// Linear interpolation of a nodal field at x.
    double interpolate(std::span<const double> nodal, double x) const;

private:
    Vector nodes_;
    Vector h_;
};

/// Which ends carry u = 0.
struct Constraints {
    bool left_clamped = true;
    bool right_clamped = false;

    static Constraints of(const ProblemDefinition& problem);
    bool is_clamped(std::size_t node, std::size_t n_nodes) const noexcept;
    bool any() const noexcept { return left_clamped || right_clamped; }
};

/// sum_e int N_a' (modulus * area) N_b' dx
SymTridiagonal assemble_stiffness(const Mesh1D& mesh, double modulus, double area);

/// Consistent linear-element mass matrix; entries sum to L.
SymTridiagonal assemble_mass(const Mesh1D& mesh);

/// Consistent nodal forces of a line load (N/m), 2-point Gauss per element.
Vector assemble_load_vector(const Mesh1D& mesh, const std::function<double(double)>& line_load);

/// Point forces from end tractions on the traction ends of the problem.
Vector assemble_traction_vector(const Mesh1D& mesh, const ProblemDefinition& problem);

/// Element-wise du/dx.
Vector strain_of(const Mesh1D& mesh, std::span<const double> u);

/// Nodal vector of int area * s(x) v_a'(x) dx for an element-wise constant stress s.
Vector assemble_stress_force(const Mesh1D& mesh, double area, std::span<const double> element_stress);

/// Solves K u = rhs on free nodes with u = 0 on clamped nodes (row/column elimination).
Vector solve_constrained(const SymTridiagonal& stiffness, std::span<const double> rhs,
                         const Constraints& constraints);

/// Zeroes clamped entries in place.
void apply_constraints(std::span<double> u, const Constraints& constraints);

}  // namespace vpgd
