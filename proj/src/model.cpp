#include "vpgd/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vpgd/errors.hpp"

namespace vpgd {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) {
        throw InvalidParameter(msg);
    }
}

}  // namespace

void MaterialParams::validate() const {
    require(std::isfinite(vitreous_modulus) && vitreous_modulus > 0.0,
            "vitreous modulus must be positive");
    require(std::isfinite(relaxed_modulus) && relaxed_modulus >= 0.0,
            "relaxed modulus must be non-negative");
    require(std::isfinite(area) && area > 0.0, "cross-sectional area must be positive");
}

RelaxationSpectrum::RelaxationSpectrum(std::vector<RelaxationProcess> processes)
    : processes_(std::move(processes)) {
    require(!processes_.empty(), "relaxation spectrum needs at least one process");
    for (std::size_t j = 0; j < processes_.size(); ++j) {
        const auto& p = processes_[j];
        require(std::isfinite(p.tau) && p.tau > 0.0, "relaxation times must be positive");
        require(std::isfinite(p.weight) && p.weight > 0.0, "process weights must be positive");
        if (j > 0) {
            require(p.tau >= processes_[j - 1].tau, "relaxation times must be sorted increasingly");
        }
    }
}

double RelaxationSpectrum::total_weight() const noexcept {
    double s = 0.0;
    for (const auto& p : processes_) {
        s += p.weight;
    }
    return s;
}

double RelaxationSpectrum::min_tau() const {
    if (processes_.empty()) {
        throw InvalidParameter("empty spectrum");
    }
    return processes_.front().tau;
}

double RelaxationSpectrum::max_tau() const {
    if (processes_.empty()) {
        throw InvalidParameter("empty spectrum");
    }
    return processes_.back().tau;
}

RelaxationSpectrum build_spectrum(std::size_t n_processes, double n_decades, double tau_max,
                                  double total_weight) {
    require(n_processes >= 1, "spectrum needs at least one process");
    require(std::isfinite(n_decades) && n_decades >= 0.0, "number of decades must be non-negative");
    require(std::isfinite(tau_max) && tau_max > 0.0, "largest relaxation time must be positive");
    require(std::isfinite(total_weight) && total_weight > 0.0, "total weight must be positive");

    std::vector<RelaxationProcess> out(n_processes);
    const double log_max = std::log10(tau_max);
    const double log_min = log_max - n_decades;
    double raw_sum = 0.0;
    for (std::size_t j = 0; j < n_processes; ++j) {
        const double frac =
            n_processes == 1 ? 1.0 : static_cast<double>(j) / static_cast<double>(n_processes - 1);
        // pin the end points exactly
        double tau = std::min(tau_max, std::pow(10.0, log_min + frac * (log_max - log_min)));
        if (j + 1 == n_processes || n_decades == 0.0) {
            tau = tau_max;
        }
        out[j].tau = tau;
        out[j].weight = std::sqrt(tau);
        raw_sum += out[j].weight;
    }
    for (auto& p : out) {
        p.weight *= total_weight / raw_sum;
    }
    // absorb the rounding residue in the largest weight
    double s = 0.0;
    for (std::size_t j = 0; j + 1 < n_processes; ++j) {
        s += out[j].weight;
    }
    out.back().weight = total_weight - s;
    return RelaxationSpectrum(std::move(out));
}

double effective_relaxed_modulus(const MaterialParams& material, const RelaxationSpectrum& spectrum) {
    return material.vitreous_modulus - material.relaxed_modulus * spectrum.total_weight();
}

void Table::validate(const std::string& what) const {
    require(xs.size() >= 2 && xs.size() == values.size(),
            what + " table needs at least two (x, value) rows");
    for (std::size_t k = 0; k < xs.size(); ++k) {
        require(std::isfinite(xs[k]) && std::isfinite(values[k]), what + " table has non-finite entries");
        if (k > 0) {
            require(xs[k] > xs[k - 1], what + " table abscissae must be strictly increasing");
        }
    }
}

bool Table::covers(double lo, double hi) const {
    if (xs.empty()) {
        return false;
    }
    const double slack = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
    return xs.front() <= lo + slack && xs.back() >= hi - slack;
}

double Table::operator()(double x) const {
    if (xs.empty()) {
        throw DomainError("empty table");
    }
    if (x <= xs.front()) {
        return values.front();
    }
    if (x >= xs.back()) {
        return values.back();
    }
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - xs.begin());
    const double w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    return (1.0 - w) * values[k - 1] + w * values[k];
}

double SpatialProfile::operator()(double x, double length) const {
    switch (shape) {
        case SpatialShape::Hat:
            return amplitude * std::max(0.0, 1.0 - std::abs(2.0 * x / length - 1.0));
        case SpatialShape::Constant:
            return amplitude;
        case SpatialShape::Table:
            return amplitude * table(x);
    }
    return 0.0;
}

double TemporalFactor::operator()(double t) const {
    const double phase = 2.0 * std::numbers::pi * frequency * t;
    switch (shape) {
        case TemporalShape::Sine:
            return amplitude * std::sin(phase);
        case TemporalShape::OffsetSine:
            return offset + amplitude * std::sin(phase);
        case TemporalShape::Constant:
            return amplitude;
        case TemporalShape::Table:
            return amplitude * table(t);
    }
    return 0.0;
}

void ProblemDefinition::validate() const {
    material.validate();
    require(spectrum.size() >= 1, "relaxation spectrum needs at least one process");
    require(std::isfinite(length) && length > 0.0, "bar length must be positive");
    require(std::isfinite(horizon) && horizon > 0.0, "time horizon must be positive");
    require(left == EndCondition::Clamped || right == EndCondition::Clamped,
            "at least one end must be clamped");
    require(effective_relaxed_modulus(material, spectrum) > 0.0,
            "E_v must exceed E_r * sum(p_j) so the relaxed stiffness stays positive");
    const auto& ld = load;
    require(std::isfinite(ld.spatial.amplitude), "spatial load amplitude must be finite");
    require(std::isfinite(ld.temporal.amplitude) && std::isfinite(ld.temporal.offset),
            "temporal load parameters must be finite");
    require(std::isfinite(ld.temporal.frequency) && ld.temporal.frequency >= 0.0,
            "load frequency must be non-negative");
    if (ld.spatial.shape == SpatialShape::Table) {
        ld.spatial.table.validate("spatial load");
        require(ld.spatial.table.covers(0.0, length), "spatial load table must cover [0, L]");
    }
    if (ld.temporal.shape == TemporalShape::Table) {
        ld.temporal.table.validate("temporal load");
        require(ld.temporal.table.covers(0.0, horizon), "temporal load table must cover [0, T]");
    }
    require(std::isfinite(ld.traction_left) && std::isfinite(ld.traction_right),
            "end tractions must be finite");
}

double ProblemDefinition::equilibrium_modulus(std::size_t j) const {
    return spectrum[j].weight * material.relaxed_modulus;
}

double evaluate_load(const ProblemDefinition& problem, double x, double t) {
    const double sx = 1e-12 * problem.length;
    const double st = 1e-12 * problem.horizon;
    if (!(x >= -sx && x <= problem.length + sx)) {
        throw DomainError("load evaluated outside [0, L]");
    }
    if (!(t >= -st && t <= problem.horizon + st)) {
        throw DomainError("load evaluated outside [0, T]");
    }
    return problem.load.spatial(x, problem.length) * problem.load.temporal(t);
}

std::string to_string(SpatialShape s) {
    switch (s) {
        case SpatialShape::Hat: return "hat";
        case SpatialShape::Constant: return "constant";
        case SpatialShape::Table: return "table";
    }
    return "?";
}

std::string to_string(TemporalShape s) {
    switch (s) {
        case TemporalShape::Sine: return "sine";
        case TemporalShape::OffsetSine: return "offset-sine";
        case TemporalShape::Constant: return "constant";
        case TemporalShape::Table: return "table";
    }
    return "?";
}

std::string to_string(EndCondition c) {
    return c == EndCondition::Clamped ? "clamped" : "traction";
}

SpatialShape parse_spatial_shape(const std::string& s) {
    if (s == "hat") return SpatialShape::Hat;
    if (s == "constant") return SpatialShape::Constant;
    if (s == "table") return SpatialShape::Table;
    throw InvalidParameter("unknown spatial load shape '" + s + "'");
}

TemporalShape parse_temporal_shape(const std::string& s) {
    if (s == "sine") return TemporalShape::Sine;
    if (s == "offset-sine") return TemporalShape::OffsetSine;
    if (s == "constant") return TemporalShape::Constant;
    if (s == "table") return TemporalShape::Table;
    throw InvalidParameter("unknown temporal load shape '" + s + "'");
}

EndCondition parse_end_condition(const std::string& s) {
    if (s == "clamped") return EndCondition::Clamped;
    if (s == "traction") return EndCondition::Traction;
    throw InvalidParameter("unknown boundary condition '" + s + "'");
}

ProblemDefinition single_process_problem() {
    ProblemDefinition p;
    p.spectrum = RelaxationSpectrum({{5.0, 0.025}});
    return p;
}

ProblemDefinition fifty_process_problem() {
    ProblemDefinition p;
    p.spectrum = build_spectrum(50, 6.0, 10.0, 1.0);
    return p;
}

}  // namespace vpgd
