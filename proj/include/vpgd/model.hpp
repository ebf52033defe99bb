#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace vpgd {

/// Elastic constants of the bar. Moduli in Pa, area in m^2.
struct MaterialParams {
    double vitreous_modulus = 1.2e9;  ///< E_v, instantaneous stiffness
    double relaxed_modulus = 1.0e9;   ///< E_r, scales every process weight
    double area = 2.5e-7;

    void validate() const;
};

struct RelaxationProcess {
    double tau = 1.0;     ///< relaxation time, s
    double weight = 0.0;  ///< dimensionless p_j
};

/// Discrete relaxation spectrum {(tau_j, p_j)}, sorted by tau.
class RelaxationSpectrum {
public:
    RelaxationSpectrum() = default;
    explicit RelaxationSpectrum(std::vector<RelaxationProcess> processes);

    std::size_t size() const noexcept { return processes_.size(); }
    const std::vector<RelaxationProcess>& processes() const noexcept { return processes_; }
    const RelaxationProcess& operator[](std::size_t j) const { return processes_.at(j); }

    double total_weight() const noexcept;
    double min_tau() const;
    double max_tau() const;

private:
    std::vector<RelaxationProcess> processes_;
};

/// Log-spaced spectrum over [tau_max 10^-n_decades, tau_max] with p_j proportional to sqrt(tau_j),
/// rescaled so the weights sum to `total_weight`. A zero-decade span yields equal times and weights.
RelaxationSpectrum build_spectrum(std::size_t n_processes, double n_decades, double tau_max,
                                  double total_weight);

/// E_v - E_r * sum(p_j): stiffness of the fully relaxed bar.
double effective_relaxed_modulus(const MaterialParams& material, const RelaxationSpectrum& spectrum);

/// Piecewise-linear lookup table. `xs` strictly increasing.
struct Table {
    std::vector<double> xs;
    std::vector<double> values;

    void validate(const std::string& what) const;
    bool covers(double lo, double hi) const;
    double operator()(double x) const;
};

enum class SpatialShape { Hat, Constant, Table };
enum class TemporalShape { Sine, OffsetSine, Constant, Table };

/// f_x(x), N/m.
struct SpatialProfile {
    SpatialShape shape = SpatialShape::Hat;
    double amplitude = 1.0e3;
    vpgd::Table table;

    /// `length` is the bar length; the hat peaks at length/2.
    double operator()(double x, double length) const;
};

/// f_t(t), dimensionless.
///   sine:        amplitude * sin(2 pi nu t)
///   offset-sine: offset + amplitude * sin(2 pi nu t)
///   constant:    amplitude
struct TemporalFactor {
    TemporalShape shape = TemporalShape::Sine;
    double amplitude = 1.0;
    double frequency = 1.0;  ///< nu, Hz
    double offset = 0.0;
    vpgd::Table table;

    double operator()(double t) const;
};

/// f(x, t) = f_x(x) f_t(t); end tractions (N) are scaled by the same temporal factor.
struct LoadDefinition {
    SpatialProfile spatial;
    TemporalFactor temporal;
    double traction_left = 0.0;
    double traction_right = 0.0;
};

enum class EndCondition { Clamped, Traction };

struct ProblemDefinition {
    MaterialParams material;
    RelaxationSpectrum spectrum;
    LoadDefinition load;
    double length = 5.0e-3;   ///< L, m
    double horizon = 100.0;   ///< T, s
    EndCondition left = EndCondition::Clamped;
    EndCondition right = EndCondition::Traction;

    /// Throws InvalidParameter on any violated invariant.
    void validate() const;

    /// E_inf^{rj} = p_j E_r
    double equilibrium_modulus(std::size_t j) const;
};

/// f_x(x) f_t(t). Throws DomainError outside [0, L] x [0, T].
double evaluate_load(const ProblemDefinition& problem, double x, double t);

std::string to_string(SpatialShape s);
std::string to_string(TemporalShape s);
std::string to_string(EndCondition c);
SpatialShape parse_spatial_shape(const std::string& s);
TemporalShape parse_temporal_shape(const std::string& s);
EndCondition parse_end_condition(const std::string& s);

/// Problem of the single-process fatigue experiment (tau = 5 s, p = 0.025, polypropylene bar).
ProblemDefinition single_process_problem();

/// Problem of the 50-process, six-decade experiment.
ProblemDefinition fifty_process_problem();

}  // namespace vpgd
