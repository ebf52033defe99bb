#include "vpgd/time_basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "vpgd/errors.hpp"

namespace vpgd {

namespace {

constexpr double kSnap = 1e-9;

/// floor() that treats values within kSnap of an integer as that integer.
double snapped(double s) {
    const double r = std::round(s);
    return std::abs(s - r) < kSnap ? r : s;
}

void check_time(double t, double horizon) {
    const double slack = 1e-12 * horizon;
    if (!(t >= -slack && t <= horizon + slack)) {
        throw DomainError("time " + std::to_string(t) + " outside [0, " + std::to_string(horizon) + "]");
    }
}

}  // namespace

SingleScaleGrid::SingleScaleGrid(double horizon, std::size_t n_nodes)
    : horizon_(horizon), n_(n_nodes), dt_(0.0) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw InvalidParameter("time horizon must be positive");
    }
    if (n_nodes < 2) {
        throw InvalidParameter("time grid needs at least two nodes");
    }
    dt_ = horizon / static_cast<double>(n_nodes - 1);
    weights_.assign(n_nodes, dt_);
    weights_.front() = 0.5 * dt_;
    weights_.back() = 0.5 * dt_;
}

double SingleScaleGrid::node(std::size_t n) const noexcept {
    return n + 1 == n_ ? horizon_ : static_cast<double>(n) * dt_;
}

Vector SingleScaleGrid::nodes() const {
    Vector t(n_);
    for (std::size_t n = 0; n < n_; ++n) {
        t[n] = node(n);
    }
    return t;
}

std::optional<std::size_t> SingleScaleGrid::index_of(double t) const {
    const double s = t / dt_;
    const double r = std::round(s);
    if (std::abs(s - r) > kSnap || r < 0.0 || r > static_cast<double>(n_ - 1)) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(r);
}

MultiScaleBasis::MultiScaleBasis(double horizon, std::size_t n_macro, std::size_t n_micro)
    : horizon_(horizon), n_macro_(n_macro), n_micro_(n_micro) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw InvalidParameter("time horizon must be positive");
    }
    if (n_macro < 2 || n_micro < 2) {
        throw InvalidParameter("multi-scale basis needs at least two macro and two micro nodes");
    }
    macro_step_ = horizon / static_cast<double>(n_macro - 1);
    micro_step_ = 2.0 * macro_step_ / static_cast<double>(n_micro - 1);
}

double MultiScaleBasis::macro_node(std::size_t i) const noexcept {
    return i + 1 == n_macro_ ? horizon_ : static_cast<double>(i) * macro_step_;
}

double MultiScaleBasis::micro_node(std::size_t m) const noexcept {
    return -macro_step_ + static_cast<double>(m) * micro_step_;
}

double MultiScaleBasis::hat(std::size_t i, double t) const {
    check_time(t, horizon_);
    if (i >= n_macro_) {
        throw InvalidParameter("hat index out of range");
    }
    const double xi = (t - macro_node(i)) / macro_step_;
    return std::max(0.0, 1.0 - std::abs(xi));
}

double MultiScaleBasis::hat_sum(double t) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_macro_; ++i) {
        s += hat(i, t);
    }
    return s;
}

Stencil MultiScaleBasis::stencil(double t) const {
    check_time(t, horizon_);
    const double s = snapped(t / macro_step_);
    const auto last = static_cast<double>(n_macro_ - 2);
    const double k = std::clamp(std::floor(s), 0.0, last);
    const double xi = std::clamp(s - k, 0.0, 1.0);
    const auto left = static_cast<std::size_t>(k);

    Stencil st;
    const double tau_left = xi * macro_step_;
    const double tau_right = (xi - 1.0) * macro_step_;
    const auto [ml, wl] = locate_micro(tau_left);
    const auto [mr, wr] = locate_micro(tau_right);
    st.terms[0] = {left, 1.0 - xi, -1.0 / macro_step_, ml, wl};
    st.terms[1] = {left + 1, xi, 1.0 / macro_step_, mr, wr};
    return st;
}

std::pair<std::size_t, double> MultiScaleBasis::locate_micro(double tau) const {
    const auto top = static_cast<double>(n_micro_ - 1);
    const double s = std::clamp(snapped((tau + macro_step_) / micro_step_), 0.0, top);
    const double m = std::min(std::floor(s), top - 1.0);
    return {static_cast<std::size_t>(m), s - m};
}

bool MultiScaleBasis::operator==(const MultiScaleBasis& other) const noexcept {
    return horizon_ == other.horizon_ && n_macro_ == other.n_macro_ && n_micro_ == other.n_micro_;
}

MultiScaleFunction::MultiScaleFunction(MultiScaleBasis basis) : basis_(std::move(basis)) {}

void MultiScaleFunction::add_submode(Vector macro, Vector micro) {
    if (macro.size() != basis_.n_macro() || micro.size() != basis_.n_micro()) {
        throw ShapeError("submode coefficient sizes do not match the basis");
    }
    const double n = norm2(micro);
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw InvalidParameter("micro coefficients must be non-zero and finite");
    }
    // already unit to rounding (e.g. read back from a record): keep the stored bits
    if (std::abs(n - 1.0) > 4.0 * std::numeric_limits<double>::epsilon()) {
        for (double& v : micro) {
            v /= n;
        }
        for (double& v : macro) {
            v *= n;
        }
    }
    submodes_.push_back({std::move(macro), std::move(micro)});
}

void MultiScaleFunction::set_transient(TransientSegment segment) {
    if (!(segment.end_time > 0.0) || !(segment.step > 0.0)) {
        throw InvalidParameter("transient segment needs positive end time and step");
    }
    const double elements = segment.end_time / basis_.macro_step();
    if (std::abs(elements - std::round(elements)) > kSnap * std::max(1.0, elements)) {
        throw InvalidParameter("transient end time must be a whole number of macro elements");
    }
    const double steps = segment.end_time / segment.step;
    const double r = std::round(steps);
    if (std::abs(steps - r) > kSnap * std::max(1.0, steps)) {
        throw InvalidParameter("transient end time must be a whole number of sample steps");
    }
    if (segment.samples.size() != static_cast<std::size_t>(r) + 1) {
        throw ShapeError("transient samples must cover [0, T_c] inclusive");
    }
    if (segment.end_time > basis_.horizon() * (1.0 + 1e-12)) {
        throw InvalidParameter("transient end time exceeds the horizon");
    }
    transient_ = std::move(segment);
}

double MultiScaleFunction::eval_expansion(double t) const {
    if (submodes_.empty()) {
        check_time(t, basis_.horizon());
        return 0.0;
    }
    const Stencil st = basis_.stencil(t);
    double v = 0.0;
    for (const auto& sm : submodes_) {
        for (const auto& term : st.terms) {
            if (term.value == 0.0) {
                continue;
            }
            const double g = (1.0 - term.micro_weight) * sm.micro[term.micro] +
                             term.micro_weight * sm.micro[term.micro + 1];
            v += term.value * sm.macro[term.hat] * g;
        }
    }
    return v;
}

double MultiScaleFunction::eval(double t) const {
    check_time(t, basis_.horizon());
    if (transient_ && t < transient_->end_time) {
        const auto& tr = *transient_;
        const double s = std::max(0.0, snapped(t / tr.step));
        const auto k = std::min(static_cast<std::size_t>(std::floor(s)), tr.samples.size() - 2);
        const double w = s - static_cast<double>(k);
        return (1.0 - w) * tr.samples[k] + w * tr.samples[k + 1];
    }
    return eval_expansion(t);
}

double MultiScaleFunction::eval_derivative(double t) const {
    check_time(t, basis_.horizon());
    if (transient_ && t < transient_->end_time) {
        const auto& tr = *transient_;
        const double s = std::max(0.0, snapped(t / tr.step));
        const auto k = std::min(static_cast<std::size_t>(std::floor(s)), tr.samples.size() - 2);
        return (tr.samples[k + 1] - tr.samples[k]) / tr.step;
    }
    if (submodes_.empty()) {
        return 0.0;
    }
    const Stencil st = basis_.stencil(t);
    const double inv_dm = 1.0 / basis_.micro_step();
    double v = 0.0;
    for (const auto& sm : submodes_) {
        for (const auto& term : st.terms) {
            const double g0 = sm.micro[term.micro];
            const double g1 = sm.micro[term.micro + 1];
            const double g = (1.0 - term.micro_weight) * g0 + term.micro_weight * g1;
            const double dg = (g1 - g0) * inv_dm;  // d tau / dt = 1
            v += sm.macro[term.hat] * (term.slope * g + term.value * dg);
        }
    }
    return v;
}

DofCount dof_count(const MultiScaleBasis& basis, std::size_t n_submodes) {
    if (n_submodes == 0) {
        throw InvalidParameter("dof_count needs at least one submode");
    }
    DofCount d;
    d.macro = basis.n_macro() * n_submodes;
    d.micro = basis.n_micro() * n_submodes;
    d.total = d.macro + d.micro;
    return d;
}

double dof_reduction_percent(const DofCount& dofs, std::size_t n_single) {
    if (n_single == 0) {
        throw InvalidParameter("single-scale DOF count must be positive");
    }
    return 100.0 * (1.0 - static_cast<double>(dofs.total) / static_cast<double>(n_single));
}

Vector sample_on_grid(const MultiScaleFunction& f, const SingleScaleGrid& grid) {
    const double h = f.basis().horizon();
    if (std::abs(grid.horizon() - h) > 1e-12 * h) {
        throw DomainError("grid horizon does not match the multi-scale basis horizon");
    }
    Vector out(grid.size());
    for (std::size_t n = 0; n < grid.size(); ++n) {
        out[n] = f.eval(std::min(grid.node(n), h));
    }
    return out;
}

std::string serialize(const MultiScaleFunction& f) {
    nlohmann::json j;
    j["format"] = "vpgd-multiscale-function";
    j["version"] = 1;
    j["horizon"] = f.basis().horizon();
    j["n_macro"] = f.basis().n_macro();
    j["n_micro"] = f.basis().n_micro();
    auto subs = nlohmann::json::array();
    for (const auto& sm : f.submodes()) {
        subs.push_back({{"macro", sm.macro}, {"micro", sm.micro}});
    }
    j["submodes"] = subs;
    if (f.transient()) {
        j["transient"] = {{"end_time", f.transient()->end_time},
                          {"step", f.transient()->step},
                          {"samples", f.transient()->samples}};
    } else {
        j["transient"] = nullptr;
    }
    return j.dump(1);
}

MultiScaleFunction deserialize_multiscale(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("multi-scale record: ") + e.what(), 0);
    }
    try {
        if (j.at("format").get<std::string>() != "vpgd-multiscale-function") {
            throw ParseError("not a multi-scale function record", 0);
        }
        MultiScaleFunction f(MultiScaleBasis(j.at("horizon").get<double>(),
                                             j.at("n_macro").get<std::size_t>(),
                                             j.at("n_micro").get<std::size_t>()));
        for (const auto& sm : j.at("submodes")) {
            f.add_submode(sm.at("macro").get<Vector>(), sm.at("micro").get<Vector>());
        }
        if (!j.at("transient").is_null()) {
            const auto& tr = j.at("transient");
            f.set_transient({tr.at("end_time").get<double>(), tr.at("step").get<double>(),
                             tr.at("samples").get<Vector>()});
        }
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("multi-scale record: ") + e.what(), 0);
    }
}

}  // namespace vpgd
