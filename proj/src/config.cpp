#include "vpgd/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vpgd/errors.hpp"

namespace vpgd {

namespace {

using nlohmann::json;

/// Object view that records consumed keys so leftovers can be rejected.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ConfigError(path_ + ": expected an object");
        }
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    template <typename T>
    void read(const std::string& key, T& value) {
        if (!j_.contains(key)) {
            return;
        }
        used_.insert(key);
        const json& v = j_.at(key);
        try {
            if constexpr (std::is_same_v<T, std::size_t>) {
                if (!v.is_number_integer() || v.get<long long>() < 0) {
                    throw ConfigError(where(key) + ": expected a non-negative integer");
                }
            } else if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) {
                    throw ConfigError(where(key) + ": expected a number");
                }
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) {
                    throw ConfigError(where(key) + ": expected true or false");
                }
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) {
                    throw ConfigError(where(key) + ": expected a string");
                }
            }
            value = v.get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(where(key) + ": " + e.what());
        }
    }

    Section child(const std::string& key) {
        used_.insert(key);
        return Section(j_.at(key), where(key));
    }

    const json& raw(const std::string& key) {
        used_.insert(key);
        return j_.at(key);
    }

    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    /// Throws on keys that were never read.
    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!used_.count(k)) {
                throw ConfigError("unknown key '" + where(k) + "'");
            }
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

template <typename F>
auto wrap(const std::string& what, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(what + ": " + e.what());
    }
}

Table read_table(Section s) {
    Table t;
    const json& xs = s.raw("x");
    const json& vs = s.raw("values");
    s.finish();
    if (!xs.is_array() || !vs.is_array()) {
        throw ConfigError(s.where("x/values") + ": expected arrays");
    }
    for (const auto& v : xs) {
        if (!v.is_number()) throw ConfigError(s.where("x") + ": expected numbers");
        t.xs.push_back(v.get<double>());
    }
    for (const auto& v : vs) {
        if (!v.is_number()) throw ConfigError(s.where("values") + ": expected numbers");
        t.values.push_back(v.get<double>());
    }
    return t;
}

void read_problem(Section s, RunConfig& c) {
    auto& p = c.problem;
    s.read("length", p.length);
    s.read("horizon", p.horizon);
    s.read("area", p.material.area);
    s.read("vitreous_modulus", p.material.vitreous_modulus);
    s.read("relaxed_modulus", p.material.relaxed_modulus);
    std::string left = to_string(p.left);
    std::string right = to_string(p.right);
    s.read("bc_left", left);
    s.read("bc_right", right);
    wrap("problem.bc", [&] {
        p.left = parse_end_condition(left);
        p.right = parse_end_condition(right);
        return 0;
    });

    if (s.has("spectrum")) {
        Section sp = s.child("spectrum");
        if (sp.has("processes")) {
            const json& list = sp.raw("processes");
            if (sp.has("n_processes") || sp.has("n_decades") || sp.has("tau_max") || sp.has("total_weight")) {
                throw ConfigError("problem.spectrum: give either 'processes' or generator keys, not both");
            }
            sp.finish();
            if (!list.is_array()) {
                throw ConfigError("problem.spectrum.processes: expected an array");
            }
            std::vector<RelaxationProcess> procs;
            for (std::size_t j = 0; j < list.size(); ++j) {
                Section e(list[j], "problem.spectrum.processes[" + std::to_string(j) + "]");
                RelaxationProcess rp;
                rp.weight = -1.0;
                rp.tau = -1.0;
                e.read("tau", rp.tau);
                e.read("weight", rp.weight);
                e.finish();
                procs.push_back(rp);
            }
            c.spectrum_spec.generated = false;
            p.spectrum = wrap("problem.spectrum", [&] { return RelaxationSpectrum(std::move(procs)); });
        } else {
            auto& g = c.spectrum_spec;
            g.generated = true;
            sp.read("n_processes", g.n_processes);
            sp.read("n_decades", g.n_decades);
            sp.read("tau_max", g.tau_max);
            sp.read("total_weight", g.total_weight);
            sp.finish();
            p.spectrum = wrap("problem.spectrum", [&] {
                return build_spectrum(g.n_processes, g.n_decades, g.tau_max, g.total_weight);
            });
        }
    }

    if (s.has("load")) {
        Section l = s.child("load");
        auto& load = p.load;
        l.read("traction_left", load.traction_left);
        l.read("traction_right", load.traction_right);
        if (l.has("spatial")) {
            Section sx = l.child("spatial");
            std::string shape = to_string(load.spatial.shape);
            sx.read("shape", shape);
            sx.read("amplitude", load.spatial.amplitude);
            if (sx.has("table")) load.spatial.table = read_table(sx.child("table"));
            sx.finish();
            load.spatial.shape = wrap("problem.load.spatial.shape", [&] { return parse_spatial_shape(shape); });
        }
        if (l.has("temporal")) {
            Section st = l.child("temporal");
            std::string shape = to_string(load.temporal.shape);
            st.read("shape", shape);
            st.read("amplitude", load.temporal.amplitude);
            st.read("frequency", load.temporal.frequency);
            st.read("offset", load.temporal.offset);
            if (st.has("table")) load.temporal.table = read_table(st.child("table"));
            st.finish();
            load.temporal.shape = wrap("problem.load.temporal.shape", [&] { return parse_temporal_shape(shape); });
        }
        l.finish();
    }
    s.finish();
}

void read_solver(Section s, PgdSettings& p) {
    std::string mode = to_string(p.time_mode);
    s.read("time_mode", mode);
    p.time_mode = wrap("solver.time_mode", [&] { return parse_time_mode(mode); });
    s.read("u_mode_tol", p.u_mode_tol);
    s.read("z_mode_tol", p.z_mode_tol);
    s.read("outer_tol", p.outer_tol);
    s.read("max_outer", p.max_outer);
    s.read("max_u_modes", p.max_u_modes);
    s.read("max_z_modes_per_iter", p.max_z_modes_per_iter);
    s.read("als_tol", p.als_tol);
    s.read("als_max_iters", p.als_max_iters);
    if (s.has("fit")) {
        Section f = s.child("fit");
        f.read("max_submodes", p.fit.max_submodes);
        f.read("target_rel_error", p.fit.target_rel_error);
        f.read("als_max_iters", p.fit.als_max_iters);
        f.read("als_stagnation_tol", p.fit.als_stagnation_tol);
        f.read("transient_macro_elements", p.fit.transient_macro_elements);
        f.read("joint_refine_iters", p.fit.joint_refine_iters);
        f.finish();
    }
    s.finish();
}

json table_json(const Table& t) {
    return json{{"x", t.xs}, {"values", t.values}};
}

}  // namespace

RunConfig default_config() {
    RunConfig c;
    c.problem = single_process_problem();
    return c;
}

void RunConfig::validate() const {
    wrap("problem", [&] {
        problem.validate();
        return 0;
    });
    wrap("solver", [&] {
        solver.validate();
        return 0;
    });
    const auto& d = discretization;
    if (d.n_x < 2) throw ConfigError("discretization.n_x must be at least 2");
    if (d.n_t < 2) throw ConfigError("discretization.n_t must be at least 2");
    if (d.n_macro < 2 || d.n_micro < 2) {
        throw ConfigError("discretization.n_macro and n_micro must be at least 2");
    }
    const auto& tt = problem.load.temporal;
    if (tt.shape == TemporalShape::Table && !tt.table.covers(0.0, problem.horizon)) {
        throw ConfigError("problem.load.temporal.table must cover [0, horizon]");
    }
    const auto& sx = problem.load.spatial;
    if (sx.shape == SpatialShape::Table && !sx.table.covers(0.0, problem.length)) {
        throw ConfigError("problem.load.spatial.table must cover [0, length]");
    }
    for (double x : output.probes_x) {
        if (!(x >= 0.0 && x <= problem.length)) {
            throw ConfigError("output.probes_x entries must lie in [0, length]");
        }
    }
    if (output.directory.empty()) {
        throw ConfigError("output.directory must not be empty");
    }
}

Mesh1D RunConfig::mesh() const { return Mesh1D::uniform(problem.length, discretization.n_x); }

SingleScaleGrid RunConfig::grid() const { return SingleScaleGrid(problem.horizon, discretization.n_t); }

std::vector<double> RunConfig::probes() const {
    return output.probes_x.empty() ? std::vector<double>{0.5 * problem.length} : output.probes_x;
}

RunConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    RunConfig c = default_config();
    Section s(root, "");
    if (s.has("problem")) read_problem(s.child("problem"), c);
    if (s.has("discretization")) {
        Section d = s.child("discretization");
        d.read("n_x", c.discretization.n_x);
        d.read("n_t", c.discretization.n_t);
        d.read("n_macro", c.discretization.n_macro);
        d.read("n_micro", c.discretization.n_micro);
        d.finish();
    }
    if (s.has("solver")) read_solver(s.child("solver"), c.solver);
    if (s.has("output")) {
        Section o = s.child("output");
        std::string dir = c.output.directory.string();
        o.read("directory", dir);
        c.output.directory = dir;
        if (o.has("probes_x")) {
            const json& arr = o.raw("probes_x");
            if (!arr.is_array()) throw ConfigError("output.probes_x: expected an array");
            for (const auto& v : arr) {
                if (!v.is_number()) throw ConfigError("output.probes_x: expected numbers");
                c.output.probes_x.push_back(v.get<double>());
            }
        }
        o.read("write_internal_fields", c.output.write_internal_fields);
        o.finish();
    }
    s.finish();
    c.solver.n_macro = c.discretization.n_macro;
    c.solver.n_micro = c.discretization.n_micro;
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const RunConfig& c) {
    const auto& p = c.problem;
    json spectrum;
    if (c.spectrum_spec.generated) {
        spectrum = {{"n_processes", c.spectrum_spec.n_processes},
                    {"n_decades", c.spectrum_spec.n_decades},
                    {"tau_max", c.spectrum_spec.tau_max},
                    {"total_weight", c.spectrum_spec.total_weight}};
    } else {
        json list = json::array();
        for (const auto& rp : p.spectrum.processes()) {
            list.push_back({{"tau", rp.tau}, {"weight", rp.weight}});
        }
        spectrum = {{"processes", list}};
    }
    json spatial = {{"shape", to_string(p.load.spatial.shape)}, {"amplitude", p.load.spatial.amplitude}};
    if (p.load.spatial.shape == SpatialShape::Table) spatial["table"] = table_json(p.load.spatial.table);
    json temporal = {{"shape", to_string(p.load.temporal.shape)},
                     {"amplitude", p.load.temporal.amplitude},
                     {"frequency", p.load.temporal.frequency},
                     {"offset", p.load.temporal.offset}};
    if (p.load.temporal.shape == TemporalShape::Table) temporal["table"] = table_json(p.load.temporal.table);
    const auto& s = c.solver;
    json root = {
        {"problem",
         {{"length", p.length},
          {"horizon", p.horizon},
          {"area", p.material.area},
          {"vitreous_modulus", p.material.vitreous_modulus},
          {"relaxed_modulus", p.material.relaxed_modulus},
          {"bc_left", to_string(p.left)},
          {"bc_right", to_string(p.right)},
          {"spectrum", spectrum},
          {"load",
           {{"spatial", spatial},
            {"temporal", temporal},
            {"traction_left", p.load.traction_left},
            {"traction_right", p.load.traction_right}}}}},
        {"discretization",
         {{"n_x", c.discretization.n_x},
          {"n_t", c.discretization.n_t},
          {"n_macro", c.discretization.n_macro},
          {"n_micro", c.discretization.n_micro}}},
        {"solver",
         {{"time_mode", to_string(s.time_mode)},
          {"u_mode_tol", s.u_mode_tol},
          {"z_mode_tol", s.z_mode_tol},
          {"outer_tol", s.outer_tol},
          {"max_outer", s.max_outer},
          {"max_u_modes", s.max_u_modes},
          {"max_z_modes_per_iter", s.max_z_modes_per_iter},
          {"als_tol", s.als_tol},
          {"als_max_iters", s.als_max_iters},
          {"fit",
           {{"max_submodes", s.fit.max_submodes},
            {"target_rel_error", s.fit.target_rel_error},
            {"als_max_iters", s.fit.als_max_iters},
            {"als_stagnation_tol", s.fit.als_stagnation_tol},
            {"transient_macro_elements", s.fit.transient_macro_elements},
            {"joint_refine_iters", s.fit.joint_refine_iters}}}}},
        {"output",
         {{"directory", c.output.directory.string()},
          {"probes_x", c.probes()},
          {"write_internal_fields", c.output.write_internal_fields}}}};
    return root.dump(2) + "\n";
}

}  // namespace vpgd
