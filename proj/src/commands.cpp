#include "vpgd/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "vpgd/csv.hpp"
#include "vpgd/errors.hpp"
#include "vpgd/multiscale_fit.hpp"
#include "vpgd/oracle.hpp"

namespace vpgd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void prepare_dir(const fs::path& out) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) {
        throw ConfigError("cannot create output directory " + out.string());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f || !(f << text)) {
        throw ConfigError("cannot write " + path.string());
    }
}

json read_json(const fs::path& path) {
    std::ifstream f(path);
    if (!f) {
        throw ConfigError("cannot read " + path.string());
    }
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_manifest(const fs::path& out, const std::string& command, const RunConfig& config) {
    json m = {{"command", command}, {"config", json::parse(config_to_json(config))}};
    write_text(out / "manifest.json", m.dump(2) + "\n");
}

std::size_t element_at(const Mesh1D& mesh, double x) {
    const auto& nodes = mesh.nodes();
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
    const std::size_t e = it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
    return std::min(e, mesh.n_elements() - 1);
}

std::vector<double> time_column(const SingleScaleGrid& grid) {
    return grid.nodes();
}

std::string probe_suffix(std::size_t k) {
    return k == 0 ? std::string{} : "_" + std::to_string(k);
}

/// traces.csv (t, u_mid, sigma_mid, z_j_mid) and u_mid.csv per probe.
void write_traces(const fs::path& out, const Mesh1D& mesh, const SingleScaleGrid& grid,
                  const std::vector<double>& probes, const SpaceTimeField& u, const SpaceTimeField& sigma,
                  const std::vector<SpaceTimeField>& z) {
    for (std::size_t k = 0; k < probes.size(); ++k) {
        const double x = probes[k];
        const std::size_t e = element_at(mesh, x);
        Vector um(grid.size());
        for (std::size_t n = 0; n < grid.size(); ++n) {
            um[n] = mesh.interpolate(u.at_time(n), x);
        }
        CsvTable t;
        t.header = {"t", "u_mid", "sigma_mid"};
        t.columns = {time_column(grid), um, sigma.trace(e)};
        for (std::size_t j = 0; j < z.size(); ++j) {
            t.header.push_back("z_" + std::to_string(j + 1) + "_mid");
            t.columns.push_back(z[j].trace(e));
        }
        write_csv(out / ("traces" + probe_suffix(k) + ".csv"), t);
        write_csv(out / ("u_mid" + probe_suffix(k) + ".csv"), CsvTable{{"t", "u_mid"}, {time_column(grid), um}});
    }
}

/// One row per time node: t followed by every spatial entry.
void write_field(const fs::path& path, const SingleScaleGrid& grid, const SpaceTimeField& f,
                 const std::string& prefix) {
    CsvTable t;
    t.header.push_back("t");
    t.columns.push_back(time_column(grid));
    for (std::size_t a = 0; a < f.n_space(); ++a) {
        t.header.push_back(prefix + std::to_string(a));
        t.columns.push_back(f.trace(a));
    }
    write_csv(path, t);
}

void write_fields(const fs::path& out, const RunConfig& config, const SingleScaleGrid& grid,
                  const SpaceTimeField& u, const std::vector<SpaceTimeField>& z) {
    write_field(out / "u_field.csv", grid, u, "u_");
    if (config.output.write_internal_fields) {
        for (std::size_t j = 0; j < z.size(); ++j) {
            write_field(out / ("z_field_" + std::to_string(j + 1) + ".csv"), grid, z[j], "z_");
        }
    }
}

json nullable(double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
}

json report_json(const SolveReport& r) {
    json eps_u = json::array();
    for (const auto& it : r.eps_u_history) {
        json row = json::array();
        for (double v : it) row.push_back(nullable(v));
        eps_u.push_back(row);
    }
    json eps_z = json::array();
    for (double v : r.eps_z_last) eps_z.push_back(nullable(v));
    std::size_t met = 0;
    for (bool b : r.z_criterion_met) met += b ? 1 : 0;
    return {{"time_mode", to_string(r.time_mode)},
            {"converged", r.converged},
            {"stop_reason", r.stop_reason},
            {"outer_iterations", r.outer_iterations},
            {"final_stagnation_percent", r.stagnation.empty() ? json(nullptr) : json(r.stagnation.back())},
            {"u_modes", r.u_modes},
            {"z_modes", r.z_modes},
            {"eps_u_history_percent", eps_u},
            {"eps_z_last_percent", eps_z},
            {"z_criteria_met", met},
            {"z_criterion_met", r.z_criterion_met},
            {"temporal_dofs",
             {{"single_scale_per_mode", r.single_scale_dofs},
              {"multiscale_per_submode", r.multiscale_dofs_per_submode},
              {"reduction_percent", r.dof_reduction_percent},
              {"mean_submodes_per_mode", r.mean_submodes}}},
            {"first_internal_mode_fit_error_percent", nullable(r.first_z_fit_error_percent)},
            {"seconds",
             {{"total", r.seconds_total},
              {"displacement", r.seconds_displacement},
              {"internal_variables", r.seconds_internal}}}};
}

void write_mode_files(const fs::path& out, const RunConfig& config, const Mesh1D& mesh,
                      const SingleScaleGrid& grid, const SolverState& state) {
    CsvTable ut{{"t"}, {time_column(grid)}};
    CsvTable us{{"x"}, {mesh.nodes()}};
    json ms = json::array();
    for (std::size_t i = 0; i < state.u.rank(); ++i) {
        ut.header.push_back("lambda_" + std::to_string(i + 1));
        ut.columns.push_back(state.u.temporal[i].samples);
        us.header.push_back("u_bar_" + std::to_string(i + 1));
        us.columns.push_back(state.u.spatial[i]);
        if (state.u.temporal[i].multiscale) {
            ms.push_back(json::parse(serialize(*state.u.temporal[i].multiscale)));
        }
    }
    write_csv(out / "u_modes_temporal.csv", ut);
    write_csv(out / "u_modes_spatial.csv", us);
    if (!ms.empty()) {
        write_text(out / "u_modes_multiscale.json", ms.dump(1) + "\n");
    }
    if (!config.output.write_internal_fields) {
        return;
    }
    for (std::size_t j = 0; j < state.z.size(); ++j) {
        CsvTable zt{{"t"}, {time_column(grid)}};
        for (std::size_t i = 0; i < state.z[j].rank(); ++i) {
            zt.header.push_back("phi_" + std::to_string(i + 1));
            zt.columns.push_back(state.z[j].temporal[i].samples);
        }
        write_csv(out / ("z_modes_temporal_" + std::to_string(j + 1) + ".csv"), zt);
    }
}

double interpolate_time(const SingleScaleGrid& from, std::span<const double> values, double t) {
    const double s = std::clamp(t / from.step(), 0.0, static_cast<double>(from.size() - 1));
    const std::size_t n = std::min(static_cast<std::size_t>(s), from.size() - 2);
    const double w = s - static_cast<double>(n);
    return (1.0 - w) * values[n] + w * values[n + 1];
}

/// Field sampled on (grid_a, mesh_a) from a field on (grid_b, mesh_b); linear in time and space.
SpaceTimeField resample(const SpaceTimeField& f, const SingleScaleGrid& grid_b, const Mesh1D& mesh_b,
                        const SingleScaleGrid& grid_a, const Mesh1D& mesh_a, FieldLocation where) {
    const bool nodes = where == FieldLocation::Nodes;
    const std::size_t ns_a = nodes ? mesh_a.n_nodes() : mesh_a.n_elements();
    const bool same_t = grid_a.size() == grid_b.size();
    const bool same_x = mesh_a.n_nodes() == mesh_b.n_nodes();
    if (same_t && same_x) {
        return f;
    }
    SpaceTimeField out(grid_a.size(), ns_a);
    Vector centers_b(mesh_b.n_elements());
    for (std::size_t e = 0; e < centers_b.size(); ++e) {
        centers_b[e] = 0.5 * (mesh_b.node(e) + mesh_b.node(e + 1));
    }
    for (std::size_t n = 0; n < grid_a.size(); ++n) {
        const double t = grid_a.node(n);
        Vector row(f.n_space());
        for (std::size_t a = 0; a < f.n_space(); ++a) {
            row[a] = same_t ? f(n, a) : interpolate_time(grid_b, f.trace(a), t);
        }
        for (std::size_t a = 0; a < ns_a; ++a) {
            if (nodes) {
                out(n, a) = same_x ? row[a] : mesh_b.interpolate(row, mesh_a.node(a));
            } else {
                out(n, a) = same_x ? row[a] : row[element_at(mesh_b, 0.5 * (mesh_a.node(a) + mesh_a.node(a + 1)))];
            }
        }
    }
    return out;
}

SpaceTimeField read_field(const fs::path& path, std::size_t n_t, std::size_t n_s) {
    const CsvTable t = read_csv(path);
    if (t.n_rows() != n_t || t.columns.size() != n_s + 1) {
        throw ConfigError(path.string() + ": dimensions disagree with the run manifest");
    }
    SpaceTimeField f(n_t, n_s);
    for (std::size_t a = 0; a < n_s; ++a) {
        for (std::size_t n = 0; n < n_t; ++n) {
            f(n, a) = t.columns[a + 1][n];
        }
    }
    return f;
}

RunConfig config_of_run(const fs::path& dir) {
    const json m = read_json(dir / "manifest.json");
    if (!m.contains("config")) {
        throw ConfigError((dir / "manifest.json").string() + ": no config entry");
    }
    return parse_config(m.at("config").dump());
}

}  // namespace

int cmd_solve_reference(const RunConfig& config, const fs::path& out) {
    config.validate();
    prepare_dir(out);
    write_manifest(out, "solve-reference", config);
    const Mesh1D mesh = config.mesh();
    const SingleScaleGrid grid = config.grid();
    const auto t0 = Clock::now();
    const FullOrderSolution sol = solve_full_order(config.problem, mesh, grid);
    const double secs = seconds_since(t0);
    for (const auto& w : sol.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    write_traces(out, mesh, grid, config.probes(), sol.u, sol.sigma, sol.z);
    write_fields(out, config, grid, sol.u, sol.z);
    double resid = 0.0;
    for (std::size_t n = 1; n < grid.size(); ++n) {
        resid = std::max(resid, equilibrium_residual(sol, config.problem, mesh, grid, n));
    }
    json report = {{"solver", "full-order backward Euler"},
                   {"time_steps", grid.size() - 1},
                   {"temporal_dofs", grid.size()},
                   {"max_equilibrium_residual", resid},
                   {"warnings", sol.warnings},
                   {"seconds", secs}};
    write_text(out / "report.json", report.dump(2) + "\n");
    return kExitOk;
}

int cmd_solve_pgd(const RunConfig& config, const fs::path& out) {
    config.validate();
    prepare_dir(out);
    write_manifest(out, "solve-pgd", config);
    const Mesh1D mesh = config.mesh();
    const SingleScaleGrid grid = config.grid();
    const PgdResult res = outer_fixed_point(config.problem, mesh, grid, config.solver);
    const PgdContext ctx(config.problem, mesh, grid, config.solver);
    const SpaceTimeField u = reconstruct(res.state.u, mesh, grid);
    const SpaceTimeField sigma = reconstruct_stress(res.state, ctx);
    std::vector<SpaceTimeField> z;
    for (const auto& zj : res.state.z) {
        z.push_back(reconstruct(zj, mesh, grid));
    }
    write_traces(out, mesh, grid, config.probes(), u, sigma, z);
    write_fields(out, config, grid, u, z);
    write_mode_files(out, config, mesh, grid, res.state);

    CsvTable stag{{"outer_iter", "stagnation_percent"}, {{}, res.report.stagnation}};
    for (std::size_t k = 0; k < res.report.stagnation.size(); ++k) {
        stag.columns[0].push_back(static_cast<double>(k + 1));
    }
    write_csv(out / "stagnation.csv", stag);
    if (!res.report.first_z_reference.empty()) {
        write_csv(out / "first_z_mode.csv",
                  CsvTable{{"t", "single_scale", "multiscale"},
                           {time_column(grid), res.report.first_z_reference, res.report.first_z_multiscale}});
    }
    write_text(out / "report.json", report_json(res.report).dump(2) + "\n");
    if (!res.report.converged) {
        std::cerr << "PGD did not converge: " << res.report.stop_reason << "\n";
        return kExitNotConverged;
    }
    return kExitOk;
}

int cmd_fit_signal(const fs::path& signal, const RunConfig& config, const fs::path& out) {
    const CsvTable table = read_csv(signal);
    if (table.columns.size() < 2) {
        throw ParseError("expected two columns (time, value), found " + std::to_string(table.columns.size()), 1);
    }
    const auto& t = table.columns[0];
    const auto& s = table.columns[1];
    if (t.size() < 3) {
        throw ParseError("need at least three samples", 2);
    }
    if (t.front() != 0.0) {
        throw ParseError("time column must start at 0", 2);
    }
    const double horizon = t.back();
    const double dt = horizon / static_cast<double>(t.size() - 1);
    for (std::size_t n = 0; n < t.size(); ++n) {
        if (std::abs(t[n] - dt * static_cast<double>(n)) > 1e-9 * horizon) {
            throw ParseError("time column is not uniformly spaced", n + 2);
        }
    }
    config.validate();
    prepare_dir(out);
    write_manifest(out, "fit-signal", config);
    const SingleScaleGrid grid(horizon, t.size());
    const MultiScaleBasis basis(horizon, config.discretization.n_macro, config.discretization.n_micro);
    const auto t0 = Clock::now();
    const FitResult fit = fit_signal(s, grid, basis, config.solver.fit);
    const double secs = seconds_since(t0);

    write_csv(out / "fit_reconstruction.csv", CsvTable{{"t", "signal", "fit"}, {grid.nodes(), s, fit.samples}});
    CsvTable hist{{"submode", "rel_error_percent"}, {{}, fit.history}};
    for (std::size_t k = 0; k < fit.history.size(); ++k) {
        hist.columns[0].push_back(static_cast<double>(k + 1));
    }
    write_csv(out / "fit_history.csv", hist);
    write_text(out / "fit_function.json", serialize(fit.function) + "\n");
    const std::size_t m = fit.function.n_submodes();
    const bool met = fit.rel_error_percent <= config.solver.fit.target_rel_error;
    json report = {{"rel_error_percent", fit.rel_error_percent},
                   {"target_rel_error_percent", config.solver.fit.target_rel_error},
                   {"target_met", met},
                   {"submodes", m},
                   {"single_scale_dofs", grid.size()},
                   {"multiscale_dofs", m > 0 ? dof_count(basis, m).total : 0},
                   {"seconds", secs}};
    write_text(out / "report.json", report.dump(2) + "\n");
    if (!met) {
        std::cerr << "fit did not reach the target error\n";
        return kExitNotConverged;
    }
    return kExitOk;
}

int cmd_compare(const fs::path& run_a, const fs::path& run_b, const fs::path& out) {
    const RunConfig ca = config_of_run(run_a);
    const RunConfig cb = config_of_run(run_b);
    const double ta = ca.problem.horizon;
    const double tb = cb.problem.horizon;
    if (std::abs(ta - tb) > 1e-12 * std::max(ta, tb)) {
        throw ConfigError("runs have incompatible horizons (" + format_number(ta) + " vs " + format_number(tb) + ")");
    }
    const double la = ca.problem.length;
    const double lb = cb.problem.length;
    if (std::abs(la - lb) > 1e-12 * std::max(la, lb)) {
        throw ConfigError("runs have incompatible bar lengths");
    }
    prepare_dir(out);
    const Mesh1D mesh_a = ca.mesh();
    const Mesh1D mesh_b = cb.mesh();
    const SingleScaleGrid grid_a = ca.grid();
    const SingleScaleGrid grid_b = cb.grid();

    CsvTable summary{{"field", "rel_error_percent"}, {{}, {}}};
    json j = {{"run_a", run_a.string()}, {"run_b", run_b.string()}};
    const SpaceTimeField ua = read_field(run_a / "u_field.csv", grid_a.size(), mesh_a.n_nodes());
    const SpaceTimeField ub = resample(read_field(run_b / "u_field.csv", grid_b.size(), mesh_b.n_nodes()), grid_b,
                                       mesh_b, grid_a, mesh_a, FieldLocation::Nodes);
    const double eu = relative_error(ua, ub, mesh_a, grid_a, FieldLocation::Nodes);
    summary.columns[0].push_back(0.0);
    summary.columns[1].push_back(eu);
    j["u_rel_error_percent"] = eu;

    json ez = json::array();
    const std::size_t n_z = std::min(ca.problem.spectrum.size(), cb.problem.spectrum.size());
    for (std::size_t k = 0; k < n_z; ++k) {
        const std::string name = "z_field_" + std::to_string(k + 1) + ".csv";
        if (!fs::exists(run_a / name) || !fs::exists(run_b / name)) {
            continue;
        }
        const SpaceTimeField za = read_field(run_a / name, grid_a.size(), mesh_a.n_elements());
        const SpaceTimeField zb = resample(read_field(run_b / name, grid_b.size(), mesh_b.n_elements()), grid_b,
                                           mesh_b, grid_a, mesh_a, FieldLocation::Elements);
        const double e = relative_error(za, zb, mesh_a, grid_a, FieldLocation::Elements);
        summary.columns[0].push_back(static_cast<double>(k + 1));
        summary.columns[1].push_back(e);
        ez.push_back({{"process", k + 1}, {"rel_error_percent", e}});
    }
    j["z_rel_error_percent"] = ez;
    summary.header[0] = "field_index";
    write_csv(out / "compare.csv", summary);
    write_text(out / "compare.json", j.dump(2) + "\n");
    return kExitOk;
}

int cmd_bench(const RunConfig& config, const fs::path& out) {
    config.validate();
    prepare_dir(out);
    write_manifest(out, "bench", config);
    const Mesh1D mesh = config.mesh();
    const SingleScaleGrid grid = config.grid();

    auto t0 = Clock::now();
    const FullOrderSolution ref = solve_full_order(config.problem, mesh, grid);
    const double t_ref = seconds_since(t0);

    struct Row {
        std::string solver;
        double seconds;
        std::size_t dofs;
        std::size_t u_modes;
        std::size_t z_modes;
        std::size_t outer;
        bool converged;
        double error;
    };
    std::vector<Row> rows{{"oracle", t_ref, grid.size(), 0, 0, 0, true, 0.0}};
    bool all_converged = true;
    for (TimeMode mode : {TimeMode::SingleScale, TimeMode::MultiScale}) {
        PgdSettings s = config.solver;
        s.time_mode = mode;
        t0 = Clock::now();
        const PgdResult r = outer_fixed_point(config.problem, mesh, grid, s);
        const double secs = seconds_since(t0);
        const SpaceTimeField u = reconstruct(r.state.u, mesh, grid);
        std::size_t zm = 0;
        for (auto m : r.report.z_modes) zm += m;
        const double err = relative_error(u, ref.u, mesh, grid, FieldLocation::Nodes);
        const std::size_t dofs = mode == TimeMode::SingleScale ? r.report.single_scale_dofs
                                                               : r.report.multiscale_dofs_per_submode;
        rows.push_back({"pgd-" + to_string(mode), secs, dofs, r.report.u_modes, zm, r.report.outer_iterations,
                        r.report.converged, err});
        all_converged = all_converged && r.report.converged;
    }

    std::ostringstream csv;
    csv << "solver,wall_seconds,temporal_dofs_per_mode,u_modes,z_modes_total,outer_iterations,converged,"
           "rel_error_u_vs_oracle_percent\n";
    json j = json::array();
    for (const auto& r : rows) {
        csv << r.solver << ',' << format_number(r.seconds) << ',' << r.dofs << ',' << r.u_modes << ','
            << r.z_modes << ',' << r.outer << ',' << (r.converged ? 1 : 0) << ',' << format_number(r.error) << '\n';
        j.push_back({{"solver", r.solver},
                     {"wall_seconds", r.seconds},
                     {"temporal_dofs_per_mode", r.dofs},
                     {"u_modes", r.u_modes},
                     {"z_modes_total", r.z_modes},
                     {"outer_iterations", r.outer},
                     {"converged", r.converged},
                     {"rel_error_u_vs_oracle_percent", r.error}});
    }
    write_text(out / "bench.csv", csv.str());
    write_text(out / "bench.json", j.dump(2) + "\n");
    return all_converged ? kExitOk : kExitNotConverged;
}

int run_guarded(const std::function<int()>& body, std::ostream& err) {
    try {
        return body();
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericalFailure& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNotConverged;
    } catch (const Error& e) {
        // invalid parameters, singular constrained systems, shape and domain errors
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace vpgd
