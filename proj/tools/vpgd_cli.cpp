#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vpgd/commands.hpp"
#include "vpgd/errors.hpp"

namespace {

struct Options {
    std::string config;
    std::string out;
    std::string time_mode;
};

vpgd::RunConfig resolve(const Options& o) {
    vpgd::RunConfig c = o.config.empty() ? vpgd::default_config() : vpgd::load_config(o.config);
    if (!o.time_mode.empty()) {
        c.solver.time_mode = vpgd::parse_time_mode(o.time_mode);
    }
    if (!o.out.empty()) {
        c.output.directory = o.out;
    }
    c.validate();
    return c;
}

void add_common(CLI::App* cmd, Options& o, bool config_required) {
    auto* opt = cmd->add_option("--config", o.config, "JSON run configuration");
    if (config_required) {
        opt->required();
    }
    cmd->add_option("--out", o.out, "output directory (overrides output.directory)");
    cmd->add_option("--time-mode", o.time_mode, "single|multiscale (overrides solver.time_mode)")
        ->check(CLI::IsMember({"single", "multiscale"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Space-time PGD solver for a 1D viscoelastic bar"};
    app.require_subcommand(1);
    Options o;
    std::string signal;
    std::string run_a;
    std::string run_b;

    auto* ref = app.add_subcommand("solve-reference", "full-order backward-Euler solve");
    add_common(ref, o, true);
    auto* pgd = app.add_subcommand("solve-pgd", "space-time PGD solve");
    add_common(pgd, o, true);
    auto* fit = app.add_subcommand("fit-signal", "multi-scale fit of a sampled signal");
    add_common(fit, o, false);
    fit->add_option("--signal", signal, "CSV with columns t,value")->required();
    auto* cmp = app.add_subcommand("compare", "relative error of run A against run B");
    add_common(cmp, o, false);
    cmp->add_option("--a", run_a, "candidate run directory")->required();
    cmp->add_option("--b", run_b, "reference run directory")->required();
    auto* bench = app.add_subcommand("bench", "time oracle, single-scale and multi-scale PGD");
    add_common(bench, o, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : vpgd::kExitConfig;
    }

    return vpgd::run_guarded(
        [&]() -> int {
            if (*cmp) {
                if (o.out.empty()) {
                    throw vpgd::ConfigError("compare needs --out");
                }
                return vpgd::cmd_compare(run_a, run_b, o.out);
            }
            const vpgd::RunConfig c = resolve(o);
            const auto out = c.output.directory;
            if (*ref) return vpgd::cmd_solve_reference(c, out);
            if (*pgd) return vpgd::cmd_solve_pgd(c, out);
            if (*fit) return vpgd::cmd_fit_signal(signal, c, out);
            return vpgd::cmd_bench(c, out);
        },
        std::cerr);
}
