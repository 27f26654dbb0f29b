// Command-line front end: parses flags (optionally on top of a JSON config),
// runs one subcommand and writes the JSON report and optional CSV.

#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kse/app.hpp"

namespace {

using kse::app::RunConfig;

/// Flag values land in `flags`; only flags given explicitly override the base config.
struct Overrides {
    RunConfig flags;
    std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> setters;

    template <typename T>
    void add(CLI::App* app, const std::string& name, T RunConfig::*field, const std::string& help) {
        auto* opt = app->add_option(name, flags.*field, help);
        setters.emplace_back(opt, [this, field](RunConfig& c) { c.*field = flags.*field; });
    }

    template <typename T>
    void add_energy(CLI::App* app, const std::string& name, T kse::EnergyConfig::*field, const std::string& help) {
        auto* opt = app->add_option(name, flags.energy.*field, help);
        setters.emplace_back(opt, [this, field](RunConfig& c) { c.energy.*field = flags.energy.*field; });
    }

    void add_switch(CLI::App* app, const std::string& name, std::function<void(RunConfig&)> apply,
                    const std::string& help) {
        setters.emplace_back(app->add_flag(name, help), std::move(apply));
    }

    void apply(RunConfig& c) const {
        for (const auto& [opt, set] : setters)
            if (opt->count() > 0) set(c);
    }
};

void add_problem_options(CLI::App* sub, Overrides& o) {
    o.add(sub, "--space", &RunConfig::space, "euclidean:M | max_norm_plane | circle | q:Q:M");
    o.add(sub, "--map", &RunConfig::map, "identity | constant[:c,..] | linear:a11,a12;a21,a22 | winding:k | qsplit");
    o.add(sub, "--lower", &RunConfig::lower, "domain lower corner");
    o.add(sub, "--upper", &RunConfig::upper, "domain upper corner");
    o.add(sub, "--resolution", &RunConfig::resolution, "nodes per axis (one value is broadcast)");
    o.add_energy(sub, "--p", &kse::EnergyConfig::p, "energy exponent p >= 1");
}

void add_energy_options(CLI::App* sub, Overrides& o) {
    o.add_energy(sub, "--h0", &kse::EnergyConfig::h0, "localization radius");
    o.add_energy(sub, "--h-count", &kse::EnergyConfig::h_count, "length of the sequence h0/2^j");
    o.add_energy(sub, "--h-sequence", &kse::EnergyConfig::h_sequence, "explicit decreasing h values");
    o.add_energy(sub, "--ball-order", &kse::EnergyConfig::ball_radial_order, "radial Gauss-Legendre order");
    o.add_energy(sub, "--sphere-order", &kse::EnergyConfig::sphere_order, "sphere rule order(s)");
    o.add_energy(sub, "--K", &kse::EnergyConfig::dense_truncation, "dense anchor truncation");
    o.add_energy(sub, "--delta", &kse::EnergyConfig::delta, "finite-difference step (0: spacing/8)");
    o.add_switch(sub, "--no-accelerate", [](RunConfig& c) { c.energy.accelerate = false; }, "dense anchors only");
    o.add_switch(sub, "--no-truncation-check", [](RunConfig& c) { c.energy.truncation_check = false; },
                 "skip the 2K recomputation");
}

bool write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return true;
    }
    std::ofstream out(path);
    out << text;
    return static_cast<bool>(out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Korevaar-Schoen p-energy: difference quotients vs directional derivatives"};
    app.require_subcommand(0, 1);
    app.fallthrough();

    Overrides o;
    std::string config_path, out_path, csv_path;
    std::size_t workers = 1;
    app.add_option("--config", config_path, "JSON config file (or a previous report)");
    app.add_option("--workers", workers, "worker threads (results do not depend on it)");
    app.add_option("--out", out_path, "JSON report path (default stdout)");
    app.add_option("--csv", csv_path, "CSV output path");
    o.add_energy(&app, "--seed", &kse::EnergyConfig::seed, "seed for randomized rules");
    o.add_switch(&app, "--strict", [](RunConfig& c) { c.strict = true; }, "exit 3 when warnings are emitted");

    auto* ks = app.add_subcommand("ks-energy", "difference-quotient energy on Omega_h0");
    auto* rep = app.add_subcommand("rep-energy", "directional-derivative energy");
    auto* cmp = app.add_subcommand("compare", "both energies with error diagnostics");
    auto* cex = app.add_subcommand("counterexample", "frame sum vs sphere average in the max-norm plane");
    cex->alias("frame-vs-sphere");
    auto* conv = app.add_subcommand("convergence", "sweeps in h, K, sphere order and delta");
    auto* orc = app.add_subcommand("oracle", "reference constants by brute force");

    for (auto* sub : {ks, rep, cmp, cex, conv}) {
        add_problem_options(sub, o);
        add_energy_options(sub, o);
    }
    for (auto* sub : {rep, cmp}) o.add(sub, "--form", &RunConfig::form, "sphere | ball | both");
    o.add_switch(cmp, "--no-fd-check", [](RunConfig& c) { c.fd_check = false; }, "skip the delta/2 rerun");
    o.add(orc, "--matrix", &RunConfig::matrix, "row-major matrix a11,a12;a21,a22");
    o.add(orc, "--lower", &RunConfig::lower, "sets the domain dimension");
    o.add_energy(orc, "--p", &kse::EnergyConfig::p, "energy exponent p >= 1");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kse::app::config_error;
    }

    RunConfig cfg;
    if (!config_path.empty()) {
        try {
            cfg = kse::app::load_config_file(config_path);
        } catch (const kse::Error& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kse::app::config_error;
        }
    }
    o.apply(cfg);
    // without a subcommand the config file supplies the command
    if (!app.get_subcommands().empty()) {
        cfg.command = app.get_subcommands().front()->get_name();
    } else if (config_path.empty()) {
        std::cerr << "error: a subcommand is required (or a --config that names one)\n";
        return kse::app::config_error;
    }
    cfg.energy.workers = workers == 0 ? 1 : workers;

    const auto outcome = kse::app::run(cfg);
    if (outcome.report.contains("error"))
        std::cerr << "error: " << outcome.report["error"]["message"].get<std::string>() << '\n';
    for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << '\n';

    if (!write_text(out_path, outcome.report.dump(2) + "\n")) {
        std::cerr << "error: cannot write " << out_path << '\n';
        return kse::app::failure;
    }
    if (!csv_path.empty() && !outcome.csv.empty() && !write_text(csv_path, outcome.csv)) {
        std::cerr << "error: cannot write " << csv_path << '\n';
        return kse::app::failure;
    }
    return outcome.exit_code;
}
