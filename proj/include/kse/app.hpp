#pragma once

/**
 * @file app.hpp
 *
 * Experiment orchestration behind the command-line tool: run configuration,
 * the subcommands, and JSON / CSV report emission. Reports follow the
 * "kse-report/1" schema described in docs/report-schema.md.
 */

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "kse/kse.hpp"

namespace kse::app {

using json = nlohmann::ordered_json;

inline constexpr const char* kSchema = "kse-report/1";

/// Exit codes of the command-line tool.
enum ExitCode : int { ok = 0, failure = 1, config_error = 2, strict_warning = 3 };

struct RunConfig {
    std::string command = "compare";
    std::string space = "euclidean:2";
    std::string map = "identity";
    std::vector<double> lower{0.0, 0.0};
    std::vector<double> upper{1.0, 1.0};
    std::vector<std::size_t> resolution{64};
    EnergyConfig energy;
    /// sphere | ball | both (rep-energy and compare).
    std::string form = "both";
    /// compare: also rerun the directional side with delta / 2.
    bool fd_check = true;
    /// oracle: matrix "a11,a12;a21,a22"; empty means the identity of the domain dimension.
    std::string matrix;
    bool strict = false;
};

/// Raised for malformed configuration; maps to exit code 2.
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(ErrorCode::invalid_config, msg) {}
};

inline json config_to_json(const RunConfig& c) {
    const auto& e = c.energy;
    json j;
    j["command"] = c.command;
    j["space"] = c.space;
    j["map"] = c.map;
    j["domain"] = {{"lower", c.lower}, {"upper", c.upper}, {"resolution", c.resolution}};
    j["energy"] = {{"p", e.p},
                   {"h0", e.h0},
                   {"h_count", e.h_count},
                   {"h_sequence", e.h_sequence},
                   {"ball_radial_order", e.ball_radial_order},
                   {"sphere_order", e.sphere_order},
                   {"dense_truncation", e.dense_truncation},
                   {"delta", e.delta},
                   {"seed", e.seed},
                   {"accelerate", e.accelerate},
                   {"truncation_check", e.truncation_check}};
    j["form"] = c.form;
    j["fd_check"] = c.fd_check;
    j["matrix"] = c.matrix;
    j["strict"] = c.strict;
    return j;
}

namespace detail {

template <typename T>
void read_field(const json& obj, const char* key, T& out, const std::string& path) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& ex) {
        throw ConfigError("config field '" + path + key + "': " + ex.what());
    }
}

}  // namespace detail

/**
 * Reads a config object, or a report (its "config" member). Missing fields
 * keep their defaults; unknown top-level fields are rejected.
 */
inline RunConfig config_from_json(const json& input) {
    const json& j = input.contains("schema") && input.contains("config") ? input.at("config") : input;
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    static const std::vector<std::string> known{"command", "space", "map", "domain", "energy",
                                                "form", "fd_check", "matrix", "strict"};
    for (const auto& [key, _] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("unknown config field '" + key + "'");
    }
    RunConfig c;
    detail::read_field(j, "command", c.command, "");
    detail::read_field(j, "space", c.space, "");
    detail::read_field(j, "map", c.map, "");
    detail::read_field(j, "form", c.form, "");
    detail::read_field(j, "fd_check", c.fd_check, "");
    detail::read_field(j, "matrix", c.matrix, "");
    detail::read_field(j, "strict", c.strict, "");
    if (j.contains("domain")) {
        const auto& d = j.at("domain");
        detail::read_field(d, "lower", c.lower, "domain.");
        detail::read_field(d, "upper", c.upper, "domain.");
        detail::read_field(d, "resolution", c.resolution, "domain.");
    }
    if (j.contains("energy")) {
        const auto& e = j.at("energy");
        auto& en = c.energy;
        detail::read_field(e, "p", en.p, "energy.");
        detail::read_field(e, "h0", en.h0, "energy.");
        detail::read_field(e, "h_count", en.h_count, "energy.");
        detail::read_field(e, "h_sequence", en.h_sequence, "energy.");
        detail::read_field(e, "ball_radial_order", en.ball_radial_order, "energy.");
        detail::read_field(e, "sphere_order", en.sphere_order, "energy.");
        detail::read_field(e, "dense_truncation", en.dense_truncation, "energy.");
        detail::read_field(e, "delta", en.delta, "energy.");
        detail::read_field(e, "seed", en.seed, "energy.");
        detail::read_field(e, "accelerate", en.accelerate, "energy.");
        detail::read_field(e, "truncation_check", en.truncation_check, "energy.");
    }
    return c;
}

inline RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    try {
        return config_from_json(json::parse(in));
    } catch (const json::parse_error& ex) {
        throw ConfigError("config file '" + path + "': " + ex.what());
    }
}

/// Everything a subcommand produces.
struct Outcome {
    json report;
    /// Tabular side output (per-h table, per-node fields or sweeps).
    std::string csv;
    std::vector<std::string> warnings;
    int exit_code = ok;
};

/// Space, map and grid resolved from a RunConfig.
struct Problem {
    SpaceHandle space;
    MapHandle map;
    DomainGrid grid;
};

inline Problem make_problem(const RunConfig& c) {
    if (c.form != "sphere" && c.form != "ball" && c.form != "both")
        throw ConfigError("form must be sphere, ball or both");
    try {
        auto space = parse_space(c.space);
        DomainGrid grid(c.lower, c.upper, c.resolution);
        auto map = parse_map(c.map, space, grid.dim());
        c.energy.validate();
        return Problem{std::move(space), std::move(map), std::move(grid)};
    } catch (const Error& ex) {
        if (ex.code() == ErrorCode::invalid_config || ex.code() == ErrorCode::invalid_domain ||
            ex.code() == ErrorCode::invalid_point)
            throw ConfigError(ex.what());
        throw;
    }
}

namespace detail {

inline json extrapolation_json(const Extrapolation& e) {
    return {{"limit", e.limit}, {"order", e.order}, {"error_estimate", e.error}, {"fallback", e.fallback}};
}

inline double relative(double a, double b) {
    const double ref = std::max(std::abs(b), 1e-300);
    return std::abs(a - b) / ref;
}

inline double exact_inner_measure(const DomainGrid& g, double h) {
    double m = 1.0;
    for (std::size_t i = 0; i < g.dim(); ++i) m *= std::max(0.0, g.upper()[i] - g.lower()[i] - 2.0 * h);
    return m;
}

inline json ks_json(const KsResult& r, const DomainGrid& grid, const EnergyConfig& cfg) {
    json per_h = json::array();
    for (const auto& [h, v] : r.per_h) per_h.push_back({{"h", h}, {"integral", v}});
    return {{"energy", r.energy},
            {"per_h", per_h},
            {"extrapolation", extrapolation_json(r.extrapolation)},
            {"localization",
             {{"h0", cfg.h0},
              {"domain_measure", r.domain_measure},
              {"inner_measure", r.inner_measure},
              {"inner_measure_exact", exact_inner_measure(grid, cfg.h0)},
              {"inner_nodes", r.mask.count},
              {"sup_density", r.sup_density},
              {"deficit_bound", r.localization_deficit}}},
            {"density_fallbacks", r.density_fallbacks},
            {"non_monotone", r.non_monotone}};
}

inline json rep_form_json(const RepResult& r, const DomainGrid& grid) {
    json j = {{"energy", r.energy},
              {"energy_inner", r.energy_inner},
              {"mean_density", r.energy / grid.measure()}};
    if (r.energy_inner_doubled != 0.0 || r.under_truncated)
        j["truncation"] = {{"energy_inner_doubled", r.energy_inner_doubled},
                           {"relative_change", r.truncation_change},
                           {"under_truncated", r.under_truncated}};
    return j;
}

/// Sphere average over every other node of an even uniform circle rule (n = 2 only).
inline std::optional<double> half_order_energy(const Representation& rep, const DomainGrid& grid, double p) {
    const std::size_t ns = rep.sphere.size();
    if (grid.dim() != 2 || ns % 2 != 0 || ns < 4) return std::nullopt;
    const std::size_t nd = rep.field.direction_count();
    std::vector<double> terms(grid.node_count(), 0.0), local(ns / 2);
    for (std::size_t k = 0; k < grid.node_count(); ++k) {
        if (!rep.mask.marked[k]) continue;
        for (std::size_t j = 0; j < ns / 2; ++j) local[j] = pow_abs(rep.field.values[k * nd + 2 * j], p);
        terms[k] = pairwise_sum(local) / static_cast<double>(ns / 2) * grid.weight();
    }
    return pairwise_sum(terms);
}

inline json rep_json(const Representation& rep, const DomainGrid& grid, const EnergyConfig& cfg,
                     const std::string& form) {
    json j;
    j["form"] = form;
    if (form != "ball") j["sphere"] = rep_form_json(rep.sphere_form, grid);
    if (form != "sphere") j["ball"] = rep_form_json(rep.ball_form, grid);
    j["frame_sum"] = rep_form_json(rep.frame_sum, grid);
    j["sphere_ball_gap"] = relative(rep.ball_form.energy, rep.sphere_form.energy);
    j["dense_truncation"] = cfg.dense_truncation;
    j["delta"] = rep.field.delta;
    j["sphere_nodes"] = rep.sphere.size();
    j["ball_nodes"] = rep.ball.size();
    j["accelerate"] = cfg.accelerate;
    return j;
}

inline void csv_node_coords(std::ostringstream& os, const DomainGrid& grid, std::size_t k) {
    const Point x = grid.node(k);
    for (std::size_t i = 0; i < grid.dim(); ++i) os << x[i] << ',';
}

inline std::string csv_header_coords(std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += "x" + std::to_string(i + 1) + ",";
    return s;
}

inline json base_report(const RunConfig& c) {
    json j;
    j["schema"] = kSchema;
    j["command"] = c.command;
    j["config"] = config_to_json(c);
    return j;
}

}  // namespace detail

inline Outcome run_ks_energy(const RunConfig& c) {
    const Problem prob = make_problem(c);
    const KsResult ks = ks_energy(*prob.map, prob.grid, c.energy);
    Outcome out;
    out.report = detail::base_report(c);
    out.report["ks"] = detail::ks_json(ks, prob.grid, c.energy);
    out.warnings = ks.warnings;
    std::ostringstream os;
    os.precision(17);
    os << "h,integral\n";
    for (const auto& [h, v] : ks.per_h) os << h << ',' << v << '\n';
    out.csv = os.str();
    return out;
}

inline Outcome run_rep_energy(const RunConfig& c) {
    const Problem prob = make_problem(c);
    const Representation rep = representation(*prob.map, prob.grid, c.energy);
    Outcome out;
    out.report = detail::base_report(c);
    out.report["rep"] = detail::rep_json(rep, prob.grid, c.energy, c.form);
    if (rep.sphere_form.under_truncated) out.warnings.push_back("under_truncated");
    std::ostringstream os;
    os.precision(17);
    os << detail::csv_header_coords(prob.grid.dim()) << "sphere_density,ball_density,frame_density,min_gradient\n";
    for (std::size_t k = 0; k < prob.grid.node_count(); ++k) {
        detail::csv_node_coords(os, prob.grid, k);
        os << rep.sphere_form.density[k] << ',' << rep.ball_form.density[k] << ',' << rep.frame_sum.density[k] << ','
           << rep.field.min_gradient[k] << '\n';
    }
    out.csv = os.str();
    return out;
}

/**
 * Both energies on the same localization region, their relative gap and the
 * error diagnostics of each ingredient: extrapolation, dense truncation,
 * sphere vs ball quadrature, sphere order (half-order subset, n = 2) and the
 * finite-difference step (rerun with delta / 2).
 */
inline Outcome run_compare(const RunConfig& c) {
    const Problem prob = make_problem(c);
    const auto& cfg = c.energy;
    const KsResult ks = ks_energy(*prob.map, prob.grid, cfg);
    const Representation rep = representation(*prob.map, prob.grid, cfg);
    const RepResult& main = c.form == "ball" ? rep.ball_form : rep.sphere_form;

    Outcome out;
    out.report = detail::base_report(c);
    out.report["ks"] = detail::ks_json(ks, prob.grid, cfg);
    out.report["rep"] = detail::rep_json(rep, prob.grid, cfg, c.form);

    json diag;
    const double scale = std::max(std::abs(main.energy_inner), 1e-300);
    diag["extrapolation_error"] = ks.extrapolation.error / scale;
    diag["truncation_change"] = main.truncation_change;
    diag["sphere_ball_gap"] = detail::relative(rep.ball_form.energy_inner, rep.sphere_form.energy_inner);
    if (const auto half = detail::half_order_energy(rep, prob.grid, cfg.p))
        diag["sphere_order_change"] = detail::relative(*half, rep.sphere_form.energy_inner);
    else
        diag["sphere_order_change"] = nullptr;
    if (c.fd_check) {
        EnergyConfig fine = cfg;
        fine.delta = cfg.resolved_delta(prob.grid) / 2.0;
        fine.truncation_check = false;
        const Representation rep_fine = representation(*prob.map, prob.grid, fine);
        const RepResult& fm = c.form == "ball" ? rep_fine.ball_form : rep_fine.sphere_form;
        diag["fd_step_change"] = detail::relative(fm.energy_inner, main.energy_inner);
    } else {
        diag["fd_step_change"] = nullptr;
    }

    const bool both_zero = ks.energy == 0.0 && main.energy_inner == 0.0;
    out.report["comparison"] = {{"ks_energy", ks.energy},
                                {"rep_energy", main.energy_inner},
                                {"relative_gap", both_zero ? 0.0 : detail::relative(ks.energy, main.energy_inner)},
                                {"diagnostics", diag}};
    out.warnings = ks.warnings;
    if (main.under_truncated) out.warnings.push_back("under_truncated");

    std::ostringstream os;
    os.precision(17);
    os << detail::csv_header_coords(prob.grid.dim()) << "ks_density,rep_density,gap\n";
    for (std::size_t k = 0; k < prob.grid.node_count(); ++k) {
        if (!ks.mask.marked[k]) continue;
        detail::csv_node_coords(os, prob.grid, k);
        os << ks.density[k] << ',' << main.density[k] << ',' << ks.density[k] - main.density[k] << '\n';
    }
    out.csv = os.str();
    return out;
}

/// Frame sum vs sphere average for the identity into the max-norm plane.
inline Outcome run_counterexample(const RunConfig& c) {
    if (c.map != "identity" || c.space != "max_norm_plane" || c.lower.size() != 2)
        throw ConfigError("counterexample requires map=identity, space=max_norm_plane and a 2-d domain");
    const Problem prob = make_problem(c);
    const auto& cfg = c.energy;
    const Representation rep = representation(*prob.map, prob.grid, cfg);
    const double measure = prob.grid.measure();
    const double sphere = rep.sphere_form.energy / measure;
    const double frame = rep.frame_sum.energy / measure;
    const auto oracle = oracles::maxnorm_counterexample_constants(cfg.p);

    Outcome out;
    out.report = detail::base_report(c);
    json oj = {{"frame_sum", oracle.frame_sum}, {"sphere_average", oracle.sphere_average}};
    if (oracle.closed_form) oj["closed_form"] = *oracle.closed_form;
    out.report["counterexample"] = {{"frame_sum_density", frame},
                                    {"sphere_average_density", sphere},
                                    {"ball_density", rep.ball_form.energy / measure},
                                    {"oracle", oj},
                                    {"sphere_oracle_gap", std::abs(sphere - oracle.sphere_average)},
                                    {"frame_oracle_gap", std::abs(frame - oracle.frame_sum)},
                                    {"frame_exceeds_sphere", frame > sphere}};
    if (!(frame > sphere)) {
        out.report["error"] = {{"code", "assertion"}, {"message", "frame sum does not exceed the sphere average"}};
        out.exit_code = failure;
    }
    return out;
}

namespace detail {

/// Least-squares slope of log(err) against log(step) over positive errors.
inline std::optional<double> loglog_slope(const std::vector<std::pair<double, double>>& pts) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (const auto& [x, y] : pts) {
        if (!(x > 0.0) || !(y > 0.0)) continue;
        const double lx = std::log(x), ly = std::log(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++m;
    }
    if (m < 2) return std::nullopt;
    const double den = static_cast<double>(m) * sxx - sx * sx;
    if (den == 0.0) return std::nullopt;
    return (static_cast<double>(m) * sxy - sx * sy) / den;
}

}  // namespace detail

/**
 * Sweeps for plotting: I(h) against h, the directional energy (on Omega_{h0})
 * against K, against the sphere order and against the finite-difference step.
 * CSV rows are table,parameter,value.
 */
inline Outcome run_convergence(const RunConfig& c) {
    const Problem prob = make_problem(c);
    const auto& cfg = c.energy;
    std::ostringstream os;
    os.precision(17);
    os << "table,parameter,value\n";
    json tables;

    const KsResult ks = ks_energy(*prob.map, prob.grid, cfg);
    json hrows = json::array();
    for (const auto& [h, v] : ks.per_h) {
        hrows.push_back({{"h", h}, {"integral", v}});
        os << "ks_h," << h << ',' << v << '\n';
    }
    tables["ks_vs_h"] = hrows;
    tables["ks_extrapolation"] = detail::extrapolation_json(ks.extrapolation);

    auto rep_energy = [&](const EnergyConfig& e) {
        return representation(*prob.map, prob.grid, e).sphere_form.energy_inner;
    };

    json krows = json::array();
    for (std::size_t k = 8; k <= cfg.dense_truncation; k *= 2) {
        EnergyConfig e = cfg;
        e.dense_truncation = k;
        e.truncation_check = false;
        const double v = rep_energy(e);
        krows.push_back({{"K", k}, {"energy", v}});
        os << "rep_K," << k << ',' << v << '\n';
    }
    tables["rep_vs_K"] = krows;

    json srows = json::array();
    const auto base_order = cfg.sphere_order.empty() ? default_sphere_order(prob.grid.dim()) : cfg.sphere_order;
    for (std::size_t div = 16; div >= 1; div /= 2) {
        EnergyConfig e = cfg;
        e.truncation_check = false;
        e.sphere_order = base_order;
        bool valid = true;
        for (auto& o : e.sphere_order) {
            o /= div;
            valid = valid && o >= 2;
        }
        if (!valid) continue;
        std::size_t total = 1;
        for (auto o : e.sphere_order) total *= o;
        const double v = rep_energy(e);
        srows.push_back({{"sphere_nodes", total}, {"energy", v}});
        os << "rep_sphere_nodes," << total << ',' << v << '\n';
    }
    tables["rep_vs_sphere_order"] = srows;

    json drows = json::array();
    std::vector<std::pair<double, double>> by_delta;
    const double d0 = cfg.resolved_delta(prob.grid);
    for (int j = 2; j >= -3; --j) {
        EnergyConfig e = cfg;
        e.truncation_check = false;
        e.delta = std::ldexp(d0, j);
        const double v = rep_energy(e);
        by_delta.emplace_back(e.delta, v);
        drows.push_back({{"delta", e.delta}, {"energy", v}});
        os << "rep_delta," << e.delta << ',' << v << '\n';
    }
    tables["rep_vs_delta"] = drows;
    std::vector<std::pair<double, double>> errs;
    for (std::size_t i = 0; i + 1 < by_delta.size(); ++i)
        errs.emplace_back(by_delta[i].first, std::abs(by_delta[i].second - by_delta.back().second));
    if (const auto slope = detail::loglog_slope(errs))
        tables["delta_order"] = *slope;
    else
        tables["delta_order"] = nullptr;

    Outcome out;
    out.report = detail::base_report(c);
    out.report["convergence"] = tables;
    out.warnings = ks.warnings;
    out.csv = os.str();
    return out;
}

inline Outcome run_oracle(const RunConfig& c) {
    const std::size_t n = c.lower.size();
    std::vector<double> a;
    std::size_t m = n;
    if (c.matrix.empty()) {
        a.assign(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) a[i * n + i] = 1.0;
    } else {
        std::istringstream rows(c.matrix);
        std::string row;
        m = 0;
        while (std::getline(rows, row, ';')) {
            const auto values = kse::detail::parse_reals(row, ',');
            if (values.size() != n) throw ConfigError("oracle matrix rows must have " + std::to_string(n) + " entries");
            a.insert(a.end(), values.begin(), values.end());
            ++m;
        }
    }
    if (!(c.energy.p >= 1.0)) throw ConfigError("p must be >= 1");
    const auto lin = oracles::linear_euclidean_density(a, m, n, c.energy.p);
    Outcome out;
    out.report = detail::base_report(c);
    json lj = {{"rows", m}, {"cols", n}, {"matrix", a}, {"p", c.energy.p}, {"brute_force", lin.brute_force}};
    lj["trace_formula"] = lin.trace_formula ? json(*lin.trace_formula) : json(nullptr);
    out.report["linear_euclidean_density"] = lj;
    const auto mx = oracles::maxnorm_counterexample_constants(c.energy.p);
    json mj = {{"p", c.energy.p}, {"frame_sum", mx.frame_sum}, {"sphere_average", mx.sphere_average}};
    mj["closed_form"] = mx.closed_form ? json(*mx.closed_form) : json(nullptr);
    out.report["maxnorm_counterexample"] = mj;
    return out;
}

/// Dispatches on c.command; module errors become an error report with exit code 1.
inline Outcome run(const RunConfig& c) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
        if (c.command == "ks-energy")
            out = run_ks_energy(c);
        else if (c.command == "rep-energy")
            out = run_rep_energy(c);
        else if (c.command == "compare")
            out = run_compare(c);
        else if (c.command == "counterexample")
            out = run_counterexample(c);
        else if (c.command == "convergence")
            out = run_convergence(c);
        else if (c.command == "oracle")
            out = run_oracle(c);
        else
            throw ConfigError("unknown command '" + c.command + "'");
    } catch (const ConfigError& ex) {
        out = Outcome{};
        out.report = {{"schema", kSchema}, {"command", c.command}, {"error", {{"code", "invalid_config"}, {"message", ex.what()}}}};
        out.exit_code = config_error;
        return out;
    } catch (const Error& ex) {
        out = Outcome{};
        out.report = {{"schema", kSchema},
                      {"command", c.command},
                      {"error", {{"code", std::string(to_string(ex.code()))}, {"message", ex.what()}}}};
        out.exit_code = failure;
        return out;
    }
    out.report["warnings"] = out.warnings;
    if (c.strict && !out.warnings.empty() && out.exit_code == ok) out.exit_code = strict_warning;
    out.report["timing"] = {{"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
    return out;
}

/// Report text with the timing block removed, for reproducibility checks.
inline std::string deterministic_dump(json report) {
    report.erase("timing");
    return report.dump(2);
}

}  // namespace kse::app
