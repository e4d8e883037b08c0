// excursion-iia command-line application.
//
// run() is kept separate from main() so the test suites can drive it with
// captured streams.
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "excursion/excursion.hpp"

namespace excursion::cli {

using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitUsage = 64;

struct RunConfig {
    std::string subcommand;
    std::string model = "diffusion";
    int dim = 2;
    std::optional<double> level;
    std::size_t samples = 100000;
    std::size_t reps = 10;
    double grid_max = 200.0;
    double grid_step = 0.01;
    std::size_t n_traj = 1000;
    std::size_t len = 10000;
    double dt = 0.05;
    std::uint64_t seed = 1;
    std::string out = "-";
    std::string samples_csv;
    std::string cdf_csv;
    std::string input;
    std::string plus = "exp:1.0";
    std::string minus = "exp:1.0";
    bool stationary = false;
    std::size_t paths = 10000;
    std::size_t slepian_paths = 10;
    double horizon = 10.0;
    double p0 = 0.5;
    double t_max = 20.0;
    double step = 0.1;
    std::string curve = "covariance";
    bool json_table = false;
    std::size_t min_tail = 50;
};

/// Configuration echo used for hashing and manifests (output paths excluded).
inline json config_json(const RunConfig& c) {
    json j;
    j["subcommand"] = c.subcommand;
    j["model"] = {{"name", c.model}, {"dim", c.dim}};
    j["seed"] = c.seed;
    j["min_tail_count"] = c.min_tail;
    const auto& s = c.subcommand;
    if (c.level) j["level"] = *c.level;
    if (s == "iia" || s == "table1") {
        j["samples"] = c.samples;
        j["reps"] = c.reps;
        j["grid"] = {{"t_max", c.grid_max}, {"step", c.grid_step}};
    } else if (s == "gp-sim" || s == "table2") {
        j["n_traj"] = c.n_traj;
        j["len"] = c.len;
        j["dt"] = c.dt;
        j["reps"] = c.reps;
    } else if (s == "switch-sim") {
        j["plus"] = c.plus;
        j["minus"] = c.minus;
        j["stationary"] = c.stationary;
        j["paths"] = c.paths;
        j["horizon"] = c.horizon;
        j["p0"] = c.p0;
        j["step"] = c.step;
        j["curve"] = c.curve;
    } else if (s == "clipped-cov" || s == "slepian-sample") {
        j["t_max"] = c.t_max;
        j["step"] = c.step;
        if (s == "slepian-sample") j["paths"] = c.slepian_paths;
    } else if (s == "persistency") {
        j["input"] = c.input;
        j["reps"] = c.reps;
    }
    return j;
}

/// FNV-1a 64-bit hash of the canonical config dump, as 16 hex digits.
inline std::string config_hash(const json& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : config.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

namespace detail {

class Output {
public:
    Output(const std::string& path, std::ostream& fallback) {
        if (path.empty() || path == "-") {
            stream_ = &fallback;
        } else {
            file_.open(path);
            if (!file_) throw DomainError("cannot open output file '" + path + "'");
            stream_ = &file_;
        }
    }
    std::ostream& operator*() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_ = nullptr;
};

inline void write_lengths_csv(const std::string& path, const std::vector<double>& lengths) {
    std::ofstream f(path);
    if (!f) throw DomainError("cannot open samples file '" + path + "'");
    f << "length\n" << std::setprecision(17);
    for (double x : lengths) f << x << '\n';
}

inline std::vector<double> read_lengths_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DomainError("cannot open input file '" + path + "'");
    std::vector<double> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        const std::string cell = line.substr(0, comma);
        try {
            std::size_t used = 0;
            const double v = std::stod(cell, &used);
            out.push_back(v);
        } catch (const std::logic_error&) {
            if (!out.empty()) throw DomainError("non-numeric sample '" + cell + "' in " + path);
            // header line
        }
    }
    return out;
}

inline json fit_json(const SurvivalFit& f) {
    return {{"theta", f.theta},         {"intercept", f.intercept}, {"t_lo", f.t_lo},
            {"t_hi", f.t_hi},           {"n_points", f.n_points},   {"r_squared", f.r_squared}};
}

inline json batch_json(const BatchEstimate& b) {
    json reps = json::array();
    for (const auto& f : b.replicates) reps.push_back(fit_json(f));
    return {{"mean_theta", b.mean_theta}, {"half_width", b.half_width}, {"replicates", reps}};
}

inline std::string iso_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline void write_manifest(const RunConfig& cfg, const json& config, const json& provenance,
                           std::ostream& err) {
    json m;
    m["config"] = config;
    m["config_hash"] = config_hash(config);
    m["version"] = EXCURSION_VERSION;
    m["wall_clock"] = iso_now();
    m["threads"] = thread_count();
    m["provenance"] = provenance;
    if (cfg.out.empty() || cfg.out == "-") {
        err << m.dump() << '\n';
    } else {
        std::ofstream f(cfg.out + ".manifest.json");
        if (!f) throw DomainError("cannot write manifest for '" + cfg.out + "'");
        f << m.dump(2) << '\n';
    }
}

inline double require_level(const RunConfig& cfg) {
    if (!cfg.level) throw CLI::RequiredError("--level");
    if (!std::isfinite(*cfg.level)) throw DomainError("--level must be finite");
    return *cfg.level;
}

// Both sides of the Slepian-IIA protocol for one level.
struct IIARow {
    double level;
    double alpha;
    BatchEstimate above;
    BatchEstimate below;
};

inline IIARow iia_protocol(const CovarianceModel& model, double u, const RunConfig& cfg,
                           std::uint64_t level_seed, std::vector<double>* keep_above = nullptr) {
    const IIAModel iia = build_iia(model, u, GridSpec{cfg.grid_max, cfg.grid_step});
    auto side_batch = [&](Side side, std::uint64_t side_seed, std::vector<double>* keep) {
        std::vector<SurvivalFit> fits;
        for (std::size_t r = 0; r < cfg.reps; ++r) {
            auto xs = sample_excursion(iia, side, cfg.samples, derive_seed(side_seed, r));
            if (keep && r == 0) *keep = xs;
            try {
                fits.push_back(fit_persistency(std::move(xs), cfg.min_tail));
            } catch (const FitError& e) {
                throw FitError(std::string(e.what()) + " (replicate " + std::to_string(r) + ")",
                               static_cast<long>(r));
            }
        }
        return summarize(std::move(fits));
    };
    IIARow row{u, iia.alpha, {}, {}};
    row.above = side_batch(Side::above, derive_seed(level_seed, 0), keep_above);
    row.below = side_batch(Side::below, derive_seed(level_seed, 1), nullptr);
    return row;
}

inline json ci(const BatchEstimate& b) {
    return json::array({b.mean_theta - b.half_width, b.mean_theta + b.half_width});
}

}  // namespace detail

inline int run_iia(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const double u = detail::require_level(cfg);
    if (cfg.reps < 2) throw DomainError("--reps must be >= 2");
    const auto model = make_model(cfg.model, cfg.dim);
    const json config = config_json(cfg);
    std::vector<double> kept;
    const auto row = detail::iia_protocol(model, u, cfg, cfg.seed, cfg.samples_csv.empty() ? nullptr : &kept);
    if (!cfg.samples_csv.empty()) detail::write_lengths_csv(cfg.samples_csv, kept);
    if (!cfg.cdf_csv.empty()) {
        const IIAModel iia = build_iia(model, u, GridSpec{cfg.grid_max, cfg.grid_step});
        std::ofstream f(cfg.cdf_csv);
        if (!f) throw DomainError("cannot open cdf file '" + cfg.cdf_csv + "'");
        f << "t,f_x,f_y\n" << std::setprecision(17);
        for (std::size_t i = 0; i < iia.f_x_cdf.size(); ++i)
            f << iia.f_x_cdf.points()[i] << ',' << iia.f_x_cdf.values()[i] << ',' << iia.f_y_cdf.values()[i] << '\n';
    }
    json result{{"level", u},
                {"alpha", row.alpha},
                {"theta_plus", row.above.mean_theta},
                {"theta_minus", row.below.mean_theta},
                {"ci_plus", detail::ci(row.above)},
                {"ci_minus", detail::ci(row.below)},
                {"n_samples", cfg.samples},
                {"reps", cfg.reps},
                {"above", detail::batch_json(row.above)},
                {"below", detail::batch_json(row.below)},
                {"seed", cfg.seed},
                {"config_hash", config_hash(config)}};
    detail::Output o(cfg.out, out);
    *o << result.dump(2) << '\n';
    detail::write_manifest(cfg, config,
                           {{"alpha", "iia::build_iia"},
                            {"theta_plus", "persistency::fit_persistency on iia::sample_excursion(above)"},
                            {"theta_minus", "persistency::fit_persistency on iia::sample_excursion(below)"},
                            {"ci", "persistency::summarize (Student t, reps-1 dof)"}},
                           err);
    return kExitOk;
}

inline int run_gp_sim(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const double u = detail::require_level(cfg);
    const auto model = make_model(cfg.model, cfg.dim);
    const json config = config_json(cfg);
    TrajectoryProtocol proto{cfg.n_traj, cfg.len, cfg.dt, cfg.reps, cfg.min_tail};
    const auto est = persistency_from_trajectories(model, u, proto, cfg.seed);
    if (!cfg.samples_csv.empty()) {
        const CirculantEmbedding sim(model, cfg.dt, cfg.len);
        auto trajs = simulate_gp_batch(sim, cfg.n_traj, derive_seed(cfg.seed, 0));
        std::vector<double> lengths;
        for (const auto& t : trajs) {
            try {
                const auto set = extract_excursions(t, u);
                lengths.insert(lengths.end(), set.above_lengths.begin(), set.above_lengths.end());
            } catch (const EmptyExcursionSet&) {
            }
        }
        detail::write_lengths_csv(cfg.samples_csv, lengths);
    }
    json result{{"level", u},
                {"theta_plus", detail::batch_json(est.above)},
                {"theta_minus", detail::batch_json(est.below)},
                {"crossing_rate", est.crossing_rate},
                {"rice_rate", rice_crossing_rate(model, u)},
                {"n_above", est.n_above},
                {"n_below", est.n_below},
                {"seed", cfg.seed},
                {"config_hash", config_hash(config)}};
    detail::Output o(cfg.out, out);
    *o << result.dump(2) << '\n';
    detail::write_manifest(cfg, config,
                           {{"theta", "gpsim::persistency_from_trajectories (circulant embedding)"},
                            {"crossing_rate", "gpsim::count of interpolated crossings"},
                            {"rice_rate", "gpsim::rice_crossing_rate"}},
                           err);
    return kExitOk;
}

inline int run_switch_sim(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto plus = parse_interval(cfg.plus);
    const auto minus = parse_interval(cfg.minus);
    if (cfg.paths < 2) throw DomainError("--paths must be >= 2");
    const json config = config_json(cfg);
    const auto paths = cfg.stationary
                           ? simulate_stationary_batch(plus, minus, cfg.horizon, cfg.paths, cfg.seed)
                           : simulate_switch_batch(plus, minus, cfg.p0, cfg.horizon, cfg.paths, cfg.seed);
    const auto grid = Grid::uniform_points(cfg.horizon, cfg.step);
    const auto est = estimate_characteristics(paths, grid);
    const std::vector<double>* value = nullptr;
    const std::vector<double>* se = nullptr;
    const auto& c = cfg.curve;
    if (c == "p_plus") value = &est.p_plus, se = &est.p_plus_se;
    else if (c == "p_minus") value = &est.p_minus, se = &est.p_minus_se;
    else if (c == "e_plus") value = &est.e_plus, se = &est.e_plus_se;
    else if (c == "e_minus") value = &est.e_minus, se = &est.e_minus_se;
    else if (c == "covariance") value = &est.covariance, se = &est.covariance_se;
    else if (c == "counts_plus") value = &est.counts_plus, se = &est.counts_plus_se;
    else if (c == "counts_minus") value = &est.counts_minus, se = &est.counts_minus_se;
    else throw DomainError("unknown --curve '" + c + "'");
    detail::Output o(cfg.out, out);
    *o << "t,value,stderr\n" << std::setprecision(17);
    for (std::size_t i = 0; i < grid.size(); ++i) *o << grid[i] << ',' << (*value)[i] << ',' << (*se)[i] << '\n';
    detail::write_manifest(cfg, config, {{c, "switchproc::estimate_characteristics"}}, err);
    return kExitOk;
}

inline int run_clipped_cov(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const double u = detail::require_level(cfg);
    const auto model = make_model(cfg.model, cfg.dim);
    const json config = config_json(cfg);
    const auto grid = Grid::uniform_points(cfg.t_max, cfg.step);
    detail::Output o(cfg.out, out);
    const bool zero = u == 0.0;
    *o << (zero ? "t,value,arcsin_reference\n" : "t,value\n") << std::setprecision(17);
    for (double t : grid) {
        *o << t << ',' << clipped_covariance(model, u, t);
        if (zero) *o << ',' << clipped_covariance_arcsin(model, t);
        *o << '\n';
    }
    detail::write_manifest(cfg, config, {{"value", "clipped::clipped_covariance"}}, err);
    return kExitOk;
}

inline int run_slepian_sample(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const double u = detail::require_level(cfg);
    const auto model = make_model(cfg.model, cfg.dim);
    const json config = config_json(cfg);
    const auto grid = Grid::uniform_points(cfg.t_max, cfg.step);
    const auto paths = sample_slepian_path(model, u, grid, cfg.slepian_paths, cfg.seed);
    detail::Output o(cfg.out, out);
    *o << "t,deterministic,slope_component,residual,total,replicate_id\n" << std::setprecision(17);
    for (std::size_t p = 0; p < paths.size(); ++p) {
        const auto& path = paths[p];
        for (std::size_t i = 0; i < grid.size(); ++i)
            *o << grid[i] << ',' << path.deterministic_part[i] << ',' << path.slope_part[i] << ','
               << path.residual_part[i] << ',' << path.total[i] << ',' << p << '\n';
    }
    detail::write_manifest(cfg, config,
                           {{"paths", "slepian::sample_slepian_path"}},
                           err);
    return kExitOk;
}

inline int run_persistency(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    if (cfg.input.empty()) throw CLI::RequiredError("--input");
    if (cfg.reps < 2) throw DomainError("--reps must be >= 2");
    const json config = config_json(cfg);
    const auto samples = detail::read_lengths_csv(cfg.input);
    // Contiguous blocks act as replicates.
    const std::size_t block = samples.size() / cfg.reps;
    std::vector<SurvivalFit> fits;
    for (std::size_t r = 0; r < cfg.reps; ++r) {
        std::vector<double> part(samples.begin() + static_cast<std::ptrdiff_t>(r * block),
                                 samples.begin() + static_cast<std::ptrdiff_t>((r + 1) * block));
        try {
            fits.push_back(fit_persistency(std::move(part), cfg.min_tail));
        } catch (const FitError& e) {
            throw FitError(std::string(e.what()) + " (replicate " + std::to_string(r) + ")", static_cast<long>(r));
        }
    }
    json result = detail::batch_json(summarize(std::move(fits)));
    result["n_samples"] = samples.size();
    result["seed"] = cfg.seed;
    result["config_hash"] = config_hash(config);
    detail::Output o(cfg.out, out);
    *o << result.dump(2) << '\n';
    detail::write_manifest(cfg, config, {{"theta", "persistency::fit_persistency per block"}}, err);
    return kExitOk;
}

inline const std::vector<double>& table_levels() {
    static const std::vector<double> levels{0.0, 0.5, 1.0, 1.25};
    return levels;
}

inline int run_table1(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    if (cfg.reps < 2) throw DomainError("--reps must be >= 2");
    const auto model = make_model(cfg.model, cfg.dim);
    const json config = config_json(cfg);
    const std::string hash = config_hash(config);
    std::vector<detail::IIARow> rows;
    for (std::size_t l = 0; l < table_levels().size(); ++l)
        rows.push_back(detail::iia_protocol(model, table_levels()[l], cfg, derive_seed(cfg.seed, l)));
    detail::Output o(cfg.out, out);
    if (cfg.json_table) {
        json arr = json::array();
        for (const auto& r : rows)
            arr.push_back({{"level", r.level},
                           {"theta_plus", r.above.mean_theta},
                           {"half_width_plus", r.above.half_width},
                           {"theta_minus", r.below.mean_theta},
                           {"half_width_minus", r.below.half_width},
                           {"seed", cfg.seed},
                           {"config_hash", hash}});
        *o << json{{"rows", arr}, {"seed", cfg.seed}, {"config_hash", hash}}.dump(2) << '\n';
    } else {
        *o << "level,theta_plus,half_width_plus,theta_minus,half_width_minus,seed,config_hash\n";
        *o << std::setprecision(6);
        for (const auto& r : rows)
            *o << r.level << ',' << r.above.mean_theta << ',' << r.above.half_width << ','
               << r.below.mean_theta << ',' << r.below.half_width << ',' << cfg.seed << ',' << hash << '\n';
    }
    detail::write_manifest(cfg, config,
                           {{"theta_plus", "persistency::fit_persistency on iia::sample_excursion(above)"},
                            {"theta_minus", "persistency::fit_persistency on iia::sample_excursion(below)"}},
                           err);
    return kExitOk;
}

inline int run_table2(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto model = make_model(cfg.model, cfg.dim);
    const json config = config_json(cfg);
    const std::string hash = config_hash(config);
    TrajectoryProtocol proto{cfg.n_traj, cfg.len, cfg.dt, cfg.reps, cfg.min_tail};
    const auto rows = persistency_from_trajectories(model, table_levels(), proto, cfg.seed);
    detail::Output o(cfg.out, out);
    if (cfg.json_table) {
        json arr = json::array();
        for (const auto& r : rows)
            arr.push_back({{"level", r.level},
                           {"theta_plus", r.above.mean_theta},
                           {"half_width_plus", r.above.half_width},
                           {"theta_minus", r.below.mean_theta},
                           {"half_width_minus", r.below.half_width},
                           {"crossing_rate", r.crossing_rate},
                           {"rice_rate", rice_crossing_rate(model, r.level)},
                           {"seed", cfg.seed},
                           {"config_hash", hash}});
        *o << json{{"rows", arr}, {"seed", cfg.seed}, {"config_hash", hash}}.dump(2) << '\n';
    } else {
        *o << "level,theta_plus,half_width_plus,theta_minus,half_width_minus,crossing_rate,rice_rate,seed,config_hash\n";
        *o << std::setprecision(6);
        for (const auto& r : rows)
            *o << r.level << ',' << r.above.mean_theta << ',' << r.above.half_width << ','
               << r.below.mean_theta << ',' << r.below.half_width << ',' << r.crossing_rate << ','
               << rice_crossing_rate(model, r.level) << ',' << cfg.seed << ',' << hash << '\n';
    }
    detail::write_manifest(cfg, config,
                           {{"theta", "gpsim::persistency_from_trajectories (circulant embedding)"},
                            {"crossing_rate", "gpsim::count of interpolated crossings"}},
                           err);
    return kExitOk;
}

namespace detail {

// Appends "--key value" for every config-file key not given on the command line.
inline std::vector<std::string> merge_config(std::vector<std::string> args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                       args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (path.empty()) return args;
    std::ifstream f(path);
    if (!f) throw DomainError("cannot open config file '" + path + "'");
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw DomainError("config file '" + path + "': " + e.what());
    }
    if (!j.is_object()) throw DomainError("config file must hold a JSON object");
    auto given = [&](const std::string& flag) {
        for (const auto& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
        return false;
    };
    for (const auto& [key, value] : j.items()) {
        const std::string flag = "--" + key;
        if (given(flag)) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back(flag);
        } else if (value.is_string()) {
            args.push_back(flag);
            args.push_back(value.get<std::string>());
        } else if (value.is_number()) {
            args.push_back(flag);
            args.push_back(value.dump());
        } else {
            throw DomainError("config key '" + key + "' must be a scalar");
        }
    }
    return args;
}

}  // namespace detail

/// Parses argv (argv[0] is the program name) and dispatches to a subcommand.
inline int run(const std::vector<std::string>& argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    RunConfig cfg;
    CLI::App app{"Slepian-based independent interval approximation for level excursions", "excursion-iia"};
    app.set_version_flag("--version", std::string(EXCURSION_VERSION));
    app.require_subcommand(1);

    auto common = [&](CLI::App* sub) {
        sub->add_option("--model", cfg.model, "covariance model: diffusion | gaussian")->capture_default_str();
        sub->add_option("--dim", cfg.dim, "diffusion dimension d")->capture_default_str();
        sub->add_option("--seed", cfg.seed, "base random seed")->capture_default_str();
        sub->add_option("--out", cfg.out, "output path ('-' for stdout)")->capture_default_str();
        sub->add_option("--min-tail", cfg.min_tail, "minimum exceedances in the fit window")->capture_default_str();
    };
    auto level = [&](CLI::App* sub) {
        sub->add_option_function<double>("--level", [&](double v) { cfg.level = v; }, "level u");
    };

    auto* iia = app.add_subcommand("iia", "Slepian-IIA persistency estimate at one level");
    common(iia);
    level(iia);
    iia->add_option("--samples", cfg.samples, "samples per replicate")->capture_default_str();
    iia->add_option("--reps", cfg.reps, "replicates")->capture_default_str();
    iia->add_option("--grid-max", cfg.grid_max, "tabulation horizon")->capture_default_str();
    iia->add_option("--grid-step", cfg.grid_step, "tabulation step")->capture_default_str();
    iia->add_option("--samples-csv", cfg.samples_csv, "write first-replicate above-side lengths");
    iia->add_option("--cdf-csv", cfg.cdf_csv, "write tabulated divisor CDFs");

    auto* gp = app.add_subcommand("gp-sim", "trajectory-based persistency estimate at one level");
    common(gp);
    level(gp);
    gp->add_option("--n-traj", cfg.n_traj, "trajectories per replicate")->capture_default_str();
    gp->add_option("--len", cfg.len, "points per trajectory")->capture_default_str();
    gp->add_option("--dt", cfg.dt, "sampling step")->capture_default_str();
    gp->add_option("--reps", cfg.reps, "replicates")->capture_default_str();
    gp->add_option("--samples-csv", cfg.samples_csv, "write above-side lengths of replicate 0");

    auto* sw = app.add_subcommand("switch-sim", "Monte Carlo characteristics of a switch process");
    common(sw);
    sw->add_option("--plus", cfg.plus, "holding law in +1: exp:RATE | erlang:K:RATE | det:LEN")->capture_default_str();
    sw->add_option("--minus", cfg.minus, "holding law in -1")->capture_default_str();
    sw->add_flag("--stationary", cfg.stationary, "use the stationary process");
    sw->add_option("--paths", cfg.paths, "number of paths")->capture_default_str();
    sw->add_option("--horizon", cfg.horizon, "time horizon")->capture_default_str();
    sw->add_option("--p0", cfg.p0, "P(initial state +1), non-stationary only")->capture_default_str();
    sw->add_option("--step", cfg.step, "output grid step")->capture_default_str();
    sw->add_option("--curve", cfg.curve,
                   "p_plus | p_minus | e_plus | e_minus | covariance | counts_plus | counts_minus")
        ->capture_default_str();

    auto* cc = app.add_subcommand("clipped-cov", "covariance of sgn(X(t) - u)");
    common(cc);
    level(cc);
    cc->add_option("--t-max", cfg.t_max, "grid end")->capture_default_str();
    cc->add_option("--step", cfg.step, "grid step")->capture_default_str();

    auto* sl = app.add_subcommand("slepian-sample", "Slepian model paths at an up-crossing");
    common(sl);
    level(sl);
    sl->add_option("--paths", cfg.slepian_paths, "number of paths")->capture_default_str();
    sl->add_option("--t-max", cfg.t_max, "grid end")->capture_default_str();
    sl->add_option("--step", cfg.step, "grid step")->capture_default_str();

    auto* pe = app.add_subcommand("persistency", "fit theta to a CSV of lengths");
    common(pe);
    pe->add_option("--input", cfg.input, "CSV with one length per line")->required();
    pe->add_option("--reps", cfg.reps, "contiguous blocks used as replicates")->capture_default_str();

    auto* t1 = app.add_subcommand("table1", "Slepian-IIA persistency table, u = 0, 1/2, 1, 5/4");
    common(t1);
    t1->add_option("--samples", cfg.samples, "samples per replicate")->capture_default_str();
    t1->add_option("--reps", cfg.reps, "replicates")->capture_default_str();
    t1->add_option("--grid-max", cfg.grid_max, "tabulation horizon")->capture_default_str();
    t1->add_option("--grid-step", cfg.grid_step, "tabulation step")->capture_default_str();
    t1->add_flag("--json", cfg.json_table, "emit JSON instead of CSV");

    auto* t2 = app.add_subcommand("table2", "trajectory persistency table, u = 0, 1/2, 1, 5/4");
    common(t2);
    t2->add_option("--n-traj", cfg.n_traj, "trajectories per replicate")->capture_default_str();
    t2->add_option("--len", cfg.len, "points per trajectory")->capture_default_str();
    t2->add_option("--dt", cfg.dt, "sampling step")->capture_default_str();
    t2->add_option("--reps", cfg.reps, "replicates")->capture_default_str();
    t2->add_flag("--json", cfg.json_table, "emit JSON instead of CSV");

    // Subcommands needing --level report its absence as a usage error.
    for (auto* sub : {iia, gp, cc, sl}) {
        sub->callback([&] {
            if (!cfg.level) throw CLI::RequiredError("--level");
        });
    }

    try {
        std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
        args = detail::merge_config(std::move(args));
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << EXCURSION_VERSION << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return kExitUsage;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kExitDomain;
    }
    for (auto* sub : app.get_subcommands()) cfg.subcommand = sub->get_name();

    try {
        const auto& s = cfg.subcommand;
        if (s == "iia") return run_iia(cfg, out, err);
        if (s == "gp-sim") return run_gp_sim(cfg, out, err);
        if (s == "switch-sim") return run_switch_sim(cfg, out, err);
        if (s == "clipped-cov") return run_clipped_cov(cfg, out, err);
        if (s == "slepian-sample") return run_slepian_sample(cfg, out, err);
        if (s == "persistency") return run_persistency(cfg, out, err);
        if (s == "table1") return run_table1(cfg, out, err);
        if (s == "table2") return run_table2(cfg, out, err);
        err << "error: unknown subcommand\n";
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kExitDomain;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
}

inline int run(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc)); }

}  // namespace excursion::cli
