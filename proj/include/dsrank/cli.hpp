#pragma once

// The dsrank command-line front end. cli_main never calls exit(); it maps
// errors to exit codes so it can be driven from tests.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "config.hpp"
#include "error.hpp"
#include "io.hpp"
#include "market.hpp"
#include "parallel.hpp"
#include "reconstruction.hpp"
#include "svg.hpp"
#include "sweep.hpp"

namespace dsrank {

inline constexpr const char *kVersion = "1.0.0";

/// Lowercase hex SHA-256 of a file's bytes.
inline std::string sha256_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot read " + path.string());
    EVP_MD_CTX *ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw InternalError("SHA-256 unavailable");
    }
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        if (in.gcount() > 0)
            EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int k = 0; k < len; ++k)
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[k]);
    return hex.str();
}

namespace cli {

/// Values given on the command line; each one overrides the config.
struct Flags {
    std::string config;
    std::string input;
    std::vector<int> years;
    std::string output;
    bool force = false;
    unsigned jobs = default_jobs();
    std::string seed;
    double density = 0.0;
    std::size_t ensemble_size = 0;
    std::string policy;
    double lgd = 0.0;
    std::vector<double> rhos;
    std::vector<std::string> dampings;
    double psi_min = 0.0, psi_max = 1.0;
    std::size_t psi_count = 0;
    double stop_tol = 0.0, gamma_cap = 0.0;
    int max_steps = 0;
    std::size_t synth_banks = 0;
    double synth_shape = 0.0;
    std::uint64_t synth_seed = 0;
    bool full_trajectory = false;
    std::string results; // plot input
};

/// Collects what a command writes so the manifest can hash it.
class Run {
public:
    Run(std::string command, ScenarioConfig config, std::ostream &log)
        : command_(std::move(command)), config_(std::move(config)), log_(log) {}

    const ScenarioConfig &config() const { return config_; }
    ScenarioConfig &config() { return config_; }

    void prepare_output(bool force) const {
        namespace fs = std::filesystem;
        const auto &dir = config_.output;
        if (fs::exists(dir)) {
            if (!fs::is_directory(dir))
                throw UsageError("output path exists and is not a directory: " + dir.string());
            if (!fs::is_empty(dir) && !force)
                throw UsageError("output directory " + dir.string() + " already exists; pass --force to overwrite");
        }
        fs::create_directories(dir);
    }

    /// Open `relative` under the output directory for writing.
    std::ofstream open(const std::filesystem::path &relative) {
        const auto path = config_.output / relative;
        std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw DataError("cannot write " + path.string());
        artifacts_.push_back(relative);
        return out;
    }

    void add_input(const std::filesystem::path &path) { inputs_.push_back(path); }
    void add_calibration(int year, std::size_t banks, double z, double density) {
        calibration_.push_back({{"year", year}, {"banks", banks}, {"density", density}, {"z", z}});
    }

    /// Write manifest.json. Artifacts are listed in the order written.
    void finish() {
        nlohmann::ordered_json m;
        m["manifest_version"] = 1;
        m["tool"] = "dsrank";
        m["version"] = kVersion;
        m["command"] = command_;
        m["config"] = to_json(config_);
        m["seeds"] = {{"master_seed", config_.master_seed},
                      {"source", config_.seed_source},
                      {"synth_seed", config_.synth.seed},
                      {"derivation", "splitmix64(master, stream, index) -> xoshiro256**"}};
        m["calibration"] = calibration_;
        auto inputs = nlohmann::ordered_json::array();
        for (const auto &p : inputs_)
            inputs.push_back({{"path", p.generic_string()}, {"sha256", sha256_file(p)}});
        m["inputs"] = inputs;
        auto artifacts = nlohmann::ordered_json::array();
        for (const auto &rel : artifacts_) {
            const auto path = config_.output / rel;
            artifacts.push_back({{"path", rel.generic_string()},
                                 {"bytes", std::filesystem::file_size(path)},
                                 {"sha256", sha256_file(path)}});
        }
        m["artifacts"] = artifacts;
        std::ofstream out(config_.output / "manifest.json", std::ios::binary);
        out << m.dump(2) << '\n';
        if (!out)
            throw DataError("cannot write manifest");
        log_ << "wrote " << artifacts_.size() << " file(s) and manifest.json to " << config_.output.string() << '\n';
    }

private:
    std::string command_;
    ScenarioConfig config_;
    std::ostream &log_;
    std::vector<std::filesystem::path> artifacts_;
    std::vector<std::filesystem::path> inputs_;
    nlohmann::ordered_json calibration_ = nlohmann::ordered_json::array();
};

inline std::filesystem::path absolute_path(const std::filesystem::path &p) {
    return std::filesystem::weakly_canonical(std::filesystem::absolute(p));
}

/// Defaults, environment, config file, then flags.
inline ScenarioConfig resolve(const CLI::App &sub, const Flags &f) {
    std::optional<std::filesystem::path> file;
    if (!f.config.empty())
        file = f.config;
    ScenarioConfig c = load_config(file);
    auto given = [&](const char *name) {
        const CLI::Option *o = sub.get_option_no_throw(name);
        return o != nullptr && o->count() > 0;
    };
    if (given("--input"))
        c.input = f.input;
    if (given("--year"))
        c.years = f.years;
    if (given("--output"))
        c.output = f.output;
    if (given("--seed")) {
        c.master_seed = parse_seed(f.seed, "--seed");
        c.seed_source = "flag";
    }
    if (given("--density"))
        c.density = f.density;
    if (given("--ensemble-size"))
        c.ensemble_size = f.ensemble_size;
    if (given("--policy"))
        c.policy = f.policy;
    if (given("--lambda"))
        c.lgd = f.lgd;
    if (given("--rho"))
        c.rhos = f.rhos;
    if (given("--damping"))
        c.dampings = f.dampings;
    if (given("--psi-min"))
        c.psi.min = f.psi_min;
    if (given("--psi-max"))
        c.psi.max = f.psi_max;
    if (given("--psi-count"))
        c.psi.count = f.psi_count;
    if (given("--stop-tol"))
        c.stop_tol = f.stop_tol;
    if (given("--gamma-cap"))
        c.gamma_cap = f.gamma_cap;
    if (given("--max-steps"))
        c.max_steps = f.max_steps;
    if (given("--banks"))
        c.synth.n_banks = f.synth_banks;
    if (given("--shape"))
        c.synth.shape = f.synth_shape;
    if (given("--synth-seed"))
        c.synth.seed = f.synth_seed;
    if (c.input)
        c.input = absolute_path(*c.input);
    c.output = absolute_path(c.output);
    c.check();
    return c;
}

/// Every requested year as a validated snapshot.
struct LoadedMarket {
    std::vector<MarketSnapshot> snapshots;
    std::vector<ValidationReport> reports;
};

inline LoadedMarket load_markets(ScenarioConfig &c, Run *run) {
    LoadedMarket out;
    std::vector<MarketSnapshot> raw;
    if (c.input) {
        const auto rows = read_market_file(*c.input);
        if (run)
            run->add_input(*c.input);
        if (c.years.empty())
            c.years = market_years(rows);
        for (int y : c.years)
            raw.push_back(market_from_rows(rows, y, c.input->string()));
    } else {
        if (c.years.empty())
            c.years = {2008};
        for (int y : c.years)
            raw.push_back(synth_panel_year(y, c.synth.shape, c.synth.seed, c.synth.n_banks));
    }
    for (const auto &s : raw) {
        auto [admitted, report] = validate(s, c.admission());
        out.snapshots.push_back(std::move(admitted));
        out.reports.push_back(std::move(report));
    }
    return out;
}

inline void add_market_flags(CLI::App &sub, Flags &f) {
    sub.add_option("--config", f.config, "Scenario config JSON (a run manifest also works)");
    sub.add_option("--input", f.input, "Market CSV; omit for a synthetic panel");
    sub.add_option("--year", f.years, "Year(s) to use; default every year in the input")->delimiter(',');
    sub.add_option("--policy", f.policy, "Insolvent banks: mark (default) or drop");
    sub.add_option("--banks", f.synth_banks, "Synthetic market size");
    sub.add_option("--shape", f.synth_shape, "Synthetic size dispersion");
    sub.add_option("--synth-seed", f.synth_seed, "Synthetic market seed");
}

inline void add_output_flags(CLI::App &sub, Flags &f) {
    sub.add_option("-o,--output", f.output, "Output directory");
    sub.add_flag("--force", f.force, "Overwrite a non-empty output directory");
}

inline void add_network_flags(CLI::App &sub, Flags &f) {
    sub.add_option("--density", f.density, "Target link density");
    sub.add_option("--ensemble-size", f.ensemble_size, "Networks per ensemble");
    sub.add_option("--seed", f.seed, "Master seed (falls back to DSRANK_SEED)");
    sub.add_option("--jobs", f.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

inline void add_shock_flags(CLI::App &sub, Flags &f) {
    sub.add_option("--lambda", f.lgd, "Loss given default");
    sub.add_option("--rho", f.rhos, "Funding shock weight(s)")->delimiter(',');
    sub.add_option("--damping", f.dampings, "once, persistent or exp:<tau>")->delimiter(',');
    sub.add_option("--stop-tol", f.stop_tol, "Convergence tolerance");
    sub.add_option("--gamma-cap", f.gamma_cap, "Fire-sale devaluation cap");
    sub.add_option("--max-steps", f.max_steps, "Step limit");
}

inline std::string variant_tag(const ShockVariant &v) {
    std::string d = v.damping.label();
    std::replace(d.begin(), d.end(), ':', '-');
    return d + "_rho" + format_double(v.rho);
}

// ---------------------------------------------------------------------------
// Subcommands

inline int cmd_validate(const CLI::App &sub, const Flags &f, std::ostream &out, std::ostream &log) {
    ScenarioConfig c = resolve(sub, f);
    const bool write = sub.get_option("--output")->count() > 0;
    Run run("validate", c, log);
    auto market = load_markets(run.config(), &run);
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    bool admissible = true;
    for (std::size_t k = 0; k < market.snapshots.size(); ++k) {
        auto j = to_json(market.reports[k]);
        j["year"] = run.config().years[k];
        j["admissible"] = market.reports[k].admissible();
        admissible = admissible && market.reports[k].admissible();
        doc.push_back(std::move(j));
    }
    out << doc.dump(2) << '\n';
    if (write) {
        run.prepare_output(f.force);
        run.open("report.json") << doc.dump(2) << '\n';
        run.finish();
    }
    return admissible ? 0 : static_cast<int>(ErrorKind::Data);
}

inline int cmd_synth(const CLI::App &sub, const Flags &f, std::ostream &, std::ostream &log) {
    Run run("synth", resolve(sub, f), log);
    if (run.config().input)
        throw UsageError("synth does not take --input");
    run.prepare_output(f.force);
    auto &c = run.config();
    if (c.years.empty())
        c.years = {2008};
    std::vector<MarketSnapshot> years;
    for (int y : c.years)
        years.push_back(synth_panel_year(y, c.synth.shape, c.synth.seed, c.synth.n_banks));
    auto file = run.open("market.csv");
    bool header = true;
    for (const auto &s : years) {
        write_market(file, s, header);
        header = false;
    }
    file.close();
    run.finish();
    return 0;
}

inline int cmd_reconstruct(const CLI::App &sub, const Flags &f, std::ostream &, std::ostream &log) {
    Run run("reconstruct", resolve(sub, f), log);
    run.prepare_output(f.force);
    auto market = load_markets(run.config(), &run);
    const auto &c = run.config();
    auto summary = run.open("networks.csv");
    summary << "year,index,links,realized_density,total\n";
    for (std::size_t k = 0; k < market.snapshots.size(); ++k) {
        const auto &s = market.snapshots[k];
        const int year = c.years[k];
        const auto params = ReconstructionParams::calibrated(s, c.density, c.ensemble_size, c.master_seed);
        run.add_calibration(year, s.size(), params.z, c.density);
        const Ensemble ens(s, params);
        std::vector<ExposureMatrix> nets(ens.size(), ExposureMatrix(s.size(), {}));
        parallel_for(ens.size(), f.jobs, [&](std::size_t i) { nets[i] = ens[i]; });
        for (std::size_t i = 0; i < nets.size(); ++i) {
            std::ostringstream name;
            name << "exposures/" << year << "/net_" << std::setw(4) << std::setfill('0') << i << ".csv";
            auto file = run.open(name.str());
            write_exposures(file, nets[i], s);
            summary << year << ',' << i << ',' << nets[i].entries().size() << ','
                    << format_double(nets[i].realized_density()) << ',' << format_double(nets[i].total()) << '\n';
        }
    }
    summary.close();
    run.finish();
    return 0;
}

inline int cmd_group(const CLI::App &sub, const Flags &f, std::ostream &, std::ostream &log) {
    ScenarioConfig c = resolve(sub, f);
    const bool delta_sweep = c.kind == ScenarioKind::DeltaSweep;
    if (c.kind_explicit && c.kind != ScenarioKind::Group && !delta_sweep)
        throw UsageError("config kind '" + to_string(c.kind) + "' does not match group-shock");
    if (!delta_sweep)
        c.kind = ScenarioKind::Group;
    const bool has_zero = std::find(c.rhos.begin(), c.rhos.end(), 0.0) != c.rhos.end();
    if (delta_sweep && !has_zero)
        throw UsageError("a delta sweep needs rho = 0 in the rho list");

    Run run("group-shock", c, log);
    run.prepare_output(f.force);
    auto market = load_markets(run.config(), &run);
    const auto &cfg = run.config();

    GroupSweepSpec spec;
    spec.psi_grid = linear_grid(cfg.psi.min, cfg.psi.max, cfg.psi.count);
    spec.rhos = cfg.rhos;
    spec.modes = cfg.damping_modes();
    spec.base = cfg.shock_base();

    auto results = run.open("results.csv");
    std::optional<std::ofstream> deltas;
    if (has_zero)
        deltas = run.open("delta.csv");
    nlohmann::ordered_json trajectories = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < market.snapshots.size(); ++k) {
        const auto &s = market.snapshots[k];
        const int year = cfg.years[k];
        const auto params = ReconstructionParams::calibrated(s, cfg.density, cfg.ensemble_size, cfg.master_seed);
        run.add_calibration(year, s.size(), params.z, cfg.density);
        const Ensemble ens(s, params);
        const auto result = group_sweep(ens, spec, f.jobs);
        write_group_results(results, result, year, k == 0);
        if (deltas)
            write_deltas(*deltas, result.deltas(), year, k == 0);

        // one member's trajectories, for inspection
        if (ens.size() > 0) {
            const auto matrices = LeverageMatrices::build(ens[0], s);
            for (const auto &v : result.variant_list())
                for (double psi : spec.psi_grid) {
                    ShockParams p = spec.base;
                    p.rho = v.rho;
                    p.damping = v.damping;
                    RunOptions o;
                    o.keep_history = f.full_trajectory;
                    auto j = to_json(dsrank::run(group_shock(s.size(), psi), matrices, s, p, o), f.full_trajectory);
                    nlohmann::ordered_json entry;
                    entry["year"] = year;
                    entry["member"] = 0;
                    entry["psi"] = psi;
                    entry["rho"] = v.rho;
                    entry["damping"] = v.damping.label();
                    entry["trajectory"] = std::move(j);
                    trajectories.push_back(std::move(entry));
                }
        }
    }
    results.close();
    if (deltas)
        deltas->close();
    run.open("trajectories.json") << trajectories.dump(1) << '\n';
    run.finish();
    return 0;
}

inline int cmd_individual(const CLI::App &sub, const Flags &f, std::ostream &, std::ostream &log) {
    ScenarioConfig c = resolve(sub, f);
    if (c.kind_explicit && c.kind != ScenarioKind::Individual)
        throw UsageError("config kind '" + to_string(c.kind) + "' does not match individual-shock");
    c.kind = ScenarioKind::Individual;
    Run run("individual-shock", c, log);
    run.prepare_output(f.force);
    auto market = load_markets(run.config(), &run);
    const auto &cfg = run.config();

    IndividualSweepSpec spec;
    spec.rhos = cfg.rhos;
    spec.modes = cfg.damping_modes();
    spec.base = cfg.shock_base();

    auto results = run.open("results.csv");
    for (std::size_t k = 0; k < market.snapshots.size(); ++k) {
        const auto &s = market.snapshots[k];
        const int year = cfg.years[k];
        const auto params = ReconstructionParams::calibrated(s, cfg.density, cfg.ensemble_size, cfg.master_seed);
        run.add_calibration(year, s.size(), params.z, cfg.density);
        const auto result = individual_sweep(Ensemble(s, params), spec, f.jobs);
        write_individual_results(results, result, year, k == 0);
        for (std::size_t v = 0; v < result.variants.size(); ++v) {
            auto file = run.open("profiles_" + std::to_string(year) + "_" + variant_tag(result.variants[v]) + ".csv");
            write_profiles(file, result.profiles(v));
        }
    }
    results.close();
    run.finish();
    return 0;
}

inline int cmd_leverage(const CLI::App &sub, const Flags &f, std::ostream &, std::ostream &log) {
    ScenarioConfig c = resolve(sub, f);
    if (c.kind_explicit && c.kind != ScenarioKind::Leverage)
        throw UsageError("config kind '" + to_string(c.kind) + "' does not match leverage");
    c.kind = ScenarioKind::Leverage;
    Run run("leverage", c, log);
    run.prepare_output(f.force);
    auto market = load_markets(run.config(), &run);
    const auto &cfg = run.config();
    for (std::size_t k = 0; k < market.snapshots.size(); ++k) {
        const auto &s = market.snapshots[k];
        const int year = cfg.years[k];
        const auto params = ReconstructionParams::calibrated(s, cfg.density, cfg.ensemble_size, cfg.master_seed);
        run.add_calibration(year, s.size(), params.z, cfg.density);
        const Ensemble ens(s, params);
        for (double rho : cfg.rhos) {
            const auto r = leverage_sweep(ens, cfg.lgd, rho, f.jobs);
            const std::string tag = std::to_string(year) + "_rho" + format_double(rho);
            auto lev = run.open("leverage_" + tag + ".csv");
            write_leverage(lev, r, s);
            auto hist = run.open("histograms_" + tag + ".csv");
            write_histograms(hist, r);
        }
    }
    run.finish();
    return 0;
}

inline int cmd_plot(const CLI::App &sub, const Flags &f, std::ostream &, std::ostream &log) {
    ScenarioConfig c;
    if (sub.get_option("--output")->count() > 0)
        c.output = f.output;
    c.seed_source = "unused";
    const std::filesystem::path input = absolute_path(f.results);
    std::ifstream in(input);
    if (!in)
        throw UsageError("cannot read " + input.string());
    std::string header;
    std::getline(in, header);
    csv::strip_cr(header);
    if (header.size() >= 3 && header.compare(0, 3, "\xEF\xBB\xBF") == 0)
        header.erase(0, 3);
    in.clear();
    in.seekg(0);

    Run run("plot", c, log);
    run.add_input(input);
    run.prepare_output(f.force);
    if (header == kResultsHeader) {
        const auto rows = read_results(in, input.string());
        std::vector<std::string> modes;
        for (const auto &r : rows)
            if (r.scenario == "group" && std::find(modes.begin(), modes.end(), r.damping) == modes.end())
                modes.push_back(r.damping);
        if (modes.empty())
            throw DataError(input.string() + ": no group results to plot");
        for (const auto &mode : modes) {
            std::string tag = mode;
            std::replace(tag.begin(), tag.end(), ':', '-');
            auto file = run.open("heatmap_" + tag + ".svg");
            svg::emit_heatmap(file, svg::heatmap_panels(rows, mode), "group DS, damping " + mode);
        }
    } else if (header == kProfileHeader) {
        const auto profiles = read_profiles(in, input.string());
        auto file = run.open("scatter.svg");
        svg::emit_scatter(file, profiles, "impact and vulnerability");
    } else {
        throw DataError(input.string() + ": line 1: not a results or profiles table");
    }
    run.finish();
    return 0;
}

} // namespace cli

/**
 * Parse `argv` and run one subcommand. Returns 0 on success, 1 for usage
 * errors, 2 for data errors, 3 for numerical failures and 4 for internal
 * errors.
 */
inline int cli_main(int argc, const char *const *argv, std::ostream &out = std::cout, std::ostream &err = std::cerr) {
    using namespace cli;
    CLI::App app{"Debt-Solvency Rank stress testing of interbank markets", "dsrank"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    Flags f;

    auto *validate_cmd = app.add_subcommand("validate", "Check a market file and print the validation report");
    add_market_flags(*validate_cmd, f);
    add_output_flags(*validate_cmd, f);

    auto *synth_cmd = app.add_subcommand("synth", "Write a synthetic market calibrated to the panel aggregates");
    add_market_flags(*synth_cmd, f);
    add_output_flags(*synth_cmd, f);

    auto *reconstruct_cmd = app.add_subcommand("reconstruct", "Sample and dump an ensemble of exposure networks");
    add_market_flags(*reconstruct_cmd, f);
    add_output_flags(*reconstruct_cmd, f);
    add_network_flags(*reconstruct_cmd, f);

    auto *group_cmd = app.add_subcommand("group-shock", "DS over a grid of uniform initial shocks");
    add_market_flags(*group_cmd, f);
    add_output_flags(*group_cmd, f);
    add_network_flags(*group_cmd, f);
    add_shock_flags(*group_cmd, f);
    group_cmd->add_option("--psi-min", f.psi_min, "Smallest shock");
    group_cmd->add_option("--psi-max", f.psi_max, "Largest shock");
    group_cmd->add_option("--psi-count", f.psi_count, "Grid points");
    group_cmd->add_flag("--full-trajectory", f.full_trajectory, "Store every step in trajectories.json");

    auto *individual_cmd = app.add_subcommand("individual-shock", "Impact and vulnerability of every bank");
    add_market_flags(*individual_cmd, f);
    add_output_flags(*individual_cmd, f);
    add_network_flags(*individual_cmd, f);
    add_shock_flags(*individual_cmd, f);

    auto *leverage_cmd = app.add_subcommand("leverage", "Interbank leverage per bank and its distribution");
    add_market_flags(*leverage_cmd, f);
    add_output_flags(*leverage_cmd, f);
    add_network_flags(*leverage_cmd, f);
    leverage_cmd->add_option("--lambda", f.lgd, "Loss given default");
    leverage_cmd->add_option("--rho", f.rhos, "Funding shock weight(s)")->delimiter(',');

    auto *plot_cmd = app.add_subcommand("plot", "Render SVG figures from a results or profiles CSV");
    plot_cmd->add_option("results", f.results, "results.csv or a profiles CSV")->required();
    add_output_flags(*plot_cmd, f);

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError &e) {
            const int code = app.exit(e, out, err);
            return code == 0 ? 0 : static_cast<int>(ErrorKind::Usage);
        }
        if (validate_cmd->parsed())
            return cmd_validate(*validate_cmd, f, out, err);
        if (synth_cmd->parsed())
            return cmd_synth(*synth_cmd, f, out, err);
        if (reconstruct_cmd->parsed())
            return cmd_reconstruct(*reconstruct_cmd, f, out, err);
        if (group_cmd->parsed())
            return cmd_group(*group_cmd, f, out, err);
        if (individual_cmd->parsed())
            return cmd_individual(*individual_cmd, f, out, err);
        if (leverage_cmd->parsed())
            return cmd_leverage(*leverage_cmd, f, out, err);
        if (plot_cmd->parsed())
            return cmd_plot(*plot_cmd, f, out, err);
        throw InternalError("no subcommand dispatched");
    } catch (const Error &e) {
        err << "dsrank: " << e.what() << '\n';
        return static_cast<int>(e.kind());
    } catch (const std::filesystem::filesystem_error &e) {
        err << "dsrank: " << e.what() << '\n';
        return static_cast<int>(ErrorKind::Data);
    } catch (const std::exception &e) {
        err << "dsrank: internal error: " << e.what() << '\n';
        return static_cast<int>(ErrorKind::Internal);
    }
}

} // namespace dsrank
