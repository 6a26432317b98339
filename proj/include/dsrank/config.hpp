#pragma once

// Scenario configuration. Values come from three layers, later ones
// winning: built-in defaults, the JSON file given with --config, then
// command-line flags. The master seed has one more fallback between the
// defaults and the file: the DSRANK_SEED environment variable.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "contagion.hpp"
#include "error.hpp"
#include "market.hpp"

namespace dsrank {

enum class ScenarioKind { Group, Individual, Leverage, DeltaSweep };

inline std::string to_string(ScenarioKind k) {
    switch (k) {
    case ScenarioKind::Group: return "group";
    case ScenarioKind::Individual: return "individual";
    case ScenarioKind::Leverage: return "leverage";
    case ScenarioKind::DeltaSweep: return "delta-sweep";
    }
    return "?";
}

inline ScenarioKind parse_kind(const std::string &text) {
    if (text == "group")
        return ScenarioKind::Group;
    if (text == "individual")
        return ScenarioKind::Individual;
    if (text == "leverage")
        return ScenarioKind::Leverage;
    if (text == "delta-sweep")
        return ScenarioKind::DeltaSweep;
    throw UsageError("unknown scenario kind '" + text + "' (expected group, individual, leverage or delta-sweep)");
}

struct SynthSpec {
    std::size_t n_banks = kEuropeanPanelBanks;
    double shape = 1.0;
    std::uint64_t seed = 0;
};

struct PsiGrid {
    double min = 0.0;
    double max = 1.0;
    std::size_t count = 101;
};

struct ScenarioConfig {
    std::optional<std::filesystem::path> input; ///< market CSV; synthetic panel when absent
    SynthSpec synth;
    std::vector<int> years; ///< empty: every year of the input, or 2008 for synthetic markets
    std::string policy = "mark"; ///< admission of insolvent banks: "mark" or "drop"
    double density = 0.10;
    std::size_t ensemble_size = 1000;
    std::uint64_t master_seed = 0;
    std::string seed_source = "default"; ///< default, env, config or flag
    double lgd = 1.0;
    std::optional<BetaLgd> beta_lgd;
    std::vector<double> rhos{0.0, 1.0};
    std::vector<std::string> dampings{"once"};
    double stop_tol = 1e-10;
    double gamma_cap = 1e6;
    int max_steps = 10000;
    PsiGrid psi;
    ScenarioKind kind = ScenarioKind::Group;
    bool kind_explicit = false; ///< set when a config file names the kind
    std::filesystem::path output = "dsrank-out";

    AdmissionPolicy admission() const {
        if (policy == "mark")
            return AdmissionPolicy::MarkDefaulted;
        if (policy == "drop")
            return AdmissionPolicy::Drop;
        throw UsageError("policy must be 'mark' or 'drop', got '" + policy + "'");
    }

    std::vector<Damping> damping_modes() const {
        std::vector<Damping> out;
        for (const auto &d : dampings)
            out.push_back(Damping::parse(d));
        return out;
    }

    ShockParams shock_base() const {
        ShockParams p;
        p.lgd = lgd;
        p.stop_tol = stop_tol;
        p.gamma_cap = gamma_cap;
        p.max_steps = max_steps;
        p.beta_lgd = beta_lgd;
        if (p.beta_lgd)
            p.beta_lgd->seed = master_seed;
        return p;
    }

    /// Throws UsageError naming the first out-of-range field.
    void check() const {
        if (!(psi.min >= 0.0 && psi.max <= 1.0 && psi.min <= psi.max))
            throw UsageError("psi grid must satisfy 0 <= min <= max <= 1");
        if (psi.count == 0)
            throw UsageError("psi grid needs at least one point");
        if (rhos.empty())
            throw UsageError("rho list is empty");
        for (double r : rhos)
            if (!(r >= 0.0 && r <= 1.0))
                throw UsageError("rho values must lie in [0, 1]");
        if (dampings.empty())
            throw UsageError("damping list is empty");
        damping_modes();
        if (!(lgd >= 0.0 && lgd <= 1.0))
            throw UsageError("lambda must lie in [0, 1]");
        if (beta_lgd && !(beta_lgd->alpha > 0.0 && beta_lgd->beta > 0.0))
            throw UsageError("beta LGD parameters must be positive");
        if (!(density > 0.0 && density < 1.0))
            throw UsageError("density must lie in (0, 1)");
        if (!(stop_tol > 0.0))
            throw UsageError("stop_tol must be positive");
        if (!(gamma_cap > 0.0))
            throw UsageError("gamma_cap must be positive");
        if (max_steps < 1)
            throw UsageError("max_steps must be at least 1");
        if (synth.n_banks < 2)
            throw UsageError("synthetic markets need at least 2 banks");
        if (!(synth.shape >= 0.0))
            throw UsageError("synthetic shape must be non-negative");
        admission();
        if (input && !std::filesystem::is_regular_file(*input))
            throw UsageError("input file not found: " + input->string());
    }
};

inline std::uint64_t parse_seed(const std::string &text, const std::string &what) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        if (!text.empty() && text[0] == '-')
            throw std::invalid_argument("negative");
        v = std::stoull(text, &pos, 0);
    } catch (const std::exception &) {
        throw UsageError(what + ": not an unsigned integer: '" + text + "'");
    }
    if (pos != text.size())
        throw UsageError(what + ": not an unsigned integer: '" + text + "'");
    return static_cast<std::uint64_t>(v);
}

inline nlohmann::ordered_json to_json(const ScenarioConfig &c) {
    nlohmann::ordered_json j;
    if (c.input)
        j["input"] = c.input->generic_string();
    else
        j["synth"] = {{"n_banks", c.synth.n_banks}, {"shape", c.synth.shape}, {"seed", c.synth.seed}};
    j["years"] = c.years;
    j["policy"] = c.policy;
    j["density"] = c.density;
    j["ensemble_size"] = c.ensemble_size;
    j["master_seed"] = c.master_seed;
    j["lambda"] = c.lgd;
    if (c.beta_lgd)
        j["beta_lgd"] = {{"alpha", c.beta_lgd->alpha}, {"beta", c.beta_lgd->beta}};
    j["rho"] = c.rhos;
    j["damping"] = c.dampings;
    j["stop_tol"] = c.stop_tol;
    j["gamma_cap"] = c.gamma_cap;
    j["max_steps"] = c.max_steps;
    j["psi_grid"] = {{"min", c.psi.min}, {"max", c.psi.max}, {"count", c.psi.count}};
    j["kind"] = to_string(c.kind);
    j["output"] = c.output.generic_string();
    return j;
}

namespace detail {

template <class T> T get(const nlohmann::json &j, const char *key, const std::string &where) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception &) {
        throw UsageError(where + ": field '" + key + "' has the wrong type");
    }
}

} // namespace detail

/**
 * Apply a JSON object on top of `c`. Relative paths resolve against
 * `base`, the directory of the file the object came from. A run manifest
 * is accepted too, in which case its embedded config is used.
 */
inline void apply_json(ScenarioConfig &c, const nlohmann::json &doc, const std::filesystem::path &base,
                       const std::string &where) {
    using detail::get;
    if (!doc.is_object())
        throw UsageError(where + ": expected a JSON object");
    const nlohmann::json &j = doc.contains("manifest_version") && doc.contains("config") ? doc["config"] : doc;
    static const char *known[] = {"input", "synth", "years", "policy", "density", "ensemble_size", "master_seed",
                                  "lambda", "beta_lgd", "rho", "damping", "stop_tol", "gamma_cap", "max_steps",
                                  "psi_grid", "kind", "output", "$schema"};
    for (const auto &[key, value] : j.items())
        if (std::find_if(std::begin(known), std::end(known), [&](const char *k) { return key == k; }) ==
            std::end(known))
            throw UsageError(where + ": unknown field '" + key + "'");

    auto resolve = [&](const std::string &p) {
        std::filesystem::path path(p);
        return path.is_absolute() ? path : base / path;
    };
    if (j.contains("input"))
        c.input = resolve(get<std::string>(j, "input", where));
    if (j.contains("synth")) {
        const auto &s = j["synth"];
        if (s.contains("n_banks"))
            c.synth.n_banks = get<std::size_t>(s, "n_banks", where);
        if (s.contains("shape"))
            c.synth.shape = get<double>(s, "shape", where);
        if (s.contains("seed"))
            c.synth.seed = get<std::uint64_t>(s, "seed", where);
    }
    if (j.contains("years"))
        c.years = j["years"].is_array() ? get<std::vector<int>>(j, "years", where)
                                        : std::vector<int>{get<int>(j, "years", where)};
    if (j.contains("policy"))
        c.policy = get<std::string>(j, "policy", where);
    if (j.contains("density"))
        c.density = get<double>(j, "density", where);
    if (j.contains("ensemble_size"))
        c.ensemble_size = get<std::size_t>(j, "ensemble_size", where);
    if (j.contains("master_seed")) {
        c.master_seed = get<std::uint64_t>(j, "master_seed", where);
        c.seed_source = "config";
    }
    if (j.contains("lambda"))
        c.lgd = get<double>(j, "lambda", where);
    if (j.contains("beta_lgd")) {
        if (j["beta_lgd"].is_null()) {
            c.beta_lgd.reset();
        } else {
            BetaLgd b;
            b.alpha = get<double>(j["beta_lgd"], "alpha", where);
            b.beta = get<double>(j["beta_lgd"], "beta", where);
            c.beta_lgd = b;
        }
    }
    if (j.contains("rho"))
        c.rhos = get<std::vector<double>>(j, "rho", where);
    if (j.contains("damping"))
        c.dampings = j["damping"].is_array() ? get<std::vector<std::string>>(j, "damping", where)
                                             : std::vector<std::string>{get<std::string>(j, "damping", where)};
    if (j.contains("stop_tol"))
        c.stop_tol = get<double>(j, "stop_tol", where);
    if (j.contains("gamma_cap"))
        c.gamma_cap = get<double>(j, "gamma_cap", where);
    if (j.contains("max_steps"))
        c.max_steps = get<int>(j, "max_steps", where);
    if (j.contains("psi_grid")) {
        const auto &g = j["psi_grid"];
        if (g.contains("min"))
            c.psi.min = get<double>(g, "min", where);
        if (g.contains("max"))
            c.psi.max = get<double>(g, "max", where);
        if (g.contains("count"))
            c.psi.count = get<std::size_t>(g, "count", where);
    }
    if (j.contains("kind")) {
        c.kind = parse_kind(get<std::string>(j, "kind", where));
        c.kind_explicit = true;
    }
    if (j.contains("output"))
        c.output = resolve(get<std::string>(j, "output", where));
}

/// Defaults, then DSRANK_SEED, then the file at `path` (if any).
inline ScenarioConfig load_config(const std::optional<std::filesystem::path> &path) {
    ScenarioConfig c;
    if (const char *env = std::getenv("DSRANK_SEED"); env && *env) {
        c.master_seed = parse_seed(env, "DSRANK_SEED");
        c.seed_source = "env";
    }
    if (!path)
        return c;
    std::ifstream in(*path);
    if (!in)
        throw UsageError("cannot read config file " + path->string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error &e) {
        throw UsageError("config file " + path->string() + " is not valid JSON: " + e.what());
    }
    apply_json(c, doc, path->parent_path(), path->string());
    return c;
}

} // namespace dsrank
