#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "contagion.hpp"
#include "error.hpp"
#include "market.hpp"
#include "numeric.hpp"

namespace dsrank {

inline constexpr double kAccountingTolerance = 1e-12;

/// Both forms of the DS Rank: weighted distress gain and relative equity loss.
struct DsForms {
    double weighted;
    double equity;
};

inline DsForms ds_forms(const Trajectory &traj, const MarketSnapshot &snapshot) {
    CompensatedSum weighted, equity_initial, equity_final;
    for (std::size_t i = 0; i < snapshot.size(); ++i) {
        if (!snapshot.live(i))
            continue;
        weighted += (traj.h_final[i] - traj.h_initial[i]) * snapshot.weight(i);
        const double e0 = snapshot.bank(i).equity;
        equity_initial += e0 * (1.0 - traj.h_initial[i]);
        equity_final += e0 * (1.0 - traj.h_final[i]);
    }
    return {weighted.value(), (equity_initial.value() - equity_final.value()) / snapshot.total_equity()};
}

/**
 * DS(t*) = sum_i [h_i(t*) - h_i(1)] nu_i, the fraction of system equity
 * lost beyond the initial shock. Cross-checked against [E(1) - E(t*)] / E(0).
 */
inline double ds_rank(const Trajectory &traj, const MarketSnapshot &snapshot) {
    const DsForms forms = ds_forms(traj, snapshot);
    if (!(std::abs(forms.weighted - forms.equity) < kAccountingTolerance))
        throw InternalError("DS accounting identity violated: " + std::to_string(forms.weighted) + " vs " +
                            std::to_string(forms.equity));
    return forms.weighted;
}

/// Every bank loses the same fraction psi of its equity.
inline std::vector<double> group_shock(std::size_t n, double psi) {
    if (!(psi >= 0.0 && psi <= 1.0))
        throw UsageError("psi must lie in [0, 1]");
    return std::vector<double>(n, psi);
}

/// Bank u fails, nobody else is hit.
inline std::vector<double> individual_shock(std::size_t n, std::size_t u) {
    if (u >= n)
        throw UsageError("bank index out of range");
    std::vector<double> h(n, 0.0);
    h[u] = 1.0;
    return h;
}

inline std::vector<double> individual_shock(const MarketSnapshot &snapshot, const std::string &bank_id) {
    auto u = snapshot.index_of(bank_id);
    if (!u)
        throw UsageError("unknown bank id \"" + bank_id + "\"");
    return individual_shock(snapshot.size(), *u);
}

/**
 * Group-shock DS when no bank defaults after one round and banks spread
 * only once: psi C [lambda + rho gamma(1)] / E(0), gamma(1) = rho psi / (1 - rho psi).
 * Exact when the exposure matrix sums to C.
 */
inline double analytic_no_fail(double psi, double lgd, double rho, const MarketSnapshot &snapshot) {
    if (!(rho * psi < 1.0))
        throw UsageError("no-fail limit requires rho * psi < 1");
    const double gamma1 = rho * psi / (1.0 - rho * psi);
    return psi * snapshot.total_volume() * (lgd + rho * gamma1) / snapshot.total_equity();
}

/// Group-shock DS when every bank ends up defaulted.
inline double analytic_full_fail(double psi) {
    if (!(psi >= 0.0 && psi <= 1.0))
        throw UsageError("psi must lie in [0, 1]");
    return 1.0 - psi;
}

/// Market equity loss caused by the default of bank u, relative to the equity of the others.
inline double impact(std::size_t u, const LeverageMatrices &matrices, const MarketSnapshot &snapshot,
                     const ShockParams &params, const RunOptions &options = {}) {
    const double nu = snapshot.weight(u);
    if (!(nu < 1.0))
        throw UsageError("impact is undefined in a single-bank market");
    const auto traj = run(individual_shock(snapshot.size(), u), matrices, snapshot, params, options);
    return ds_rank(traj, snapshot) / (1.0 - nu);
}

inline double impact(std::size_t u, const ExposureMatrix &exposures, const MarketSnapshot &snapshot,
                     const ShockParams &params) {
    return impact(u, LeverageMatrices::build(exposures, snapshot), snapshot, params);
}

/// Mean final distress of bank u over the individual defaults of every other bank.
inline double vulnerability(std::size_t u, const LeverageMatrices &matrices, const MarketSnapshot &snapshot,
                            const ShockParams &params, const RunOptions &options = {}) {
    const std::size_t n = snapshot.size();
    if (n < 2)
        throw UsageError("vulnerability needs at least two banks");
    if (u >= n)
        throw UsageError("bank index out of range");
    CompensatedSum total;
    for (std::size_t j = 0; j < n; ++j) {
        if (j == u)
            continue;
        total += run(individual_shock(n, j), matrices, snapshot, params, options).h_final[u];
    }
    return total.value() / static_cast<double>(n - 1);
}

inline double vulnerability(std::size_t u, const ExposureMatrix &exposures, const MarketSnapshot &snapshot,
                            const ShockParams &params) {
    return vulnerability(u, LeverageMatrices::build(exposures, snapshot), snapshot, params);
}

struct BankRiskProfile {
    std::string bank_id;
    double impact = 0.0;
    double vulnerability = 0.0;
    double leverage = 0.0;          ///< Lambda_u
    double extended_leverage = 0.0; ///< lambda Lambda_u + rho Upsilon_u
    double weight = 0.0;            ///< nu_u
};

/**
 * Impact and vulnerability of every bank from one sweep of n individual
 * defaults on a single exposure matrix. All n runs share the LGD draws
 * keyed by `lgd_key`.
 */
inline std::vector<BankRiskProfile> risk_profiles(const LeverageMatrices &matrices, const MarketSnapshot &snapshot,
                                                  const ShockParams &params, std::uint64_t lgd_key = 0) {
    const std::size_t n = snapshot.size();
    if (n < 2)
        throw UsageError("risk profiles need at least two banks");
    std::vector<BankRiskProfile> out(n);
    std::vector<CompensatedSum> received(n);
    for (std::size_t j = 0; j < n; ++j) {
        RunOptions options;
        options.lgd_key = lgd_key;
        const auto traj = run(individual_shock(n, j), matrices, snapshot, params, options);
        const double nu = snapshot.weight(j);
        out[j].impact = nu < 1.0 ? ds_rank(traj, snapshot) / (1.0 - nu) : 0.0;
        for (std::size_t u = 0; u < n; ++u)
            if (u != j)
                received[u] += traj.h_final[u];
    }
    for (std::size_t u = 0; u < n; ++u) {
        out[u].bank_id = snapshot.bank(u).bank_id;
        out[u].vulnerability = received[u].value() / static_cast<double>(n - 1);
        out[u].leverage = matrices.credit_row_sum(u);
        out[u].extended_leverage = params.lgd * out[u].leverage + params.rho * matrices.funding_row_sum(u);
        out[u].weight = snapshot.weight(u);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Leverage distributions

struct LeverageEntry {
    double leverage;          ///< Lambda_u
    double extended_leverage; ///< lambda Lambda_u + rho Upsilon_u, at gamma = 1
};

inline std::vector<LeverageEntry> leverage_profile(const LeverageMatrices &matrices, double lgd, double rho) {
    std::vector<LeverageEntry> out(matrices.size());
    for (std::size_t u = 0; u < out.size(); ++u) {
        const double credit = matrices.credit_row_sum(u);
        out[u] = {credit, lgd * credit + rho * matrices.funding_row_sum(u)};
    }
    return out;
}

struct Histogram {
    std::vector<double> edges;        ///< bin edges, size = counts.size() + 1
    std::vector<std::size_t> counts;
    std::size_t zeros = 0;            ///< values <= 0, not representable on a log axis
    double median = 0.0;              ///< over all values, zeros included
};

/**
 * Histogram on logarithmic bins, `per_decade` bins per factor of ten,
 * aligned to powers of ten.
 */
inline Histogram log_histogram(std::vector<double> values, int per_decade = 30) {
    if (per_decade < 1)
        throw UsageError("need at least one bin per decade");
    Histogram h;
    if (values.empty())
        return h;
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size();
    h.median = m % 2 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);

    auto first_positive = std::upper_bound(values.begin(), values.end(), 0.0);
    h.zeros = static_cast<std::size_t>(first_positive - values.begin());
    if (first_positive == values.end())
        return h;
    const double k = static_cast<double>(per_decade);
    const long lo = static_cast<long>(std::floor(std::log10(*first_positive) * k));
    long hi = static_cast<long>(std::floor(std::log10(values.back()) * k)) + 1;
    hi = std::max(hi, lo + 1);
    for (long b = lo; b <= hi; ++b)
        h.edges.push_back(std::pow(10.0, static_cast<double>(b) / k));
    h.counts.assign(static_cast<std::size_t>(hi - lo), 0);
    for (auto it = first_positive; it != values.end(); ++it) {
        long b = static_cast<long>(std::floor(std::log10(*it) * k)) - lo;
        // log10 rounding can put a value a hair outside its bin
        if (b > 0 && *it < h.edges[static_cast<std::size_t>(b)])
            --b;
        if (b + 1 < static_cast<long>(h.edges.size()) && *it >= h.edges[static_cast<std::size_t>(b + 1)])
            ++b;
        b = std::clamp(b, 0L, hi - lo - 1);
        ++h.counts[static_cast<std::size_t>(b)];
    }
    return h;
}

} // namespace dsrank
