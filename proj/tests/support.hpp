#pragma once

// Test fixtures and independent reference implementations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <dsrank/contagion.hpp>
#include <dsrank/market.hpp>
#include <dsrank/reconstruction.hpp>
#include <dsrank/rng.hpp>

namespace dsrank::testing {

inline BalanceSheet sheet(std::string id, double a, double l, double e) {
    BalanceSheet b;
    b.bank_id = id;
    b.name = "Bank " + id;
    b.interbank_assets = a;
    b.interbank_liabilities = l;
    b.equity = e;
    return b;
}

/// Bank 1 lends 5 to bank 2, bank 2 lends 4 to bank 1, both hold equity 10.
inline MarketSnapshot two_bank_market() {
    return MarketSnapshot(2008, {sheet("B1", 5, 4, 10), sheet("B2", 4, 5, 10)});
}

inline ExposureMatrix two_bank_exposures() { return ExposureMatrix(2, {{0, 1, 5.0}, {1, 0, 4.0}}); }

struct Instance {
    MarketSnapshot snapshot;
    ExposureMatrix exposures;
};

/**
 * Random market whose balance sheets are the row and column sums of a
 * random exposure matrix, so sum_ij A_ij = C. `leverage` scales the
 * typical ratio of interbank assets to equity.
 */
inline Instance random_closed_instance(std::size_t n, std::uint64_t seed, double density = 0.3, double leverage = 1.0,
                                       double scale = 1.0) {
    Xoshiro256 rng(seed);
    std::vector<Exposure> entries;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && rng.uniform() < density)
                entries.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                                   scale * std::exp(rng.normal())});
    // make sure there is at least one link
    if (entries.empty())
        entries.push_back({0, 1, scale});
    ExposureMatrix m(n, std::move(entries));
    auto lend = m.lending();
    auto borrow = m.borrowing();
    std::vector<BalanceSheet> banks;
    for (std::size_t i = 0; i < n; ++i) {
        const double size = std::max(lend[i], scale * 0.1);
        const double equity = size / leverage * std::exp(0.5 * rng.normal());
        banks.push_back(sheet("R" + std::to_string(i), lend[i], borrow[i], equity));
    }
    return {MarketSnapshot(2000, std::move(banks)), std::move(m)};
}

/// Dense copy of a sparse exposure matrix.
inline std::vector<std::vector<double>> dense(const ExposureMatrix &m) {
    std::vector<std::vector<double>> a(m.size(), std::vector<double>(m.size(), 0.0));
    for (const auto &e : m.entries())
        a[e.lender][e.borrower] = e.amount;
    return a;
}

/**
 * Two-sided exact binomial tail probability of observing k successes in n
 * trials with success probability p: twice the smaller tail, capped at 1.
 */
inline double binomial_two_sided(std::size_t k, std::size_t n, double p) {
    auto log_pmf = [&](std::size_t x) {
        const double xd = static_cast<double>(x), nd = static_cast<double>(n);
        return std::lgamma(nd + 1.0) - std::lgamma(xd + 1.0) - std::lgamma(nd - xd + 1.0) + xd * std::log(p) +
               (nd - xd) * std::log1p(-p);
    };
    double lower = 0.0, upper = 0.0;
    for (std::size_t x = 0; x <= k; ++x)
        lower += std::exp(log_pmf(x));
    for (std::size_t x = k; x <= n; ++x)
        upper += std::exp(log_pmf(x));
    return std::min(1.0, 2.0 * std::min(lower, upper));
}

/// Two-sided normal tail mass beyond four standard deviations.
inline constexpr double kFourSigmaTail = 6.334248366623996e-05;

struct ReferenceRun {
    std::vector<std::vector<double>> h; ///< h(0) .. h(T)
};

/**
 * Textbook DebtRank on a dense leverage matrix W_ij = A_ij / E_i with
 * lambda = 1: h_i(t+1) = min(1, h_i(t) + sum_{j: h_j(t-1) < 1} W_ij dh_j(t) D(t - t_j)),
 * iterated a fixed number of rounds. `once` selects single transmission,
 * otherwise transmission persists until default.
 */
inline ReferenceRun reference_debtrank(const std::vector<std::vector<double>> &exposure,
                                       const std::vector<double> &equity, const std::vector<double> &initial,
                                       bool once, int rounds) {
    const std::size_t n = equity.size();
    std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            w[i][j] = exposure[i][j] / equity[i];
    ReferenceRun r;
    r.h.push_back(std::vector<double>(n, 0.0));
    r.h.push_back(initial);
    std::vector<int> first(n, -1);
    for (std::size_t i = 0; i < n; ++i)
        if (initial[i] > 0)
            first[i] = 1;
    for (int t = 1; t < rounds; ++t) {
        const auto &prev = r.h[static_cast<std::size_t>(t) - 1];
        const auto &cur = r.h[static_cast<std::size_t>(t)];
        std::vector<double> next(n);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (prev[j] >= 1.0 || first[j] < 0)
                    continue;
                const double d = once ? (t == first[j] ? 1.0 : 0.0) : 1.0;
                acc += w[i][j] * (cur[j] - prev[j]) * d;
            }
            next[i] = std::min(1.0, cur[i] + acc);
        }
        for (std::size_t i = 0; i < n; ++i)
            if (first[i] < 0 && next[i] > 0)
                first[i] = t + 1;
        r.h.push_back(std::move(next));
    }
    return r;
}

} // namespace dsrank::testing
