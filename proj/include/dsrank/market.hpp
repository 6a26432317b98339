#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "error.hpp"
#include "numeric.hpp"
#include "rng.hpp"

namespace dsrank {

/// One bank's yearly aggregates. Money in million USD.
struct BalanceSheet {
    std::string bank_id;
    std::string name;
    double interbank_assets = 0.0;
    double interbank_liabilities = 0.0;
    double equity = 0.0;
    std::optional<double> external_assets;
    std::optional<double> external_liabilities;

    bool has_external() const noexcept { return external_assets && external_liabilities; }

    /// Equity implied by total assets minus total liabilities, when known.
    std::optional<double> implied_equity() const {
        if (!has_external())
            return std::nullopt;
        return (*external_assets + interbank_assets) - (*external_liabilities + interbank_liabilities);
    }

    bool satisfies_identity(double rel_tol = 1e-6) const {
        auto implied = implied_equity();
        if (!implied)
            return true;
        const double scale = std::max({std::abs(equity), std::abs(*implied), 1e-300});
        return std::abs(*implied - equity) <= rel_tol * scale;
    }

    bool isolated() const noexcept { return interbank_assets == 0.0 && interbank_liabilities == 0.0; }
};

/**
 * All banks for one year plus the market aggregates.
 *
 * Banks flagged as initially defaulted (and any bank with non-positive
 * equity) carry zero weight: total equity sums only the positive equity of
 * live banks. Total volume C always sums interbank assets over every bank.
 */
class MarketSnapshot {
public:
    MarketSnapshot(int year, std::vector<BalanceSheet> banks, std::vector<bool> initially_defaulted = {})
        : year_(year), banks_(std::move(banks)), defaulted_(std::move(initially_defaulted)) {
        if (defaulted_.empty())
            defaulted_.assign(banks_.size(), false);
        if (defaulted_.size() != banks_.size())
            throw InternalError("defaulted flags do not match bank count");
        if (banks_.empty())
            throw DataError("empty market");
        for (std::size_t i = 0; i < banks_.size(); ++i) {
            const auto &b = banks_[i];
            if (!index_.emplace(b.bank_id, i).second)
                throw DataError("duplicate bank_id \"" + b.bank_id + "\"");
            if (!(b.interbank_assets >= 0.0) || !(b.interbank_liabilities >= 0.0))
                throw DataError("bank \"" + b.bank_id + "\": negative interbank position");
            if (!std::isfinite(b.interbank_assets) || !std::isfinite(b.interbank_liabilities) ||
                !std::isfinite(b.equity))
                throw DataError("bank \"" + b.bank_id + "\": non-finite balance-sheet value");
        }
        recompute();
        if (!(total_volume_ > 0.0))
            throw DataError("market has zero interbank volume");
        if (!(total_equity_ > 0.0))
            throw DataError("empty market: no bank with positive equity");
    }

    int year() const noexcept { return year_; }
    std::size_t size() const noexcept { return banks_.size(); }
    const std::vector<BalanceSheet> &banks() const noexcept { return banks_; }
    const BalanceSheet &bank(std::size_t i) const { return banks_.at(i); }

    /// C = sum of interbank assets.
    double total_volume() const noexcept { return total_volume_; }
    /// Sum of interbank liabilities; equals C only for a closed market.
    double total_liabilities() const noexcept { return total_liabilities_; }
    /// E(0) = sum of positive equity over live banks.
    double total_equity() const noexcept { return total_equity_; }
    /// nu_i = E_i / E(0) (zero for defaulted banks).
    double weight(std::size_t i) const { return weights_.at(i); }
    const std::vector<double> &weights() const noexcept { return weights_; }

    bool initially_defaulted(std::size_t i) const { return defaulted_.at(i); }
    const std::vector<bool> &defaulted_flags() const noexcept { return defaulted_; }
    /// True when the bank takes part in the dynamics with finite leverage.
    bool live(std::size_t i) const { return !defaulted_.at(i) && banks_.at(i).equity > 0.0; }

    /// |sum A - sum L| / C.
    double aggregate_gap() const noexcept {
        return std::abs(total_volume_ - total_liabilities_) / total_volume_;
    }

    std::optional<std::size_t> index_of(const std::string &bank_id) const {
        auto it = index_.find(bank_id);
        if (it == index_.end())
            return std::nullopt;
        return it->second;
    }

private:
    void recompute() {
        CompensatedSum assets, liabilities, equity;
        for (std::size_t i = 0; i < banks_.size(); ++i) {
            assets += banks_[i].interbank_assets;
            liabilities += banks_[i].interbank_liabilities;
            if (live(i))
                equity += banks_[i].equity;
        }
        total_volume_ = assets.value();
        total_liabilities_ = liabilities.value();
        total_equity_ = equity.value();
        weights_.assign(banks_.size(), 0.0);
        for (std::size_t i = 0; i < banks_.size(); ++i)
            if (live(i))
                weights_[i] = banks_[i].equity / total_equity_;
    }

    int year_;
    std::vector<BalanceSheet> banks_;
    std::vector<bool> defaulted_;
    std::unordered_map<std::string, std::size_t> index_;
    double total_volume_ = 0.0;
    double total_liabilities_ = 0.0;
    double total_equity_ = 0.0;
    std::vector<double> weights_;
};

// ---------------------------------------------------------------------------
// Validation

enum class IssueKind { NegativeEquity, IsolatedBank, IdentityViolation };
enum class Severity { Warning, Error };

inline const char *to_string(IssueKind k) {
    switch (k) {
    case IssueKind::NegativeEquity: return "negative equity";
    case IssueKind::IsolatedBank: return "isolated bank";
    case IssueKind::IdentityViolation: return "identity violation";
    }
    return "unknown";
}

inline const char *to_string(Severity s) { return s == Severity::Error ? "error" : "warning"; }

struct ValidationIssue {
    std::string bank_id;
    IssueKind kind;
    Severity severity;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    double aggregate_gap = 0.0;
    std::size_t admitted = 0;

    bool clean() const noexcept { return issues.empty(); }

    /// No error-severity issue; warnings (isolated banks) do not block admission.
    bool admissible() const noexcept {
        return std::none_of(issues.begin(), issues.end(),
                            [](const ValidationIssue &i) { return i.severity == Severity::Error; });
    }

    std::size_t count(IssueKind kind) const {
        return static_cast<std::size_t>(std::count_if(issues.begin(), issues.end(),
                                                      [kind](const ValidationIssue &i) { return i.kind == kind; }));
    }
};

/// What to do with banks whose equity is not positive.
enum class AdmissionPolicy {
    MarkDefaulted, ///< keep them, already defaulted before the shock
    Drop,          ///< remove them from the market
};

/**
 * Check every bank and build the admitted snapshot. Aggregates of the
 * returned snapshot are recomputed over the admitted banks.
 */
inline std::pair<MarketSnapshot, ValidationReport> validate(const MarketSnapshot &snapshot,
                                                            AdmissionPolicy policy = AdmissionPolicy::MarkDefaulted) {
    ValidationReport report;
    std::vector<BalanceSheet> kept;
    std::vector<bool> defaulted;
    kept.reserve(snapshot.size());
    for (std::size_t i = 0; i < snapshot.size(); ++i) {
        const auto &b = snapshot.bank(i);
        bool drop = false;
        if (!(b.equity > 0.0)) {
            report.issues.push_back({b.bank_id, IssueKind::NegativeEquity, Severity::Error,
                                     "equity " + std::to_string(b.equity) +
                                         (policy == AdmissionPolicy::Drop ? ", dropped" : ", marked defaulted")});
            drop = policy == AdmissionPolicy::Drop;
        }
        if (b.isolated())
            report.issues.push_back({b.bank_id, IssueKind::IsolatedBank, Severity::Warning,
                                     "no interbank assets or liabilities, retained"});
        if (!b.satisfies_identity())
            report.issues.push_back({b.bank_id, IssueKind::IdentityViolation, Severity::Error,
                                     "equity " + std::to_string(b.equity) + " differs from assets minus liabilities " +
                                         std::to_string(*b.implied_equity())});
        if (drop)
            continue;
        kept.push_back(b);
        defaulted.push_back(snapshot.initially_defaulted(i) || !(b.equity > 0.0));
    }
    bool any_live = false;
    for (std::size_t k = 0; k < kept.size(); ++k)
        any_live = any_live || (!defaulted[k] && kept[k].equity > 0.0);
    if (!any_live)
        throw DataError("empty market");
    MarketSnapshot admitted(snapshot.year(), std::move(kept), std::move(defaulted));
    report.admitted = admitted.size();
    report.aggregate_gap = admitted.aggregate_gap();
    return {std::move(admitted), std::move(report)};
}

// ---------------------------------------------------------------------------
// Synthetic markets

/// Aggregate equity and interbank volume of the 183-bank European panel, million USD.
struct YearAggregates {
    int year;
    double equity;
    double volume;
};

inline constexpr std::array<YearAggregates, 10> kEuropeanPanel{{
    {2004, 496976, 1424469},
    {2005, 900950, 2453230},
    {2006, 1207734, 3063762},
    {2007, 1542098, 3874003},
    {2008, 1291499, 3040012},
    {2009, 1680088, 2728253},
    {2010, 1708205, 2371510},
    {2011, 1629743, 2286400},
    {2012, 1699175, 2137298},
    {2013, 1778428, 2008040},
}};

inline constexpr std::size_t kEuropeanPanelBanks = 183;

inline std::optional<YearAggregates> panel_aggregates(int year) {
    for (const auto &row : kEuropeanPanel)
        if (row.year == year)
            return row;
    return std::nullopt;
}

struct SynthTargets {
    double volume; ///< C: both sum A_i and sum L_i
    double equity; ///< E(0)
};

/**
 * Heavy-tailed synthetic market. Each bank draws a log-normal size
 * factor shared by its assets, liabilities and equity, times independent
 * log-normal noise; `shape` is the log-scale standard deviation of both.
 * Columns are then rescaled so that sum A = sum L = volume and
 * sum E = equity exactly. shape = 0 gives identical banks.
 */
inline MarketSnapshot synth_market(std::size_t n_banks, SynthTargets targets, double shape, std::uint64_t seed,
                                   int year = 0) {
    if (n_banks < 2)
        throw UsageError("synth_market: need at least 2 banks");
    if (!(targets.volume > 0.0) || !(targets.equity > 0.0))
        throw UsageError("synth_market: targets must be positive");
    if (!(shape >= 0.0) || !std::isfinite(shape))
        throw UsageError("synth_market: shape must be non-negative");

    Xoshiro256 rng(derive_seed(seed, Stream::Synthetic, static_cast<std::uint64_t>(year)));
    std::vector<double> a(n_banks), l(n_banks), e(n_banks);
    for (std::size_t i = 0; i < n_banks; ++i) {
        const double size = shape * rng.normal();
        a[i] = std::exp(size + shape * rng.normal());
        l[i] = std::exp(size + shape * rng.normal());
        e[i] = std::exp(size + shape * rng.normal());
    }
    auto rescale = [](std::vector<double> &v, double target) {
        const double s = compensated_sum(v);
        for (double &x : v)
            x *= target / s;
    };
    rescale(a, targets.volume);
    rescale(l, targets.volume);
    rescale(e, targets.equity);

    std::vector<BalanceSheet> banks(n_banks);
    const int width = n_banks < 1000 ? 3 : static_cast<int>(std::to_string(n_banks - 1).size());
    for (std::size_t i = 0; i < n_banks; ++i) {
        std::string num = std::to_string(i + 1);
        if (static_cast<int>(num.size()) < width)
            num.insert(0, static_cast<std::size_t>(width) - num.size(), '0');
        banks[i].bank_id = "SYN" + num;
        banks[i].name = "Synthetic bank " + num;
        banks[i].interbank_assets = a[i];
        banks[i].interbank_liabilities = l[i];
        banks[i].equity = e[i];
    }
    return MarketSnapshot(year, std::move(banks));
}

/// Synthetic market calibrated to the published aggregates of `year`.
inline MarketSnapshot synth_panel_year(int year, double shape, std::uint64_t seed,
                                       std::size_t n_banks = kEuropeanPanelBanks) {
    auto agg = panel_aggregates(year);
    if (!agg)
        throw UsageError("no published aggregates for year " + std::to_string(year) + " (available 2004-2013)");
    return synth_market(n_banks, {agg->volume, agg->equity}, shape, seed, year);
}

} // namespace dsrank
