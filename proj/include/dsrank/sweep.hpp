#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "contagion.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "numeric.hpp"
#include "parallel.hpp"
#include "reconstruction.hpp"

namespace dsrank {

/// One (rho, damping) combination of a sweep.
struct ShockVariant {
    double rho;
    Damping damping;
};

inline std::vector<ShockVariant> variants(const std::vector<double> &rhos, const std::vector<Damping> &modes) {
    std::vector<ShockVariant> out;
    for (const auto &mode : modes)
        for (double rho : rhos)
            out.push_back({rho, mode});
    return out;
}

/// `count` evenly spaced points on [lo, hi]; the endpoints are exact.
inline std::vector<double> linear_grid(double lo, double hi, std::size_t count) {
    if (count == 0)
        return {};
    if (count == 1)
        return {lo};
    std::vector<double> g(count);
    for (std::size_t k = 0; k < count; ++k)
        g[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
    g.back() = hi;
    return g;
}

/// Ensemble statistics of one scenario point.
struct ScenarioSummary {
    MeanStd ds;
    double gamma_max = 0.0; ///< ensemble mean of the per-run maximum gamma
    double t_star = 0.0;    ///< ensemble mean of t*
    std::size_t flagged = 0; ///< runs that hit max_steps, excluded from the means
};

struct RunRecord {
    double ds = 0.0;
    double gamma_max = 0.0;
    int t_star = 0;
    bool flagged = false;
};

inline ScenarioSummary summarize(const std::vector<const RunRecord *> &records) {
    std::vector<double> ds, gamma, t_star;
    ScenarioSummary s;
    for (const RunRecord *r : records) {
        if (r->flagged) {
            ++s.flagged;
            continue;
        }
        ds.push_back(r->ds);
        gamma.push_back(r->gamma_max);
        t_star.push_back(static_cast<double>(r->t_star));
    }
    s.ds = mean_std(ds);
    s.gamma_max = mean_std(gamma).mean;
    s.t_star = mean_std(t_star).mean;
    return s;
}

// ---------------------------------------------------------------------------
// Group shocks

struct GroupSweepSpec {
    std::vector<double> psi_grid;
    std::vector<double> rhos{0.0, 1.0};
    std::vector<Damping> modes{Damping::once()};
    ShockParams base; ///< lgd, tolerances and caps; rho and damping come from the variants
};

/// DS^[rho] - DS^[0] at the psi where DS^[rho] peaks.
struct DeltaSummary {
    double rho = 0.0;
    Damping damping = Damping::once();
    double psi_star = 0.0;
    double ds_rho = 0.0;
    double ds_zero = 0.0;
    MeanStd delta; ///< paired over ensemble members
};

class GroupSweepResult {
public:
    GroupSweepResult(GroupSweepSpec spec, std::size_t members)
        : spec_(std::move(spec)), variants_(variants(spec_.rhos, spec_.modes)), members_(members),
          records_(members * variants_.size() * spec_.psi_grid.size()) {}

    const GroupSweepSpec &spec() const noexcept { return spec_; }
    const std::vector<ShockVariant> &variant_list() const noexcept { return variants_; }
    std::size_t members() const noexcept { return members_; }

    RunRecord &record(std::size_t member, std::size_t variant, std::size_t psi) {
        return records_[index(member, variant, psi)];
    }
    const RunRecord &record(std::size_t member, std::size_t variant, std::size_t psi) const {
        return records_[index(member, variant, psi)];
    }

    ScenarioSummary summary(std::size_t variant, std::size_t psi) const {
        std::vector<const RunRecord *> rs;
        rs.reserve(members_);
        for (std::size_t m = 0; m < members_; ++m)
            rs.push_back(&record(m, variant, psi));
        return summarize(rs);
    }

    std::optional<std::size_t> find_variant(double rho, const Damping &mode) const {
        for (std::size_t v = 0; v < variants_.size(); ++v)
            if (variants_[v].rho == rho && variants_[v].damping == mode)
                return v;
        return std::nullopt;
    }

    /// Loss-maximizing psi per variant and the paired difference to rho = 0.
    std::vector<DeltaSummary> deltas() const {
        std::vector<DeltaSummary> out;
        for (std::size_t v = 0; v < variants_.size(); ++v) {
            auto base = find_variant(0.0, variants_[v].damping);
            if (!base)
                continue;
            std::size_t best = 0;
            double best_ds = -1.0;
            for (std::size_t p = 0; p < spec_.psi_grid.size(); ++p) {
                const double ds = summary(v, p).ds.mean;
                if (ds > best_ds) {
                    best_ds = ds;
                    best = p;
                }
            }
            DeltaSummary d;
            d.rho = variants_[v].rho;
            d.damping = variants_[v].damping;
            if (spec_.psi_grid.empty()) {
                out.push_back(d);
                continue;
            }
            d.psi_star = spec_.psi_grid[best];
            d.ds_rho = summary(v, best).ds.mean;
            d.ds_zero = summary(*base, best).ds.mean;
            std::vector<double> diffs;
            for (std::size_t m = 0; m < members_; ++m) {
                const auto &a = record(m, v, best);
                const auto &b = record(m, *base, best);
                if (!a.flagged && !b.flagged)
                    diffs.push_back(a.ds - b.ds);
            }
            d.delta = mean_std(diffs);
            out.push_back(d);
        }
        return out;
    }

private:
    std::size_t index(std::size_t member, std::size_t variant, std::size_t psi) const {
        return (member * variants_.size() + variant) * spec_.psi_grid.size() + psi;
    }

    GroupSweepSpec spec_;
    std::vector<ShockVariant> variants_;
    std::size_t members_;
    std::vector<RunRecord> records_;
};

inline RunRecord record_run(const Trajectory &traj, const MarketSnapshot &snapshot) {
    RunRecord r;
    r.ds = ds_rank(traj, snapshot);
    r.gamma_max = traj.gamma_max();
    r.t_star = traj.t_star;
    r.flagged = traj.reason == Termination::MaxSteps;
    return r;
}

/**
 * Group shocks on every ensemble member, every variant and every psi.
 * Members run in parallel; each writes only its own records, so the
 * result is identical for any `jobs`.
 */
inline GroupSweepResult group_sweep(const Ensemble &ensemble, const GroupSweepSpec &spec, unsigned jobs = 1) {
    for (double psi : spec.psi_grid)
        if (!(psi >= 0.0 && psi <= 1.0))
            throw UsageError("psi grid must lie within [0, 1]");
    GroupSweepResult result(spec, ensemble.size());
    const auto &snapshot = ensemble.snapshot();
    const auto &vars = result.variant_list();
    parallel_for(ensemble.size(), jobs, [&](std::size_t m) {
        const auto matrices = LeverageMatrices::build(ensemble[m], snapshot);
        RunOptions options;
        options.lgd_key = m;
        for (std::size_t v = 0; v < vars.size(); ++v) {
            ShockParams params = spec.base;
            params.rho = vars[v].rho;
            params.damping = vars[v].damping;
            for (std::size_t p = 0; p < spec.psi_grid.size(); ++p) {
                const auto traj = run(group_shock(snapshot.size(), spec.psi_grid[p]), matrices, snapshot, params, options);
                result.record(m, v, p) = record_run(traj, snapshot);
            }
        }
    });
    return result;
}

// ---------------------------------------------------------------------------
// Individual shocks

struct IndividualSweepSpec {
    std::vector<double> rhos{0.0, 1.0};
    std::vector<Damping> modes{Damping::once()};
    ShockParams base;
};

/// Ensemble-averaged risk profile of one bank under one variant.
struct BankSummary {
    std::string bank_id;
    MeanStd impact;
    MeanStd vulnerability;
    double leverage = 0.0;
    double extended_leverage = 0.0;
    double weight = 0.0;
    ScenarioSummary scenario; ///< DS of the run where this bank fails first
};

struct IndividualSweepResult {
    std::vector<ShockVariant> variants;
    std::vector<std::vector<BankSummary>> banks; ///< [variant][bank]

    std::vector<BankRiskProfile> profiles(std::size_t variant) const {
        std::vector<BankRiskProfile> out;
        for (const auto &b : banks.at(variant))
            out.push_back({b.bank_id, b.impact.mean, b.vulnerability.mean, b.leverage, b.extended_leverage, b.weight});
        return out;
    }
};

/**
 * Every bank defaults alone, on every ensemble member. One exposure matrix
 * serves all n initial defaults of a member; statistics are then taken
 * across members.
 */
inline IndividualSweepResult individual_sweep(const Ensemble &ensemble, const IndividualSweepSpec &spec,
                                              unsigned jobs = 1) {
    const auto &snapshot = ensemble.snapshot();
    const std::size_t n = snapshot.size();
    const std::size_t members = ensemble.size();
    IndividualSweepResult result;
    result.variants = variants(spec.rhos, spec.modes);
    const std::size_t nv = result.variants.size();

    struct MemberBank {
        double impact, vulnerability, leverage, extended;
        RunRecord record;
    };
    std::vector<MemberBank> cells(members * nv * n);
    auto cell = [&](std::size_t m, std::size_t v, std::size_t u) -> MemberBank & { return cells[(m * nv + v) * n + u]; };

    parallel_for(members, jobs, [&](std::size_t m) {
        const auto matrices = LeverageMatrices::build(ensemble[m], snapshot);
        for (std::size_t v = 0; v < nv; ++v) {
            ShockParams params = spec.base;
            params.rho = result.variants[v].rho;
            params.damping = result.variants[v].damping;
            RunOptions options;
            options.lgd_key = m;
            std::vector<CompensatedSum> received(n);
            for (std::size_t j = 0; j < n; ++j) {
                const auto traj = run(individual_shock(n, j), matrices, snapshot, params, options);
                auto &c = cell(m, v, j);
                c.record = record_run(traj, snapshot);
                const double nu = snapshot.weight(j);
                c.impact = nu < 1.0 ? c.record.ds / (1.0 - nu) : 0.0;
                for (std::size_t u = 0; u < n; ++u)
                    if (u != j)
                        received[u] += traj.h_final[u];
            }
            for (std::size_t u = 0; u < n; ++u) {
                auto &c = cell(m, v, u);
                c.vulnerability = n > 1 ? received[u].value() / static_cast<double>(n - 1) : 0.0;
                c.leverage = matrices.credit_row_sum(u);
                c.extended = params.lgd * c.leverage + params.rho * matrices.funding_row_sum(u);
            }
        }
    });

    result.banks.assign(nv, std::vector<BankSummary>(n));
    for (std::size_t v = 0; v < nv; ++v) {
        for (std::size_t u = 0; u < n; ++u) {
            std::vector<double> imp, vul, lev, ext;
            std::vector<const RunRecord *> recs;
            for (std::size_t m = 0; m < members; ++m) {
                const auto &c = cell(m, v, u);
                recs.push_back(&c.record);
                lev.push_back(c.leverage);
                ext.push_back(c.extended);
                vul.push_back(c.vulnerability);
                if (!c.record.flagged)
                    imp.push_back(c.impact);
            }
            auto &b = result.banks[v][u];
            b.bank_id = snapshot.bank(u).bank_id;
            b.impact = mean_std(imp);
            b.vulnerability = mean_std(vul);
            b.leverage = mean_std(lev).mean;
            b.extended_leverage = mean_std(ext).mean;
            b.weight = snapshot.weight(u);
            b.scenario = summarize(recs);
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Leverage distributions

struct LeverageSweepResult {
    std::vector<std::string> bank_ids;
    std::vector<double> leverage;          ///< ensemble mean per bank
    std::vector<double> extended_leverage; ///< ensemble mean per bank
    Histogram leverage_histogram;          ///< pooled over banks and members
    Histogram extended_histogram;
};

inline LeverageSweepResult leverage_sweep(const Ensemble &ensemble, double lgd, double rho, unsigned jobs = 1,
                                          int bins_per_decade = 30) {
    const auto &snapshot = ensemble.snapshot();
    const std::size_t n = snapshot.size();
    const std::size_t members = ensemble.size();
    std::vector<LeverageEntry> cells(members * n);
    parallel_for(members, jobs, [&](std::size_t m) {
        const auto profile = leverage_profile(LeverageMatrices::build(ensemble[m], snapshot), lgd, rho);
        std::copy(profile.begin(), profile.end(), cells.begin() + static_cast<std::ptrdiff_t>(m * n));
    });
    LeverageSweepResult out;
    std::vector<double> pooled_lev, pooled_ext;
    pooled_lev.reserve(cells.size());
    pooled_ext.reserve(cells.size());
    for (const auto &c : cells) {
        pooled_lev.push_back(c.leverage);
        pooled_ext.push_back(c.extended_leverage);
    }
    for (std::size_t u = 0; u < n; ++u) {
        std::vector<double> lev, ext;
        for (std::size_t m = 0; m < members; ++m) {
            lev.push_back(cells[m * n + u].leverage);
            ext.push_back(cells[m * n + u].extended_leverage);
        }
        out.bank_ids.push_back(snapshot.bank(u).bank_id);
        out.leverage.push_back(mean_std(lev).mean);
        out.extended_leverage.push_back(mean_std(ext).mean);
    }
    out.leverage_histogram = log_histogram(std::move(pooled_lev), bins_per_decade);
    out.extended_histogram = log_histogram(std::move(pooled_ext), bins_per_decade);
    return out;
}

} // namespace dsrank
