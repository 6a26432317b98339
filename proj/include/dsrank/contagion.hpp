#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "market.hpp"
#include "numeric.hpp"
#include "reconstruction.hpp"
#include "rng.hpp"

namespace dsrank {

/// Compressed sparse rows of non-negative weights.
class SparseRows {
public:
    struct Entry {
        std::uint32_t col;
        double value;
    };

    SparseRows() = default;
    SparseRows(std::vector<std::size_t> offsets, std::vector<Entry> entries)
        : offsets_(std::move(offsets)), entries_(std::move(entries)) {}

    std::size_t rows() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::size_t nonzeros() const noexcept { return entries_.size(); }

    std::span<const Entry> row(std::size_t i) const noexcept {
        return {entries_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
    }
    /// Position of row i's first entry in the flat entry array.
    std::size_t row_begin(std::size_t i) const noexcept { return offsets_[i]; }

    double at(std::size_t i, std::size_t j) const noexcept {
        for (const auto &e : row(i))
            if (e.col == j)
                return e.value;
        return 0.0;
    }

    double row_sum(std::size_t i) const noexcept {
        CompensatedSum s;
        for (const auto &e : row(i))
            s += e.value;
        return s.value();
    }

private:
    std::vector<std::size_t> offsets_;
    std::vector<Entry> entries_;
};

/**
 * Credit-impact matrix Lambda_ij = A_ij / E_i (i lends to j) and
 * funding-impact matrix Upsilon_ij = A_ji / E_i (j lends to i), together
 * with each bank's total lending used for the liquidation volume.
 *
 * Rows of banks that are not live (initially defaulted) are empty: they
 * have nothing left to lose.
 */
class LeverageMatrices {
public:
    static LeverageMatrices build(const ExposureMatrix &exposures, const MarketSnapshot &snapshot) {
        const std::size_t n = snapshot.size();
        if (exposures.size() != n)
            throw UsageError("exposure matrix size does not match market");
        for (std::size_t i = 0; i < n; ++i)
            if (!snapshot.initially_defaulted(i) && !(snapshot.bank(i).equity > 0.0))
                throw DataError("non-positive equity for bank \"" + snapshot.bank(i).bank_id + "\"");

        LeverageMatrices m;
        m.lending_ = exposures.lending();

        std::vector<std::size_t> credit_off(n + 1, 0), funding_off(n + 1, 0);
        for (const auto &e : exposures.entries()) {
            if (snapshot.live(e.lender))
                ++credit_off[e.lender + 1];
            if (snapshot.live(e.borrower))
                ++funding_off[e.borrower + 1];
        }
        for (std::size_t i = 0; i < n; ++i) {
            credit_off[i + 1] += credit_off[i];
            funding_off[i + 1] += funding_off[i];
        }
        std::vector<SparseRows::Entry> credit(credit_off[n]), funding(funding_off[n]);
        std::vector<std::size_t> credit_fill(credit_off.begin(), credit_off.end() - 1);
        std::vector<std::size_t> funding_fill(funding_off.begin(), funding_off.end() - 1);
        // entries arrive sorted by (lender, borrower), so both CSR layouts end up column-sorted
        for (const auto &e : exposures.entries()) {
            if (snapshot.live(e.lender))
                credit[credit_fill[e.lender]++] = {e.borrower, e.amount / snapshot.bank(e.lender).equity};
            if (snapshot.live(e.borrower))
                funding[funding_fill[e.borrower]++] = {e.lender, e.amount / snapshot.bank(e.borrower).equity};
        }
        m.credit_ = SparseRows(std::move(credit_off), std::move(credit));
        m.funding_ = SparseRows(std::move(funding_off), std::move(funding));
        return m;
    }

    std::size_t size() const noexcept { return lending_.size(); }
    const SparseRows &credit() const noexcept { return credit_; }
    const SparseRows &funding() const noexcept { return funding_; }
    const std::vector<double> &lending() const noexcept { return lending_; }

    double credit_at(std::size_t i, std::size_t j) const noexcept { return credit_.at(i, j); }
    double funding_at(std::size_t i, std::size_t j) const noexcept { return funding_.at(i, j); }

    /// Lambda_i, the interbank leverage ratio.
    double credit_row_sum(std::size_t i) const noexcept { return credit_.row_sum(i); }
    /// Upsilon_i.
    double funding_row_sum(std::size_t i) const noexcept { return funding_.row_sum(i); }

private:
    SparseRows credit_;
    SparseRows funding_;
    std::vector<double> lending_;
};

// ---------------------------------------------------------------------------
// Shock parameters

/// How long a distressed bank keeps retransmitting what it receives.
class Damping {
public:
    enum class Kind { Once, Exponential, Persistent };

    /// tau -> 0: spread only at the step of first distress.
    static Damping once() noexcept { return Damping(Kind::Once, 0.0); }
    /// tau -> infinity: keep spreading until default.
    static Damping persistent() noexcept { return Damping(Kind::Persistent, 0.0); }
    static Damping exponential(double tau) {
        if (!(tau > 0.0) || !std::isfinite(tau))
            throw UsageError("damping scale tau must be positive and finite");
        return Damping(Kind::Exponential, tau);
    }

    /// Accepts "once", "persistent" and "exp:<tau>".
    static Damping parse(const std::string &text) {
        if (text == "once" || text == "tau0")
            return once();
        if (text == "persistent" || text == "tauinf")
            return persistent();
        if (text.rfind("exp:", 0) == 0) {
            std::size_t used = 0;
            double tau = 0.0;
            try {
                tau = std::stod(text.substr(4), &used);
            } catch (const std::exception &) {
                used = 0;
            }
            if (used == 0 || used != text.size() - 4)
                throw UsageError("bad damping scale in \"" + text + "\"");
            return exponential(tau);
        }
        throw UsageError("unknown damping mode \"" + text + "\" (expected once, persistent or exp:<tau>)");
    }

    Kind kind() const noexcept { return kind_; }
    double tau() const noexcept { return tau_; }

    /// D(elapsed) for elapsed = t - t_j >= 0.
    double operator()(int elapsed) const noexcept {
        switch (kind_) {
        case Kind::Once: return elapsed == 0 ? 1.0 : 0.0;
        case Kind::Persistent: return 1.0;
        case Kind::Exponential: return std::exp(-static_cast<double>(elapsed) / tau_);
        }
        return 0.0;
    }

    std::string label() const {
        switch (kind_) {
        case Kind::Once: return "once";
        case Kind::Persistent: return "persistent";
        case Kind::Exponential: return "exp:" + format_double(tau_);
        }
        return "?";
    }

    friend bool operator==(const Damping &, const Damping &) = default;

private:
    Damping(Kind kind, double tau) : kind_(kind), tau_(tau) {}

    Kind kind_ = Kind::Once;
    double tau_ = 0.0;
};

inline double damping(int t, int first_distress, const Damping &mode) { return mode(t - first_distress); }

/// Loss-given-default drawn per edge from Beta(alpha, beta), fixed for a run.
struct BetaLgd {
    double alpha = 0.28;
    double beta = 0.35;
    std::uint64_t seed = 0;
};

struct ShockParams {
    double lgd = 1.0; ///< lambda
    double rho = 0.0; ///< fraction of lost funding that must be replaced by asset sales
    Damping damping = Damping::once();
    double stop_tol = 1e-10;
    int max_steps = 10000;
    double gamma_cap = 1e6;
    std::optional<BetaLgd> beta_lgd;

    void check() const {
        if (!(lgd >= 0.0 && lgd <= 1.0))
            throw UsageError("lambda must lie in [0, 1]");
        if (!(rho >= 0.0 && rho <= 1.0))
            throw UsageError("rho must lie in [0, 1]");
        if (!(stop_tol > 0.0))
            throw UsageError("stop_tol must be positive");
        if (!(gamma_cap > 0.0))
            throw UsageError("gamma_cap must be positive");
        if (max_steps < 1)
            throw UsageError("max_steps must be at least 1");
        if (beta_lgd && !(beta_lgd->alpha > 0.0 && beta_lgd->beta > 0.0))
            throw UsageError("beta LGD shapes must be positive");
    }
};

/**
 * Fire-sale devaluation factor for liquidation volume q against market
 * volume c under linear price impact: gamma = 1 / (c/q - 1). Zero for
 * q <= 0, capped at `cap` where the closed form diverges (q >= c).
 */
inline double fire_sale_gamma(double q, double c, double cap) noexcept {
    if (!(q > 0.0))
        return 0.0;
    if (q >= c)
        return cap;
    return std::min(cap, q / (c - q));
}

// ---------------------------------------------------------------------------
// Dynamics

inline constexpr int kNeverDistressed = -1;

/// h(t-1), h(t), first-distress steps and the current step t.
struct DynamicsState {
    std::vector<double> previous;
    std::vector<double> current;
    std::vector<int> first_distress;
    int t = 1;
};

struct StepOutcome {
    std::vector<double> next; ///< h(t+1)
    double gamma = 0.0;       ///< gamma(t)
    double liquidation = 0.0; ///< Q(t), before the rho factor
};

/**
 * One propagation round: h(t) -> h(t+1).
 *
 * Banks with h_j(t-1) < 1 transmit their damped increment
 * [h_j(t) - h_j(t-1)] D(t - t_j) to their lenders through Lambda and to
 * their borrowers through rho * gamma(t) * Upsilon. `credit_lgd`, when not
 * empty, holds one loss-given-default per credit entry and replaces the
 * scalar lambda.
 */
inline StepOutcome step(const DynamicsState &state, const LeverageMatrices &matrices, const ShockParams &params,
                        double volume, std::span<const double> credit_lgd = {}) {
    const std::size_t n = matrices.size();
    std::vector<double> signal(n, 0.0);
    CompensatedSum liquidation;
    for (std::size_t j = 0; j < n; ++j) {
        if (!(state.previous[j] < 1.0) || state.first_distress[j] == kNeverDistressed)
            continue;
        const double dh = state.current[j] - state.previous[j];
        if (dh == 0.0)
            continue;
        signal[j] = dh * params.damping(state.t - state.first_distress[j]);
        liquidation += matrices.lending()[j] * signal[j];
    }

    StepOutcome out;
    out.liquidation = liquidation.value();
    out.gamma = fire_sale_gamma(params.rho * out.liquidation, volume, params.gamma_cap);
    const double funding_scale = params.rho * out.gamma;

    out.next.resize(n);
    const auto &credit = matrices.credit();
    const auto &funding = matrices.funding();
    for (std::size_t i = 0; i < n; ++i) {
        double credit_loss = 0.0;
        if (credit_lgd.empty()) {
            for (const auto &e : credit.row(i))
                credit_loss += e.value * signal[e.col];
            credit_loss *= params.lgd;
        } else {
            const double *lgd = credit_lgd.data() + credit.row_begin(i);
            for (const auto &e : credit.row(i))
                credit_loss += *lgd++ * e.value * signal[e.col];
        }
        double funding_loss = 0.0;
        if (funding_scale != 0.0) {
            for (const auto &e : funding.row(i))
                funding_loss += e.value * signal[e.col];
            funding_loss *= funding_scale;
        }
        const double increment = credit_loss + funding_loss;
        if (!std::isfinite(increment))
            throw NumericalError("numerical blow-up at step " + std::to_string(state.t), state.t);
        out.next[i] = std::min(1.0, state.current[i] + increment);
    }
    return out;
}

enum class Termination { Converged, AllDefaulted, MaxSteps };

inline const char *to_string(Termination t) {
    switch (t) {
    case Termination::Converged: return "converged";
    case Termination::AllDefaulted: return "all_defaulted";
    case Termination::MaxSteps: return "max_steps";
    }
    return "?";
}

/**
 * Outcome of one run. t_star is the step at which the state stopped
 * changing: the update applied to h(t_star) moves no bank by stop_tol or
 * more (or every bank has defaulted, or max_steps was hit).
 */
struct Trajectory {
    std::vector<double> h_initial;            ///< h(1)
    std::vector<double> h_final;              ///< h(t*)
    std::vector<std::vector<double>> history; ///< h(0) .. h(t*), only when requested
    std::vector<int> first_distress;          ///< t_j, kNeverDistressed if never
    std::vector<double> gamma;                ///< gamma(t) for t = 1 .. t*-1
    std::vector<double> liquidation;          ///< Q(t) for t = 1 .. t*-1
    int t_star = 1;
    Termination reason = Termination::Converged;

    double gamma_max() const noexcept {
        double g = 0.0;
        for (double x : gamma)
            g = std::max(g, x);
        return g;
    }
};

struct RunOptions {
    bool keep_history = false;
    /// Keys the per-edge LGD stream when ShockParams::beta_lgd is set.
    std::uint64_t lgd_key = 0;
};

/// Per-credit-entry LGD draws for one run.
inline std::vector<double> draw_credit_lgd(const LeverageMatrices &matrices, const BetaLgd &beta, std::uint64_t key) {
    Xoshiro256 rng(derive_seed(beta.seed, Stream::Lgd, key));
    std::vector<double> lgd(matrices.credit().nonzeros());
    for (double &x : lgd)
        x = rng.beta(beta.alpha, beta.beta);
    return lgd;
}

/**
 * Iterate the dynamics from h(0) = 0 and the exogenous shock h(1).
 * Initially defaulted banks sit at h = 1 from t = 0 and never transmit.
 */
inline Trajectory run(std::span<const double> initial, const LeverageMatrices &matrices, const MarketSnapshot &snapshot,
                      const ShockParams &params, const RunOptions &options = {}) {
    params.check();
    const std::size_t n = snapshot.size();
    if (initial.size() != n || matrices.size() != n)
        throw UsageError("initial shock size does not match market");

    std::vector<double> credit_lgd;
    if (params.beta_lgd)
        credit_lgd = draw_credit_lgd(matrices, *params.beta_lgd, options.lgd_key);

    DynamicsState state;
    state.previous.assign(n, 0.0);
    state.current.assign(initial.begin(), initial.end());
    state.first_distress.assign(n, kNeverDistressed);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(state.current[i] >= 0.0 && state.current[i] <= 1.0))
            throw UsageError("initial distress must lie in [0, 1]");
        if (snapshot.initially_defaulted(i)) {
            state.previous[i] = 1.0;
            state.current[i] = 1.0;
            state.first_distress[i] = 0;
        } else if (state.current[i] > 0.0) {
            state.first_distress[i] = 1;
        }
    }
    state.t = 1;

    Trajectory traj;
    traj.h_initial = state.current;
    if (options.keep_history) {
        traj.history.push_back(state.previous);
        traj.history.push_back(state.current);
    }
    auto all_defaulted = [](const std::vector<double> &h) {
        return std::all_of(h.begin(), h.end(), [](double x) { return x >= 1.0; });
    };

    if (all_defaulted(state.current)) {
        traj.reason = Termination::AllDefaulted;
    } else {
        for (;;) {
            if (state.t >= params.max_steps) {
                traj.reason = Termination::MaxSteps;
                break;
            }
            StepOutcome out = step(state, matrices, params, snapshot.total_volume(), credit_lgd);
            double max_change = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                max_change = std::max(max_change, out.next[i] - state.current[i]);
            if (max_change < params.stop_tol) {
                traj.reason = Termination::Converged;
                break;
            }
            traj.gamma.push_back(out.gamma);
            traj.liquidation.push_back(out.liquidation);
            state.previous = std::move(state.current);
            state.current = std::move(out.next);
            ++state.t;
            for (std::size_t i = 0; i < n; ++i)
                if (state.first_distress[i] == kNeverDistressed && state.current[i] > 0.0)
                    state.first_distress[i] = state.t;
            if (options.keep_history)
                traj.history.push_back(state.current);
            if (all_defaulted(state.current)) {
                traj.reason = Termination::AllDefaulted;
                break;
            }
        }
    }
    traj.t_star = state.t;
    traj.h_final = std::move(state.current);
    traj.first_distress = std::move(state.first_distress);
    return traj;
}

inline Trajectory run(std::span<const double> initial, const ExposureMatrix &exposures, const MarketSnapshot &snapshot,
                      const ShockParams &params, const RunOptions &options = {}) {
    return run(initial, LeverageMatrices::build(exposures, snapshot), snapshot, params, options);
}

} // namespace dsrank
