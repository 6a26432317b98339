#include <gtest/gtest.h>

#include <cmath>

#include <dsrank/contagion.hpp>
#include <dsrank/metrics.hpp>

#include "support.hpp"

using namespace dsrank;
using namespace dsrank::testing;

TEST(Leverage, TwoBankHandDivision) {
    auto m = LeverageMatrices::build(two_bank_exposures(), two_bank_market());
    EXPECT_EQ(m.credit_at(0, 1), 0.5);
    EXPECT_EQ(m.credit_at(1, 0), 0.4);
    EXPECT_EQ(m.funding_at(0, 1), 0.4);
    EXPECT_EQ(m.funding_at(1, 0), 0.5);
    EXPECT_EQ(m.credit_at(0, 0), 0.0);
    EXPECT_EQ(m.credit_row_sum(0), 0.5);
    EXPECT_EQ(m.funding_row_sum(1), 0.5);
}

TEST(Leverage, EmptyExposures) {
    auto s = two_bank_market();
    auto m = LeverageMatrices::build(ExposureMatrix(2, {}), s);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(m.credit_row_sum(i), 0.0);
        EXPECT_EQ(m.funding_row_sum(i), 0.0);
    }
}

TEST(Leverage, TransposeIdentity) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto inst = random_closed_instance(10, seed);
        auto m = LeverageMatrices::build(inst.exposures, inst.snapshot);
        for (std::size_t i = 0; i < 10; ++i)
            for (std::size_t j = 0; j < 10; ++j) {
                const double ei = inst.snapshot.bank(i).equity;
                const double ej = inst.snapshot.bank(j).equity;
                EXPECT_NEAR(ei * m.funding_at(i, j), ej * m.credit_at(j, i), 1e-12 * (1.0 + ej * m.credit_at(j, i)));
                EXPECT_GE(m.credit_at(i, j), 0.0);
            }
    }
}

TEST(Leverage, NonPositiveEquityRejectedUnlessDefaulted) {
    MarketSnapshot raw(0, {sheet("a", 5, 4, 10), sheet("b", 4, 5, -1)});
    EXPECT_THROW(LeverageMatrices::build(two_bank_exposures(), raw), DataError);
    auto admitted = validate(raw).first;
    auto m = LeverageMatrices::build(two_bank_exposures(), admitted);
    EXPECT_EQ(m.credit_row_sum(1), 0.0);
    EXPECT_EQ(m.funding_row_sum(1), 0.0);
    EXPECT_EQ(m.credit_row_sum(0), 0.5);
}

TEST(FireSale, Gamma) {
    EXPECT_EQ(fire_sale_gamma(0.0, 9.0, 1e6), 0.0);
    EXPECT_EQ(fire_sale_gamma(4.5, 9.0, 1e6), 1.0);
    EXPECT_NEAR(fire_sale_gamma(0.9 * 9.0, 9.0, 1e6), 9.0, 1e-12);
    EXPECT_EQ(fire_sale_gamma(4.0, 9.0, 1e6), 0.8);
    EXPECT_EQ(fire_sale_gamma(9.0, 9.0, 1e6), 1e6);
    EXPECT_EQ(fire_sale_gamma(12.0, 9.0, 50.0), 50.0);
    EXPECT_EQ(fire_sale_gamma(9.0 * (1 - 1e-12), 9.0, 50.0), 50.0);
}

TEST(DampingFunction, Modes) {
    for (auto mode : {Damping::once(), Damping::persistent(), Damping::exponential(0.5)})
        EXPECT_EQ(damping(4, 4, mode), 1.0);
    EXPECT_NEAR(damping(2, 1, Damping::exponential(1.0)), 0.36787944117144233, 1e-15);
    EXPECT_EQ(damping(2, 1, Damping::once()), 0.0);
    EXPECT_EQ(damping(50, 1, Damping::persistent()), 1.0);
    EXPECT_EQ(Damping::parse("exp:2.5"), Damping::exponential(2.5));
    EXPECT_EQ(Damping::parse("once"), Damping::once());
    EXPECT_EQ(Damping::exponential(2.5).label(), "exp:2.5");
    EXPECT_THROW(Damping::parse("exp:"), UsageError);
    EXPECT_THROW(Damping::parse("sometimes"), UsageError);
    EXPECT_THROW(Damping::exponential(0.0), UsageError);
}

namespace {

DynamicsState two_bank_after_default() {
    DynamicsState st;
    st.previous = {0.0, 0.0};
    st.current = {0.0, 1.0};
    st.first_distress = {kNeverDistressed, 1};
    st.t = 1;
    return st;
}

} // namespace

TEST(Step, TwoBankOracle) {
    auto s = two_bank_market();
    auto m = LeverageMatrices::build(two_bank_exposures(), s);
    ShockParams p;
    p.rho = 1.0;
    auto out = step(two_bank_after_default(), m, p, s.total_volume());
    EXPECT_EQ(out.liquidation, 4.0);
    EXPECT_EQ(out.gamma, 0.8);
    EXPECT_NEAR(out.next[0], 0.82, 1e-15);
    EXPECT_EQ(out.next[1], 1.0);

    p.rho = 0.0;
    out = step(two_bank_after_default(), m, p, s.total_volume());
    EXPECT_EQ(out.next[0], 0.5);
    EXPECT_EQ(out.gamma, 0.0);
}

TEST(Step, FixedPoint) {
    auto s = two_bank_market();
    auto m = LeverageMatrices::build(two_bank_exposures(), s);
    DynamicsState st;
    st.previous = {0.3, 0.2};
    st.current = {0.3, 0.2};
    st.first_distress = {1, 1};
    st.t = 2;
    ShockParams p;
    p.rho = 1.0;
    p.damping = Damping::persistent();
    auto out = step(st, m, p, s.total_volume());
    EXPECT_EQ(out.next, st.current);
    EXPECT_EQ(out.liquidation, 0.0);
    EXPECT_EQ(out.gamma, 0.0);
}

TEST(Step, DefaultedSenderIsSilent) {
    auto s = two_bank_market();
    auto m = LeverageMatrices::build(two_bank_exposures(), s);
    DynamicsState st;
    st.previous = {0.0, 1.0}; // bank 2 defaulted before t
    st.current = {0.0, 1.0};
    st.first_distress = {kNeverDistressed, 1};
    st.t = 2;
    ShockParams p;
    p.rho = 1.0;
    p.damping = Damping::persistent();
    auto out = step(st, m, p, s.total_volume());
    EXPECT_EQ(out.next[0], 0.0);
    EXPECT_EQ(out.liquidation, 0.0);
}

TEST(Run, TwoBankOracle) {
    auto s = two_bank_market();
    ShockParams p;
    p.rho = 1.0;
    auto traj = run(std::vector<double>{0.0, 1.0}, two_bank_exposures(), s, p, {.keep_history = true});
    EXPECT_EQ(traj.t_star, 2);
    EXPECT_EQ(traj.reason, Termination::Converged);
    EXPECT_NEAR(traj.h_final[0], 0.82, 1e-15);
    EXPECT_EQ(traj.h_final[1], 1.0);
    EXPECT_EQ(traj.first_distress, (std::vector<int>{2, 1}));
    ASSERT_EQ(traj.gamma.size(), 1u);
    EXPECT_EQ(traj.gamma[0], 0.8);
    EXPECT_EQ(traj.history.size(), 3u);
}

TEST(Run, ZeroShockAndFullDefault) {
    auto s = two_bank_market();
    ShockParams p;
    p.rho = 1.0;
    auto zero = run(std::vector<double>{0.0, 0.0}, two_bank_exposures(), s, p);
    EXPECT_EQ(zero.t_star, 1);
    EXPECT_EQ(zero.reason, Termination::Converged);
    EXPECT_EQ(ds_rank(zero, s), 0.0);

    auto full = run(group_shock(2, 1.0), two_bank_exposures(), s, p);
    EXPECT_EQ(full.t_star, 1);
    EXPECT_EQ(full.reason, Termination::AllDefaulted);
    EXPECT_EQ(full.h_final, (std::vector<double>{1.0, 1.0}));
}

TEST(Run, MaxStepsIsReportedNotThrown) {
    auto inst = random_closed_instance(10, 5, 0.4, 0.5);
    ShockParams p;
    p.damping = Damping::persistent();
    p.max_steps = 2;
    auto traj = run(group_shock(10, 0.01), inst.exposures, inst.snapshot, p);
    EXPECT_EQ(traj.reason, Termination::MaxSteps);
    EXPECT_EQ(traj.t_star, 2);
}

TEST(Run, InitiallyDefaultedBankNeverTransmits) {
    MarketSnapshot raw(0, {sheet("a", 5, 4, 10), sheet("b", 4, 5, -1)});
    auto s = validate(raw).first;
    ShockParams p;
    p.rho = 1.0;
    auto traj = run(std::vector<double>{0.0, 0.0}, two_bank_exposures(), s, p);
    EXPECT_EQ(traj.h_final[0], 0.0);
    EXPECT_EQ(traj.h_final[1], 1.0);
    EXPECT_EQ(traj.first_distress[1], 0);
    EXPECT_EQ(ds_rank(traj, s), 0.0);
}

TEST(Run, InvalidInputs) {
    auto s = two_bank_market();
    ShockParams p;
    EXPECT_THROW(run(std::vector<double>{0.0}, two_bank_exposures(), s, p), UsageError);
    EXPECT_THROW(run(std::vector<double>{0.0, 1.5}, two_bank_exposures(), s, p), UsageError);
    p.stop_tol = 0.0;
    EXPECT_THROW(run(std::vector<double>{0.0, 1.0}, two_bank_exposures(), s, p), UsageError);
}

TEST(Run, BetaLgdIsReproducibleAndBounded) {
    auto inst = random_closed_instance(12, 3, 0.4, 2.0);
    ShockParams p;
    p.rho = 0.5;
    p.beta_lgd = BetaLgd{0.28, 0.35, 99};
    auto matrices = LeverageMatrices::build(inst.exposures, inst.snapshot);
    auto a = run(group_shock(12, 0.05), matrices, inst.snapshot, p, {.lgd_key = 4});
    auto b = run(group_shock(12, 0.05), matrices, inst.snapshot, p, {.lgd_key = 4});
    EXPECT_EQ(a.h_final, b.h_final);
    auto lgd = draw_credit_lgd(matrices, *p.beta_lgd, 4);
    ASSERT_EQ(lgd.size(), matrices.credit().nonzeros());
    for (double x : lgd) {
        EXPECT_GE(x, 0.0);
        EXPECT_LE(x, 1.0);
    }
    // with lambda = 1 the constant-LGD run dominates
    ShockParams constant = p;
    constant.beta_lgd.reset();
    auto c = run(group_shock(12, 0.05), matrices, inst.snapshot, constant);
    EXPECT_GE(ds_rank(c, inst.snapshot), ds_rank(a, inst.snapshot));
}

TEST(Rng, BetaMomentsMatchParameters) {
    Xoshiro256 rng(123);
    const double alpha = 0.28, beta = 0.35;
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
        const double x = rng.beta(alpha, beta);
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    const double expected_mean = alpha / (alpha + beta);
    const double expected_var = alpha * beta / ((alpha + beta) * (alpha + beta) * (alpha + beta + 1));
    EXPECT_NEAR(mean, expected_mean, 4.0 * std::sqrt(expected_var / n));
    EXPECT_NEAR(var, expected_var, 0.01);
}

// ---------------------------------------------------------------------------
// Properties over random instances

TEST(ContagionProperties, ReducesToDebtRankWithoutFundingShocks) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto inst = random_closed_instance(10, 1000 + seed, 0.35, 1.5);
        Xoshiro256 rng(seed);
        std::vector<double> initial(10);
        for (double &x : initial)
            x = rng.uniform() < 0.3 ? rng.uniform() : 0.0;
        std::vector<double> equity;
        for (const auto &b : inst.snapshot.banks())
            equity.push_back(b.equity);
        for (bool once : {true, false}) {
            ShockParams p;
            p.rho = 0.0;
            p.damping = once ? Damping::once() : Damping::persistent();
            auto traj = run(initial, inst.exposures, inst.snapshot, p, {.keep_history = true});
            auto ref = reference_debtrank(dense(inst.exposures), equity, initial, once,
                                          static_cast<int>(traj.history.size()) - 1);
            ASSERT_EQ(ref.h.size(), traj.history.size());
            for (std::size_t t = 0; t < ref.h.size(); ++t)
                for (std::size_t i = 0; i < 10; ++i)
                    EXPECT_NEAR(traj.history[t][i], ref.h[t][i], 1e-12) << "seed " << seed << " t " << t;
        }
    }
}

TEST(ContagionProperties, ScaleInvariance) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto inst = random_closed_instance(8, 50 + seed, 0.4, 1.0);
        auto big = random_closed_instance(8, 50 + seed, 0.4, 1.0, 1024.0);
        ShockParams p;
        p.rho = 1.0;
        p.damping = Damping::exponential(1.5);
        auto a = run(group_shock(8, 0.1), inst.exposures, inst.snapshot, p);
        auto b = run(group_shock(8, 0.1), big.exposures, big.snapshot, p);
        EXPECT_EQ(a.h_final, b.h_final);
        EXPECT_EQ(a.gamma, b.gamma);
        EXPECT_EQ(ds_rank(a, inst.snapshot), ds_rank(b, big.snapshot));
    }
}

TEST(ContagionProperties, OnceModeTerminatesWithinNPlusTwoSteps) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const std::size_t n = 5 + seed % 20;
        auto inst = random_closed_instance(n, 300 + seed, 0.3, 0.2 + 0.05 * static_cast<double>(seed % 40));
        ShockParams p;
        p.rho = (seed % 3) * 0.5;
        auto traj = run(individual_shock(n, seed % n), inst.exposures, inst.snapshot, p);
        EXPECT_LE(traj.t_star, static_cast<int>(n) + 2);
        EXPECT_NE(traj.reason, Termination::MaxSteps);
    }
}
