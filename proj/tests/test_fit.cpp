#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "seinsrd/fit.hpp"

using namespace seinsrd;

namespace {

const Date kStart = *parse_date("2020-07-01");

ModelParams truth_params() {
    ModelParams p = FitConfig::default_fit_params();
    p.beta_insp = 0.4;
    p.beta_issp = 0.6;
    p.ss = 0.1;
    return p;
}

/// Window-start state consistent with the initial-state policy.
StateVector truth_state(const ModelParams& p) { return StateVector{p.tp - 1200.0, 1000.0, 180.0, 20.0, 0.0, 0.0}; }

Trajectory truth_run(double horizon = 200.0) {
    const auto p = truth_params();
    return integrate(p, truth_state(p), horizon, Tolerances::defaults(p.tp), kStart);
}

ObservationSeries first_days(const Trajectory& t, std::size_t n, bool exposed = false) {
    ObservationSeries s = observations_from(t, exposed);
    s.rows.resize(n);
    return s;
}

/// Multiplicative log-normal noise; deaths kept non-decreasing.
ObservationSeries noisy(ObservationSeries s, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, sigma);
    for (auto& o : s.rows) {
        o.active_cases *= std::exp(n(rng));
        o.cumulative_deaths *= std::exp(n(rng));
    }
    for (std::size_t i = 1; i < s.size(); ++i)
        s.rows[i].cumulative_deaths = std::max(s.rows[i].cumulative_deaths, s.rows[i - 1].cumulative_deaths);
    return s;
}

FitConfig start_config() {
    FitConfig c;
    c.params = truth_params();
    c.params.beta_insp = 0.25;
    c.params.beta_issp = 0.45;
    c.params.ss = 0.15;
    c.initial_ep = 600.0;
    return c;
}

/// The acceptance reduction: beta_issp held at its true value.
FitConfig reduced_config() {
    FitConfig c = start_config();
    c.params.beta_issp = 0.6;
    c.free = {FitParameter::beta_insp, FitParameter::ss, FitParameter::initial_ep};
    return c;
}

std::optional<std::size_t> disappearance(const Trajectory& t, const ModelParams& p) {
    return analyze_outbreak(t, p).events.disappearance_day;
}

}  // namespace

TEST(Objective, SelfConsistencyIsZero) {
    const auto p = truth_params();
    const auto obs = first_days(truth_run(), 18, true);
    EXPECT_LT(objective(p, truth_state(p), obs, FitConfig{}), 1e-12);
}

TEST(Objective, LinearInWeights) {
    const auto obs = first_days(truth_run(), 18, true);
    auto p = truth_params();
    p.beta_insp = 0.35;
    FitConfig c;
    const LossBreakdown one = evaluate_objective(p, truth_state(p), obs, c);
    c.weights.active = 2.0;
    const LossBreakdown two = evaluate_objective(p, truth_state(p), obs, c);
    EXPECT_GT(one.active, 0.0);
    EXPECT_DOUBLE_EQ(two.total - one.total, one.active);
    EXPECT_DOUBLE_EQ(one.total, one.active + one.deaths + one.exposed);
}

TEST(Objective, ExposedTermOnlyWithExposedData) {
    auto p = truth_params();
    p.beta_insp = 0.35;
    const auto with = evaluate_objective(p, truth_state(p), first_days(truth_run(), 10, true), FitConfig{});
    const auto without = evaluate_objective(p, truth_state(p), first_days(truth_run(), 10, false), FitConfig{});
    EXPECT_GT(with.exposed, 0.0);
    EXPECT_EQ(without.exposed, 0.0);
    EXPECT_DOUBLE_EQ(with.total, without.total + with.exposed);
}

TEST(Objective, InvariantToRowOrder) {
    auto p = truth_params();
    p.ss = 0.2;
    const auto obs = first_days(truth_run(), 18);
    ObservationSeries shuffled = obs;
    std::mt19937_64 rng(3);
    std::shuffle(shuffled.rows.begin(), shuffled.rows.end(), rng);
    ASSERT_NE(shuffled.rows, obs.rows);
    EXPECT_EQ(objective(p, truth_state(p), shuffled, FitConfig{}), objective(p, truth_state(p), obs, FitConfig{}));
}

TEST(Objective, IntegrationFailureIsInfinite) {
    auto p = truth_params();
    p.aincp = 1e-9;
    const LossBreakdown b = evaluate_objective(p, truth_state(p), first_days(truth_run(), 8), FitConfig{});
    EXPECT_FALSE(b.feasible);
    EXPECT_TRUE(std::isinf(b.total));
    EXPECT_FALSE(b.diagnostic.empty());
}

TEST(Objective, NeedsFiveDays) {
    const auto p = truth_params();
    EXPECT_THROW(objective(p, truth_state(p), first_days(truth_run(), 4), FitConfig{}), std::invalid_argument);
}

TEST(InitialState, PolicyFromFirstRow) {
    const auto p = truth_params();
    const Observation first{kStart, 200.0, 3.0, std::nullopt};
    const StateVector s = initial_state_policy(p, 1000.0, first);
    EXPECT_DOUBLE_EQ(s.insp, 180.0);
    EXPECT_DOUBLE_EQ(s.issp, 20.0);
    EXPECT_EQ(s.rp, 0.0);
    EXPECT_EQ(s.idp, 3.0);
    EXPECT_DOUBLE_EQ(s.total(), p.tp);
}

TEST(Fit, NoiselessRoundTripDefaultFreeSet) {
    const auto obs = first_days(truth_run(), 18);
    const FitResult r = fit(obs, start_config());
    const auto truth = truth_params();
    EXPECT_TRUE(r.converged);
    EXPECT_LE(r.loss, 1e-10);
    EXPECT_NEAR(r.params.beta_insp, truth.beta_insp, 0.01 * truth.beta_insp);
    EXPECT_NEAR(r.params.beta_issp, truth.beta_issp, 0.01 * truth.beta_issp);
    EXPECT_NEAR(r.params.ss, truth.ss, 0.01 * truth.ss);
    EXPECT_NEAR(r.initial_ep, 1000.0, 10.0);
    EXPECT_EQ(r.loss, objective(r.params, r.initial_state, obs, start_config()));
    EXPECT_EQ(disappearance(fitted_trajectory(r, 200.0, {}), r.params), disappearance(truth_run(), truth));
}

TEST(Fit, NoisyRoundTripReducedFreeSet) {
    const auto truth = truth_params();
    const auto truth_day = disappearance(truth_run(), truth);
    ASSERT_TRUE(truth_day.has_value());
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        const FitResult r = fit(noisy(first_days(truth_run(), 18), 0.01, seed), reduced_config());
        EXPECT_NEAR(r.params.beta_insp, truth.beta_insp, 0.1 * truth.beta_insp) << "seed " << seed;
        const auto day = disappearance(fitted_trajectory(r, 200.0, {}), r.params);
        ASSERT_TRUE(day.has_value());
        EXPECT_LE(std::abs(long(*day) - long(*truth_day)), 2) << "seed " << seed;
    }
}

TEST(Fit, EmptyFreeSetReturnsFixedParameters) {
    const auto obs = first_days(truth_run(), 10);
    FitConfig c = start_config();
    c.free.clear();
    const FitResult r = fit(obs, c);
    EXPECT_EQ(r.params, c.params);
    EXPECT_EQ(r.loss, objective(c.params, initial_state_policy(c.params, c.initial_ep, obs.rows[0]), obs, c));
    EXPECT_TRUE(r.converged);
}

TEST(Fit, BestLossTraceIsMonotone) {
    const FitResult r = fit(noisy(first_days(truth_run(), 12), 0.02, 5), start_config());
    ASSERT_FALSE(r.best_loss_trace.empty());
    for (std::size_t i = 1; i < r.best_loss_trace.size(); ++i)
        EXPECT_LE(r.best_loss_trace[i], r.best_loss_trace[i - 1]);
    EXPECT_EQ(r.best_loss_trace.back(), r.loss);
}

TEST(Fit, DeterministicForFixedSeed) {
    const auto obs = noisy(first_days(truth_run(), 12), 0.02, 9);
    FitConfig c = start_config();
    c.seed = 42;
    const FitResult a = fit(obs, c);
    const FitResult b = fit(obs, c);
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.loss, b.loss);
    EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(Fit, ResultStaysInsideBounds) {
    FitConfig c = reduced_config();
    c.bounds = {{FitParameter::beta_insp, {0.1, 0.3}}};
    const FitResult r = fit(first_days(truth_run(), 12), c);
    EXPECT_GE(r.params.beta_insp, 0.1);
    EXPECT_LE(r.params.beta_insp, 0.3);
    EXPECT_NEAR(r.params.beta_insp, 0.3, 1e-9);
}

TEST(Fit, AllRestartsInfeasible) {
    // Incubation bounded to nanoseconds: every candidate underflows the solver.
    FitConfig c = reduced_config();
    c.free = {FitParameter::aincp};
    c.bounds = {{FitParameter::aincp, {1e-10, 1e-9}}};
    c.restarts = 2;
    c.max_evaluations = 3;
    try {
        fit(first_days(truth_run(), 8), c);
        FAIL() << "expected FitError";
    } catch (const FitError& e) {
        ASSERT_EQ(e.reports().size(), 2u);
        for (const auto& r : e.reports()) EXPECT_EQ(r.status, "no feasible point");
    }
}

TEST(Fit, RejectsBadConfig) {
    const auto obs = first_days(truth_run(), 10);
    FitConfig c = start_config();
    c.max_evaluations = 0;
    EXPECT_THROW(fit(obs, c), ConfigError);
    c = start_config();
    c.bounds = {{FitParameter::ss, {0.5, 0.1}}};
    EXPECT_THROW(fit(obs, c), ConfigError);
    c = start_config();
    c.free.push_back(FitParameter::ss);
    EXPECT_THROW(fit(obs, c), ConfigError);
}

TEST(Fit, WindowOutsideDataNamesTheWindow) {
    const auto obs = first_days(truth_run(), 10);
    const Window w{*parse_date("2020-06-20"), *parse_date("2020-07-05")};
    try {
        fit(obs, w, start_config());
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("2020-06-20:2020-07-05"), std::string::npos);
    }
}

TEST(FitWindows, IdenticalWindowsGiveIdenticalEvents) {
    const auto obs = first_days(truth_run(), 18);
    const Window w{kStart, add_days(kStart, 17)};
    const WindowComparison c = fit_windows(obs, w, w, reduced_config());
    ASSERT_TRUE(c.ok());
    EXPECT_EQ(c.a.analysis->events.disappearance_day, c.b.analysis->events.disappearance_day);
    EXPECT_EQ(c.disappearance_gap_days, 0);
}

TEST(FitWindows, ShortAndLongWindowsAgree) {
    const auto obs = noisy(first_days(truth_run(), 18), 0.01, 21);
    const WindowComparison c =
        fit_windows(obs, Window{kStart, add_days(kStart, 7)}, Window{kStart, add_days(kStart, 17)}, reduced_config());
    ASSERT_TRUE(c.ok());
    ASSERT_TRUE(c.disappearance_gap_days.has_value());
    EXPECT_LE(std::abs(*c.disappearance_gap_days), 2);
}

TEST(FitWindows, DecayingDataGivesEmptyEvents) {
    // Below the epidemic threshold: infections present but shrinking.
    ModelParams p = truth_params();
    p.beta_insp = 0.03;
    p.beta_issp = 0.05;
    const Trajectory t = integrate(p, truth_state(p), 30.0, Tolerances::defaults(p.tp), kStart);
    FitConfig c = reduced_config();
    c.params.beta_issp = 0.05;
    c.params.beta_insp = 0.05;
    const WindowComparison r = fit_windows(observations_from(t), Window{kStart, add_days(kStart, 9)},
                                           Window{add_days(kStart, 10), add_days(kStart, 29)}, c);
    ASSERT_TRUE(r.ok());
    for (const WindowOutcome* w : {&r.a, &r.b}) {
        EXPECT_TRUE(w->fit->converged);
        EXPECT_FALSE(w->analysis->events.disappearance_day.has_value());
        EXPECT_FALSE(w->analysis->events.tau_explosive_start.has_value());
    }
    EXPECT_FALSE(r.disappearance_gap_days.has_value());
}

TEST(FitWindows, FailureIsRecordedPerWindow) {
    const auto obs = first_days(truth_run(), 18);
    FitConfig c = reduced_config();
    c.free = {FitParameter::aincp};
    c.bounds = {{FitParameter::aincp, {1e-10, 1e-9}}};
    c.restarts = 1;
    c.max_evaluations = 3;
    const Window w{kStart, add_days(kStart, 7)};
    const WindowComparison r = fit_windows(obs, w, w, c);
    EXPECT_FALSE(r.ok());
    EXPECT_TRUE(r.a.failure.has_value());
    EXPECT_FALSE(r.disappearance_gap_days.has_value());
}

TEST(Observations, ValidationErrors) {
    ObservationSeries s = first_days(truth_run(), 6);
    ObservationSeries gap = s;
    gap.rows.erase(gap.rows.begin() + 2);
    try {
        validated(gap);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("2020-07-02 and 2020-07-04"), std::string::npos);
    }
    ObservationSeries neg = s;
    neg.rows[3].active_cases = -1.0;
    EXPECT_THROW(validated(neg), DataError);
    ObservationSeries down = s;
    down.rows[3].cumulative_deaths = 5.0;
    down.rows[4].cumulative_deaths = 4.0;
    try {
        validated(down);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("2020-07-05"), std::string::npos);
    }
}
