#pragma once

// Parameter estimation: log1p trajectory mismatch minimized by restarted
// Nelder-Mead (GSL nmsimplex2) over log-transformed, box-bounded parameters.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "seinsrd/analyzer.hpp"
#include "seinsrd/date.hpp"
#include "seinsrd/errors.hpp"
#include "seinsrd/integrator.hpp"
#include "seinsrd/model.hpp"

namespace seinsrd {

struct Observation {
    Date date{};
    double active_cases = 0.0;
    double cumulative_deaths = 0.0;
    std::optional<double> exposed;

    bool operator==(const Observation&) const = default;
};

/// Daily observations; `rows` are contiguous in date once validated.
struct ObservationSeries {
    std::vector<Observation> rows;

    std::size_t size() const { return rows.size(); }
    bool empty() const { return rows.empty(); }
    Date start() const { return rows.front().date; }
    Date end() const { return rows.back().date; }
    bool has_exposed() const {
        return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const Observation& o) { return o.exposed.has_value(); });
    }
};

/// Sorts by date and enforces contiguity, non-negativity and non-decreasing deaths.
inline ObservationSeries validated(ObservationSeries s) {
    std::stable_sort(s.rows.begin(), s.rows.end(), [](const Observation& a, const Observation& b) { return a.date < b.date; });
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
        const Observation& o = s.rows[i];
        const std::string when = format_date(o.date);
        if (!std::isfinite(o.active_cases) || !std::isfinite(o.cumulative_deaths) || (o.exposed && !std::isfinite(*o.exposed)))
            throw DataError("non-finite value on " + when);
        if (o.active_cases < 0.0 || o.cumulative_deaths < 0.0 || (o.exposed && *o.exposed < 0.0))
            throw DataError("negative value on " + when);
        if (i == 0) continue;
        const Observation& prev = s.rows[i - 1];
        if (days_between(prev.date, o.date) != 1)
            throw DataError("date gap between " + format_date(prev.date) + " and " + when);
        if (o.cumulative_deaths < prev.cumulative_deaths) throw DataError("cumulative deaths decrease on " + when);
    }
    return s;
}

/// Daily observations read off a model run: actives, cumulative deaths and optionally EP.
inline ObservationSeries observations_from(const Trajectory& t, bool with_exposed = false) {
    ObservationSeries s;
    for (std::size_t d = 0; d < t.size(); ++d) {
        Observation o{add_days(t.t0, static_cast<long>(d)), t.states[d].active(), t.states[d].idp, std::nullopt};
        if (with_exposed) o.exposed = t.states[d].ep;
        s.rows.push_back(o);
    }
    return s;
}

struct Window {
    Date start{};
    Date end{};  ///< inclusive

    std::string to_string() const { return format_date(start) + ":" + format_date(end); }
    bool operator==(const Window&) const = default;
};

/// Rows of `s` inside `w`; the window must lie within the data.
inline ObservationSeries slice(const ObservationSeries& s, const Window& w) {
    if (s.empty() || w.end < w.start || w.start < s.start() || w.end > s.end())
        throw DataError("window " + w.to_string() + " outside observation range" +
                        (s.empty() ? std::string() : " " + format_date(s.start()) + ":" + format_date(s.end())));
    ObservationSeries out;
    for (const auto& o : s.rows)
        if (o.date >= w.start && o.date <= w.end) out.rows.push_back(o);
    return out;
}

/// Parameters the optimizer may move. `initial_ep` is the exposed population at window start.
enum class FitParameter { beta_insp, beta_issp, aincp, aip, mu_insp, mu_issp, mu_tp, ss, initial_ep };

inline constexpr std::array<FitParameter, 9> kAllFitParameters = {
    FitParameter::beta_insp, FitParameter::beta_issp, FitParameter::aincp, FitParameter::aip, FitParameter::mu_insp,
    FitParameter::mu_issp,   FitParameter::mu_tp,     FitParameter::ss,    FitParameter::initial_ep};

inline const char* to_string(FitParameter p) {
    switch (p) {
        case FitParameter::beta_insp: return "beta_insp";
        case FitParameter::beta_issp: return "beta_issp";
        case FitParameter::aincp: return "aincp";
        case FitParameter::aip: return "aip";
        case FitParameter::mu_insp: return "mu_insp";
        case FitParameter::mu_issp: return "mu_issp";
        case FitParameter::mu_tp: return "mu_tp";
        case FitParameter::ss: return "ss";
        case FitParameter::initial_ep: return "initial_ep";
    }
    return "?";
}

inline std::optional<FitParameter> fit_parameter_from_string(std::string_view name) {
    for (FitParameter p : kAllFitParameters)
        if (name == to_string(p)) return p;
    return std::nullopt;
}

struct Bounds {
    double lower = 0.0;
    double upper = 0.0;
};

/// Default box: ratios [1e-6, 1e3] per day, periods [0.5, 60] days, ss (0, 1], initial EP [1, tp].
inline Bounds default_bounds(FitParameter p, double tp) {
    switch (p) {
        case FitParameter::aincp:
        case FitParameter::aip: return {0.5, 60.0};
        case FitParameter::ss: return {1e-6, 1.0};
        case FitParameter::initial_ep: return {1.0, tp};
        default: return {1e-6, 1e3};
    }
}

struct LossWeights {
    double active = 1.0;
    double deaths = 1.0;
    double exposed = 1.0;  ///< used only when every row carries an exposed value
};

struct FitConfig {
    std::vector<FitParameter> free = {FitParameter::beta_insp, FitParameter::beta_issp, FitParameter::ss,
                                      FitParameter::initial_ep};
    std::vector<std::pair<FitParameter, Bounds>> bounds;  ///< overrides of default_bounds
    ModelParams params = default_fit_params();            ///< fixed values and starting guesses
    double initial_ep = 1000.0;                           ///< starting guess
    std::size_t max_evaluations = 4000;                   ///< per restart
    std::size_t restarts = 4;
    std::uint64_t seed = 1;
    double restart_spread = 0.3;  ///< std. dev. of log-normal start perturbations
    double initial_step = 0.1;    ///< simplex edge in log space
    double size_tolerance = 1e-6;
    LossWeights weights;
    Tolerances tolerances = {1e-8, 0.0};  ///< abs 0 means 1e-10 * tp

    static ModelParams default_fit_params() {
        ModelParams p;
        p.beta_insp = 0.3;
        p.beta_issp = 0.3;
        p.aincp = 5.1;
        p.aip = 14.0;
        p.mu_insp = 0.001;
        p.mu_issp = 0.01;
        p.mu_tp = 3.5e-5;
        p.ss = 0.1;
        p.tp = 1e7;
        return p;
    }

    Bounds bounds_of(FitParameter p) const {
        for (const auto& [q, b] : bounds)
            if (q == p) return b;
        return default_bounds(p, params.tp);
    }

    Tolerances integration_tolerances() const {
        return tol_abs_or_default(tolerances, params.tp);
    }

    static Tolerances tol_abs_or_default(Tolerances t, double tp) {
        if (t.abs <= 0.0) t.abs = 1e-10 * tp;
        return t;
    }
};

inline void validate(const FitConfig& c) {
    validate(c.params);
    if (c.max_evaluations < 1) throw ConfigError("fit budget must be at least 1 evaluation");
    if (c.restarts < 1) throw ConfigError("fit needs at least 1 restart");
    if (!(c.initial_ep >= 0.0) || c.initial_ep > c.params.tp) throw ConfigError("initial_ep must lie in [0, tp]");
    if (!(c.weights.active >= 0.0) || !(c.weights.deaths >= 0.0) || !(c.weights.exposed >= 0.0))
        throw ConfigError("loss weights must be non-negative");
    if (!(c.initial_step > 0.0) || !(c.size_tolerance > 0.0) || !(c.restart_spread >= 0.0))
        throw ConfigError("simplex step, tolerance and spread must be positive");
    for (std::size_t i = 0; i < c.free.size(); ++i) {
        const Bounds b = c.bounds_of(c.free[i]);
        if (!std::isfinite(b.lower) || !std::isfinite(b.upper) || !(b.lower > 0.0) || b.upper < b.lower)
            throw ConfigError(std::string("bounds of ") + to_string(c.free[i]) + " must be finite, positive and ordered");
        for (std::size_t j = 0; j < i; ++j)
            if (c.free[j] == c.free[i]) throw ConfigError(std::string("duplicate free parameter ") + to_string(c.free[i]));
    }
}

/// Window-start state: SP = TP - EP0 - actives, actives split by ss, RP = 0, IDP = deaths.
inline StateVector initial_state_policy(const ModelParams& p, double initial_ep, const Observation& first) {
    const double active = first.active_cases;
    StateVector s;
    s.ep = initial_ep;
    s.insp = (1.0 - p.ss) * active;
    s.issp = p.ss * active;
    s.rp = 0.0;
    s.idp = first.cumulative_deaths;
    s.sp = p.tp - initial_ep - active - first.cumulative_deaths;
    if (s.sp < 0.0) throw DataError("observed populations exceed tp at " + format_date(first.date));
    return s;
}

struct LossBreakdown {
    double total = 0.0;
    double active = 0.0;   ///< unweighted sums of squared log1p residuals
    double deaths = 0.0;
    double exposed = 0.0;
    bool feasible = true;
    std::string diagnostic;  ///< why an evaluation was infeasible
};

/// Model series on the observation days; all terms unweighted.
inline LossBreakdown evaluate_objective(const ModelParams& params, const StateVector& initial_state,
                                        const ObservationSeries& observations, const FitConfig& config) {
    if (observations.size() < 5) throw std::invalid_argument("observation window must span at least 5 days");
    const ObservationSeries obs = validated(observations);
    LossBreakdown out;
    Trajectory traj;
    try {
        traj = integrate(params, initial_state, static_cast<double>(obs.size() - 1),
                         FitConfig::tol_abs_or_default(config.tolerances, params.tp), obs.start());
    } catch (const NumericalError& e) {
        out.feasible = false;
        out.diagnostic = e.what();
    } catch (const std::invalid_argument& e) {
        out.feasible = false;
        out.diagnostic = e.what();
    }
    if (!out.feasible) {
        out.total = std::numeric_limits<double>::infinity();
        return out;
    }
    const bool use_exposed = obs.has_exposed();
    auto sq = [](double model, double data) {
        const double r = std::log1p(model) - std::log1p(data);
        return r * r;
    };
    for (std::size_t d = 0; d < obs.size(); ++d) {
        const StateVector& s = traj.states[d];
        out.active += sq(s.active(), obs.rows[d].active_cases);
        out.deaths += sq(s.idp, obs.rows[d].cumulative_deaths);
        if (use_exposed) out.exposed += sq(s.ep, *obs.rows[d].exposed);
    }
    out.total = config.weights.active * out.active + config.weights.deaths * out.deaths +
                (use_exposed ? config.weights.exposed * out.exposed : 0.0);
    return out;
}

/// Weighted log1p mismatch; +infinity when the integration fails.
inline double objective(const ModelParams& params, const StateVector& initial_state,
                        const ObservationSeries& observations, const FitConfig& config) {
    return evaluate_objective(params, initial_state, observations, config).total;
}

struct RestartReport {
    std::size_t index = 0;
    std::vector<double> start;  ///< natural-scale values of the free parameters
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t evaluations = 0;
    bool converged = false;
    std::string status;
};

struct FitResult {
    ModelParams params;
    StateVector initial_state;
    double initial_ep = 0.0;
    Date start{};
    double loss = 0.0;
    double residual_active = 0.0;   ///< root of the unweighted squared log1p residual sum
    double residual_deaths = 0.0;
    std::optional<double> residual_exposed;
    std::size_t evaluations = 0;    ///< over all restarts
    bool converged = false;
    std::vector<FitParameter> free;
    std::vector<RestartReport> restarts;
    std::vector<double> best_loss_trace;  ///< best loss so far after each evaluation of the winning restart
};

/// Every restart was infeasible or failed.
class FitError : public NumericalError {
public:
    FitError(const std::string& what, std::vector<RestartReport> reports)
        : NumericalError(what), reports_(std::move(reports)) {}
    const std::vector<RestartReport>& reports() const noexcept { return reports_; }

private:
    std::vector<RestartReport> reports_;
};

namespace detail {

inline double get(const ModelParams& p, double initial_ep, FitParameter which) {
    switch (which) {
        case FitParameter::beta_insp: return p.beta_insp;
        case FitParameter::beta_issp: return p.beta_issp;
        case FitParameter::aincp: return p.aincp;
        case FitParameter::aip: return p.aip;
        case FitParameter::mu_insp: return p.mu_insp;
        case FitParameter::mu_issp: return p.mu_issp;
        case FitParameter::mu_tp: return p.mu_tp;
        case FitParameter::ss: return p.ss;
        case FitParameter::initial_ep: return initial_ep;
    }
    return 0.0;
}

inline void set(ModelParams& p, double& initial_ep, FitParameter which, double v) {
    switch (which) {
        case FitParameter::beta_insp: p.beta_insp = v; break;
        case FitParameter::beta_issp: p.beta_issp = v; break;
        case FitParameter::aincp: p.aincp = v; break;
        case FitParameter::aip: p.aip = v; break;
        case FitParameter::mu_insp: p.mu_insp = v; break;
        case FitParameter::mu_issp: p.mu_issp = v; break;
        case FitParameter::mu_tp: p.mu_tp = v; break;
        case FitParameter::ss: p.ss = v; break;
        case FitParameter::initial_ep: initial_ep = v; break;
    }
}

struct Candidate {
    ModelParams params;
    double initial_ep = 0.0;
};

/// Maps a log-space point into the box and onto model parameters.
struct Decoder {
    const FitConfig& config;
    std::vector<Bounds> bounds;

    explicit Decoder(const FitConfig& c) : config(c) {
        for (FitParameter p : c.free) bounds.push_back(c.bounds_of(p));
    }

    Candidate decode(const double* x) const {
        Candidate c{config.params, config.initial_ep};
        for (std::size_t i = 0; i < config.free.size(); ++i)
            set(c.params, c.initial_ep, config.free[i], std::clamp(std::exp(x[i]), bounds[i].lower, bounds[i].upper));
        return c;
    }
};

struct EvalContext {
    const Decoder* decoder = nullptr;
    const ObservationSeries* obs = nullptr;
    std::size_t evaluations = 0;
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_x;
    std::vector<double> trace;
};

inline double loss_of(const Candidate& c, const ObservationSeries& obs, const FitConfig& config) {
    StateVector init;
    try {
        init = initial_state_policy(c.params, c.initial_ep, obs.rows.front());
    } catch (const DataError&) {
        return std::numeric_limits<double>::infinity();
    }
    return objective(c.params, init, obs, config);
}

inline double gsl_objective(const gsl_vector* x, void* raw) {
    auto* ctx = static_cast<EvalContext*>(raw);
    const double loss = loss_of(ctx->decoder->decode(x->data), *ctx->obs, ctx->decoder->config);
    ++ctx->evaluations;
    if (loss < ctx->best) {
        ctx->best = loss;
        ctx->best_x.assign(x->data, x->data + x->size);
    }
    ctx->trace.push_back(ctx->best);
    // GSL rejects non-finite values; a huge finite loss keeps infeasible points out of the simplex.
    return std::isfinite(loss) ? loss : std::numeric_limits<double>::max() / 4.0;
}

struct RestartOutcome {
    RestartReport report;
    std::vector<double> best_x;
    std::vector<double> trace;
};

/// One restart: simplex descent from `x0`, re-seeding the simplex at the best point after each convergence
/// until a re-seeded run no longer improves the loss.
inline RestartOutcome run_restart(const Decoder& decoder, const ObservationSeries& obs, std::vector<double> x0,
                                  std::size_t index) {
    const FitConfig& config = decoder.config;
    const std::size_t n = x0.size();
    EvalContext ctx;
    ctx.decoder = &decoder;
    ctx.obs = &obs;
    RestartOutcome out;
    out.report.index = index;
    {
        const Candidate c = decoder.decode(x0.data());
        for (FitParameter p : config.free) out.report.start.push_back(get(c.params, c.initial_ep, p));
    }

    gsl_multimin_function f{&gsl_objective, n, &ctx};
    gsl_vector* x = gsl_vector_alloc(n);
    gsl_vector* step = gsl_vector_alloc(n);
    gsl_vector_set_all(step, config.initial_step);
    gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);

    bool converged = false;
    double previous_best = std::numeric_limits<double>::infinity();
    std::string status = "budget exhausted";
    while (ctx.evaluations < config.max_evaluations) {
        for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x, i, x0[i]);
        if (gsl_multimin_fminimizer_set(s, &f, x, step) != GSL_SUCCESS) {
            status = "simplex initialisation failed";
            break;
        }
        bool run_converged = false;
        while (ctx.evaluations < config.max_evaluations) {
            if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) {
                status = "simplex cannot improve";
                break;
            }
            if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), config.size_tolerance) == GSL_SUCCESS) {
                run_converged = true;
                break;
            }
        }
        if (!run_converged) break;
        const bool improved = ctx.best < previous_best - 1e-12 * (1.0 + std::abs(ctx.best));
        previous_best = ctx.best;
        if (!improved) {
            converged = true;
            status = "converged";
            break;
        }
        x0 = ctx.best_x;
    }
    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(step);
    gsl_vector_free(x);

    if (!std::isfinite(ctx.best)) {
        converged = false;
        status = "no feasible point";
    }
    out.report.best_loss = ctx.best;
    out.report.evaluations = ctx.evaluations;
    out.report.converged = converged;
    out.report.status = status;
    out.best_x = ctx.best_x;
    out.trace = std::move(ctx.trace);
    return out;
}

inline FitResult finish(const FitConfig& config, const ObservationSeries& obs, const Candidate& best) {
    FitResult r;
    r.params = best.params;
    r.initial_ep = best.initial_ep;
    r.start = obs.start();
    r.free = config.free;
    r.initial_state = initial_state_policy(best.params, best.initial_ep, obs.rows.front());
    const LossBreakdown b = evaluate_objective(r.params, r.initial_state, obs, config);
    r.loss = b.total;
    r.residual_active = std::sqrt(b.active);
    r.residual_deaths = std::sqrt(b.deaths);
    if (obs.has_exposed()) r.residual_exposed = std::sqrt(b.exposed);
    return r;
}

}  // namespace detail

/// Fits the free parameters of `config` to the whole of `observations`.
inline FitResult fit(const ObservationSeries& observations, const FitConfig& config) {
    validate(config);
    const ObservationSeries obs = validated(observations);
    if (obs.size() < 5) throw DataError("fit window must span at least 5 days");
    gsl_set_error_handler_off();

    if (config.free.empty()) {
        FitResult r = detail::finish(config, obs, {config.params, config.initial_ep});
        if (!std::isfinite(r.loss)) throw FitError("fixed parameters are infeasible", {});
        r.evaluations = 1;
        r.converged = true;
        r.best_loss_trace = {r.loss};
        return r;
    }

    const detail::Decoder decoder(config);
    std::vector<double> base;
    for (std::size_t i = 0; i < config.free.size(); ++i) {
        const double v = detail::get(config.params, config.initial_ep, config.free[i]);
        base.push_back(std::log(std::clamp(v, decoder.bounds[i].lower, decoder.bounds[i].upper)));
    }

    // Restart 0 starts at the configured guess; the others at seeded log-normal perturbations of it.
    std::vector<std::vector<double>> starts;
    for (std::size_t r = 0; r < config.restarts; ++r) {
        std::vector<double> x = base;
        if (r > 0) {
            std::mt19937_64 rng(config.seed + 0x9E3779B97F4A7C15ULL * r);
            std::normal_distribution<double> spread(0.0, config.restart_spread);
            for (double& v : x) v += spread(rng);
        }
        starts.push_back(std::move(x));
    }

    std::vector<std::future<detail::RestartOutcome>> jobs;
    for (std::size_t r = 0; r < starts.size(); ++r)
        jobs.push_back(std::async(std::launch::async, [&, r] { return detail::run_restart(decoder, obs, starts[r], r); }));
    std::vector<detail::RestartOutcome> outcomes;
    for (auto& j : jobs) outcomes.push_back(j.get());

    std::vector<RestartReport> reports;
    std::size_t total_evaluations = 0;
    const detail::RestartOutcome* winner = nullptr;
    for (const auto& o : outcomes) {
        reports.push_back(o.report);
        total_evaluations += o.report.evaluations;
        if (std::isfinite(o.report.best_loss) && (!winner || o.report.best_loss < winner->report.best_loss)) winner = &o;
    }
    if (!winner) throw FitError("all " + std::to_string(reports.size()) + " restarts infeasible", reports);

    FitResult r = detail::finish(config, obs, decoder.decode(winner->best_x.data()));
    r.evaluations = total_evaluations;
    r.converged = winner->report.converged;
    r.restarts = std::move(reports);
    r.best_loss_trace = winner->trace;
    return r;
}

inline FitResult fit(const ObservationSeries& observations, const Window& window, const FitConfig& config) {
    return fit(slice(validated(observations), window), config);
}

/// Trajectory of a fitted model from its window start over `horizon_days`.
inline Trajectory fitted_trajectory(const FitResult& f, double horizon_days, const Tolerances& tol) {
    return integrate(f.params, f.initial_state, horizon_days, FitConfig::tol_abs_or_default(tol, f.params.tp), f.start);
}

struct WindowOutcome {
    Window window;
    std::optional<FitResult> fit;
    std::optional<OutbreakAnalysis> analysis;
    std::optional<std::string> failure;

    /// Calendar date of the explosive-mode disappearance, if any.
    std::optional<Date> disappearance_date() const {
        if (!fit || !analysis || !analysis->events.disappearance_day) return std::nullopt;
        return add_days(fit->start, static_cast<long>(*analysis->events.disappearance_day));
    }
};

struct WindowComparison {
    WindowOutcome a;
    WindowOutcome b;
    std::optional<long> disappearance_gap_days;  ///< date(b) - date(a)

    bool ok() const { return !a.failure && !b.failure; }
};

/// Fits both windows, analyzes each fitted trajectory over `horizon_days`, and compares the disappearance dates.
/// A window that fails to fit is recorded in its outcome rather than aborting the other.
inline WindowComparison fit_windows(const ObservationSeries& observations, const Window& window_a,
                                    const Window& window_b, const FitConfig& config,
                                    const AnalyzerOptions& analyzer = {}, double horizon_days = 200.0) {
    const ObservationSeries obs = validated(observations);
    slice(obs, window_a);
    slice(obs, window_b);
    auto run = [&](const Window& w) {
        WindowOutcome out;
        out.window = w;
        try {
            out.fit = fit(obs, w, config);
            const Trajectory t = fitted_trajectory(*out.fit, horizon_days, config.tolerances);
            out.analysis = analyze_outbreak(t, out.fit->params, analyzer);
        } catch (const NumericalError& e) {
            out.failure = e.what();
        }
        return out;
    };
    WindowComparison c;
    c.a = run(window_a);
    c.b = run(window_b);
    const auto da = c.a.disappearance_date();
    const auto db = c.b.disappearance_date();
    if (da && db) c.disappearance_gap_days = days_between(*da, *db);
    return c;
}

}  // namespace seinsrd
