#pragma once

// Timescale timeline of a wave and the day-granularity events read off it:
// coalescence and disappearance of the explosive timescales, the numeric
// inflection point of active cases, path rankings of the fastest explosive
// mode, and analytic cross-checks relating inflection points to rate maxima.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "seinsrd/csp.hpp"
#include "seinsrd/date.hpp"
#include "seinsrd/integrator.hpp"

namespace seinsrd {

struct AnalyzerOptions {
    CspOptions csp;
    double coalescence_gap = 0.05;     ///< relative tau gap treated as merged
    std::size_t persistence_days = 3;  ///< days a new regime must persist
    double noise_floor = 1e-9;         ///< second differences below this * max|series| count as zero
};

struct DayRecord {
    std::size_t day = 0;
    EigenAnalysis eigen;
    CspDiagnostics diagnostics;
    /// track[n]: persistent curve id of mode n, following eigenvalues across days.
    std::array<std::size_t, 6> track{};
};

struct TimescaleTimeline {
    Date wave_start{};
    std::vector<DayRecord> days;

    std::size_t size() const { return days.size(); }
};

namespace detail {

/// Assigns today's modes to yesterday's tracks by minimal total eigenvalue distance.
inline std::array<std::size_t, 6> match_tracks(const ComplexVector6& today, const std::array<Complex, 6>& by_track) {
    std::array<std::size_t, 6> perm{};
    std::iota(perm.begin(), perm.end(), 0);
    std::array<std::size_t, 6> best = perm;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (std::size_t n = 0; n < 6 && cost < best_cost; ++n) cost += std::abs(today[n] - by_track[perm[n]]);
        if (cost < best_cost) {
            best_cost = cost;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace detail

inline TimescaleTimeline build_timeline(const Trajectory& traj, const ModelParams& params,
                                        const AnalyzerOptions& opt = {}) {
    if (traj.empty()) throw std::invalid_argument("cannot build a timeline from an empty trajectory");
    TimescaleTimeline tl;
    tl.wave_start = traj.t0;
    tl.days.reserve(traj.size());
    std::array<Complex, 6> by_track{};
    for (std::size_t d = 0; d < traj.size(); ++d) {
        DayRecord rec;
        rec.day = d;
        const PointAnalysis pa = analyze_point(traj.states[d], params, opt.csp);
        rec.eigen = pa.eigen;
        rec.diagnostics = pa.diagnostics;
        if (d == 0) {
            std::iota(rec.track.begin(), rec.track.end(), 0);
        } else {
            rec.track = detail::match_tracks(rec.eigen.eigenvalues, by_track);
        }
        for (std::size_t n = 0; n < 6; ++n) by_track[rec.track[n]] = rec.eigen.eigenvalues[n];
        tl.days.push_back(std::move(rec));
    }
    return tl;
}

/// First day d >= 1 with explosive modes on d-1 and none on d .. d+persistence-1.
inline std::optional<std::size_t> detect_disappearance(const TimescaleTimeline& tl, std::size_t persistence = 3) {
    persistence = std::max<std::size_t>(persistence, 1);
    for (std::size_t d = 1; d + persistence <= tl.size(); ++d) {
        if (tl.days[d - 1].eigen.explosive_count() == 0) continue;
        bool gone = true;
        for (std::size_t j = d; j < d + persistence; ++j) gone = gone && tl.days[j].eigen.explosive_count() == 0;
        if (gone) return d;
    }
    return std::nullopt;
}

/// First day the two fastest explosive modes form a conjugate pair or lie within `gap` in relative tau.
inline std::optional<std::size_t> detect_coalescence(const TimescaleTimeline& tl, double gap = 0.05) {
    for (const auto& rec : tl.days) {
        std::array<std::size_t, 2> fastest{};
        std::size_t found = 0;
        for (std::size_t n = 0; n < 6 && found < 2; ++n)
            if (rec.eigen.classification[n] == ModeClass::explosive) fastest[found++] = n;
        if (found < 2) continue;
        const Complex l1 = rec.eigen.eigenvalues[fastest[0]];
        const Complex l2 = rec.eigen.eigenvalues[fastest[1]];
        if (l1.imag() != 0.0 && l2 == std::conj(l1)) return rec.day;
        const double t1 = rec.eigen.timescales[fastest[0]];
        const double t2 = rec.eigen.timescales[fastest[1]];
        if (std::abs(t1 - t2) / t1 < gap) return rec.day;
    }
    return std::nullopt;
}

enum class Concavity { up, down };

/// First day where the centered second difference turns from `from` to the opposite sign
/// and keeps the new sign for `persistence` days. Days are indices into `series`.
inline std::optional<std::size_t> detect_concavity_change(const std::vector<double>& series, Concavity from,
                                                          std::size_t persistence = 3, double noise_floor = 1e-9) {
    if (series.size() < 5) throw std::invalid_argument("inflection detection needs at least 5 days");
    persistence = std::max<std::size_t>(persistence, 1);
    double scale = 0.0;
    for (double v : series) scale = std::max(scale, std::abs(v));
    const double floor = noise_floor * scale;
    const int before = from == Concavity::up ? 1 : -1;
    const std::size_t n = series.size();
    std::vector<int> sign(n, 0);
    for (std::size_t d = 1; d + 1 < n; ++d) {
        const double d2 = series[d + 1] - 2.0 * series[d] + series[d - 1];
        sign[d] = d2 > floor ? 1 : d2 < -floor ? -1 : 0;
    }
    int last_nonzero = 0;
    for (std::size_t d = 1; d + 1 < n; ++d) {
        if (sign[d] == -before && last_nonzero == before && d + persistence <= n - 1) {
            bool held = true;
            for (std::size_t j = d; j < d + persistence; ++j) held = held && sign[j] == -before;
            if (held) return d;
        }
        if (sign[d] != 0) last_nonzero = sign[d];
    }
    return std::nullopt;
}

/// Inflection of a rising series: accelerating growth turning into decelerating growth.
inline std::optional<std::size_t> detect_inflection_numeric(const std::vector<double>& series,
                                                            std::size_t persistence = 3, double noise_floor = 1e-9) {
    return detect_concavity_change(series, Concavity::up, persistence, noise_floor);
}

/// Day of the maximum, or nothing when the maximum sits on either end of the window.
inline std::optional<std::size_t> interior_argmax(const std::vector<double>& series) {
    if (series.size() < 3) return std::nullopt;
    const auto it = std::max_element(series.begin(), series.end());
    const auto day = static_cast<std::size_t>(it - series.begin());
    if (day == 0 || day + 1 == series.size()) return std::nullopt;
    return day;
}

struct PathEntry {
    std::size_t transition = 0;  ///< 0-based; R(transition+1)
    double percent = 0.0;        ///< signed TPI share
};

struct PathRanking {
    std::size_t day = 0;
    std::size_t mode = 0;
    double tau_days = 0.0;
    std::vector<PathEntry> entries;  ///< sorted by |percent| descending
};

/// TPI row of the fastest explosive mode on `day`, as signed percentages.
inline PathRanking rank_paths(const TimescaleTimeline& tl, std::size_t day) {
    if (day >= tl.size()) throw std::out_of_range("ranking day " + std::to_string(day) + " outside timeline");
    const DayRecord& rec = tl.days[day];
    const auto mode = rec.eigen.fastest_explosive();
    if (!mode) throw std::domain_error("no explosive mode on day " + std::to_string(day));
    if (!rec.diagnostics.reliable) throw std::domain_error("degenerate eigen-analysis on day " + std::to_string(day));
    PathRanking out;
    out.day = day;
    out.mode = *mode;
    out.tau_days = rec.eigen.timescales[*mode];
    const auto row = rec.diagnostics.tpi.index.values.row(static_cast<Eigen::Index>(*mode));
    for (std::size_t k = 0; k < kNumTransitions; ++k) out.entries.push_back({k, 100.0 * row[static_cast<Eigen::Index>(k)]});
    std::stable_sort(out.entries.begin(), out.entries.end(),
                     [](const PathEntry& a, const PathEntry& b) { return std::abs(a.percent) > std::abs(b.percent); });
    return out;
}

namespace detail {

inline std::vector<double> compartment_series(const Trajectory& traj, Compartment c) {
    std::vector<double> out;
    out.reserve(traj.size());
    for (const auto& s : traj.states) out.push_back(s.to_vector()[static_cast<Eigen::Index>(c)]);
    return out;
}

inline std::optional<long> gap_between(std::optional<std::size_t> a, std::optional<std::size_t> b) {
    if (!a || !b) return std::nullopt;
    return static_cast<long>(*b) - static_cast<long>(*a);
}

}  // namespace detail

/// SP turns from concave to convex close to where R1 + R2 peaks.
struct SpInflectionOracle {
    std::optional<std::size_t> sp_inflection_day;
    std::optional<std::size_t> max_r1_plus_r2_day;
    std::optional<long> gap;  ///< max day - inflection day
};

inline SpInflectionOracle oracle_sp_inflection(const Trajectory& traj, const ModelParams& params,
                                               std::size_t persistence = 3) {
    std::vector<double> infection;
    infection.reserve(traj.size());
    for (const auto& s : traj.states) {
        const RateVector r = compute_rates(s, params);
        infection.push_back(r.path(1) + r.path(2));
    }
    SpInflectionOracle out;
    out.sp_inflection_day =
        detect_concavity_change(detail::compartment_series(traj, Compartment::sp), Concavity::down, persistence);
    out.max_r1_plus_r2_day = interior_argmax(infection);
    out.gap = detail::gap_between(out.sp_inflection_day, out.max_r1_plus_r2_day);
    return out;
}

/// Inflection of INSP + ISSP versus the peak of EP.
struct ActiveInflectionOracle {
    std::optional<std::size_t> active_inflection_day;
    std::optional<std::size_t> max_ep_day;
    std::optional<long> gap;  ///< max EP day - inflection day
};

inline ActiveInflectionOracle oracle_active_inflection_vs_max_ep(const Trajectory& traj, std::size_t persistence = 3) {
    ActiveInflectionOracle out;
    out.active_inflection_day = detect_inflection_numeric(active_cases(traj), persistence);
    out.max_ep_day = interior_argmax(detail::compartment_series(traj, Compartment::ep));
    out.gap = detail::gap_between(out.active_inflection_day, out.max_ep_day);
    return out;
}

/// EP's inflection should come no later than SP's.
struct EpBeforeSpOracle {
    std::optional<std::size_t> ep_inflection_day;
    std::optional<std::size_t> sp_inflection_day;
    std::optional<bool> ordering_holds;
    std::optional<long> gap;  ///< sp day - ep day
};

inline EpBeforeSpOracle oracle_ep_before_sp_inflection(const Trajectory& traj, std::size_t persistence = 3) {
    EpBeforeSpOracle out;
    out.ep_inflection_day =
        detect_concavity_change(detail::compartment_series(traj, Compartment::ep), Concavity::up, persistence);
    out.sp_inflection_day =
        detect_concavity_change(detail::compartment_series(traj, Compartment::sp), Concavity::down, persistence);
    out.gap = detail::gap_between(out.ep_inflection_day, out.sp_inflection_day);
    if (out.gap) out.ordering_holds = *out.gap >= 0;
    return out;
}

struct AppendixOracles {
    SpInflectionOracle sp_vs_infection_peak;
    EpBeforeSpOracle ep_before_sp;
    ActiveInflectionOracle active_vs_ep_peak;
};

struct OutbreakEvents {
    std::optional<std::size_t> coalescence_day;
    std::optional<std::size_t> disappearance_day;
    std::optional<std::size_t> inflection_day_numeric;
    std::optional<std::size_t> last_explosive_day;
    std::optional<double> tau_explosive_start;  ///< fastest explosive tau on day 0
    std::optional<double> tau_explosive_end;    ///< fastest explosive tau on the last explosive day
    std::vector<PathRanking> path_rankings;
};

struct OutbreakAnalysis {
    TimescaleTimeline timeline;
    OutbreakEvents events;
    AppendixOracles oracles;
};

inline std::optional<double> fastest_explosive_tau(const DayRecord& rec) {
    const auto n = rec.eigen.fastest_explosive();
    if (!n) return std::nullopt;
    return rec.eigen.timescales[*n];
}

/// Last day an explosive mode is present: the day before disappearance, else the last explosive day.
inline std::optional<std::size_t> last_explosive_day(const TimescaleTimeline& tl,
                                                     std::optional<std::size_t> disappearance) {
    if (disappearance) return *disappearance - 1;
    for (std::size_t d = tl.size(); d-- > 0;)
        if (tl.days[d].eigen.explosive_count() > 0) return d;
    return std::nullopt;
}

inline OutbreakEvents detect_events(const TimescaleTimeline& tl, const std::vector<double>& actives,
                                    const AnalyzerOptions& opt = {},
                                    std::optional<std::vector<std::size_t>> ranking_days = std::nullopt) {
    OutbreakEvents ev;
    ev.coalescence_day = detect_coalescence(tl, opt.coalescence_gap);
    ev.disappearance_day = detect_disappearance(tl, opt.persistence_days);
    ev.inflection_day_numeric = detect_inflection_numeric(actives, opt.persistence_days, opt.noise_floor);
    ev.last_explosive_day = last_explosive_day(tl, ev.disappearance_day);
    if (!tl.days.empty()) ev.tau_explosive_start = fastest_explosive_tau(tl.days.front());
    if (ev.last_explosive_day) ev.tau_explosive_end = fastest_explosive_tau(tl.days[*ev.last_explosive_day]);

    std::vector<std::size_t> days;
    if (ranking_days) {
        days = *ranking_days;
    } else if (ev.tau_explosive_start) {
        days.push_back(0);
        if (ev.last_explosive_day && *ev.last_explosive_day != 0) days.push_back(*ev.last_explosive_day);
    }
    for (std::size_t d : days) {
        if (d >= tl.size() || tl.days[d].eigen.explosive_count() == 0 || !tl.days[d].diagnostics.reliable) continue;
        ev.path_rankings.push_back(rank_paths(tl, d));
    }
    return ev;
}

/// Timeline, events and appendix cross-checks for one trajectory.
inline OutbreakAnalysis analyze_outbreak(const Trajectory& traj, const ModelParams& params,
                                         const AnalyzerOptions& opt = {},
                                         std::optional<std::vector<std::size_t>> ranking_days = std::nullopt) {
    OutbreakAnalysis out;
    out.timeline = build_timeline(traj, params, opt);
    out.events = detect_events(out.timeline, active_cases(traj), opt, std::move(ranking_days));
    out.oracles.sp_vs_infection_peak = oracle_sp_inflection(traj, params, opt.persistence_days);
    out.oracles.ep_before_sp = oracle_ep_before_sp_inflection(traj, opt.persistence_days);
    out.oracles.active_vs_ep_peak = oracle_active_inflection_vs_max_ep(traj, opt.persistence_days);
    return out;
}

}  // namespace seinsrd
