#pragma once

// File formats: observation CSV, flat key = value run configuration,
// JSON reports and plot-ready CSVs.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "seinsrd/analyzer.hpp"
#include "seinsrd/date.hpp"
#include "seinsrd/errors.hpp"
#include "seinsrd/fit.hpp"
#include "seinsrd/integrator.hpp"

namespace seinsrd {

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t next = s.find(sep, pos);
        out.push_back(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::optional<std::uint64_t> parse_unsigned(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) return std::nullopt;
    return v;
}

/// Shortest text that round-trips a double.
inline std::string exact(double v) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

/// Six significant digits, as used by every emitted report and plot file.
inline std::string sig6(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Observation CSV

inline constexpr std::string_view kObservationHeader = "date,active_cases,cumulative_deaths";
inline constexpr std::string_view kObservationHeaderExposed = "date,active_cases,cumulative_deaths,exposed";

/// Strict reader; `source` names the input in error messages.
inline ObservationSeries parse_observations(std::istream& in, const std::string& source = "<input>") {
    auto fail = [&](std::size_t line, const std::string& msg) -> DataError {
        return DataError(source + ":" + std::to_string(line) + ": " + msg);
    };
    std::string line;
    std::size_t number = 0;
    if (!std::getline(in, line)) throw DataError(source + ": empty file");
    ++number;
    if (line.find('\r') != std::string::npos) throw fail(number, "CRLF line endings are not accepted");
    bool with_exposed = false;
    if (line == kObservationHeaderExposed) with_exposed = true;
    else if (line != kObservationHeader)
        throw fail(number, "expected header '" + std::string(kObservationHeader) + "[,exposed]'");

    ObservationSeries s;
    while (std::getline(in, line)) {
        ++number;
        if (line.find('\r') != std::string::npos) throw fail(number, "CRLF line endings are not accepted");
        if (line.empty()) {
            if (in.peek() == std::char_traits<char>::eof()) break;
            throw fail(number, "empty row");
        }
        const auto cells = detail::split(line, ',');
        const std::size_t expected = with_exposed ? 4 : 3;
        if (cells.size() != expected)
            throw fail(number, "expected " + std::to_string(expected) + " fields, found " + std::to_string(cells.size()));
        const auto date = parse_date(cells[0]);
        if (!date) throw fail(number, "malformed date '" + std::string(cells[0]) + "'");
        Observation o{*date, 0.0, 0.0, std::nullopt};
        const auto active = detail::parse_double(cells[1]);
        const auto deaths = detail::parse_double(cells[2]);
        if (!active) throw fail(number, "malformed active_cases '" + std::string(cells[1]) + "'");
        if (!deaths) throw fail(number, "malformed cumulative_deaths '" + std::string(cells[2]) + "'");
        o.active_cases = *active;
        o.cumulative_deaths = *deaths;
        if (with_exposed) {
            const auto e = detail::parse_double(cells[3]);
            if (!e) throw fail(number, "malformed exposed '" + std::string(cells[3]) + "'");
            o.exposed = *e;
        }
        if (o.active_cases < 0.0 || o.cumulative_deaths < 0.0 || (o.exposed && *o.exposed < 0.0))
            throw fail(number, "negative value");
        if (!s.empty()) {
            const Observation& prev = s.rows.back();
            const long step = days_between(prev.date, o.date);
            if (step != 1)
                throw fail(number, (step > 1 ? "date gap between " : "dates out of order: ") + format_date(prev.date) +
                                       (step > 1 ? " and " : " then ") + format_date(o.date));
            if (o.cumulative_deaths < prev.cumulative_deaths) throw fail(number, "cumulative_deaths decreases");
        }
        s.rows.push_back(o);
    }
    if (s.empty()) throw DataError(source + ": no data rows");
    return s;
}

inline ObservationSeries parse_observations(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    return parse_observations(in, path.string());
}

/// Writes values in shortest round-trip form, so parsing the output gives back the same series.
inline void write_observations(const ObservationSeries& s, std::ostream& out) {
    const bool with_exposed = s.has_exposed();
    out << (with_exposed ? kObservationHeaderExposed : kObservationHeader) << '\n';
    for (const auto& o : s.rows) {
        out << format_date(o.date) << ',' << detail::exact(o.active_cases) << ',' << detail::exact(o.cumulative_deaths);
        if (with_exposed) out << ',' << detail::exact(*o.exposed);
        out << '\n';
    }
}

inline void write_observations(const ObservationSeries& s, const std::filesystem::path& path) {
    auto out = detail::open_output(path);
    write_observations(s, out);
    if (!out) throw ConfigError("cannot write " + path.string());
}

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
    ModelParams params = FitConfig::default_fit_params();
    double initial_ep = 1000.0;  ///< simulation seed and fit starting guess
    double initial_insp = 0.0;
    double initial_issp = 0.0;
    double initial_rp = 0.0;
    double initial_idp = 0.0;
    double horizon_days = 200.0;
    std::optional<Date> wave_start_date;
    std::optional<Window> window_a;
    std::optional<Window> window_b;
    FitConfig fit;
    AnalyzerOptions analyzer;
    Tolerances tolerances = {1e-8, 0.0};  ///< abs 0 means 1e-10 * tp
    std::optional<std::vector<std::size_t>> ranking_days;
    std::string output_dir = ".";
    std::uint64_t seed = 1;

    /// SP takes the remainder of tp.
    StateVector initial_state() const {
        StateVector s{0.0, initial_ep, initial_insp, initial_issp, initial_rp, initial_idp};
        s.sp = params.tp - (s.ep + s.insp + s.issp + s.rp + s.idp);
        return s;
    }

    Tolerances integration_tolerances() const { return FitConfig::tol_abs_or_default(tolerances, params.tp); }

    /// Fit settings with the shared model values, seed and tolerances folded in.
    FitConfig fit_config() const {
        FitConfig f = fit;
        f.params = params;
        f.initial_ep = initial_ep;
        f.seed = seed;
        f.tolerances = tolerances;
        return f;
    }
};

inline std::optional<Window> parse_window(std::string_view text) {
    text = detail::trim(text);
    const auto parts = detail::split(text, ':');
    if (parts.size() != 2) return std::nullopt;
    const auto a = parse_date(detail::trim(parts[0]));
    const auto b = parse_date(detail::trim(parts[1]));
    if (!a || !b || *b < *a) return std::nullopt;
    return Window{*a, *b};
}

inline void validate(const RunConfig& c) {
    validate(c.params);
    const StateVector s = c.initial_state();
    for (double v : {c.initial_ep, c.initial_insp, c.initial_issp, c.initial_rp, c.initial_idp})
        if (!(v >= 0.0)) throw ConfigError("initial populations must be non-negative");
    if (s.sp < 0.0) throw ConfigError("initial populations exceed tp");
    if (!(c.horizon_days >= 1.0) || !std::isfinite(c.horizon_days))
        throw ConfigError("horizon_days must be at least 1 day");
    if (!(c.tolerances.rel > 0.0) || c.tolerances.abs < 0.0) throw ConfigError("tolerances must be positive");
    if (!(c.analyzer.csp.eps_explosive > 0.0) || !(c.analyzer.csp.condition_threshold > 1.0))
        throw ConfigError("eps_explosive must be positive and condition_threshold above 1");
    if (!(c.analyzer.coalescence_gap > 0.0)) throw ConfigError("coalescence_gap must be positive");
    if (c.analyzer.persistence_days < 1) throw ConfigError("persistence_days must be at least 1");
    if (!(c.analyzer.noise_floor >= 0.0)) throw ConfigError("noise_floor must be non-negative");
    validate(c.fit_config());
}

namespace detail {

using ConfigSetter = std::function<void(RunConfig&, std::string_view)>;

inline std::map<std::string, ConfigSetter> config_keys() {
    std::map<std::string, ConfigSetter> k;
    auto number = [](double RunConfig::*field) -> ConfigSetter {
        return [field](RunConfig& c, std::string_view v) {
            const auto d = parse_double(v);
            if (!d) throw ConfigError("expected a number");
            c.*field = *d;
        };
    };
    auto param = [](double ModelParams::*field) -> ConfigSetter {
        return [field](RunConfig& c, std::string_view v) {
            const auto d = parse_double(v);
            if (!d) throw ConfigError("expected a number");
            c.params.*field = *d;
        };
    };
    auto real = [](auto getter) -> ConfigSetter {
        return [getter](RunConfig& c, std::string_view v) {
            const auto d = parse_double(v);
            if (!d) throw ConfigError("expected a number");
            getter(c) = *d;
        };
    };
    auto count = [](auto getter) -> ConfigSetter {
        return [getter](RunConfig& c, std::string_view v) {
            const auto n = parse_unsigned(v);
            if (!n) throw ConfigError("expected a non-negative integer");
            getter(c) = static_cast<std::remove_reference_t<decltype(getter(c))>>(*n);
        };
    };
    auto window = [](std::optional<Window> RunConfig::*field) -> ConfigSetter {
        return [field](RunConfig& c, std::string_view v) {
            const auto w = parse_window(v);
            if (!w) throw ConfigError("expected YYYY-MM-DD:YYYY-MM-DD");
            c.*field = *w;
        };
    };

    k["tp"] = param(&ModelParams::tp);
    k["beta_insp"] = param(&ModelParams::beta_insp);
    k["beta_issp"] = param(&ModelParams::beta_issp);
    k["aincp"] = param(&ModelParams::aincp);
    k["aip"] = param(&ModelParams::aip);
    k["mu_insp"] = param(&ModelParams::mu_insp);
    k["mu_issp"] = param(&ModelParams::mu_issp);
    k["mu_tp"] = param(&ModelParams::mu_tp);
    k["ss"] = param(&ModelParams::ss);
    k["initial_ep"] = number(&RunConfig::initial_ep);
    k["initial_insp"] = number(&RunConfig::initial_insp);
    k["initial_issp"] = number(&RunConfig::initial_issp);
    k["initial_rp"] = number(&RunConfig::initial_rp);
    k["initial_idp"] = number(&RunConfig::initial_idp);
    k["horizon_days"] = number(&RunConfig::horizon_days);
    k["wave_start_date"] = [](RunConfig& c, std::string_view v) {
        const auto d = parse_date(trim(v));
        if (!d) throw ConfigError("expected YYYY-MM-DD");
        c.wave_start_date = *d;
    };
    k["window_a"] = window(&RunConfig::window_a);
    k["window_b"] = window(&RunConfig::window_b);
    k["fit_free"] = [](RunConfig& c, std::string_view v) {
        c.fit.free.clear();
        if (trim(v).empty() || trim(v) == "none") return;
        for (auto name : split(v, ',')) {
            const auto p = fit_parameter_from_string(trim(name));
            if (!p) throw ConfigError("unknown fit parameter '" + std::string(trim(name)) + "'");
            c.fit.free.push_back(*p);
        }
    };
    for (FitParameter p : kAllFitParameters) {
        k[std::string("fit_bounds_") + to_string(p)] = [p](RunConfig& c, std::string_view v) {
            const auto parts = split(v, ':');
            const auto lo = parts.size() == 2 ? parse_double(parts[0]) : std::nullopt;
            const auto hi = parts.size() == 2 ? parse_double(parts[1]) : std::nullopt;
            if (!lo || !hi) throw ConfigError("expected lower:upper");
            std::erase_if(c.fit.bounds, [p](const auto& b) { return b.first == p; });
            c.fit.bounds.push_back({p, Bounds{*lo, *hi}});
        };
    }
    k["fit_max_evaluations"] = count([](RunConfig& c) -> std::size_t& { return c.fit.max_evaluations; });
    k["fit_restarts"] = count([](RunConfig& c) -> std::size_t& { return c.fit.restarts; });
    k["fit_restart_spread"] = real([](RunConfig& c) -> double& { return c.fit.restart_spread; });
    k["fit_initial_step"] = real([](RunConfig& c) -> double& { return c.fit.initial_step; });
    k["fit_size_tolerance"] = real([](RunConfig& c) -> double& { return c.fit.size_tolerance; });
    k["weight_active"] = real([](RunConfig& c) -> double& { return c.fit.weights.active; });
    k["weight_deaths"] = real([](RunConfig& c) -> double& { return c.fit.weights.deaths; });
    k["weight_exposed"] = real([](RunConfig& c) -> double& { return c.fit.weights.exposed; });
    k["rel_tol"] = real([](RunConfig& c) -> double& { return c.tolerances.rel; });
    k["abs_tol"] = real([](RunConfig& c) -> double& { return c.tolerances.abs; });
    k["eps_explosive"] = real([](RunConfig& c) -> double& { return c.analyzer.csp.eps_explosive; });
    k["condition_threshold"] = real([](RunConfig& c) -> double& { return c.analyzer.csp.condition_threshold; });
    k["coalescence_gap"] = real([](RunConfig& c) -> double& { return c.analyzer.coalescence_gap; });
    k["persistence_days"] = count([](RunConfig& c) -> std::size_t& { return c.analyzer.persistence_days; });
    k["noise_floor"] = real([](RunConfig& c) -> double& { return c.analyzer.noise_floor; });
    k["ranking_days"] = [](RunConfig& c, std::string_view v) {
        std::vector<std::size_t> days;
        for (auto d : split(v, ',')) {
            const auto n = parse_unsigned(d);
            if (!n) throw ConfigError("expected comma-separated day indices");
            days.push_back(static_cast<std::size_t>(*n));
        }
        c.ranking_days = days;
    };
    k["output_dir"] = [](RunConfig& c, std::string_view v) { c.output_dir = std::string(trim(v)); };
    k["seed"] = count([](RunConfig& c) -> std::uint64_t& { return c.seed; });
    return k;
}

}  // namespace detail

/// Documented configuration keys, sorted.
inline std::vector<std::string> config_key_names() {
    std::vector<std::string> names;
    for (const auto& [name, setter] : detail::config_keys()) names.push_back(name);
    return names;
}

/// Parses `key = value` lines; `#` starts a comment. Unknown and repeated keys are errors.
inline RunConfig parse_config(std::istream& in, const std::string& source = "<config>") {
    const auto keys = detail::config_keys();
    RunConfig c;
    std::map<std::string, std::size_t> seen;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string where = source + ":" + std::to_string(number) + ": ";
        std::string_view text = line;
        if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
        if (!text.empty() && text.back() == '\r') text.remove_suffix(1);
        text = detail::trim(text);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
        const std::string key(detail::trim(text.substr(0, eq)));
        const std::string_view value = detail::trim(text.substr(eq + 1));
        const auto it = keys.find(key);
        if (it == keys.end()) throw ConfigError(where + "unknown key '" + key + "'");
        if (const auto prev = seen.find(key); prev != seen.end())
            throw ConfigError(where + "key '" + key + "' already set on line " + std::to_string(prev->second));
        seen[key] = number;
        try {
            it->second(c, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + key + ": " + e.what());
        }
    }
    validate(c);
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config " + path.string());
    return parse_config(in, path.string());
}

// ---------------------------------------------------------------------------
// JSON report

using Json = nlohmann::json;

namespace report {

/// Rounded to six significant digits; non-finite values become null.
inline Json number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return std::strtod(detail::sig6(v).c_str(), nullptr);
}

template <class T>
Json optional(const std::optional<T>& v) {
    if (!v) return nullptr;
    if constexpr (std::is_floating_point_v<T>) return number(*v);
    else return *v;
}

inline Json date_after(std::optional<Date> t0, const std::optional<std::size_t>& day) {
    if (!t0 || !day) return nullptr;
    return format_date(add_days(*t0, static_cast<long>(*day)));
}

inline Json to_json(const ModelParams& p) {
    return Json{{"beta_insp", number(p.beta_insp)}, {"beta_issp", number(p.beta_issp)}, {"aincp", number(p.aincp)},
                {"aip", number(p.aip)},             {"mu_insp", number(p.mu_insp)},     {"mu_issp", number(p.mu_issp)},
                {"mu_tp", number(p.mu_tp)},         {"ss", number(p.ss)},               {"tp", number(p.tp)}};
}

inline Json to_json(const StateVector& s) {
    return Json{{"sp", number(s.sp)}, {"ep", number(s.ep)}, {"insp", number(s.insp)},
                {"issp", number(s.issp)}, {"rp", number(s.rp)}, {"idp", number(s.idp)}};
}

inline Json to_json(const PathRanking& r, std::optional<Date> t0) {
    Json entries = Json::array();
    for (const auto& e : r.entries)
        entries.push_back(Json{{"transition", transition_name(e.transition)}, {"percent", number(e.percent)}});
    return Json{{"day", r.day}, {"date", date_after(t0, r.day)}, {"mode", r.mode},
                {"tau_days", number(r.tau_days)}, {"entries", entries}};
}

inline Json to_json(const OutbreakEvents& ev, std::optional<Date> t0) {
    Json rankings = Json::array();
    for (const auto& r : ev.path_rankings) rankings.push_back(to_json(r, t0));
    return Json{{"coalescence_day", optional(ev.coalescence_day)},
                {"coalescence_date", date_after(t0, ev.coalescence_day)},
                {"disappearance_day", optional(ev.disappearance_day)},
                {"disappearance_date", date_after(t0, ev.disappearance_day)},
                {"inflection_day_numeric", optional(ev.inflection_day_numeric)},
                {"inflection_date_numeric", date_after(t0, ev.inflection_day_numeric)},
                {"last_explosive_day", optional(ev.last_explosive_day)},
                {"tau_explosive_start", optional(ev.tau_explosive_start)},
                {"tau_explosive_end", optional(ev.tau_explosive_end)},
                {"path_rankings", rankings}};
}

inline Json to_json(const AppendixOracles& o) {
    return Json{{"sp_inflection_vs_infection_peak",
                 {{"sp_inflection_day", optional(o.sp_vs_infection_peak.sp_inflection_day)},
                  {"max_r1_plus_r2_day", optional(o.sp_vs_infection_peak.max_r1_plus_r2_day)},
                  {"gap_days", optional(o.sp_vs_infection_peak.gap)}}},
                {"ep_inflection_before_sp",
                 {{"ep_inflection_day", optional(o.ep_before_sp.ep_inflection_day)},
                  {"sp_inflection_day", optional(o.ep_before_sp.sp_inflection_day)},
                  {"ordering_holds", optional(o.ep_before_sp.ordering_holds)},
                  {"gap_days", optional(o.ep_before_sp.gap)}}},
                {"active_inflection_vs_max_ep",
                 {{"active_inflection_day", optional(o.active_vs_ep_peak.active_inflection_day)},
                  {"max_ep_day", optional(o.active_vs_ep_peak.max_ep_day)},
                  {"gap_days", optional(o.active_vs_ep_peak.gap)}}}};
}

inline Json to_json(const RestartReport& r) {
    Json start = Json::array();
    for (double v : r.start) start.push_back(number(v));
    return Json{{"index", r.index},         {"start", start},         {"best_loss", number(r.best_loss)},
                {"evaluations", r.evaluations}, {"converged", r.converged}, {"status", r.status}};
}

inline Json to_json(const FitResult& f) {
    Json free = Json::array();
    for (FitParameter p : f.free) free.push_back(to_string(p));
    Json restarts = Json::array();
    for (const auto& r : f.restarts) restarts.push_back(to_json(r));
    return Json{{"start_date", format_date(f.start)},
                {"params", to_json(f.params)},
                {"initial_state", to_json(f.initial_state)},
                {"initial_ep", number(f.initial_ep)},
                {"free", free},
                {"loss", number(f.loss)},
                {"residuals", {{"active", number(f.residual_active)}, {"deaths", number(f.residual_deaths)},
                               {"exposed", optional(f.residual_exposed)}}},
                {"evaluations", f.evaluations},
                {"converged", f.converged},
                {"restarts", restarts}};
}

inline Json to_json(const WindowOutcome& w) {
    const std::optional<Date> t0 = w.fit ? std::optional<Date>(w.fit->start) : std::nullopt;
    return Json{{"window", w.window.to_string()},
                {"fit", w.fit ? to_json(*w.fit) : Json(nullptr)},
                {"events", w.analysis ? to_json(w.analysis->events, t0) : Json(nullptr)},
                {"oracles", w.analysis ? to_json(w.analysis->oracles) : Json(nullptr)},
                {"failure", optional(w.failure)}};
}

inline Json to_json(const WindowComparison& c) {
    return Json{{"window_a", to_json(c.a)},
                {"window_b", to_json(c.b)},
                {"disappearance_date_a", c.a.disappearance_date() ? Json(format_date(*c.a.disappearance_date())) : Json(nullptr)},
                {"disappearance_date_b", c.b.disappearance_date() ? Json(format_date(*c.b.disappearance_date())) : Json(nullptr)},
                {"disappearance_gap_days", optional(c.disappearance_gap_days)}};
}

}  // namespace report

/// Versioned report skeleton with events and fit diagnostics.
inline Json make_report(const OutbreakEvents& events, const std::vector<FitResult>& fits,
                        std::optional<Date> t0 = std::nullopt) {
    Json fit_list = Json::array();
    for (const auto& f : fits) fit_list.push_back(report::to_json(f));
    return Json{{"schema", 1}, {"events", report::to_json(events, t0)}, {"fits", fit_list}};
}

/// Pretty-printed with sorted keys and a trailing newline; identical inputs give identical bytes.
inline void write_json(const Json& j, const std::filesystem::path& path) {
    auto out = detail::open_output(path);
    out << j.dump(2) << '\n';
    if (!out) throw ConfigError("cannot write " + path.string());
}

inline void emit_report(const OutbreakEvents& events, const std::vector<FitResult>& fits,
                        const std::filesystem::path& path, std::optional<Date> t0 = std::nullopt) {
    write_json(make_report(events, fits, t0), path);
}

// ---------------------------------------------------------------------------
// Plot data

inline void write_actives_csv(const Trajectory& traj, std::ostream& out) {
    out << "day,insp,issp,active_total\n";
    for (std::size_t d = 0; d < traj.size(); ++d) {
        const StateVector& s = traj.states[d];
        out << d << ',' << detail::sig6(s.insp) << ',' << detail::sig6(s.issp) << ',' << detail::sig6(s.active()) << '\n';
    }
}

/// One row per day and tracked mode; `mode` is the tracked identity, stable across days.
inline void write_timescales_csv(const TimescaleTimeline& tl, std::ostream& out) {
    out << "day,mode,tau_days,class\n";
    for (const auto& rec : tl.days) {
        std::array<std::size_t, kNumCompartments> order{};
        for (std::size_t n = 0; n < kNumCompartments; ++n) order[rec.track[n]] = n;
        for (std::size_t id = 0; id < kNumCompartments; ++id) {
            const std::size_t n = order[id];
            out << rec.day << ',' << id << ',' << detail::sig6(rec.eigen.timescales[n]) << ','
                << to_string(rec.eigen.classification[n]) << '\n';
        }
    }
}

/// Writes `<prefix>timescales.csv` and `<prefix>actives.csv`.
inline void emit_plot_data(const TimescaleTimeline& tl, const Trajectory& traj, const std::string& path_prefix) {
    const std::filesystem::path ts = path_prefix + "timescales.csv";
    const std::filesystem::path ac = path_prefix + "actives.csv";
    auto a = detail::open_output(ts);
    write_timescales_csv(tl, a);
    auto b = detail::open_output(ac);
    write_actives_csv(traj, b);
    if (!a || !b) throw ConfigError("cannot write plot data under " + path_prefix);
}

}  // namespace seinsrd
