// seinsrd: simulate, fit, analyze and two-window wave workflows.
//
// Exit codes: 0 success, 1 usage or configuration, 2 data, 3 numerical failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "seinsrd/io.hpp"

namespace fs = std::filesystem;
using namespace seinsrd;

namespace {

struct Options {
    std::string config_path;
    std::string obs_path;
    std::vector<std::string> windows;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::optional<double> horizon;
    std::string fit_path;
};

RunConfig load(const Options& o) {
    RunConfig c;
    if (!o.config_path.empty()) c = load_config(o.config_path);
    if (o.seed) c.seed = *o.seed;
    if (!o.out_dir.empty()) c.output_dir = o.out_dir;
    if (o.horizon) {
        if (!(*o.horizon >= 1.0)) throw ConfigError("--horizon must be at least 1 day");
        c.horizon_days = *o.horizon;
    }
    validate(c);
    return c;
}

fs::path output_dir(const RunConfig& c) {
    const fs::path dir = c.output_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

Window window_arg(const std::string& text) {
    const auto w = parse_window(text);
    if (!w) throw ConfigError("malformed window '" + text + "' (expected YYYY-MM-DD:YYYY-MM-DD)");
    return *w;
}

Date origin(const RunConfig& c) { return c.wave_start_date.value_or(*parse_date("1970-01-01")); }

int cmd_simulate(const Options& o) {
    const RunConfig c = load(o);
    const Trajectory t = integrate(c.params, c.initial_state(), c.horizon_days, c.integration_tolerances(), origin(c));
    const fs::path dir = output_dir(c);
    auto out = std::ofstream(dir / "actives.csv", std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + (dir / "actives.csv").string());
    write_actives_csv(t, out);
    write_observations(observations_from(t), dir / "observations.csv");
    return 0;
}

int cmd_fit(const Options& o) {
    const RunConfig c = load(o);
    if (o.obs_path.empty()) throw ConfigError("fit requires --obs");
    if (o.windows.size() > 1) throw ConfigError("fit takes at most one --window");
    const ObservationSeries obs = parse_observations(fs::path(o.obs_path));
    std::optional<Window> w = c.window_a;
    if (!o.windows.empty()) w = window_arg(o.windows[0]);
    const FitResult f = w ? fit(obs, *w, c.fit_config()) : fit(obs, c.fit_config());
    Json j{{"schema", 1}, {"window", w ? Json(w->to_string()) : Json(nullptr)}, {"fit", report::to_json(f)}};
    write_json(j, output_dir(c) / "fit.json");
    return 0;
}

/// Model values and start state from a fit.json written by `fit`.
struct FittedStart {
    ModelParams params;
    StateVector state;
    Date start;
};

FittedStart read_fit(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    try {
        const Json j = Json::parse(in);
        const Json& f = j.at("fit");
        FittedStart s;
        const Json& p = f.at("params");
        s.params = ModelParams{p.at("beta_insp"), p.at("beta_issp"), p.at("aincp"), p.at("aip"), p.at("mu_insp"),
                               p.at("mu_issp"),   p.at("mu_tp"),     p.at("ss"),    p.at("tp")};
        const Json& y = f.at("initial_state");
        s.state = StateVector{y.at("sp"), y.at("ep"), y.at("insp"), y.at("issp"), y.at("rp"), y.at("idp")};
        const auto d = parse_date(f.at("start_date").get<std::string>());
        if (!d) throw DataError(path + ": malformed start_date");
        s.start = *d;
        // Six-digit rounding can push the total a hair above tp.
        const double excess = s.state.total() - s.params.tp;
        if (excess > 0.0) s.state.sp = std::max(0.0, s.state.sp - excess);
        return s;
    } catch (const Json::exception& e) {
        throw DataError(path + ": not a fit result (" + e.what() + ")");
    }
}

int cmd_analyze(const Options& o) {
    const RunConfig c = load(o);
    ModelParams params = c.params;
    StateVector init = c.initial_state();
    Date t0 = origin(c);
    if (!o.fit_path.empty()) {
        const FittedStart f = read_fit(o.fit_path);
        params = f.params;
        init = f.state;
        t0 = f.start;
    }
    const Trajectory t = integrate(params, init, c.horizon_days, c.integration_tolerances(), t0);
    const OutbreakAnalysis a = analyze_outbreak(t, params, c.analyzer, c.ranking_days);
    Json j = make_report(a.events, {}, t0);
    j["oracles"] = report::to_json(a.oracles);
    j["params"] = report::to_json(params);
    j["initial_state"] = report::to_json(init);
    j["start_date"] = format_date(t0);
    j["horizon_days"] = report::number(c.horizon_days);
    const fs::path dir = output_dir(c);
    write_json(j, dir / "report.json");
    emit_plot_data(a.timeline, t, (dir / "").string());
    return 0;
}

int cmd_wave(const Options& o) {
    const RunConfig c = load(o);
    if (o.obs_path.empty()) throw ConfigError("wave requires --obs");
    std::optional<Window> a = c.window_a;
    std::optional<Window> b = c.window_b;
    if (o.windows.size() == 2) {
        a = window_arg(o.windows[0]);
        b = window_arg(o.windows[1]);
    } else if (!o.windows.empty()) {
        throw ConfigError("wave takes exactly two --window flags");
    }
    if (!a || !b) throw ConfigError("wave needs two windows (--window twice, or window_a and window_b in the config)");
    const ObservationSeries obs = parse_observations(fs::path(o.obs_path));
    const WindowComparison cmp = fit_windows(obs, *a, *b, c.fit_config(), c.analyzer, c.horizon_days);
    Json j = report::to_json(cmp);
    j["schema"] = 1;
    j["ok"] = cmp.ok();
    write_json(j, output_dir(c) / "wave.json");
    if (!cmp.ok()) {
        std::cerr << "seinsrd: error: fit failed for window "
                  << (cmp.a.failure ? cmp.a.window.to_string() : cmp.b.window.to_string()) << "\n";
        return 3;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SEInsRD outbreak model with timescale analysis"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "flat key = value configuration file")->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "seed for fit restarts");
        sub->add_option("--out", o.out_dir, "output directory");
    };
    auto* simulate = app.add_subcommand("simulate", "integrate the model and write actives.csv and observations.csv");
    common(simulate);
    simulate->add_option("--horizon", o.horizon, "days to integrate (at least 1)");

    auto* fit_cmd = app.add_subcommand("fit", "fit model parameters to an observation window, writes fit.json");
    common(fit_cmd);
    fit_cmd->add_option("--obs", o.obs_path, "observation CSV")->required();
    fit_cmd->add_option("--window", o.windows, "fit window start:end");

    auto* analyze = app.add_subcommand("analyze", "timescale analysis, writes report.json and plot CSVs");
    common(analyze);
    analyze->add_option("--fit", o.fit_path, "fit.json to take parameters and start state from")->check(CLI::ExistingFile);
    analyze->add_option("--horizon", o.horizon, "days to analyze (at least 1)");

    auto* wave = app.add_subcommand("wave", "fit two windows and compare their events, writes wave.json");
    common(wave);
    wave->add_option("--obs", o.obs_path, "observation CSV")->required();
    wave->add_option("--window", o.windows, "window start:end (give twice)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*simulate) return cmd_simulate(o);
        if (*fit_cmd) return cmd_fit(o);
        if (*analyze) return cmd_analyze(o);
        if (*wave) return cmd_wave(o);
    } catch (const ConfigError& e) {
        std::cerr << "seinsrd: error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "seinsrd: error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "seinsrd: error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "seinsrd: error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "seinsrd: error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
