#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "seinsrd/io.hpp"

using namespace seinsrd;
namespace fs = std::filesystem;

namespace {

ObservationSeries parse(const std::string& text) {
    std::istringstream in(text);
    return parse_observations(in, "obs.csv");
}

std::string error_of(const std::string& text) {
    try {
        parse(text);
    } catch (const DataError& e) {
        return e.what();
    }
    return {};
}

RunConfig config(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in, "run.cfg");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

class TempDir : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("seinsrd_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    fs::path dir_;
};

ModelParams outbreak_params() {
    ModelParams p = FitConfig::default_fit_params();
    p.beta_insp = 0.4;
    p.beta_issp = 0.6;
    return p;
}

Trajectory outbreak(double days = 120.0) {
    const auto p = outbreak_params();
    return integrate(p, StateVector{p.tp - 1000.0, 1000.0, 0, 0, 0, 0}, days, Tolerances::defaults(p.tp),
                     *parse_date("2020-07-01"));
}

}  // namespace

TEST(ParseObservations, WellFormedTenRows) {
    std::string text = "date,active_cases,cumulative_deaths\n";
    for (int d = 1; d <= 10; ++d) text += "2020-07-" + std::string(d < 10 ? "0" : "") + std::to_string(d) + "," +
                                          std::to_string(100 * d) + "," + std::to_string(d) + "\n";
    const ObservationSeries s = parse(text);
    ASSERT_EQ(s.size(), 10u);
    EXPECT_EQ(format_date(s.start()), "2020-07-01");
    EXPECT_EQ(s.rows[9].active_cases, 1000.0);
    EXPECT_FALSE(s.has_exposed());
}

TEST(ParseObservations, OptionalExposedColumn) {
    const auto s = parse("date,active_cases,cumulative_deaths,exposed\n2020-01-01,1,0,5\n2020-01-02,2,0,7.5\n");
    ASSERT_TRUE(s.has_exposed());
    EXPECT_EQ(*s.rows[1].exposed, 7.5);
}

TEST(ParseObservations, DateGapNamesBothDates) {
    const std::string e = error_of("date,active_cases,cumulative_deaths\n2020-07-01,1,0\n2020-07-02,2,0\n2020-07-04,3,0\n");
    EXPECT_NE(e.find("2020-07-02"), std::string::npos) << e;
    EXPECT_NE(e.find("2020-07-04"), std::string::npos) << e;
    EXPECT_NE(e.find("obs.csv:4"), std::string::npos) << e;
}

TEST(ParseObservations, DecreasingDeathsReportLine) {
    const std::string e = error_of("date,active_cases,cumulative_deaths\n2020-07-01,1,5\n2020-07-02,2,6\n2020-07-03,2,4\n");
    EXPECT_NE(e.find("obs.csv:4"), std::string::npos) << e;
    EXPECT_NE(e.find("decreases"), std::string::npos) << e;
}

TEST(ParseObservations, MalformedRows) {
    const std::string h = "date,active_cases,cumulative_deaths\n";
    EXPECT_NE(error_of(h + "2020-07-01,1\n").find("obs.csv:2"), std::string::npos);
    EXPECT_NE(error_of(h + "2020-07-01,1,0\n2020-13-01,1,0\n").find("obs.csv:3"), std::string::npos);
    EXPECT_NE(error_of(h + "2020-07-01,abc,0\n").find("active_cases"), std::string::npos);
    EXPECT_NE(error_of(h + "2020-07-01,-3,0\n").find("negative"), std::string::npos);
    EXPECT_NE(error_of(h + "2020-07-01,1,0\r\n").find("CRLF"), std::string::npos);
    EXPECT_NE(error_of("day,active,deaths\n").find("header"), std::string::npos);
    EXPECT_NE(error_of(h).find("no data"), std::string::npos);
    EXPECT_NE(error_of(h + "2020-07-02,1,0\n2020-07-01,1,0\n").find("out of order"), std::string::npos);
    EXPECT_NE(error_of(h + "2020-07-01,nan,0\n").find("active_cases"), std::string::npos);
}

TEST(ParseObservations, MissingFileIsDataError) {
    EXPECT_THROW(parse_observations(fs::path("/nonexistent/obs.csv")), DataError);
}

TEST(ParseObservations, RoundTripIsLossless) {
    const ObservationSeries s = observations_from(outbreak(40.0), true);
    std::ostringstream out;
    write_observations(s, out);
    const ObservationSeries back = parse(out.str());
    EXPECT_EQ(back.rows, s.rows);
    std::ostringstream again;
    write_observations(back, again);
    EXPECT_EQ(again.str(), out.str());
}

TEST(Config, DefaultsAndOverrides) {
    const RunConfig c = config("# comment\ntp = 5e6\nbeta_insp = 0.4  # trailing\nwindow_a = 2020-07-01:2020-07-08\n"
                               "fit_free = beta_insp, ss\nfit_bounds_ss = 0.01:0.5\nseed = 7\nranking_days = 0,10\n");
    EXPECT_EQ(c.params.tp, 5e6);
    EXPECT_EQ(c.params.beta_insp, 0.4);
    EXPECT_EQ(c.params.aip, 14.0);
    ASSERT_TRUE(c.window_a.has_value());
    EXPECT_EQ(c.window_a->to_string(), "2020-07-01:2020-07-08");
    EXPECT_EQ(c.fit.free, (std::vector<FitParameter>{FitParameter::beta_insp, FitParameter::ss}));
    EXPECT_EQ(c.fit_config().bounds_of(FitParameter::ss).upper, 0.5);
    EXPECT_EQ(c.fit_config().seed, 7u);
    EXPECT_EQ(c.ranking_days, (std::vector<std::size_t>{0, 10}));
    EXPECT_EQ(c.initial_state().total(), 5e6);
}

TEST(Config, UnknownKeyIsNamed) {
    try {
        config("tp = 1e6\nbeta_insb = 0.3\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("beta_insb"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("run.cfg:2"), std::string::npos);
    }
}

TEST(Config, RejectsInvalidValues) {
    EXPECT_THROW(config("horizon_days = 0.5\n"), ConfigError);
    EXPECT_THROW(config("ss = 1.5\n"), std::invalid_argument);
    EXPECT_THROW(config("beta_insp = fast\n"), ConfigError);
    EXPECT_THROW(config("tp = 1\ntp = 2\n"), ConfigError);
    EXPECT_THROW(config("window_a = 2020-07-08:2020-07-01\n"), ConfigError);
    EXPECT_THROW(config("fit_free = beta_insp, gamma\n"), ConfigError);
    EXPECT_THROW(config("initial_ep = 2e7\n"), ConfigError);
    EXPECT_THROW(config("persistence_days = 0\n"), ConfigError);
    EXPECT_THROW(config("no equals sign\n"), ConfigError);
}

TEST(Config, EveryDocumentedKeyParses) {
    // Each key accepts a representative value on its own.
    const std::map<std::string, std::string> sample = {
        {"wave_start_date", "2020-07-01"}, {"window_a", "2020-07-01:2020-07-08"}, {"window_b", "2020-07-01:2020-07-18"},
        {"fit_free", "none"},              {"ranking_days", "0"},                 {"output_dir", "out"},
        {"seed", "3"},                     {"fit_max_evaluations", "10"},         {"fit_restarts", "2"},
        {"persistence_days", "2"},         {"tp", "1e7"},                         {"horizon_days", "30"}};
    for (const auto& key : config_key_names()) {
        std::string value = "0.5";
        if (auto it = sample.find(key); it != sample.end()) value = it->second;
        else if (key.rfind("fit_bounds_", 0) == 0) value = "0.1:0.9";
        else if (key.rfind("initial_", 0) == 0) value = "10";
        else if (key == "condition_threshold") value = "1e9";
        EXPECT_NO_THROW(config(key + " = " + value + "\n")) << key;
    }
}

TEST_F(TempDir, ReportIsDeterministicWithSortedKeys) {
    const auto p = outbreak_params();
    const Trajectory t = outbreak();
    const OutbreakAnalysis a = analyze_outbreak(t, p);
    emit_report(a.events, {}, dir_ / "a.json", t.t0);
    emit_report(a.events, {}, dir_ / "b.json", t.t0);
    const std::string text = slurp(dir_ / "a.json");
    EXPECT_EQ(text, slurp(dir_ / "b.json"));
    const Json j = Json::parse(text);
    EXPECT_EQ(j["schema"], 1);
    EXPECT_LT(text.find("\"events\""), text.find("\"fits\""));
    EXPECT_LT(text.find("\"fits\""), text.find("\"schema\""));
}

TEST_F(TempDir, EmptyEventsAreExplicitNulls) {
    emit_report(OutbreakEvents{}, {}, dir_ / "r.json");
    const Json ev = Json::parse(slurp(dir_ / "r.json"))["events"];
    for (const char* key : {"coalescence_day", "coalescence_date", "disappearance_day", "disappearance_date",
                            "inflection_day_numeric", "inflection_date_numeric", "last_explosive_day",
                            "tau_explosive_start", "tau_explosive_end"}) {
        ASSERT_TRUE(ev.contains(key)) << key;
        EXPECT_TRUE(ev[key].is_null()) << key;
    }
    EXPECT_TRUE(ev["path_rankings"].is_array());
    EXPECT_TRUE(ev["path_rankings"].empty());
}

TEST_F(TempDir, PathRankingSchemaRoundTrip) {
    const auto p = outbreak_params();
    const Trajectory t = outbreak();
    const OutbreakAnalysis a = analyze_outbreak(t, p);
    emit_report(a.events, {}, dir_ / "r.json", t.t0);
    const Json rankings = Json::parse(slurp(dir_ / "r.json"))["events"]["path_rankings"];
    ASSERT_EQ(rankings.size(), a.events.path_rankings.size());
    std::set<std::string> allowed;
    for (int k = 1; k <= 10; ++k) allowed.insert("R" + std::to_string(k));
    for (std::size_t i = 0; i < rankings.size(); ++i) {
        const auto& entries = rankings[i]["entries"];
        ASSERT_EQ(entries.size(), a.events.path_rankings[i].entries.size());
        for (std::size_t k = 0; k < entries.size(); ++k) {
            const auto& src = a.events.path_rankings[i].entries[k];
            EXPECT_TRUE(allowed.count(entries[k]["transition"].get<std::string>()));
            EXPECT_EQ(entries[k]["transition"], transition_name(src.transition));
            EXPECT_NEAR(entries[k]["percent"].get<double>(), src.percent, 1e-5 * std::abs(src.percent));
        }
    }
    EXPECT_EQ(rankings[0]["entries"][0]["transition"], "R1");
    EXPECT_GT(rankings[0]["entries"][0]["percent"].get<double>(), 0.0);
}

TEST_F(TempDir, NumbersCarrySixSignificantDigits) {
    EXPECT_EQ(report::number(0.1234567891).dump(), "0.123457");
    EXPECT_EQ(report::number(123456789.0).dump(), "123457000.0");
    EXPECT_TRUE(report::number(std::numeric_limits<double>::infinity()).is_null());
}

TEST_F(TempDir, FitDiagnosticsInReport) {
    const auto p = outbreak_params();
    const Trajectory t = outbreak(20.0);
    FitConfig c;
    c.params = p;
    c.free = {FitParameter::beta_insp};
    c.restarts = 2;
    const FitResult f = fit(observations_from(t), c);
    emit_report(OutbreakEvents{}, {f}, dir_ / "r.json");
    const Json fj = Json::parse(slurp(dir_ / "r.json"))["fits"][0];
    EXPECT_EQ(fj["free"], Json::array({"beta_insp"}));
    EXPECT_EQ(fj["restarts"].size(), 2u);
    EXPECT_EQ(fj["converged"], f.converged);
    EXPECT_TRUE(fj["residuals"]["exposed"].is_null());
    EXPECT_EQ(fj["start_date"], "2020-07-01");
}

TEST_F(TempDir, PlotDataRowsAndClasses) {
    const auto p = outbreak_params();
    const Trajectory t = outbreak(29.0);
    const TimescaleTimeline tl = build_timeline(t, p);
    const std::string prefix = (dir_ / "run_").string();
    emit_plot_data(tl, t, prefix);
    std::istringstream ts(slurp(prefix + "timescales.csv"));
    std::string line;
    std::getline(ts, line);
    EXPECT_EQ(line, "day,mode,tau_days,class");
    std::map<int, int> rows_per_mode;
    while (std::getline(ts, line)) {
        const auto cells = detail::split(line, ',');
        ASSERT_EQ(cells.size(), 4u);
        ++rows_per_mode[std::stoi(std::string(cells[1]))];
        const std::string cls(cells[3]);
        EXPECT_TRUE(cls == "explosive" || cls == "dissipative" || cls == "neutral") << cls;
    }
    ASSERT_EQ(rows_per_mode.size(), 6u);
    for (const auto& [mode, n] : rows_per_mode) EXPECT_EQ(n, 30) << mode;

    std::istringstream ac(slurp(prefix + "actives.csv"));
    std::getline(ac, line);
    EXPECT_EQ(line, "day,insp,issp,active_total");
    int n = 0;
    while (std::getline(ac, line)) ++n;
    EXPECT_EQ(n, 30);

    const std::string first = slurp(prefix + "timescales.csv");
    emit_plot_data(tl, t, prefix);
    EXPECT_EQ(slurp(prefix + "timescales.csv"), first);
}

TEST_F(TempDir, UnwritablePath) {
    EXPECT_THROW(emit_report(OutbreakEvents{}, {}, dir_ / "missing" / "r.json"), ConfigError);
    const Trajectory t = outbreak(10.0);
    EXPECT_THROW(emit_plot_data(build_timeline(t, outbreak_params()), t, (dir_ / "missing" / "x_").string()),
                 ConfigError);
}
