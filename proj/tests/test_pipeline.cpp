#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <regex>
#include <sstream>
#include <vector>

#include "sirdcast/data.hpp"
#include "sirdcast/pipeline.hpp"

using namespace sirdcast;

namespace {

constexpr double kN = 1e6;

/// Daily-varying rates, integrated one day at a time with a fine step.
CompartmentSeries synthetic(std::size_t days, const std::function<SirdParams(int)>& rates)
{
    std::vector<ScheduleBlock> schedule;
    for (int d = 0; d < static_cast<int>(days) - 1; ++d) {
        schedule.push_back({rates(d), 1});
    }
    return simulate({kN - 2000.0, 1500.0, 450.0, 50.0}, schedule, kN, 0.01, parse_date("2021-01-04"));
}

data::DatasetWindow drifting_window()
{
    // Two full cycles of beta in the 20 training weeks; the test block starts on a rising edge.
    return data::train_test_split(synthetic(168, [](int d) {
        const double phase = 2.0 * std::numbers::pi * d / 70.0;
        return SirdParams{0.115 + 0.06 * std::sin(phase), 0.1, 0.004};
    }));
}

data::DatasetWindow constant_window()
{
    return data::train_test_split(synthetic(168, [](int) { return SirdParams{0.13, 0.1, 0.004}; }));
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch_dir(const char* name)
{
    auto dir = std::filesystem::temp_directory_path() / ("sirdcast_test_" + std::string(name));
    std::filesystem::remove_all(dir);
    return dir;
}

} // namespace

TEST(Rmse, Examples)
{
    const std::vector<double> a{1.5, -2.0, 7.25};
    EXPECT_EQ(rmse(a, a), 0.0);
    EXPECT_EQ(rmse(std::vector<double>{0, 0}, std::vector<double>{3, 4}), std::sqrt(12.5));
    std::vector<double> shifted = a;
    for (double& x : shifted) {
        x += 4.0;
    }
    EXPECT_EQ(rmse(a, shifted), 4.0);
}

TEST(Rmse, RejectsMismatchedOrEmpty)
{
    EXPECT_THROW(rmse(std::vector<double>{1}, std::vector<double>{1, 2}), InvalidInput);
    EXPECT_THROW(rmse(std::vector<double>{}, std::vector<double>{}), InvalidInput);
}

TEST(Pipeline, HybridBeatsFrozenBaselineOnDriftingParameters)
{
    const auto window = drifting_window();
    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        PipelineConfig cfg;
        cfg.seed = seed;
        const auto hybrid = run_hybrid(window, cfg);
        const auto frozen = run_baseline_sird_pso(window, cfg);
        wins += hybrid.rmse <= frozen.rmse ? 1 : 0;
    }
    EXPECT_GE(wins, 3);
}

TEST(Pipeline, HybridReportContract)
{
    const auto window = drifting_window();
    PipelineConfig cfg;
    cfg.seed = 3;
    const auto r = run_hybrid(window, cfg, "Synthland");
    EXPECT_EQ(r.model_name, "hybrid");
    EXPECT_EQ(r.country, "Synthland");
    EXPECT_EQ(r.seed, 3u);
    ASSERT_EQ(r.predicted.size(), 28u);
    ASSERT_EQ(r.actual.size(), 28u);
    EXPECT_EQ(r.actual, window.test.infected());
    EXPECT_EQ(r.forecast_start, window.test.start_date);
    for (double p : r.predicted) {
        EXPECT_GE(p, 0.0);
    }
    ASSERT_TRUE(r.trajectory.has_value());
    ASSERT_EQ(r.trajectory->size(), 29u);
    EXPECT_EQ(r.trajectory->states.front(), window.train.states.back());
    for (const auto& st : r.trajectory->states) {
        EXPECT_NEAR(st.total(), kN, 1e-9 * kN);
    }
    ASSERT_EQ(r.forecast_params.size(), 4u);
    ASSERT_TRUE(r.fitted_params.has_value());
    EXPECT_EQ(r.fitted_params->windows.size(), 20u);
    EXPECT_NEAR(r.rmse, rmse(r.actual, r.predicted), 1e-12 * std::max(1.0, r.rmse));
}

TEST(Pipeline, FrozenBaselineCloseToHybridOnConstantParameters)
{
    const auto window = constant_window();
    PipelineConfig cfg;
    cfg.seed = 42;
    const auto hybrid = run_hybrid(window, cfg);
    const auto frozen = run_baseline_sird_pso(window, cfg);
    // Both should track the data almost exactly.
    const auto infected = window.test.infected();
    const double peak = *std::max_element(infected.begin(), infected.end());
    EXPECT_LT(hybrid.rmse, 0.01 * peak);
    EXPECT_LE(frozen.rmse, 2.0 * hybrid.rmse);
}

TEST(Pipeline, FrozenBaselineEchoesFinalWeek)
{
    const auto window = drifting_window();
    PipelineConfig cfg;
    const auto r = run_baseline_sird_pso(window, cfg);
    ASSERT_TRUE(r.fitted_params.has_value());
    const SirdParams last = r.fitted_params->windows.back().params;
    ASSERT_EQ(r.forecast_params.size(), 4u);
    for (const auto& p : r.forecast_params) {
        EXPECT_EQ(p, last);
    }
    EXPECT_EQ(r.predicted.size(), 28u);
    EXPECT_EQ(r.rmse, rmse(r.actual, r.predicted));
}

TEST(Pipeline, LstmBaselineOnConstantInfected)
{
    CompartmentSeries s{kN, parse_date("2021-01-01"), {}};
    for (int k = 0; k < 84; ++k) {
        s.states.push_back({kN - 5000.0 - 10.0 * k, 4000.0, 900.0 + 9.0 * k, 100.0 + k});
    }
    const auto window = data::train_test_split(s);
    PipelineConfig cfg;
    cfg.daily_lstm.epochs = 100;
    const auto r = run_baseline_lstm(window, cfg);
    EXPECT_EQ(r.model_name, "lstm_only");
    ASSERT_EQ(r.predicted.size(), 28u);
    for (double p : r.predicted) {
        EXPECT_NEAR(p, 4000.0, 0.02 * 4000.0);
    }
    EXPECT_FALSE(r.trajectory.has_value());
}

TEST(Pipeline, LstmBaselineNeverNegative)
{
    // A collapsing epidemic pushes a naive extrapolation below zero.
    CompartmentSeries s{kN, parse_date("2021-01-01"), {}};
    for (int k = 0; k < 70; ++k) {
        const double i = std::max(0.0, 5000.0 - 110.0 * k);
        s.states.push_back({kN - 6000.0, i, 6000.0 - i, 0.0});
    }
    const auto window = data::train_test_split(s);
    PipelineConfig cfg;
    cfg.daily_lstm.epochs = 60;
    const auto r = run_baseline_lstm(window, cfg);
    for (double p : r.predicted) {
        EXPECT_GE(p, 0.0);
    }
}

TEST(Pipeline, ErrorsCarryStageLabels)
{
    auto window = constant_window();
    PipelineConfig cfg;
    cfg.param_lstm.lookback = 40; // longer than the 20-week parameter history
    try {
        run_hybrid(window, cfg);
        FAIL() << "expected StageError";
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), "lstm_train");
    }
    window.test.states.pop_back();
    EXPECT_THROW(run_baseline_sird_pso(window, cfg), InvalidInput);
}

TEST(Pipeline, Deterministic)
{
    const auto window = drifting_window();
    PipelineConfig cfg;
    cfg.seed = 9;
    cfg.swarm.max_iterations = 60;
    cfg.param_lstm.epochs = 80;
    const auto a = run_hybrid(window, cfg);
    const auto b = run_hybrid(window, cfg);
    EXPECT_EQ(a.predicted, b.predicted);
    EXPECT_EQ(a.rmse, b.rmse);
}

TEST(Pipeline, ComparisonMatchesSeparateRuns)
{
    const auto window = drifting_window();
    PipelineConfig cfg;
    cfg.seed = 5;
    cfg.swarm.max_iterations = 50;
    cfg.param_lstm.epochs = 60;
    cfg.daily_lstm.epochs = 30;
    const auto all = run_comparison(window, cfg, "Synthland");
    ASSERT_EQ(all.size(), 3u);
    const ForecastReport separate[] = {run_hybrid(window, cfg, "Synthland"),
                                       run_baseline_sird_pso(window, cfg, "Synthland"),
                                       run_baseline_lstm(window, cfg, "Synthland")};
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_EQ(all[k].model_name, separate[k].model_name);
        EXPECT_EQ(all[k].predicted, separate[k].predicted);
        EXPECT_EQ(all[k].rmse, separate[k].rmse);
    }
}

TEST(Report, WritesComparisonForecastsAndChart)
{
    const auto window = drifting_window();
    PipelineConfig cfg;
    cfg.swarm.max_iterations = 40;
    cfg.param_lstm.epochs = 40;
    cfg.daily_lstm.epochs = 20;
    std::vector<ForecastReport> reports{run_hybrid(window, cfg, "Synth Land"),
                                        run_baseline_sird_pso(window, cfg, "Synth Land"),
                                        run_baseline_lstm(window, cfg, "Synth Land")};
    const auto dir = scratch_dir("report");
    const auto written = emit_report(reports, dir);
    EXPECT_FALSE(written.empty());

    std::istringstream csv(slurp(dir / "comparison.csv"));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "model,country,rmse");
    std::vector<std::string> rows;
    while (std::getline(csv, line)) {
        rows.push_back(line);
    }
    ASSERT_EQ(rows.size(), 3u);
    for (std::size_t k = 0; k < 3; ++k) {
        const auto fields = io::split_csv_line(rows[k]);
        ASSERT_EQ(fields.size(), 3u);
        EXPECT_EQ(fields[0], reports[k].model_name);
        EXPECT_EQ(fields[1], "Synth Land");
        EXPECT_EQ(std::strtod(fields[2].c_str(), nullptr), reports[k].rmse);
    }

    for (const char* model : {"hybrid", "sird_pso", "lstm_only"}) {
        const auto path = dir / ("forecast_synth_land_" + std::string(model) + ".csv");
        ASSERT_TRUE(std::filesystem::exists(path)) << path;
        std::istringstream f(slurp(path));
        int n = 0;
        while (std::getline(f, line)) {
            ++n;
        }
        EXPECT_EQ(n, 29);
    }
    EXPECT_TRUE(std::filesystem::exists(dir / "weekly_params_synth_land_hybrid.csv"));

    const std::string svg = slurp(dir / "chart_synth_land.svg");
    EXPECT_EQ(svg.rfind("<svg", 0) == 0 || svg.rfind("<?xml", 0) == 0, true);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    const std::regex polyline("<polyline");
    const auto count = std::distance(std::sregex_iterator(svg.begin(), svg.end(), polyline), std::sregex_iterator());
    EXPECT_EQ(count, 4); // actual plus one per model
    // Every opened element is closed or self-closing.
    const std::regex open_tag("<([a-z]+)[^>]*[^/]>"), close_tag("</([a-z]+)>");
    const auto opens = std::distance(std::sregex_iterator(svg.begin(), svg.end(), open_tag), std::sregex_iterator());
    const auto closes = std::distance(std::sregex_iterator(svg.begin(), svg.end(), close_tag), std::sregex_iterator());
    EXPECT_EQ(opens, closes);
    std::filesystem::remove_all(dir);
}

TEST(Report, UnwritableDirectoryIsAnIoError)
{
    ForecastReport r;
    r.model_name = "hybrid";
    r.predicted.assign(28, 1.0);
    r.actual.assign(28, 1.0);
    const auto dir = scratch_dir("blocked");
    std::filesystem::create_directories(dir.parent_path());
    std::ofstream(dir) << "a file, not a directory";
    EXPECT_THROW(emit_report(std::vector<ForecastReport>{r}, dir / "sub"), IoError);
    std::filesystem::remove_all(dir);
    EXPECT_THROW(emit_report(std::vector<ForecastReport>{}, scratch_dir("empty")), InvalidInput);
}

TEST(Manifest, ChecksumsInputs)
{
    const auto dir = scratch_dir("manifest");
    std::filesystem::create_directories(dir);
    io::write_text_file(dir / "abc.txt", "abc");
    EXPECT_EQ(sha256_file(dir / "abc.txt"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    const auto m = run_manifest({{"seed", "42"}}, {dir / "abc.txt"});
    EXPECT_NE(m.find("seed = 42"), std::string::npos);
    EXPECT_NE(m.find("ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"), std::string::npos);
    std::filesystem::remove_all(dir);
}
