#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <future>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sirdcast/data.hpp"
#include "sirdcast/io.hpp"
#include "sirdcast/lstm.hpp"
#include "sirdcast/pso.hpp"
#include "sirdcast/sird.hpp"
#include "sirdcast/weekly_fit.hpp"

namespace sirdcast {

inline constexpr int kForecastWeeks = 4;
inline constexpr std::size_t kForecastDays = 28;

inline const char* const kHybrid = "hybrid";
inline const char* const kSirdPso = "sird_pso";
inline const char* const kLstmOnly = "lstm_only";

struct PipelineConfig {
    /// Swarm hyperparameters for every weekly fit; bounds are always [0, 1]^3.
    pso::SwarmConfig swarm;
    /// Forecaster for the weekly (beta, gamma, delta) series; lookback in weeks.
    lstm::TrainConfig param_lstm;
    /// Standalone baseline on daily infected counts; lookback in days.
    lstm::TrainConfig daily_lstm = [] {
        lstm::TrainConfig c;
        c.lookback = 28;
        return c;
    }();
    double dt = kDefaultDt;
    /// Seeds the swarms (seed + window index) and both networks.
    std::uint64_t seed = 42;
};

struct PipelineHooks {
    WindowProgress on_window;
    lstm::EpochProgress on_epoch;
    /// Epoch progress of the daily LSTM inside run_comparison, which runs on its own thread.
    lstm::EpochProgress on_baseline_epoch;
};

/// Flat key/value description of a configuration, used in reports and manifests.
inline std::vector<std::pair<std::string, std::string>> config_snapshot(const PipelineConfig& c)
{
    auto num = [](double v) { return io::format_double(v); };
    auto units = [](const std::vector<std::size_t>& h) {
        std::string s;
        for (std::size_t k = 0; k < h.size(); ++k) {
            s += (k ? "," : "") + std::to_string(h[k]);
        }
        return s;
    };
    return {
        {"seed", std::to_string(c.seed)},
        {"dt", num(c.dt)},
        {"pso.particles", std::to_string(c.swarm.num_particles)},
        {"pso.iterations", std::to_string(c.swarm.max_iterations)},
        {"pso.w_min", num(c.swarm.w_min)},
        {"pso.w_max", num(c.swarm.w_max)},
        {"pso.c1", num(c.swarm.c1)},
        {"pso.c2", num(c.swarm.c2)},
        {"pso.v_max", "0.2*(hi-lo)"},
        {"fit.objective", "mean over days and S,I,R,D of ((simulated-observed)/N)^2"},
        {"lstm.hidden_units", units(c.param_lstm.hidden_units)},
        {"lstm.learning_rate", num(c.param_lstm.learning_rate)},
        {"lstm.epochs", std::to_string(c.param_lstm.epochs)},
        {"lstm.huber_delta", num(c.param_lstm.huber_delta)},
        {"lstm.lookback_weeks", std::to_string(c.param_lstm.lookback)},
        {"baseline_lstm.hidden_units", units(c.daily_lstm.hidden_units)},
        {"baseline_lstm.learning_rate", num(c.daily_lstm.learning_rate)},
        {"baseline_lstm.epochs", std::to_string(c.daily_lstm.epochs)},
        {"baseline_lstm.huber_delta", num(c.daily_lstm.huber_delta)},
        {"baseline_lstm.lookback_days", std::to_string(c.daily_lstm.lookback)},
    };
}

/// Predicted and actual infected counts over the 28 test days for one model.
struct ForecastReport {
    std::string model_name;
    std::string country;
    Date forecast_start{};
    std::vector<double> predicted;
    std::vector<double> actual;
    double rmse = 0.0;

    /// Training-period infected counts, for charts.
    Date train_start{};
    std::vector<double> train_actual;

    /// Full simulated forecast (first state is the last training day) for SIRD-based models.
    std::optional<CompartmentSeries> trajectory;

    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> config;
    std::optional<WeeklyParamSeries> fitted_params;
    /// Parameters applied to each forecast week.
    std::vector<SirdParams> forecast_params;
};

/// Root mean square error over equal-length, non-empty lists.
inline double rmse(std::span<const double> actual, std::span<const double> predicted)
{
    if (actual.size() != predicted.size() || actual.empty()) {
        throw InvalidInput("rmse needs two non-empty lists of equal length");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < actual.size(); ++k) {
        const double e = actual[k] - predicted[k];
        sum += e * e;
    }
    return std::sqrt(sum / static_cast<double>(actual.size()));
}

namespace detail {

template <class F>
auto in_stage(const char* stage, F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

inline void check_window(const data::DatasetWindow& window)
{
    if (window.test.size() != kForecastDays) {
        throw InvalidInput("test window must hold exactly 28 days");
    }
}

inline ForecastReport base_report(const char* model, const data::DatasetWindow& window, const PipelineConfig& config,
                                  const std::string& country)
{
    check_window(window);
    ForecastReport r;
    r.model_name = model;
    r.country = country;
    r.forecast_start = window.test.start_date;
    r.actual = window.test.infected();
    r.train_start = window.train.start_date;
    r.train_actual = window.train.infected();
    r.seed = config.seed;
    r.config = config_snapshot(config);
    return r;
}

inline WeeklyParamSeries fit_train(const data::DatasetWindow& window, const PipelineConfig& config,
                                   const PipelineHooks& hooks)
{
    pso::SwarmConfig swarm = config.swarm;
    swarm.seed = config.seed;
    return in_stage("weekly_fit", [&] { return fit_all_windows(window.train, swarm, config.dt, hooks.on_window); });
}

inline void finish_sird_report(ForecastReport& r, const data::DatasetWindow& window, std::vector<SirdParams> weekly,
                               const PipelineConfig& config)
{
    std::vector<ScheduleBlock> schedule;
    for (const auto& p : weekly) {
        schedule.push_back({p, static_cast<int>(kWindowDays)});
    }
    auto traj = in_stage("simulate", [&] {
        return simulate(window.train.states.back(), schedule, window.train.population, config.dt,
                        window.train.date_at(window.train.size() - 1));
    });
    r.predicted.clear();
    for (std::size_t k = 1; k <= kForecastDays; ++k) {
        r.predicted.push_back(traj.states[k].i);
    }
    r.trajectory = std::move(traj);
    r.forecast_params = std::move(weekly);
    r.rmse = rmse(r.actual, r.predicted);
}

} // namespace detail

namespace detail {

inline ForecastReport hybrid_from_fit(const data::DatasetWindow& window, WeeklyParamSeries fitted,
                                      const PipelineConfig& config, const std::string& country,
                                      const PipelineHooks& hooks)
{
    auto report = base_report(kHybrid, window, config, country);
    lstm::Matrix history(static_cast<Eigen::Index>(fitted.windows.size()), 3);
    for (std::size_t k = 0; k < fitted.windows.size(); ++k) {
        const auto& p = fitted.windows[k].params;
        history.row(static_cast<Eigen::Index>(k)) << p.beta, p.gamma, p.delta;
    }
    lstm::TrainConfig tc = config.param_lstm;
    tc.seed = config.seed;
    auto trained = in_stage("lstm_train", [&] { return lstm::train(history, tc, hooks.on_epoch); });
    const auto rows = in_stage("lstm_forecast", [&] {
        return lstm::forecast(trained.network, trained.scaler, history, kForecastWeeks, {0.0, 1.0});
    });
    std::vector<SirdParams> weekly;
    for (Eigen::Index k = 0; k < rows.rows(); ++k) {
        weekly.push_back({rows(k, 0), rows(k, 1), rows(k, 2)});
    }
    report.fitted_params = std::move(fitted);
    finish_sird_report(report, window, std::move(weekly), config);
    return report;
}

inline ForecastReport frozen_from_fit(const data::DatasetWindow& window, WeeklyParamSeries fitted,
                                      const PipelineConfig& config, const std::string& country)
{
    auto report = base_report(kSirdPso, window, config, country);
    const SirdParams last = fitted.windows.back().params;
    report.fitted_params = std::move(fitted);
    finish_sird_report(report, window, std::vector<SirdParams>(kForecastWeeks, last), config);
    return report;
}

} // namespace detail

/// Weekly PSO fits, LSTM forecast of the next four weekly parameter triplets, then a 28-day
/// simulation from the last training day with each triplet held for seven days.
inline ForecastReport run_hybrid(const data::DatasetWindow& window, const PipelineConfig& config,
                                 const std::string& country = {}, const PipelineHooks& hooks = {})
{
    detail::check_window(window);
    return detail::hybrid_from_fit(window, detail::fit_train(window, config, hooks), config, country, hooks);
}

/// Weekly PSO fits, then the final week's parameters held for all 28 forecast days.
inline ForecastReport run_baseline_sird_pso(const data::DatasetWindow& window, const PipelineConfig& config,
                                            const std::string& country = {}, const PipelineHooks& hooks = {})
{
    detail::check_window(window);
    return detail::frozen_from_fit(window, detail::fit_train(window, config, hooks), config, country);
}

/// The same stacked LSTM trained directly on the daily infected counts, forecast 28 days recursively.
inline ForecastReport run_baseline_lstm(const data::DatasetWindow& window, const PipelineConfig& config,
                                        const std::string& country = {}, const PipelineHooks& hooks = {})
{
    auto report = detail::base_report(kLstmOnly, window, config, country);
    const auto& infected = report.train_actual;
    lstm::Matrix history(static_cast<Eigen::Index>(infected.size()), 1);
    for (std::size_t k = 0; k < infected.size(); ++k) {
        history(static_cast<Eigen::Index>(k), 0) = infected[k];
    }
    lstm::TrainConfig tc = config.daily_lstm;
    tc.seed = config.seed;
    auto trained = detail::in_stage("baseline_lstm_train", [&] { return lstm::train(history, tc, hooks.on_epoch); });
    const auto rows = detail::in_stage("baseline_lstm_forecast", [&] {
        return lstm::forecast(trained.network, trained.scaler, history, static_cast<int>(kForecastDays),
                              {0.0, std::numeric_limits<double>::infinity()});
    });
    report.predicted.assign(rows.data(), rows.data() + rows.size());
    report.rmse = rmse(report.actual, report.predicted);
    return report;
}

/// All three models on one window, in the order hybrid, sird_pso, lstm_only. The weekly fit is
/// shared by the two SIRD-based models and the daily LSTM trains on a second thread; results are
/// identical to calling the three runners separately.
inline std::vector<ForecastReport> run_comparison(const data::DatasetWindow& window, const PipelineConfig& config,
                                                  const std::string& country = {}, const PipelineHooks& hooks = {})
{
    detail::check_window(window);
    PipelineHooks baseline_hooks;
    baseline_hooks.on_epoch = hooks.on_baseline_epoch;
    auto baseline = std::async(std::launch::async,
                               [&] { return run_baseline_lstm(window, config, country, baseline_hooks); });
    std::vector<ForecastReport> out;
    try {
        auto fitted = detail::fit_train(window, config, hooks);
        out.push_back(detail::hybrid_from_fit(window, fitted, config, country, hooks));
        out.push_back(detail::frozen_from_fit(window, std::move(fitted), config, country));
    } catch (...) {
        baseline.wait();
        throw;
    }
    out.push_back(baseline.get());
    return out;
}

/// Lowercase with every non-alphanumeric character replaced by '_'.
inline std::string slug(const std::string& name)
{
    std::string out;
    for (unsigned char ch : name) {
        out.push_back(std::isalnum(ch) ? static_cast<char>(std::tolower(ch)) : '_');
    }
    return out.empty() ? std::string("series") : out;
}

namespace detail {

inline std::string forecast_csv(const ForecastReport& r)
{
    std::string csv = "date,actual_infected,predicted_infected,predicted_susceptible,predicted_recovered,predicted_dead\n";
    for (std::size_t k = 0; k < r.predicted.size(); ++k) {
        csv += format_date(add_days(r.forecast_start, static_cast<long>(k))) + ',' + io::format_double(r.actual[k]) +
               ',' + io::format_double(r.predicted[k]);
        if (r.trajectory) {
            const auto& st = r.trajectory->states[k + 1];
            csv += ',' + io::format_double(st.s) + ',' + io::format_double(st.r) + ',' + io::format_double(st.d);
        } else {
            csv += ",,,";
        }
        csv += '\n';
    }
    return csv;
}

inline std::string svg_escape(const std::string& s)
{
    std::string out;
    for (char ch : s) {
        switch (ch) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out.push_back(ch);
        }
    }
    return out;
}

inline std::string fixed(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

} // namespace detail

/// Line chart of actual infected counts (training and test) overlaid with every model's forecast,
/// with a vertical divider at the start of the test period. One polyline per series.
inline std::string forecast_svg(std::span<const ForecastReport* const> reports)
{
    const ForecastReport& ref = *reports.front();
    const std::size_t train_days = ref.train_actual.size();
    const std::size_t total_days = train_days + ref.actual.size();
    double y_max = 0.0;
    for (double v : ref.train_actual) {
        y_max = std::max(y_max, v);
    }
    for (const auto* r : reports) {
        for (double v : r->actual) {
            y_max = std::max(y_max, v);
        }
        for (double v : r->predicted) {
            y_max = std::max(y_max, v);
        }
    }
    if (!(y_max > 0.0)) {
        y_max = 1.0;
    }
    constexpr double width = 900, height = 480, left = 80, right = 160, top = 40, bottom = 50;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;
    auto x_of = [&](std::size_t day) {
        return left + plot_w * static_cast<double>(day) / static_cast<double>(std::max<std::size_t>(total_days - 1, 1));
    };
    auto y_of = [&](double v) { return top + plot_h * (1.0 - v / y_max); };

    static const char* const palette[] = {"#d62728", "#2ca02c", "#1f77b4", "#9467bd", "#ff7f0e"};
    std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"480\" viewBox=\"0 0 900 480\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"900\" height=\"480\" fill=\"white\"/>\n";
    svg += "<text x=\"" + detail::fixed(left) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">" +
           detail::svg_escape(ref.country.empty() ? std::string("forecast") : ref.country) +
           ": infected cases</text>\n";
    svg += "<line x1=\"" + detail::fixed(left) + "\" y1=\"" + detail::fixed(top + plot_h) + "\" x2=\"" +
           detail::fixed(left + plot_w) + "\" y2=\"" + detail::fixed(top + plot_h) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + detail::fixed(left) + "\" y1=\"" + detail::fixed(top) + "\" x2=\"" + detail::fixed(left) +
           "\" y2=\"" + detail::fixed(top + plot_h) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"4\" y=\"" + detail::fixed(top + 4) + "\" font-family=\"sans-serif\" font-size=\"11\">" +
           detail::fixed(y_max) + "</text>\n";
    svg += "<text x=\"" + detail::fixed(left) + "\" y=\"" + detail::fixed(height - 16) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + format_date(ref.train_start) + "</text>\n";
    const double divider = x_of(train_days);
    svg += "<line x1=\"" + detail::fixed(divider) + "\" y1=\"" + detail::fixed(top) + "\" x2=\"" +
           detail::fixed(divider) + "\" y2=\"" + detail::fixed(top + plot_h) +
           "\" stroke=\"gray\" stroke-dasharray=\"4,4\"/>\n";
    svg += "<text x=\"" + detail::fixed(divider + 4) + "\" y=\"" + detail::fixed(height - 16) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + format_date(ref.forecast_start) + "</text>\n";

    auto polyline = [&](const std::string& name, const std::string& colour, std::size_t first_day,
                        std::span<const double> values, std::size_t legend_row) {
        std::string pts;
        for (std::size_t k = 0; k < values.size(); ++k) {
            pts += (k ? " " : "") + detail::fixed(x_of(first_day + k)) + "," + detail::fixed(y_of(values[k]));
        }
        svg += "<polyline fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        const double ly = top + 16.0 * static_cast<double>(legend_row);
        svg += "<text x=\"" + detail::fixed(left + plot_w + 12) + "\" y=\"" + detail::fixed(ly + 4) +
               "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" + colour + "\">" + detail::svg_escape(name) +
               "</text>\n";
    };
    std::vector<double> actual = ref.train_actual;
    actual.insert(actual.end(), ref.actual.begin(), ref.actual.end());
    polyline("actual", "black", 0, actual, 0);
    for (std::size_t k = 0; k < reports.size(); ++k) {
        polyline(reports[k]->model_name, palette[k % 5], train_days, reports[k]->predicted, k + 1);
    }
    svg += "</svg>\n";
    return svg;
}

/// Writes comparison.csv (model,country,rmse), one forecast_<country>_<model>.csv per report,
/// weekly_params_<country>_<model>.csv for SIRD-based reports and one chart_<country>.svg per country.
/// Returns the paths written, in order.
inline std::vector<std::filesystem::path> emit_report(std::span<const ForecastReport> reports,
                                                      const std::filesystem::path& out_dir)
{
    if (reports.empty()) {
        throw InvalidInput("emit_report: no reports");
    }
    io::ensure_directory(out_dir);
    std::vector<std::filesystem::path> written;
    std::string comparison = "model,country,rmse\n";
    std::vector<std::string> countries;
    for (const auto& r : reports) {
        comparison += r.model_name + ',' + r.country + ',' + io::format_double(r.rmse) + '\n';
        if (std::find(countries.begin(), countries.end(), r.country) == countries.end()) {
            countries.push_back(r.country);
        }
    }
    written.push_back(out_dir / "comparison.csv");
    io::write_text_file(written.back(), comparison);
    for (const auto& r : reports) {
        written.push_back(out_dir / ("forecast_" + slug(r.country) + "_" + r.model_name + ".csv"));
        io::write_text_file(written.back(), detail::forecast_csv(r));
        if (r.fitted_params) {
            written.push_back(out_dir / ("weekly_params_" + slug(r.country) + "_" + r.model_name + ".csv"));
            io::write_text_file(written.back(), weekly_params_csv(*r.fitted_params));
        }
    }
    for (const auto& country : countries) {
        std::vector<const ForecastReport*> group;
        for (const auto& r : reports) {
            if (r.country == country) {
                group.push_back(&r);
            }
        }
        written.push_back(out_dir / ("chart_" + slug(country) + ".svg"));
        io::write_text_file(written.back(), forecast_svg(group));
    }
    return written;
}

/// Lowercase hex SHA-256 of a file's bytes.
inline std::string sha256_file(const std::filesystem::path& path)
{
    const std::string bytes = io::read_text_file(path);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw IoError("sha256 failed for '" + path.string() + "'");
    }
    static const char* const hex = "0123456789abcdef";
    std::string out;
    for (unsigned int k = 0; k < len; ++k) {
        out.push_back(hex[digest[k] >> 4]);
        out.push_back(hex[digest[k] & 0xF]);
    }
    return out;
}

/// Plain-text run manifest: "key = value" lines, then "input <path> sha256 <digest>" lines.
inline std::string run_manifest(const std::vector<std::pair<std::string, std::string>>& entries,
                                const std::vector<std::filesystem::path>& inputs)
{
    std::string text = "# sirdcast run manifest\n";
    for (const auto& [k, v] : entries) {
        text += k + " = " + v + "\n";
    }
    for (const auto& p : inputs) {
        text += "input " + p.string() + " sha256 " + sha256_file(p) + "\n";
    }
    return text;
}

} // namespace sirdcast
