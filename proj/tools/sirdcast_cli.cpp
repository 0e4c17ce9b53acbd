// sirdcast command-line driver: fit, forecast, compare, simulate.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sirdcast/sirdcast.hpp"

namespace fs = std::filesystem;
using namespace sirdcast;

namespace {

constexpr int kExitPipeline = 1;
constexpr int kExitUsage = 2;

struct RunOptions {
    std::string data;
    std::string country;
    std::string start;
    std::string end;
    std::optional<double> population;
    std::string out = "sirdcast-out";
    std::string config_file;

    PipelineConfig pipeline;
    std::size_t epochs = 500;
    double learning_rate = 0.005;
    double huber_delta = 1.0;
    std::size_t lookback_weeks = 4;
    std::size_t lookback_days = 28;

    // simulate only
    double beta = 0.0, gamma = 0.0, delta = 0.0;
    int days = 0;
    double s0 = 0.0, i0 = 0.0, r0 = 0.0, d0 = 0.0;
    std::string sim_start = "2020-01-01";
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::mutex g_log_mutex;

template <class... Args>
void log(const char* fmt, Args... args)
{
    std::lock_guard lock(g_log_mutex);
    std::fprintf(stderr, fmt, args...);
    std::fputc('\n', stderr);
}

bool given_on_command_line(int argc, char** argv, const std::string& flag)
{
    for (int k = 1; k < argc; ++k) {
        const std::string a = argv[k];
        if (a == flag || a.rfind(flag + "=", 0) == 0) {
            return true;
        }
    }
    return false;
}

void add_data_options(CLI::App& app, RunOptions& o)
{
    app.add_option("--data", o.data, "Input CSV with cumulative cases, recoveries and deaths");
    app.add_option("--country", o.country, "Country name as it appears in the location column");
    app.add_option("--start", o.start, "First date to use (YYYY-MM-DD)");
    app.add_option("--end", o.end, "Last date to use (YYYY-MM-DD)");
    app.add_option("--population", o.population, "Population N (defaults for United States, India, United Kingdom)");
}

void add_model_options(CLI::App& app, RunOptions& o)
{
    auto& sw = o.pipeline.swarm;
    app.add_option("--particles", sw.num_particles, "PSO swarm size")->capture_default_str();
    app.add_option("--iterations", sw.max_iterations, "PSO iterations per window")->capture_default_str();
    app.add_option("--w-min", sw.w_min, "Final inertia weight")->capture_default_str();
    app.add_option("--w-max", sw.w_max, "Initial inertia weight")->capture_default_str();
    app.add_option("--c1", sw.c1, "Cognitive coefficient")->capture_default_str();
    app.add_option("--c2", sw.c2, "Social coefficient")->capture_default_str();
    app.add_option("--epochs", o.epochs, "LSTM training epochs")->capture_default_str();
    app.add_option("--learning-rate", o.learning_rate, "Adam learning rate")->capture_default_str();
    app.add_option("--huber-delta", o.huber_delta, "Huber loss threshold (scaled units)")->capture_default_str();
    app.add_option("--lookback", o.lookback_weeks, "Parameter LSTM lookback in weeks")->capture_default_str();
    app.add_option("--daily-lookback", o.lookback_days, "Daily LSTM baseline lookback in days")
        ->capture_default_str();
    app.add_option("--dt", o.pipeline.dt, "Integration step in days")->capture_default_str();
}

void finish_config(RunOptions& o)
{
    for (auto* tc : {&o.pipeline.param_lstm, &o.pipeline.daily_lstm}) {
        tc->epochs = o.epochs;
        tc->learning_rate = o.learning_rate;
        tc->huber_delta = o.huber_delta;
    }
    o.pipeline.param_lstm.lookback = o.lookback_weeks;
    o.pipeline.daily_lstm.lookback = o.lookback_days;
    pso::SwarmConfig check = o.pipeline.swarm;
    check.bounds.assign(3, {0.0, 1.0});
    check.validate();
    o.pipeline.param_lstm.validate();
    o.pipeline.daily_lstm.validate();
}

struct LoadedData {
    CompartmentSeries series;
    fs::path path;
    double population = 0.0;
};

LoadedData load(const RunOptions& o)
{
    if (o.data.empty() || o.country.empty()) {
        throw UsageError("--data and --country are required");
    }
    double n = 0.0;
    if (o.population) {
        n = *o.population;
    } else if (const auto known = data::default_population(o.country)) {
        n = *known;
    } else {
        throw UsageError("no default population for '" + o.country + "'; pass --population");
    }
    data::DateRange range;
    if (!o.start.empty()) {
        range.first = parse_date(o.start);
    }
    if (!o.end.empty()) {
        range.last = parse_date(o.end);
    }
    const auto raw = detail::in_stage("load", [&] { return data::load_csv(o.data, o.country, range, n); });
    auto series = detail::in_stage("preprocess", [&] { return data::derive_compartments(data::smooth(raw)); });
    log("[data] %s: %zu days from %s, N=%.0f", o.country.c_str(), series.size(),
        format_date(series.start_date).c_str(), n);
    return {std::move(series), o.data, n};
}

PipelineHooks progress_hooks(std::size_t epochs)
{
    PipelineHooks h;
    h.on_window = [](std::size_t k, const WeeklyWindow& w) {
        log("[fit] week %zu beta=%.5f gamma=%.5f delta=%.6f mse=%.3e%s", k, w.params.beta, w.params.gamma,
            w.params.delta, w.fit_mse, w.flagged ? " (flagged)" : "");
    };
    auto every = [epochs](const char* tag) {
        return [epochs, tag](std::size_t epoch, double loss) {
            if ((epoch + 1) % 50 == 0 || epoch + 1 == epochs) {
                log("[%s] epoch %zu/%zu loss=%.6e", tag, epoch + 1, epochs, loss);
            }
        };
    };
    h.on_epoch = every("lstm");
    h.on_baseline_epoch = every("baseline_lstm");
    return h;
}

std::vector<std::pair<std::string, std::string>> manifest_entries(const char* command, const RunOptions& o,
                                                                  const LoadedData* d)
{
    std::vector<std::pair<std::string, std::string>> e{{"command", command}};
    if (d) {
        e.emplace_back("country", o.country);
        e.emplace_back("start", o.start.empty() ? format_date(d->series.start_date) : o.start);
        e.emplace_back("end", format_date(d->series.date_at(d->series.size() - 1)));
        e.emplace_back("population", io::format_double(d->population));
    }
    for (auto& kv : config_snapshot(o.pipeline)) {
        e.push_back(std::move(kv));
    }
    return e;
}

void write_manifest(const fs::path& out, const std::vector<std::pair<std::string, std::string>>& entries,
                    const std::vector<fs::path>& inputs)
{
    io::write_text_file(out / "manifest.txt", run_manifest(entries, inputs));
}

int run_fit(const RunOptions& o)
{
    const auto d = load(o);
    pso::SwarmConfig swarm = o.pipeline.swarm;
    swarm.seed = o.pipeline.seed;
    const auto hooks = progress_hooks(o.epochs);
    const auto fitted = detail::in_stage(
        "weekly_fit", [&] { return fit_all_windows(d.series, swarm, o.pipeline.dt, hooks.on_window); });
    io::ensure_directory(o.out);
    io::write_text_file(fs::path(o.out) / "weekly_params.csv", weekly_params_csv(fitted));
    io::write_text_file(fs::path(o.out) / "compartments.csv", data::compartments_csv(d.series));
    write_manifest(o.out, manifest_entries("fit", o, &d), {d.path});
    log("[done] wrote %s", (fs::path(o.out) / "weekly_params.csv").c_str());
    return 0;
}

int run_models(const RunOptions& o, bool all)
{
    const auto d = load(o);
    const auto window = detail::in_stage("split", [&] { return data::train_test_split(d.series); });
    const auto hooks = progress_hooks(o.epochs);
    std::vector<ForecastReport> reports;
    if (all) {
        reports = run_comparison(window, o.pipeline, o.country, hooks);
    } else {
        reports.push_back(run_hybrid(window, o.pipeline, o.country, hooks));
    }
    const auto written = detail::in_stage("report", [&] { return emit_report(reports, o.out); });
    write_manifest(o.out, manifest_entries(all ? "compare" : "forecast", o, &d), {d.path});
    for (const auto& r : reports) {
        log("[result] %s %s rmse=%.1f", r.country.c_str(), r.model_name.c_str(), r.rmse);
    }
    log("[done] wrote %zu files to %s", written.size() + 1, o.out.c_str());
    return 0;
}

int run_simulate(const RunOptions& o)
{
    if (o.days < 0) {
        throw UsageError("--days must be non-negative");
    }
    const CompartmentState initial{o.s0, o.i0, o.r0, o.d0};
    const double n = o.population.value_or(initial.total());
    const auto traj = detail::in_stage("simulate", [&] {
        return simulate(initial, SirdParams{o.beta, o.gamma, o.delta}, o.days, n, o.pipeline.dt,
                        parse_date(o.sim_start));
    });
    io::ensure_directory(o.out);
    io::write_text_file(fs::path(o.out) / "simulation.csv", data::compartments_csv(traj));
    write_manifest(o.out,
                   {{"command", "simulate"},
                    {"beta", io::format_double(o.beta)},
                    {"gamma", io::format_double(o.gamma)},
                    {"delta", io::format_double(o.delta)},
                    {"days", std::to_string(o.days)},
                    {"population", io::format_double(n)},
                    {"dt", io::format_double(o.pipeline.dt)}},
                   {});
    log("[done] wrote %s", (fs::path(o.out) / "simulation.csv").c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"SIRD + PSO + LSTM epidemic forecasting"};
    app.require_subcommand(1);
    app.fallthrough();
    RunOptions o;
    app.set_config("--config", "", "Flat key = value file; keys are long option names without dashes");
    app.add_option("--seed", o.pipeline.seed, "Seed for every swarm and network")->capture_default_str();
    app.add_option("--out", o.out, "Output directory")->envname("SIRDCAST_OUT_DIR")->capture_default_str();
    add_data_options(app, o);
    add_model_options(app, o);
    app.add_option("--beta", o.beta, "simulate: infection rate");
    app.add_option("--gamma", o.gamma, "simulate: recovery rate");
    app.add_option("--delta", o.delta, "simulate: fatality rate");
    app.add_option("--days", o.days, "simulate: number of days");
    app.add_option("--s0", o.s0, "simulate: initial susceptible");
    app.add_option("--i0", o.i0, "simulate: initial infected");
    app.add_option("--r0", o.r0, "simulate: initial recovered");
    app.add_option("--d0", o.d0, "simulate: initial dead");
    app.add_option("--sim-start", o.sim_start, "simulate: date of day 0")->capture_default_str();

    auto* fit = app.add_subcommand("fit", "Fit weekly (beta, gamma, delta) and write weekly_params.csv");
    auto* forecast = app.add_subcommand("forecast", "Hybrid forecast of the last 28 days with report files");
    auto* compare = app.add_subcommand("compare", "Hybrid, SIRD+PSO and LSTM baselines side by side");
    auto* sim = app.add_subcommand("simulate", "Forward SIRD run from explicit parameters");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    // Relative paths in a config file are taken relative to that file.
    const auto* config_opt = app.get_config_ptr();
    if (config_opt && config_opt->count() > 0 && !o.data.empty() && !given_on_command_line(argc, argv, "--data") &&
        fs::path(o.data).is_relative()) {
        o.data = (fs::path(config_opt->as<std::string>()).parent_path() / o.data).lexically_normal().string();
    }

    try {
        finish_config(o);
        if (*fit) {
            return run_fit(o);
        }
        if (*forecast) {
            return run_models(o, false);
        }
        if (*compare) {
            return run_models(o, true);
        }
        if (*sim) {
            return run_simulate(o);
        }
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const InvalidInput& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitPipeline;
    }
    return kExitUsage;
}
