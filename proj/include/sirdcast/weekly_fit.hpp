#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sirdcast/io.hpp"
#include "sirdcast/pso.hpp"
#include "sirdcast/sird.hpp"

namespace sirdcast {

inline constexpr std::size_t kWindowDays = 7;

struct WindowFit {
    SirdParams params;
    double fit_mse = 0.0;
};

struct WeeklyWindow {
    SirdParams params;
    double fit_mse = 0.0;
    std::size_t window_days = kWindowDays;
    /// Set when the fit failed and params were inherited from the previous window.
    bool flagged = false;
    std::string note;
};

struct WeeklyParamSeries {
    Date start_date{};
    std::vector<WeeklyWindow> windows;

    Date window_start(std::size_t k) const { return add_days(start_date, static_cast<long>(k * kWindowDays)); }

    std::vector<SirdParams> params() const
    {
        std::vector<SirdParams> out;
        out.reserve(windows.size());
        for (const auto& w : windows) {
            out.push_back(w.params);
        }
        return out;
    }
};

/// Mean squared error between a simulation started at the window's first day and the remaining
/// observed days. Every residual is divided by the population before squaring, and the mean runs
/// over all four compartments.
inline double window_mse(const CompartmentSeries& observed, const SirdParams& params, double dt = kDefaultDt)
{
    const double n = observed.population;
    const int days = static_cast<int>(observed.size()) - 1;
    const auto sim = simulate(observed.states.front(), params, days, n, dt);
    double sum = 0.0;
    for (std::size_t k = 1; k < observed.size(); ++k) {
        const auto& a = sim.states[k];
        const auto& b = observed.states[k];
        const double es = (a.s - b.s) / n;
        const double ei = (a.i - b.i) / n;
        const double er = (a.r - b.r) / n;
        const double ed = (a.d - b.d) / n;
        sum += es * es + ei * ei + er * er + ed * ed;
    }
    return sum / (4.0 * static_cast<double>(days));
}

/// Fits (beta, gamma, delta) in [0, 1]^3 to one 7-day window with the swarm optimizer.
/// The swarm's own bounds are replaced by the unit cube.
inline WindowFit fit_window(const CompartmentSeries& observed, pso::SwarmConfig swarm, double dt = kDefaultDt)
{
    if (observed.size() != kWindowDays) {
        throw InvalidInput("fit window needs exactly 7 daily states, got " + std::to_string(observed.size()));
    }
    if (!(observed.population > 0.0)) {
        throw InvalidInput("population must be positive");
    }
    bool any_infected = false;
    for (const auto& st : observed.states) {
        any_infected = any_infected || st.i > 0.0;
    }
    if (!any_infected) {
        throw UnidentifiableWindow("window starting " + format_date(observed.start_date) +
                                   " has no infected individuals");
    }
    swarm.bounds.assign(3, pso::Bounds{0.0, 1.0});
    swarm.v_max.clear();
    auto objective = [&](std::span<const double> x) {
        try {
            return window_mse(observed, SirdParams{x[0], x[1], x[2]}, dt);
        } catch (const IntegrationInstability&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    const auto result = pso::optimize(objective, swarm);
    const auto& p = result.best_position;
    return {SirdParams{p[0], p[1], p[2]}, result.best_value};
}

using WindowProgress = std::function<void(std::size_t index, const WeeklyWindow&)>;

/// Splits the series into consecutive 7-day windows from its first day (a trailing partial week is
/// dropped) and fits each with seed = swarm.seed + window index.
inline WeeklyParamSeries fit_all_windows(const CompartmentSeries& series, const pso::SwarmConfig& swarm,
                                         double dt = kDefaultDt, const WindowProgress& progress = {})
{
    if (series.size() < 2 * kWindowDays) {
        throw InvalidInput("weekly fitting needs at least 14 days, got " + std::to_string(series.size()));
    }
    const std::size_t count = series.size() / kWindowDays;
    WeeklyParamSeries out{series.start_date, {}};
    out.windows.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const auto slice = series.slice(k * kWindowDays, kWindowDays);
        pso::SwarmConfig cfg = swarm;
        cfg.seed = swarm.seed + k;
        WeeklyWindow win;
        try {
            const auto fit = fit_window(slice, cfg, dt);
            win.params = fit.params;
            win.fit_mse = fit.fit_mse;
        } catch (const Error& e) {
            win.params = out.windows.empty() ? SirdParams{} : out.windows.back().params;
            win.fit_mse = window_mse(slice, win.params, dt);
            win.flagged = true;
            win.note = e.what();
        }
        if (progress) {
            progress(k, win);
        }
        out.windows.push_back(std::move(win));
    }
    return out;
}

/// CSV with columns week_start_date,beta,gamma,delta,fit_mse,flagged.
inline std::string weekly_params_csv(const WeeklyParamSeries& series)
{
    std::string csv = "week_start_date,beta,gamma,delta,fit_mse,flagged\n";
    for (std::size_t k = 0; k < series.windows.size(); ++k) {
        const auto& w = series.windows[k];
        csv += format_date(series.window_start(k)) + ',' + io::format_double(w.params.beta) + ',' +
               io::format_double(w.params.gamma) + ',' + io::format_double(w.params.delta) + ',' +
               io::format_double(w.fit_mse) + ',' + (w.flagged ? "1" : "0") + '\n';
    }
    return csv;
}

} // namespace sirdcast
