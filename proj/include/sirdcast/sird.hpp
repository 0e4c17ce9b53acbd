#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "sirdcast/date.hpp"
#include "sirdcast/errors.hpp"

namespace sirdcast {

/// Compartment counts on one day. Values are continuous person-counts.
struct CompartmentState {
    double s = 0.0;
    double i = 0.0;
    double r = 0.0;
    double d = 0.0;

    double total() const noexcept { return s + i + r + d; }
    bool operator==(const CompartmentState&) const = default;
};

/// Time derivatives of each compartment, persons per day.
struct CompartmentDelta {
    double ds = 0.0;
    double di = 0.0;
    double dr = 0.0;
    double dd = 0.0;
};

/// Infection, recovery and fatality rates, per day.
struct SirdParams {
    double beta = 0.0;
    double gamma = 0.0;
    double delta = 0.0;

    bool operator==(const SirdParams&) const = default;
};

/// A run of consecutive daily states over a fixed population.
struct CompartmentSeries {
    double population = 0.0;
    Date start_date{};
    std::vector<CompartmentState> states;

    std::size_t size() const noexcept { return states.size(); }
    Date date_at(std::size_t day) const { return add_days(start_date, static_cast<long>(day)); }

    std::vector<double> infected() const
    {
        std::vector<double> out;
        out.reserve(states.size());
        for (const auto& st : states) {
            out.push_back(st.i);
        }
        return out;
    }

    /// Days [first, first + count) as a new series.
    CompartmentSeries slice(std::size_t first, std::size_t count) const
    {
        if (first + count > states.size()) {
            throw InvalidInput("series slice out of range");
        }
        CompartmentSeries out{population, date_at(first), {}};
        out.states.assign(states.begin() + static_cast<std::ptrdiff_t>(first),
                          states.begin() + static_cast<std::ptrdiff_t>(first + count));
        return out;
    }
};

/// One block of a piecewise-constant parameter schedule.
struct ScheduleBlock {
    SirdParams params;
    int days = 0;
};

inline constexpr double kDefaultDt = 0.1;
inline constexpr double kCompartmentTolerance = 1e-9;

inline CompartmentDelta derivatives(const CompartmentState& state, const SirdParams& params, double population)
{
    if (!(population > 0.0)) {
        throw InvalidInput("population must be positive");
    }
    const double infections = params.beta * state.s * state.i / population;
    const double recoveries = params.gamma * state.i;
    const double deaths = params.delta * state.i;
    return {-infections, infections - recoveries - deaths, recoveries, deaths};
}

namespace detail {

inline CompartmentState axpy(const CompartmentState& x, double a, const CompartmentDelta& k)
{
    return {x.s + a * k.ds, x.i + a * k.di, x.r + a * k.dr, x.d + a * k.dd};
}

// Clamps values in [-tol*N, 0) to zero and removes the added mass from the largest compartment.
inline CompartmentState clamp_undershoot(CompartmentState st, double population)
{
    std::array<double*, 4> comps{&st.s, &st.i, &st.r, &st.d};
    const double floor = -kCompartmentTolerance * population;
    double deficit = 0.0;
    for (double* c : comps) {
        if (*c < floor) {
            throw IntegrationInstability("compartment fell to " + std::to_string(*c) +
                                         ", below the tolerance; reduce dt");
        }
        if (*c < 0.0) {
            deficit -= *c;
            *c = 0.0;
        }
    }
    if (deficit > 0.0) {
        double* largest = *std::max_element(comps.begin(), comps.end(), [](double* a, double* b) { return *a < *b; });
        *largest -= deficit;
    }
    return st;
}

} // namespace detail

/// Advances one classical RK4 step of size dt (days).
inline CompartmentState step(const CompartmentState& state, const SirdParams& params, double population, double dt)
{
    if (!(dt > 0.0)) {
        throw InvalidInput("dt must be positive");
    }
    const auto k1 = derivatives(state, params, population);
    const auto k2 = derivatives(detail::axpy(state, 0.5 * dt, k1), params, population);
    const auto k3 = derivatives(detail::axpy(state, 0.5 * dt, k2), params, population);
    const auto k4 = derivatives(detail::axpy(state, dt, k3), params, population);
    const double h6 = dt / 6.0;
    CompartmentState next{
        state.s + h6 * (k1.ds + 2.0 * k2.ds + 2.0 * k3.ds + k4.ds),
        state.i + h6 * (k1.di + 2.0 * k2.di + 2.0 * k3.di + k4.di),
        state.r + h6 * (k1.dr + 2.0 * k2.dr + 2.0 * k3.dr + k4.dr),
        state.d + h6 * (k1.dd + 2.0 * k2.dd + 2.0 * k3.dd + k4.dd),
    };
    return detail::clamp_undershoot(next, population);
}

/// Number of internal steps per day; dt must divide one day evenly.
inline int steps_per_day(double dt)
{
    if (!(dt > 0.0) || dt > 1.0) {
        throw InvalidInput("dt must lie in (0, 1]");
    }
    const double n = std::round(1.0 / dt);
    if (std::abs(n * dt - 1.0) > 1e-9) {
        throw InvalidInput("dt must divide one day evenly");
    }
    return static_cast<int>(n);
}

/// Runs the schedule from `initial`, emitting the initial state followed by one state per whole day.
inline CompartmentSeries simulate(const CompartmentState& initial, std::span<const ScheduleBlock> schedule,
                                  double population, double dt = kDefaultDt, Date start_date = {})
{
    if (schedule.empty()) {
        throw InvalidInput("simulation schedule is empty");
    }
    const int substeps = steps_per_day(dt);
    CompartmentSeries out{population, start_date, {initial}};
    CompartmentState state = initial;
    int day = 0;
    for (const auto& block : schedule) {
        if (block.days <= 0) {
            throw InvalidInput("schedule block duration must be a positive number of days");
        }
        for (int k = 0; k < block.days; ++k, ++day) {
            try {
                for (int n = 0; n < substeps; ++n) {
                    state = step(state, block.params, population, dt);
                }
            } catch (const IntegrationInstability& e) {
                throw IntegrationInstability("day " + std::to_string(day) + ": " + e.what());
            }
            out.states.push_back(state);
        }
    }
    return out;
}

inline CompartmentSeries simulate(const CompartmentState& initial, const SirdParams& params, int days,
                                  double population, double dt = kDefaultDt, Date start_date = {})
{
    const ScheduleBlock block{params, days};
    return simulate(initial, std::span<const ScheduleBlock>(&block, 1), population, dt, start_date);
}

} // namespace sirdcast
