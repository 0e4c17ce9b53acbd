#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sirdcast/errors.hpp"
#include "sirdcast/random.hpp"

namespace sirdcast::pso {

struct Bounds {
    double lo = 0.0;
    double hi = 1.0;
};

/// Swarm hyperparameters. Defaults are the usual 30 particles / 200 iterations with
/// inertia annealed linearly from 0.9 to 0.4 and c1 = c2 = 2.
struct SwarmConfig {
    std::size_t num_particles = 30;
    std::size_t max_iterations = 200;
    double w_min = 0.4;
    double w_max = 0.9;
    double c1 = 2.0;
    double c2 = 2.0;
    std::vector<Bounds> bounds;
    /// Per-dimension velocity cap; empty means 0.2 * (hi - lo) for every dimension.
    std::vector<double> v_max;
    std::uint64_t seed = 42;

    std::size_t dimensions() const noexcept { return bounds.size(); }

    std::vector<double> velocity_caps() const
    {
        if (!v_max.empty()) {
            return v_max;
        }
        std::vector<double> caps;
        caps.reserve(bounds.size());
        for (const auto& b : bounds) {
            caps.push_back(0.2 * (b.hi - b.lo));
        }
        return caps;
    }

    void validate() const
    {
        if (!(w_min >= 0.0 && w_min <= w_max)) {
            throw InvalidInput("swarm config: require 0 <= w_min <= w_max");
        }
        if (!(c1 > 0.0 && c2 > 0.0)) {
            throw InvalidInput("swarm config: acceleration coefficients must be positive");
        }
        if (num_particles < 2) {
            throw InvalidInput("swarm config: need at least 2 particles");
        }
        if (max_iterations < 1) {
            throw InvalidInput("swarm config: need at least 1 iteration");
        }
        if (bounds.empty()) {
            throw InvalidInput("swarm config: search space has no dimensions");
        }
        for (const auto& b : bounds) {
            if (!(b.lo < b.hi)) {
                throw InvalidInput("swarm config: every bound needs lo < hi");
            }
        }
        if (!v_max.empty() && v_max.size() != bounds.size()) {
            throw InvalidInput("swarm config: v_max length must match the number of dimensions");
        }
        for (double v : velocity_caps()) {
            if (!(v > 0.0)) {
                throw InvalidInput("swarm config: v_max must be positive");
            }
        }
    }
};

struct Particle {
    std::vector<double> position;
    std::vector<double> velocity;
    std::vector<double> best_position;
    double best_value = std::numeric_limits<double>::infinity();
};

struct SwarmResult {
    std::vector<double> best_position;
    double best_value = std::numeric_limits<double>::infinity();
    /// Global best after each iteration.
    std::vector<double> history;
};

/// Linearly annealed inertia weight for iteration t in [0, max_iterations].
inline double inertia_weight(std::size_t t, const SwarmConfig& config)
{
    if (t > config.max_iterations || config.max_iterations == 0) {
        throw InvalidInput("inertia_weight: iteration " + std::to_string(t) + " outside [0, " +
                           std::to_string(config.max_iterations) + "]");
    }
    return config.w_max -
           static_cast<double>(t) * (config.w_max - config.w_min) / static_cast<double>(config.max_iterations);
}

/// One velocity/position update of every particle at iteration t.
///
/// `rand` yields uniform numbers in [0, 1]. Two draws are taken per particle and dimension, the
/// personal-attraction draw first. Velocities are clamped to [-v_max, v_max]; positions that leave
/// the box are clamped to it and the matching velocity component is reversed and halved.
template <class UniformSource>
void step_swarm(std::span<Particle> particles, std::span<const double> global_best, std::size_t t,
                const SwarmConfig& config, UniformSource&& rand)
{
    const double w = inertia_weight(t, config);
    const auto caps = config.velocity_caps();
    const std::size_t dims = config.dimensions();
    for (auto& p : particles) {
        for (std::size_t k = 0; k < dims; ++k) {
            const double r1 = rand();
            const double r2 = rand();
            double v = w * p.velocity[k] + config.c1 * r1 * (p.best_position[k] - p.position[k]) +
                       config.c2 * r2 * (global_best[k] - p.position[k]);
            v = std::clamp(v, -caps[k], caps[k]);
            double x = p.position[k] + v;
            const auto& b = config.bounds[k];
            if (x < b.lo || x > b.hi) {
                x = std::clamp(x, b.lo, b.hi);
                // Zeroing here lets the swarm collapse onto a face of the box.
                v = -0.5 * v;
            }
            p.position[k] = x;
            p.velocity[k] = v;
        }
    }
}

/// Minimizes `objective` over the configured box.
///
/// Runs exactly max_iterations rounds of evaluate, update bests, move. Non-finite objective values
/// count as +infinity. Deterministic for a given config (seed included).
template <class Objective>
SwarmResult optimize(Objective&& objective, const SwarmConfig& config)
{
    config.validate();
    const std::size_t dims = config.dimensions();
    const auto caps = config.velocity_caps();
    Rng rng(config.seed);
    auto rand = [&rng] { return unit_uniform(rng); };

    std::vector<Particle> swarm(config.num_particles);
    for (auto& p : swarm) {
        p.position.resize(dims);
        p.velocity.resize(dims);
        for (std::size_t k = 0; k < dims; ++k) {
            const auto& b = config.bounds[k];
            p.position[k] = b.lo + rand() * (b.hi - b.lo);
        }
        for (std::size_t k = 0; k < dims; ++k) {
            p.velocity[k] = -caps[k] + rand() * 2.0 * caps[k];
        }
        p.best_position = p.position;
    }

    SwarmResult result;
    result.best_position = swarm.front().position;
    result.history.reserve(config.max_iterations);
    for (std::size_t t = 0; t < config.max_iterations; ++t) {
        for (auto& p : swarm) {
            double value = objective(std::span<const double>(p.position));
            if (!std::isfinite(value)) {
                value = std::numeric_limits<double>::infinity();
            }
            if (value < p.best_value) {
                p.best_value = value;
                p.best_position = p.position;
            }
            if (value < result.best_value) {
                result.best_value = value;
                result.best_position = p.position;
            }
        }
        result.history.push_back(result.best_value);
        step_swarm(std::span<Particle>(swarm), std::span<const double>(result.best_position), t, config, rand);
    }
    if (!std::isfinite(result.best_value)) {
        throw OptimizationFailed("every objective evaluation was non-finite");
    }
    return result;
}

} // namespace sirdcast::pso
