#!/usr/bin/env python3
"""Generates the bundled synthetic multi-wave datasets in data/.

Each country is a SIRD trajectory whose infection rate varies continuously so that the active-case
curve follows a prescribed growth-rate profile (two or three waves). Recovery and fatality rates
drift slowly. Daily increments are redistributed inside each calendar week with a weekday reporting
pattern and multiplicative noise, so weekly totals are exact but day-to-day values fluctuate like
real surveillance data.

Output columns follow the public per-country layout:
location,date,total_cases,total_recovered,total_deaths,population
"""

import argparse
import datetime as dt
import math
import pathlib

import numpy as np

COUNTRIES = [
    # name, start, end, population, initial cumulative cases, deaths, active,
    # growth-rate bumps (centre day, width days, height), baseline growth, gamma profile, delta profile
    dict(
        name="United States", start="2021-07-01", end="2022-04-15", population=330e6,
        cases0=33.6e6, deaths0=0.605e6, active0=0.45e6,
        bumps=[(40, 20, 0.08), (175, 14, 0.13), (285, 30, 0.04)], baseline=-0.02,
        gamma=(0.095, 0.11), delta=(0.0016, 0.0009),
    ),
    dict(
        name="India", start="2021-01-01", end="2022-03-30", population=1100e6,
        cases0=10.3e6, deaths0=0.149e6, active0=0.26e6,
        bumps=[(100, 22, 0.13), (375, 12, 0.2), (450, 25, 0.03)], baseline=-0.02,
        gamma=(0.085, 0.1), delta=(0.0012, 0.0007),
    ),
    dict(
        name="United Kingdom", start="2021-06-01", end="2022-04-30", population=60e6,
        cases0=4.5e6, deaths0=0.128e6, active0=0.06e6,
        bumps=[(30, 18, 0.1), (195, 12, 0.16), (290, 14, 0.06), (335, 20, 0.03)], baseline=-0.02,
        gamma=(0.09, 0.105), delta=(0.0011, 0.0006),
    ),
]

WEEKDAY_PATTERN = np.array([1.15, 1.1, 1.05, 1.05, 1.0, 0.8, 0.85])


def growth_rate(t, spec):
    r = spec["baseline"]
    for centre, width, height in spec["bumps"]:
        r += height * math.exp(-((t - centre) / width) ** 2)
    return r


def lerp(pair, frac):
    return pair[0] + (pair[1] - pair[0]) * frac


def simulate(spec, days, substeps=20):
    n = spec["population"]
    i = spec["active0"]
    d = spec["deaths0"]
    r = spec["cases0"] - i - d
    s = n - spec["cases0"]
    out = [(s, i, r, d)]
    h = 1.0 / substeps

    def rates(t, state):
        frac = t / days
        gamma = lerp(spec["gamma"], frac)
        delta = lerp(spec["delta"], frac)
        beta = (growth_rate(t, spec) + gamma + delta) * n / state[0]
        return beta, gamma, delta

    def deriv(t, state):
        beta, gamma, delta = rates(t, state)
        s_, i_, _, _ = state
        inf = beta * s_ * i_ / n
        return np.array([-inf, inf - gamma * i_ - delta * i_, gamma * i_, delta * i_])

    state = np.array(out[0])
    t = 0.0
    for _ in range(days):
        for _ in range(substeps):
            k1 = deriv(t, state)
            k2 = deriv(t + h / 2, state + h / 2 * k1)
            k3 = deriv(t + h / 2, state + h / 2 * k2)
            k4 = deriv(t + h, state + h * k3)
            state = state + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
        out.append(tuple(state))
    return np.array(out)


def reported(cumulative, start_weekday, rng):
    """Redistributes daily increments within each 7-day block; block totals are preserved."""
    inc = np.diff(cumulative, prepend=cumulative[0])
    inc[0] = 0.0
    out = inc.copy()
    for begin in range(1, len(inc), 7):
        block = slice(begin, min(begin + 7, len(inc)))
        idx = np.arange(block.start, block.stop)
        weights = WEEKDAY_PATTERN[(idx + start_weekday) % 7] * rng.lognormal(0.0, 0.08, size=len(idx))
        weights /= weights.mean()
        out[block] = inc[block].mean() * weights if len(idx) == 7 else inc[block]
    return np.round(cumulative[0] + np.cumsum(out))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    parser.add_argument("--seed", type=int, default=20240601)
    args = parser.parse_args()
    out_dir = pathlib.Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    lines = ["location,date,total_cases,total_recovered,total_deaths,population"]
    for spec in COUNTRIES:
        start = dt.date.fromisoformat(spec["start"])
        end = dt.date.fromisoformat(spec["end"])
        days = (end - start).days
        traj = simulate(spec, days)
        n = spec["population"]
        cases = reported(n - traj[:, 0], start.weekday(), rng)
        deaths = reported(traj[:, 3], start.weekday(), rng)
        recovered = reported(traj[:, 2], start.weekday(), rng)
        recovered = np.minimum(recovered, cases - deaths)
        for k in range(days + 1):
            date = start + dt.timedelta(days=k)
            lines.append(
                f"{spec['name']},{date.isoformat()},{int(cases[k])},{int(recovered[k])},{int(deaths[k])},{int(n)}"
            )
    (out_dir / "synthetic_multiwave.csv").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
