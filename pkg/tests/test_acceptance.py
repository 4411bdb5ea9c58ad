"""Acceptance gate: one test per criterion, each at its stated tolerance and time budget.

Every test appends a PASS/FAIL line to the "acceptance criteria" section of the
terminal summary before asserting.
"""

import math
import time
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from scipy import stats

import conftest
from cardguess.asymptotics import chernoff_bound, ho_estimate
from cardguess.birthday import return_time_moments, simulate_excursions
from cardguess.cli import run
from cardguess.exact import exact_value_dp, score_decomposition
from cardguess.game import DeckSpec
from cardguess.montecarlo import estimate_score
from cardguess.rng import RngStream
from cardguess.strategies import Strategy
from cardguess.surrogate import (
    BinomialSpec,
    conditional_law,
    conditional_sampler,
    feller_gap,
    indep_max_expectation,
    s_tilde,
)
from oracles import binomial_emax_mp, brute_force_greedy_score, hypergeometric_law

pytestmark = pytest.mark.slow


def report(label: str, ok: bool, detail: str, start: float, budget: float | None) -> None:
    elapsed = time.perf_counter() - start
    in_time = budget is None or elapsed < budget
    passed = ok and in_time
    timing = f"{elapsed:.1f} s" + (f" / {budget:g} s" if budget else "")
    line = f"[{'PASS' if passed else 'FAIL'}] {label}: {detail} ({timing})"
    conftest.ACCEPTANCE_LINES.append(line)
    assert ok, line
    assert in_time, line


def test_c01_exact_matches_brute_force():
    t0 = time.perf_counter()
    cells = [(n, m) for n in range(1, 11) for m in range(1, 11) if n * m <= 10]
    bad = [(n, m) for n, m in cells if exact_value_dp(DeckSpec(n, m), rational=True).value != brute_force_greedy_score(n, m)]
    s22 = exact_value_dp(DeckSpec(2, 2), rational=True).value
    harm = all(
        exact_value_dp(DeckSpec(n, 1), rational=True).value == sum(Fraction(1, k) for k in range(1, n + 1))
        for n in range(1, 7)
    )
    ok = not bad and s22 == Fraction(17, 6) and harm
    report("1 exact DP = brute force, nm <= 10", ok, f"{len(cells)} cells, mismatches {bad}, S22={s22}, S_n1=H_n {harm}", t0, 10)


def test_c02_two_exact_routes_agree():
    t0 = time.perf_counter()
    worst = 0.0
    bad = []
    for n, m in product(range(1, 9), repeat=2):
        spec = DeckSpec(n, m)
        if exact_value_dp(spec, rational=True).value != score_decomposition(spec, rational=True)[1].value:
            bad.append((n, m))
        a, b = exact_value_dp(spec).value, score_decomposition(spec)[1].value
        worst = max(worst, abs(a - b) / abs(b))
    ok = not bad and worst <= 1e-10
    report("2 DP = linearity route, n,m <= 8", ok, f"rational mismatches {bad}, max float rel diff {worst:.2e}", t0, 60)


def test_c03_monte_carlo_calibration():
    t0 = time.perf_counter()
    worst, bad = 0.0, []
    for n, m in product(range(1, 7), repeat=2):
        spec = DeckSpec(n, m)
        exact = exact_value_dp(spec).value
        res = estimate_score(spec, reps=10**5, seed=0)
        if res.stderr == 0.0:
            z = 0.0 if res.mean == exact else math.inf
        else:
            z = abs(res.mean - exact) / res.stderr
        worst = max(worst, z)
        if z > 3:
            bad.append((n, m, round(z, 2)))
    fixed = [estimate_score(DeckSpec(n, m), Strategy("fixed"), reps=10**4, seed=0) for n, m in [(3, 4), (6, 6), (10, 2)]]
    fixed_ok = all(f.mean == f.spec.m and f.stderr == 0.0 for f in fixed)
    ok = not bad and fixed_ok
    report("3 MC calibration, n,m <= 6, 1e5 reps", ok, f"max |z| {worst:.2f}, over 3 sigma {bad}, fixed == m {fixed_ok}", t0, 30)


def test_c04_conditional_representation():
    t0 = time.perf_counter()
    worst = 0.0
    for n in range(1, 13):
        for m in range(1, 13 // n + 1):
            if n * m > 12:
                continue
            spec = DeckSpec(n, m)
            for t in range(1, n * m + 1):
                ref = hypergeometric_law(n, m, t)
                law = conditional_law(spec, t)
                if set(law) != set(ref):
                    worst = math.inf
                    continue
                worst = max(worst, max(abs(law[k] - float(ref[k])) for k in ref))
    spec = DeckSpec(3, 2)
    ref = hypergeometric_law(3, 2, 3)
    keys = sorted(ref)
    index = {k: i for i, k in enumerate(keys)}
    counts = np.zeros(len(keys))
    rng = RngStream(2024)
    for _ in range(10**5):
        counts[index[conditional_sampler(spec, 3, rng)]] += 1
    pvalue = stats.chisquare(counts, np.array([float(ref[k]) for k in keys]) * 10**5).pvalue
    ok = worst <= 1e-12 and pvalue > 1e-3
    report("4 conditional law = hypergeometric", ok, f"max abs diff {worst:.1e} (nm <= 12), chi-square p {pvalue:.3f}", t0, 20)


def _surrogate_gap_table():
    table = {}
    for n, m in product(range(2, 9), repeat=2):
        spec = DeckSpec(n, m)
        gap = abs(exact_value_dp(spec).value - s_tilde(spec).value)
        table[n, m] = gap / (math.sqrt(m) + math.log(n))
    return table


@pytest.fixture(scope="module")
def surrogate_gaps():
    t0 = time.perf_counter()
    return _surrogate_gap_table(), time.perf_counter() - t0


def _slopes(table):
    ms = np.arange(2, 9)
    out = {}
    for n in range(2, 9):
        fit = stats.linregress(ms, [table[n, m] for m in ms])
        out[n] = (fit.slope, fit.stderr, len(ms) - 2)
    return out


def test_c05_surrogate_gap_no_upward_trend(surrogate_gaps):
    table, setup = surrogate_gaps
    t0 = time.perf_counter() - setup
    const = max(table.values())
    rising = []
    for n, (slope, se, df) in _slopes(table).items():
        # one-sided: a slope significantly above 0 would be an upward trend
        if slope - stats.t.ppf(0.95, df) * se > 0:
            rising.append(n)
    ok = not rising and math.isfinite(const)
    report("5a |S - S~|/(sqrt m + ln n) bounded, no upward trend", ok, f"constant {const:.4f}, n with rising slope {rising}", t0, 300)


def test_c05_surrogate_gap_slope_contains_zero(surrogate_gaps):
    table, setup = surrogate_gaps
    t0 = time.perf_counter() - setup
    outside = []
    for n, (slope, se, df) in _slopes(table).items():
        half = stats.t.ppf(0.975, df) * se
        if not slope - half <= 0 <= slope + half:
            outside.append((n, f"{slope:.4f}+-{half:.4f}"))
    ok = not outside
    report("5b slope 95% interval contains 0, every n", ok, f"intervals excluding 0: {outside}", t0, 300)


def test_c06_birthday_chain():
    t0 = time.perf_counter()
    n = 10**6
    st6 = return_time_moments(n)
    r1, r2 = st6.ET / math.sqrt(n), st6.ET2 / n
    sim = simulate_excursions(10**4, 10**6, RngStream(6))
    renewal = sim.excursions * sim.ET / sim.steps
    ok = 1.24 <= r1 <= 1.27 and 1.9 <= r2 <= 2.1 and abs(renewal - 1) <= 0.05
    report("6 birthday chain moments and renewal", ok, f"ET/sqrt n {r1:.5f}, ET2/n {r2:.5f}, renewal {renewal:.5f}", t0, 60)


def test_c07_feller_gap():
    t0 = time.perf_counter()
    gaps = {n: feller_gap(n, 10**4, 0.5) for n in (10**2, 10**4, 10**6)}
    spread = max(gaps.values()) - min(gaps.values())
    ok = -2 <= gaps[10**4] <= 1 and spread < 1
    detail = ", ".join(f"n={n}: {g:.4f}" for n, g in gaps.items()) + f", spread {spread:.4f}"
    report("7 Feller gap", ok, detail, t0, 30)


def test_c08_two_copy_regime():
    t0 = time.perf_counter()
    res = estimate_score(DeckSpec(500, 2), reps=10**6, seed=8)
    ho = ho_estimate(500, 2).value
    ok = abs(res.mean - ho) <= 0.2
    report("8 MC S(500,2) vs fixed-m estimate", ok, f"MC {res.mean:.4f} +- {res.stderr:.4f}, estimate {ho:.4f}", t0, 120)


TREND_SIZES = (250, 500, 1000, 2000)
TARGET = math.pi / math.sqrt(2)


@pytest.fixture(scope="module")
def trend_values():
    t0 = time.perf_counter()
    out = {}
    for k in TREND_SIZES:
        spec = DeckSpec(k, k)
        # exact sum while it is cheap; the grid-refined quadrature agrees to ~1e-5 at 1000
        if spec.size <= 250_000:
            v = s_tilde(spec).value
        else:
            v = s_tilde(spec, "quadrature", grid_size=1024).value
        out[k] = (v - k) / math.sqrt(k * math.log(k))
    return out, time.perf_counter() - t0


def test_c09_normalized_gap_band(trend_values):
    values, setup = trend_values
    t0 = time.perf_counter() - setup
    ok = all(1.75 <= v <= 2.7 for v in values.values())
    report("9a (S~ - m)/sqrt(m ln n) in [1.75, 2.7]", ok, ", ".join(f"{k}: {v:.5f}" for k, v in values.items()), t0, 300)


def test_c09_normalized_gap_moves_toward_target(trend_values):
    values, setup = trend_values
    t0 = time.perf_counter() - setup
    dist = [abs(values[k] - TARGET) for k in TREND_SIZES]
    closer = sum(b < a for a, b in zip(dist, dist[1:]))
    steps = len(dist) - 1
    # "at least 3 of 4 consecutive steps" with four sizes: every one of the 3 steps
    ok = closer >= min(3, steps)
    report("9b gap moves toward pi/sqrt 2", ok, f"distances {[round(d, 5) for d in dist]}, closer in {closer} of {steps} steps", t0, 300)


def test_c10_chernoff_domination():
    t0 = time.perf_counter()
    n = m = 100
    worst = math.inf
    points = 0
    for p in (0.05, 0.25, 0.5, 0.75, 0.95):
        centred = binomial_emax_mp(n, m, repr(p)) - m * p
        fast = indep_max_expectation(BinomialSpec(n, m, p)) - m * p
        assert abs(fast - centred) < 1e-9
        for theta in (0.05, 0.1, 0.3, 0.6, 1.0):
            worst = min(worst, chernoff_bound(n, m, p, theta) - centred)
            points += 1
    ok = worst > 0
    report("10 Chernoff bound strictly above centred max", ok, f"{points} points, min margin {worst:.4f}", t0, 10)


def test_c11_cli_determinism(capsys):
    t0 = time.perf_counter()
    commands = [
        "simulate --n 3..5 --m 2..4 --reps 40000 --seed 17",
        "simulate --n 30 --m 3 --reps 50000 --seed 1 --strategy greedy --tiebreak random",
        "simulate --n 8 --m 8 --reps 20000 --seed 4 --strategy uniform",
        "compare --n 2..4 --m 2..3 --reps 20000 --seed 9",
    ]
    differing = []
    for cmd in commands:
        outs = set()
        for workers in (1, 1, 2, 8):
            assert run(f"{cmd} --workers {workers}".split()) == 0
            outs.add(capsys.readouterr().out)
        if len(outs) != 1:
            differing.append(cmd.split()[0])
    ok = not differing
    report("11 CLI output byte-identical across reruns and workers", ok, f"{len(commands)} commands x 4 runs, differing {differing}", t0, None)
