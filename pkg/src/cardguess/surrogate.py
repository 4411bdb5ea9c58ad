"""Independent-binomial surrogate for the remaining counts.

At ``t`` cards left the counts ``X_i(t)`` are multivariate hypergeometric. The
surrogate replaces them with i.i.d. ``Y_i ~ Bin(m, p)``, ``p = t / (nm)``:

    S~ = sum_t E[max_i Y_i(t)] / t.

Conditioning the ``Y_i`` on ``sum Y_i = t`` recovers the hypergeometric law
exactly; :func:`conditional_sampler` samples that way and
:func:`conditional_law` computes the sampler's law analytically.

``E[max]`` of ``n`` i.i.d. binomials is ``sum_{k<m} (1 - F(k)^n)``. With
``n`` up to 1e6 the power amplifies CDF error ``n``-fold, so ``F`` is taken
from the upper tail (``log1p(-sf)``) whenever the tail is the smaller side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import bdtr, bdtrc, ndtri

from .errors import CapacityError, InvalidSpecError
from .game import DeckSpec
from .rng import RngStream

DEFAULT_SUM_CAP = 10**6
MIN_GRID = 64
_BLOCK = 256
_SATURATED = 41.5  # n * sf >= this  =>  F^n <= e^-41.5 < 1e-18
_NEGLIGIBLE = 1e-20  # n * sf <= this  =>  1 - F^n below double resolution of the sum


@dataclass(frozen=True)
class BinomialSpec:
    n: int
    m: int
    p: float

    def __post_init__(self) -> None:
        if self.n < 1 or self.m < 1:
            raise InvalidSpecError("n and m must be >= 1")
        if not 0.0 <= self.p <= 1.0:
            raise InvalidSpecError(f"p must lie in [0, 1], got {self.p}")


@dataclass(frozen=True)
class SurrogateValue:
    value: float
    mode: str  # "exact-sum" or "quadrature"
    grid_size: int | None = None
    refinement_error: float | None = None  # relative change when the grid is doubled


def _window(n: int, m: int, p_lo: float, p_hi: float) -> tuple[int, int]:
    """``[k_lo, k_hi)`` outside which ``1 - F(k)^n`` is 1 (below) or 0 (above).

    The bounds come from a normal approximation with a wide margin and are
    then verified against the exact tail; any failed check widens to the full
    range. ``sf`` is decreasing in ``k`` and increasing in ``p``, so checking
    the block's extreme ``p`` covers every ``p`` in the block.
    """
    k_lo, k_hi = 0, m
    if p_hi <= 0.0 or p_lo >= 1.0:
        return k_lo, k_hi
    sd_hi = math.sqrt(m * p_hi * (1 - p_hi))
    z_hi = -float(ndtri(_NEGLIGIBLE / n))
    cand_hi = min(m, math.ceil(m * p_hi + (z_hi + 4) * sd_hi + 6))
    if cand_hi < m and n * bdtrc(cand_hi, m, p_hi) <= _NEGLIGIBLE:
        k_hi = cand_hi
    if _SATURATED / n < 0.5 and p_lo > 0.0:
        sd_lo = math.sqrt(m * p_lo * (1 - p_lo))
        z_lo = -float(ndtri(_SATURATED / n))
        cand_lo = max(0, math.floor(m * p_lo + (z_lo - 4) * sd_lo - 6))
        if cand_lo > 0 and n * bdtrc(cand_lo - 1, m, p_lo) >= _SATURATED:
            k_lo = min(cand_lo, k_hi)
    return k_lo, k_hi


def _tail_terms(n: int, k: np.ndarray, m: int, p: np.ndarray) -> np.ndarray:
    """``1 - F(k)^n`` elementwise."""
    sf = bdtrc(k, m, p)
    with np.errstate(divide="ignore"):
        log_f = np.where(sf < 0.5, np.log1p(-sf), np.log(bdtr(k, m, p)))
    return -np.expm1(n * log_f)


def _emax_many(n: int, m: int, ps: np.ndarray) -> np.ndarray:
    """``E[max of n i.i.d. Bin(m, p)]`` for each ``p`` in ``ps``."""
    ps = np.asarray(ps, dtype=np.float64)
    out = np.empty(ps.shape, dtype=np.float64)
    order = np.argsort(ps, kind="stable")
    for a in range(0, ps.size, _BLOCK):
        idx = order[a : a + _BLOCK]
        block = ps[idx]
        res = np.zeros(block.size)
        res[block >= 1.0] = m
        inner = (block > 0.0) & (block < 1.0)
        if inner.any():
            pb = block[inner]
            k_lo, k_hi = _window(n, m, float(pb.min()), float(pb.max()))
            k = np.arange(k_lo, k_hi, dtype=np.float64)
            terms = _tail_terms(n, k[None, :], m, pb[:, None])
            res[inner] = k_lo + np.array([math.fsum(row) for row in terms])
        out[idx] = res
    return out


def indep_max_expectation(bspec: BinomialSpec) -> float:
    """``E[max_i Y_i]`` for ``n`` i.i.d. ``Bin(m, p)``."""
    return float(_emax_many(bspec.n, bspec.m, np.array([bspec.p]))[0])


def _exact_sum(n: int, m: int) -> float:
    size = n * m
    t = np.arange(1, size + 1, dtype=np.float64)
    emax = _emax_many(n, m, t / size)
    return math.fsum(emax / t)


def _quadrature(n: int, m: int, grid: int) -> float:
    """Sum over t: exact near both ends, integral of a smooth interpolant in the bulk.

    ``sum_{t=a}^{b} f(t) ~ int_{a-1/2}^{b+1/2} f`` (midpoint rule, ``f`` varies
    on scales much longer than one card). The bulk integral runs in ``ln t``
    on the lower third, in ``t`` in the middle and in ``ln(nm - t)`` on the
    upper third, each with ``grid`` trapezoid nodes.
    """
    size = n * m
    head = grid
    if size <= 2 * head + 6 * grid:
        return _exact_sum(n, m)

    def f(t: np.ndarray) -> np.ndarray:
        return _emax_many(n, m, t / size) / t

    ends = np.concatenate([np.arange(1, head + 1), np.arange(size - head, size + 1)]).astype(np.float64)
    exact_part = math.fsum(f(ends))

    a, b = head + 0.5, size - head - 0.5
    c1, c2 = size / 3.0, 2.0 * size / 3.0
    u = np.linspace(math.log(a), math.log(c1), grid)
    low = trapezoid(f(np.exp(u)) * np.exp(u), u)
    x = np.linspace(c1, c2, grid)
    mid = trapezoid(f(x), x)
    v = np.linspace(math.log(size - b), math.log(size - c2), grid)
    tv = size - np.exp(v)
    high = trapezoid(f(tv) * np.exp(v), v)
    return exact_part + low + mid + high


def s_tilde(
    spec: DeckSpec,
    mode: str = "exact-sum",
    grid_size: int = 512,
    sum_cap: int = DEFAULT_SUM_CAP,
) -> SurrogateValue:
    """Surrogate score ``S~`` with independent binomial counts."""
    n, m = spec.n, spec.m
    if mode == "exact-sum":
        if spec.size > sum_cap:
            raise CapacityError("surrogate exact sum deck size", spec.size, sum_cap)
        return SurrogateValue(float(_exact_sum(n, m)), mode)
    if mode != "quadrature":
        raise InvalidSpecError(f"unknown mode {mode!r}")
    if grid_size < MIN_GRID:
        raise InvalidSpecError(f"grid size must be >= {MIN_GRID}")
    coarse = _quadrature(n, m, grid_size)
    fine = _quadrature(n, m, 2 * grid_size)
    return SurrogateValue(float(fine), mode, grid_size, float(abs(fine - coarse) / abs(fine)))


def surrogate_profile(spec: DeckSpec, sum_cap: int = DEFAULT_SUM_CAP):
    """Rows ``(t, p, emax_indep, term)`` of the surrogate sum."""
    if spec.size > sum_cap:
        raise CapacityError("surrogate exact sum deck size", spec.size, sum_cap)
    size = spec.size
    t = np.arange(1, size + 1, dtype=np.float64)
    emax = _emax_many(spec.n, spec.m, t / size)
    for ti, e in zip(range(1, size + 1), emax):
        yield ti, ti / size, float(e), float(e) / ti


def feller_gap(n: int, m: int, p: float) -> float:
    """``E[max_i Z_i] - sqrt(2 ln n)`` for standardised ``Z_i = (Y_i - mp) / sqrt(mp(1-p))``."""
    var = m * p * (1 - p)
    if not var > 0:
        raise InvalidSpecError("p must lie strictly between 0 and 1")
    emax = indep_max_expectation(BinomialSpec(n, m, p))
    return (emax - m * p) / math.sqrt(var) - math.sqrt(2 * math.log(n))


# Conditional representation


def _log_binom_pmf(k: int, trials: int, p: float) -> float:
    return (
        math.lgamma(trials + 1)
        - math.lgamma(k + 1)
        - math.lgamma(trials - k + 1)
        + k * math.log(p)
        + (trials - k) * math.log1p(-p)
    )


@lru_cache(maxsize=65536)
def sequential_conditional(m: int, types_left: int, r: int, p: float) -> tuple[tuple[int, ...], tuple[float, ...]]:
    """Law of ``Y_1`` given ``Y_1 + ... + Y_R = r`` for i.i.d. ``Bin(m, p)``.

    Returns ``(support, probabilities)``; computed from the binomial pmfs at
    ``p`` even though the ratio does not depend on it.
    """
    rest = (types_left - 1) * m
    lo, hi = max(0, r - rest), min(m, r)
    if lo > hi:
        raise InvalidSpecError(f"sum {r} unreachable with {types_left} types of {m}")
    support = tuple(range(lo, hi + 1))
    if lo == hi:
        return support, (1.0,)
    if not 0.0 < p < 1.0:
        # sum below the maximum forces p < 1; keep the combinatorial form as fallback
        w = [math.comb(m, y) * math.comb(rest, r - y) for y in support]
        total = math.comb(types_left * m, r)
        return support, tuple(x / total for x in w)
    denom = _log_binom_pmf(r, types_left * m, p)
    probs = tuple(math.exp(_log_binom_pmf(y, m, p) + _log_binom_pmf(r - y, rest, p) - denom) for y in support)
    return support, probs


def _check_t(spec: DeckSpec, t: int) -> None:
    if not 1 <= t <= spec.size:
        raise InvalidSpecError(f"t must lie in [1, {spec.size}], got {t}")


def conditional_sampler(spec: DeckSpec, t: int, rng: RngStream, p: float | None = None) -> tuple[int, ...]:
    """One draw of i.i.d. ``Bin(m, p)`` counts conditioned on summing to ``t``.

    Types are filled in order, each from its exact conditional law given the
    remaining sum; the last type takes what is left.
    """
    _check_t(spec, t)
    p = t / spec.size if p is None else p
    out = []
    r = t
    for i in range(spec.n - 1):
        support, probs = sequential_conditional(spec.m, spec.n - i, r, p)
        u = rng.random()
        acc = 0.0
        y = support[-1]
        for s, q in zip(support, probs):
            acc += q
            if u < acc:
                y = s
                break
        out.append(y)
        r -= y
    out.append(r)
    return tuple(out)


def conditional_law(spec: DeckSpec, t: int, p: float | None = None) -> dict[tuple[int, ...], float]:
    """Exact law of :func:`conditional_sampler` output, by composing its conditionals."""
    _check_t(spec, t)
    p = t / spec.size if p is None else p
    law: dict[tuple[int, ...], float] = {}

    def walk(prefix: tuple[int, ...], r: int, prob: float) -> None:
        i = len(prefix)
        if i == spec.n - 1:
            law[prefix + (r,)] = law.get(prefix + (r,), 0.0) + prob
            return
        support, probs = sequential_conditional(spec.m, spec.n - i, r, p)
        for y, q in zip(support, probs):
            walk(prefix + (y,), r - y, prob * q)

    walk((), t, 1.0)
    return law


def hypergeometric_pmf(spec: DeckSpec, counts: tuple[int, ...]) -> Fraction:
    """``prod_i C(m, j_i) / C(nm, t)`` for remaining counts ``j``."""
    t = sum(counts)
    num = 1
    for j in counts:
        num *= math.comb(spec.m, j)
    return Fraction(num, math.comb(spec.size, t))
