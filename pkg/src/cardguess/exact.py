"""Exact expected score of optimal play, by two independent routes.

``exact_value_dp`` runs the optimal-play value recursion over canonical
(sorted) count vectors. ``score_decomposition`` instead sums
``E[max_i X_i(t)] / t`` over the deck, with each expectation read off the
multivariate hypergeometric law through the generating function
``(sum_{j<=k} C(m, j) x^j)^n``. Agreement of the two is the main correctness
check for both.

Both accept ``rational=True`` to return :class:`fractions.Fraction` values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement

from .errors import CapacityError, InvalidSpecError
from .game import DeckSpec

DEFAULT_STATE_CAP = 10**7
DEFAULT_POLY_CAP = 4096  # max deck size n*m for the big-integer generating function

Number = float | Fraction


@dataclass(frozen=True)
class ExactValue:
    value: Number
    method: str  # "dp" or "linearity"
    spec: DeckSpec


@dataclass(frozen=True)
class MaxProfile:
    """``emax[t - 1] = E[max_i X_i(t)]`` for ``t = 1 .. nm``."""

    spec: DeckSpec
    emax: tuple[Number, ...]

    def rows(self):
        size = self.spec.size
        for t, e in enumerate(self.emax, start=1):
            yield t, t / size, e, e / t


def state_count(spec: DeckSpec) -> int:
    """Number of canonical states: multisets of ``n`` counts from ``0..m``."""
    return math.comb(spec.n + spec.m, spec.n)


def exact_value_dp(spec: DeckSpec, rational: bool = False, state_cap: int = DEFAULT_STATE_CAP) -> ExactValue:
    """Expected greedy score via memoised recursion on sorted count vectors.

    ``V(s) = max(s)/t + sum_i (s_i/t) V(s - e_i)``, evaluated layer by layer
    from the empty deck upward. Types sharing a count are lumped, so each state
    has at most ``m`` successors.
    """
    needed = state_count(spec)
    if needed > state_cap:
        raise CapacityError("exact DP state space", needed, state_cap)
    n, m = spec.n, spec.m
    one = Fraction(1) if rational else 1.0

    layers: dict[int, list[tuple[int, ...]]] = {}
    for s in combinations_with_replacement(range(m, -1, -1), n):
        layers.setdefault(sum(s), []).append(s)

    value: dict[tuple[int, ...], Number] = {(0,) * n: 0 * one}
    for t in range(1, n * m + 1):
        for s in layers[t]:
            terms = [s[0] * one]  # immediate reward: guess the top count
            j = 0
            while j < n and s[j] > 0:
                c = s[j]
                k = j
                while k + 1 < n and s[k + 1] == c:
                    k += 1
                # decrement the last copy of level c to stay sorted
                child = s[:k] + (c - 1,) + s[k + 1 :]
                terms.append(c * (k - j + 1) * value[child])
                j = k + 1
            total = sum(terms) if rational else math.fsum(terms)
            value[s] = total / t
        for s in layers.pop(t - 1, ()):
            del value[s]  # layer t+1 only reads layer t
    return ExactValue(value[(m,) * n], "dp", spec)


def _packed_power(m: int, k: int, n: int, width: int, modulus: int | None) -> int:
    """Kronecker-packed ``(sum_{j<=k} C(m,j) x^j)^n``, slot ``width`` bits."""
    base = 0
    for j in range(k, -1, -1):
        base = (base << width) | math.comb(m, j)
    if modulus is None:
        return base**n
    return pow(base, n, modulus)


def _slot_width(spec: DeckSpec) -> int:
    # every coefficient is at most C(nm, t) < 2^nm
    return ((spec.size + 1 + 7) // 8) * 8


def _check_poly_cap(spec: DeckSpec, cap: int) -> None:
    if spec.size > cap:
        raise CapacityError("generating-function deck size", spec.size, cap)


def max_remaining_expectation(
    spec: DeckSpec, t: int, rational: bool = False, poly_cap: int = DEFAULT_POLY_CAP
) -> Number:
    """``E[max_i X_i(t)]`` under the multivariate hypergeometric law.

    ``P(max <= k)`` is the ``x^t`` coefficient of ``(sum_{j<=k} C(m,j) x^j)^n``
    over ``C(nm, t)``; the power is truncated at degree ``t``.
    """
    if not 1 <= t <= spec.size:
        raise InvalidSpecError(f"t must lie in [1, {spec.size}], got {t}")
    _check_poly_cap(spec, poly_cap)
    n, m = spec.n, spec.m
    width = _slot_width(spec)
    modulus = 1 << (width * (t + 1))
    total = math.comb(n * m, t)
    acc = 0
    for k in range(m):
        coef = _packed_power(m, k, n, width, modulus) >> (width * t)
        acc += total - coef
    e = Fraction(acc, total)
    return e if rational else acc / total


def max_profile(spec: DeckSpec, rational: bool = False, poly_cap: int = DEFAULT_POLY_CAP) -> MaxProfile:
    _check_poly_cap(spec, poly_cap)
    n, m, size = spec.n, spec.m, spec.size
    width = _slot_width(spec)
    nbytes = width // 8
    # sum over k of (C(nm,t) - coef_k(t)), for every t at once
    acc = [0] * (size + 1)
    for k in range(m):
        raw = _packed_power(m, k, n, width, None)
        data = raw.to_bytes((raw.bit_length() + 7) // 8 + nbytes, "little")
        for t in range(1, min(size, n * k) + 1):
            coef = int.from_bytes(data[t * nbytes : (t + 1) * nbytes], "little")
            acc[t] -= coef
    emax = []
    for t in range(1, size + 1):
        total = math.comb(size, t)
        num = m * total + acc[t]
        emax.append(Fraction(num, total) if rational else num / total)
    return MaxProfile(spec, tuple(emax))


def score_decomposition(
    spec: DeckSpec, rational: bool = False, poly_cap: int = DEFAULT_POLY_CAP
) -> tuple[MaxProfile, ExactValue]:
    """Profile of ``E[max_i X_i(t)]`` and ``S = sum_t E[max_i X_i(t)] / t``."""
    profile = max_profile(spec, rational, poly_cap)
    terms = [e / t for t, e in enumerate(profile.emax, start=1)]
    value = sum(terms, Fraction(0)) if rational else math.fsum(terms)
    return profile, ExactValue(value, "linearity", spec)
