"""The birthday chain that dominates increases of the running maximum.

States ``1..n``; from ``j`` the chain steps to ``j + 1`` with probability
``(n - j) / n`` and resets to ``1`` with probability ``j / n``. Its return
time ``T`` to state 1 is the classical birthday-coincidence time:
``P(T > s) = prod_{i=1}^{s} (1 - i/n)``.

Convention: "maximum" here means the largest number of copies of any one type
*already revealed* (``appeared = m - remaining``). Game modules track
remaining counts; :meth:`cardguess.game.CountsState.appeared` is the single
conversion point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import EmptyDeckError, InvalidSpecError
from .game import CountsState, DeckSpec
from .rng import RngStream, below_nb, next_random_nb, stream_start_nb

_LOG_UNDERFLOW = 745.0  # exp(-745) underflows to 0 in double precision


@dataclass(frozen=True)
class ChainStats:
    n: int
    ET: float
    ET2: float
    excursions: int | None = None
    steps: int | None = None


def _log_tails(n: int) -> np.ndarray:
    """``log P(T > s)`` for ``s = 0, 1, ...`` until the tail underflows or hits 0."""
    smax = min(n, math.ceil(math.sqrt(2 * n * _LOG_UNDERFLOW)) + 2)
    i = np.arange(1, smax + 1, dtype=np.float64)
    with np.errstate(divide="ignore"):
        steps = np.log1p(-i / n)
    return np.concatenate([[0.0], np.cumsum(steps)])


def return_time_tail(n: int, s: int) -> float:
    """``prod_{i=1}^{s} (1 - i/n)``, i.e. ``P(T > s)``; zero once ``s >= n``."""
    if n < 1 or s < 0:
        raise InvalidSpecError("need n >= 1 and s >= 0")
    if s >= n:
        return 0.0
    return math.exp(math.fsum(math.log1p(-i / n) for i in range(1, s + 1)))


def return_time_moments(n: int) -> ChainStats:
    """Exact ``E[T]`` and ``E[T^2]`` as finite sums over the tail product."""
    if n < 1:
        raise InvalidSpecError("n must be >= 1")
    tails = np.exp(_log_tails(n))
    s = np.arange(tails.size, dtype=np.float64)
    return ChainStats(n, math.fsum(tails), math.fsum((2 * s + 1) * tails))


def tail_bounds(n: int, s: int) -> tuple[float, float]:
    """``(exp(-s^2/2n - s^3/n^2), exp(-s^2/2n))``.

    The upper value bounds ``P(T > s)`` for every ``s >= 1``. The lower one
    only holds once ``s`` is of order ``sqrt(n)``: for small ``s`` the tail is
    ``exp(-s(s+1)/2n + ...)`` and the ``s/2n`` excess is not covered by the
    cubic term.
    """
    a = s * s / (2 * n)
    return math.exp(-a - s**3 / n**2), math.exp(-a)


@numba.njit(cache=True, nogil=True)
def _run_chain(n, steps, state):
    j = 1
    returns = 0
    for _ in range(steps):
        state, u = next_random_nb(state)
        if below_nb(u, n) < j:
            j = 1
            returns += 1
        else:
            j += 1
    return returns, state


def simulate_excursions(n: int, steps: int, rng: RngStream) -> ChainStats:
    """Run the chain from state 1 for ``steps`` steps and count returns to 1."""
    if n < 1 or steps < 1:
        raise InvalidSpecError("need n >= 1 and steps >= 1")
    returns, state = _run_chain(n, steps, np.uint64(rng.getstate()))
    rng.setstate(int(state))
    base = return_time_moments(n)
    return ChainStats(n, base.ET, base.ET2, int(returns), steps)


def max_increase_probability(state: CountsState, j: int | None = None) -> tuple[float, float]:
    """Probability that the next card raises the maximal appeared count.

    With ``k`` the maximal appeared count and ``j`` the number of types at
    ``k``, this is ``(m - k) j / (nm - drawn)``; returned together with the
    dominating chain rate ``j / n``. ``j`` defaults to the value read off
    ``state``.
    """
    if state.t == 0:
        raise EmptyDeckError("deck is empty")
    n, m = state.n, state.m
    appeared = state.appeared()
    k = max(appeared)
    if j is None:
        j = appeared.count(k)
    if not 0 <= j <= n:
        raise InvalidSpecError(f"j must lie in [0, {n}], got {j}")
    drawn = n * m - state.t
    return (m - k) * j / (n * m - drawn), j / n


@numba.njit(cache=True, nogil=True)
def _increase_tallies(n, m, games, seed, visits, increases, expected):
    appeared = np.empty(n, dtype=np.int64)
    remaining = np.empty(n, dtype=np.int64)
    level = np.empty(m + 1, dtype=np.int64)
    useed = np.uint64(seed)
    for g in range(games):
        state = stream_start_nb(useed, np.uint64(g))
        appeared[:] = 0
        remaining[:] = m
        level[:] = 0
        level[0] = n
        k = 0
        t = n * m
        while t > 0:
            j = level[k]
            visits[j] += 1
            expected[j] += (m - k) * j / t
            state, u = next_random_nb(state)
            rem = below_nb(u, t)
            i = 0
            while remaining[i] <= rem:
                rem -= remaining[i]
                i += 1
            a = appeared[i]
            appeared[i] = a + 1
            remaining[i] -= 1
            level[a] -= 1
            level[a + 1] += 1
            if a == k:
                increases[j] += 1
                k += 1
            t -= 1


@dataclass(frozen=True)
class IncreaseTallies:
    """Per-``j`` counts from simulated games.

    ``visits[j]``: steps with ``j`` types at the maximal appeared count.
    ``increases[j]``: those steps where the maximum went up.
    ``expected[j]``: sum over those steps of the exact one-step probability.
    """

    spec: DeckSpec
    games: int
    visits: np.ndarray
    increases: np.ndarray
    expected: np.ndarray

    def rate(self, j: int) -> float:
        return self.increases[j] / self.visits[j]


def increase_tallies(spec: DeckSpec, games: int, seed: int) -> IncreaseTallies:
    """Play ``games`` random decks (game ``g`` uses stream ``(seed, g)``) and tally increases by ``j``."""
    n, m = spec.n, spec.m
    visits = np.zeros(n + 1, dtype=np.int64)
    increases = np.zeros(n + 1, dtype=np.int64)
    expected = np.zeros(n + 1, dtype=np.float64)
    _increase_tallies(n, m, games, seed, visits, increases, expected)
    return IncreaseTallies(spec, games, visits, increases, expected)
