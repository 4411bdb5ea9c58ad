"""Deck specification, remaining-count state and the one-card draw process.

The deck is never materialised as a permutation. Revealing the top card of a
uniformly shuffled deck is the same as drawing type ``i`` with probability
``counts[i] / t``, which is all the game needs.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EmptyDeckError, InvalidSpecError
from .rng import RngStream

MAX_DECK = 2**40


@dataclass(frozen=True)
class DeckSpec:
    """``n`` distinct types, ``m`` copies of each."""

    n: int
    m: int

    def __post_init__(self) -> None:
        if not (isinstance(self.n, int) and isinstance(self.m, int)):
            raise InvalidSpecError("n and m must be integers")
        if self.n < 1 or self.m < 1:
            raise InvalidSpecError(f"n and m must be >= 1, got n={self.n}, m={self.m}")
        if self.n * self.m > MAX_DECK:
            raise InvalidSpecError(f"deck size n*m={self.n * self.m} exceeds 2^40")

    @property
    def size(self) -> int:
        return self.n * self.m


@dataclass(frozen=True)
class CountsState:
    """Remaining copies per type.

    ``counts[i]`` is the number of type-``i`` cards still in the deck and ``t``
    their total. ``m`` is carried along so that derived quantities (the
    fraction ``p`` of the deck left, appeared-so-far tallies) need no extra
    arguments.
    """

    counts: tuple[int, ...]
    t: int
    m: int

    def __post_init__(self) -> None:
        if sum(self.counts) != self.t:
            raise InvalidSpecError(f"counts sum to {sum(self.counts)}, expected t={self.t}")
        if any(c < 0 or c > self.m for c in self.counts):
            raise InvalidSpecError(f"counts must lie in [0, {self.m}]")

    @property
    def n(self) -> int:
        return len(self.counts)

    @property
    def p(self) -> float:
        """Fraction of the deck still to be revealed."""
        return self.t / (self.n * self.m)

    def appeared(self) -> tuple[int, ...]:
        """Cards of each type already revealed (``m - remaining``)."""
        return tuple(self.m - c for c in self.counts)


def new_state(spec: DeckSpec) -> CountsState:
    return CountsState(counts=(spec.m,) * spec.n, t=spec.size, m=spec.m)


def remove(state: CountsState, i: int) -> CountsState:
    """State after one card of type ``i`` has been revealed."""
    if state.counts[i] == 0:
        raise InvalidSpecError(f"no cards of type {i} remain")
    counts = list(state.counts)
    counts[i] -= 1
    return CountsState(tuple(counts), state.t - 1, state.m)


def draw(state: CountsState, rng: RngStream) -> tuple[int, CountsState]:
    """Reveal the top card: type ``i`` with probability ``counts[i] / t``."""
    if state.t == 0:
        raise EmptyDeckError("cannot draw from an empty deck")
    target = rng.below(state.t)
    acc = 0
    for i, c in enumerate(state.counts):
        acc += c
        if acc > target:
            return i, remove(state, i)
    raise AssertionError("unreachable: counts sum to t")


def canonicalize(state: CountsState) -> tuple[int, ...]:
    """Counts sorted non-increasingly; the game value is invariant under relabeling."""
    return tuple(sorted(state.counts, reverse=True))
