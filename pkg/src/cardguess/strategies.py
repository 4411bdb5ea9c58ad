"""Guessing strategies.

A strategy sees the exact remaining composition (complete feedback) and names
a type. ``greedy`` guesses a type with the most copies left, which is the
optimal play; ``fixed`` always names type 0 and so scores exactly ``m``;
``uniform`` picks uniformly among types that are still present.

Random choices consume the :class:`~cardguess.rng.RngStream` *before* the draw
of the card, in the same order as the compiled simulator.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EmptyDeckError, InvalidSpecError
from .game import CountsState
from .rng import RngStream

KINDS = ("fixed", "greedy", "uniform")
TIEBREAKS = ("lowest", "random")


def _check_nonempty(state: CountsState) -> None:
    if state.t == 0:
        raise EmptyDeckError("no card left to guess")


def guess_fixed(state: CountsState) -> int:
    _check_nonempty(state)
    return 0


def guess_greedy(state: CountsState, tiebreak: str = "lowest", rng: RngStream | None = None) -> int:
    """Index of a type with the largest remaining count.

    With ``tiebreak="random"`` the choice is uniform over the argmax set, which
    requires ``rng``.
    """
    _check_nonempty(state)
    top = max(state.counts)
    if tiebreak == "lowest":
        return state.counts.index(top)
    if tiebreak != "random":
        raise InvalidSpecError(f"unknown tiebreak {tiebreak!r}")
    if rng is None:
        raise InvalidSpecError("random tiebreak needs an rng")
    ties = [i for i, c in enumerate(state.counts) if c == top]
    return ties[rng.below(len(ties))]


def guess_uniform(state: CountsState, rng: RngStream) -> int:
    _check_nonempty(state)
    present = [i for i, c in enumerate(state.counts) if c > 0]
    return present[rng.below(len(present))]


@dataclass(frozen=True)
class Strategy:
    kind: str = "greedy"
    tiebreak: str = "lowest"

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise InvalidSpecError(f"unknown strategy {self.kind!r}; choose from {KINDS}")
        if self.tiebreak not in TIEBREAKS:
            raise InvalidSpecError(f"unknown tiebreak {self.tiebreak!r}; choose from {TIEBREAKS}")

    @property
    def name(self) -> str:
        if self.kind == "greedy" and self.tiebreak != "lowest":
            return f"greedy-{self.tiebreak}"
        return self.kind

    def guess(self, state: CountsState, rng: RngStream | None = None) -> int:
        if self.kind == "fixed":
            return guess_fixed(state)
        if self.kind == "greedy":
            return guess_greedy(state, self.tiebreak, rng)
        if rng is None:
            raise InvalidSpecError("uniform strategy needs an rng")
        return guess_uniform(state, rng)
