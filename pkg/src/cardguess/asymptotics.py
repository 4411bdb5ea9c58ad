"""Closed-form score estimates and the Chernoff bound for centred binomial maxima.

Three regimes:

* ``dg_estimate``: ``n`` fixed, ``m`` large, ``m + (pi/2) M_n sqrt(m)`` with
  ``M_n`` the expected maximum of ``n`` standard normals.
* ``ho_estimate``: ``m`` fixed, ``n`` large,
  ``H_m H_n + sum_{j<m} ln C(m, j) / j``.
* ``main_estimate``: both large with ``(ln n)^(3+eps) <= c m``,
  ``m + (pi / sqrt 2) sqrt(m ln n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.integrate import quad
from scipy.special import digamma, log_ndtr

from .errors import InvalidSpecError
from .game import DeckSpec

EULER_GAMMA = 0.5772156649015329
DEFAULT_C = 1.0
DEFAULT_EPSILON = 0.1
_HARMONIC_DIRECT = 10**6


@dataclass(frozen=True)
class AsymptoticEstimate:
    value: float
    formula: str  # "fixed-n", "fixed-m" or "main"
    spec: DeckSpec
    admissible: bool | None = None  # only set for "main"


@dataclass(frozen=True)
class ChernoffParams:
    theta: float
    regime: str  # "small-p" or "large-p"
    epsilon: float


def harmonic(k: int) -> float:
    """``H_k = 1 + 1/2 + ... + 1/k``; ``H_0 = 0``."""
    if k < 0:
        raise InvalidSpecError("k must be >= 0")
    if k <= _HARMONIC_DIRECT:
        return math.fsum(1.0 / j for j in range(1, k + 1))
    return float(digamma(k + 1)) + EULER_GAMMA


def normal_max_expectation(n: int) -> float:
    """Expected maximum of ``n`` i.i.d. standard normals.

    Written as ``int_0^inf (1 - Phi^n) - int_-inf^0 Phi^n`` with ``Phi^n``
    evaluated as ``exp(n log Phi)``. Integration runs over ``[-10, sqrt(2 ln n) + 10]``;
    the discarded tails are below 1e-20.
    """
    if n < 1:
        raise InvalidSpecError("n must be >= 1")
    if n == 1:
        return 0.0
    peak = math.sqrt(2 * math.log(n))
    upper = peak + 10.0

    def above(x: float) -> float:
        return -math.expm1(n * float(log_ndtr(x)))

    def below(x: float) -> float:
        return math.exp(n * float(log_ndtr(x)))

    opts = dict(epsabs=1e-13, epsrel=1e-13, limit=200)
    pos = quad(above, 0.0, upper, points=[max(peak - 1.0, 0.0), peak], **opts)[0]
    neg = quad(below, -10.0, 0.0, **opts)[0]
    return pos - neg


def dg_estimate(n: int, m: int) -> AsymptoticEstimate:
    spec = DeckSpec(n, m)
    return AsymptoticEstimate(m + math.pi / 2 * normal_max_expectation(n) * math.sqrt(m), "fixed-n", spec)


def ho_estimate(n: int, m: int) -> AsymptoticEstimate:
    spec = DeckSpec(n, m)
    lnc = [math.lgamma(m + 1) - math.lgamma(j + 1) - math.lgamma(m - j + 1) for j in range(1, m)]
    correction = math.fsum(v / j for j, v in enumerate(lnc, start=1))
    return AsymptoticEstimate(harmonic(m) * harmonic(n) + correction, "fixed-m", spec)


def is_admissible(n: int, m: int, c: float = DEFAULT_C, epsilon: float = DEFAULT_EPSILON) -> bool:
    """Whether ``(ln n)^(3+eps) <= c m``."""
    return math.log(n) ** (3 + epsilon) <= c * m


def main_estimate(n: int, m: int, c: float = DEFAULT_C, epsilon: float = DEFAULT_EPSILON) -> AsymptoticEstimate:
    spec = DeckSpec(n, m)
    value = m + math.pi / math.sqrt(2) * math.sqrt(m * math.log(n))
    return AsymptoticEstimate(value, "main", spec, is_admissible(n, m, c, epsilon))


def chernoff_bound(n: int, m: int, p: float, theta: float) -> float:
    """Upper bound on ``E[max_i Y_i] - mp`` for ``n`` i.i.d. ``Bin(m, p)``.

    ``ln(n)/theta + (mp/theta)(e^theta - 1) - mp``; the subtracted term is the
    mean ``mp`` so that the expansion in ``theta`` starts at ``mp theta / 2``.
    """
    if not theta > 0:
        raise InvalidSpecError("theta must be positive")
    if not 0 < p <= 1:
        raise InvalidSpecError("p must lie in (0, 1]")
    mp = m * p
    return math.log(n) / theta + mp / theta * math.expm1(theta) - mp


def theta_choice(n: int, m: int, p: float, regime: str, epsilon: float = DEFAULT_EPSILON) -> ChernoffParams:
    """Bound parameter for the two tail regimes.

    ``large-p``: ``sqrt(2 ln n / m)``. ``small-p``: the same times
    ``ln(1/p)^(1+eps)``, which grows as ``p -> 0``.
    """
    base = math.sqrt(2 * math.log(n) / m)
    if regime == "large-p":
        theta = base
    elif regime == "small-p":
        if not 0 < p < 1:
            raise InvalidSpecError("small-p regime needs 0 < p < 1")
        theta = base * math.log(1 / p) ** (1 + epsilon)
    else:
        raise InvalidSpecError(f"unknown regime {regime!r}")
    if not theta > 0:
        raise InvalidSpecError("theta must be positive; n = 1 gives theta = 0")
    return ChernoffParams(theta, regime, epsilon)
