"""The expanding maps f(x) = kx mod 1 and their natural-extension bookkeeping.

A point of the natural extension is an anchor x0 together with a backward
itinerary: digits d_1, d_2, ... selecting inverse branches, so that
x_{-n} = (x_{-n+1} + d_n) / k.  Backward orbits contract at rate 1/k and
are numerically stable; forward float orbits are not (see orbit_from_digits
for the honest way to follow a Lebesgue-random forward orbit).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

MAX_ENUMERATION = 10_000_000


@dataclass(frozen=True)
class ExpandingMap:
    """x -> k x mod 1 on the circle, k >= 2."""

    k: int

    def __post_init__(self):
        if not isinstance(self.k, int) or self.k < 2:
            raise ValueError(f"degree k must be an integer >= 2, got {self.k!r}")

    @property
    def sigma(self) -> float:
        """Uniform expansion factor |f'|."""
        return float(self.k)

    @property
    def rho(self) -> float:
        """Radius of local unstable leaves: 1/(2k)."""
        return 1.0 / (2.0 * self.k)


def circle_distance(x: float, y: float) -> float:
    d = abs(x - y) % 1.0
    return min(d, 1.0 - d)


def signed_circle_gap(x: float, y: float) -> float:
    """The representative of y - x in [-1/2, 1/2)."""
    return (y - x + 0.5) % 1.0 - 0.5


def apply_map(m: ExpandingMap, x: float) -> float:
    if not 0.0 <= x < 1.0:
        raise ValueError(f"point {x} outside [0, 1)")
    return (m.k * x) % 1.0


def inverse_branch(m: ExpandingMap, y: float, digit: int) -> float:
    """The preimage of y in [digit/k, (digit+1)/k)."""
    if not 0.0 <= y < 1.0:
        raise ValueError(f"point {y} outside [0, 1)")
    if not 0 <= digit < m.k:
        raise ValueError(f"branch digit {digit} outside 0..{m.k - 1}")
    return (y + digit) / m.k


@dataclass(frozen=True)
class BackwardItinerary:
    """Anchor x0 plus inverse-branch digits; a natural-extension point.

    digits[0] selects the branch containing x_{-1}, digits[1] the one
    containing x_{-2}, and so on.
    """

    k: int
    x0: float
    digits: tuple[int, ...]

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("degree k must be >= 2")
        if not 0.0 <= self.x0 < 1.0:
            raise ValueError(f"anchor {self.x0} outside [0, 1)")
        digits = tuple(int(d) for d in self.digits)
        for d in digits:
            if not 0 <= d < self.k:
                raise ValueError(f"branch digit {d} outside 0..{self.k - 1}")
        object.__setattr__(self, "digits", digits)

    @property
    def depth(self) -> int:
        return len(self.digits)

    def points(self) -> list[float]:
        """[x0, x_{-1}, ..., x_{-depth}], via stable branch arithmetic."""
        pts = [self.x0]
        x = self.x0
        for d in self.digits:
            x = (x + d) / self.k
            if x >= 1.0:  # (x + d)/k < 1 exactly, but can round up to 1.0
                x = math.nextafter(1.0, 0.0)
            pts.append(x)
        return pts

    def point(self, n: int) -> float:
        """x_{-n}."""
        if not 0 <= n <= self.depth:
            raise ValueError(f"no point at depth {n}")
        return self.points()[n]


def extend_itinerary(it: BackwardItinerary, extra_digits) -> BackwardItinerary:
    return BackwardItinerary(it.k, it.x0, it.digits + tuple(int(d) for d in extra_digits))


def truncate_itinerary(it: BackwardItinerary, depth: int) -> BackwardItinerary:
    if not 0 <= depth <= it.depth:
        raise ValueError(f"cannot truncate depth {it.depth} to {depth}")
    return BackwardItinerary(it.k, it.x0, it.digits[:depth])


def sample_unstable_neighbor(it: BackwardItinerary, offset: float) -> BackwardItinerary:
    """Same local unstable leaf: same digits, anchor shifted by offset.

    |offset| must stay below the leaf radius 1/(2k).
    """
    rho = 1.0 / (2.0 * it.k)
    if not abs(offset) < rho:
        raise ValueError(f"offset {offset} leaves the local leaf (radius {rho})")
    return BackwardItinerary(it.k, (it.x0 + offset) % 1.0, it.digits)


def shift_forward(it: BackwardItinerary) -> BackwardItinerary:
    """The natural-extension image: anchor f(x0), branch digit of x0 prepended."""
    d = int(math.floor(it.k * it.x0))
    y = it.k * it.x0 - d
    if y >= 1.0:  # guard the floor/round seam
        y, d = y - 1.0, d + 1
    return BackwardItinerary(it.k, y, (d,) + it.digits)


def shift_backward(it: BackwardItinerary) -> BackwardItinerary:
    """Drop the anchor: the natural-extension preimage, one level shallower."""
    if it.depth < 1:
        raise ValueError("cannot shift backward past recorded depth")
    x = (it.x0 + it.digits[0]) / it.k
    if x >= 1.0:  # same rounding seam as BackwardItinerary.points
        x = math.nextafter(1.0, 0.0)
    return BackwardItinerary(it.k, x, it.digits[1:])


# -- forward orbits ----------------------------------------------------------
#
# Iterating (k*x) % 1 in float64 sheds log2(k) mantissa bits per step; for
# k a power of two the orbit reaches the fixed point 0 after at most
# ceil(53/log2 k) steps.  That is the true orbit of the dyadic rational the
# float denotes, but it is useless for sampling Lebesgue-typical behavior.
# A Lebesgue-random point has iid uniform base-k digits, and its orbit is
# the digit shift; we simulate it exactly by sliding a window of fresh
# digits through an integer register.


def window_width(k: int) -> int:
    """Digits per register so that k^width is close to (and at most) 2^62."""
    if k > 512:
        raise ValueError("digit-stream orbits support k <= 512")
    w = int(62 / math.log2(k))
    while k ** (w + 1) <= 2**62:
        w += 1
    return w


def orbit_from_digits(k: int, digits, n: int) -> np.ndarray:
    """First n points of the orbit encoded by a base-k digit stream.

    digits must hold at least n + window_width(k) entries; x_j is the
    rational 0.d_{j+1} d_{j+2} ... d_{j+w} read in base k, which matches
    every float orbit point of a Lebesgue-random seed to 62 bits.
    """
    w = window_width(k)
    if len(digits) < n + w:
        raise ValueError(f"need {n + w} digits, got {len(digits)}")
    kw = k**w
    kw1 = k ** (w - 1)
    kw_f = float(kw)
    reg = 0
    for j in range(w):
        reg = reg * k + int(digits[j])
    out = np.empty(n, dtype=np.float64)
    for j in range(n):
        out[j] = reg / kw_f
        reg = (reg % kw1) * k + int(digits[w + j])
    return out


# -- periodic points ---------------------------------------------------------


@dataclass(frozen=True)
class PeriodicPoint:
    """x = j/(k^n - 1) with minimal period n, held exactly."""

    x: Fraction
    period: int

    def as_float(self) -> float:
        return float(self.x)


def _minimal_period(j: int, n: int, k: int) -> int:
    # x = j/(k^n - 1) has period m | n iff (k^m - 1) * j is divisible by k^n - 1
    denom = k**n - 1
    for m in range(1, n):
        if n % m == 0 and (k**m - 1) * j % denom == 0:
            return m
    return n


def periodic_points(m: ExpandingMap, max_period: int) -> list[PeriodicPoint]:
    """All periodic points of minimal period <= max_period, exact rationals.

    f^n fixes exactly the k^n - 1 rationals j/(k^n - 1); each is emitted
    once, tagged with its minimal period.
    """
    if max_period < 1:
        raise ValueError("max_period must be >= 1")
    if m.k**max_period - 1 > MAX_ENUMERATION:
        raise OverflowError(
            f"k^n - 1 = {m.k}^{max_period} - 1 periodic points exceeds the "
            f"enumeration cap {MAX_ENUMERATION}"
        )
    out = []
    for n in range(1, max_period + 1):
        denom = m.k**n - 1
        for j in range(denom):
            if _minimal_period(j, n, m.k) == n:
                out.append(PeriodicPoint(Fraction(j, denom), n))
    return out


def periodic_orbits(m: ExpandingMap, max_period: int) -> list[list[PeriodicPoint]]:
    """Periodic points grouped into orbits, each starting at its smallest
    point, sorted by (period, representative)."""
    seen: set[Fraction] = set()
    orbits = []
    for p in periodic_points(m, max_period):
        if p.x in seen:
            continue
        cycle = [p.x]
        x = (m.k * p.x) % 1
        while x != p.x:
            cycle.append(x)
            x = (m.k * x) % 1
        rep = min(cycle)
        i = cycle.index(rep)
        cycle = cycle[i:] + cycle[:i]
        seen.update(cycle)
        orbits.append([PeriodicPoint(x, p.period) for x in cycle])
    orbits.sort(key=lambda o: (o[0].period, o[0].x))
    return orbits
