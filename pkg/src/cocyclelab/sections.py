"""Projective sections over the circle and the degree obstruction.

An invariant projective section xi (an su-state candidate) must satisfy
xi(f(x)) = A(x) xi(x); comparing degrees of both sides as maps into RP^1
(a circle, so half-turns count) forces k deg(xi) = deg(xi) + d where d is
the twist degree of A.  Over one k-to-1 cover the same argument applies
with 2d.  When neither linear equation has an integer solution no
continuous invariant section can exist, which is the mechanism that keeps
these cocycles away from zero exponents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .circle import ExpandingMap
from .cocycle import CocycleSpec, evaluate, oseledets_stable_direction
from .errors import DegreeCheckError, NoHyperbolicityError, ResolutionError
from .sl2 import ProjPoint, projective_action

PI = math.pi
MAX_GAP = PI / 4.0


@dataclass(frozen=True, eq=False)
class ProjectiveLoop:
    """Directions sampled at j/N, j = 0..N-1, as angles in [0, pi).

    N must be a power of two so refinement by doubling nests exactly.
    """

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64)
        n = s.shape[0]
        if s.ndim != 1 or n < 8 or n & (n - 1):
            raise ValueError("need a 1-d sample array whose length is a power of two >= 8")
        if not np.all(np.isfinite(s)):
            raise ValueError("non-finite loop samples")
        s = np.mod(s, PI)
        s[s >= PI] = 0.0
        object.__setattr__(self, "samples", s)

    @property
    def n(self) -> int:
        return int(self.samples.shape[0])

    def value(self, x: float) -> float:
        """Angle at x by interpolation along the shorter projective arc."""
        x = x % 1.0
        t = x * self.n
        j = int(t)
        frac = t - j
        s0 = self.samples[j]
        s1 = self.samples[(j + 1) % self.n]
        step = (s1 - s0 + PI / 2.0) % PI - PI / 2.0
        return (s0 + frac * step) % PI


def max_adjacent_gap(loop: ProjectiveLoop) -> float:
    """Largest projective distance between consecutive samples (cyclically)."""
    s = loop.samples
    d = np.abs(np.diff(np.concatenate([s, s[:1]])))
    return float(np.max(np.minimum(d, PI - d)))


def winding_number(loop: ProjectiveLoop) -> int:
    """Degree of the loop as a map into RP^1; half-turns count as one.

    Lifts sample to sample by the nearest representative; a jump of pi/4
    or more aborts with ResolutionError since the lift is then unreliable
    (re-sample with n doubled).
    """
    s = loop.samples
    lift = float(s[0])
    for j in range(1, loop.n + 1):
        target = float(s[j % loop.n])
        step = (target - lift + PI / 2.0) % PI - PI / 2.0
        if abs(step) >= MAX_GAP:
            raise ResolutionError(
                f"projective jump {abs(step):.3f} >= pi/4 between samples "
                f"{j - 1} and {j % loop.n} of {loop.n}; refine the grid"
            )
        lift += step
    w = (lift - float(s[0])) / PI
    return int(round(w))


def rotate_loop(loop: ProjectiveLoop, other: ProjectiveLoop) -> ProjectiveLoop:
    """Pointwise angle sum; winding numbers add under this composition."""
    if loop.n != other.n:
        raise ValueError("loops must share a grid")
    return ProjectiveLoop(np.mod(loop.samples + other.samples, PI))


def _action_loop(spec: CocycleSpec, v: ProjPoint, grid_n: int) -> ProjectiveLoop:
    out = np.empty(grid_n)
    for j in range(grid_n):
        out[j] = projective_action(evaluate(spec, j / grid_n), v).angle
    return ProjectiveLoop(out)


def twist_degree(spec: CocycleSpec, grid_n: int = 4096, max_grid: int = 1 << 16) -> int:
    """Degree of x -> A(x) v in RP^1, checked over two reference vectors.

    The value is independent of v (the family of loops is a homotopy), so
    disagreement between v = e1 and v = e2 marks a genuine sampling bug.
    Refines the grid on ResolutionError up to max_grid.
    """
    n = grid_n
    while True:
        try:
            d1 = winding_number(_action_loop(spec, ProjPoint(0.0), n))
            d2 = winding_number(_action_loop(spec, ProjPoint(0.5 * PI), n))
        except ResolutionError:
            if 2 * n > max_grid:
                raise
            n *= 2
            continue
        if d1 != d2:
            raise DegreeCheckError(f"winding {d1} from e1 but {d2} from e2 at grid {n}")
        return d1


@dataclass(frozen=True)
class ObstructionReport:
    """Solvability of the degree equations for invariant sections.

    single: k*m = m + d  over the base circle;
    pair:   k*m = m + 2d over the orientation double cover.
    Degrees are the exact rational solutions d/(k-1) and 2d/(k-1);
    a section can only exist when the relevant one is an integer.
    """

    k: int
    twist_degree: int
    single_section_solvable: bool
    single_degree: Fraction
    pair_section_solvable: bool
    pair_degree: Fraction
    obstructed: bool

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "twist_degree": self.twist_degree,
            "single_section_solvable": self.single_section_solvable,
            "single_degree": str(self.single_degree),
            "pair_section_solvable": self.pair_section_solvable,
            "pair_degree": str(self.pair_degree),
            "obstructed": self.obstructed,
        }


def degree_obstruction(k: int, d: int) -> ObstructionReport:
    """Decide k*m = m + d and its double-cover variant over the integers."""
    if k < 2:
        raise ValueError("k must be >= 2")
    single = Fraction(d, k - 1)
    pair = Fraction(2 * d, k - 1)
    s_ok = single.denominator == 1
    p_ok = pair.denominator == 1
    return ObstructionReport(k, d, s_ok, single, p_ok, pair, not (s_ok or p_ok))


def stable_direction_loop(spec: CocycleSpec, m: ExpandingMap, grid_n: int = 4096,
                          direction_steps: int = 256) -> ProjectiveLoop:
    """Finite-time stable directions over a grid; constant loop if no gap."""
    samples = np.empty(grid_n)
    try:
        for j in range(grid_n):
            samples[j] = oseledets_stable_direction(
                spec, m, j / grid_n, n=direction_steps
            ).angle
    except NoHyperbolicityError:
        samples[:] = 0.0
    return ProjectiveLoop(samples)


def section_consistency_search(spec: CocycleSpec, m: ExpandingMap,
                               grid_n: int = 4096, n_iterations: int = 40,
                               direction_steps: int = 256, seed=None,
                               init: ProjectiveLoop | None = None) -> tuple[ProjectiveLoop, float]:
    """Best-effort search for a continuous section with xi(fx) = A(x) xi(x).

    Seeds from the finite-time stable directions (constant loop if the
    cocycle shows no gap), optionally jitters the seed, then repeatedly
    re-selects xi(y) <- A(x) xi(x) through inverse branch 0.  The returned
    residual is the sup over grid points y of the projective spread of the
    current value of xi(y) together with its k branch updates
    A(x_d) xi(x_d), f(x_d) = y; it can only vanish if a genuine invariant
    continuous section exists, so a residual bounded away from zero across
    seeds is evidence of obstruction.
    """
    if grid_n < 8 or grid_n & (grid_n - 1):
        raise ValueError("grid_n must be a power of two >= 8")
    if n_iterations < 1:
        raise ValueError("n_iterations must be >= 1")

    if init is None:
        init = stable_direction_loop(spec, m, grid_n, direction_steps)
    elif init.n != grid_n:
        raise ValueError("init loop grid does not match grid_n")
    samples = init.samples
    if seed is not None:
        from .cocycle import rng_from

        jitter = rng_from(seed).uniform(-0.3, 0.3, size=grid_n)
        samples = np.mod(samples + jitter, PI)
    loop = ProjectiveLoop(samples)

    for _ in range(n_iterations):
        new = np.empty(grid_n)
        for j in range(grid_n):
            x = (j / grid_n) / m.k  # inverse branch 0
            p = ProjPoint(loop.value(x))
            new[j] = projective_action(evaluate(spec, x), p).angle
        loop = ProjectiveLoop(new)

    return loop, section_residual(spec, m, loop)


def section_residual(spec: CocycleSpec, m: ExpandingMap, loop: ProjectiveLoop) -> float:
    """sup over grid points of the spread of {xi(y)} u {A(x) xi(x): f(x) = y}."""
    from .sl2 import proj_distance

    worst = 0.0
    for j in range(loop.n):
        y = j / loop.n
        cands = [ProjPoint(loop.samples[j])]
        for d in range(m.k):
            x = (y + d) / m.k
            p = ProjPoint(loop.value(x))
            cands.append(projective_action(evaluate(spec, x), p))
        spread = 0.0
        for i in range(len(cands)):
            for l in range(i + 1, len(cands)):
                spread = max(spread, proj_distance(cands[i], cands[l]))
        worst = max(worst, spread)
    return worst
