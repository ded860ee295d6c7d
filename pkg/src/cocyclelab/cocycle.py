"""SL(2,R) cocycles A(x) = A0 R(2 pi g(x)) over x -> kx mod 1.

The twist g is an integer winding plus a real trigonometric polynomial,
so the family is closed under composing with further rotations; that is
what makes the perturbation model below exact rather than approximate.

Lyapunov exponents are estimated two independent ways: vector norm
growth along random orbits, and the negative fiber average of
phi(x, v) = log |A(x) v| over the stable direction field.  Random
orbits are simulated through base-k digit streams (orbit_from_digits);
iterating the float map directly would shed mantissa bits and silently
sample the wrong invariant measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .circle import ExpandingMap, apply_map, orbit_from_digits, window_width
from .errors import NoHyperbolicityError, NumericOverflowError
from .sl2 import Mat2, ProjPoint, _svd_raw, op_norm

TWO_PI = 2.0 * math.pi
SQRT2 = math.sqrt(2.0)

DEFAULT_SEED = 31415926


def rng_from(*keys) -> np.random.Generator:
    """Deterministic generator from a path of non-negative integers.

    Nested tuples flatten, so rng_from((seed, trial), 3) and
    rng_from(seed, trial, 3) agree.  Distinct paths give independent
    streams; this is the only seeding convention used in the package.
    """
    flat: list[int] = []
    stack = list(keys)
    while stack:
        k = stack.pop(0)
        if isinstance(k, (tuple, list)):
            stack = list(k) + stack
        else:
            v = int(k)
            if v < 0:
                raise ValueError("seed components must be non-negative")
            flat.append(v)
    if not flat:
        raise ValueError("empty seed path")
    return np.random.default_rng(flat)


@dataclass(frozen=True)
class TwistTerm:
    """One trigonometric term amp * sin(2 pi freq x + phase)."""

    freq: int
    amp: float
    phase: float

    def __post_init__(self):
        if not (isinstance(self.freq, int) and self.freq >= 1):
            raise ValueError(f"frequency must be a positive integer, got {self.freq!r}")
        if not (math.isfinite(self.amp) and math.isfinite(self.phase)):
            raise ValueError("non-finite twist coefficients")


@dataclass(frozen=True)
class CocycleSpec:
    """A(x) = base . R(2 pi g(x)), g(x) = winding*x + sum of twist terms.

    winding is the degree of x -> R(2 pi g(x)) as a circle-valued map;
    trig terms alone cannot carry degree.  theta is the Holder exponent
    the bunching test is run against (1 = Lipschitz).
    """

    base: Mat2
    winding: int = 0
    terms: tuple[TwistTerm, ...] = ()
    theta: float = 1.0

    def __post_init__(self):
        if not isinstance(self.winding, int):
            raise ValueError("winding must be an integer")
        object.__setattr__(self, "terms", tuple(self.terms))
        if not 0.0 < self.theta <= 1.0:
            raise ValueError(f"Holder exponent theta must be in (0, 1], got {self.theta}")

    def twist(self, x: float) -> float:
        g = self.winding * x
        for t in self.terms:
            g += t.amp * math.sin(TWO_PI * t.freq * x + t.phase)
        return g

    def twist_gap(self, x: float, delta: float) -> float:
        """g(x + delta) - g(x) to full relative accuracy in delta.

        Uses sin(a+h) - sin(a) = 2 cos(a + h/2) sin(h/2); the naive
        difference of two twist values loses all significant digits once
        delta drops below 1e-8, which backward orbits reach by depth ~9.
        """
        g = self.winding * delta
        for t in self.terms:
            hf = math.pi * t.freq * delta
            g += 2.0 * t.amp * math.cos(math.pi * t.freq * (2.0 * x + delta) + t.phase) * math.sin(hf)
        return g

    def twist_lipschitz(self) -> float:
        return abs(self.winding) + sum(abs(t.amp) * TWO_PI * t.freq for t in self.terms)

    def sup_norm(self) -> float:
        """sup_x |A(x)|; right rotation factors do not move singular values."""
        return op_norm(self.base)

    def lipschitz(self) -> float:
        """A Lipschitz constant for x -> A(x) in operator norm."""
        return self.sup_norm() * TWO_PI * self.twist_lipschitz()


def full_twist_spec(base: Mat2, theta: float = 1.0) -> CocycleSpec:
    """The canonical degree-one family A(x) = base . R(2 pi x)."""
    return CocycleSpec(base=base, winding=1, terms=(), theta=theta)


def spec_to_json(spec: CocycleSpec) -> dict:
    return {
        "base": spec.base.to_rows(),
        "winding": spec.winding,
        "twist": [{"freq": t.freq, "amp": t.amp, "phase": t.phase} for t in spec.terms],
        "theta": spec.theta,
    }


def spec_from_json(data: dict) -> CocycleSpec:
    try:
        base = Mat2.from_rows(data["base"])
        terms = tuple(
            TwistTerm(int(t["freq"]), float(t["amp"]), float(t.get("phase", 0.0)))
            for t in data.get("twist", [])
        )
        return CocycleSpec(
            base=base,
            winding=int(data.get("winding", 0)),
            terms=terms,
            theta=float(data.get("theta", 1.0)),
        )
    except (KeyError, TypeError) as e:
        raise ValueError(f"malformed cocycle description: {e}") from e


def evaluate(spec: CocycleSpec, x: float) -> Mat2:
    """The cocycle matrix at x."""
    return spec.base @ Mat2.rotation(TWO_PI * spec.twist(x))


def _matrix_consts(spec: CocycleSpec):
    b = spec.base
    terms = tuple((TWO_PI * t.freq, t.amp, t.phase) for t in spec.terms)
    return b.a, b.b, b.c, b.d, float(spec.winding), terms


# -- scaled products ----------------------------------------------------------


@dataclass(frozen=True)
class ScaledMatrix:
    """A matrix product held as exp(log_scale) * M with |M|_F = sqrt(2).

    The true product has det = 1, so det(M) = exp(-2 log_scale); singular
    value ratios of M equal those of the true product.
    """

    a: float
    b: float
    c: float
    d: float
    log_scale: float

    def op_norm_log(self) -> float:
        """log of the largest singular value of the true product."""
        s_max, _, _, _ = _svd_raw(self.a, self.b, self.c, self.d)
        return self.log_scale + math.log(s_max)

    def singular_gap(self) -> float:
        """s_max/s_min of the product; inf once s_min underflows."""
        s_max, s_min, _, _ = _svd_raw(self.a, self.b, self.c, self.d)
        if s_min <= 0.0:
            return math.inf
        return s_max / s_min

    def contracted_direction(self) -> ProjPoint:
        """The input direction most contracted by the product."""
        _, _, _, right = _svd_raw(self.a, self.b, self.c, self.d)
        return ProjPoint(-right + 0.5 * math.pi)

    def matrix(self) -> Mat2:
        """Reconstruct at unit scale; only sane while log_scale is small."""
        s = math.exp(self.log_scale)
        return Mat2(self.a * s, self.b * s, self.c * s, self.d * s)


def _product_step(ma, mb, mc, md, logs, ea, eb, ec, ed):
    # left-multiply by E = [[ea,eb],[ec,ed]], then pull Frobenius norm to sqrt(2)
    na = ea * ma + eb * mc
    nb = ea * mb + eb * md
    nc = ec * ma + ed * mc
    nd = ec * mb + ed * md
    fr = math.sqrt(na * na + nb * nb + nc * nc + nd * nd)
    if not fr > 0.0 or not math.isfinite(fr):
        raise NumericOverflowError("degenerate step in scaled product")
    inv = SQRT2 / fr
    return na * inv, nb * inv, nc * inv, nd * inv, logs + math.log(fr / SQRT2)


def cocycle_product(spec: CocycleSpec, m: ExpandingMap, x: float, n: int) -> ScaledMatrix:
    """A^n(x) = A(f^{n-1}x) ... A(x) as a ScaledMatrix, stable to n = 10^7.

    The base orbit is the true float orbit of x; for k a power of two this
    is the exact orbit of the dyadic rational x denotes.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if not 0.0 <= x < 1.0:
        raise ValueError(f"point {x} outside [0, 1)")
    ba, bb, bc, bd, wind, terms = _matrix_consts(spec)
    k = float(m.k)
    ma, mb, mc, md, logs = 1.0, 0.0, 0.0, 1.0, 0.0
    for _ in range(n):
        g = wind * x
        for tf, amp, ph in terms:
            g += amp * math.sin(tf * x + ph)
        ang = TWO_PI * g
        cs, sn = math.cos(ang), math.sin(ang)
        ea = ba * cs + bb * sn
        eb = -ba * sn + bb * cs
        ec = bc * cs + bd * sn
        ed = -bc * sn + bd * cs
        ma, mb, mc, md, logs = _product_step(ma, mb, mc, md, logs, ea, eb, ec, ed)
        x = (k * x) % 1.0
    return ScaledMatrix(ma, mb, mc, md, logs)


def _product_along(spec: CocycleSpec, xs) -> ScaledMatrix:
    """Scaled product of A over an explicit orbit segment (first entry first)."""
    ba, bb, bc, bd, wind, terms = _matrix_consts(spec)
    ma, mb, mc, md, logs = 1.0, 0.0, 0.0, 1.0, 0.0
    for x in xs:
        g = wind * x
        for tf, amp, ph in terms:
            g += amp * math.sin(tf * x + ph)
        ang = TWO_PI * g
        cs, sn = math.cos(ang), math.sin(ang)
        ea = ba * cs + bb * sn
        eb = -ba * sn + bb * cs
        ec = bc * cs + bd * sn
        ed = -bc * sn + bd * cs
        ma, mb, mc, md, logs = _product_step(ma, mb, mc, md, logs, ea, eb, ec, ed)
    return ScaledMatrix(ma, mb, mc, md, logs)


# -- Lyapunov estimators ------------------------------------------------------


@dataclass(frozen=True)
class LyapunovEstimate:
    value: float
    std_error: float
    n_steps: int
    n_samples: int
    seed: object
    method: str
    degenerate: bool = False

    def to_dict(self) -> dict:
        seed = list(self.seed) if isinstance(self.seed, (tuple, list)) else self.seed
        return {
            "value": self.value,
            "std_error": self.std_error,
            "n_steps": self.n_steps,
            "n_samples": self.n_samples,
            "seed": seed,
            "method": self.method,
            "degenerate": self.degenerate,
        }


def _mean_stderr(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def _indexed_map(fn, n: int, workers: int) -> list:
    """fn(0..n-1) with results in index order regardless of worker count."""
    if workers <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n)))


def _norm_growth_sample(spec: CocycleSpec, k: int, n_steps: int, burn_in: int,
                        rng: np.random.Generator) -> float:
    w = window_width(k)
    total = burn_in + n_steps
    digits = rng.integers(0, k, size=total + w).tolist()
    theta0 = rng.random() * math.pi
    vx, vy = math.cos(theta0), math.sin(theta0)

    ba, bb, bc, bd, wind, terms = _matrix_consts(spec)
    kw1 = k ** (w - 1)
    kw_f = float(k**w)
    reg = 0
    for j in range(w):
        reg = reg * k + digits[j]

    sin, cos, log, sqrt = math.sin, math.cos, math.log, math.sqrt
    acc = 0.0
    for j in range(total):
        x = reg / kw_f
        g = wind * x
        for tf, amp, ph in terms:
            g += amp * sin(tf * x + ph)
        ang = TWO_PI * g
        cs, sn = cos(ang), sin(ang)
        rx = cs * vx - sn * vy
        ry = sn * vx + cs * vy
        wx = ba * rx + bb * ry
        wy = bc * rx + bd * ry
        nrm = sqrt(wx * wx + wy * wy)
        if j >= burn_in:
            acc += log(nrm)
        inv = 1.0 / nrm
        vx = wx * inv
        vy = wy * inv
        reg = (reg % kw1) * k + digits[w + j]
    return acc / n_steps


def lyapunov_norm_growth(spec: CocycleSpec, m: ExpandingMap, n_steps: int,
                         n_samples: int = 32, seed=DEFAULT_SEED,
                         workers: int = 1, burn_in: int | None = None) -> LyapunovEstimate:
    """Mean per-step log growth of a unit vector over random orbits.

    Each sample follows an independent Lebesgue-random orbit (digit-stream
    simulation) from an independent random starting direction; a short
    burn-in lets the vector align before averaging starts.  Bitwise
    reproducible for fixed seed, independent of workers.
    """
    if n_steps < 1 or n_samples < 1:
        raise ValueError("n_steps and n_samples must be >= 1")
    if burn_in is None:
        burn_in = min(100, max(1, n_steps // 10))

    def one(i: int) -> float:
        return _norm_growth_sample(spec, m.k, n_steps, burn_in, rng_from(seed, i))

    values = _indexed_map(one, n_samples, workers)
    mean, se = _mean_stderr(values)
    return LyapunovEstimate(mean, se, n_steps, n_samples, seed, "norm_growth")


def phi(spec: CocycleSpec, x: float, p: ProjPoint) -> float:
    """log |A(x) v| for the unit representative v of p."""
    vx, vy = p.vector()
    wx, wy = evaluate(spec, x).apply(vx, vy)
    return math.log(math.hypot(wx, wy))


def oseledets_stable_direction(spec: CocycleSpec, m: ExpandingMap, x: float,
                               n: int = 256, min_gap: float = 1e3) -> ProjPoint:
    """The most-contracted input direction of A^n(x), a proxy for E^s(x).

    Requires the singular value ratio of the finite product to certify a
    gap of at least min_gap, else raises NoHyperbolicityError.  The base
    orbit is the float orbit of x (exact for k a power of two); the
    direction error from orbit truncation decays like the square of the
    contraction, so modest n already pins E^s to near machine precision.
    """
    prod = cocycle_product(spec, m, x, n)
    gap = prod.singular_gap()
    if not gap >= min_gap:
        raise NoHyperbolicityError(gap, min_gap)
    return prod.contracted_direction()


def _furstenberg_sample(spec: CocycleSpec, m: ExpandingMap, n_direction: int,
                        rng: np.random.Generator) -> float:
    w = window_width(m.k)
    digits = rng.integers(0, m.k, size=n_direction + w)
    xs = orbit_from_digits(m.k, digits, n_direction)
    prod = _product_along(spec, xs)
    gap = prod.singular_gap()
    if not gap >= 1e3:
        raise NoHyperbolicityError(gap, 1e3)
    return -phi(spec, float(xs[0]), prod.contracted_direction())


def lyapunov_furstenberg(spec: CocycleSpec, m: ExpandingMap, n_direction: int = 256,
                         n_samples: int = 32, seed=DEFAULT_SEED,
                         workers: int = 1) -> LyapunovEstimate:
    """Space average of -phi(x, E^s(x)) over random x.

    The stable direction is a function of the forward orbit alone, so a
    finite product of length n_direction determines it; lambda is then
    minus the fiber average of phi over the stable field.  If any sample
    fails the hyperbolicity gap the cocycle is flagged degenerate and the
    estimate reported as 0.
    """
    if n_direction < 8 or n_samples < 1:
        raise ValueError("need n_direction >= 8 and n_samples >= 1")

    def one(i: int) -> float:
        return _furstenberg_sample(spec, m, n_direction, rng_from(seed, i))

    try:
        values = _indexed_map(one, n_samples, workers)
    except NoHyperbolicityError:
        return LyapunovEstimate(0.0, 0.0, n_direction, n_samples, seed,
                                "furstenberg", degenerate=True)
    mean, se = _mean_stderr(values)
    return LyapunovEstimate(mean, se, n_direction, n_samples, seed, "furstenberg")


# -- C0 geometry of the family ------------------------------------------------


class C0Gap(NamedTuple):
    grid: float
    certified: float


def c0_distance(s1: CocycleSpec, s2: CocycleSpec, grid_n: int = 4096) -> C0Gap:
    """sup_x |A(x) - B(x)| by grid scan plus a Lipschitz overshoot bound."""
    if grid_n < 2:
        raise ValueError("grid_n must be >= 2")
    best = 0.0
    for j in range(grid_n):
        x = j / grid_n
        a = evaluate(s1, x)
        b = evaluate(s2, x)
        da, db, dc, dd = a.a - b.a, a.b - b.b, a.c - b.c, a.d - b.d
        s_max, _, _, _ = _svd_raw(da, db, dc, dd)
        if s_max > best:
            best = s_max
    pad = (s1.lipschitz() + s2.lipschitz()) * 0.5 / grid_n
    return C0Gap(best, best + pad)


class BunchingReport(NamedTuple):
    bunched: bool
    margin: float
    sup_certified: float
    sup_grid: float
    theta: float


def u_bunching_check(spec: CocycleSpec, m: ExpandingMap, theta: float | None = None,
                     grid_n: int = 4096) -> BunchingReport:
    """Fiber bunching against base expansion: sup |A||A^-1| sigma^-theta < 1.

    The sup is certified by a grid scan padded with the Lipschitz constant
    of x -> |A(x)||A(x)^-1|.  margin = 1 - certified value; bunched means
    the certified value is below 1, i.e. u-holonomies converge at rate
    margin-ish per backward level.
    """
    if theta is None:
        theta = spec.theta
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must be in (0, 1]")
    grid_norm = 0.0
    grid_cond = 0.0
    for j in range(grid_n):
        a = evaluate(spec, j / grid_n)
        s = op_norm(a)
        grid_norm = max(grid_norm, s)
        grid_cond = max(grid_cond, s * s)  # |A^-1| = |A| in SL(2)
    la = spec.lipschitz()
    sup_norm = grid_norm + la * 0.5 / grid_n
    l_cond = 2.0 * sup_norm * la
    weight = m.sigma ** (-theta)
    sup_cert = (grid_cond + l_cond * 0.5 / grid_n) * weight
    return BunchingReport(sup_cert < 1.0, 1.0 - sup_cert, sup_cert, grid_cond * weight, theta)


def perturb(spec: CocycleSpec, epsilon: float, seed) -> CocycleSpec:
    """B = A . R(2 pi epsilon g) for a random trig polynomial with sup |g| <= 1.

    Rotations commute, so B stays inside the family: the perturbation just
    adds epsilon-scaled twist terms.  |B - A|_C0 <= 2 pi epsilon sup|A|.
    epsilon = 0 returns spec itself.
    """
    if epsilon < 0.0:
        raise ValueError("epsilon must be >= 0")
    if epsilon == 0.0:
        return spec
    rng = rng_from(seed)
    degree = 8
    amps = rng.uniform(-1.0, 1.0, size=degree)
    phases = rng.uniform(0.0, TWO_PI, size=degree)
    amps /= np.sum(np.abs(amps))
    new = tuple(
        TwistTerm(f + 1, epsilon * float(amps[f]), float(phases[f]))
        for f in range(degree)
    )
    return replace(spec, terms=spec.terms + new)
