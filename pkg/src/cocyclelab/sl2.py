"""Exact-ish SL(2,R) arithmetic and the induced projective circle action.

Matrices are kept on the det = 1 surface by renormalizing with sqrt(det)
at construction time, so long chains of products do not drift off the
group.  Directions in RP^1 are angles modulo pi with the metric
d(p, q) = min(|p - q|, pi - |p - q|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NumericOverflowError

DET_TOL = 1e-9


def _renorm(a: float, b: float, c: float, d: float) -> tuple[float, float, float, float]:
    if not (math.isfinite(a) and math.isfinite(b) and math.isfinite(c) and math.isfinite(d)):
        raise NumericOverflowError("non-finite matrix entries; use scaled products for long chains")
    det = a * d - b * c
    if not det > 0.0:
        raise ValueError(f"determinant {det} not positive; not in SL(2,R) up to scale")
    if abs(det - 1.0) <= DET_TOL:
        return a, b, c, d
    s = 1.0 / math.sqrt(det)
    return a * s, b * s, c * s, d * s


@dataclass(frozen=True)
class Mat2:
    """A 2x2 real matrix with det = 1, renormalized on construction."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        a, b, c, d = _renorm(self.a, self.b, self.c, self.d)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @staticmethod
    def identity() -> "Mat2":
        return Mat2(1.0, 0.0, 0.0, 1.0)

    @staticmethod
    def diagonal(s: float) -> "Mat2":
        """diag(s, 1/s) for s > 0."""
        if not s > 0.0:
            raise ValueError("diagonal entry must be positive")
        return Mat2(s, 0.0, 0.0, 1.0 / s)

    @staticmethod
    def rotation(angle: float) -> "Mat2":
        c, s = math.cos(angle), math.sin(angle)
        return Mat2(c, -s, s, c)

    @staticmethod
    def from_rows(rows) -> "Mat2":
        (a, b), (c, d) = rows
        return Mat2(float(a), float(b), float(c), float(d))

    def to_rows(self) -> list[list[float]]:
        return [[self.a, self.b], [self.c, self.d]]

    def inverse(self) -> "Mat2":
        # adjugate; det is already 1
        return Mat2(self.d, -self.b, -self.c, self.a)

    def trace(self) -> float:
        return self.a + self.d

    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def apply(self, x: float, y: float) -> tuple[float, float]:
        return self.a * x + self.b * y, self.c * x + self.d * y

    def __matmul__(self, other: "Mat2") -> "Mat2":
        return mat_product(self, other)


def mat_product(m1: Mat2, m2: Mat2) -> Mat2:
    """m1 @ m2.  Raises NumericOverflowError if entries leave float range."""
    return Mat2(
        m1.a * m2.a + m1.b * m2.c,
        m1.a * m2.b + m1.b * m2.d,
        m1.c * m2.a + m1.d * m2.c,
        m1.c * m2.b + m1.d * m2.d,
    )


def op_norm(m: Mat2) -> float:
    """Largest singular value: hypot((a+d)/2,(c-b)/2) + hypot((a-d)/2,(c+b)/2)."""
    return (math.hypot(m.a + m.d, m.c - m.b) + math.hypot(m.a - m.d, m.c + m.b)) * 0.5


@dataclass(frozen=True)
class ProjPoint:
    """A direction in RP^1, stored as an angle in [0, pi)."""

    angle: float

    def __post_init__(self):
        if not math.isfinite(self.angle):
            raise ValueError("non-finite angle")
        a = self.angle % math.pi
        if a >= math.pi:  # x % pi can round up to pi for tiny negative x
            a = 0.0
        object.__setattr__(self, "angle", a)

    @staticmethod
    def from_vector(x: float, y: float) -> "ProjPoint":
        if x == 0.0 and y == 0.0:
            raise ValueError("zero vector has no direction")
        return ProjPoint(math.atan2(y, x))

    def vector(self) -> tuple[float, float]:
        """The unit representative with angle in [0, pi)."""
        return math.cos(self.angle), math.sin(self.angle)


def proj_distance(p: ProjPoint, q: ProjPoint) -> float:
    """Projective metric; bounded by pi/2."""
    d = abs(p.angle - q.angle)
    return min(d, math.pi - d)


def projective_action(m: Mat2, p: ProjPoint) -> ProjPoint:
    x, y = p.vector()
    wx, wy = m.apply(x, y)
    return ProjPoint(math.atan2(wy, wx))


def projective_derivative(m: Mat2, p: ProjPoint) -> float:
    """Derivative of the circle map induced by m at p, in the angle metric.

    For det = 1 this is 1 / |m v|^2 with v the unit representative; it lies
    in [cond(m)^-1, cond(m)] where cond = |m| |m^-1|.
    """
    x, y = p.vector()
    wx, wy = m.apply(x, y)
    return 1.0 / (wx * wx + wy * wy)


@dataclass(frozen=True)
class SvdPair:
    """Singular data of a Mat2: s_max >= 1 >= s_min > 0 with s_max*s_min = 1,
    u_dir the left (image) direction of s_max, v_dir the right one."""

    s_max: float
    s_min: float
    u_dir: ProjPoint
    v_dir: ProjPoint


def _svd_raw(a: float, b: float, c: float, d: float) -> tuple[float, float, float, float]:
    """(s_max, s_min, left, right) with M = R(left) diag(s_max, s_min) R(right).

    Closed form: with E=(a+d)/2, F=(a-d)/2, G=(c+b)/2, H=(c-b)/2 the
    singular values are hypot(E,H) +- hypot(F,G), left = (a2+a1)/2 and
    right = (a2-a1)/2 for a1 = atan2(G,F), a2 = atan2(H,E).  Assumes
    det >= 0.  Note the right factor is R(right), not its transpose, so
    the most-expanded input direction has angle -right.
    """
    e = 0.5 * (a + d)
    f = 0.5 * (a - d)
    g = 0.5 * (c + b)
    h = 0.5 * (c - b)
    q = math.hypot(e, h)
    r = math.hypot(f, g)
    s_max = q + r
    s_min = q - r
    a1 = math.atan2(g, f)
    a2 = math.atan2(h, e)
    left = 0.5 * (a2 + a1)
    right = 0.5 * (a2 - a1)
    return s_max, s_min, left, right


def svd2(m: Mat2) -> SvdPair:
    """Closed-form SVD.  u_dir = direction of m v_max, v_dir = direction v_max."""
    s_max, s_min, left, right = _svd_raw(m.a, m.b, m.c, m.d)
    return SvdPair(s_max, s_min, ProjPoint(left), ProjPoint(-right))


def is_hyperbolic(m: Mat2, tol: float = 1e-9) -> bool:
    """|trace| > 2 + tol: real eigenvalues off the unit circle."""
    return abs(m.a + m.d) > 2.0 + tol
