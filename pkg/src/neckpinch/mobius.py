"""PSL(2,C) algebra: normalization, classification, fixed points, axes,
complex length, pi-rotations, real powers and Jorgensen's number.

Points of CP^1 are Python complex numbers, with ``INF`` standing for the
point at infinity.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    BranchAmbiguity,
    DegenerateGeodesic,
    DegenerateMatrix,
    IdentityInput,
    NoAxis,
)

INF = complex(math.inf, 0.0)
DEFAULT_TOL = 1e-9
_EPS = float(np.finfo(float).eps)


def is_inf(z) -> bool:
    return cmath.isinf(z)


def chordal(z, w) -> float:
    """Chordal distance on the unit sphere (diameter 2)."""
    zi, wi = is_inf(z), is_inf(w)
    if zi and wi:
        return 0.0
    if zi:
        return 2.0 / math.hypot(1.0, abs(w))
    if wi:
        return 2.0 / math.hypot(1.0, abs(z))
    # one factor at a time so huge finite points do not overflow, in sorted
    # order so the result is exactly symmetric
    lo, hi = sorted((math.hypot(1.0, abs(z)), math.hypot(1.0, abs(w))))
    return 2.0 * (abs(z - w) / hi) / lo


def point_to_json(z):
    if is_inf(z):
        return "inf"
    return [z.real, z.imag]


def point_from_json(v):
    if v == "inf":
        return INF
    return complex(v[0], v[1])


def _canonical_sign(entries):
    for x in entries:
        if x != 0:
            ang = cmath.phase(x)
            if -math.pi / 2 < ang <= math.pi / 2:
                return 1
            return -1
    return 1


@dataclass(frozen=True)
class MobiusMap:
    """A PSL(2,C) element, stored with det 1 and a canonical sign."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        a, b, c, d = (complex(x) for x in (self.a, self.b, self.c, self.d))
        det = a * d - b * c
        if not cmath.isfinite(det) or abs(det) < 1e-300:
            raise DegenerateMatrix(f"determinant {det}")
        if abs(det - 1) > 0:
            s = cmath.sqrt(det)
            a, b, c, d = a / s, b / s, c / s, d / s
        sg = _canonical_sign((a, b, c, d))
        if sg < 0:
            a, b, c, d = -a, -b, -c, -d
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @classmethod
    def identity(cls) -> "MobiusMap":
        return cls(1, 0, 0, 1)

    @classmethod
    def from_array(cls, m) -> "MobiusMap":
        return cls(m[0][0], m[0][1], m[1][0], m[1][1])

    @classmethod
    def translation(cls, v) -> "MobiusMap":
        return cls(1, v, 0, 1)

    @classmethod
    def dilation(cls, k) -> "MobiusMap":
        """The map w -> k w, with k a nonzero complex number."""
        s = cmath.sqrt(k)
        return cls(s, 0, 0, 1 / s)

    def array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    def __matmul__(self, other: "MobiusMap") -> "MobiusMap":
        a, b, c, d = self.a, self.b, self.c, self.d
        e, f, g, h = other.a, other.b, other.c, other.d
        return MobiusMap(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def inverse(self) -> "MobiusMap":
        return MobiusMap(self.d, -self.b, -self.c, self.a)

    def power(self, n: int) -> "MobiusMap":
        base = self if n >= 0 else self.inverse()
        out = MobiusMap.identity()
        for _ in range(abs(n)):
            out = out @ base
        return out

    def conjugate_by(self, n: "MobiusMap") -> "MobiusMap":
        """Return n self n^-1."""
        return n @ self @ n.inverse()

    @property
    def trace(self) -> complex:
        return self.a + self.d

    @property
    def tr2(self) -> complex:
        return self.trace ** 2

    def discriminant(self) -> complex:
        """tr^2 - 4, computed from entries without cancellation near +-I."""
        return (self.a - self.d) ** 2 + 4 * self.b * self.c

    def apply(self, z):
        a, b, c, d = self.a, self.b, self.c, self.d
        if is_inf(z):
            return INF if c == 0 else a / c
        den = c * z + d
        if den == 0:
            return INF
        return (a * z + b) / den

    def dist(self, other: "MobiusMap") -> float:
        """Sign-insensitive Frobenius distance."""
        m, n = self.array(), other.array()
        return float(min(np.linalg.norm(m - n), np.linalg.norm(m + n)))

    def equals(self, other: "MobiusMap", tol: float = DEFAULT_TOL) -> bool:
        return self.dist(other) < tol

    def dist_to_identity(self) -> float:
        return self.dist(IDENTITY)

    def to_json(self) -> dict:
        return {k: [getattr(self, k).real, getattr(self, k).imag] for k in "abcd"}

    @classmethod
    def from_json(cls, obj) -> "MobiusMap":
        return cls(*(complex(obj[k][0], obj[k][1]) for k in "abcd"))


IDENTITY = MobiusMap.identity()


def commutator(x: MobiusMap, y: MobiusMap) -> MobiusMap:
    return x @ y @ x.inverse() @ y.inverse()


@dataclass(frozen=True)
class GeodesicH3:
    """Oriented geodesic of H^3 from ideal point p to ideal point q."""

    p: complex
    q: complex

    def __post_init__(self):
        object.__setattr__(self, "p", complex(self.p))
        object.__setattr__(self, "q", complex(self.q))
        if chordal(self.p, self.q) < 1e-14:
            raise DegenerateGeodesic(f"endpoints coincide: {self.p}, {self.q}")

    def reversed(self) -> "GeodesicH3":
        return GeodesicH3(self.q, self.p)

    def moved_by(self, m: MobiusMap) -> "GeodesicH3":
        return GeodesicH3(m.apply(self.p), m.apply(self.q))

    def to_json(self):
        return [point_to_json(self.p), point_to_json(self.q)]

    @classmethod
    def from_json(cls, v):
        return cls(point_from_json(v[0]), point_from_json(v[1]))


@dataclass(frozen=True)
class MobiusClass:
    tag: str  # "Identity" | "Parabolic" | "Elliptic" | "Hyperbolic"
    angle: float | None = None
    length: complex | None = None

    def tr2(self) -> complex:
        if self.tag == "Elliptic":
            return 4 * math.cos(self.angle / 2) ** 2
        if self.tag == "Hyperbolic":
            return 4 * cmath.cosh(self.length / 2) ** 2
        return 4.0


@dataclass(frozen=True)
class AxisResult:
    kind: str  # "Geodesic" | "Point" | "Undefined"
    geodesic: GeodesicH3 | None = None
    point: complex | None = None


def zero_inf_to(p, q) -> MobiusMap:
    """A Mobius map sending 0 to p and infinity to q."""
    if chordal(p, q) < 1e-14:
        raise DegenerateGeodesic(f"endpoints coincide: {p}, {q}")
    if is_inf(q):
        return MobiusMap(1, p, 0, 1)
    if is_inf(p):
        return MobiusMap(q, -1, 1, 0)
    return MobiusMap(q, p, 1, 1)


def three_point_map(z1, z2, z3) -> MobiusMap:
    """The Mobius map sending z1, z2, z3 to 0, 1, infinity."""
    if is_inf(z1):
        return MobiusMap(0, z2 - z3, 1, -z3)
    if is_inf(z2):
        return MobiusMap(1, -z1, 1, -z3)
    if is_inf(z3):
        return MobiusMap(1, -z1, 0, z2 - z1)
    return MobiusMap(z2 - z3, -z1 * (z2 - z3), z2 - z1, -z3 * (z2 - z1))


def _check_tol(tol):
    if tol <= 0:
        raise ValueError("tolerance must be positive")


def classify(m: MobiusMap, tol: float = DEFAULT_TOL) -> MobiusClass:
    """Identity / Parabolic / Elliptic / Hyperbolic.

    All tests read the discriminant tr^2 - 4, which keeps its relative
    precision for near-identity inputs where tr^2 itself does not.
    """
    _check_tol(tol)
    if m.equals(IDENTITY, tol):
        return MobiusClass("Identity")
    disc = m.discriminant()
    # roundoff floor of the discriminant sum, so tiny tolerances stay meaningful
    floor = 64 * _EPS * (abs(m.a - m.d) ** 2 + 4 * abs(m.b) * abs(m.c))
    if abs(disc) < tol + floor:
        return MobiusClass("Parabolic")
    if abs(disc.imag) < tol + floor and -4 - tol <= disc.real < 0:
        half = min(math.sqrt(-disc.real) / 2, 1.0)
        return MobiusClass("Elliptic", angle=2 * math.asin(half))
    return MobiusClass("Hyperbolic", length=complex_length(m))


def _wrap(y: float) -> float:
    """Reduce an angle into (-pi, pi]."""
    y = math.fmod(y, 2 * math.pi)
    if y <= -math.pi:
        y += 2 * math.pi
    elif y > math.pi:
        y -= 2 * math.pi
    return y


def _half_log(m: MobiusMap) -> complex:
    """mu with cosh(mu) = tr/2 for the sign of m with Re tr >= 0, Re mu >= 0.

    Near tr = +-2 it is asinh of the half square root of the discriminant,
    so that near-identity inputs keep full relative precision.  For small
    traces acosh is used instead, because asinh loses half its digits at
    the branch point reached by elliptics of angle near pi.
    """
    tr = m.trace
    if tr.real < 0 or (tr.real == 0 and tr.imag < 0):
        tr = -tr
    if abs(tr) < 1:
        mu = cmath.acosh(tr / 2)
    else:
        mu = cmath.asinh(cmath.sqrt(m.discriminant()) / 2)
    if mu.real < 0 or (mu.real == 0 and mu.imag < 0):
        mu = -mu
    # both are principal here (|Im| <= pi/2), matching Re cosh(mu) >= 0
    return mu


def complex_length(m: MobiusMap) -> complex:
    """z with Re z >= 0 and Im z in (-pi, pi] such that m ~ (w -> e^z w)."""
    if m.discriminant() == 0:
        raise NoAxis("parabolic or identity input")
    z = 2 * _half_log(m)
    y = _wrap(z.imag)
    re = z.real
    if re < 1e-15 * max(1.0, abs(y)):
        re = 0.0
        y = abs(y)
    return complex(re, y)


def fixed_points(m: MobiusMap, tol: float = DEFAULT_TOL) -> list:
    """Fixed points on CP^1; two unless m is parabolic."""
    if m.equals(IDENTITY, tol):
        raise IdentityInput("every point is fixed by the identity")
    a, b, c, d = m.a, m.b, m.c, m.d
    disc = m.discriminant()
    sq = cmath.sqrt(disc)
    bb = d - a
    # roots of c w^2 + bb w - b
    if abs(bb + sq) >= abs(bb - sq):
        qq = -(bb + sq) / 2
    else:
        qq = -(bb - sq) / 2
    w1 = INF if c == 0 else qq / c
    if disc == 0 or abs(disc) < tol:
        # one point within tolerance; w1 is a true root even when c is tiny
        if qq == 0:
            return [0j] if c != 0 else [INF]
        return [w1]
    w2 = -b / qq
    return [w1, w2]


def multiplier(m: MobiusMap, w) -> complex:
    """Derivative of m at a fixed point w (in a chart around w)."""
    lam = m.a if is_inf(w) else m.c * w + m.d
    return 1 / lam ** 2


def axis(m: MobiusMap, tol: float = DEFAULT_TOL) -> AxisResult:
    cls = classify(m, tol)
    if cls.tag == "Identity":
        return AxisResult("Undefined")
    fps = fixed_points(m, tol)
    if cls.tag == "Parabolic":
        return AxisResult("Point", point=fps[0])
    w1, w2 = fps
    k1, k2 = multiplier(m, w1), multiplier(m, w2)
    if cls.tag == "Hyperbolic":
        # repelling -> attracting
        p, q = (w1, w2) if abs(k2) < abs(k1) else (w2, w1)
    else:
        # elliptic: the rotation at q is counterclockwise by the angle in (0, pi)
        if abs(k2.imag) > 1e-12 and k2.imag > 0:
            p, q = w1, w2
        elif abs(k1.imag) > 1e-12 and k1.imag > 0:
            p, q = w2, w1
        else:
            p, q = sorted((w1, w2), key=_point_key)
    return AxisResult("Geodesic", geodesic=GeodesicH3(p, q))


def _point_key(z):
    if is_inf(z):
        return (1, 0.0, 0.0)
    return (0, z.real, z.imag)


def axis_generator(g: GeodesicH3) -> np.ndarray:
    """Traceless G with G^2 = I generating translation along g toward g.q.

    Written directly in the endpoints so that no conjugation roundoff is
    introduced for far-away or nearly coincident endpoints.
    """
    p, q = g.p, g.q
    if is_inf(q):
        return np.array([[1, -2 * p], [0, -1]], dtype=complex)
    if is_inf(p):
        return np.array([[-1, 2 * q], [0, 1]], dtype=complex)
    k = 1 / (q - p)
    return np.array([[(p + q) * k, -2 * p * q * k], [2 * k, -(p + q) * k]], dtype=complex)


def loxodromic(g: GeodesicH3, z: complex) -> MobiusMap:
    """The element acting as w -> e^z w once g is moved to (0, inf)."""
    gm = axis_generator(g)
    ch, sh = cmath.cosh(z / 2), cmath.sinh(z / 2)
    return MobiusMap(ch + sh * gm[0, 0], sh * gm[0, 1], sh * gm[1, 0], ch + sh * gm[1, 1])


def rotation(g: GeodesicH3, theta: float) -> MobiusMap:
    """Rotation by theta about g (counterclockwise looking from q)."""
    return loxodromic(g, 1j * theta)


def pi_rotation(g: GeodesicH3) -> MobiusMap:
    """The elliptic involution with axis g."""
    gm = axis_generator(g)
    return MobiusMap(1j * gm[0, 0], 1j * gm[0, 1], 1j * gm[1, 0], 1j * gm[1, 1])


def branch_ambiguous(m: MobiusMap, tol: float = DEFAULT_TOL) -> bool:
    """True for elliptics whose angle is within tol of pi."""
    t = m.trace
    return abs(t) < tol


def real_power(m: MobiusMap, s: float, tol: float = DEFAULT_TOL) -> MobiusMap:
    """exp(s log m) along the one-parameter subgroup through m.

    The logarithm is taken for the sign of m with Re tr >= 0 (Im tr >= 0 on
    ties), which is the principal branch. At elliptic angle pi both signs
    qualify; a BranchAmbiguity warning is issued and the canonical matrix
    sign is used.
    """
    if branch_ambiguous(m, tol):
        warnings.warn(BranchAmbiguity("elliptic of angle pi"), stacklevel=2)
    return complex_power(m, s)


def complex_power(m: MobiusMap, s: complex) -> MobiusMap:
    """exp(s log m) for complex s, principal branch as in real_power."""
    a, b, c, d = m.a, m.b, m.c, m.d
    tr = a + d
    if tr.real < 0 or (tr.real == 0 and tr.imag < 0):
        a, b, c, d = -a, -b, -c, -d
    if m.discriminant() == 0:
        # parabolic or identity: the log is nilpotent
        ratio, ch = s, 1.0
    else:
        mu = _half_log(m)
        sh = cmath.sinh(mu)
        ratio = cmath.sinh(s * mu) / sh if sh != 0 else s
        ch = cmath.cosh(s * mu)
    xa, xd = (a - d) / 2, (d - a) / 2
    return MobiusMap(ch + ratio * xa, ratio * b, ratio * c, ch + ratio * xd)


def geodesic_distance(g1: GeodesicH3, g2: GeodesicH3) -> float:
    """Endpoint-chordal distance between unoriented geodesics."""
    same = max(chordal(g1.p, g2.p), chordal(g1.q, g2.q))
    swap = max(chordal(g1.p, g2.q), chordal(g1.q, g2.p))
    return min(same, swap)


def jorgensen_certificate(x: MobiusMap, y: MobiusMap) -> float:
    """|tr^2 x - 4| + |tr[x,y] - 2|; below 1 forces non-discreteness."""
    return abs(x.discriminant()) + abs(commutator_trace(x, y) - 2)


def commutator_trace(x: MobiusMap, y: MobiusMap) -> complex:
    """tr(x y x^-1 y^-1), which is independent of the signs of x and y."""
    xa, ya = x.array(), y.array()
    xi, yi = x.inverse().array(), y.inverse().array()
    return complex(np.trace(xa @ ya @ xi @ yi))
