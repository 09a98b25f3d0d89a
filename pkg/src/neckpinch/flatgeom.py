"""Flat geometry of quadratic differentials with poles of order at most two.

Polygon-gluing (half-)translation surfaces with their cone points, edge-loop
periods, local pole models and residues, flat and round-annulus moduli,
injectivity radii by unfolding, end classification and period grafting.

Flat coordinates are complex numbers in units of |sqrt q|.  In the
exponential developing model a flat period c produces the loxodromic
w -> exp(SQRT2 * c) w, so the real part of c carries translation and the
imaginary part carries rotation.
"""

from __future__ import annotations

import cmath
import heapq
import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import BadGluing, NotOrderTwo, OpenPath

SQRT2 = math.sqrt(2.0)
TWO_PI = 2 * math.pi
GB_TOL = 1e-9
LENGTH_TOL = 1e-12


# ---------------------------------------------------------------- surfaces

@dataclass(frozen=True)
class Gluing:
    """Edge (p, i) glued to edge (q, j) by a translation or a half-turn."""

    p: int
    i: int
    q: int
    j: int
    kind: str = "translation"


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _signed_area(poly):
    z = np.asarray(poly)
    return 0.5 * float(np.sum((z.conj() * np.roll(z, -1)).imag))


class PolygonSurface:
    """Counterclockwise polygons with every edge glued to exactly one other.

    Edge i of a polygon runs from vertex i to vertex i+1.  A translation
    gluing needs opposite edge vectors, a half-turn gluing equal ones.
    Construction validates the pairing and asserts Gauss-Bonnet.
    """

    def __init__(self, polygons, gluings):
        self.polygons = [tuple(complex(v) for v in poly) for poly in polygons]
        self.gluings = [g if isinstance(g, Gluing) else Gluing(*g) for g in gluings]
        self.partner = {}
        self._check()
        self._vertex_classes()
        self.scale = max(
            max(abs(a - b) for a in poly for b in poly) for poly in self.polygons
        )
        residual = self.gauss_bonnet_residual()
        if residual > GB_TOL:
            raise BadGluing((), f"Gauss-Bonnet residual {residual:.3g}")

    # construction ---------------------------------------------------------
    def _check(self):
        for k, poly in enumerate(self.polygons):
            if len(poly) < 3:
                raise BadGluing((), f"polygon {k} has fewer than three vertices")
            if _signed_area(poly) <= 0:
                raise BadGluing((), f"polygon {k} is not counterclockwise")
        for g in self.gluings:
            pair = ((g.p, g.i), (g.q, g.j))
            if g.kind not in ("translation", "rotation"):
                raise BadGluing(pair, f"unknown gluing kind {g.kind!r}")
            for e in pair:
                if not (0 <= e[0] < len(self.polygons) and 0 <= e[1] < len(self.polygons[e[0]])):
                    raise BadGluing(pair, f"no such edge {e}")
                if e in self.partner:
                    raise BadGluing(pair, f"edge {e} glued twice")
            if pair[0] == pair[1]:
                raise BadGluing(pair, "edge glued to itself")
            ei, ej = self.edge_vector(g.p, g.i), self.edge_vector(g.q, g.j)
            if abs(abs(ei) - abs(ej)) > LENGTH_TOL * max(1.0, abs(ei)):
                raise BadGluing(pair, f"lengths differ: {abs(ei)} vs {abs(ej)}")
            want = -ei if g.kind == "translation" else ei
            if abs(ej - want) > LENGTH_TOL * max(1.0, abs(ei)):
                raise BadGluing(pair, f"edge vectors {ei} and {ej} do not match a {g.kind}")
            sigma = 1 if g.kind == "translation" else -1
            a_i = self.polygons[g.p][g.i]
            a_j = self.polygons[g.q][g.j]
            b_j = a_j + ej
            # chart change carrying a point of edge i to the same point of edge j
            shift = b_j - a_i if sigma == 1 else a_i + b_j
            self.partner[(g.p, g.i)] = (g.q, g.j, sigma, shift)
            self.partner[(g.q, g.j)] = (g.p, g.i, sigma, -sigma * shift)
        for k, poly in enumerate(self.polygons):
            for i in range(len(poly)):
                if (k, i) not in self.partner:
                    raise BadGluing(((k, i),), "edge left unglued")

    def _vertex_classes(self):
        corners = [(k, i) for k, poly in enumerate(self.polygons) for i in range(len(poly))]
        uf = _UnionFind(corners)
        for g in self.gluings:
            n_p, n_q = len(self.polygons[g.p]), len(self.polygons[g.q])
            uf.union((g.p, g.i), (g.q, (g.j + 1) % n_q))
            uf.union((g.p, (g.i + 1) % n_p), (g.q, g.j))
        roots = sorted({uf.find(c) for c in corners})
        index = {r: n for n, r in enumerate(roots)}
        self.vertex_class = {c: index[uf.find(c)] for c in corners}
        self.class_angle = [0.0] * len(roots)
        for c in corners:
            self.class_angle[self.vertex_class[c]] += self.interior_angle(*c)

    # geometry -------------------------------------------------------------
    def edge_vector(self, k, i):
        poly = self.polygons[k]
        return poly[(i + 1) % len(poly)] - poly[i]

    def interior_angle(self, k, i):
        poly = self.polygons[k]
        v = poly[i]
        ang = cmath.phase((poly[i - 1] - v) / (poly[(i + 1) % len(poly)] - v))
        return ang if ang > 0 else ang + TWO_PI

    @property
    def euler_characteristic(self):
        return len(self.class_angle) - len(self.gluings) + len(self.polygons)

    @property
    def genus(self):
        return (2 - self.euler_characteristic) // 2

    def is_cone(self, cls):
        return abs(self.class_angle[cls] - TWO_PI) > GB_TOL

    def gauss_bonnet_residual(self):
        total = sum(TWO_PI - a for a in self.class_angle)
        return abs(total - TWO_PI * self.euler_characteristic)

    def scaled(self, k):
        return PolygonSurface([[k * v for v in p] for p in self.polygons], self.gluings)

    # serialization --------------------------------------------------------
    def to_json(self):
        return {
            "polygons": [[[v.real, v.imag] for v in p] for p in self.polygons],
            "pairs": [[[g.p, g.i], [g.q, g.j], g.kind] for g in self.gluings],
        }

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        polys = [[complex(x, y) for x, y in p] for p in obj["polygons"]]
        glue = [Gluing(a[0], a[1], b[0], b[1], kind) for a, b, kind in obj["pairs"]]
        return cls(polys, glue)


def cone_angles(s: PolygonSurface):
    """(representative corner, total angle) for every vertex class whose angle is not 2*pi."""
    reps = {}
    for corner, cls in sorted(s.vertex_class.items()):
        reps.setdefault(cls, corner)
    return [(reps[c], a) for c, a in enumerate(s.class_angle) if s.is_cone(c)]


def square_torus(side=1.0):
    z = [0, side, side + side * 1j, side * 1j]
    return PolygonSurface([z], [Gluing(0, 0, 0, 2), Gluing(0, 1, 0, 3)])


def lshape(width1=2.0, height1=1.0, width2=1.0, height2=2.0):
    """[0,width1]x[0,height1] union [0,width2]x[0,height2], opposite sides glued.

    Eight vertices: the bottom is split at width2 and the left side at
    height1.  The result has genus two with a single cone point of angle 6*pi.
    """
    if not (0 < width2 < width1 and 0 < height1 < height2):
        raise BadGluing((), f"notch does not fit: {(width1, height1, width2, height2)}")
    z = [0, width2, width1, width1 + 1j * height1, width2 + 1j * height1,
         width2 + 1j * height2, 1j * height2, 1j * height1]
    glue = [Gluing(0, 0, 0, 5), Gluing(0, 1, 0, 3), Gluing(0, 2, 0, 7), Gluing(0, 4, 0, 6)]
    return PolygonSurface([z], glue)


# ---------------------------------------------------------------- periods

def period(s: PolygonSurface, edge_loop) -> complex:
    """Sum of the oriented edge vectors of a closed edge path.

    edge_loop lists (polygon, edge, +1 or -1).  Consecutive edges must meet at
    the same vertex class of the surface, and so must the last and the first.
    """
    if not edge_loop:
        return 0j
    ends = []
    total = 0j
    for k, i, sign in edge_loop:
        if sign not in (1, -1):
            raise OpenPath(f"orientation must be +1 or -1, got {sign}")
        n = len(s.polygons[k])
        a, b = s.vertex_class[(k, i)], s.vertex_class[(k, (i + 1) % n)]
        ends.append((a, b) if sign == 1 else (b, a))
        total += sign * s.edge_vector(k, i)
    for step, ((_, end), (start, _)) in enumerate(zip(ends, ends[1:] + ends[:1])):
        if end != start:
            raise OpenPath(f"edge {step} ends at vertex class {end}, next starts at {start}")
    return total


def canonical_sign(z: complex) -> complex:
    """Representative of {z, -z} with Re >= 0, and Im >= 0 when Re = 0."""
    if z.real < 0 or (z.real == 0 and z.imag < 0):
        return -z
    return z


@dataclass(frozen=True)
class PoleModel:
    """q = r^2 z^-2 dz^2 near the puncture when order is 2."""

    r: complex
    order: int = 2

    def __post_init__(self):
        if self.order not in (0, 1, 2):
            raise ValueError(f"pole order must be 0, 1 or 2, got {self.order}")


def contour_period(p: PoleModel) -> complex:
    """The loop integral of sqrt q once around the puncture, before sign choice."""
    if p.order != 2 or p.r == 0:
        raise NotOrderTwo(f"pole of order {p.order} with r = {p.r}")
    return 2j * math.pi * complex(p.r)


def residue(p: PoleModel) -> complex:
    return canonical_sign(contour_period(p))


# ---------------------------------------------------------------- moduli

@dataclass(frozen=True)
class FlatCylinder:
    period: complex
    height: float

    def __post_init__(self):
        if abs(self.period) == 0 or not self.height > 0:
            raise ValueError(f"invalid flat cylinder c={self.period}, h={self.height}")


@dataclass(frozen=True)
class ExpandingCylinder:
    """Round annulus r1 < |z| < r2 with the flat metric |dz|."""

    r1: float
    r2: float
    shrinking: bool = True

    def __post_init__(self):
        if not 0 < self.r1 < self.r2:
            raise ValueError(f"need 0 < r1 < r2, got {self.r1}, {self.r2}")


def modulus(c) -> float:
    if isinstance(c, FlatCylinder):
        return c.height / abs(c.period)
    return math.log(c.r2 / c.r1) / TWO_PI


def composite_modulus_bounds(parts, total_estimate):
    """Sum of the part moduli, and whether it stays below the enclosing estimate."""
    lower = math.fsum(modulus(p) for p in parts)
    return lower, lower <= total_estimate + 1e-9


def nested_annulus_family(flat_modulus, collar=0.25, expanding_modulus=1.0):
    """Three disjoint nested annuli inside one round annulus.

    An expanding piece, a flat cylinder of the given modulus and a second
    expanding piece are stacked, separated by collars of modulus ``collar``.
    The flat piece sits in the round model through exp, which is conformal.
    Returns (parts, enclosing annulus).
    """
    radii = [1.0]
    for m in (expanding_modulus, collar, flat_modulus, collar, expanding_modulus):
        radii.append(radii[-1] * math.exp(TWO_PI * m))
    inner = ExpandingCylinder(radii[0], radii[1])
    flat = FlatCylinder(1.0 + 0j, flat_modulus)
    outer = ExpandingCylinder(radii[4], radii[5], shrinking=False)
    return [inner, flat, outer], ExpandingCylinder(radii[0], radii[5])


def cylinder_report_csv(rows):
    """rows: iterable of (FlatCylinder, classification tag)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["period_re", "period_im", "height", "modulus", "classification"])
    for cyl, tag in rows:
        w.writerow([repr(cyl.period.real), repr(cyl.period.imag), repr(cyl.height),
                    repr(modulus(cyl)), tag])
    return buf.getvalue()


# ---------------------------------------------------------------- unfolding

def _inside(poly, z):
    """Strict point-in-polygon by crossing parity."""
    inside = False
    n = len(poly)
    for k in range(n):
        a, b = poly[k], poly[(k + 1) % n]
        if (a.imag > z.imag) != (b.imag > z.imag):
            x = a.real + (z.imag - a.imag) * (b.real - a.real) / (b.imag - a.imag)
            if x > z.real:
                inside = not inside
    return inside


def _boundary_distance(poly, z):
    best = math.inf
    n = len(poly)
    for k in range(n):
        a, b = poly[k], poly[(k + 1) % n]
        e = b - a
        t = min(1.0, max(0.0, ((z - a) * e.conjugate()).real / abs(e) ** 2))
        best = min(best, abs(z - (a + t * e)))
    return best


def _cross(x, y):
    return (x.conjugate() * y).imag


def _in_triangle(tri, z, tol):
    a, b, c = tri
    return min(_cross(b - a, z - a) / abs(b - a), _cross(c - b, z - b) / abs(c - b),
               _cross(a - c, z - c) / abs(a - c)) >= -tol


def _triangulate(poly, tol):
    """Ear clipping of a counterclockwise simple polygon; returns index triples."""
    idx = list(range(len(poly)))
    out = []
    while len(idx) > 3:
        for n in range(len(idx)):
            i0, i1, i2 = idx[n - 1], idx[n], idx[(n + 1) % len(idx)]
            a, b, c = poly[i0], poly[i1], poly[i2]
            if _cross(b - a, c - b) <= tol * abs(b - a) * abs(c - b):
                continue
            tri = (a, b, c)
            if any(_in_triangle(tri, poly[j], tol * abs(c - a)) for j in idx if j not in (i0, i1, i2)):
                continue
            out.append((i0, i1, i2))
            idx.pop(n)
            break
        else:
            raise BadGluing((), "polygon could not be triangulated")
    out.append(tuple(idx))
    return out


class _Mesh:
    """Triangles of all polygons with the chart change across each side.

    Side m of a triangle joins its corners m and m+1; across it lies
    (triangle, side, sigma, shift) with z' = sigma * z + shift.
    """

    def __init__(self, s: PolygonSurface):
        self.s = s
        tol = 1e-12
        self.tris, self.corner_class, self.poly_of = [], [], []
        owner = {}
        for k, poly in enumerate(s.polygons):
            n = len(poly)
            for tri in _triangulate(poly, tol):
                t = len(self.tris)
                self.tris.append(tuple(poly[i] for i in tri))
                self.corner_class.append(tuple(s.vertex_class[(k, i)] for i in tri))
                self.poly_of.append(k)
                for m in range(3):
                    i, j = tri[m], tri[(m + 1) % 3]
                    if j == (i + 1) % n:
                        owner[("edge", k, i)] = (t, m)
                    else:
                        owner[("diag", k, min(i, j), max(i, j), i)] = (t, m)
        self.across = {}
        for key, (t, m) in owner.items():
            if key[0] == "edge":
                _, k, i = key
                q, j, sigma, shift = s.partner[(k, i)]
                t2, m2 = owner[("edge", q, j)]
                self.across[(t, m)] = (t2, m2, sigma, shift)
            else:
                _, k, lo, hi, i = key
                other = hi if i == lo else lo
                t2, m2 = owner[("diag", k, lo, hi, other)]
                self.across[(t, m)] = (t2, m2, 1, 0j)


def _segment_distance(z, a, b):
    e = b - a
    t = min(1.0, max(0.0, ((z - a) * e.conjugate()).real / abs(e) ** 2))
    return abs(z - (a + t * e))


class _InjectivityContext:
    def __init__(self, s: PolygonSurface):
        self.s = s
        self.mesh = _Mesh(s)

    def radius_at(self, k, z, max_windows=200000):
        s, mesh = self.s, self.mesh
        tol = 1e-12 * s.scale
        homes = [t for t, tri in enumerate(mesh.tris)
                 if mesh.poly_of[t] == k and _in_triangle(tri, z, tol)]
        if not homes:
            raise ValueError(f"point {z} is not inside polygon {k}")
        root = homes[0]
        best_cone, best_loop = math.inf, math.inf
        tri = mesh.tris[root]
        for m in range(3):
            if s.is_cone(mesh.corner_class[root][m]):
                best_cone = min(best_cone, abs(tri[m] - z))
        heap = []
        count = 0
        for m in range(3):
            a, b = tri[m], tri[(m + 1) % 3]
            heapq.heappush(heap, (_segment_distance(z, a, b), count, root, m, 1, 0j, a - z, b - z))
            count += 1
        while heap:
            dist, _, t, m, sg, off, lo, hi = heapq.heappop(heap)
            if dist >= min(best_cone, best_loop / 2) * 2:
                break
            if count > max_windows:
                raise RuntimeError("window unfolding did not terminate")
            t2, m2, sigma, shift = mesh.across[(t, m)]
            # a point w of t2 sits at sg2 * w + off2 in the developed plane
            sg2 = sg * sigma
            off2 = off - sg2 * shift
            tri2 = [sg2 * v + off2 for v in mesh.tris[t2]]
            a, b, w = tri2[(m2 + 1) % 3], tri2[m2], tri2[(m2 + 2) % 3]
            if mesh.poly_of[t2] == k and t2 in homes:
                image = sg2 * z + off2
                v = image - z
                if abs(v) > tol and _cross(lo, v) >= -tol * abs(v) and _cross(v, hi) >= -tol * abs(v):
                    best_loop = min(best_loop, abs(v))
            dw = w - z
            c_lo, c_hi = _cross(lo, dw), _cross(dw, hi)
            if c_lo >= 0 and c_hi >= 0 and s.is_cone(mesh.corner_class[t2][(m2 + 2) % 3]):
                best_cone = min(best_cone, abs(dw))
            # rays between lo and the direction to w leave through side a-w
            children = []
            if c_lo > 0:
                children.append(((m2 + 1) % 3, lo, dw if c_hi > 0 else hi, a, w))
            if c_hi > 0:
                children.append(((m2 + 2) % 3, dw if c_lo > 0 else lo, hi, w, b))
            for side, clo, chi, p, q in children:
                if _cross(clo, chi) <= 0:
                    continue
                count += 1
                heapq.heappush(heap, (_segment_distance(z, p, q), count, t2, side, sg2, off2, clo, chi))
        return min(best_cone, best_loop / 2)


def injectivity_radius(s: PolygonSurface, k, z, _ctx=None):
    """Radius of the largest embedded flat disk centred at z in polygon k.

    This is the smaller of the distance to the cone points and half the
    shortest straight geodesic loop based at z.
    """
    ctx = _ctx or _InjectivityContext(s)
    return ctx.radius_at(k, complex(z))


def grid_points(s: PolygonSurface, density):
    """Points (k, z) on the lattice of step 1/density of each polygon's bounding box.

    Only points strictly inside a polygon are kept; refining the density by an
    integer factor gives a superset.
    """
    out = []
    for k, poly in enumerate(s.polygons):
        xs = [v.real for v in poly]
        ys = [v.imag for v in poly]
        x0, y0, w, h = min(xs), min(ys), max(xs) - min(xs), max(ys) - min(ys)
        for a in range(1, density):
            for b in range(1, density):
                z = complex(x0 + w * a / density, y0 + h * b / density)
                if _inside(poly, z) and _boundary_distance(poly, z) > 1e-12 * s.scale:
                    out.append((k, z))
    return out


def upper_injectivity_radius(s: PolygonSurface, grid=16) -> float:
    """Largest injectivity radius over the sample grid."""
    ctx = _InjectivityContext(s)
    return max(ctx.radius_at(k, z) for k, z in grid_points(s, grid))


# ---------------------------------------------------------------- ends

@dataclass(frozen=True)
class EndDescriptor:
    """How an end of the flat surface looks.

    kind is "ShrinkingExpanding" or "HalfInfiniteFlat"; a flat end carries its
    period c and the angle in [0, pi/2] between its circumferences and the
    foliation carrying translation.
    """

    kind: str
    period: complex | None = None
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in ("ShrinkingExpanding", "HalfInfiniteFlat"):
            raise ValueError(f"unknown end kind {self.kind!r}")
        if self.kind == "HalfInfiniteFlat":
            if self.period is None or self.period == 0:
                raise ValueError("flat end needs a nonzero period")
            if not 0 <= self.angle <= math.pi / 2 + 1e-15:
                raise ValueError(f"angle {self.angle} outside [0, pi/2]")


def flat_end(c: complex) -> EndDescriptor:
    c = complex(c)
    return EndDescriptor("HalfInfiniteFlat", c, math.atan2(abs(c.imag), abs(c.real)))


@dataclass(frozen=True)
class CuspType:
    tag: str  # ParabolicHoroball | Hyperbolic | Elliptic | IdentityOrParabolic
    length: complex | None = None
    angle: float | None = None
    wraps: int | None = None


def classify_cusp(e: EndDescriptor, tol: float = 1e-9) -> CuspType:
    if e.kind == "ShrinkingExpanding":
        return CuspType("ParabolicHoroball")
    if e.angle < math.pi / 2 - tol:
        return CuspType("Hyperbolic", length=SQRT2 * e.period)
    total = SQRT2 * abs(e.period.imag)
    k = round(total / TWO_PI)
    if abs(total - TWO_PI * k) <= tol:
        return CuspType("IdentityOrParabolic", wraps=k)
    n = math.floor(total / TWO_PI)
    return CuspType("Elliptic", angle=total - TWO_PI * n, wraps=n)


def graft_period(c: FlatCylinder, n: int) -> FlatCylinder:
    """Insert n full turns into the cylinder.

    The period gains 2*pi*n/SQRT2 in the rotation direction (the sign of its
    imaginary part, or +i when that vanishes), which leaves the exponential
    holonomy unchanged.  The inserted band has that same height and the new
    circumference, so the moduli add.
    """
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"graft count must be a positive integer, got {n}")
    step = TWO_PI * n / SQRT2
    direction = -1j if c.period.imag < 0 else 1j
    new_period = c.period + step * direction
    new_mod = modulus(c) + step / abs(new_period)
    return FlatCylinder(new_period, new_mod * abs(new_period))


__all__ = [
    "SQRT2", "Gluing", "PolygonSurface", "cone_angles", "square_torus", "lshape",
    "period", "canonical_sign", "PoleModel", "contour_period", "residue",
    "FlatCylinder", "ExpandingCylinder", "modulus", "composite_modulus_bounds",
    "nested_annulus_family", "cylinder_report_csv", "injectivity_radius",
    "grid_points", "upper_injectivity_radius", "EndDescriptor", "flat_end",
    "CuspType", "classify_cusp", "graft_period",
]
