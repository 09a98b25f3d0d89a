"""Neck-pinching degeneration paths and their certification.

Both scenarios are built in a standard frame where the base point p is
infinity and the reference geodesic runs from 0 to infinity; the finished
representation is moved to the configured frame at the end.
"""

from __future__ import annotations

import cmath
import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .errors import (
    BranchAmbiguity,
    BranchSelectionFailure,
    ConfigError,
    NeckpinchError,
    RootBracketFailure,
    SolverFailure,
)
from .mobius import (
    INF,
    GeodesicH3,
    MobiusMap,
    axis,
    axis_generator,
    chordal,
    classify,
    complex_length,
    complex_power,
    geodesic_distance,
    is_inf,
    jorgensen_certificate,
    loxodromic,
    pi_rotation,
    point_from_json,
    point_to_json,
    real_power,
    rotation,
    zero_inf_to,
)
from .surface_rep import (
    SurfacePresentation,
    SurfaceRep,
    Word,
    amalgamate,
    elementary_type,
    evaluate,
    lshape_rep,
    mirror,
    one_holed_torus_from_rotations,
    pants_from_rotations,
    relator_defect,
)

SCENARIOS = ("HyperbolicNeck", "EllipticNeck")


@dataclass(frozen=True)
class ScenarioConfig:
    """Schedules and seeds for one scenario run.

    ``kappa`` scales the neck schedule (translation length or rotation
    angle, both ``kappa / t**2``); ``axis_scale`` scales how fast the small
    axes run off to p; ``plane_offset`` is the half distance between the two
    planes carrying the small hyperbolics.
    """

    scenario: str
    times: tuple
    base_point: complex = INF
    reference_endpoint: complex = 0j
    lshape: tuple = (2.0, 1.0, 1.0, 2.0)
    kappa: float | None = None
    axis_scale: float | None = None
    plane_offset: float = 40.0
    spin_rate: float = 6.0
    handle_offset: float = 2.0
    handle_twist: float = 0.5
    root_tol: float = 1e-12
    neck_tol: float | None = None
    twist_start: float = 1.0
    twist_max: float = 1e13

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        hyp = self.scenario == "HyperbolicNeck"
        if self.kappa is None:
            object.__setattr__(self, "kappa", 0.15 if hyp else 0.5)
        if self.axis_scale is None:
            object.__setattr__(self, "axis_scale", 5.0 if hyp else 4.0)
        if self.neck_tol is None:
            object.__setattr__(self, "neck_tol", 1e-20 if hyp else 1e-16)
        for name in ("kappa", "axis_scale", "plane_offset", "spin_rate", "twist_start", "twist_max"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        ts = tuple(float(t) for t in self.times)
        object.__setattr__(self, "times", ts)
        if len(ts) < 8:
            raise ConfigError(f"time grid has {len(ts)} samples, need at least 8")
        if any(t <= 0 for t in ts) or any(b <= a for a, b in zip(ts, ts[1:])):
            raise ConfigError("time grid must be positive and strictly increasing")
        if chordal(self.base_point, self.reference_endpoint) < 1e-9:
            raise ConfigError("base point and reference endpoint coincide")

    @staticmethod
    def geometric_grid(t0: float, t1: float, n: int) -> tuple:
        return tuple(float(t) for t in np.geomspace(t0, t1, n))

    @classmethod
    def from_json(cls, obj: dict) -> "ScenarioConfig":
        obj = dict(obj)
        try:
            if "grid" in obj:
                g = obj.pop("grid")
                obj["times"] = cls.geometric_grid(float(g["t0"]), float(g["t1"]), int(g["n"]))
            for key in ("base_point", "reference_endpoint"):
                if key in obj:
                    obj[key] = point_from_json(obj[key])
            if "lshape" in obj:
                obj["lshape"] = tuple(float(x) for x in obj["lshape"])
            return cls(**obj)
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"bad scenario config: {exc}") from exc

    def to_json(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            v = getattr(self, name)
            if name in ("base_point", "reference_endpoint"):
                v = point_to_json(v)
            elif isinstance(v, tuple):
                v = list(v)
            out[name] = v
        return out

    def frame(self) -> MobiusMap:
        """Sends the standard frame (p = inf, reference end = 0) to the configured one."""
        return zero_inf_to(self.reference_endpoint, self.base_point)


# ---------------------------------------------------------------------------
# root finding


def _bisect_secant(f, lo: float, hi: float, tol: float, max_iter: int = 200) -> float:
    """Root of f on a sign-changing bracket: bisection to a short bracket,
    then safeguarded secant steps down to machine precision."""
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise RootBracketFailure((lo, hi), "fixed-point condition does not change sign")
    for _ in range(max_iter):
        if hi - lo <= 1e-3 * max(abs(lo), abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    x0, f0, x1, f1 = lo, flo, hi, fhi
    for _ in range(max_iter):
        if f1 == f0:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        if not (min(lo, hi) <= x2 <= max(lo, hi)):
            x2 = 0.5 * (lo + hi)
        f2 = f(x2)
        if f2 == 0:
            return x2
        if (f2 > 0) == (flo > 0):
            lo, flo = x2, f2
        else:
            hi, fhi = x2, f2
        if abs(x2 - x1) <= tol * abs(x2) or abs(x2 - x1) <= 4 * np.finfo(float).eps * abs(x2):
            return x2
        x0, f0, x1, f1 = x1, f1, x2, f2
    return x1


# ---------------------------------------------------------------------------
# hyperbolic neck


def build_small_hyperbolics(p, planes, t: float, kappa: float = 0.5,
                            axis_scale: float = 10.0, target=0j, tol: float = 1e-12):
    """Two short hyperbolics whose product fixes ``target``.

    Works in the frame where p is infinity. ``planes`` gives the imaginary
    offsets y1 > y2 of the vertical planes Im z = y_i; the axis of h_i
    crosses its plane orthogonally along the horizontal line Re z = 0 and has
    radius ``axis_scale * t``, so it runs off to p. h1 has length
    ``kappa / t**2``; the length of h2 is solved for.
    """
    if not is_inf(p):
        raise ValueError("build_small_hyperbolics works in the frame with p at infinity")
    y1, y2 = planes
    if not y1 > y2:
        raise ValueError("plane offsets must satisfy y1 > y2")
    if t <= 0:
        raise ValueError("t must be positive")
    e1 = kappa / t ** 2
    rho = axis_scale * t
    a1 = GeodesicH3(1j * (y1 + rho), 1j * (y1 - rho))
    a2 = GeodesicH3(1j * (y2 - rho), 1j * (y2 + rho))
    h1 = loxodromic(a1, e1)

    def defect(e2):
        g = h1 @ loxodromic(a2, e2)
        return (g.apply(target) - target).imag

    lo, hi = e1 * 1e-3, min(e1 * 1e3, 20.0)
    e2 = _bisect_secant(defect, lo, hi, tol)
    return h1, loxodromic(a2, e2)


def _frame_length(h: MobiusMap, frame: MobiusMap) -> complex:
    """Complex length of h with the sign matching its action in ``frame``."""
    ln = complex_length(h)
    hf = h.conjugate_by(frame.inverse())
    if abs(hf.apply(1.0) - cmath.exp(ln)) > abs(hf.apply(1.0) - cmath.exp(-ln)):
        ln = -ln
    return ln


def _fit_twist(n: GeodesicH3, alpha: MobiusMap, target: MobiusMap):
    """Complex zeta with R(n) alpha^zeta closest to target."""
    rn = pi_rotation(n)
    tb = target.array()

    def resid(z):
        try:
            m = (rn @ complex_power(alpha, complex(z[0], z[1]))).array()
        except (OverflowError, NeckpinchError):
            return np.full(8, 1e6)
        if not np.all(np.isfinite(m)):
            return np.full(8, 1e6)
        d = m - tb if np.linalg.norm(m - tb) <= np.linalg.norm(m + tb) else m + tb
        return np.concatenate([d.real.ravel(), d.imag.ravel()])

    best = None
    for y0 in (0.0, 10.0, -10.0, 100.0, -100.0, 1e3, -1e3, 1e4, -1e4):
        res = least_squares(resid, (0.0, y0), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        cost = float(np.linalg.norm(res.fun))
        if best is None or cost < best[0]:
            best = (cost, complex(res.x[0], res.x[1]))
    return best[1]


def deformed_handle(h: MobiusMap, centre: complex, width: float, height: float,
                    tol: float = 1e-20) -> SurfaceRep:
    """One-holed torus with peripheral exactly h near the flat handle (width, i*height).

    q_t and q_t' are the perpendiculars to the axis of h a quarter length on
    either side of the axis top, n swaps them, and r_t is the R(n)-invariant
    perpendicular through ``centre - width/2``.
    """
    ax = axis(h, tol).geodesic
    nf = zero_inf_to(ax.p, ax.q)
    a = cmath.exp(_frame_length(h, nf) / 4)
    qt = GeodesicH3(nf.apply(-a), nf.apply(a))
    n = GeodesicH3(nf.apply(-1j), nf.apply(1j))
    u = nf.inverse().apply(centre - width / 2)
    rt = GeodesicH3(nf.apply(u), nf.apply(-1 / u))
    alpha = pi_rotation(qt) @ pi_rotation(rt)
    zeta = _fit_twist(n, alpha, MobiusMap.translation(1j * height))
    return one_holed_torus_from_rotations(qt, rt, third=n, twist=zeta)


def _side_distance(gens, twist: MobiusMap) -> float:
    """Largest sign-insensitive distance to I among the twisted generators.

    This is the displacement of the orthonormal frame at the basepoint, so
    it also sees rotations about axes through the basepoint.
    """
    return max(x.conjugate_by(twist).dist_to_identity() for x in gens)


def _valley(f, sign: float, start: float, target: float, limit: float):
    """Double r while f drops, then refine the last bracket."""
    lo, r, fr = start, start, f(sign * start)
    while True:
        nr = 2 * r
        if nr > limit:
            return r, fr
        fn = f(sign * nr)
        if fn >= fr:
            break
        lo, r, fr = r, nr, fn
    a, b = math.log(lo), math.log(2 * r)
    g = (math.sqrt(5) - 1) / 2
    for _ in range(60):
        m1, m2 = b - g * (b - a), a + g * (b - a)
        if f(sign * math.exp(m1)) < f(sign * math.exp(m2)):
            b = m2
        else:
            a = m1
    best = math.exp(0.5 * (a + b))
    fb = f(sign * best)
    return (best, fb) if fb <= fr else (r, fr)


def choose_twist(neck: MobiusMap, gens, target: float, start: float, limit: float) -> float:
    """Twist power r after which the side-2 generators are within ``target`` of I.

    Doubling search from ``start`` in both directions; doubling continues
    while the distance keeps dropping, and the last bracket is refined by
    golden section in log scale.
    """

    def f(r):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", BranchAmbiguity)
                return _side_distance(gens, real_power(neck, r))
        except (OverflowError, ValueError, NeckpinchError):
            return math.inf

    start = max(abs(start), 1.0)
    found = [(_valley(f, sg, start, target, limit), sg) for sg in (1.0, -1.0)]
    (r, fr), sign = min(found, key=lambda item: item[0][1])
    if fr >= target:
        raise SolverFailure(-1, f"twist search reached {fr:.3e}, above target {target:.3e}")
    return sign * r


def side_words(genus_side: int, offset: int) -> list:
    return [Word(((offset + i, 1),)) for i in range(2 * genus_side)]


def hyperbolic_sample(cfg: ScenarioConfig, t: float, twist_start: float):
    """Closed genus-4 representation at time t in the standard frame."""
    w1, h1, w2, h2 = cfg.lshape
    y = cfg.plane_offset
    k1, k2 = build_small_hyperbolics(INF, (y, -y), t, cfg.kappa, cfg.axis_scale,
                                     tol=cfg.root_tol)
    flat = lshape_rep(w1, h1, w2, h2)
    p1 = deformed_handle(k1, 1j * y, w1, h1, cfg.neck_tol)
    p2 = deformed_handle(k2, -1j * y, w2, h2 - h1, cfg.neck_tol)
    pres = SurfacePresentation(2, 1)
    gens = p1.images[:2] + p2.images[:2]
    bnd = evaluate(SurfaceRep(pres, gens + (MobiusMap.identity(),)), pres.boundary_word())
    side1 = SurfaceRep(pres, gens + (bnd.inverse(),))
    r = choose_twist(bnd, gens, 1.0 / t, twist_start, cfg.twist_max)
    twist = real_power(bnd, r)
    closed = amalgamate(side1, mirror(side1), twist)
    return closed, r, flat.images[:4]


# ---------------------------------------------------------------------------
# elliptic neck


def _angle_schedule(kappa: float, spin_rate: float, t: float):
    """(angle, accumulated axis angle) with angle * 2 * theta an odd multiple of pi."""
    theta = spin_rate * t ** 2
    u = 2 * theta
    k = max(0, round((kappa / t ** 2 * u / math.pi - 1) / 2))
    return math.pi * (2 * k + 1) / u, theta


def build_elliptic_path(r: GeodesicH3, t: float, kappa: float = 0.5, axis_scale: float = 4.0,
                        spin_rate: float = 6.0):
    """Small elliptic e_t about an axis orthogonal to r, and its power u_t.

    r must end at infinity (the designated endpoint). The axis crosses r at
    height ``axis_scale * t`` and makes the accumulated angle
    theta_t = spin_rate * t^2 with the horizontal parallel field along r;
    u_t = 2 theta_t, and the rotation angle is the odd multiple of pi / u_t
    nearest ``kappa / t^2``, so that e_t^{u_t} is the half turn.
    """
    if not is_inf(r.q) or is_inf(r.p):
        raise ValueError("r must run from a finite point to infinity")
    ang, theta = _angle_schedule(kappa, spin_rate, t)
    m = axis_scale * t
    for _ in range(2):
        direction = cmath.exp(1j * theta)
        a_t = GeodesicH3(r.p - m * direction, r.p + m * direction)
        e_t = rotation(a_t, ang)
        u_t = 2 * theta
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BranchAmbiguity)
            half = real_power(e_t, u_t)
        c = classify(half, 1e-9)
        if c.tag == "Elliptic" and abs(c.angle - math.pi) < 1e-9:
            return e_t, u_t
        theta *= 1 + 1e-9
        ang = math.pi * round(ang * 2 * theta / math.pi) / (2 * theta)
    raise BranchSelectionFailure(f"power of e_t is not a half turn at t={t}")


def _swap_involution(g: GeodesicH3, h: GeodesicH3) -> GeodesicH3:
    """Axis of the half turn carrying g onto h, endpoints in order.

    With G_g, G_h the axis generators, G_h + G_g intertwines them
    (G_h X = X G_g = I + G_h G_g), so it is the wanted involution.
    """
    x = axis_generator(g) + axis_generator(h)
    if np.max(np.abs(x)) < 1e-12:
        raise ValueError("geodesics are the same line with opposite orientations")
    return axis(MobiusMap.from_array(x), 1e-12).geodesic


def elliptic_sample(cfg: ScenarioConfig, t: float):
    """Closed genus-4 representation at time t in the standard frame.

    Returns (rep, u_t, pants rep, e_t). The pants has boundary images
    R(h)R(q_t), R(q_t)R(q_t') = e_t and R(q_t')R(h); the two handles carry
    the outer pants boundaries as peripherals, so the one-holed genus-2
    side has boundary e_t^-1.
    """
    r = GeodesicH3(0j, INF)
    e_t, u_t = build_elliptic_path(r, t, cfg.kappa, cfg.axis_scale, cfg.spin_rate)
    a_t = axis(e_t, cfg.neck_tol).geodesic
    ang = classify(e_t, cfg.neck_tol).angle
    q_t = r.moved_by(rotation(a_t, ang / 4))
    qp_t = r.moved_by(rotation(a_t, -ang / 4))
    if not (pi_rotation(q_t) @ pi_rotation(qp_t)).equals(e_t, 1e-9):
        q_t, qp_t = qp_t, q_t
    h = GeodesicH3(complex(cfg.handle_offset), INF)
    pants = pants_from_rotations(h, q_t, qp_t)
    n_a = _swap_involution(qp_t, h)
    n_b = _swap_involution(h, q_t)
    tor_a = one_holed_torus_from_rotations(qp_t, n_a, third=n_a, twist=cfg.handle_twist)
    tor_b = one_holed_torus_from_rotations(h, n_b, third=n_b, twist=cfg.handle_twist)
    pres = SurfacePresentation(2, 1)
    side1 = SurfaceRep(pres, tor_a.images[:2] + tor_b.images[:2] + (e_t,))
    closed = amalgamate(side1, mirror(side1), pi_rotation(a_t))
    return closed, u_t, pants, e_t


# ---------------------------------------------------------------------------
# traces


@dataclass
class SampleRecord:
    t: float
    rep: SurfaceRep
    neck: MobiusMap
    tr2: complex
    gap: complex
    tag: str
    angle_or_length: complex
    axis: object  # GeodesicH3, a point, or None
    relator_defect: float
    neck_distance: float
    jorgensen_min: float
    jorgensen_witness: bool
    twist: float
    extra: dict = field(default_factory=dict)
    side1_drift: float = math.nan
    side2_drift: float = math.nan
    side2_to_identity: float = math.nan


@dataclass
class DegenerationTrace:
    scenario: str
    base_point: complex
    neck_word: Word
    records: list
    config: dict = field(default_factory=dict)

    @property
    def times(self) -> list:
        return [r.t for r in self.records]

    @property
    def reps(self) -> list:
        return [r.rep for r in self.records]

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.records:
            w.writerow(_csv_row(r))
        return buf.getvalue()

    def path_json(self) -> dict:
        """The sampled path in the SampledPath layout."""
        return {"times": self.times, "reps": [rep.to_json() for rep in self.reps]}


CSV_COLUMNS = (
    "t", "tr2_re", "tr2_im", "tr2_minus_4_re", "tr2_minus_4_im", "tag", "angle_or_length_re", "angle_or_length_im",
    "axis_p", "axis_q", "relator_defect", "neck_distance", "jorgensen_min",
    "jorgensen_witness", "twist", "side1_drift", "side2_drift", "side2_to_identity",
)


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _fmt_point(z) -> str:
    if z is None:
        return ""
    if is_inf(z):
        return "inf"
    return f"{_fmt(z.real)}{'+' if z.imag >= 0 else '-'}{_fmt(abs(z.imag))}j"


def _csv_row(r: SampleRecord) -> list:
    if isinstance(r.axis, GeodesicH3):
        ap, aq = _fmt_point(r.axis.p), _fmt_point(r.axis.q)
    else:
        ap, aq = _fmt_point(r.axis), ""
    al = complex(r.angle_or_length)
    return [
        _fmt(r.t), _fmt(r.tr2.real), _fmt(r.tr2.imag), _fmt(r.gap.real), _fmt(r.gap.imag), r.tag, _fmt(al.real), _fmt(al.imag),
        ap, aq, _fmt(r.relator_defect), _fmt(r.neck_distance), _fmt(r.jorgensen_min),
        int(r.jorgensen_witness), _fmt(r.twist), _fmt(r.side1_drift), _fmt(r.side2_drift),
        _fmt(r.side2_to_identity),
    ]


def neck_word_for(pres: SurfacePresentation, side_genus: int) -> Word:
    """Product of the first ``side_genus`` handle commutators."""
    return Word(pres.boundary_word().letters[: 4 * side_genus])


def jorgensen_search(rep: SurfaceRep, neck: MobiusMap, tol: float = 1e-12):
    """Smallest Jorgensen quantity over the declared pair list.

    Pairs are (neck, generator), (generator, generator) and (neck, product
    of two generators); both orders are tried. Returns (J, witness) where
    witness says the minimizing pair with J < 1, if any, is non-elementary.
    """
    gens = list(rep.images)
    cands = [(neck, g) for g in gens]
    cands += [(x, y) for i, x in enumerate(gens) for y in gens[i + 1:]]
    cands += [(neck, x @ y) for i, x in enumerate(gens) for y in gens[i + 1:]]
    best, witness = math.inf, False
    scored = []
    for x, y in cands:
        for a, b in ((x, y), (y, x)):
            scored.append((jorgensen_certificate(a, b), a, b))
    scored.sort(key=lambda item: item[0])
    if scored:
        best = scored[0][0]
    for j, a, b in scored:
        if j >= 1:
            break
        if elementary_type([a, b], tol).kind == "NonElementary":
            witness = True
            break
    return best, witness


def _record(t, rep, neck_word, twist, tol, extra=None) -> SampleRecord:
    neck = evaluate(rep, neck_word)
    c = classify(neck, tol)
    if c.tag == "Identity":
        ax = None
    else:
        res = axis(neck, tol)
        ax = res.geodesic if res.kind == "Geodesic" else res.point
    al = c.length if c.tag == "Hyperbolic" else (c.angle if c.tag == "Elliptic" else 0.0)
    j, wit = jorgensen_search(rep, neck)
    return SampleRecord(
        t=t, rep=rep, neck=neck, tr2=neck.tr2, gap=neck.discriminant(), tag=c.tag, angle_or_length=al, axis=ax,
        relator_defect=relator_defect(rep), neck_distance=neck.dist_to_identity(),
        jorgensen_min=j, jorgensen_witness=wit, twist=twist, extra=extra or {},
    )


def _fill_drifts(records: list, side_genus: int) -> None:
    last = records[-1].rep.images
    k = 2 * side_genus
    for r in records:
        im = r.rep.images
        r.side1_drift = max(x.dist(y) for x, y in zip(im[:k], last[:k]))
        r.side2_drift = max(x.dist(y) for x, y in zip(im[k:], last[k:]))
        r.side2_to_identity = max(x.dist_to_identity() for x in im[k:])


def hyperbolic_neck_path(cfg: ScenarioConfig) -> DegenerationTrace:
    """Genus-4 path whose neck is a short hyperbolic tending to I.

    Each side is the L-shaped translation holonomy with its handles
    deformed to carry the small hyperbolics; the second side is twisted by
    a diverging power of the neck so that it collapses to the trivial rep.
    """
    if cfg.scenario != "HyperbolicNeck":
        raise ConfigError("hyperbolic_neck_path needs a HyperbolicNeck config")
    frame = cfg.frame()
    records, start = [], cfg.twist_start
    neck_word = None
    for i, t in enumerate(cfg.times):
        try:
            rep, r, _ = hyperbolic_sample(cfg, t, start)
        except SolverFailure as exc:
            raise SolverFailure(i, str(exc)) from exc
        except (NeckpinchError, ArithmeticError) as exc:
            raise SolverFailure(i, f"{type(exc).__name__}: {exc}") from exc
        start = abs(r) / 4
        rep = rep.conjugate(frame)
        neck_word = neck_word or neck_word_for(rep.presentation, 2)
        records.append(_record(t, rep, neck_word, r, cfg.neck_tol))
    _fill_drifts(records, 2)
    return DegenerationTrace("HyperbolicNeck", cfg.base_point, neck_word, records, cfg.to_json())


def elliptic_neck_path(cfg: ScenarioConfig) -> DegenerationTrace:
    """Genus-4 path whose neck is a small elliptic tending to I.

    The second side is the first one conjugated by the half turn about the
    neck axis, which is the u_t-th power of the neck.
    """
    if cfg.scenario != "EllipticNeck":
        raise ConfigError("elliptic_neck_path needs an EllipticNeck config")
    frame = cfg.frame()
    records = []
    neck_word = None
    for i, t in enumerate(cfg.times):
        try:
            rep, u_t, pants, e_t = elliptic_sample(cfg, t)
        except (NeckpinchError, ArithmeticError) as exc:
            raise SolverFailure(i, f"{type(exc).__name__}: {exc}") from exc
        rep = rep.conjugate(frame)
        neck_word = neck_word or neck_word_for(rep.presentation, 2)
        half = pi_rotation(axis(e_t, cfg.neck_tol).geodesic).conjugate_by(frame)
        k = 4
        sym = max(x.conjugate_by(half).dist(y)
                  for x, y in zip(mirror_order(rep.images[:k]), rep.images[k:]))
        extra = {"pants_defect": relator_defect(pants), "doubling_symmetry": sym}
        records.append(_record(t, rep, neck_word, u_t, cfg.neck_tol, extra))
    _fill_drifts(records, 2)
    return DegenerationTrace("EllipticNeck", cfg.base_point, neck_word, records, cfg.to_json())


def mirror_order(images) -> list:
    """Side-1 generator images in the order mirror() gives them."""
    g = len(images) // 2
    out = []
    for i in reversed(range(g)):
        out += [images[2 * i + 1], images[2 * i]]
    return out


def run_scenario(cfg: ScenarioConfig) -> DegenerationTrace:
    if cfg.scenario == "HyperbolicNeck":
        return hyperbolic_neck_path(cfg)
    return elliptic_neck_path(cfg)


# ---------------------------------------------------------------------------
# negative controls


def constant_trace(rep: SurfaceRep, neck_word: Word, times, base_point=INF,
                   tol: float = 1e-20) -> DegenerationTrace:
    """The same representation at every time."""
    records = [_record(float(t), rep, neck_word, 0.0, tol) for t in times]
    side = rep.presentation.genus // 2 or 1
    _fill_drifts(records, side)
    return DegenerationTrace("Constant", base_point, neck_word, records)


def fuchsian_torus(x: float, y: float) -> SurfaceRep:
    """Real one-holed torus with tr a = x, tr b = y and a cusp.

    tr ab is the larger root z of x^2 + y^2 + z^2 = xyz, which makes the
    commutator parabolic with trace -2; for x, y > 2 the group is Fuchsian.
    """
    disc = (x * y) ** 2 - 4 * (x * x + y * y)
    if x <= 2 or y <= 2 or disc < 0:
        raise ValueError("need x, y > 2 with real cusp solution")
    z = (x * y + math.sqrt(disc)) / 2
    lam = (x + math.sqrt(x * x - 4)) / 2
    a = MobiusMap(lam, 0, 0, 1 / lam)
    p = (z - y / lam) / (lam - 1 / lam)
    d = y - p
    bc = p * d - 1
    b = MobiusMap(p, math.sqrt(bc), math.sqrt(bc), d)
    pres = SurfacePresentation(1, 1)
    per = (a @ b @ a.inverse() @ b.inverse()).inverse()
    return SurfaceRep(pres, (a, b, per))


def fuchsian_trace(times) -> DegenerationTrace:
    """A discrete path: cusped Fuchsian tori with slowly varying traces."""
    records = []
    pres = SurfacePresentation(1, 1)
    word = pres.boundary_word()
    for t in times:
        rep = fuchsian_torus(3.0 + 1.0 / t, 3.0 + 0.5 / t)
        records.append(_record(float(t), rep, word, 0.0, 1e-12))
    _fill_drifts(records, 1)
    return DegenerationTrace("Fuchsian", INF, word, records)


# ---------------------------------------------------------------------------
# certification


TOL_PROFILES = {
    "default": {
        "identity_floor": 1e-9,
        "tr2_final": 1e-6,
        "axis_drift": 1e-3,
        "point_radius": 1e-3,
        "cauchy": 5e-2,
        "tail_fraction": 0.5,
        "min_decay_slope": -0.5,
    },
    "strict": {
        "identity_floor": 1e-9,
        "tr2_final": 1e-8,
        "axis_drift": 1e-4,
        "point_radius": 1e-3,
        "cauchy": 1e-2,
        "tail_fraction": 0.5,
        "min_decay_slope": -0.9,
    },
}


@dataclass
class CertificateReport:
    scenario: str
    clauses: dict
    first_failure: str | None

    @property
    def passed(self) -> bool:
        return self.first_failure is None

    def to_json(self) -> dict:
        return {"scenario": self.scenario, "passed": self.passed,
                "first_failure": self.first_failure, "clauses": _jsonable(self.clauses)}


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, complex):
        return point_to_json(v)
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, GeodesicH3):
        return v.to_json()
    return v


def _slope(ts, ys) -> float:
    """Least-squares slope of log y against log t (nan if any y <= 0)."""
    if any(y <= 0 for y in ys) or len(ts) < 2:
        return math.nan
    return float(np.polyfit(np.log(ts), np.log(ys), 1)[0])


def _nonincreasing(ys, rel: float = 1e-9) -> bool:
    return all(b <= a * (1 + rel) + 1e-300 for a, b in zip(ys, ys[1:]))


def certify_trace(trace: DegenerationTrace, tol_profile="default") -> CertificateReport:
    """Machine-checkable verdicts on a degeneration trace.

    (a) the neck never reaches I but tends to it, (b) tr^2 of the neck tends
    to 4 (with a fitted rate), (c) the neck axis converges to a point or a
    geodesic, (d) both sides of the neck have Cauchy restrictions, (e) the
    time after which a Jorgensen witness certifies non-discreteness.
    """
    prof = TOL_PROFILES[tol_profile] if isinstance(tol_profile, str) else dict(tol_profile)
    recs = trace.records
    if not recs:
        raise ValueError("empty trace")
    n = len(recs)
    k0 = min(n - 2, int(n * (1 - prof["tail_fraction"]))) if n > 2 else 0
    tail = recs[k0:]
    ts = [r.t for r in tail]
    clauses = {}

    dists = [r.neck_distance for r in recs]
    tail_d = [r.neck_distance for r in tail]
    slope_d = _slope(ts, tail_d)
    ok_a = min(dists) > prof["identity_floor"] and _nonincreasing(tail_d) and \
        slope_d < prof["min_decay_slope"]
    clauses["a_never_identity"] = {"passed": ok_a, "min_distance": min(dists),
                                   "final_distance": dists[-1], "tail_decay_slope": slope_d}

    gaps = [abs(r.gap) for r in tail]
    slope_t = _slope(ts, gaps)
    ok_b = gaps[-1] < prof["tr2_final"] and _nonincreasing(gaps) and \
        slope_t < prof["min_decay_slope"]
    clauses["b_trace_limit"] = {"passed": ok_b, "final_gap": gaps[-1], "rate": slope_t,
                                "tags": sorted({r.tag for r in recs})}

    clauses["c_axis"] = _axis_clause(trace, prof)
    clauses["d_sides"] = _sides_clause(tail, prof)

    thr = None
    for i in range(n - 1, -1, -1):
        if recs[i].jorgensen_min < 1 and recs[i].jorgensen_witness:
            thr = recs[i].t
        else:
            break
    need_e = trace.scenario == "EllipticNeck"
    clauses["e_nondiscrete"] = {"passed": (thr is not None) or not need_e, "required": need_e,
                                "threshold_time": thr,
                                "final_jorgensen": recs[-1].jorgensen_min}

    first = None
    for name in ("a_never_identity", "b_trace_limit", "c_axis", "d_sides", "e_nondiscrete"):
        if not clauses[name]["passed"]:
            first = name
            break
    return CertificateReport(trace.scenario, clauses, first)


def _axis_clause(trace: DegenerationTrace, prof) -> dict:
    """Point if the axis endpoints run together over the tail, else Geodesic."""
    recs = trace.records
    n = len(recs)
    tail = recs[min(n - 2, int(n * (1 - prof["tail_fraction"]))):] if n > 2 else recs
    last = recs[-1].axis
    if last is None:
        return {"passed": False, "target": "Undefined"}
    if not isinstance(last, GeodesicH3):
        d = chordal(last, trace.base_point)
        return {"passed": d < prof["point_radius"], "target": "Point", "distance_to_p": d}
    spans = [chordal(r.axis.p, r.axis.q) if isinstance(r.axis, GeodesicH3) else 0.0 for r in tail]
    slope = _slope([r.t for r in tail], spans)
    if _nonincreasing(spans) and slope < prof["min_decay_slope"]:
        dp = max(chordal(last.p, trace.base_point), chordal(last.q, trace.base_point))
        return {"passed": dp < prof["point_radius"], "target": "Point",
                "endpoints": [last.p, last.q], "distance_to_p": dp, "span_decay_slope": slope}
    prev = recs[-2].axis if n > 1 else None
    drift = geodesic_distance(last, prev) if isinstance(prev, GeodesicH3) else math.inf
    return {"passed": drift < prof["axis_drift"], "target": "Geodesic",
            "endpoints": [last.p, last.q], "final_drift": drift}


def _sides_clause(tail, prof) -> dict:
    s1 = [r.side1_drift for r in tail]
    s2 = [r.side2_drift for r in tail]
    ok = s1[0] < prof["cauchy"] and s2[0] < prof["cauchy"]
    return {"passed": ok, "side1_modulus": s1[0], "side2_modulus": s2[0],
            "side2_to_identity": tail[-1].side2_to_identity}


def certificate_json(report: CertificateReport) -> str:
    return json.dumps(report.to_json(), indent=2, sort_keys=True)
