"""Trace coordinates on the character variety, equivalence tests and
conjugation lifts of paths that converge only up to conjugacy."""

from __future__ import annotations

import cmath
import csv
import io
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoHyperbolicGenerator, NormalizationFailure, NotConvergentInChi
from .mobius import (
    IDENTITY,
    INF,
    MobiusMap,
    axis,
    chordal,
    classify,
    fixed_points,
    is_inf,
    three_point_map,
    zero_inf_to,
)
from .surface_rep import SurfacePresentation, SurfaceRep, Word, elementary_type, evaluate


def default_words(pres: SurfacePresentation) -> list:
    """Generators, their pairwise products and the relator prefixes."""
    gens = pres.generator_words()
    out = list(gens)
    for x, y in itertools.combinations(gens, 2):
        out.append(x * y)
    out += pres.relator().prefixes()
    seen, uniq = set(), []
    for w in out:
        if len(w) and w.letters not in seen:
            seen.add(w.letters)
            uniq.append(w)
    return uniq


@dataclass(frozen=True)
class TraceCoordinates:
    words: tuple
    values: np.ndarray

    def distance(self, other: "TraceCoordinates") -> float:
        return float(np.max(np.abs(self.values - other.values)))


def trace_coords(rep: SurfaceRep, words) -> TraceCoordinates:
    words = tuple(words)
    if not words:
        raise ValueError("need at least one word")
    vals = np.array([evaluate(rep, w).tr2 for w in words], dtype=complex)
    return TraceCoordinates(words, vals)


def equivalent(rep1: SurfaceRep, rep2: SurfaceRep, words, tol: float = 1e-9) -> bool:
    """Agreement of tr^2 on every listed word.

    This is equality of extended orbits as seen by the word list, so two
    reducible representations with the same diagonal parts count as
    equivalent even when they are not conjugate.
    """
    if rep1.presentation != rep2.presentation:
        raise ValueError("representations use different presentations")
    c1, c2 = trace_coords(rep1, words), trace_coords(rep2, words)
    return bool(np.all(np.abs(c1.values - c2.values) <= tol))


# -- generating sets with hyperbolic images ---------------------------------


def _is_hyperbolic(m: MobiusMap, tol: float) -> bool:
    return classify(m, tol).tag == "Hyperbolic"


def _short_words(n: int, max_len: int):
    letters = [(g, e) for g in range(n) for e in (1, -1)]
    for k in range(1, max_len + 1):
        for combo in itertools.product(letters, repeat=k):
            w = Word(combo)
            if len(w) == k:
                yield w


def _nielsen_slot(w: Word) -> int | None:
    """A generator occurring exactly once in w, so w may replace it."""
    counts = {}
    for g, e in w.letters:
        counts[g] = counts.get(g, 0) + abs(e)
    once = [g for g, c in counts.items() if c == 1]
    return once[0] if once else None


def hyperbolic_generating_adjustment(rep: SurfaceRep, tol: float = 1e-9) -> list:
    """Nielsen moves towards a generating set with hyperbolic images.

    The first word returned has hyperbolic image with axis l. Identity and
    parabolic images are composed with powers of it; elliptics fixing the
    ends of l are composed with it once; elliptics swapping the ends of l
    are multiplied together in pairs (the product fixes the ends) and then
    composed. At most one end-swapping elliptic survives.
    """
    words = rep.presentation.generator_words()
    n = len(words)
    img = [evaluate(rep, w) for w in words]
    h = next((i for i in range(n) if _is_hyperbolic(img[i], tol)), None)
    if h is None:
        for w in _short_words(n, 3):
            slot = _nielsen_slot(w)
            if slot is not None and _is_hyperbolic(evaluate(rep, w), tol):
                words[slot] = w
                h = slot
                break
        else:
            raise NoHyperbolicGenerator("no hyperbolic image among products of length <= 3")
    g1 = words[h]
    m1 = evaluate(rep, g1)
    ax = axis(m1, tol).geodesic

    def swaps(m):
        return chordal(m.apply(ax.p), ax.q) < tol and chordal(m.apply(ax.q), ax.p) < tol

    def to_hyperbolic(w):
        for k in (1, -1, 2, -2, 3, -3):
            step = g1 if k > 0 else g1.inverse()
            cand = w
            for _ in range(abs(k)):
                cand = step * cand
            if _is_hyperbolic(evaluate(rep, cand), tol):
                return cand
        return None

    out = list(words)
    reversing = []
    for i in range(n):
        if i == h:
            continue
        m = evaluate(rep, out[i])
        if _is_hyperbolic(m, tol):
            continue
        if classify(m, tol).tag == "Elliptic" and swaps(m):
            reversing.append(i)
            continue
        w = to_hyperbolic(out[i])
        if w is not None:
            out[i] = w
    while len(reversing) >= 2:
        i, j = reversing[0], reversing.pop()
        merged = out[i] * out[j]
        w = to_hyperbolic(merged)
        out[j] = w if w is not None else merged
    return out


# -- elements of the extended group -----------------------------------------


@dataclass(frozen=True)
class HatPslElement:
    """A Mobius map together with an unordered pair of sphere points."""

    gamma: MobiusMap
    lam: tuple


def hatpsl_validate(e: HatPslElement, tol: float = 1e-9) -> bool:
    """Check the pairing rule for (gamma, lambda).

    A hyperbolic gamma with real trace may carry any pair of its fixed
    points; every other gamma (identity included) must carry a doubled
    fixed point.
    """
    a, b = e.lam
    g = e.gamma

    def fixed(z):
        return chordal(g.apply(z), z) < tol

    tr = g.trace
    pure = abs(tr.imag) < tol and abs(tr.real) > 2 + tol
    if pure:
        return fixed(a) and fixed(b)
    return chordal(a, b) < tol and fixed(a)


# -- sampled paths ----------------------------------------------------------


@dataclass(frozen=True)
class SampledPath:
    times: tuple
    reps: tuple

    def __post_init__(self):
        ts = tuple(float(t) for t in self.times)
        object.__setattr__(self, "times", ts)
        object.__setattr__(self, "reps", tuple(self.reps))
        if len(ts) != len(self.reps) or not ts:
            raise ValueError("need one representation per sample time")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("sample times must be strictly increasing")
        pres = self.reps[0].presentation
        if any(r.presentation != pres for r in self.reps):
            raise ValueError("all samples must share one presentation")

    @property
    def presentation(self) -> SurfacePresentation:
        return self.reps[0].presentation

    def conjugated(self, conjugators) -> "SampledPath":
        return SampledPath(self.times, tuple(r.conjugate(n) for r, n in zip(self.reps, conjugators)))

    def to_json(self) -> dict:
        return {"times": list(self.times), "reps": [r.to_json() for r in self.reps]}

    @classmethod
    def from_json(cls, obj) -> "SampledPath":
        return cls(tuple(obj["times"]), tuple(SurfaceRep.from_json(r) for r in obj["reps"]))


# -- convergence tests ------------------------------------------------------


def _tail_start(n: int, window: float) -> int:
    return max(0, min(n - 2, n - max(2, int(round(window * n)))))


def chi_cauchy(path: SampledPath, words, drift: float = 5e-2, window: float = 0.1) -> dict:
    """Relative spread of the trace coordinates over the tail window."""
    coords = np.array([trace_coords(r, words).values for r in path.reps])
    last = coords[-1]
    rel = np.max(np.abs(coords - last) / (1 + np.abs(last)), axis=1)
    k0 = _tail_start(len(path.reps), window)
    spread = float(np.max(rel[k0:]))
    return {"spread": spread, "ok": bool(spread < drift and np.all(np.isfinite(coords))),
            "tail_start": k0}


def matrix_spread(path: SampledPath, window: float = 0.1) -> float:
    """Largest generator-matrix distance from the final sample over the tail."""
    k0 = _tail_start(len(path.reps), window)
    last = path.reps[-1].images
    return max(m.dist(l) for r in path.reps[k0:] for m, l in zip(r.images, last))


def limit_distance_to_identity(path: SampledPath, word: Word, window: float = 0.25) -> float:
    """Distance from I of the limit of a word's image along a convergent path.

    The sign-insensitive distance d_k at each tail sample is fitted as
    a + b/t + c/t^2 and |a| is returned; by continuity this is the distance
    of the limit matrix from I.  Working with the scalar distance keeps the
    fit valid when the approach to the limit spirals.
    """
    k0 = _tail_start(len(path.reps), window)
    ts = np.array(path.times[k0:])
    ds = np.array([evaluate(r, word).dist_to_identity() for r in path.reps[k0:]])
    design = np.column_stack([np.ones_like(ts), 1 / ts, 1 / ts**2])
    coef = np.linalg.lstsq(design, ds, rcond=None)[0]
    return float(abs(coef[0]))


# -- lifting ----------------------------------------------------------------


def _sl2_exp(x: np.ndarray) -> np.ndarray:
    """exp of a traceless 2x2 matrix via cosh/sinh of its eigenvalue."""
    delta = cmath.sqrt(-np.linalg.det(x))
    if abs(delta) < 1e-8:
        s = 1 + delta ** 2 / 6
        ch = 1 + delta ** 2 / 2
    else:
        s = cmath.sinh(delta) / delta
        ch = cmath.cosh(delta)
    return ch * np.eye(2) + s * x


def _attracting(m: MobiusMap, tol: float):
    """An intrinsically chosen fixed point: the attracting (or positively
    rotating) end of the axis, or the parabolic fixed point."""
    ax = axis(m, tol)
    if ax.kind != "Geodesic":
        return ax.point
    c = classify(m, tol)
    if c.tag == "Elliptic" and abs(math.sin(c.angle)) < 1e-6:
        return None  # a half turn has no preferred end
    return ax.geodesic.q


def _pin_words(rep: SurfaceRep, words, tol: float, sep: float):
    pts = []
    for w in words:
        m = evaluate(rep, w)
        # parabolic fixed points are double roots, good only to sqrt(eps)
        if m.dist(IDENTITY) < tol or classify(m, tol).tag == "Parabolic":
            continue
        z = _attracting(m, tol)
        if z is not None:
            pts.append((w, z))
    for (w1, z1), (w2, z2), (w3, z3) in itertools.combinations(pts, 3):
        if min(chordal(z1, z2), chordal(z1, z3), chordal(z2, z3)) >= sep:
            return (w1, w2, w3)
    return None


def _pinning(rep: SurfaceRep, pin, tol: float) -> MobiusMap:
    z = [_attracting(evaluate(rep, w), tol) for w in pin]
    if any(p is None for p in z):
        raise NormalizationFailure("NonElementary", "pinning word lost its fixed point")
    # three_point_map sends (z1, z2, z3) to (0, 1, inf)
    return three_point_map(z[0], z[1], z[2])


def _affine_parts(mats):
    """(multiplier, translation) of maps fixing infinity, approximately."""
    mu = np.array([m.a / m.d for m in mats])
    tau = np.array([m.b / m.d for m in mats])
    return mu, tau


def _send_to_inf(z) -> MobiusMap:
    """The sphere rotation (unitary) carrying z to infinity."""
    if is_inf(z):
        return IDENTITY
    r = abs(z)
    b = 1 / (1 + r * r) ** 0.5
    if r > 1e150:
        return IDENTITY
    return MobiusMap(z.conjugate() * b, b, -b, z * b)


def _common_point(mats, tol: float):
    """The fixed point displaced least, in total, by all the maps."""
    best, score = None, np.inf
    for m in mats:
        if m.dist(IDENTITY) < tol:
            continue
        # both roots of a near-parabolic map, so the candidate set does not
        # depend on which root a tolerance would keep
        for z in fixed_points(m, 0.0):
            s = sum(chordal(g.apply(z), z) for g in mats)
            if s < score:
                best, score = z, s
    return best


def _affine_fit(src, dst):
    """Affine A(w) = lam w + beta with A src A^-1 close to dst (both near
    fixing infinity), by linear least squares on translations."""
    mu, tau = _affine_parts(src)
    _, tau_d = _affine_parts(dst)
    cols = np.stack([tau, 1 - mu], axis=1)
    sol, *_ = np.linalg.lstsq(cols, tau_d, rcond=None)
    lam, beta = sol
    if abs(lam) < 1e-12:
        lam = 1.0
    return MobiusMap(lam, beta, 0, 1)


def _diag_fit(src, dst):
    """Dilation D with D src D^-1 close to dst (both near fixing 0, inf)."""
    num = sum(abs(d.b) ** 2 for d in dst) + sum(abs(s.c) ** 2 for s in src)
    den = sum(abs(s.b) ** 2 for s in src) + sum(abs(d.c) ** 2 for d in dst)
    phase = sum(d.b * s.b.conjugate() + s.c * d.c.conjugate() for s, d in zip(src, dst))
    if den < 1e-300 or num < 1e-300:
        return IDENTITY
    k = (num / den) ** 0.25
    ang = cmath.phase(phase) if abs(phase) > 0 else 0.0
    # conj by diag(s, 1/s) scales b by s^2 and c by s^-2
    return MobiusMap(k * cmath.exp(0.5j * ang), 0, 0, 1 / (k * cmath.exp(0.5j * ang)))


_SL2_BASIS = (
    np.array([[1, 0], [0, -1]], dtype=complex),
    np.array([[0, 1], [0, 0]], dtype=complex),
    np.array([[0, 0], [1, 0]], dtype=complex),
)


def _align(src, dst, start: MobiusMap, max_iter: int = 60) -> MobiusMap:
    """Gauss-Newton for the conjugator w minimizing sum |w s w^-1 - d|^2.

    Each step linearizes w -> exp(X) w, where the derivative of the
    conjugate is the commutator [X, B], and solves the linear least-squares
    problem exactly; iteration stops when the step stalls at round-off.
    """
    tgt = [d.array() for d in dst]
    mats = [m.array() for m in src]
    w = start.array()
    signs = None
    for _ in range(max_iter):
        wi = np.linalg.inv(w)
        cur = [w @ m @ wi for m in mats]
        if signs is None:
            signs = [1.0 if np.linalg.norm(c - t) <= np.linalg.norm(c + t) else -1.0
                     for c, t in zip(cur, tgt)]
        cur = [sg * c for sg, c in zip(signs, cur)]
        rows, rhs = [], []
        for c, t in zip(cur, tgt):
            cols = [e @ c - c @ e for e in _SL2_BASIS]
            blk = np.stack([x.ravel() for x in cols], axis=1)
            rows.append(blk)
            rhs.append((t - c).ravel())
        jac = np.concatenate(rows)
        r = np.concatenate(rhs)
        # real unknowns: complex coefficients of the three basis elements
        jr = np.block([[jac.real, -jac.imag], [jac.imag, jac.real]])
        rr = np.concatenate([r.real, r.imag])
        sol, *_ = np.linalg.lstsq(jr, rr, rcond=1e-14)
        coef = sol[:3] + 1j * sol[3:]
        x = sum(cf * e for cf, e in zip(coef, _SL2_BASIS))
        w = _sl2_exp(x) @ w
        w = w / np.sqrt(np.linalg.det(w))
        if np.linalg.norm(coef) < 1e-15:
            break
    return MobiusMap.from_array(w)


def detect_case(rep: SurfaceRep, tol: float = 1e-2) -> tuple:
    """Classify a sample as non-elementary (1), elementary with a hyperbolic
    generator (2) or elementary without one (3)."""
    et = elementary_type(list(rep.images), tol)
    if et.kind == "NonElementary":
        return 1, et
    if any(classify(m, tol).tag == "Hyperbolic" for m in rep.images):
        return 2, et
    return 3, et


CASE_TAGS = {1: "NonElementary", 2: "ElementaryHyperbolic", 3: "ElementaryParabolic"}


@dataclass
class LiftDiagnostics:
    case: int
    pinning: tuple
    chi_spread: float
    steps: list = field(default_factory=list)
    drifts: list = field(default_factory=list)
    lifted_spread: float = 0.0
    cauchy_ok: bool = True

    @property
    def case_tag(self) -> str:
        return CASE_TAGS[self.case]

    def csv_text(self, times, names) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["t", "case", "pinning_words", "step", "drift_to_final"])
        pins = ";".join(w.to_str(names) for w in self.pinning) if self.pinning else ""
        for t, s, d in zip(times, self.steps, self.drifts):
            wr.writerow([format(t, ".17g"), self.case_tag, pins, format(s, ".17g"), format(d, ".17g")])
        return buf.getvalue()


_PAULI = (
    np.eye(2, dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, 1j], [-1j, 0]], dtype=complex),
)
_MINK = np.diag([1.0, -1.0, -1.0, -1.0])


def balanced_frame(mats) -> MobiusMap:
    """Positive-definite conjugator minimizing the summed squared Frobenius
    norms of the conjugated maps.

    Writing P = w* w = x0 I + x1 s1 + x2 s2 + x3 s3 with x on the unit
    hyperboloid, the cost sum tr(A* P A P^-1) is a quadratic form x^T Q x,
    so the minimizer is the timelike eigenvector of J Q with the smallest
    eigenvalue. The answer is unique up to a sphere rotation on the left.
    """
    arrs = [m.array() for m in mats]
    q = np.zeros((4, 4))
    for j in range(4):
        for k in range(4):
            q[j, k] = _MINK[k, k] * sum(
                float(np.trace(a.conj().T @ _PAULI[j] @ a @ _PAULI[k]).real) for a in arrs)
    q = (q + q.T) / 2
    vals, vecs = np.linalg.eig(_MINK @ q)
    best = None
    for lam, v in zip(vals, vecs.T):
        v = v.real
        norm = v @ _MINK @ v
        if abs(lam.imag) > 1e-9 * (1 + abs(lam)) or norm <= 0:
            continue
        x = v / np.sqrt(norm)
        if x[0] < 0:
            x = -x
        if best is None or lam.real < best[0]:
            best = (lam.real, x)
    if best is None:
        raise NormalizationFailure("Elementary", "no balanced base point")
    x = best[1]
    p = sum(xi * s for xi, s in zip(x, _PAULI))
    root = (p + np.eye(2)) / np.sqrt(np.trace(p).real + 2)
    return MobiusMap.from_array(root)


def _balance_in_stabilizer(mats) -> MobiusMap:
    """Dilation about (0, inf) balancing upper and lower off-diagonal mass,
    with the largest upper entry made real and positive."""
    up = sum(abs(m.b) ** 2 for m in mats)
    lo = sum(abs(m.c) ** 2 for m in mats)
    k = (lo / up) ** 0.25 if up > 1e-300 and lo > 1e-300 else 1.0
    big = max(mats, key=lambda m: abs(m.b))
    ang = -cmath.phase(big.b) if abs(big.b) > 0 else 0.0
    s = k * cmath.exp(0.5j * ang)
    return MobiusMap(s, 0, 0, 1 / s)


def _anchor(rep: SurfaceRep, words, tol: float):
    """Normal form for the first sample, unaffected by conjugating the input.

    The balanced frame fixes the sample up to a sphere rotation; the rotation
    is then fixed by sending the attracting fixed point of one word to
    infinity and putting that of a second word on the positive real axis.
    """
    try:
        frame = balanced_frame(rep.images)
    except NormalizationFailure:
        return _unipotent_anchor(rep)
    pts = []
    for w in words:
        m = evaluate(rep, w).conjugate_by(frame)
        if m.dist(IDENTITY) < tol or classify(m, tol).tag == "Parabolic":
            continue
        z = _attracting(m, tol)
        if z is not None:
            pts.append((w, z))
    if not pts:
        raise NormalizationFailure("Elementary", "no word with a preferred fixed point")
    w1, z1 = pts[0]
    turn = _send_to_inf(z1)
    for w2, z2 in pts[1:]:
        z2 = turn.apply(z2)
        if chordal(z2, 0) > 0.1 and chordal(z2, INF) > 0.1:
            ph = cmath.exp(-0.5j * cmath.phase(z2))
            return MobiusMap(ph, 0, 0, 1 / ph) @ turn @ frame, (w1, w2)
    return turn @ frame, (w1,)


def _unipotent_anchor(rep: SurfaceRep):
    """Normal form for a group of translations sharing a fixed point, where
    no balanced base point exists: the point goes to infinity and the
    longest translation becomes 1."""
    mats = list(rep.images)
    if any(classify(m, 1e-12).tag not in ("Parabolic", "Identity") for m in mats):
        raise NormalizationFailure("Elementary", "no balanced base point")
    z = _common_point(mats, 1e-12)
    if z is None:
        raise NormalizationFailure("Elementary", "translations without a common fixed point")
    turn = _send_to_inf(z)
    moved = [m.conjugate_by(turn) for m in mats]
    k = max(range(len(moved)), key=lambda i: abs(moved[i].b / moved[i].d))
    tau = moved[k].b / moved[k].d
    # conjugating by diag(s, 1/s) multiplies each translation by s^2
    s = 1 / cmath.sqrt(tau)
    return MobiusMap(s, 0, 0, 1 / s) @ turn, (Word(((k, 1),)),)


def _axis_anchor(rep: SurfaceRep, h: int, tol: float) -> MobiusMap:
    """Normal form with a hyperbolic generator's axis running from 0 to
    infinity, a shared fixed point (if any) at infinity, and the dilation
    along the axis balanced."""
    frame = balanced_frame(rep.images)
    mats = [m.conjugate_by(frame) for m in rep.images]
    ax = axis(mats[h], 1e-12).geodesic
    ends = (ax.p, ax.q)
    et = elementary_type(mats, tol)
    if et.kind == "FixesPoint" and chordal(ends[0], et.points[0]) < chordal(ends[1], et.points[0]):
        ends = (ends[1], ends[0])
    pin = zero_inf_to(ends[0], ends[1]).inverse()
    moved = [m.conjugate_by(pin) for m in mats]
    return _balance_in_stabilizer(moved) @ pin @ frame


def lift_path(path: SampledPath, words=None, tol: float = 1e-6, drift: float = 5e-2,
              window: float = 0.1, case_tol: float = 1e-2):
    """Conjugate each sample so that the path converges as matrices.

    The limit type is read off the final sample. A non-elementary limit is
    normalized by sending attracting fixed points of three words to 0, 1
    and infinity. Elementary limits are put in a normal form at the first
    sample (balanced base point, then the hyperbolic axis to (0, inf) or a
    preferred fixed point to infinity), and every later sample is conjugated
    onto its predecessor by least squares, starting from a fit inside the
    stabilizer of the normal form. Every choice depends on the samples only
    up to conjugation, so scrambling the input changes the output by one
    global conjugation. Returns (conjugators, lifted path, diagnostics).
    """
    if words is None:
        words = default_words(path.presentation)
    words = list(words)
    chi = chi_cauchy(path, words, drift, window)
    if not chi["ok"]:
        raise NotConvergentInChi(f"trace coordinates spread {chi['spread']:.3g} over the tail")
    last = path.reps[-1]
    case, _ = detect_case(last, case_tol)
    conj = []
    pin = ()
    if case == 1:
        pin = _pin_words(last.conjugate(balanced_frame(last.images)), words, 1e-9, 0.1)
        if pin is None:
            raise NormalizationFailure(CASE_TAGS[1], "no word triple with separated fixed points")
        conj = [_pinning(r, pin, 1e-12) for r in path.reps]
    else:
        h = None
        if case == 2:
            h = next(i for i, m in enumerate(last.images) if classify(m, case_tol).tag == "Hyperbolic")
        prev_raw, prev = None, None
        for r in path.reps:
            if prev is None:
                if case == 2:
                    w = _axis_anchor(r, h, case_tol)
                else:
                    w, pin = _anchor(r, words, 1e-9)
            elif r.images == prev_raw.images:
                w = conj[-1]
            else:
                w = _stabilizer_start(r, prev, h, case_tol)
                w = _align(r.images, prev.images, w)
            conj.append(w)
            prev_raw, prev = r, r.conjugate(w)
    lifted = path.conjugated(conj)
    diag = LiftDiagnostics(case, tuple(pin), chi["spread"])
    final = lifted.reps[-1].images
    prev = None
    for r in lifted.reps:
        diag.drifts.append(max(m.dist(l) for m, l in zip(r.images, final)))
        diag.steps.append(0.0 if prev is None else max(m.dist(p) for m, p in zip(r.images, prev.images)))
        prev = r
    diag.lifted_spread = matrix_spread(lifted, window)
    diag.cauchy_ok = diag.lifted_spread < drift
    return conj, lifted, diag


def _stabilizer_start(rep: SurfaceRep, target: SurfaceRep, h, tol: float) -> MobiusMap:
    """Starting conjugator for the alignment: match the distinguished
    point(s) of the normal form, then fit the remaining freedom."""
    mats = list(rep.images)
    tgt = list(target.images)
    if h is not None:
        ax_t = axis(tgt[h], 1e-12).geodesic
        ax_s = axis(mats[h], 1e-12).geodesic
        frame_t = zero_inf_to(ax_t.p, ax_t.q)
        frame_s = zero_inf_to(ax_s.p, ax_s.q).inverse()
        src = [m.conjugate_by(frame_s) for m in mats]
        dst = [m.conjugate_by(frame_t.inverse()) for m in tgt]
        return frame_t @ _diag_fit(src, dst) @ frame_s
    xi_s = _common_point(mats, tol)
    xi_t = _common_point(tgt, tol)
    if xi_s is None or xi_t is None:
        raise NormalizationFailure(CASE_TAGS[3], "common fixed point lost")
    s = _send_to_inf(xi_s)
    t_inv = _send_to_inf(xi_t)
    src = [m.conjugate_by(s) for m in mats]
    dst = [m.conjugate_by(t_inv) for m in tgt]
    return t_inv.inverse() @ _affine_fit(src, dst) @ s


def global_fit(src: SurfaceRep, dst: SurfaceRep, words=None) -> MobiusMap:
    """Least-squares conjugator taking src onto dst, started from the
    product of their normal forms."""
    if words is None:
        words = default_words(src.presentation)
    a_src, _ = _anchor(src, words, 1e-9)
    a_dst, _ = _anchor(dst, words, 1e-9)
    return _align(src.images, dst.images, a_dst.inverse() @ a_src)


def lift_outputs(conj, lifted: SampledPath, diag: LiftDiagnostics):
    """(conjugators JSON, lifted JSON, diagnostics CSV) for writing to disk."""
    cj = {"times": list(lifted.times), "conjugators": [c.to_json() for c in conj],
          "case": diag.case_tag,
          "pinning": [w.to_str(lifted.presentation.names) for w in diag.pinning]}
    return cj, lifted.to_json(), diag.csv_text(lifted.times, lifted.presentation.names)


__all__ = [
    "TraceCoordinates",
    "HatPslElement",
    "SampledPath",
    "LiftDiagnostics",
    "default_words",
    "trace_coords",
    "equivalent",
    "hyperbolic_generating_adjustment",
    "hatpsl_validate",
    "chi_cauchy",
    "matrix_spread",
    "limit_distance_to_identity",
    "detect_case",
    "lift_path",
    "global_fit",
    "lift_outputs",
]
