"""Surface-group presentations, representations into PSL(2,C), words,
relator checks, elementary-type detection and rotation-axis constructions."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field

from .errors import (
    BadDimensions,
    BoundaryMismatch,
    NonCommutingTwist,
    TargetMismatch,
    UnknownGenerator,
)
from .mobius import (
    IDENTITY,
    GeodesicH3,
    MobiusMap,
    chordal,
    classify,
    complex_power,
    fixed_points,
    pi_rotation,
    zero_inf_to,
)


@dataclass(frozen=True)
class Word:
    """Freely reduced word: a tuple of (generator index, nonzero exponent)."""

    letters: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", _reduce(self.letters))

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def inverse(self) -> "Word":
        return Word(tuple((g, -e) for g, e in reversed(self.letters)))

    def __len__(self):
        return sum(abs(e) for _, e in self.letters)

    def prefixes(self) -> list:
        """Prefix words, one per letter of the expanded word."""
        out, acc = [], []
        for g, e in self.letters:
            step = 1 if e > 0 else -1
            for _ in range(abs(e)):
                acc.append((g, step))
                out.append(Word(tuple(acc)))
        return out

    def to_str(self, names) -> str:
        parts = []
        for g, e in self.letters:
            parts.append(names[g] if e == 1 else f"{names[g]}^{e}")
        return " ".join(parts)


def _reduce(letters):
    out = []
    for g, e in letters:
        g, e = int(g), int(e)
        if e == 0:
            continue
        if out and out[-1][0] == g:
            e2 = out[-1][1] + e
            out.pop()
            if e2 != 0:
                out.append((g, e2))
        else:
            out.append((g, e))
    return tuple(out)


def commutator_word(i: int, j: int) -> Word:
    return Word(((i, 1), (j, 1), (i, -1), (j, -1)))


@dataclass(frozen=True)
class SurfacePresentation:
    """Genus g, n punctures; relator prod[a_i,b_i] * prod c_j."""

    genus: int
    punctures: int
    names: tuple = field(default=())

    def __post_init__(self):
        if self.genus < 0 or self.punctures < 0:
            raise ValueError("genus and puncture count must be nonnegative")
        if not self.names:
            names = []
            for i in range(1, self.genus + 1):
                names += [f"a{i}", f"b{i}"]
            names += [f"c{j}" for j in range(1, self.punctures + 1)]
            object.__setattr__(self, "names", tuple(names))

    @property
    def euler_characteristic(self) -> int:
        return 2 - 2 * self.genus - self.punctures

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownGenerator(name) from None

    def boundary_word(self) -> Word:
        """prod [a_i, b_i] over the handles."""
        w = Word()
        for i in range(self.genus):
            w = w * commutator_word(2 * i, 2 * i + 1)
        return w

    def peripheral(self, j: int = 0) -> Word:
        return Word(((2 * self.genus + j, 1),))

    def relator(self) -> Word:
        w = self.boundary_word()
        for j in range(self.punctures):
            w = w * self.peripheral(j)
        return w

    def word(self, text: str) -> Word:
        """Parse e.g. "a1 b1^-1 a2^2"."""
        letters = []
        for tok in text.split():
            m = re.fullmatch(r"([A-Za-z]\w*?)(?:\^(-?\d+))?", tok)
            if not m:
                raise UnknownGenerator(tok)
            letters.append((self.index(m.group(1)), int(m.group(2) or 1)))
        return Word(tuple(letters))

    def generator_words(self) -> list:
        return [Word(((i, 1),)) for i in range(len(self.names))]

    def to_json(self) -> dict:
        return {"genus": self.genus, "punctures": self.punctures, "names": list(self.names)}

    @classmethod
    def from_json(cls, obj) -> "SurfacePresentation":
        return cls(obj["genus"], obj["punctures"], tuple(obj["names"]))


@dataclass(frozen=True)
class SurfaceRep:
    presentation: SurfacePresentation
    images: tuple  # MobiusMap per generator, in presentation order

    def __post_init__(self):
        if len(self.images) != len(self.presentation.names):
            raise UnknownGenerator("image count does not match generator count")

    @classmethod
    def from_dict(cls, pres: SurfacePresentation, assignment: dict) -> "SurfaceRep":
        return cls(pres, tuple(assignment[n] for n in pres.names))

    def image(self, name: str) -> MobiusMap:
        return self.images[self.presentation.index(name)]

    def conjugate(self, n: MobiusMap) -> "SurfaceRep":
        return SurfaceRep(self.presentation, tuple(m.conjugate_by(n) for m in self.images))

    def to_json(self) -> dict:
        return {
            "presentation": self.presentation.to_json(),
            "generators": {nm: m.to_json() for nm, m in zip(self.presentation.names, self.images)},
        }

    @classmethod
    def from_json(cls, obj) -> "SurfaceRep":
        pres = SurfacePresentation.from_json(obj["presentation"])
        gens = obj["generators"]
        return cls(pres, tuple(MobiusMap.from_json(gens[n]) for n in pres.names))


def evaluate(rep: SurfaceRep, w: Word) -> MobiusMap:
    out = IDENTITY
    n = len(rep.images)
    for g, e in w.letters:
        if not 0 <= g < n:
            raise UnknownGenerator(f"generator index {g}")
        out = out @ rep.images[g].power(e)
    return out


def relator_defect(rep: SurfaceRep) -> float:
    return evaluate(rep, rep.presentation.relator()).dist(IDENTITY)


def lshape_rep(width1: float, height1: float, width2: float, height2: float) -> SurfaceRep:
    """Translation holonomy of the L-shaped surface minus its cone point.

    The L is [0,width1]x[0,height1] union [0,width2]x[0,height2] with
    width2 < width1 and height1 < height2. Handle 1 is the horizontal core of
    the wide bar and the vertical core of its free square; handle 2 is the
    horizontal core of the tall column's free part and the difference of the
    two vertical cores.
    """
    dims = (width1, height1, width2, height2)
    if min(dims) <= 0:
        raise BadDimensions(f"side lengths must be positive: {dims}")
    if not (width2 < width1 and height1 < height2):
        raise BadDimensions(f"notch does not fit: {dims}")
    pres = SurfacePresentation(2, 1)
    t = MobiusMap.translation
    images = (
        t(width1),
        t(1j * height1),
        t(width2),
        t(1j * (height2 - height1)),
        IDENTITY,
    )
    return SurfaceRep(pres, images)


def pants_from_rotations(g1: GeodesicH3, g2: GeodesicH3, g3: GeodesicH3) -> SurfaceRep:
    """Pair of pants with boundary images R1R2, R2R3, R3R1 (product I)."""
    r1, r2, r3 = (pi_rotation(g) for g in (g1, g2, g3))
    pres = SurfacePresentation(0, 3)
    return SurfaceRep(pres, (r1 @ r2, r2 @ r3, r3 @ r1))


def default_third_axis(q: GeodesicH3) -> GeodesicH3:
    """A geodesic crossing q orthogonally (swapping its endpoints)."""
    n = zero_inf_to(q.p, q.q)
    return GeodesicH3(n.apply(-1), n.apply(1))


def one_holed_torus_from_rotations(
    r: GeodesicH3,
    q: GeodesicH3,
    a_target: MobiusMap | None = None,
    third: GeodesicH3 | None = None,
    twist: complex = 0.0,
    tol: float = 1e-9,
) -> SurfaceRep:
    """One-holed torus with alpha = R(r)R(q) and beta = R(third) alpha^twist.

    When R(third) preserves q, the peripheral [alpha, beta] equals
    R(r) R(r') with r' the image of r under R(third).
    """
    alpha = pi_rotation(r) @ pi_rotation(q)
    if a_target is not None and not alpha.equals(a_target, tol):
        raise TargetMismatch(f"R(r)R(q) differs from target by {alpha.dist(a_target):.3e}")
    n = third if third is not None else default_third_axis(q)
    beta = pi_rotation(n) @ complex_power(alpha, twist)
    pres = SurfacePresentation(1, 1)
    per = (alpha @ beta @ alpha.inverse() @ beta.inverse()).inverse()
    return SurfaceRep(pres, (alpha, beta, per))


def mirror(rep: SurfaceRep) -> SurfaceRep:
    """Relabel handles in reverse with a_i, b_i swapped.

    The boundary word of the result evaluates to the inverse of the
    original boundary image, which is what gluing two copies needs.
    """
    pres = rep.presentation
    g = pres.genus
    imgs = []
    for i in reversed(range(g)):
        imgs += [rep.images[2 * i + 1], rep.images[2 * i]]
    bnd = evaluate(rep, pres.boundary_word())
    per = [bnd] if pres.punctures == 1 else list(rep.images[2 * g:])
    return SurfaceRep(pres, tuple(imgs + per))


def amalgamate(rep1: SurfaceRep, rep2: SurfaceRep, twist: MobiusMap, tol: float = 1e-9) -> SurfaceRep:
    """Glue two one-punctured reps along their boundaries.

    Side-2 generators are conjugated by ``twist``, which must commute with
    the side-1 boundary image. Requires boundary(rep2) = boundary(rep1)^-1.
    """
    p1, p2 = rep1.presentation, rep2.presentation
    if p1.punctures != 1 or p2.punctures != 1:
        raise BoundaryMismatch("both pieces need exactly one boundary component")
    b1 = evaluate(rep1, p1.boundary_word())
    b2 = evaluate(rep2, p2.boundary_word())
    if not (b1 @ b2).equals(IDENTITY, tol * max(1.0, _norm(b1))):
        raise BoundaryMismatch(f"boundary images not inverse: defect {(b1 @ b2).dist(IDENTITY):.3e}")
    if not b1.conjugate_by(twist).equals(b1, tol * max(1.0, _norm(twist)) ** 2):
        raise NonCommutingTwist(f"twist moves boundary by {b1.conjugate_by(twist).dist(b1):.3e}")
    g = p1.genus + p2.genus
    pres = SurfacePresentation(g, 0)
    side1 = rep1.images[: 2 * p1.genus]
    side2 = tuple(m.conjugate_by(twist) for m in rep2.images[: 2 * p2.genus])
    return SurfaceRep(pres, side1 + side2)


def _norm(m: MobiusMap) -> float:
    return max(abs(m.a), abs(m.b), abs(m.c), abs(m.d))


@dataclass(frozen=True)
class ElementaryType:
    kind: str  # NonElementary | FixesPoint | PreservesPair | Bounded
    points: tuple = ()


def _fixes(m: MobiusMap, z, tol) -> bool:
    return chordal(m.apply(z), z) < tol


def _candidates(mats, tol):
    pts = []
    prods = list(mats)
    for x, y in itertools.combinations(mats, 2):
        prods += [x @ y, x @ y.inverse()]
    for m in prods:
        if m.equals(IDENTITY, tol):
            continue
        for z in fixed_points(m, tol):
            if all(chordal(z, w) >= tol for w in pts):
                pts.append(z)
    return pts


def elementary_type(mats: list, tol: float = 1e-9) -> ElementaryType:
    """Detect a common fixed point, an invariant pair, or a bounded group."""
    if not mats:
        raise ValueError("need at least one matrix")
    live = [m for m in mats if not m.equals(IDENTITY, tol)]
    if not live:
        return ElementaryType("Bounded")
    pts = _candidates(live, tol)
    for z in pts:
        if all(_fixes(m, z, tol) for m in live):
            return ElementaryType("FixesPoint", (z,))
    for z, w in itertools.combinations(pts, 2):
        ok = True
        for m in live:
            mz, mw = m.apply(z), m.apply(w)
            same = chordal(mz, z) < tol and chordal(mw, w) < tol
            swap = chordal(mz, w) < tol and chordal(mw, z) < tol
            if not (same or swap):
                ok = False
                break
        if ok:
            return ElementaryType("PreservesPair", (z, w))
    if all(classify(m, tol).tag == "Elliptic" for m in live) and _common_h3_point(live, tol):
        return ElementaryType("Bounded")
    return ElementaryType("NonElementary")


def _common_h3_point(ells, tol) -> bool:
    """All elliptic generators share an interior fixed point.

    Elliptics with pairwise intersecting axes that are closed under pair
    products (every product elliptic) fix a common point.
    """
    prods = list(ells)
    for x, y in itertools.combinations(ells, 2):
        prods += [x @ y, x @ y.inverse()]
    for m in prods:
        c = classify(m, tol)
        if c.tag not in ("Elliptic", "Identity"):
            return False
    return True


__all__ = [
    "Word",
    "SurfacePresentation",
    "SurfaceRep",
    "ElementaryType",
    "evaluate",
    "relator_defect",
    "lshape_rep",
    "pants_from_rotations",
    "one_holed_torus_from_rotations",
    "amalgamate",
    "mirror",
    "elementary_type",
    "commutator_word",
]
