"""Exact holonomy of the exponential developing model and bound validators.

On a flat cylinder whose developing map is w -> exp(w / SQRT2), moving by a
flat vector w translates the frame by SQRT2 * Re w along the axis (0, inf)
and turns it by SQRT2 * Im w about that axis.  Everything here is exact in
that model.  The inequality checks take measured quantities from elsewhere
and report which clause holds, with its slack.
"""

from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass

from .errors import NonPositiveDistance, ZeroPeriod
from .flatgeom import SQRT2, FlatCylinder, PoleModel, contour_period, modulus
from .mobius import MobiusMap

DEFAULT_K = 12.0


@dataclass(frozen=True)
class ModelFrame:
    distance: float
    angle: float

    def __add__(self, other):
        return ModelFrame(self.distance + other.distance, self.angle + other.angle)


def model_epstein_frame(w: complex) -> ModelFrame:
    w = complex(w)
    return ModelFrame(SQRT2 * w.real, SQRT2 * w.imag)


def cylinder_holonomy(c: complex) -> MobiusMap:
    """The loxodromic w -> exp(SQRT2 * c) w with axis (0, inf)."""
    c = complex(c)
    if c == 0:
        raise ZeroPeriod("a cylinder needs a nonzero period")
    half = cmath.exp(SQRT2 * c / 2)
    return MobiusMap(half, 0, 0, 1 / half)


def peripheral_holonomy(pole: PoleModel) -> MobiusMap:
    """Holonomy around a double pole, from its loop period."""
    return cylinder_holonomy(contour_period(pole))


def cylinder_estimate_discrepancy(c: complex, height: float, n_steps: int, noise: float = 0.0) -> float:
    """Relative gap between exact and stepwise frame transport around the core.

    The core is cut into n_steps equal flat steps and their model frames are
    summed.  ``noise`` injects a bi-Lipschitz defect: each step is stretched
    by 1 + noise / modulus, so a taller cylinder of the same period is
    closer to the model.  With noise = 0 the sum is exact.
    """
    cyl = FlatCylinder(complex(c), height)
    if n_steps < 2:
        raise ValueError(f"need at least two steps, got {n_steps}")
    stretch = 1 + noise / modulus(cyl)
    step = cyl.period / n_steps
    dist = math.fsum(stretch * model_epstein_frame(step).distance for _ in range(n_steps))
    ang = math.fsum(stretch * model_epstein_frame(step).angle for _ in range(n_steps))
    exact = model_epstein_frame(cyl.period)
    gaps = [abs(got - want) / abs(want) for got, want in
            ((dist, exact.distance), (ang, exact.angle)) if want != 0]
    return max(gaps)


CLAUSES = ("h_speed", "v_speed", "v_curvature", "h_curv_speed_product")


@dataclass(frozen=True)
class BoundReport:
    d: float
    applicable: bool
    passed: dict
    slack: dict
    k: float = DEFAULT_K

    @property
    def ok(self):
        return self.applicable and all(self.passed.values())

    def failures(self):
        return [name for name in CLAUSES if not self.passed[name]]


def dumas_bounds_check(d: float, measured: dict, k: float = DEFAULT_K) -> BoundReport:
    """Check measured surface quantities at distance d from the zeros.

    h_speed < 6/d^2;  sqrt2 <= v_speed < sqrt2 + 6/d^2;  |v_curvature| < 6/d^2;
    |h_curv_speed_product - sqrt2| <= k/d.  The exact model sits on the lower
    end of the vertical-speed range, so that end is closed.
    """
    if not d > 0:
        raise NonPositiveDistance(f"distance to the zeros must be positive, got {d}")
    eps = 6 / d**2
    v = measured["v_speed"]
    slack = {
        "h_speed": eps - measured["h_speed"],
        "v_speed": min(v - SQRT2, SQRT2 + eps - v),
        "v_curvature": eps - abs(measured["v_curvature"]),
        "h_curv_speed_product": k / d - abs(measured["h_curv_speed_product"] - SQRT2),
    }
    passed = {
        "h_speed": slack["h_speed"] > 0,
        "v_speed": v >= SQRT2 and v < SQRT2 + eps,
        "v_curvature": slack["v_curvature"] > 0,
        "h_curv_speed_product": slack["h_curv_speed_product"] >= 0,
    }
    return BoundReport(d, eps < 0.75, passed, slack, k)


def exact_model_measurements() -> dict:
    return {"h_speed": 0.0, "v_speed": SQRT2, "v_curvature": 0.0, "h_curv_speed_product": SQRT2}


def bound_report_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["d", *(f"slack_{n}" for n in CLAUSES), "applicable"])
    for r in reports:
        w.writerow([repr(r.d), *(repr(r.slack[n]) for n in CLAUSES), int(r.applicable)])
    return buf.getvalue()


__all__ = [
    "ModelFrame", "model_epstein_frame", "cylinder_holonomy", "peripheral_holonomy",
    "cylinder_estimate_discrepancy", "BoundReport", "dumas_bounds_check",
    "exact_model_measurements", "bound_report_csv", "CLAUSES", "DEFAULT_K",
]
