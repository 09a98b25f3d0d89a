"""Shared fixtures-as-functions and independent oracles for the test suite."""

from __future__ import annotations

import functools
import json
import math
from importlib import resources

import numpy as np

from neckpinch.charvar import SampledPath
from neckpinch.degeneration import ScenarioConfig, run_scenario
from neckpinch.mobius import MobiusMap


@functools.lru_cache(maxsize=None)
def scenario_trace(name: str):
    """The bundled scenario run, computed once per test session."""
    fname = {"HyperbolicNeck": "hyperbolic.json", "EllipticNeck": "elliptic.json"}[name]
    cfg = json.loads(resources.files("neckpinch").joinpath("data", fname).read_text())
    return run_scenario(ScenarioConfig.from_json(cfg))


def scenario_path(name: str) -> SampledPath:
    tr = scenario_trace(name)
    return SampledPath(tr.times, tr.reps)


def random_conjugator(rng, bound=1.0, min_det=0.2) -> MobiusMap:
    """I + bound * (uniform complex entries), kept away from singular."""
    while True:
        m = np.eye(2) + bound * (rng.uniform(-1, 1, (2, 2)) + 1j * rng.uniform(-1, 1, (2, 2)))
        if abs(np.linalg.det(m)) > min_det:
            return MobiusMap.from_array(m)


def scramble(path: SampledPath, rng, bound=1.0) -> SampledPath:
    return path.conjugated([random_conjugator(rng, bound) for _ in path.reps])


def tail_gap(a: SampledPath, b: SampledPath, g: MobiusMap, start: int) -> float:
    """Largest generator-matrix distance between g a g^-1 and b over the tail."""
    return max(m.conjugate_by(g).dist(o)
               for r, q in zip(a.reps[start:], b.reps[start:])
               for m, o in zip(r.images, q.images))


# ---------------------------------------------------------------- flat oracle

class SquareTiled:
    """Square-tiled translation surface from right/up neighbour permutations.

    Squares are unit squares; ``right[s]`` is glued across the right side of
    s, ``up[s]`` across its top.  Everything here works by following
    straight segments square by square, with no polygon geometry.
    """

    def __init__(self, right, up, origin):
        self.right, self.up = list(right), list(up)
        n = len(self.right)
        self.left = [0] * n
        self.down = [0] * n
        for s in range(n):
            self.left[self.right[s]] = s
            self.down[self.up[s]] = s
        self.origin = origin  # lower-left corner of each square in the plane

    def corner_turns(self, s):
        """Number of full turns around the lower-left corner of square s."""
        t, k = s, 0
        while True:
            t = self.up[self.right[self.down[self.left[t]]]]
            k += 1
            if t == s:
                return k

    def _corner_square(self, s, dx, dy):
        if dx > 0 and dy > 0:
            return self.up[self.right[s]]
        if dx < 0 < dy:
            return self.up[s]
        if dx > 0 > dy:
            return self.right[s]
        return s

    def _walk(self, s, fx, fy, vx, vy):
        """Square reached by the segment, or None if it hits a cone corner first."""
        events = []
        if vx:
            lines = range(1, math.floor(fx + vx) + 1) if vx > 0 else range(0, math.ceil(fx + vx) - 1, -1)
            events += [((x - fx) / vx, "x") for x in lines]
        if vy:
            lines = range(1, math.floor(fy + vy) + 1) if vy > 0 else range(0, math.ceil(fy + vy) - 1, -1)
            events += [((y - fy) / vy, "y") for y in lines]
        events = sorted(e for e in events if 0 < e[0] < 1 - 1e-12)
        k = 0
        while k < len(events):
            lam, kind = events[k]
            if k + 1 < len(events) and abs(events[k + 1][0] - lam) < 1e-12:
                if self.corner_turns(self._corner_square(s, vx, vy)) > 1:
                    return None
                s = (self.right if vx > 0 else self.left)[s]
                s = (self.up if vy > 0 else self.down)[s]
                k += 2
                continue
            if kind == "x":
                s = (self.right if vx > 0 else self.left)[s]
            else:
                s = (self.up if vy > 0 else self.down)[s]
            k += 1
        return s

    def radius(self, s, fx, fy, reach):
        best_cone = math.inf
        best_loop = math.inf
        for p in range(-reach, reach + 1):
            for q in range(-reach, reach + 1):
                # a corner of the lattice
                vx, vy = p - fx, q - fy
                d = math.hypot(vx, vy)
                if d < best_cone:
                    end = self._walk(s, fx, fy, vx, vy)
                    if end is not None and self.corner_turns(self._corner_square(end, vx, vy)) > 1:
                        best_cone = d
                # a loop back to the same point
                if (p, q) != (0, 0):
                    d = math.hypot(p, q)
                    if d < best_loop and self._walk(s, fx, fy, p, q) == s:
                        best_loop = d
        return min(best_cone, best_loop / 2)

    def sup_radius(self, per_square, reach):
        pts = [(k + 0.5) / per_square for k in range(per_square)]
        return max(self.radius(s, fx, fy, reach) for s in range(len(self.right))
                   for fx in pts for fy in pts)

    def locate(self, z):
        for s, o in enumerate(self.origin):
            w = z - o
            if 0 < w.real < 1 and 0 < w.imag < 1:
                return s, w.real, w.imag
        raise ValueError(f"{z} is not inside a square")


def tiled_lshape(w1, h1, w2, h2) -> SquareTiled:
    """Integer L-shape with opposite sides glued, as in flatgeom.lshape."""
    cells = [(i, j) for j in range(h2) for i in range(w1) if j < h1 or i < w2]
    index = {c: n for n, c in enumerate(cells)}
    right, up = [], []
    for i, j in cells:
        right.append(index[(i + 1, j)] if (i + 1, j) in index else index[(0, j)])
        up.append(index[(i, j + 1)] if (i, j + 1) in index else index[(i, 0)])
    return SquareTiled(right, up, [complex(i, j) for i, j in cells])


def tiled_torus(n) -> SquareTiled:
    """Square torus of side n cut into n^2 unit squares."""
    cells = [(i, j) for j in range(n) for i in range(n)]
    index = {c: k for k, c in enumerate(cells)}
    right = [index[((i + 1) % n, j)] for i, j in cells]
    up = [index[(i, (j + 1) % n)] for i, j in cells]
    return SquareTiled(right, up, [complex(i, j) for i, j in cells])
