"""Command-line front end.

Exit codes: 0 pass, 1 certificate or convergence failure, 2 bad input,
3 solver or normalization failure.  Every file written carries a manifest
(package version, seed, hash of the effective configuration), and nothing
time-dependent, so reruns are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from importlib import resources
from pathlib import Path

import click

from . import __version__
from .charvar import SampledPath, lift_outputs, lift_path
from .degeneration import (
    SCENARIOS,
    TOL_PROFILES,
    ScenarioConfig,
    certify_trace,
    run_scenario,
)
from .errors import (
    BadGluing,
    ConfigError,
    NeckpinchError,
    NormalizationFailure,
    NotConvergentInChi,
)
from .flatgeom import (
    EndDescriptor,
    PolygonSurface,
    classify_cusp,
    cone_angles,
    flat_end,
    upper_injectivity_radius,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3

SCENARIO_ALIASES = {
    "hyperbolic": "HyperbolicNeck",
    "elliptic": "EllipticNeck",
    **{s: s for s in SCENARIOS},
}
BUNDLED = {"HyperbolicNeck": "hyperbolic.json", "EllipticNeck": "elliptic.json"}


def bundled_text(name: str) -> str:
    return resources.files("neckpinch").joinpath("data", name).read_text()


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class Manifest:
    def __init__(self, command: str, config, seed: int):
        self.command = command
        self.seed = seed
        self.config_hash = hashlib.sha256(canonical_json(config).encode()).hexdigest()

    def fields(self) -> dict:
        return {"command": self.command, "version": __version__, "seed": self.seed,
                "config_sha256": self.config_hash}

    def line(self) -> str:
        return " ".join(f"{k}={v}" for k, v in self.fields().items())

    def csv(self, text: str) -> str:
        return f"# neckpinch {self.line()}\n{text}"

    def json(self, obj: dict) -> str:
        return json.dumps({"manifest": self.fields(), **obj}, indent=2, sort_keys=True) + "\n"

    def svg(self, body: str) -> str:
        head, rest = body.split("\n", 1)
        return f"{head}\n<!-- neckpinch {self.line()} -->\n{rest}"


def svg_plot(xs, ys, title: str, xlabel: str, ylabel: str, width=640, height=400) -> str:
    """Single polyline on linear axes with the data ranges printed at the corners."""
    pad = 50
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def px(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def py(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
    return "\n".join([
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
        'fill="none" stroke="#888"/>',
        f'<polyline fill="none" stroke="#1f4e9a" stroke-width="1.5" points="{pts}"/>',
        f'<text x="{width / 2}" y="{pad / 2}" text-anchor="middle">{title}</text>',
        f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle">{xlabel}</text>',
        f'<text x="12" y="{height / 2}" transform="rotate(-90 12 {height / 2})" '
        f'text-anchor="middle">{ylabel}</text>',
        f'<text x="{pad}" y="{height - pad + 16}" font-size="11">{x0:.3g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 16}" font-size="11" text-anchor="end">{x1:.3g}</text>',
        f'<text x="{pad - 4}" y="{height - pad}" font-size="11" text-anchor="end">{y0:.3g}</text>',
        f'<text x="{pad - 4}" y="{pad + 10}" font-size="11" text-anchor="end">{y1:.3g}</text>',
        "</svg>",
        "",
    ])


def _fail(code: int, msg: str):
    click.echo(msg, err=True)
    sys.exit(code)


def _load_json(path, what: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        _fail(EXIT_INPUT, f"cannot read {what} {path}: {exc}")


def _out_dir(out) -> Path:
    d = Path(out)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        _fail(EXIT_INPUT, f"cannot create output directory {d}: {exc}")
    return d


@click.group()
def main():
    """Neck-pinching degenerations of surface group representations."""


@main.command()
def version():
    """Print the package version."""
    click.echo(__version__)


@main.command()
@click.argument("scenario", type=click.Choice(sorted(SCENARIO_ALIASES)))
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="Scenario JSON; the bundled one is used when omitted.")
@click.option("--out", default="out", show_default=True, help="Output directory.")
@click.option("--seed", default=0, show_default=True, help="Recorded in every output header.")
@click.option("--tol-profile", type=click.Choice(sorted(TOL_PROFILES)), default="default",
              show_default=True)
def simulate(scenario, config_path, out, seed, tol_profile):
    """Run a degeneration scenario and certify its limit behaviour."""
    name = SCENARIO_ALIASES[scenario]
    raw = _load_json(config_path, "config") if config_path else json.loads(bundled_text(BUNDLED[name]))
    if not isinstance(raw, dict):
        _fail(EXIT_INPUT, "config must be a JSON object")
    raw = dict(raw)
    if raw.setdefault("scenario", name) != name:
        _fail(EXIT_INPUT, f"config is for {raw['scenario']}, not {name}")
    try:
        cfg = ScenarioConfig.from_json(raw)
    except ConfigError as exc:
        _fail(EXIT_INPUT, f"config error: {exc}")
    effective = {**cfg.to_json(), "tol_profile": tol_profile}
    man = Manifest("simulate", effective, seed)
    d = _out_dir(out)
    try:
        trace = run_scenario(cfg)
    except NeckpinchError as exc:
        _fail(EXIT_SOLVER, f"solver failure: {exc}")
    report = certify_trace(trace, tol_profile)
    (d / "trace.csv").write_text(man.csv(trace.csv_text()))
    (d / "certificate.json").write_text(man.json(report.to_json()))
    (d / "path.json").write_text(man.json(trace.path_json()))
    xs, ys = [], []
    for r in trace.records:
        if abs(r.gap) > 0:
            xs.append(math.log10(r.t))
            ys.append(math.log10(abs(r.gap)))
    (d / "tr2_vs_t.svg").write_text(man.svg(svg_plot(
        xs, ys, f"{name}: neck trace", "log10 t", "log10 |tr^2 - 4|")))
    c = report.clauses
    click.echo(f"{name}: {'PASS' if report.passed else 'FAIL'}"
               f" (axis target {c['c_axis'].get('target')}, final |tr^2-4| {c['b_trace_limit']['final_gap']:.3g})")
    if not report.passed:
        _fail(EXIT_FAIL, f"first failing clause: {report.first_failure}")


@main.command()
@click.argument("surface", type=click.Path(dir_okay=False))
@click.option("--grid", default=16, show_default=True, help="Sample lattice density per polygon.")
@click.option("--out", default=None, help="Also write flat_report.json here.")
@click.option("--seed", default=0, show_default=True)
def flat(surface, grid, out, seed):
    """Validate a polygon surface and report its flat invariants."""
    raw = _load_json(surface, "surface")
    try:
        s = PolygonSurface.from_json(raw)
    except BadGluing as exc:
        _fail(EXIT_INPUT, f"bad gluing: {exc}")
    except (KeyError, TypeError, ValueError) as exc:
        _fail(EXIT_INPUT, f"malformed surface file: {exc}")
    cones = cone_angles(s)
    inj = upper_injectivity_radius(s, grid)
    report = {
        "cone_points": [{"corner": list(c), "angle": a, "angle_over_pi": a / math.pi} for c, a in cones],
        "genus": s.genus,
        "euler_characteristic": s.euler_characteristic,
        "gauss_bonnet_residual": s.gauss_bonnet_residual(),
        "upper_injectivity_radius": inj,
        "grid": grid,
    }
    if not cones:
        click.echo("cone points: none")
    for c, a in cones:
        click.echo(f"cone point at corner {c}: angle {a:.12g} ({a / math.pi:.12g} pi)")
    click.echo(f"genus {s.genus}, Euler characteristic {s.euler_characteristic}")
    click.echo(f"Gauss-Bonnet residual {report['gauss_bonnet_residual']:.3g}")
    click.echo(f"upper injectivity radius (grid {grid}) {inj:.12g}")
    if out:
        man = Manifest("flat", {"surface": raw, "grid": grid}, seed)
        (_out_dir(out) / "flat_report.json").write_text(man.json(report))


def _read_words(path, pres):
    words = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            words.append(pres.word(line))
    return words


@main.command()
@click.argument("path_file", type=click.Path(dir_okay=False))
@click.option("--words", "words_file", type=click.Path(dir_okay=False), default=None,
              help="One word per line in generator names; defaults to a standard set.")
@click.option("--out", default="out", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--drift", default=5e-2, show_default=True, help="Cauchy tolerance for the tail.")
def lift(path_file, words_file, out, seed, drift):
    """Lift a path of representations to a convergent path of matrices."""
    raw = _load_json(path_file, "path")
    try:
        path = SampledPath.from_json(raw)
        words = _read_words(words_file, path.presentation) if words_file else None
    except (KeyError, TypeError, ValueError, OSError, NeckpinchError) as exc:
        _fail(EXIT_INPUT, f"malformed path input: {exc}")
    try:
        conj, lifted, diag = lift_path(path, words, drift=drift)
    except NotConvergentInChi as exc:
        _fail(EXIT_FAIL, f"not convergent in the character variety: {exc}")
    except NormalizationFailure as exc:
        _fail(EXIT_SOLVER, f"normalization failure: {exc}")
    man = Manifest("lift", {"path": raw, "words": None if words is None else
                            [w.to_str(path.presentation.names) for w in words], "drift": drift}, seed)
    cj, lj, dcsv = lift_outputs(conj, lifted, diag)
    d = _out_dir(out)
    (d / "conjugators.json").write_text(man.json(cj))
    (d / "lifted.json").write_text(man.json(lj))
    (d / "diagnostics.csv").write_text(man.csv(dcsv))
    click.echo(f"case {diag.case_tag}; lifted tail spread {diag.lifted_spread:.3g}")
    if not diag.cauchy_ok:
        _fail(EXIT_FAIL, f"lifted path is not Cauchy within {drift}")


@main.command("classify-cusp")
@click.option("--period", default=None, help="Flat period c, e.g. '0+4.44288j'.")
@click.option("--expanding", is_flag=True, help="The end is a shrinking expanding cylinder.")
@click.option("--angle", type=float, default=None,
              help="Angle to the translation foliation; derived from the period when omitted.")
@click.option("--tol", default=1e-9, show_default=True)
def classify_cusp_cmd(period, expanding, angle, tol):
    """Classify the holonomy of an end from its flat data."""
    try:
        if expanding:
            e = EndDescriptor("ShrinkingExpanding")
        elif period is None:
            raise ValueError("give --period or --expanding")
        else:
            c = complex(period.replace(" ", ""))
            e = flat_end(c) if angle is None else EndDescriptor("HalfInfiniteFlat", c, angle)
    except ValueError as exc:
        _fail(EXIT_INPUT, f"bad end description: {exc}")
    res = classify_cusp(e, tol)
    out = {"tag": res.tag}
    if res.length is not None:
        out["complex_length"] = [res.length.real, res.length.imag]
    if res.angle is not None:
        out["angle"] = res.angle
    if res.wraps is not None:
        out["wraps"] = res.wraps
    click.echo(json.dumps(out, sort_keys=True))


if __name__ == "__main__":
    main()
