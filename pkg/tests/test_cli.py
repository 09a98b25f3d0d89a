import json

import numpy as np
import pytest
from click.testing import CliRunner

from neckpinch import __version__
from neckpinch.charvar import SampledPath
from neckpinch.cli import bundled_text, main
from neckpinch.degeneration import fuchsian_torus
from neckpinch.flatgeom import lshape
from support import random_conjugator, scenario_trace


@pytest.fixture
def runner():
    return CliRunner()


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def _fuchsian_path(times):
    return SampledPath(times, [fuchsian_torus(3 + t ** -3, 3 + 0.5 * t ** -3) for t in times])


def test_version(runner):
    res = runner.invoke(main, ["version"])
    assert res.exit_code == 0 and res.output.strip() == __version__


@pytest.mark.parametrize("scenario,target", [("elliptic", "Point"), ("hyperbolic", "Geodesic")])
def test_simulate_bundled(runner, tmp_path, scenario, target):
    res = runner.invoke(main, ["simulate", scenario, "--out", str(tmp_path), "--seed", "3"])
    assert res.exit_code == 0, res.output
    cert = json.loads((tmp_path / "certificate.json").read_text())
    assert cert["passed"] and cert["clauses"]["c_axis"]["target"] == target
    assert cert["manifest"]["seed"] == 3 and cert["manifest"]["version"] == __version__
    csv_text = (tmp_path / "trace.csv").read_text()
    assert csv_text.startswith("# neckpinch command=simulate") and "seed=3" in csv_text.splitlines()[0]
    svg = (tmp_path / "tr2_vs_t.svg").read_text()
    assert svg.startswith("<svg") and "<polyline" in svg and "seed=3" in svg


def test_simulate_rejects_coarse_grid(runner, tmp_path):
    cfg = _write(tmp_path / "c.json", {"scenario": "HyperbolicNeck", "grid": {"t0": 10, "t1": 100, "n": 4}})
    res = runner.invoke(main, ["simulate", "hyperbolic", "--config", cfg, "--out", str(tmp_path / "o")])
    assert res.exit_code == 2


def test_simulate_rejects_mismatched_and_unreadable_config(runner, tmp_path):
    cfg = _write(tmp_path / "c.json", {"scenario": "EllipticNeck", "grid": {"t0": 10, "t1": 100, "n": 8}})
    assert runner.invoke(main, ["simulate", "hyperbolic", "--config", cfg]).exit_code == 2
    (tmp_path / "bad.json").write_text("{not json")
    assert runner.invoke(main, ["simulate", "hyperbolic", "--config", str(tmp_path / "bad.json")]).exit_code == 2


def test_simulate_fails_certificate_on_short_grid(runner, tmp_path):
    # eight samples over [10, 12] are too few and too early for the trace limit
    cfg = _write(tmp_path / "c.json", {"scenario": "HyperbolicNeck", "grid": {"t0": 10, "t1": 12, "n": 8}})
    res = runner.invoke(main, ["simulate", "hyperbolic", "--config", cfg, "--out", str(tmp_path / "o")])
    assert res.exit_code == 1
    assert (tmp_path / "o" / "certificate.json").exists()


def test_simulate_is_deterministic(runner, tmp_path):
    cfg = _write(tmp_path / "c.json", {"scenario": "HyperbolicNeck", "grid": {"t0": 10, "t1": 1000, "n": 12}})
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        runner.invoke(main, ["simulate", "hyperbolic", "--config", cfg, "--out", str(d), "--seed", "9"])
        outs.append({f: (d / f).read_bytes() for f in ("trace.csv", "certificate.json", "path.json")})
    assert outs[0] == outs[1]


def test_flat_lshape(runner, tmp_path):
    surf = tmp_path / "l.json"
    surf.write_text(bundled_text("lshape.json"))
    res = runner.invoke(main, ["flat", str(surf), "--out", str(tmp_path / "o")])
    assert res.exit_code == 0
    assert "(6 pi)" in res.output and "genus 2" in res.output
    rep = json.loads((tmp_path / "o" / "flat_report.json").read_text())
    assert rep["genus"] == 2 and rep["manifest"]["command"] == "flat"


def test_flat_square_torus(runner, tmp_path):
    surf = tmp_path / "t.json"
    surf.write_text(bundled_text("square_torus.json"))
    res = runner.invoke(main, ["flat", str(surf)])
    assert res.exit_code == 0 and "cone points: none" in res.output


def test_flat_mismatched_lengths(runner, tmp_path):
    obj = lshape().to_json()
    obj["polygons"][0][2] = [2.5, 0.0]
    res = runner.invoke(main, ["flat", _write(tmp_path / "bad.json", obj)])
    assert res.exit_code == 2 and "bad gluing" in res.output


def test_lift_scrambled_path(runner, tmp_path):
    path = _fuchsian_path([1 + 0.5 * k for k in range(30)])
    rng = np.random.default_rng(2)
    scrambled = path.conjugated([random_conjugator(rng) for _ in path.reps])
    res = runner.invoke(main, ["lift", _write(tmp_path / "p.json", scrambled.to_json()),
                               "--out", str(tmp_path / "o")])
    assert res.exit_code == 0, res.output
    for f in ("conjugators.json", "lifted.json", "diagnostics.csv"):
        assert (tmp_path / "o" / f).exists()
    assert (tmp_path / "o" / "diagnostics.csv").read_text().startswith("# neckpinch command=lift")


def test_lift_divergent_path(runner, tmp_path):
    times = [1.0 + 0.5 * k for k in range(40)]
    path = SampledPath(times, [fuchsian_torus(3.0 + t, 3.0) for t in times])
    res = runner.invoke(main, ["lift", _write(tmp_path / "p.json", path.to_json()), "--out", str(tmp_path / "o")])
    assert res.exit_code == 1


def test_lift_constant_path(runner, tmp_path):
    rep = scenario_trace("HyperbolicNeck").records[-1].rep
    path = SampledPath([1.0, 2.0, 3.0, 4.0, 5.0], [rep] * 5)
    res = runner.invoke(main, ["lift", _write(tmp_path / "p.json", path.to_json()), "--out", str(tmp_path / "o")])
    assert res.exit_code == 0, res.output
    conj = json.loads((tmp_path / "o" / "conjugators.json").read_text())["conjugators"]
    assert all(c == conj[0] for c in conj)


def test_lift_malformed_input(runner, tmp_path):
    res = runner.invoke(main, ["lift", _write(tmp_path / "p.json", {"times": [1]}), "--out", str(tmp_path / "o")])
    assert res.exit_code == 2


def test_classify_cusp(runner):
    res = runner.invoke(main, ["classify-cusp", "--period", "0+4.442882938158366j"])
    out = json.loads(res.output)
    assert res.exit_code == 0 and out["tag"] == "IdentityOrParabolic" and out["wraps"] == 1
    out = json.loads(runner.invoke(main, ["classify-cusp", "--expanding"]).output)
    assert out["tag"] == "ParabolicHoroball"
    assert runner.invoke(main, ["classify-cusp"]).exit_code == 2
    assert runner.invoke(main, ["classify-cusp", "--period", "abc"]).exit_code == 2


def test_simulate_reports_solver_failure_with_index(runner, tmp_path):
    # at t < 1 the neck schedule is too long for the closed-form builder
    cfg = _write(tmp_path / "c.json", {"scenario": "HyperbolicNeck", "grid": {"t0": 0.01, "t1": 1, "n": 8}})
    res = runner.invoke(main, ["simulate", "hyperbolic", "--config", cfg, "--out", str(tmp_path / "o")])
    assert res.exit_code == 3 and "sample 0" in res.output


def test_simulate_rejects_nonpositive_schedule(runner, tmp_path):
    cfg = _write(tmp_path / "c.json", {"scenario": "EllipticNeck", "grid": {"t0": 10, "t1": 100, "n": 8},
                                       "spin_rate": 0})
    assert runner.invoke(main, ["simulate", "elliptic", "--config", cfg]).exit_code == 2
