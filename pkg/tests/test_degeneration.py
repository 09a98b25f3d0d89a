import csv
import io
import json
import math
import warnings

import numpy as np
import pytest

from neckpinch.charvar import SampledPath, lift_path, limit_distance_to_identity
from neckpinch.degeneration import (CSV_COLUMNS, TOL_PROFILES, ScenarioConfig, build_elliptic_path,
                                    build_small_hyperbolics, certificate_json, certify_trace,
                                    constant_trace, fuchsian_torus, fuchsian_trace, mirror_order)
from neckpinch.errors import BranchAmbiguity, ConfigError
from neckpinch.mobius import (INF, GeodesicH3, axis, classify, complex_length, geodesic_distance,
                              real_power)
from neckpinch.surface_rep import evaluate, relator_defect
from support import scenario_path, scenario_trace, scramble

SCENARIOS = ("HyperbolicNeck", "EllipticNeck")


@pytest.mark.parametrize("name", SCENARIOS)
def test_bundled_scenarios_certify(name):
    report = certify_trace(scenario_trace(name))
    assert report.passed, report.first_failure
    assert json.loads(certificate_json(report))["passed"] is True


@pytest.mark.parametrize("name", SCENARIOS)
def test_relators_hold_along_the_path(name):
    assert max(r.relator_defect for r in scenario_trace(name).records) < 1e-8


@pytest.mark.parametrize("name,tag", [("HyperbolicNeck", "Hyperbolic"), ("EllipticNeck", "Elliptic")])
def test_neck_keeps_its_type(name, tag):
    assert {r.tag for r in scenario_trace(name).records} == {tag}


@pytest.mark.parametrize("name", SCENARIOS)
def test_neck_distance_decreases_over_the_tail(name):
    ds = [r.neck_distance for r in scenario_trace(name).records]
    tail = ds[len(ds) // 2:]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(tail, tail[1:]))


def test_elliptic_sides_are_exchanged_by_the_half_turn():
    recs = scenario_trace("EllipticNeck").records
    assert max(r.extra["doubling_symmetry"] for r in recs) < 1e-8
    assert max(r.extra["pants_defect"] for r in recs) < 1e-8


def test_constant_control_fails_the_limit_clauses():
    base = scenario_trace("HyperbolicNeck")
    const = constant_trace(base.records[-1].rep, base.neck_word, [10.0 * 1.1 ** k for k in range(16)])
    report = certify_trace(const)
    assert not report.passed
    assert not report.clauses["a_never_identity"]["passed"]
    assert not report.clauses["b_trace_limit"]["passed"]
    assert report.first_failure == "a_never_identity"


def test_fuchsian_control_has_no_witness():
    trace = fuchsian_trace([10.0 * 1.1 ** k for k in range(16)])
    assert not any(r.jorgensen_min < 1 and r.jorgensen_witness for r in trace.records)
    e = certify_trace(trace).clauses["e_nondiscrete"]
    assert e["threshold_time"] is None and not e["required"]


def test_fuchsian_torus_has_cusp():
    rep = fuchsian_torus(3, 3.5)
    peri = rep.images[2]
    assert peri.tr2 == pytest.approx(4, abs=1e-12)
    assert relator_defect(rep) < 1e-12
    with pytest.raises(ValueError):
        fuchsian_torus(2, 5)


@pytest.mark.parametrize("t", [10.0, 1e3])
def test_small_hyperbolics_fix_the_target(t):
    h1, h2 = build_small_hyperbolics(INF, (40.0, -40.0), t, kappa=0.15, axis_scale=5.0)
    assert complex_length(h1).real == pytest.approx(0.15 / t**2, rel=1e-9)
    assert classify(h2, 1e-20).tag == "Hyperbolic"
    g = h1 @ h2
    assert abs(g.apply(0)) < 1e-10
    assert classify(g, 1e-20).tag == "Hyperbolic"


def test_small_hyperbolics_at_large_time():
    h1, h2 = build_small_hyperbolics(INF, (40.0, -40.0), 1e3, kappa=0.15, axis_scale=5.0)
    assert h1.dist_to_identity() < 1e-2
    ax = axis(h1 @ h2, 1e-20).geodesic
    assert geodesic_distance(ax, GeodesicH3(0j, INF)) < 1e-3


def test_small_hyperbolics_argument_checks():
    with pytest.raises(ValueError):
        build_small_hyperbolics(0j, (1.0, -1.0), 1.0)
    with pytest.raises(ValueError):
        build_small_hyperbolics(INF, (-1.0, 1.0), 1.0)
    with pytest.raises(ValueError):
        build_small_hyperbolics(INF, (1.0, -1.0), 0.0)


@pytest.mark.parametrize("t", [10.0, 100.0, 1000.0])
def test_elliptic_power_is_a_half_turn(t):
    e, u = build_elliptic_path(GeodesicH3(0j, INF), t)
    c = classify(e, 1e-16)
    # the admissible angle nearest the schedule 0.5 / t^2
    assert c.tag == "Elliptic" and c.angle < 2 * 0.5 / t**2
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BranchAmbiguity)
        half = classify(real_power(e, u), 1e-9)
    assert half.tag == "Elliptic" and half.angle == pytest.approx(math.pi, abs=1e-9)


def test_elliptic_path_rejects_bad_axis():
    with pytest.raises(ValueError):
        build_elliptic_path(GeodesicH3(INF, 0j), 10.0)


def test_config_validation():
    times = ScenarioConfig.geometric_grid(10, 1000, 8)
    with pytest.raises(ConfigError):
        ScenarioConfig("Sideways", times)
    with pytest.raises(ConfigError):
        ScenarioConfig("HyperbolicNeck", times[:5])
    with pytest.raises(ConfigError):
        ScenarioConfig("HyperbolicNeck", times[::-1])
    with pytest.raises(ConfigError):
        ScenarioConfig("HyperbolicNeck", times, base_point=0j)
    with pytest.raises(ConfigError):
        ScenarioConfig.from_json({"scenario": "HyperbolicNeck", "grid": {"t0": 1}})


def test_config_json_round_trip():
    cfg = ScenarioConfig.from_json({"scenario": "EllipticNeck", "grid": {"t0": 10, "t1": 100, "n": 9},
                                    "base_point": [1.0, 2.0]})
    assert ScenarioConfig.from_json(cfg.to_json()) == cfg
    assert TOL_PROFILES["strict"]["tr2_final"] < TOL_PROFILES["default"]["tr2_final"]


def test_csv_and_path_outputs():
    trace = scenario_trace("HyperbolicNeck")
    rows = list(csv.reader(io.StringIO(trace.csv_text())))
    assert tuple(rows[0]) == CSV_COLUMNS and len(rows) == 65
    assert float(rows[-1][0]) == pytest.approx(1000)
    path = SampledPath.from_json(trace.path_json())
    assert list(path.times) == trace.times


def test_mirror_order():
    assert mirror_order(["a1", "b1", "a2", "b2"]) == ["b2", "a2", "b1", "a1"]


def test_scrambled_lift_closes_the_neck():
    path = scenario_path("HyperbolicNeck")
    word = scenario_trace("HyperbolicNeck").neck_word
    _, lifted, _ = lift_path(scramble(path, np.random.default_rng(17)))
    assert limit_distance_to_identity(lifted, word) < 1e-6
    assert evaluate(lifted.reps[-1], word).dist_to_identity() < 1e-3
