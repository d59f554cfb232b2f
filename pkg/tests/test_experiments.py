import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from symker.convolution import indicator_ball
from symker.experiments import (
    ExperimentConfig,
    ResultTable,
    analytic_bump,
    convergence_datum,
    convergence_verdict,
    divergence_witness,
    family_from_dict,
    family_to_dict,
    heat_lift_check,
    heat_sandwich_grid,
    run_boundedness_probe,
    run_converge,
    sandwich_band,
)
from symker.kernels import KernelFamily
from symker.weights import RadialWeight

families = st.sampled_from([KernelFamily.heat(0.4), KernelFamily.frac_heat(1.2, 1.0), KernelFamily.frac_poisson(0.3, 0.0)])


@given(families)
def test_family_dict_round_trip(fam):
    assert family_from_dict(family_to_dict(fam)) == fam


def test_config_json_round_trip_and_hash():
    cfg = ExperimentConfig("converge", {"kind": "heat", "zeta": 1.0}, weight="exp_neg1", p=1.0)
    back = ExperimentConfig.from_json(cfg.to_json())
    assert back == cfg and back.hash == cfg.hash
    assert ExperimentConfig("converge", {"kind": "heat", "zeta": 0.5}).hash != cfg.hash


@pytest.mark.parametrize("bad", [dict(p=0.5), dict(k_max=0), dict(experiment="nope"), dict(points=())])
def test_config_rejects_bad_values(bad):
    kw = dict(experiment="converge", family={"kind": "heat", "zeta": 1.0})
    kw.update(bad)
    with pytest.raises(ValueError):
        ExperimentConfig(**kw)


def test_result_table_writes_csv_and_json(tmp_path):
    t = ResultTable(["a", "b"], [[1, 2.5]], {"x": 1}, True)
    csv_path, json_path = t.write(tmp_path, "demo")
    assert csv_path.read_text().splitlines()[0] == "a,b"
    assert json.loads(json_path.read_text())["passed"] is True


def test_heat_band_on_the_closed_form_grid():
    assert heat_sandwich_grid(1.0)["band"] <= 2.2
    assert heat_sandwich_grid(0.0)["band"] <= 2.2


def test_boundary_points_are_scored_in_both_regimes():
    out = sandwich_band(KernelFamily.frac_poisson(0.5, 1.0), 5, 8)
    assert set(out["regimes"]) == {"small", "large"}


def test_convergence_datum_is_sup_normalised():
    f = convergence_datum("smooth", RadialWeight(b=-1.0), 2.0)
    r = np.linspace(0, 8, 2001)
    assert np.max(np.abs(f(r))) == pytest.approx(1.0, rel=1e-3)


def test_convergence_verdict_needs_monotone_small_errors():
    good = [[1, 0.5, 0.0, 0, 1e-2], [2, 0.25, 0.0, 0, 1e-4]]
    bad = [[1, 0.5, 0.0, 0, 1e-4], [2, 0.25, 0.0, 0, 1e-2]]
    assert convergence_verdict(good, [0.0])["converged"]
    assert not convergence_verdict(bad, [0.0])["converged"]


def test_divergence_witness_triggers_for_fast_decaying_weight():
    w = divergence_witness(RadialWeight(b=-4.0), KernelFamily.frac_poisson(0.5, 1.0), 2.0)
    assert w["status"] == "divergent"
    assert math.isfinite(w["norm_bound"])


def test_member_run_converges():
    table = run_converge(ExperimentConfig("converge", {"kind": "heat", "zeta": 1.0}, weight="unit", p=2.0))
    assert table.passed
    assert table.rows[-1][0] == 10


def test_probe_ratios_are_finite():
    cfg = ExperimentConfig("probe", {"kind": "heat", "zeta": 1.0}, weight="unit", p=2.0)
    assert run_boundedness_probe(cfg).passed


def test_analytic_bump_is_radial_and_decays():
    f = analytic_bump(1.0)
    assert float(f(0.0)) == 1.0
    assert float(f(3.0)) < 1e-3


def test_heat_lift_matches_shifted_kernel():
    assert heat_lift_check() < 1e-12
