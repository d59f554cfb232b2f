import math

import pytest

from symker.classcert import cert_P4, cert_P5, certify, drift, heat_p4_bound, heat_profile_increasing
from symker.kernels import KernelFamily


def test_drift_is_symmetric_relative_change():
    assert drift(1.0, 1.02) == pytest.approx(0.02, rel=1e-6)
    assert drift(2.0, 2.0) == 0.0


def test_heat_report_has_the_expected_constants_and_passes():
    rep = certify(KernelFamily.heat(1.0))
    assert (rep.gamma, rep.d_gamma, rep.c_gamma) == (2.0, 6.0, 4.0)
    assert rep.passed
    assert set(rep.axioms) == {"P1_P2", "P3", "P4", "P5"}
    assert "P3" in rep.summary()
    assert '"passed": true' in rep.to_json()


def test_p3_records_the_literal_radius_check():
    ax = certify(KernelFamily.heat(1.0)).axioms["P3"]
    assert ax.constants["maximal_radius"] >= 1.0
    if ax.constants["maximal_radius"] > 1.0:
        assert "literal_radius_R" in ax.constants


def test_p4_for_heat_is_below_its_explicit_bound():
    ax = cert_P4(KernelFamily.heat(1.0))
    assert ax.passed
    assert heat_p4_bound(1.0, 2.0, 0.5) > 0


def test_p5_passes_for_extension_kernel():
    assert cert_P5(KernelFamily.frac_poisson(0.5, 1.0)).passed


def test_heat_profile_increases_in_time_near_the_origin():
    assert heat_profile_increasing(1.0)
