import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from symker.envelopes import (
    EnvelopeSpec,
    EstimateNotAsserted,
    fitted_band,
    frac_poisson_exponent,
    log_heat_envelope,
    phi0_envelope,
    phi0_lower,
    phi0_upper,
)
from symker.geometry import H3, log_phi0_h3
from symker.kernels import KernelFamily, log_kernel_profile


@given(st.floats(0, 60))
def test_phi0_sits_between_its_envelopes(r):
    # phi_0(r) = r e^{-r} / sinh r on H^3: between e^{-r} and 2(1 + r) e^{-r}
    lp = log_phi0_h3(r)
    assert lp <= math.log(2 * phi0_upper(H3, r)) + 1e-12
    assert lp >= math.log(phi0_lower(H3, r)) - 1e-12
    assert abs(lp - math.log(phi0_envelope(H3, r))) <= math.log(2) + 1e-12


def test_heat_envelope_band_is_tight_on_a_grid():
    fam = KernelFamily.heat(1.0)
    logs = []
    for t in np.geomspace(0.01, 10, 15):
        for r in np.linspace(0, 20, 21):
            logs.append(float(log_kernel_profile(fam, t, r)) - log_heat_envelope(H3, 1.0, t, r))
    assert math.exp(max(logs) - min(logs)) < 2.2


def test_fitted_band_rejects_bad_ratios():
    assert fitted_band([1.0, 3.0]) == (1.0, 3.0)
    for bad in ([], [0.0, 1.0], [math.nan]):
        with pytest.raises(ValueError):
            fitted_band(bad)


def test_envelope_spec_validation():
    with pytest.raises(ValueError):
        EnvelopeSpec("bogus", H3)
    with pytest.raises(ValueError):
        EnvelopeSpec("heat", H3, zeta=1.5)
    with pytest.raises(ValueError):
        EnvelopeSpec("heat", H3, kappa=0.0)


def test_frac_poisson_exponent_is_finite_and_positive():
    assert frac_poisson_exponent(H3, 0.5, 1.0) > 0


def test_large_time_frac_heat_outside_its_range_is_refused():
    spec = EnvelopeSpec("frac_heat", H3, zeta=1.0, param=1.5)
    raised = 0
    for t, r in ((50.0, 0.0), (100.0, 0.5)):
        try:
            spec.log(t, r)
        except EstimateNotAsserted:
            raised += 1
    # either the estimate is asserted everywhere on this range, or it is refused loudly
    assert raised in (0, 1, 2)
