import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import extension_closed_form, heat_closed_form, levy_density
from symker.geometry import HPoint
from symker.kernels import (
    DomainError,
    KernelFamily,
    SubordinatorSpec,
    distinguished_lift,
    heat_h3,
    kernel_profile,
    kernel_value,
    laplace_transform_subordinator,
    lift_family,
    log_kernel_profile,
    modular_function,
    multiplier,
    spherical_inversion_h3,
    spherical_transform_at_zero,
    log_subordinator_bound_shape,
    log_subordinator_density,
    subordinator_density,
    total_mass,
)


def test_heat_value_at_origin():
    # (4 pi)^{-3/2} e^{-1}
    assert heat_h3(1.0, 0.0, 1.0) == pytest.approx(0.00825822, rel=1e-5)


@given(st.floats(0.01, 10), st.floats(0, 20), st.floats(0, 1))
def test_heat_matches_extended_precision(t, r, zeta):
    lv = float(log_kernel_profile(KernelFamily.heat(zeta), t, r))
    ref = float(heat_closed_form(t, r, zeta))
    if ref > 1e-300:
        assert math.exp(lv) == pytest.approx(ref, rel=1e-11)


@pytest.mark.parametrize("t,r", [(0.1, 1.0), (1.0, 5.0)])
def test_heat_against_spherical_inversion(t, r):
    assert spherical_inversion_h3(t, r) == pytest.approx(heat_h3(t, r, 1.0), rel=1e-8)


@pytest.mark.parametrize("sigma,zeta", [(0.5, 1.0), (0.25, 0.0), (0.75, 0.5)])
@pytest.mark.parametrize("t,r", [(0.05, 0.2), (1.0, 1.0), (2.0, 12.0)])
def test_extension_kernel_matches_bessel_form(sigma, zeta, t, r):
    val = float(kernel_profile(KernelFamily.frac_poisson(sigma, zeta), t, r))
    assert val == pytest.approx(float(extension_closed_form(sigma, zeta, t, r)), rel=1e-9)


def test_scalar_and_vector_routes_agree():
    for fam in (KernelFamily.frac_heat(1.5, 1.0), KernelFamily.frac_poisson(0.5, 0.0)):
        for t, r in ((0.3, 0.7), (1.0, 4.0)):
            assert kernel_value(fam, t, r) == pytest.approx(float(kernel_profile(fam, t, r)), rel=1e-7)


@pytest.mark.parametrize("s", [0.01, 0.3, 1.0, 7.0])
def test_stable_density_matches_levy_closed_form(s):
    a = float(subordinator_density(SubordinatorSpec(1.0, "stable_integral"), 0.8, s))
    b = float(subordinator_density(SubordinatorSpec(1.0, "closed_form_alpha1"), 0.8, s))
    assert a == pytest.approx(float(levy_density(0.8, s)), rel=1e-8)
    assert b == pytest.approx(float(levy_density(0.8, s)), rel=1e-12)


@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_subordinator_laplace_identity(alpha):
    for u in (0.5, 2.0):
        got = laplace_transform_subordinator(SubordinatorSpec(alpha), 1.0, u)
        assert got == pytest.approx(math.exp(-(u ** (alpha / 2))), abs=1e-7)


def test_subordinator_two_regime_band():
    for alpha in (0.5, 1.0, 1.5):
        for t in (0.5, 1.0):
            s = np.geomspace(1e-3, 1e3, 400) * t ** (2 / alpha)
            lr = log_subordinator_density(SubordinatorSpec(alpha), t, s) - log_subordinator_bound_shape(alpha, t, s)
            assert np.all(np.isfinite(lr))
            assert math.exp(lr.max() - lr.min()) <= 10.0


@pytest.mark.parametrize(
    "fam",
    [KernelFamily.heat(1.0), KernelFamily.heat(0.3), KernelFamily.frac_heat(1.5, 1.0), KernelFamily.frac_poisson(0.5, 0.5)],
)
def test_phi0_weighted_mass_equals_multiplier_at_zero(fam):
    for t in (0.2, 1.0):
        assert spherical_transform_at_zero(fam, t) == pytest.approx(float(multiplier(fam, t, 0.0)), rel=1e-6)


def test_unweighted_heat_mass_is_one_only_at_zeta_one():
    assert total_mass(KernelFamily.heat(1.0), 0.7) == pytest.approx(1.0, abs=1e-8)
    assert total_mass(KernelFamily.heat(0.0), 0.7) == pytest.approx(math.exp(0.7), rel=1e-8)


def test_route_equivalence_alpha_one_sigma_half():
    for zeta in (0.0, 1.0):
        a = kernel_profile(KernelFamily.frac_heat(1.0, zeta), 0.5, np.array([0.0, 1.0, 5.0]))
        b = kernel_profile(KernelFamily.frac_poisson(0.5, zeta), 0.5, np.array([0.0, 1.0, 5.0]))
        assert np.allclose(a, b, rtol=1e-6)


@given(st.floats(0, 10), st.floats(0.01, 5))
def test_multipliers_lie_in_unit_interval(lam, t):
    for fam in (KernelFamily.heat(0.5), KernelFamily.frac_heat(0.7, 1.0), KernelFamily.frac_poisson(0.5, 1.0)):
        m = float(multiplier(fam, t, lam))
        assert 0.0 < m <= 1.0 + 1e-12


def test_multiplier_tends_to_one():
    fam = KernelFamily.frac_poisson(0.5, 1.0)
    gaps = [abs(1 - float(multiplier(fam, 10.0**-k, 5.0))) for k in range(1, 6)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_kernels_decrease_in_zeta():
    r = np.array([0.0, 1.0, 4.0])
    for make in (KernelFamily.heat, lambda z: KernelFamily.frac_heat(1.2, z), lambda z: KernelFamily.frac_poisson(0.3, z)):
        assert np.all(kernel_profile(make(0.2), 0.5, r) >= kernel_profile(make(1.0), 0.5, r))


def test_distinguished_lift_and_modular_function():
    p = HPoint.from_halfspace(0.4, -0.1, 2.0)
    assert modular_function(p) == pytest.approx(0.25)
    assert distinguished_lift(3.0, p) == pytest.approx(1.5)
    assert lift_family(KernelFamily.frac_heat(1.5, 1.0)).zeta == 0.0


def test_domain_errors():
    with pytest.raises(DomainError):
        log_kernel_profile(KernelFamily.heat(1.0), -1.0, 0.0)
    with pytest.raises((DomainError, ValueError)):
        KernelFamily.frac_heat(2.5, 1.0)
