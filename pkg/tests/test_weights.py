import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symker.kernels import KernelFamily
from symker.weights import (
    BORDERLINE,
    MEMBER,
    NON_MEMBER,
    ZOO_FAMILIES,
    RadialWeight,
    classify_trend,
    companion_weight,
    dp_membership,
    load_zoo,
    translated_criterion,
)

FAMS = list(ZOO_FAMILIES.values())
weights = st.builds(
    RadialWeight,
    a=st.floats(-4, 4),
    b=st.floats(-4, 2),
    c=st.sampled_from([0.0, -0.5, 0.5]),
    s=st.sampled_from([0.0, 1.0, 2.5]),
)
bump = st.builds(
    dict,
    a=st.floats(0, 3),
    b=st.floats(0, 2),
    c=st.sampled_from([0.0, 0.25]),
)


def test_parse_round_trip():
    w = RadialWeight.parse("exp:-1.5,poly:2")
    assert (w.b, w.a) == (-1.5, 2.0)
    assert RadialWeight.parse("unit") == RadialWeight(name="unit")
    with pytest.raises(ValueError):
        RadialWeight.parse("zz:1")


@settings(max_examples=60)
@given(weights, bump, st.sampled_from(FAMS), st.sampled_from([1.0, 2.0]))
def test_larger_weights_stay_members(w, up, fam, p):
    # v1 >= v2 and v2 a member implies v1 a member
    w2 = RadialWeight(w.a + up["a"], w.b + up["b"], w.c + up["c"], 0.0, w.s)
    r1 = dp_membership(w, fam, p, confirm=False)
    r2 = dp_membership(w2, fam, p, confirm=False)
    if r1.verdict == MEMBER:
        assert r2.verdict == MEMBER


@given(st.floats(-3, 3))
def test_unit_and_polynomial_weights_are_heat_members(a):
    assert dp_membership(RadialWeight(a=a), KernelFamily.heat(1.0), 2.0, confirm=False).verdict == MEMBER


def test_double_exponential_decay_is_never_a_member():
    w = RadialWeight(d=-1.0)
    for fam in FAMS:
        assert dp_membership(w, fam, 2.0, confirm=False).verdict == NON_MEMBER


def test_frontier_for_frac_poisson_at_p1():
    fam = ZOO_FAMILIES["frac_poisson"]
    assert dp_membership(RadialWeight(b=-1.9), fam, 1.0).verdict == MEMBER
    assert dp_membership(RadialWeight(b=-2.1), fam, 1.0).verdict == NON_MEMBER


def test_border_is_borderline_for_frac_poisson_at_p2():
    entry = next(e for e in load_zoo() if e.name == "border")
    rep = dp_membership(entry.weight, ZOO_FAMILIES["frac_poisson"], 2.0)
    assert rep.verdict == BORDERLINE and rep.consistent


def test_zoo_verdicts_and_trends_agree():
    for e in load_zoo():
        for name, fam in ZOO_FAMILIES.items():
            for p in ("1", "2"):
                rep = dp_membership(e.weight, fam, float(p))
                assert rep.verdict == e.expected[name][p], (e.name, name, p)
                assert rep.consistent, (e.name, name, p)


def test_fast_vanishing_at_origin_fails_the_local_condition():
    # v ~ r^4 near o: v^{-1/2} is not square integrable there
    heat = KernelFamily.heat(1.0)
    assert dp_membership(RadialWeight(s=-4.0), heat, 2.0, confirm=False).verdict == NON_MEMBER
    assert dp_membership(RadialWeight(s=-1.0), heat, 2.0, confirm=False).verdict == MEMBER
    # a singular weight is harmless for the dual condition
    assert dp_membership(RadialWeight(s=2.5), heat, 2.0, confirm=False).verdict == MEMBER
    assert not RadialWeight(s=4.0).locally_integrable


def test_classify_trend_cases():
    ln2 = math.log(2)
    assert classify_trend([0, -ln2, -2 * ln2, -3 * ln2], 2.0) == "decaying"
    assert classify_trend([0, 0, 0, 0], 2.0) == "flat"
    assert classify_trend([0, ln2, 2 * ln2, 3 * ln2], 2.0) == "growing"
    assert classify_trend([0, 0, 0], 1.0) == "bounded"


def test_translated_criterion_matches_origin_verdict():
    w = RadialWeight(b=-1.0)
    res = translated_criterion(w, ZOO_FAMILIES["frac_heat"], 2.0, 3.0)
    assert res.member is True and math.isfinite(res.log_norm)


def test_companion_weight_is_positive_and_at_most_one():
    cw = companion_weight(RadialWeight(), KernelFamily.heat(1.0), 2.0, 1.0)
    vals = cw([0.0, 1.0, 5.0, 12.0])
    assert all(0 < v <= 1 for v in vals)
    with pytest.raises(ValueError):
        companion_weight(RadialWeight(d=-1.0), KernelFamily.heat(1.0), 2.0, 1.0)
