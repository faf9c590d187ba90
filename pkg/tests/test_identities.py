import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from parisian_levy import (
    REGISTRY,
    DomainError,
    IdentityRequest,
    PreconditionError,
    UnsupportedOperationError,
    barrier_sweep,
    evaluate,
    evaluate_limit_consistency,
    value_of,
)
from parisian_levy.identities import LIMIT_PAIRS, Meaning
from parisian_levy.kernels import KernelSet

from conftest import BM, BM_SLOW, CL, JD

CAN = dict(q=0.05, r=1.0, a=-2.0, b=3.0, x=0.5)


def _v(i, m, **kw):
    p = dict(CAN, **kw)
    if not REGISTRY[i].parisian:
        p.pop("r")
    return value_of(i, m, **p)


def finite_ids(model):
    for i, spec in REGISTRY.items():
        if "finite" in spec.modes and not (spec.needs_sigma and model.sigma == 0):
            yield i


def test_every_id_has_citation_and_meaning():
    for i, spec in REGISTRY.items():
        assert spec.citation and isinstance(spec.meaning, Meaning)
        assert "." in i


@pytest.mark.parametrize("m", [BM, CL], ids=["bm", "cl"])
def test_partition_at_q_zero(m):
    for x in np.linspace(-1.5, 2.0, 5):
        for b in np.linspace(2.0, 4.0, 5):
            up = _v("xr.up", m, q=0.0, x=x, b=b)
            down = _v("xr.down", m, q=0.0, x=x, b=b)
            assert abs(up + down - 1) <= 1e-10
            assert _v("yr.up", m, q=0.0, x=x, b=b) == pytest.approx(1.0, abs=1e-10)


def test_trivial_values_at_x_equal_b(model):
    assert _v("xr.up", model, x=3.0) == pytest.approx(1.0)
    assert abs(_v("xr.dividends", model, x=3.0)) < 1e-12
    assert _v("classic.up", model, x=3.0) == pytest.approx(1.0)


def test_ranges(model):
    for i in finite_ids(model):
        spec = REGISTRY[i]
        for x in (-1.0, 0.0, 0.5, 2.5):
            val = _v(i, model, x=x, theta=0.5 if spec.uses_theta else 0.0)
            if spec.meaning in (Meaning.LAPLACE_TRANSFORM, Meaning.PROBABILITY):
                assert -1e-9 <= val <= 1 + 1e-9, (i, x, val)
            if spec.meaning in (Meaning.EXPECTED_NPV, Meaning.EXPECTED_DISCOUNTED_OVERSHOOT):
                assert val >= -1e-9, (i, x, val)


def test_monotonicity_of_up_crossing(model):
    xs = np.linspace(-1.9, 2.9, 9)
    vals = [_v("xr.up", model, x=x) for x in xs]
    assert np.all(np.diff(vals) >= -1e-12)
    bs = np.linspace(1.0, 6.0, 9)
    vals = [_v("xr.up", model, b=b, x=0.5) for b in bs]
    assert np.all(np.diff(vals) <= 1e-12)


def test_strong_markov_fixed_points_at_zero(model):
    k = KernelSet(model, 0.05, 1.0, -2.0)
    sfr = k.sf_r
    b = 3.0
    assert _v("xtilde.div_periodic", model, x=0.0) == pytest.approx(float(sfr.W_bar(b)) / float(k.I_prime(b)))
    assert _v("xtilde.div_singular", model, x=0.0) == pytest.approx(1 / float(k.I_prime(b)))
    assert _v("xr.dividends", model, x=0.0) == pytest.approx(float(sfr.W_bar2(b)) / float(k.I(b)))


def test_infinity_sentinels():
    for i in ("ytilde.div_periodic", "ytilde.div_singular", "ytilde.injection", "refl_double.dividends"):
        assert math.isinf(_v(i, BM, q=0.0))
    assert math.isinf(value_of("xr.dividends", CL, q=0.0, r=1.0, x=0.5, mode="perpetual"))
    assert math.isinf(value_of("yr.dividends", CL, q=0.0, r=1.0, a=-2.0, x=0.5, mode="b_inf"))
    res = evaluate(IdentityRequest("ytilde.injection", BM, q=0.0, a=-2, b=3, x=0.5, r=1.0))
    assert res.is_infinite


def test_perpetual_finite_when_drift_negative():
    neg = __import__("parisian_levy").LevyModel.brownian_motion(-0.3, 1.0)
    assert math.isfinite(value_of("xr.dividends", neg, q=0.0, r=1.0, x=0.5, mode="perpetual"))


def test_yr_injection_limit_needs_positive_q():
    with pytest.raises(PreconditionError):
        value_of("yr.injection", CL, q=0.0, r=1.0, a=-2.0, x=0.5, mode="b_inf")


@pytest.mark.parametrize("kw, err", [
    (dict(x=3.5), DomainError),
    (dict(r=0.0), DomainError),
    (dict(a=0.5), DomainError),
    (dict(q=-0.1), DomainError),
    (dict(theta=-1.0), DomainError),
])
def test_request_validation(kw, err):
    with pytest.raises(err):
        _v("xr.down", BM, **kw)


def test_mode_and_sigma_preconditions():
    with pytest.raises(PreconditionError):
        value_of("xtilde.down", BM, q=0.05, r=1.0, a=-2.0, x=0.5, mode="b_inf")
    with pytest.raises(UnsupportedOperationError):
        _v("xr.creep", CL)
    with pytest.raises(KeyError, match="valid ids"):
        value_of("xr.nope", BM, q=0.05, r=1.0, a=-2.0, b=3.0, x=0.5)


def test_creeping_is_the_theta_to_infinity_limit_of_down_crossing():
    # Brownian motion always creeps, so the identities coincide for every theta
    for th in (50.0, 100.0):
        assert _v("xr.down", BM, theta=th) == pytest.approx(_v("xr.creep", BM), abs=1e-12)
    # with jumps the gap is the jump-exit part, damped like alpha/(alpha+theta)
    jd = __import__("parisian_levy").LevyModel.jump_diffusion(0.8, 1.0, 0.3, [(1.0, 1.0)])
    for th in (50.0, 100.0):
        assert abs(_v("xr.down", jd, theta=th) - _v("xr.creep", jd)) <= 5e-3


def test_creep_is_part_of_down_crossing():
    assert _v("xr.creep", JD) < _v("xr.down", JD, theta=0.0)
    assert _v("classic.creep.two_sided", JD) < _v("classic.down", JD)


R0_PAIRS = {
    "xr.up": "classic.up", "xr.down": "classic.down", "xr.overshoot": "classic.overshoot",
    "xtilde.down": "refl_above.down_time", "xtilde.overshoot": "refl_above.overshoot",
    "xtilde.div_singular": "refl_above.dividends", "yr.up": "refl_below.up_time",
    "yr.injection": "refl_below.injection", "ytilde.div_singular": "refl_double.dividends",
    "ytilde.injection": "refl_double.injection",
}


@pytest.mark.parametrize("m", [BM, CL], ids=["bm", "cl"])
def test_r_to_zero_is_first_order(m):
    """Parisian identities converge to their classical counterparts linearly in r."""
    for par, cls in R0_PAIRS.items():
        th = 0.3 if REGISTRY[par].uses_theta else 0.0
        target = _v(cls, m, theta=th)
        e1 = abs(_v(par, m, r=1e-3, theta=th) - target)
        e2 = abs(_v(par, m, r=1e-4, theta=th) - target)
        if e1 < 1e-12:
            continue
        assert 8.0 < e1 / e2 < 12.0, (par, e1, e2)


@pytest.mark.parametrize("m", [BM, CL], ids=["bm", "cl"])
def test_periodic_parts_vanish_as_r_vanishes(m):
    for i in ("xr.dividends", "xtilde.div_periodic", "yr.dividends", "ytilde.div_periodic"):
        assert _v(i, m, r=1e-5) < 1e-3


def test_limit_consistency_examples():
    rep = evaluate_limit_consistency("xr.down", "b_inf", dict(model=BM_SLOW, q=0.05, r=1.0, a=-2.0, x=0.5, theta=0.1))
    assert rep.passed and rep.deviations[-1] <= 1e-4
    rep = evaluate_limit_consistency("xr.dividends", "a_inf", dict(model=BM_SLOW, q=0.05, r=1.0, b=3.0, x=0.5))
    assert rep.passed
    rep = evaluate_limit_consistency("xr.up", "a_inf", dict(model=BM, q=0.0, r=1.0, b=3.0, x=0.5))
    assert rep.limit_value == pytest.approx(rep.finite_values[-1], abs=1e-6)


def test_limit_consistency_rejects_ids_without_limit():
    with pytest.raises(PreconditionError):
        evaluate_limit_consistency("xtilde.down", "b_inf", dict(model=BM, q=0.05, r=1.0, x=0.5))


def test_limit_pairs_point_at_registered_modes():
    for (i, mode), (partner, pmode, param, seq) in LIMIT_PAIRS.items():
        assert mode in REGISTRY[i].modes and pmode in REGISTRY[partner].modes
        assert param in ("a", "b") and len(seq) == 3


def test_sweeps():
    rows = barrier_sweep("xr.up", "b", 1.0, 5.0, 5, dict(model=BM, q=0.0, r=1.0, a=-2.0, x=0.5))
    assert [r.value for r in rows] and all(r.value is not None for r in rows)
    rows = barrier_sweep("xr.dividends", "b", 0.5, 5.0, 10, dict(model=BM, q=0.05, r=1.0, a=-2.0, x=0.5))
    assert len(rows) == 10 and sum(r.is_argmax for r in rows) == 1
    rows = barrier_sweep("xr.dividends", "x", -2.0, 3.0, 6, dict(model=BM, q=0.05, r=1.0, a=-2.0, b=3.0))
    assert abs(rows[-1].value) < 1e-12
    rows = barrier_sweep("xr.dividends", "r", 1e-3, 1.0, 4, dict(model=BM, q=0.05, a=-2.0, b=3.0, x=0.5))
    assert rows[0].value <= 1e-2
    rows = barrier_sweep("xr.up", "x", 2.0, 4.0, 3, dict(model=BM, q=0.05, r=1.0, a=-2.0, b=3.0))
    assert rows[-1].value is None and "exceeds" in rows[-1].error


def test_x_below_a_is_literal():
    # the formulas stay defined below a; they just lose their probabilistic meaning
    assert math.isfinite(_v("xr.up", BM, x=-3.0))


@given(x=st.floats(-1.9, 2.9), b=st.floats(1.0, 5.0), r=st.floats(0.1, 4.0))
def test_partition_property(x, b, r):
    if x > b:
        return
    up = value_of("xr.up", CL, q=0.0, r=r, a=-2.0, b=b, x=x)
    down = value_of("xr.down", CL, q=0.0, r=r, a=-2.0, b=b, x=x)
    assert abs(up + down - 1) <= 1e-9
