import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from parisian_levy import DomainError, LevyModel, ModelFileError, Phase, classify_variation, phi, psi
from parisian_levy.levy_model import VariationClass, dump_model, parse_model, psi_dd, psi_dd2, psi_prime

from conftest import BM, CL, JD


def test_psi_cramer_lundberg_hand_value():
    assert psi(CL, 2.0) == pytest.approx(1.5 * 2 + (1 / 3 - 1), rel=1e-14)


def test_psi_brownian():
    assert psi(BM, 1.3) == pytest.approx(0.5 * 1.3 + 0.5 * 1.3**2, rel=1e-14)


def test_gamma_and_drift_are_consistent():
    # c = gamma + lambda E[J; J <= 1] with the truncated mean of Exp(1)
    assert CL.drift == pytest.approx(1.5, rel=1e-15)
    assert CL.gamma == pytest.approx(1.5 - (1 - 2 * math.exp(-1)), rel=1e-14)


def test_mean():
    assert CL.mean == pytest.approx(0.5)
    assert psi_prime(CL, 0.0) == pytest.approx(0.5)
    assert BM.mean == pytest.approx(0.5)


def test_psi_rejects_negative_theta():
    with pytest.raises(DomainError):
        psi(CL, -0.1)


def test_phi_bisection_oracle():
    root = brentq(lambda t: 1.5 * t + 1 / (1 + t) - 1 - 0.1, 1e-9, 10, xtol=1e-14)
    assert phi(CL, 0.1) == pytest.approx(root, abs=1e-12)


@pytest.mark.parametrize("m", [BM, CL, JD], ids=["bm", "cl", "jd"])
def test_phi_inverts_psi_on_log_grid(m):
    for q in np.logspace(-4, 1, 25):
        assert psi(m, phi(m, q)) == pytest.approx(q, rel=1e-10)


def test_phi_zero_for_positive_mean_and_positive_for_negative_mean():
    assert phi(BM, 0.0) == 0.0
    neg = LevyModel.cramer_lundberg(0.8, 1.0, [Phase(1.0, 1.0)])
    p0 = phi(neg, 0.0)
    assert p0 > 0 and abs(psi(neg, p0)) < 1e-12


def test_divided_differences():
    u, v, w = 0.3, 1.1, 2.4
    assert psi_dd(JD, u, v) == pytest.approx((psi(JD, u) - psi(JD, v)) / (u - v), rel=1e-12)
    assert psi_dd(JD, u, u) == pytest.approx(psi_prime(JD, u), rel=1e-12)
    lhs = psi_dd2(JD, u, v, w)
    rhs = (psi_dd(JD, u, v) - psi_dd(JD, v, w)) / (u - w)
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_variation_classes():
    assert classify_variation(CL) is VariationClass.BOUNDED
    assert classify_variation(BM) is VariationClass.UNBOUNDED
    assert classify_variation(JD) is VariationClass.UNBOUNDED


@pytest.mark.parametrize("kwargs", [
    dict(kind="BrownianMotion", gamma=0.1, sigma=0.0),
    dict(kind="CramerLundberg", gamma=1.0, lam=1.0, phases=()),
    dict(kind="CramerLundberg", gamma=1.0, lam=1.0, phases=(Phase(1.0, 0.5),)),
    dict(kind="CramerLundberg", gamma=1.0, lam=1.0, phases=(Phase(-1.0, 1.0),)),
    dict(kind="JumpDiffusion", gamma=1.0, sigma=0.0, lam=1.0, phases=(Phase(1.0, 1.0),)),
])
def test_invalid_models(kwargs):
    with pytest.raises(DomainError):
        LevyModel(**kwargs)


def test_equal_rates_are_merged():
    m = LevyModel.cramer_lundberg(2.0, 1.0, [Phase(1.0, 0.25), Phase(1.0, 0.25), Phase(2.0, 0.5)])
    assert len(m.phases) == 2 and m.phases[0].weight == pytest.approx(0.5)


def test_cl_needs_positive_drift():
    with pytest.raises(DomainError):
        LevyModel.cramer_lundberg(-0.5, 1.0, [Phase(1.0, 1.0)])


def test_parse_model_file():
    m = parse_model("""
        # comment line
        kind = CramerLundberg
        drift = 1.5     # premium
        lambda = 1
        phase = {alpha = 1, weight = 1}
    """)
    assert m == CL


@pytest.mark.parametrize("text, fragment", [
    ("kind = BM\nsigma = abc\n", "line 2: key 'sigma'"),
    ("kind = BM\nmu = 1\n", "unknown key 'mu'"),
    ("kind = BM\nsigma = 1\n", "exactly one of"),
    ("kind = Foo\ndrift = 1\n", "unknown kind"),
    ("kind = CL\ndrift = 1\nlambda = 1\nphase = {alpha = 1}\n", "line 4: key 'phase'"),
    ("kind = BM\ndrift = 1\ndrift = 2\nsigma = 1\n", "duplicate key"),
    ("sigma = 1\n", "missing key 'kind'"),
    ("kind = BM\ndrift = 1\nsigma = 0\n", "invalid model"),
    ("garbage\n", "line 1"),
])
def test_parse_errors_name_line_and_key(text, fragment):
    with pytest.raises(ModelFileError, match=fragment.replace("{", r"\{")):
        parse_model(text)


@given(
    c=st.floats(0.1, 5.0),
    sigma=st.floats(0.0, 2.0),
    lam=st.floats(0.1, 3.0),
    alphas=st.lists(st.floats(0.2, 8.0), min_size=1, max_size=3, unique=True),
)
def test_dump_parse_round_trip(c, sigma, lam, alphas):
    w = [1.0 / len(alphas)] * len(alphas)
    w[-1] = 1.0 - sum(w[:-1])
    phases = [Phase(a, p) for a, p in zip(alphas, w)]
    m = (LevyModel.cramer_lundberg(c, lam, phases) if sigma == 0
         else LevyModel.jump_diffusion(c, sigma, lam, phases))
    assert parse_model(dump_model(m)) == m


@given(theta=st.floats(0.0, 20.0))
def test_psi_convex_and_zero_at_origin(theta):
    assert psi(JD, 0.0) == 0.0
    # psi(theta) >= tangent at 0
    assert psi(JD, theta) >= JD.mean * theta - 1e-12
