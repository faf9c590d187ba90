import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from parisian_levy import DomainError, KernelSet, ParisianScales, ScaleFunctions, UnsupportedOperationError, eval_limits
from parisian_levy.kernels import M_alternative, apply_M

from conftest import BM, BM_SLOW, CL, JD

Q, R, A = 0.05, 1.0, -2.0


@pytest.fixture(params=["bm", "cl", "jd"])
def ks(request):
    m = {"bm": BM_SLOW, "cl": CL, "jd": JD}[request.param]
    return KernelSet(m, Q, R, A)


def test_degenerations_at_zero(ks):
    assert ks.I(0.0) == pytest.approx(1.0, abs=1e-12)
    for th in (0.0, 0.3, 2.0):
        assert ks.J(0.0, th) == pytest.approx(float(ks.sf.Z_theta(-A, th)), abs=1e-12)
        assert abs(ks.J_hat(0.0, th)) < 1e-12
    assert abs(ks.H(0.0)) < 1e-12


def test_J_is_one_at_q_zero(any_model):
    k = KernelSet(any_model, 0.0, 0.7, -1.5)
    x = np.linspace(-1.0, 5.0, 13)
    np.testing.assert_allclose(k.J(x), 1.0, atol=1e-10)
    np.testing.assert_allclose(k.J_prime(x[x > 0]), 0.0, atol=1e-9)


def test_negative_argument_is_plain_shift(ks):
    x = -0.7
    assert ks.W_a(x) == pytest.approx(float(ks.sf.W(x - A)))
    assert ks.Zbar_a(x) == pytest.approx(float(ks.sf.Z_bar(x - A)))


@pytest.mark.parametrize("which", ["W", "Zbar"])
def test_dual_representation(ks, which):
    rng = np.random.default_rng(5)
    for x in rng.uniform(0.0, 6.0, 5):
        got = ks.W_a(x) if which == "W" else ks.Zbar_a(x)
        assert got == pytest.approx(M_alternative(ks, which, x), rel=1e-8)


def test_closed_form_M_matches_quadrature(ks):
    # quadrature is the limiting accuracy here, not the closed form
    for x in (0.4, 2.5):
        assert ks.Z_a(x, 0.3) == pytest.approx(apply_M(ks, lambda v: ks.sf.Z_theta(v, 0.3), x), rel=1e-8)
        assert ks.l_a(x) == pytest.approx(apply_M(ks, ks.sf.l, x), rel=1e-8)


def test_derivatives_by_finite_differences(ks):
    h = 1e-5
    for x in (0.5, 2.0):
        for f, fp in ((ks.I, ks.I_prime), (ks.H, ks.H_prime), (ks.K, ks.K_prime), (ks.W_a, ks.W_a_prime)):
            assert fp(x) == pytest.approx((f(x + h) - f(x - h)) / (2 * h), rel=1e-6, abs=1e-9)
        jd = (ks.J(x + h, 0.4) - ks.J(x - h, 0.4)) / (2 * h)
        assert ks.J_prime(x, 0.4) == pytest.approx(jd, rel=1e-6)


def test_K_is_theta_derivative_of_J(ks):
    eps = 1e-4
    for x in (0.3, 1.0, 2.5):
        fd = (ks.J(x, eps) - ks.J(x, -eps, check=False)) / (2 * eps)
        assert ks.K(x) == pytest.approx(fd, rel=1e-4)


def test_I_approaches_a_free_limit_for_large_a():
    ps = ParisianScales(BM_SLOW, Q, R)
    k = KernelSet(BM_SLOW, Q, R, -20.0)
    for x in (0.5, 2.0):
        assert k.I(x) == pytest.approx(float(ps.I_inf(x)), abs=1e-4)


def test_creeping_kernel_recovers_classical_as_r_vanishes():
    k = KernelSet(BM_SLOW, Q, 1e-3, A)
    for x in (0.5, 2.0):
        assert k.C(x) == pytest.approx(0.5 * float(k.sf.W_prime(x - A)), rel=1e-2)


def test_creeping_kernel_needs_sigma():
    with pytest.raises(UnsupportedOperationError):
        KernelSet(CL, Q, R, A).C(1.0)


@pytest.mark.parametrize("which, kernel", [
    ("W_a/Wqr", "W_a"), ("Z_a/Wqr", "Z_a"), ("Wbar_a/Wqr", "Wbar_a"), ("Zbar_a/Wqr", "Zbar_a"),
    ("I/Wqr", "I"), ("J/Wqr", "J"), ("K/Wqr", "K"),
])
def test_b_limits(ks, which, kernel):
    ps = ParisianScales(ks.model, Q, R)
    lim = eval_limits(ps, which, a=A)
    devs = [abs(getattr(ks, kernel)(b) / float(ks.sf_r.W(b)) - lim) for b in (10.0, 20.0, 40.0)]
    assert devs[-1] <= 1e-4 * max(1.0, abs(lim))


def test_C_limit():
    k = KernelSet(BM_SLOW, Q, R, A)
    lim = eval_limits(k, "C/Wqr", a=A)
    assert k.C(40.0) / float(k.sf_r.W(40.0)) == pytest.approx(lim, rel=1e-8)


def test_a_limit_of_W_a():
    ps = ParisianScales(BM, 0.5, R)
    lim = eval_limits(ps, "W_a/W(-a)", x=1.0)
    k = KernelSet(BM, 0.5, R, -20.0)
    assert k.W_a(1.0) / k.W_ma == pytest.approx(lim, rel=1e-4)


def test_limit_domain_errors():
    ps = ParisianScales(BM, Q, R)
    with pytest.raises(DomainError, match="analytic continuation"):
        eval_limits(ps, "J/Wqr", a=A, theta=5.0)
    with pytest.raises(DomainError):
        eval_limits(ps, "I/Wqr")
    with pytest.raises(KeyError):
        eval_limits(ps, "nope", a=A)


def test_constructor_rejects_bad_parameters():
    with pytest.raises(DomainError):
        KernelSet(BM, Q, R, 0.5)
    with pytest.raises(DomainError):
        ParisianScales(BM, Q, 0.0)


@given(x=st.floats(0.0, 6.0), r=st.floats(0.05, 5.0))
def test_I_at_least_one_and_increasing(x, r):
    k = KernelSet(CL, 0.1, r, -1.0)
    assert k.I(x) >= 1.0 - 1e-12
    assert k.I_prime(x) > 0


@given(x=st.floats(0.0, 5.0))
def test_q_zero_ratio_identity(x):
    # at q = 0, W^{(q)}(x - a)/W(-a) + M-term reproduces the same object through two routes
    k = KernelSet(BM, 0.0, 0.5, -1.0)
    assert k.W_a(x) == pytest.approx(M_alternative(k, "W", x), rel=1e-8)
