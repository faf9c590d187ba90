"""Registry of fluctuation identities.

Each entry maps a namespaced id to a formula closure plus the parameter
constraints under which it holds.  Conventions used in the formulas below:
``W, Z, l, ...`` without qualifier are at level q, ``Wr, Wbr, Wbbr`` denote
``W^{(q+r)}``, ``Wbar^{(q+r)}`` and ``Wbarbar^{(q+r)}``, and ``beta = Phi(q+r)``.

Identities are evaluated literally for every ``x <= b``; the probabilistic
meaning only holds for ``a <= x <= b``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import DomainError, PreconditionError, UnsupportedOperationError
from .kernels import KernelSet, ParisianScales
from .levy_model import LevyModel, psi_dd
from .scale_functions import ScaleFunctions

__all__ = [
    "Meaning",
    "IdentityRequest",
    "IdentityValue",
    "IdentitySpec",
    "REGISTRY",
    "evaluate",
    "evaluate_limit_consistency",
    "LimitReport",
    "barrier_sweep",
    "SweepRow",
    "LIMIT_PAIRS",
    "value_of",
]

INF = math.inf


class Meaning(str, enum.Enum):
    EXPECTED_NPV = "ExpectedNPV"
    LAPLACE_TRANSFORM = "LaplaceTransform"
    PROBABILITY = "Probability"
    EXPECTED_DISCOUNTED_OVERSHOOT = "ExpectedDiscountedOvershoot"
    EXPECTATION = "Expectation"


@dataclass(frozen=True)
class IdentityRequest:
    identity_id: str
    model: LevyModel
    q: float
    a: float
    b: float
    x: float
    r: float | None = None
    theta: float = 0.0
    mode: str = "finite"


@dataclass(frozen=True)
class IdentityValue:
    value: float
    meaning: Meaning
    formula_citation: str
    request: IdentityRequest | None = field(default=None, compare=False)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)


@dataclass(frozen=True)
class IdentitySpec:
    identity_id: str
    meaning: Meaning
    citation: str
    modes: dict  # mode -> formula(ctx) -> float
    parisian: bool = True
    uses_theta: bool = False
    needs_sigma: bool = False
    description: str = ""


@lru_cache(maxsize=256)
def _sf(model: LevyModel, q: float) -> ScaleFunctions:
    return ScaleFunctions(model, q)


@lru_cache(maxsize=256)
def _ps(model: LevyModel, q: float, r: float) -> ParisianScales:
    return ParisianScales(model, q, r)


@lru_cache(maxsize=256)
def _ks(model: LevyModel, q: float, r: float, a: float) -> KernelSet:
    return KernelSet(model, q, r, a)


class _Ctx:
    """Lazy access to the objects a formula needs."""

    def __init__(self, req: IdentityRequest):
        self.req = req
        self.model, self.q, self.r = req.model, float(req.q), req.r
        self.a, self.b, self.x, self.theta = float(req.a), float(req.b), float(req.x), float(req.theta)

    @property
    def sf(self) -> ScaleFunctions:
        return _sf(self.model, self.q)

    @property
    def ps(self) -> ParisianScales:
        return _ps(self.model, self.q, float(self.r))

    @property
    def ks(self) -> KernelSet:
        return _ks(self.model, self.q, float(self.r), self.a)

    @property
    def sfr(self) -> ScaleFunctions:
        return self.ps.sf_r

    @property
    def beta(self) -> float:
        return self.ps.beta


# ---------------------------------------------------------------------------
# classical identities (levels a < b, no Parisian clock)


def _classic_up(c):
    s = c.sf
    return s.W(c.x - c.a) / s.W(c.b - c.a)


def _classic_down(c):
    s, t = c.sf, c.theta
    return s.Z_theta(c.x - c.a, t) - s.Z_theta(c.b - c.a, t) * s.W(c.x - c.a) / s.W(c.b - c.a)


def _classic_down_inf(c):
    s, t = c.sf, c.theta
    # (psi(theta) - q)/(theta - Phi(q)) is a divided difference of psi: no 0/0 at theta = Phi(q)
    return s.Z_theta(c.x - c.a, t) - s.W(c.x - c.a) * float(psi_dd(c.model, t, s.phi_q))


def _classic_creep(c):
    s = c.sf
    return 0.5 * c.model.sigma**2 * (s.W_prime(c.x - c.a) - s.phi_q * s.W(c.x - c.a))


def _classic_creep_two(c):
    s = c.sf
    y, beta = c.x - c.a, c.b - c.a
    return 0.5 * c.model.sigma**2 * (s.W_prime(y) - s.W(y) * s.W_prime(beta) / s.W(beta))


def _classic_overshoot(c):
    s = c.sf
    return s.W(c.x - c.a) * s.l(c.b - c.a) / s.W(c.b - c.a) - s.l(c.x - c.a)


def _refl_above_down(c):
    s, t = c.sf, c.theta
    return s.Z_theta(c.x - c.a, t) - s.Z_theta_prime(c.b - c.a, t) * s.W(c.x - c.a) / s.W_prime(c.b - c.a)


def _refl_above_div(c):
    s = c.sf
    return s.W(c.x - c.a) / s.W_prime(c.b - c.a)


def _refl_above_over(c):
    s = c.sf
    return s.W(c.x - c.a) * s.l_prime(c.b - c.a) / s.W_prime(c.b - c.a) - s.l(c.x - c.a)


def _refl_below_up(c):
    s = c.sf
    return s.Z(c.x - c.a) / s.Z(c.b - c.a)


def _refl_below_inj(c):
    s = c.sf
    return -s.l(c.x - c.a) + s.Z(c.x - c.a) * s.l(c.b - c.a) / s.Z(c.b - c.a)


def _refl_double_div(c):
    if c.q == 0:
        return INF
    s = c.sf
    return s.Z(c.x - c.a) / (c.q * s.W(c.b - c.a))


def _refl_double_inj(c):
    if c.q == 0:
        return INF
    s = c.sf
    return -s.l(c.x - c.a) + s.Z(c.x - c.a) * s.l_prime(c.b - c.a) / (c.q * s.W(c.b - c.a))


# ---------------------------------------------------------------------------
# auxiliary equalities with the (q+r) discount


def _lemma_W(c):
    k, wr = c.ks, c.sfr
    return k.W_a(c.x) - wr.W(c.x) * k.W_a(c.b) / wr.W(c.b)


def _lemma_W_refl(c):
    k, wr = c.ks, c.sfr
    return k.W_a(c.x) - wr.W(c.x) * k.W_a_prime(c.b) / wr.W_prime(c.b)


def _lemma_Z(c):
    k, wr = c.ks, c.sfr
    return k.Z_a(c.x, c.theta) - wr.W(c.x) * k.Z_a(c.b, c.theta) / wr.W(c.b)


def _lemma_Z_refl(c):
    k, wr = c.ks, c.sfr
    return k.Z_a(c.x, c.theta) - wr.W(c.x) * k.Z_a_prime(c.b, c.theta) / wr.W_prime(c.b)


def _lemma_HX(c):
    k, wr = c.ks, c.sfr
    return k.I(c.x) - wr.W(c.x) * k.I(c.b) / wr.W(c.b)


def _lemma_X_er(c):
    wr = c.sfr
    return c.r * (wr.W_bar2(c.b) * wr.W(c.x) / wr.W(c.b) - wr.W_bar2(c.x))


# ---------------------------------------------------------------------------
# X_r: Parisian reflection from above at 0


def _xr_div(c):
    k, wr = c.ks, c.sfr
    return c.r * (wr.W_bar2(c.b) * k.I(c.x) / k.I(c.b) - wr.W_bar2(c.x))


def _xr_div_binf(c):
    k, s, wr = c.ks, c.sf, c.sfr
    y = -c.a
    return c.r * (k.I(c.x) / c.beta * s.W(y) / c.ps.Z_prime_beta(y) - wr.W_bar2(c.x))


def _xr_div_ainf(c):
    p, wr = c.ps, c.sfr
    return c.r * (wr.W_bar2(c.b) * p.I_inf(c.x) / p.I_inf(c.b) - wr.W_bar2(c.x))


def _xr_div_perp(c):
    if c.q == 0 and c.model.mean >= 0:
        return INF
    p, wr = c.ps, c.sfr
    phq = p.phi_q
    return (c.beta - phq) / (c.beta * phq) * p.I_inf(c.x) - c.r * wr.W_bar2(c.x)


def _xr_up(c):
    k = c.ks
    return k.I(c.x) / k.I(c.b)


def _xr_up_ainf(c):
    p = c.ps
    return p.I_inf(c.x) / p.I_inf(c.b)


def _xr_down(c):
    k, t = c.ks, c.theta
    return k.J(c.x, t) - k.I(c.x) / k.I(c.b) * k.J(c.b, t)


def _xr_down_binf(c):
    k, s, p, t = c.ks, c.sf, c.ps, c.theta
    y = -c.a
    bracket = p.Z_tilde(y, t) - c.r * s.Z_theta(y, t) / c.beta
    return k.J(c.x, t) - k.I(c.x) * bracket * s.W(y) * c.beta / p.Z_prime_beta(y)


def _xr_creep(c):
    k = c.ks
    return k.C(c.x) - k.I(c.x) / k.I(c.b) * k.C(c.b)


def _xr_creep_binf(c):
    k, s, p = c.ks, c.sf, c.ps
    y = -c.a
    bracket = c.beta - c.r * s.W_prime(y) / p.Z_prime_beta(y)
    return k.C(c.x) - k.I(c.x) * s.W(y) * 0.5 * c.model.sigma**2 * bracket


def _xr_over(c):
    k = c.ks
    return k.I(c.x) / k.I(c.b) * k.K(c.b) - k.K(c.x)


def _xr_over_binf(c):
    k, s, p = c.ks, c.sf, c.ps
    y = -c.a
    tail = p.Z_tilde(y) - c.model.mean * s.Z_theta(y, c.beta)
    return k.I(c.x) * s.W(y) / p.Z_prime_beta(y) * tail - k.K(c.x)


# ---------------------------------------------------------------------------
# Xtilde: Parisian at 0 plus classical reflection from above at b


def _q0_infinite(c) -> bool:
    return c.q == 0 and c.model.mean >= 0


def _xt_per(c):
    k, wr = c.ks, c.sfr
    return c.r * (wr.W_bar(c.b) * k.I(c.x) / k.I_prime(c.b) - wr.W_bar2(c.x))


def _xt_per_ainf(c):
    if _q0_infinite(c):
        return INF
    p, wr = c.ps, c.sfr
    return c.r * (wr.W_bar(c.b) * p.I_inf(c.x) / p.I_inf_prime(c.b) - wr.W_bar2(c.x))


def _xt_sing(c):
    k = c.ks
    return k.I(c.x) / k.I_prime(c.b)


def _xt_sing_ainf(c):
    if _q0_infinite(c):
        return INF
    p = c.ps
    return p.I_inf(c.x) / p.I_inf_prime(c.b)


def _xt_down(c):
    k, t = c.ks, c.theta
    return k.J(c.x, t) - k.J_prime(c.b, t) * k.I(c.x) / k.I_prime(c.b)


def _xt_over(c):
    k = c.ks
    return k.I(c.x) / k.I_prime(c.b) * k.K_prime(c.b) - k.K(c.x)


# ---------------------------------------------------------------------------
# Y_r: Parisian at 0 plus classical reflection from below at a


def _yr_div(c):
    k, wr = c.ks, c.sfr
    return c.r * (wr.W_bar2(c.b) * k.J(c.x) / k.J(c.b) - wr.W_bar2(c.x))


def _yr_div_binf(c):
    if c.q == 0:
        return INF
    k, s, wr = c.ks, c.sf, c.sfr
    return c.r * (k.J(c.x) / (c.q * c.beta * s.Z_theta(-c.a, c.beta)) - wr.W_bar2(c.x))


def _yr_inj(c):
    k = c.ks
    return k.H(c.b) * k.J(c.x) / k.J(c.b) - k.H(c.x)


def _yr_inj_binf(c):
    if c.q == 0:
        raise PreconditionError("perpetual capital injections for Y_r are stated for q > 0 only; "
                                "no value is given at q = 0")
    k, s, wr = c.ks, c.sf, c.sfr
    y, q, r, beta = -c.a, c.q, c.r, c.beta
    zy = s.Z(y)
    coef = r * zy / (q * beta * s.Z_theta(y, beta)) + 1.0 / beta
    return (coef * (k.Z_a(c.x) - r * zy * wr.W_bar(c.x)) + r * s.Z_bar(y) * wr.W_bar(c.x)
            - (k.Zbar_a(c.x) + c.model.mean / q))


def _yr_up(c):
    k = c.ks
    return k.J(c.x) / k.J(c.b)


# ---------------------------------------------------------------------------
# Ytilde: Parisian at 0, classical reflection above b and below a


def _yt_per(c):
    if c.q == 0:
        return INF
    k, wr = c.ks, c.sfr
    return c.r * (wr.W_bar(c.b) * k.J(c.x) / k.J_prime(c.b) - wr.W_bar2(c.x))


def _yt_sing(c):
    if c.q == 0:
        return INF
    k = c.ks
    return k.J(c.x) / k.J_prime(c.b)


def _yt_inj(c):
    if c.q == 0:
        return INF
    k = c.ks
    return -k.H(c.x) + k.J(c.x) / k.J_prime(c.b) * k.H_prime(c.b)


# ---------------------------------------------------------------------------

M_ = Meaning
_SPECS = [
    # classical
    IdentitySpec("classic.up", M_.LAPLACE_TRANSFORM, "E_x[e^{-q tau_b+}; tau_b+ < tau_a-] = W(x-a)/W(b-a)",
                 {"finite": _classic_up}, parisian=False),
    IdentitySpec("classic.down", M_.LAPLACE_TRANSFORM,
                 "E_x[e^{-q tau_a- - theta(a - X)}; tau_a- < tau_b+] = Z(x-a,theta) - Z(b-a,theta) W(x-a)/W(b-a)",
                 {"finite": _classic_down}, parisian=False, uses_theta=True),
    IdentitySpec("classic.down.inf", M_.LAPLACE_TRANSFORM,
                 "E_x[e^{-q tau_a- - theta(a - X)}] = Z(x-a,theta) - W(x-a)(psi(theta)-q)/(theta-Phi(q))",
                 {"b_inf": _classic_down_inf}, parisian=False, uses_theta=True),
    IdentitySpec("classic.creep", M_.LAPLACE_TRANSFORM,
                 "E_x[e^{-q tau_a-}; X(tau_a-) = a] = sigma^2/2 (W'(x-a) - Phi(q) W(x-a))",
                 {"b_inf": _classic_creep}, parisian=False, needs_sigma=True),
    IdentitySpec("classic.creep.two_sided", M_.LAPLACE_TRANSFORM,
                 "E_x[e^{-q tau_a-}; X(tau_a-) = a, tau_a- < tau_b+] = C_{b-a}(x-a)",
                 {"finite": _classic_creep_two}, parisian=False, needs_sigma=True),
    IdentitySpec("classic.overshoot", M_.EXPECTED_DISCOUNTED_OVERSHOOT,
                 "E_x[e^{-q tau_a-}(a - X(tau_a-)); tau_a- < tau_b+] = W(x-a) l(b-a)/W(b-a) - l(x-a)",
                 {"finite": _classic_overshoot}, parisian=False),
    IdentitySpec("refl_above.down_time", M_.LAPLACE_TRANSFORM,
                 "E_x[e^{-q tau~ - theta(a - Ybar)}] = Z(x-a,theta) - Z'(b-a,theta) W(x-a)/W'(b-a); "
                 "theta = 0 gives Z(x-a) - q W(b-a) W(x-a)/W'(b-a)",
                 {"finite": _refl_above_down}, parisian=False, uses_theta=True),
    IdentitySpec("refl_above.dividends", M_.EXPECTED_NPV,
                 "E_x[int e^{-qt} dL^b] = W(x-a)/W'(b-a)", {"finite": _refl_above_div}, parisian=False),
    IdentitySpec("refl_above.overshoot", M_.EXPECTED_DISCOUNTED_OVERSHOOT,
                 "E_x[e^{-q tau~}(a - Ybar(tau~))] = W(x-a) l'(b-a)/W'(b-a) - l(x-a)",
                 {"finite": _refl_above_over}, parisian=False),
    IdentitySpec("refl_below.up_time", M_.LAPLACE_TRANSFORM, "E_x[e^{-q eta_b+}] = Z(x-a)/Z(b-a)",
                 {"finite": _refl_below_up}, parisian=False),
    IdentitySpec("refl_below.injection", M_.EXPECTED_NPV,
                 "E_x[int e^{-qt} dR^a] = -l(x-a) + Z(x-a) l(b-a)/Z(b-a)",
                 {"finite": _refl_below_inj}, parisian=False),
    IdentitySpec("refl_double.dividends", M_.EXPECTED_NPV,
                 "doubly reflected, upper regulator: Z(x-a)/(q W(b-a)); infinite at q = 0",
                 {"finite": _refl_double_div}, parisian=False),
    IdentitySpec("refl_double.injection", M_.EXPECTED_NPV,
                 "doubly reflected, lower regulator: -l(x-a) + Z(x-a) l'(b-a)/(q W(b-a)); infinite at q = 0",
                 {"finite": _refl_double_inj}, parisian=False),
    # auxiliary
    IdentitySpec("lemma.W_overshoot", M_.EXPECTATION,
                 "E_x[e^{-(q+r) tau_0-} W(X(tau_0-)-a); tau_0- < tau_b+] = W_a(x) - Wr(x) W_a(b)/Wr(b)",
                 {"finite": _lemma_W}),
    IdentitySpec("lemma.W_overshoot_reflected", M_.EXPECTATION,
                 "E_x[e^{-(q+r) tau~_0} W(Ybar(tau~_0)-a)] = W_a(x) - Wr(x) W_a'(b)/Wr'(b)",
                 {"finite": _lemma_W_refl}),
    IdentitySpec("lemma.Z_overshoot", M_.EXPECTATION,
                 "E_x[e^{-(q+r) tau_0-} Z(X(tau_0-)-a,theta); tau_0- < tau_b+] = Z_a(x,theta) - Wr(x) Z_a(b,theta)/Wr(b)",
                 {"finite": _lemma_Z}, uses_theta=True),
    IdentitySpec("lemma.Z_overshoot_reflected", M_.EXPECTATION,
                 "E_x[e^{-(q+r) tau~_0} Z(Ybar(tau~_0)-a,theta)] = Z_a(x,theta) - Wr(x) Z_a'(b,theta)/Wr'(b)",
                 {"finite": _lemma_Z_refl}, uses_theta=True),
    IdentitySpec("lemma.HX", M_.EXPECTATION,
                 "E_x[e^{-q e_r}; e_r < tau_0- ^ tau_b+] + E_x[e^{-(q+r) tau_0-} W(X(tau_0-)-a)/W(-a); tau_0- < tau_b+]"
                 " = I(x) - Wr(x) I(b)/Wr(b)",
                 {"finite": _lemma_HX}),
    IdentitySpec("lemma.X_at_er", M_.EXPECTATION,
                 "E_x[e^{-q e_r} X(e_r); e_r < tau_b+ ^ tau_0-] = r(Wbbr(b) Wr(x)/Wr(b) - Wbbr(x))",
                 {"finite": _lemma_X_er}),
    # X_r
    IdentitySpec("xr.dividends", M_.EXPECTED_NPV,
                 "periodic dividends of X_r: r(Wbbr(b) I(x)/I(b) - Wbbr(x)); limits in a, b and both",
                 {"finite": _xr_div, "b_inf": _xr_div_binf, "a_inf": _xr_div_ainf, "perpetual": _xr_div_perp}),
    IdentitySpec("xr.up", M_.LAPLACE_TRANSFORM, "up-crossing of X_r: I(x)/I(b); a -> -inf uses I_inf",
                 {"finite": _xr_up, "a_inf": _xr_up_ainf}),
    IdentitySpec("xr.down", M_.LAPLACE_TRANSFORM,
                 "down-crossing of X_r with overshoot: J(x,theta) - I(x) J(b,theta)/I(b)",
                 {"finite": _xr_down, "b_inf": _xr_down_binf}, uses_theta=True),
    IdentitySpec("xr.creep", M_.LAPLACE_TRANSFORM, "creeping of X_r: C(x) - I(x) C(b)/I(b)",
                 {"finite": _xr_creep, "b_inf": _xr_creep_binf}, needs_sigma=True),
    IdentitySpec("xr.overshoot", M_.EXPECTED_DISCOUNTED_OVERSHOOT,
                 "discounted overshoot of X_r: I(x) K(b)/I(b) - K(x)",
                 {"finite": _xr_over, "b_inf": _xr_over_binf}),
    # Xtilde
    IdentitySpec("xtilde.div_periodic", M_.EXPECTED_NPV,
                 "periodic dividends of Xtilde: r(Wbr(b) I(x)/I'(b+) - Wbbr(x))",
                 {"finite": _xt_per, "a_inf": _xt_per_ainf}),
    IdentitySpec("xtilde.div_singular", M_.EXPECTED_NPV, "singular dividends of Xtilde: I(x)/I'(b+)",
                 {"finite": _xt_sing, "a_inf": _xt_sing_ainf}),
    IdentitySpec("xtilde.down", M_.LAPLACE_TRANSFORM,
                 "down-crossing of Xtilde: J(x,theta) - J'(b,theta) I(x)/I'(b+)",
                 {"finite": _xt_down}, uses_theta=True),
    IdentitySpec("xtilde.overshoot", M_.EXPECTED_DISCOUNTED_OVERSHOOT,
                 "discounted overshoot of Xtilde: I(x) K'(b)/I'(b+) - K(x)", {"finite": _xt_over}),
    # Y_r
    IdentitySpec("yr.dividends", M_.EXPECTED_NPV, "periodic dividends of Y_r: r(Wbbr(b) J(x)/J(b) - Wbbr(x))",
                 {"finite": _yr_div, "b_inf": _yr_div_binf}),
    IdentitySpec("yr.injection", M_.EXPECTED_NPV, "capital injections of Y_r: H(b) J(x)/J(b) - H(x)",
                 {"finite": _yr_inj, "b_inf": _yr_inj_binf}),
    IdentitySpec("yr.up", M_.LAPLACE_TRANSFORM, "up-crossing of Y_r: J(x)/J(b)", {"finite": _yr_up}),
    # Ytilde
    IdentitySpec("ytilde.div_periodic", M_.EXPECTED_NPV,
                 "periodic dividends of Ytilde: r(Wbr(b) J(x)/J'(b) - Wbbr(x)); infinite at q = 0",
                 {"finite": _yt_per}),
    IdentitySpec("ytilde.div_singular", M_.EXPECTED_NPV, "singular dividends of Ytilde: J(x)/J'(b); infinite at q = 0",
                 {"finite": _yt_sing}),
    IdentitySpec("ytilde.injection", M_.EXPECTED_NPV,
                 "capital injections of Ytilde: -H(x) + J(x) H'(b)/J'(b); infinite at q = 0",
                 {"finite": _yt_inj}),
]

REGISTRY: dict[str, IdentitySpec] = {s.identity_id: s for s in _SPECS}

# limit mode -> (finite partner id, partner mode, which parameter runs, default sequence)
LIMIT_PAIRS: dict[tuple[str, str], tuple[str, str, str, tuple[float, ...]]] = {
    ("classic.down.inf", "b_inf"): ("classic.down", "finite", "b", (10.0, 20.0, 40.0)),
    ("classic.creep", "b_inf"): ("classic.creep.two_sided", "finite", "b", (10.0, 20.0, 40.0)),
    ("xr.dividends", "b_inf"): ("xr.dividends", "finite", "b", (10.0, 20.0, 40.0)),
    ("xr.dividends", "a_inf"): ("xr.dividends", "finite", "a", (-5.0, -10.0, -20.0)),
    ("xr.dividends", "perpetual"): ("xr.dividends", "a_inf", "b", (10.0, 20.0, 40.0)),
    ("xr.up", "a_inf"): ("xr.up", "finite", "a", (-5.0, -10.0, -20.0)),
    ("xr.down", "b_inf"): ("xr.down", "finite", "b", (10.0, 20.0, 40.0)),
    ("xr.creep", "b_inf"): ("xr.creep", "finite", "b", (10.0, 20.0, 40.0)),
    ("xr.overshoot", "b_inf"): ("xr.overshoot", "finite", "b", (10.0, 20.0, 40.0)),
    ("xtilde.div_periodic", "a_inf"): ("xtilde.div_periodic", "finite", "a", (-5.0, -10.0, -20.0)),
    ("xtilde.div_singular", "a_inf"): ("xtilde.div_singular", "finite", "a", (-5.0, -10.0, -20.0)),
    ("yr.dividends", "b_inf"): ("yr.dividends", "finite", "b", (10.0, 20.0, 40.0)),
    ("yr.injection", "b_inf"): ("yr.injection", "finite", "b", (10.0, 20.0, 40.0)),
}


def _validate(req: IdentityRequest, spec: IdentitySpec) -> IdentityRequest:
    mode = req.mode
    if mode not in spec.modes:
        raise PreconditionError(f"{spec.identity_id} has no mode {mode!r}; available: {sorted(spec.modes)}")
    q = float(req.q)
    if not (q >= 0 and math.isfinite(q)):
        raise DomainError(f"q must be finite and >= 0, got {req.q!r}")
    if not req.theta >= 0:
        raise DomainError(f"theta must be >= 0, got {req.theta!r}")
    if spec.needs_sigma and req.model.sigma == 0:
        raise UnsupportedOperationError(f"{spec.identity_id} concerns creeping, which needs sigma > 0")
    a, b = float(req.a), float(req.b)
    if mode in ("a_inf", "perpetual"):
        a = -INF
    if mode in ("b_inf", "perpetual"):
        b = INF
    if spec.parisian:
        if req.r is None or not (req.r > 0 and math.isfinite(req.r)):
            raise DomainError(f"{spec.identity_id} needs a finite rate r > 0")
        if not a < 0:
            raise DomainError(f"a must be < 0, got {a!r}")
        if not b > 0:
            raise DomainError(f"b must be > 0, got {b!r}")
    elif not a < b:
        raise DomainError(f"need a < b, got a={a!r}, b={b!r}")
    if not math.isfinite(float(req.x)):
        raise DomainError("x must be finite")
    if math.isfinite(b) and req.x > b:
        raise DomainError(f"x = {req.x!r} exceeds b = {b!r}")
    return replace(req, q=q, a=a, b=b)


def evaluate(req: IdentityRequest) -> IdentityValue:
    """Evaluate one registry identity; +inf is returned where the value is known to be infinite."""
    spec = REGISTRY.get(req.identity_id)
    if spec is None:
        raise KeyError(f"unknown identity id {req.identity_id!r}; valid ids: {', '.join(REGISTRY)}")
    req = _validate(req, spec)
    value = float(spec.modes[req.mode](_Ctx(req)))
    return IdentityValue(value, spec.meaning, f"{spec.identity_id} [{req.mode}]: {spec.citation}", req)


def value_of(identity_id: str, model: LevyModel, **params) -> float:
    """Shorthand: ``value_of("xr.up", model, q=.., r=.., a=.., b=.., x=..)``."""
    params.setdefault("a", -INF)
    params.setdefault("b", INF)
    return evaluate(IdentityRequest(identity_id, model, **params)).value


# ---------------------------------------------------------------------------
# limit consistency


@dataclass(frozen=True)
class LimitReport:
    identity_id: str
    mode: str
    param: str
    sequence: tuple[float, ...]
    finite_values: tuple[float, ...]
    limit_value: float
    deviations: tuple[float, ...]
    ratios: tuple[float | None, ...]
    max_deviation: float
    final_deviation: float
    tolerance: float
    noise_floor: float
    monotone: bool
    passed: bool


def evaluate_limit_consistency(identity_id: str, mode: str, params: dict, sequence=None,
                               rel_tol: float = 1e-4, max_ratio: float = 0.2) -> LimitReport:
    """Compare a limit mode against its finite partner along a sequence of barriers.

    ``params`` holds ``model, q, r, a, b, x, theta``.  Passing requires the last
    deviation to be at most ``rel_tol * max(1, |limit|)`` and each deviation to
    shrink by ``max_ratio`` per doubling, unless the previous deviation already
    sits at the rounding floor ``1e-11 * max(1, |limit|)``.
    """
    key = (identity_id, mode)
    if key not in LIMIT_PAIRS:
        raise PreconditionError(f"{identity_id} has no limit mode {mode!r}")
    partner, partner_mode, pname, default = LIMIT_PAIRS[key]
    seq = tuple(float(s) for s in (sequence or default))
    base = dict(params)
    base.setdefault("a", -2.0)
    base.setdefault("b", 3.0)
    limit = evaluate(IdentityRequest(identity_id, mode=mode, **base)).value
    finite = []
    for s in seq:
        p = dict(base, **{pname: s})
        finite.append(evaluate(IdentityRequest(partner, mode=partner_mode, **p)).value)
    scale = max(1.0, abs(limit)) if math.isfinite(limit) else 1.0
    floor = 1e-11 * scale
    tol = rel_tol * scale
    if math.isinf(limit):
        devs = tuple(INF if not math.isinf(f) else 0.0 for f in finite)
        ok = all(math.isinf(f) for f in finite) or all(f2 > f1 for f1, f2 in zip(finite, finite[1:]))
        return LimitReport(identity_id, mode, pname, seq, tuple(finite), limit, devs, (None,) * len(seq),
                           max(devs), devs[-1], tol, floor, ok, ok)
    devs = tuple(abs(f - limit) for f in finite)
    ratios: list[float | None] = [None]
    ok_ratio = True
    for d0, d1 in zip(devs, devs[1:]):
        if d0 <= floor:
            ratios.append(None)
            ok_ratio &= d1 <= max(floor * 10, d0 * 10)
        else:
            ratios.append(d1 / d0)
            ok_ratio &= d1 / d0 <= max_ratio
    monotone = all(d1 <= d0 or d0 <= floor for d0, d1 in zip(devs, devs[1:]))
    passed = devs[-1] <= tol and ok_ratio
    return LimitReport(identity_id, mode, pname, seq, tuple(finite), limit, devs, tuple(ratios),
                       max(devs), devs[-1], tol, floor, monotone, passed)


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepRow:
    param_value: float
    value: float | None
    error: str | None = None
    is_argmax: bool = False


def barrier_sweep(identity_id: str, param: str, lo: float, hi: float, steps: int, base: dict) -> list[SweepRow]:
    """Evaluate an identity along an evenly spaced grid of one parameter (a, b, x or r)."""
    if param not in ("a", "b", "x", "r"):
        raise DomainError(f"sweep parameter must be one of a, b, x, r (got {param!r})")
    if steps < 1:
        raise DomainError("steps must be >= 1")
    spec = REGISTRY.get(identity_id)
    if spec is None:
        raise KeyError(f"unknown identity id {identity_id!r}; valid ids: {', '.join(REGISTRY)}")
    grid = np.linspace(lo, hi, steps) if steps > 1 else np.array([lo])
    rows = []
    for v in grid:
        p = dict(base, **{param: float(v)})
        try:
            val = evaluate(IdentityRequest(identity_id, **p)).value
            rows.append(SweepRow(float(v), val))
        except (DomainError, PreconditionError, UnsupportedOperationError) as exc:
            rows.append(SweepRow(float(v), None, str(exc)))
    if spec.meaning is Meaning.EXPECTED_NPV:
        finite = [(i, r.value) for i, r in enumerate(rows) if r.value is not None and math.isfinite(r.value)]
        if finite:
            i_best = max(finite, key=lambda t: t[1])[0]
            rows[i_best] = replace(rows[i_best], is_argmax=True)
    return rows
