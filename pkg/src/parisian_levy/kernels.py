"""The operator M_a^{(q,r)} and the kernels built from it.

    M f(x) = f(x - a) + r int_0^x W^{(q+r)}(x - y) f(y - a) dy

Since ``W^{(q+r)} = sum_m omega_m e^{beta_m x}`` and every scale function is an
exp-polynomial on the positive half-line, the convolution is evaluated in
closed form (see :meth:`ExpTerms.conv_exp`).  The right derivative is

    (M f)'(x) = f'(x - a) + r sum_m omega_m [ f(x - a) + beta_m conv_m(x) ].

:func:`apply_M` is an independent quadrature route for arbitrary callables.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, UnsupportedOperationError
from .levy_model import LevyModel, phi
from .scale_functions import ScaleFunctions, _out, _theta

__all__ = ["ParisianScales", "KernelSet", "apply_M", "eval_limits", "LIMITS", "M_alternative"]


class ParisianScales:
    """Scale functions at levels q and q+r plus the a-free objects (Ztilde, I_{-inf})."""

    def __init__(self, model: LevyModel, q: float, r: float):
        if not r > 0:
            raise DomainError(f"r must be > 0, got {r!r}")
        self.model = model
        self.q = float(q)
        self.r = float(r)
        self.sf = ScaleFunctions(model, self.q)
        self.sf_r = ScaleFunctions(model, self.q + self.r)
        self.phi_q = self.sf.phi_q
        self.beta = self.sf_r.phi_q  # Phi(q+r)

    def Z_tilde(self, x, theta: float = 0.0):
        return self.sf.Z_tilde(x, theta, self.r, beta=self.beta)

    def Z_prime_beta(self, x):
        """Z^{(q)'}(x, Phi(q+r)) = Phi(q+r) Z(x, Phi(q+r)) - r W(x)."""
        return self.sf.Z_theta_prime(x, self.beta)

    def I_inf(self, x):
        """I_{-inf}(x) = Z^{(q+r)}(x, Phi(q)) - r Wbar^{(q+r)}(x)."""
        x = np.asarray(x, dtype=float)
        return _out(x, np.asarray(self.sf_r.Z_theta(x, self.phi_q)) - self.r * np.asarray(self.sf_r.W_bar(x)))

    def I_inf_prime(self, x):
        return _out(x, self.phi_q * np.asarray(self.sf_r.Z_theta(x, self.phi_q)))


# value / right-derivative pairs of the base functions fed to M
def _base(sf: ScaleFunctions, name: str, theta: float):
    if name == "W":
        return sf.W, sf.W_prime
    if name == "Wp":
        return sf.W_prime, None
    if name == "Wbar":
        return sf.W_bar, sf.W
    if name == "Z":
        return sf.Z, lambda v: sf.q * np.asarray(sf.W(v))
    if name == "Ztheta":
        return (lambda v: sf.Z_theta(v, theta, check=False)), (lambda v: sf.Z_theta_prime(v, theta, check=False))
    if name == "Zbar":
        return sf.Z_bar, sf.Z
    if name == "l":
        return sf.l, sf.l_prime
    raise KeyError(name)


class KernelSet(ParisianScales):
    """All M-derived kernels for one ``(model, q, r, a)``.

    Every method takes scalar or array ``x``.  ``h`` is only used by the
    quadrature route :func:`apply_M`.
    """

    def __init__(self, model: LevyModel, q: float, r: float, a: float, h: float = 0.005):
        super().__init__(model, q, r)
        a = float(a)
        if not (a < 0 and math.isfinite(a)):
            raise DomainError(f"a must be finite and < 0, got {a!r}")
        self.a = a
        self.h = float(h)
        self.W_ma = float(self.sf.W(-a))
        self._shifted = lru_cache(maxsize=64)(self._shifted_uncached)

    def _shifted_uncached(self, name: str, theta: float):
        return self.sf.terms(name, theta).shift(-self.a)

    # -- M itself -----------------------------------------------------------
    def M(self, name: str, x, theta: float = 0.0, deriv: bool = False):
        """M applied to a named scale function (``W, Wp, Wbar, Z, Ztheta, Zbar, l``)."""
        f, fp = _base(self.sf, name, theta)
        xa = np.asarray(x, dtype=float)
        shifted = np.asarray(xa - self.a)
        pos = xa >= 0
        xp = np.where(pos, xa, 0.0)
        terms = self._shifted(name, float(theta))
        convs = [terms.conv_exp(b, xp) for b in self.sf_r.roots]
        if not deriv:
            val = np.asarray(f(shifted), dtype=float)
            integral = sum(w * c for w, c in zip(self.sf_r.weights, convs))
            return _out(x, np.where(pos, val + self.r * integral, val))
        if fp is None:
            raise UnsupportedOperationError(f"derivative of M{name} is not provided")
        fv = np.asarray(f(shifted), dtype=float)
        dv = np.asarray(fp(shifted), dtype=float)
        extra = sum(w * (fv + b * c) for w, b, c in zip(self.sf_r.weights, self.sf_r.roots, convs))
        return _out(x, np.where(pos, dv + self.r * extra, dv))

    def W_a(self, x):
        return self.M("W", x)

    def W_a_prime(self, x):
        return self.M("W", x, deriv=True)

    def Wbar_a(self, x):
        return self.M("Wbar", x)

    def Z_a(self, x, theta: float = 0.0):
        return self.M("Ztheta", x, _theta(theta))

    def Z_a_prime(self, x, theta: float = 0.0):
        return self.M("Ztheta", x, _theta(theta), deriv=True)

    def Zbar_a(self, x):
        return self.M("Zbar", x)

    def l_a(self, x):
        return self.M("l", x)

    # -- kernels ------------------------------------------------------------
    def _wbar_r(self, x):
        return np.asarray(self.sf_r.W_bar(x))

    def I(self, x):
        return _out(x, np.asarray(self.W_a(x)) / self.W_ma - self.r * self._wbar_r(x))

    def I_prime(self, x):
        """Right derivative (I)'(x+)."""
        return _out(x, np.asarray(self.W_a_prime(x)) / self.W_ma - self.r * np.asarray(self.sf_r.W(x)))

    def J(self, x, theta: float = 0.0, check: bool = True):
        """J_a(x, theta); ``check=False`` permits small negative theta for difference quotients."""
        if check:
            _theta(theta)
        z = float(self.sf.Z_theta(-self.a, theta, check=False))
        return _out(x, np.asarray(self.M("Ztheta", x, float(theta))) - self.r * z * self._wbar_r(x))

    def J_prime(self, x, theta: float = 0.0):
        z = float(self.sf.Z_theta(-self.a, theta))
        return _out(x, np.asarray(self.Z_a_prime(x, theta)) - self.r * z * np.asarray(self.sf_r.W(x)))

    def J_hat(self, x, theta: float = 0.0):
        z = float(self.sf.Z_theta(-self.a, theta))
        return _out(x, np.asarray(self.J(x, theta)) - z * np.asarray(self.I(x)))

    def l(self, x):
        return self.sf.l(x)

    def K(self, x):
        la = float(self.sf.l(-self.a))
        return _out(x, np.asarray(self.l_a(x)) - self.r * la * self._wbar_r(x))

    def K_prime(self, x):
        la = float(self.sf.l(-self.a))
        return _out(x, np.asarray(self.M("l", x, deriv=True)) - self.r * la * np.asarray(self.sf_r.W(x)))

    def H(self, x):
        c = float(self.sf.l(-self.a)) / float(self.sf.Z(-self.a))
        return _out(x, np.asarray(self.K(x)) - c * np.asarray(self.J(x)))

    def H_prime(self, x):
        c = float(self.sf.l(-self.a)) / float(self.sf.Z(-self.a))
        return _out(x, np.asarray(self.K_prime(x)) - c * np.asarray(self.J_prime(x)))

    def C(self, x):
        """Creeping kernel C_a^{(q,r)}; needs sigma > 0."""
        if self.model.sigma == 0:
            raise UnsupportedOperationError("creeping kernel requires sigma > 0 (no creeping otherwise)")
        wp = float(self.sf.W_prime(-self.a))
        s2 = 0.5 * self.model.sigma**2
        return _out(x, s2 * (np.asarray(self.M("Wp", x)) - self.r * self._wbar_r(x) * wp))


def apply_M(ks: KernelSet, f, x: float) -> float:
    """M applied to an arbitrary callable by composite Simpson with step about ``ks.h``."""
    x = float(x)
    base = float(f(x - ks.a))
    if x <= 0:
        return base
    n = max(2, int(math.ceil(x / ks.h)))
    n += n % 2
    y = np.linspace(0.0, x, n + 1)
    vals = np.asarray(ks.sf_r.W(x - y)) * np.array([float(f(v - ks.a)) for v in y])
    hh = x / n
    integral = hh / 3.0 * (vals[0] + vals[-1] + 4 * vals[1:-1:2].sum() + 2 * vals[2:-1:2].sum())
    return base + ks.r * integral


def M_alternative(ks: KernelSet, which: str, x: float) -> float:
    """Second representation of W_a / Zbar_a via an integral over [0, -a] (adaptive quadrature)."""
    x = float(x)
    a, r = ks.a, ks.r
    if which == "W":
        first, g = float(ks.sf_r.W(x - a)), ks.sf.W
    elif which == "Zbar":
        first, g = float(ks.sf_r.Z_bar(x - a)), ks.sf.Z_bar
    else:
        raise KeyError(which)
    pts = [x - a] if 0 < x - a < -a else None
    val, _ = quad(lambda u: float(ks.sf_r.W(x - u - a)) * float(g(u)), 0.0, -a,
                  points=pts, epsabs=0.0, epsrel=1e-13, limit=200)
    return first - r * val


# ---------------------------------------------------------------------------
# Closed-form limits (b -> inf and a -> -inf)

LIMITS = (
    "W_a/W(-a)",
    "W_a/Wqr",
    "Z_a/Wqr",
    "Wbar_a/Wqr",
    "Zbar_a/Wqr",
    "I/Wqr",
    "J/Wqr",
    "K/Wqr",
    "C/Wqr",
    "I_inf",
    "I_inf_prime",
)


def eval_limits(ps: ParisianScales, which: str, *, a: float | None = None, x: float | None = None,
                theta: float = 0.0) -> float:
    """Closed-form ratio limits.

    ``W_a/W(-a)``, ``I_inf`` and ``I_inf_prime`` are a -> -inf limits evaluated
    at ``x``; the others are b -> inf limits of ``kernel(b)/W^{(q+r)}(b)`` and need ``a``.
    """
    if which not in LIMITS:
        raise KeyError(f"unknown limit {which!r}; choose from {LIMITS}")
    sf, q, r, beta = ps.sf, ps.q, ps.r, ps.beta
    theta = _theta(theta)
    if which in ("W_a/W(-a)", "I_inf", "I_inf_prime"):
        if x is None:
            raise DomainError(f"limit {which} needs x")
        if which == "W_a/W(-a)":
            return float(ps.sf_r.Z_theta(x, ps.phi_q))
        return float(ps.I_inf(x) if which == "I_inf" else ps.I_inf_prime(x))
    if a is None or not a < 0:
        raise DomainError(f"limit {which} needs a < 0")
    y = -a
    if which in ("Z_a/Wqr", "J/Wqr") and theta > 0 and not theta < ps.phi_q:
        raise DomainError(f"limit {which} is stated for theta < Phi(q) = {ps.phi_q:.6g}; "
                          "larger theta are reached only through analytic continuation of the identities")
    if which == "W_a/Wqr":
        return float(sf.Z_theta(y, beta))
    if which == "Z_a/Wqr":
        return float(ps.Z_tilde(y, theta))
    if which == "Wbar_a/Wqr":
        if q == 0:
            return math.inf
        return float(ps.Z_tilde(y)) / q - r / (q * beta)
    if which == "Zbar_a/Wqr":
        return (r * float(sf.Z_bar(y)) + float(ps.Z_tilde(y))) / beta
    if which == "I/Wqr":
        return float(ps.Z_prime_beta(y)) / (float(sf.W(y)) * beta)
    if which == "J/Wqr":
        return float(ps.Z_tilde(y, theta)) - r * float(sf.Z_theta(y, theta)) / beta
    if which == "K/Wqr":
        return (float(ps.Z_tilde(y)) - ps.model.mean * float(sf.Z_theta(y, beta))) / beta
    # C/Wqr
    if ps.model.sigma == 0:
        raise UnsupportedOperationError("creeping kernel requires sigma > 0")
    return 0.5 * ps.model.sigma**2 * (float(ps.Z_prime_beta(y)) - r * float(sf.W_prime(y)) / beta)
