"""q-scale functions and their relatives.

For hyperexponential jumps ``1/(psi(theta) - q)`` is rational with simple real
poles ``theta_k``, hence ``W^{(q)}(x) = sum_k e^{theta_k x} / psi'(theta_k)``.
Everything else is derived from this sum with divided differences of psi,
which keeps removable singularities (theta = Phi(q), theta = Phi(q+r)) exact:

    Z^{(q)}(x, theta)   = sum_k w_k psi[theta_k, theta] e^{theta_k x}          (x >= 0)
    Ztilde^{(q,r)}(x,t) = sum_k w_k e^{theta_k x} (psi[beta, t] psi[theta_k, beta]
                                                   - r psi[theta_k, t, beta]) (x >= 0)

with ``w_k = 1/psi'(theta_k)`` and ``beta = Phi(q+r)``.

:class:`ScaleFunctions` is the closed-form evaluator.  :class:`ScaleTable` is
the tabulated product with cubic interpolation; when the closed form is not
available (repeated roots) the table is filled by numerical Laplace inversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import mpmath
import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from .errors import ConstructionError, DomainError, RepeatedRootError
from .expsum import ExpTerms, phi_fn
from .levy_model import (
    LevyModel,
    VariationClass,
    _psi_prime_raw,
    _psi_raw,
    classify_variation,
    phi,
    psi_dd,
    psi_dd2,
)

__all__ = [
    "ScaleFunctions",
    "ScaleTable",
    "ThetaScale",
    "build_scale_table",
    "eval_W",
    "eval_W_prime",
    "eval_W_bar",
    "eval_W_bar2",
    "eval_Z",
    "eval_Z_bar",
    "eval_Z_theta",
    "eval_Z_theta_prime",
    "eval_Z_tilde",
    "invert_W",
    "laplace_roots",
]


def _out(x, arr):
    return float(arr) if np.ndim(x) == 0 else arr


def laplace_roots(model: LevyModel, q: float) -> np.ndarray:
    """All roots of psi(theta) = q, sorted in decreasing order (the first is Phi(q)).

    Raises :class:`RepeatedRootError` when two roots coincide.
    """
    P = np.polynomial.Polynomial
    lam = model.lam
    base = P([-lam - q, model.drift, 0.5 * model.sigma**2])
    prod_all = P([1.0])
    for ph in model.phases:
        prod_all = prod_all * P([ph.alpha, 1.0])
    num = base * prod_all
    for i, ph in enumerate(model.phases):
        others = P([1.0])
        for k, o in enumerate(model.phases):
            if k != i:
                others = others * P([o.alpha, 1.0])
        num = num + lam * ph.weight * ph.alpha * others
    coef = num.coef.copy()
    # trim numerically-zero leading coefficient (sigma = 0 case)
    while len(coef) > 1 and coef[-1] == 0.0:
        coef = coef[:-1]
    raw = np.polynomial.polynomial.polyroots(coef)
    scale = max(1.0, float(np.max(np.abs(raw))))
    if np.any(np.abs(raw.imag) > 1e-7 * scale):
        raise RepeatedRootError(f"non-real roots of psi = q encountered: {raw}")
    roots = np.sort(raw.real)[::-1]
    if q == 0:
        k0 = int(np.argmin(np.abs(roots)))
        if abs(roots[k0]) < 1e-9 * scale:
            roots[k0] = 0.0
    for k, t in enumerate(roots):
        if t == 0.0 and q == 0:
            continue
        for _ in range(6):
            f = float(_psi_raw(model, t)) - q
            d = float(_psi_prime_raw(model, t))
            if d == 0:
                break
            nt = t - f / d
            if abs(float(_psi_raw(model, nt)) - q) >= abs(f):
                break
            t = nt
        roots[k] = t
    roots = np.sort(roots)[::-1]
    gaps = np.diff(roots[::-1])
    if np.any(gaps <= 1e-7 * scale):
        raise RepeatedRootError(f"repeated root of psi = {q} (roots {roots})")
    return roots


class ScaleFunctions:
    """Closed-form evaluator for one ``(model, q)`` pair.

    All methods accept scalars or arrays and handle the negative half-line.
    """

    def __init__(self, model: LevyModel, q: float):
        if not q >= 0:
            raise DomainError(f"q must be >= 0, got {q!r}")
        self.model = model
        self.q = float(q)
        self.roots = laplace_roots(model, self.q)
        self.phi_q = phi(model, self.q)
        if abs(self.roots[0] - self.phi_q) > 1e-8 * max(1.0, self.phi_q):
            raise ConstructionError(f"largest root {self.roots[0]} disagrees with Phi(q) = {self.phi_q}")
        self.roots[0] = self.phi_q
        self.weights = 1.0 / psi_dd(model, self.roots, self.roots)
        self.mean = model.mean

    # -- term representations (positive branch) ----------------------------
    def _integrated(self, coefs, order: int) -> ExpTerms:
        """Terms of sum_k coefs_k * B_order(theta_k, x) with B_n the n-fold integral of e^{theta x}."""
        items = []
        for c, t in zip(coefs, self.roots):
            if t == 0.0:
                items.append((c, order, 0.0))
                continue
            if order == 0:
                items.append((c, 0, t))
            elif order == 1:
                items += [(c / t, 0, t), (-c / t, 0, 0.0)]
            elif order == 2:
                items += [(c / t**2, 0, t), (-c / t**2, 0, 0.0), (-c / t, 1, 0.0)]
            else:
                raise ValueError(order)
        return ExpTerms.build(items)

    def terms(self, name: str, theta: float = 0.0) -> ExpTerms:
        """Exp-polynomial terms of a named function on ``x >= 0``."""
        w, t = self.weights, self.roots
        if name == "W":
            return self._integrated(w, 0)
        if name == "Wp":
            return self._integrated(w * t, 0)
        if name == "Wbar":
            return self._integrated(w, 1)
        if name == "Wbar2":
            return self._integrated(w, 2)
        if name == "Z":
            return self._integrated(w * self.dd(0.0), 0)
        if name == "Ztheta":
            return self._integrated(w * self.dd(theta), 0)
        if name == "Zbar":
            return self._integrated(w * self.dd(0.0), 1)
        if name == "l":
            c = w * psi_dd2(self.model, t, 0.0, 0.0)
            return ExpTerms.build([(ck, 0, tk) for ck, tk in zip(c, t) if tk != 0.0]
                                  + [(-float(np.sum(c[t != 0.0])), 0, 0.0)])
        raise KeyError(name)

    def dd(self, theta: float) -> np.ndarray:
        """psi[theta_k, theta] for all roots."""
        return psi_dd(self.model, self.roots, float(theta))

    # -- evaluation ---------------------------------------------------------
    def _sum(self, x, coefs, order: int, neg):
        x = np.asarray(x, dtype=float)
        pos = x >= 0
        xp = np.where(pos, x, 0.0)
        acc = np.zeros_like(xp)
        for c, t in zip(coefs, self.roots):
            tx = t * xp
            if order == 0:
                acc = acc + c * np.exp(tx)
            else:
                acc = acc + c * xp**order * phi_fn(order, tx)
        return np.where(pos, acc, neg(x))

    def W(self, x):
        return _out(x, self._sum(x, self.weights, 0, np.zeros_like))

    def W_prime(self, x):
        """Derivative of W; at x = 0 this is the right derivative."""
        return _out(x, self._sum(x, self.weights * self.roots, 0, np.zeros_like))

    def W_bar(self, x):
        return _out(x, self._sum(x, self.weights, 1, np.zeros_like))

    def W_bar2(self, x):
        return _out(x, self._sum(x, self.weights, 2, np.zeros_like))

    def Z(self, x):
        return _out(x, self._sum(x, self.weights * self.dd(0.0), 0, np.ones_like))

    def Z_bar(self, x):
        return _out(x, self._sum(x, self.weights * self.dd(0.0), 1, lambda v: v))

    def Z_theta(self, x, theta: float, check: bool = True):
        """Z(x, theta); ``check=False`` admits theta slightly below 0 (psi is analytic there)."""
        theta = _theta(theta) if check else float(theta)
        return _out(x, self._sum(x, self.weights * self.dd(theta), 0, lambda v: np.exp(theta * v)))

    def Z_theta_prime(self, x, theta: float, check: bool = True):
        theta = _theta(theta) if check else float(theta)
        return _out(x, self._sum(x, self.weights * self.dd(theta) * self.roots, 0,
                                 lambda v: theta * np.exp(theta * v)))

    def l(self, x):
        """l(x) = Zbar(x) - psi'(0+) Wbar(x)."""
        c = self.weights * psi_dd2(self.model, self.roots, 0.0, 0.0) * self.roots
        return _out(x, self._sum(x, c, 1, lambda v: v))

    def l_prime(self, x):
        c = self.weights * psi_dd2(self.model, self.roots, 0.0, 0.0) * self.roots
        return _out(x, self._sum(x, c, 0, np.ones_like))

    def Z_tilde(self, x, theta: float, r: float, beta: float | None = None):
        """Ztilde^{(q,r)}(x, theta), continuous through theta = Phi(q+r)."""
        theta = _theta(theta)
        if beta is None:
            beta = phi(self.model, self.q + r)
        m = self.model
        d_bt = float(psi_dd(m, beta, theta))
        coef = self.weights * (d_bt * psi_dd(m, self.roots, beta) - r * psi_dd2(m, self.roots, theta, beta))

        def neg(v):
            # r (e^{theta v} - e^{beta v}) / (beta - theta) written through phi_1
            return d_bt * np.exp(beta * v) - r * np.exp(theta * v) * v * phi_fn(1, (beta - theta) * v)

        return _out(x, self._sum(x, coef, 0, neg))

    @cached_property
    def W0(self) -> float:
        return float(np.sum(self.weights))


def _theta(theta) -> float:
    theta = float(theta)
    if not theta >= 0:
        raise DomainError(f"theta must be >= 0, got {theta!r}")
    return theta


# ---------------------------------------------------------------------------
# Numerical Laplace inversion (independent oracle)


def invert_W(model: LevyModel, q: float, x, dps: int = 30):
    """W^{(q)}(x) by fixed-Talbot inversion of ``1/(psi - q)``.

    The transform is shifted by ``c = Phi(q) + 1`` so that every singularity
    lies strictly left of the contour: ``W(x) = e^{c x} L^{-1}[1/(psi(s+c)-q)](x)``.
    """
    shift = phi(model, q) + 1.0
    lam, sig2, drift = model.lam, model.sigma**2, model.drift
    phases = [(mpmath.mpf(p.alpha), mpmath.mpf(p.weight)) for p in model.phases]

    def F(s):
        th = s + shift
        val = drift * th + sig2 * th * th / 2
        for a, w in phases:
            val -= lam * w * th / (a + th)
        return 1 / (val - q)

    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(xs)
    with mpmath.workdps(dps):
        for i, xv in enumerate(xs):
            if xv < 0:
                out[i] = 0.0
            elif xv == 0:
                out[i] = 1.0 / drift if classify_variation(model) is VariationClass.BOUNDED else 0.0
            else:
                val = mpmath.invertlaplace(F, xv, method="talbot")
                out[i] = float(mpmath.exp(shift * xv) * val)
    return float(out[0]) if np.ndim(x) == 0 else out


# ---------------------------------------------------------------------------
# Tabulated scale functions


def _simpson_cumulative(y: np.ndarray, h: float) -> np.ndarray:
    """Cumulative integral on a uniform grid: Simpson on even nodes, 3/8-corrected odd nodes."""
    n = len(y)
    out = np.zeros(n)
    if n < 2:
        return out
    # pairwise Simpson over [x_{2k}, x_{2k+2}]
    even = np.zeros((n + 1) // 2)
    if n >= 3:
        seg = h / 3.0 * (y[0:-2:2] + 4 * y[1:-1:2] + y[2::2])
        even[1 : 1 + len(seg)] = np.cumsum(seg)
    out[0::2] = even[: len(out[0::2])]
    # odd nodes: integrate back from the next even node with a cubic-exact local rule
    for i in range(1, n, 2):
        if i + 1 < n:
            # int_{x_i}^{x_{i+1}} via 4-point rule on x_{i-1}..x_{i+2} (or fallback)
            if i + 2 < n:
                piece = h / 24.0 * (-y[i - 1] + 13 * y[i] + 13 * y[i + 1] - y[i + 2])
            else:
                piece = h / 12.0 * (-y[i - 1] + 8 * y[i] + 5 * y[i + 1])
            out[i] = out[i + 1] - piece
        else:
            piece = h / 12.0 * (-y[i - 2] + 8 * y[i - 1] + 5 * y[i]) if i >= 2 else h / 2 * (y[i - 1] + y[i])
            out[i] = out[i - 1] + piece
    return out


@dataclass(frozen=True)
class ScaleTable:
    """Tabulated ``W, W', Wbar, Wbarbar`` on ``[0, x_max]`` for one ``(model, q)``."""

    model: LevyModel
    q: float
    h: float
    grid: np.ndarray
    W: np.ndarray
    Wp: np.ndarray
    Wbar: np.ndarray
    Wbar2: np.ndarray
    closed_form: ScaleFunctions | None = None
    splines: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def x_max(self) -> float:
        return float(self.grid[-1])

    @property
    def phi_q(self) -> float:
        return phi(self.model, self.q)


def build_scale_table(model: LevyModel, q: float, x_max: float = 10.0, h: float = 0.005,
                      force_inversion: bool = False) -> ScaleTable:
    """Tabulate the scale functions and validate the table invariants."""
    if not q >= 0:
        raise DomainError("q must be >= 0")
    if not (x_max > 0 and h > 0):
        raise DomainError("x_max and h must be > 0")
    n = int(round(x_max / h))
    if abs(n * h - x_max) > 1e-9 * x_max:
        n = int(math.ceil(x_max / h))
    grid = np.arange(n + 1) * h
    sf = None
    if not force_inversion:
        try:
            sf = ScaleFunctions(model, q)
        except RepeatedRootError:
            sf = None
    if sf is not None:
        W, Wp, Wb, Wbb = sf.W(grid), sf.W_prime(grid), sf.W_bar(grid), sf.W_bar2(grid)
    else:
        W = np.asarray(invert_W(model, q, grid))
        Wb = _simpson_cumulative(W, h)
        Wbb = _simpson_cumulative(Wb, h)
        Wp = CubicSpline(grid, W).derivative()(grid)
        if classify_variation(model) is VariationClass.UNBOUNDED:
            Wp[0] = 2.0 / model.sigma**2
    table = ScaleTable(model, float(q), h, grid, W, Wp, Wb, Wbb, sf)
    for name, vals in (("W", W), ("Wp", Wp), ("Wbar", Wb), ("Wbar2", Wbb)):
        table.splines[name] = CubicSpline(grid, vals)
    _validate(table)
    return table


def _validate(t: ScaleTable) -> None:
    model = t.model
    W = t.W
    w0 = 1.0 / model.drift if classify_variation(model) is VariationClass.BOUNDED else 0.0
    if abs(W[0] - w0) > 1e-8 * max(1.0, w0):
        raise ConstructionError(f"W(0) = {W[0]} but expected {w0}")
    if np.any(W < -1e-12):
        raise ConstructionError("W is negative somewhere")
    if np.any(np.diff(W) <= 0):
        raise ConstructionError("W is not strictly increasing on the grid")
    if t.Wbar[0] != 0 or t.Wbar2[0] != 0:
        raise ConstructionError("Wbar(0) and Wbarbar(0) must vanish")
    ph = phi(model, t.q)
    env = np.exp(-ph * t.grid) * W
    if np.any(np.diff(env) < -1e-10 * np.max(env)):
        raise ConstructionError("e^{-Phi(q) x} W(x) is not nondecreasing")
    bound = 1.0 / float(_psi_prime_raw(model, ph)) if _psi_prime_raw(model, ph) > 0 else math.inf
    if np.any(env > bound * (1 + 1e-8)):
        raise ConstructionError("e^{-Phi(q) x} W(x) exceeds 1/psi'(Phi(q))")


def laplace_round_trip(table: ScaleTable, theta: float) -> tuple[float, float]:
    """Return ``(numeric + tail, 1/(psi(theta) - q))`` for ``theta > Phi(q)``.

    The numeric part is Simpson's rule for ``int_0^{x_max} e^{-theta x} W(x) dx``
    on the table grid; the tail beyond ``x_max`` comes from the exponential
    expansion of W, which is exact for the rational models handled here.
    """
    theta = float(theta)
    if not theta > table.phi_q:
        raise DomainError(f"theta must exceed Phi(q) = {table.phi_q}")
    body = float(simpson(np.exp(-theta * table.grid) * table.W, x=table.grid))
    sf = table.closed_form or ScaleFunctions(table.model, table.q)
    X = table.x_max
    tail = float(np.sum(sf.weights * np.exp((sf.roots - theta) * X) / (theta - sf.roots)))
    return body + tail, 1.0 / (float(_psi_raw(table.model, theta)) - table.q)


def _table_eval(table: ScaleTable, x, name: str, method: str):
    xa = np.asarray(x, dtype=float)
    if np.any(xa > table.x_max * (1 + 1e-12)):
        raise DomainError(f"x = {np.max(xa)} exceeds table x_max = {table.x_max}")
    pos = xa >= 0
    if table.closed_form is not None:
        vals = getattr(table.closed_form, method)(np.where(pos, xa, 0.0))
    else:
        vals = table.splines[name](np.where(pos, xa, 0.0))
    return _out(x, np.where(pos, vals, 0.0))


def eval_W(table: ScaleTable, x):
    """W^{(q)}(x); zero on the negative half-line."""
    return _table_eval(table, x, "W", "W")


def eval_W_prime(table: ScaleTable, x):
    return _table_eval(table, x, "Wp", "W_prime")


def eval_W_bar(table: ScaleTable, x):
    return _table_eval(table, x, "Wbar", "W_bar")


def eval_W_bar2(table: ScaleTable, x):
    return _table_eval(table, x, "Wbar2", "W_bar2")


def eval_Z(table: ScaleTable, x):
    xa = np.asarray(x, dtype=float)
    return _out(x, 1.0 + table.q * np.asarray(eval_W_bar(table, xa)))


def eval_Z_bar(table: ScaleTable, x):
    xa = np.asarray(x, dtype=float)
    return _out(x, np.where(xa >= 0, xa + table.q * np.asarray(eval_W_bar2(table, xa)), xa))


@dataclass(frozen=True)
class ThetaScale:
    """Pairs a table with the exponential tilt functions Z(., theta)."""

    table: ScaleTable

    @property
    def q(self) -> float:
        return self.table.q


def _z_theta_quadrature(table: ScaleTable, x: float, theta: float) -> float:
    # e^{theta x} (1 + (q - psi(theta)) int_0^x e^{-theta z} W(z) dz), Simpson on the table grid
    n = int(math.floor(x / table.h))
    if n % 2:
        n -= 1
    z = table.grid[: n + 1]
    f = np.exp(-theta * z) * table.W[: n + 1]
    integral = _simpson_cumulative(f, table.h)[-1] if n > 0 else 0.0
    if x > z[-1]:
        from scipy.integrate import quad

        integral += quad(lambda u: math.exp(-theta * u) * float(eval_W(table, u)), z[-1], x)[0]
    return math.exp(theta * x) * (1.0 + (table.q - float(_psi_raw(table.model, theta))) * integral)


def eval_Z_theta(ts: ThetaScale, x, theta: float):
    theta = _theta(theta)
    t = ts.table
    xa = np.asarray(x, dtype=float)
    if np.any(xa > t.x_max * (1 + 1e-12)):
        raise DomainError(f"x exceeds table x_max = {t.x_max}")
    if t.closed_form is not None:
        return t.closed_form.Z_theta(x, theta)
    vals = np.array([math.exp(theta * v) if v <= 0 else _z_theta_quadrature(t, v, theta) for v in np.atleast_1d(xa)])
    return _out(x, vals.reshape(xa.shape))


def eval_Z_theta_prime(ts: ThetaScale, x, theta: float):
    """theta Z(x, theta) + (q - psi(theta)) W(x): the algebraic relation, no differencing."""
    theta = _theta(theta)
    t = ts.table
    if t.closed_form is not None:
        return t.closed_form.Z_theta_prime(x, theta)
    z = np.asarray(eval_Z_theta(ts, x, theta))
    w = np.asarray(eval_W(t, x))
    return _out(x, theta * z + (t.q - float(_psi_raw(t.model, theta))) * w)


def eval_Z_tilde(ts: ThetaScale, r: float, x, theta: float):
    if not r > 0:
        raise DomainError("r must be > 0")
    t = ts.table
    if t.closed_form is not None:
        return t.closed_form.Z_tilde(x, theta, r)
    beta = phi(t.model, t.q + r)
    theta = _theta(theta)
    if abs(theta - beta) < 1e-7 * max(1.0, beta):
        raise RepeatedRootError("Z_tilde at theta = Phi(q+r) needs the closed-form path")
    num = r * np.asarray(eval_Z_theta(ts, x, theta)) + (t.q - float(_psi_raw(t.model, theta))) * np.asarray(
        eval_Z_theta(ts, x, beta))
    return _out(x, num / (beta - theta))
