"""Spectrally negative Levy models with hyperexponential downward jumps.

A model is ``X(t) = c t + sigma B(t) - S(t)`` where ``S`` is compound Poisson
with rate ``lam`` and jump sizes drawn from a finite mixture of exponential
laws.  The Laplace exponent is

    psi(theta) = c theta + sigma^2 theta^2 / 2 + lam * sum_i p_i (alpha_i/(alpha_i+theta) - 1).

The stored coefficient ``gamma`` follows the Levy-Khintchine convention with
the truncation ``1{x > -1}``; ``c = gamma + lam * sum_i p_i E[xi_i; xi_i < 1]``
is the compensated drift actually seen by the paths.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, ModelFileError, ParisianLevyError

__all__ = [
    "ModelKind",
    "VariationClass",
    "Phase",
    "LevyModel",
    "psi",
    "psi_prime",
    "phi",
    "classify_variation",
    "psi_dd",
    "psi_dd2",
    "load_model",
    "parse_model",
    "dump_model",
]


class ModelKind(str, enum.Enum):
    BROWNIAN_MOTION = "BrownianMotion"
    CRAMER_LUNDBERG = "CramerLundberg"
    JUMP_DIFFUSION = "JumpDiffusion"


class VariationClass(str, enum.Enum):
    BOUNDED = "BoundedVariation"
    UNBOUNDED = "UnboundedVariation"


@dataclass(frozen=True)
class Phase:
    """One exponential component of the jump-size law: weight ``p`` on Exp(``alpha``)."""

    alpha: float
    weight: float


def _truncated_mean(alpha: float) -> float:
    # E[xi; xi < 1] for xi ~ Exp(alpha)
    return -math.expm1(-alpha) / alpha - math.exp(-alpha)


@dataclass(frozen=True)
class LevyModel:
    """Immutable description of a spectrally negative Levy process.

    Use the constructors :meth:`brownian_motion`, :meth:`cramer_lundberg` and
    :meth:`jump_diffusion` rather than the raw dataclass when the compensated
    drift ``c`` is the natural parameter.
    """

    kind: ModelKind
    gamma: float
    sigma: float = 0.0
    lam: float = 0.0
    phases: tuple[Phase, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        kind = ModelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "lam", float(self.lam))
        phases = tuple(p if isinstance(p, Phase) else Phase(*p) for p in self.phases)
        if not all(math.isfinite(v) for v in (self.gamma, self.sigma, self.lam)):
            raise DomainError("model coefficients must be finite")
        if self.sigma < 0:
            raise DomainError("sigma must be >= 0")
        if kind is ModelKind.BROWNIAN_MOTION:
            if self.sigma <= 0:
                raise DomainError("BrownianMotion needs sigma > 0")
            if self.lam != 0 or phases:
                raise DomainError("BrownianMotion carries no jumps")
        else:
            if self.lam <= 0 or not phases:
                raise DomainError(f"{kind.value} needs lambda > 0 and at least one phase")
            if any(p.alpha <= 0 or not math.isfinite(p.alpha) for p in phases):
                raise DomainError("phase alpha must be > 0")
            if any(p.weight < 0 for p in phases):
                raise DomainError("phase weights must be >= 0")
            total = sum(p.weight for p in phases)
            if abs(total - 1.0) > 1e-9:
                raise DomainError(f"phase weights must sum to 1 (got {total!r})")
            # merge equal rates and drop empty phases; keeps the poles of psi simple
            merged: dict[float, float] = {}
            for p in phases:
                if p.weight > 0:
                    merged[p.alpha] = merged.get(p.alpha, 0.0) + p.weight
            phases = tuple(Phase(a, w) for a, w in sorted(merged.items()))
            if kind is ModelKind.CRAMER_LUNDBERG:
                if self.sigma != 0:
                    raise DomainError("CramerLundberg has sigma = 0")
            elif self.sigma <= 0:
                raise DomainError("JumpDiffusion needs sigma > 0")
        object.__setattr__(self, "phases", phases)
        if kind is ModelKind.CRAMER_LUNDBERG and self.drift <= 0:
            raise DomainError("CramerLundberg needs compensated drift c > 0")

    # -- constructors -----------------------------------------------------
    @classmethod
    def brownian_motion(cls, mu: float, sigma: float) -> "LevyModel":
        return cls(ModelKind.BROWNIAN_MOTION, gamma=mu, sigma=sigma)

    @staticmethod
    def _gamma_from_drift(drift: float, lam: float, phases) -> float:
        phases = [p if isinstance(p, Phase) else Phase(*p) for p in phases]
        return drift - lam * sum(p.weight * _truncated_mean(p.alpha) for p in phases)

    @classmethod
    def cramer_lundberg(cls, c: float, lam: float, phases) -> "LevyModel":
        """Premium rate ``c``, claim rate ``lam``, claims ~ mixture of ``(alpha, weight)``."""
        phases = tuple(phases)
        return cls(ModelKind.CRAMER_LUNDBERG, cls._gamma_from_drift(c, lam, phases), 0.0, lam, phases)

    @classmethod
    def jump_diffusion(cls, c: float, sigma: float, lam: float, phases) -> "LevyModel":
        phases = tuple(phases)
        return cls(ModelKind.JUMP_DIFFUSION, cls._gamma_from_drift(c, lam, phases), sigma, lam, phases)

    # -- derived quantities ----------------------------------------------
    @property
    def alphas(self) -> np.ndarray:
        return np.array([p.alpha for p in self.phases], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.array([p.weight for p in self.phases], dtype=float)

    @property
    def drift(self) -> float:
        """Compensated drift ``c`` (coefficient of theta in psi)."""
        return self.gamma + self.lam * sum(p.weight * _truncated_mean(p.alpha) for p in self.phases)

    @property
    def has_jumps(self) -> bool:
        return self.lam > 0

    @property
    def mean(self) -> float:
        """psi'(0+), the mean of X(1)."""
        return self.drift - self.lam * float(np.sum(self.weights / self.alphas)) if self.has_jumps else self.drift

    def describe(self) -> str:
        if self.kind is ModelKind.BROWNIAN_MOTION:
            return f"BM(mu={self.gamma:g}, sigma={self.sigma:g})"
        ph = ", ".join(f"Exp({p.alpha:g})x{p.weight:g}" for p in self.phases)
        if self.kind is ModelKind.CRAMER_LUNDBERG:
            return f"CL(c={self.drift:g}, lambda={self.lam:g}, [{ph}])"
        return f"JD(c={self.drift:g}, sigma={self.sigma:g}, lambda={self.lam:g}, [{ph}])"


# ---------------------------------------------------------------------------
# Laplace exponent and its divided differences.  The helpers with a leading
# underscore accept any real (or complex) argument away from the poles -alpha_i;
# the public functions enforce theta >= 0.


def _psi_raw(model: LevyModel, theta):
    th = np.asarray(theta)
    out = model.drift * th + 0.5 * model.sigma**2 * th * th
    for p in model.phases:
        out = out - model.lam * p.weight * th / (p.alpha + th)
    return out


def _psi_prime_raw(model: LevyModel, theta):
    th = np.asarray(theta)
    out = model.drift + model.sigma**2 * th
    for p in model.phases:
        out = out - model.lam * p.weight * p.alpha / (p.alpha + th) ** 2
    return out


def psi_dd(model: LevyModel, u, v):
    """First divided difference ``(psi(u) - psi(v)) / (u - v)``; equals psi'(u) when u == v."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    out = model.drift + 0.5 * model.sigma**2 * (u + v)
    for p in model.phases:
        out = out - model.lam * p.weight * p.alpha / ((p.alpha + u) * (p.alpha + v))
    return out


def psi_dd2(model: LevyModel, u, v, w):
    """Second divided difference ``psi[u, v, w]``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    out = 0.5 * model.sigma**2 + 0.0 * (u + v + w)
    for p in model.phases:
        out = out + model.lam * p.weight * p.alpha / ((p.alpha + u) * (p.alpha + v) * (p.alpha + w))
    return out


def _check_theta(theta) -> np.ndarray:
    th = np.asarray(theta, dtype=float)
    if np.any(np.isnan(th)) or np.any(th < 0):
        raise DomainError(f"theta must be >= 0, got {theta!r}")
    return th


def _scalarize(x, out):
    return float(out) if np.ndim(x) == 0 else out


def psi(model: LevyModel, theta):
    """Laplace exponent psi(theta) for theta >= 0 (scalar or array)."""
    th = _check_theta(theta)
    return _scalarize(theta, _psi_raw(model, th))


def psi_prime(model: LevyModel, theta):
    """psi'(theta); at theta = 0 this is the right derivative psi'(0+)."""
    th = _check_theta(theta)
    return _scalarize(theta, _psi_prime_raw(model, th))


def _newton_polish(model: LevyModel, root: float, q: float, steps: int = 3) -> float:
    for _ in range(steps):
        d = float(_psi_prime_raw(model, root))
        if d <= 0:
            break
        nxt = root - (float(_psi_raw(model, root)) - q) / d
        if not math.isfinite(nxt) or abs(nxt - root) > 1e-6 * max(1.0, abs(root)):
            break
        root = nxt
    return root


def _phi0(model: LevyModel) -> float:
    if model.mean >= 0:
        # psi convex with psi(0) = 0 and psi'(0+) >= 0, so psi > 0 on (0, inf)
        probe = np.geomspace(1e-8, 1e3, 60)
        if np.any(_psi_raw(model, probe) <= 0):
            raise ParisianLevyError("psi is not positive on (0, inf) although psi'(0+) >= 0")
        return 0.0
    hi = 1.0
    while float(_psi_raw(model, hi)) <= 0:
        hi *= 2.0
        if hi > 1e12:
            raise ParisianLevyError("could not bracket Phi(0)")
    lo = hi / 2.0
    while lo > 1e-300 and float(_psi_raw(model, lo)) > 0:
        lo /= 2.0
    root = brentq(lambda t: float(_psi_raw(model, t)), lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return root


def phi(model: LevyModel, q: float) -> float:
    """Right inverse Phi(q) = sup{theta >= 0 : psi(theta) = q}."""
    q = float(q)
    if not q >= 0:
        raise DomainError(f"q must be >= 0, got {q!r}")
    p0 = _phi0(model)
    if q == 0:
        return p0
    hi = max(1.0, p0 + 1.0)
    while float(_psi_raw(model, hi)) <= q:
        hi *= 2.0
        if hi > 1e12:
            raise ParisianLevyError("root bracket failure in phi")
    root = brentq(lambda t: float(_psi_raw(model, t)) - q, p0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return _newton_polish(model, root, q)


def classify_variation(model: LevyModel) -> VariationClass:
    # exponential phases always integrate |x| near 0, so only sigma matters
    return VariationClass.BOUNDED if model.sigma == 0 else VariationClass.UNBOUNDED


# ---------------------------------------------------------------------------
# Model files
#
#   kind   = CramerLundberg
#   gamma  = 1.2642411176571153      (or: drift = 1.5)
#   sigma  = 0
#   lambda = 1
#   phase  = {alpha = 1, weight = 1}

_LINE = re.compile(r"^\s*([A-Za-z_]+)\s*=\s*(.+?)\s*$")
_PHASE = re.compile(r"^\{\s*alpha\s*=\s*([^,}]+?)\s*,\s*weight\s*=\s*([^,}]+?)\s*\}$")
_KINDS = {k.value.lower(): k for k in ModelKind}
_KINDS.update({"bm": ModelKind.BROWNIAN_MOTION, "cl": ModelKind.CRAMER_LUNDBERG, "jd": ModelKind.JUMP_DIFFUSION})


def _num(text: str, lineno: int, key: str) -> float:
    try:
        val = float(text)
    except ValueError:
        raise ModelFileError(f"line {lineno}: key '{key}': cannot parse number {text!r}") from None
    if not math.isfinite(val):
        raise ModelFileError(f"line {lineno}: key '{key}': value must be finite")
    return val


def parse_model(text: str) -> LevyModel:
    """Parse the key/value model format (``#`` starts a comment)."""
    fields: dict[str, tuple[float | str, int]] = {}
    phases: list[Phase] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise ModelFileError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = m.group(1).lower(), m.group(2)
        if key == "phase":
            pm = _PHASE.match(val)
            if not pm:
                raise ModelFileError(f"line {lineno}: key 'phase': expected '{{alpha = A, weight = P}}'")
            phases.append(Phase(_num(pm.group(1), lineno, "phase.alpha"), _num(pm.group(2), lineno, "phase.weight")))
            continue
        if key not in {"kind", "gamma", "drift", "sigma", "lambda"}:
            raise ModelFileError(f"line {lineno}: unknown key '{key}'")
        if key in fields:
            raise ModelFileError(f"line {lineno}: duplicate key '{key}'")
        if key == "kind":
            kind = _KINDS.get(val.lower())
            if kind is None:
                raise ModelFileError(f"line {lineno}: key 'kind': unknown kind {val!r}")
            fields[key] = (kind, lineno)
        else:
            fields[key] = (_num(val, lineno, key), lineno)
    if "kind" not in fields:
        raise ModelFileError("missing key 'kind'")
    if ("gamma" in fields) == ("drift" in fields):
        raise ModelFileError("exactly one of 'gamma' or 'drift' must be given")
    kind = fields["kind"][0]
    sigma = fields.get("sigma", (0.0, 0))[0]
    lam = fields.get("lambda", (0.0, 0))[0]
    try:
        if "gamma" in fields:
            return LevyModel(kind, fields["gamma"][0], sigma, lam, tuple(phases))
        gamma = LevyModel._gamma_from_drift(fields["drift"][0], lam, phases)
        return LevyModel(kind, gamma, sigma, lam, tuple(phases))
    except DomainError as exc:
        raise ModelFileError(f"invalid model: {exc}") from None


def load_model(path: str | Path) -> LevyModel:
    return parse_model(Path(path).read_text())


def dump_model(model: LevyModel) -> str:
    lines = [f"kind = {model.kind.value}", f"gamma = {model.gamma!r}", f"sigma = {model.sigma!r}"]
    if model.has_jumps:
        lines.append(f"lambda = {model.lam!r}")
        lines += [f"phase = {{alpha = {p.alpha!r}, weight = {p.weight!r}}}" for p in model.phases]
    return "\n".join(lines) + "\n"
