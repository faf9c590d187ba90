"""Exponential-polynomial sums and the phi-functions used to convolve them.

An :class:`ExpTerms` object represents ``f(x) = sum_k c_k x^{j_k}/j_k! e^{mu_k x}``
on ``x >= 0``.  Every scale function of a model with rational psi has this
shape, and so does every shift ``f(. + s)`` and every convolution with an
exponential, which is what makes the operator M exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["phi_fn", "ExpTerms"]

_TAYLOR_TERMS = 24


def phi_fn(n: int, z):
    """phi_n(z) = sum_{k>=0} z^k / (k+n)!  (phi_0 = exp, phi_1 = (e^z - 1)/z, ...).

    Taylor series near the origin, upward recurrence phi_n = (phi_{n-1} - 1/(n-1)!)/z
    elsewhere.
    """
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < 1.0
    if np.any(small):
        zs = z[small]
        acc = np.zeros_like(zs)
        for k in range(_TAYLOR_TERMS - 1, -1, -1):
            acc = acc * zs + 1.0 / math.factorial(k + n)
        out[small] = acc
    big = ~small
    if np.any(big):
        zb = z[big]
        with np.errstate(over="ignore"):
            if n == 0:
                val = np.exp(zb)
            else:
                val = np.expm1(zb) / zb
                for m in range(2, n + 1):
                    val = (val - 1.0 / math.factorial(m - 1)) / zb
        out[big] = val
    return out


@dataclass(frozen=True)
class ExpTerms:
    """Coefficients ``c``, polynomial degrees ``j`` and rates ``mu`` of an exp-polynomial."""

    c: np.ndarray
    j: np.ndarray
    mu: np.ndarray

    @staticmethod
    def build(items) -> "ExpTerms":
        items = [(float(c), int(j), float(mu)) for c, j, mu in items if c != 0.0]
        if not items:
            return ExpTerms(np.zeros(0), np.zeros(0, dtype=int), np.zeros(0))
        c, j, mu = zip(*items)
        return ExpTerms(np.array(c), np.array(j, dtype=int), np.array(mu))

    def __add__(self, other: "ExpTerms") -> "ExpTerms":
        return ExpTerms(np.concatenate([self.c, other.c]), np.concatenate([self.j, other.j]),
                        np.concatenate([self.mu, other.mu]))

    def scale(self, k: float) -> "ExpTerms":
        return ExpTerms(self.c * k, self.j, self.mu)

    def __call__(self, x):
        """Evaluate for ``x >= 0`` (no branch handling)."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for c, j, mu in zip(self.c, self.j, self.mu):
            term = np.exp(mu * x)
            if j:
                term = term * x**j / math.factorial(j)
            out = out + c * term
        return out

    def derivative(self) -> "ExpTerms":
        items = []
        for c, j, mu in zip(self.c, self.j, self.mu):
            if j:
                items.append((c, j - 1, mu))
            if mu != 0.0:
                items.append((c * mu, j, mu))
        return ExpTerms.build(items)

    def shift(self, s: float) -> "ExpTerms":
        """Terms of ``y -> f(y + s)``."""
        items = []
        for c, j, mu in zip(self.c, self.j, self.mu):
            e = c * math.exp(mu * s)
            for i in range(j + 1):
                items.append((e * s ** (j - i) / math.factorial(j - i), i, mu))
        return ExpTerms.build(items)

    def conv_exp(self, beta: float, x):
        """``int_0^x e^{beta (x - y)} f(y) dy`` for ``x >= 0``.

        Uses  int_0^x e^{beta(x-y)} y^j/j! e^{mu y} dy = x^{j+1} e^{mu x} phi_{j+1}((beta - mu) x).
        """
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for c, j, mu in zip(self.c, self.j, self.mu):
            with np.errstate(over="ignore", invalid="ignore"):
                term = x ** (j + 1) * np.exp(mu * x) * phi_fn(j + 1, (beta - mu) * x)
            out = out + c * term
        return out
