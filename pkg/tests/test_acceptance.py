"""Acceptance criteria 1-9. Each test prints one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly as a script.
"""

import json
import os
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from parisian_levy import REGISTRY, KernelSet, ScaleFunctions, SimConfig, value_of
from parisian_levy.identities import LIMIT_PAIRS, evaluate_limit_consistency
from parisian_levy.kernels import M_alternative
from parisian_levy.scale_functions import build_scale_table, invert_W, laplace_round_trip, phi
from parisian_levy.verify import CANONICAL, run_suite

sys.path.insert(0, os.path.dirname(__file__))
from conftest import BM, CL  # noqa: E402

MODELS = {"BM": BM, "CL": CL}
ROOT = Path(__file__).resolve().parents[1]


RESULTS: dict[int, str] = {}  # printed by the terminal-summary hook in conftest


def report(n, ok, detail):
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} ({detail})"
    RESULTS[n] = line
    print(line)
    assert ok, line


def test_c1_closed_form_vs_inversion():
    t0 = time.perf_counter()
    x = np.linspace(0.2, 10.0, 50)
    worst = 0.0
    for m in MODELS.values():
        for q in (0.0, 0.05, 0.5):
            exact = ScaleFunctions(m, q).W(x)
            worst = max(worst, float(np.max(np.abs(invert_W(m, q, x, dps=20) / exact - 1))))
            w0 = invert_W(m, q, 0.0)
            worst = max(worst, abs(w0 - float(ScaleFunctions(m, q).W(0.0))))
    dt = time.perf_counter() - t0
    report(1, worst <= 1e-6 and dt < 5.0, f"max rel err {worst:.2e} on 51 points of [0,10], {dt:.1f}s")


def test_c2_laplace_round_trip():
    worst = 0.0
    for m in MODELS.values():
        for q in (0.0, 0.05, 0.5):
            table = build_scale_table(m, q, x_max=10.0, h=0.005)
            for d in (0.5, 1.0, 2.0):
                num, exact = laplace_round_trip(table, phi(m, q) + d)
                worst = max(worst, abs(num / exact - 1))
    report(2, worst <= 1e-5, f"max rel err {worst:.2e}")


def test_c3_exact_degenerations():
    errs = []
    for m in MODELS.values():
        ks = KernelSet(m, 0.05, 1.0, -2.0)
        errs.append(abs(ks.I(0.0) - 1))
        errs.append(abs(ks.H(0.0)))
        for th in (0.0, 0.5, 2.0):
            errs.append(abs(ks.J(0.0, th) - float(ks.sf.Z_theta(2.0, th))))
            errs.append(abs(ks.J_hat(0.0, th)))
        k0 = KernelSet(m, 0.0, 1.0, -2.0)
        errs.extend(np.abs(k0.J(np.linspace(-1, 8, 10)) - 1))
        for x in np.linspace(-1.5, 2.0, 5):
            for b in np.linspace(2.0, 4.0, 5):
                p = dict(q=0.0, r=1.0, a=-2.0, b=b, x=x)
                errs.append(abs(value_of("xr.up", m, **p) + value_of("xr.down", m, **p) - 1))
                errs.append(abs(value_of("yr.up", m, **p) - 1))
    worst = float(max(errs))
    report(3, worst <= 1e-10, f"max deviation {worst:.2e} over {len(errs)} identities")


def test_c4_theta_derivative():
    rng = np.random.default_rng(2026)
    worst, eps = 0.0, 1e-4
    for m in MODELS.values():
        ks = KernelSet(m, 0.05, 1.0, -2.0)
        for x in rng.uniform(0.0, 8.0, 10):
            fd = (ks.J(x, eps) - ks.J(x, -eps, check=False)) / (2 * eps)
            worst = max(worst, abs(ks.K(x) / fd - 1))
    report(4, worst <= 1e-4, f"max rel err {worst:.2e}")


def test_c5_limit_modes():
    bad, n = [], 0
    for name, m in MODELS.items():
        for (i, mode) in LIMIT_PAIRS:
            if REGISTRY[i].needs_sigma and m.sigma == 0:
                continue
            p = dict(model=m, q=CANONICAL["q"], r=CANONICAL["r"], a=CANONICAL["a"], b=CANONICAL["b"],
                     x=CANONICAL["x"], theta=CANONICAL["theta"] if REGISTRY[i].uses_theta else 0.0)
            rep = evaluate_limit_consistency(i, mode, p)
            n += 1
            if not rep.passed:
                bad.append(f"{name} {i}[{mode}] dev={rep.deviations[-1]:.2e}")
    report(5, not bad, f"{n - len(bad)}/{n} pairs" + ("; failing: " + ", ".join(bad) if bad else ""))


# Parisian id -> classical counterpart
R0_PAIRS = [
    ("xr.up", "classic.up"),
    ("xr.down", "classic.down"),
    ("xr.creep", "classic.creep.two_sided"),
    ("xtilde.down", "refl_above.down_time"),
    ("xtilde.overshoot", "refl_above.overshoot"),
    ("ytilde.div_singular", "refl_double.dividends"),
    ("ytilde.injection", "refl_double.injection"),
]


def test_c6_r_to_zero():
    bad, worst = [], 0.0
    for name, m in MODELS.items():
        for par, cls in R0_PAIRS:
            if REGISTRY[par].needs_sigma and m.sigma == 0:
                continue
            th = CANONICAL["theta"] if REGISTRY[par].uses_theta else 0.0
            p = dict(q=CANONICAL["q"], a=CANONICAL["a"], b=CANONICAL["b"], x=CANONICAL["x"], theta=th)
            target = value_of(cls, m, **p)
            rel = abs(value_of(par, m, r=1e-3, **p) / target - 1)
            worst = max(worst, rel)
            if rel > 1e-2:
                bad.append(f"{name} {par} {rel:.2e}")
    report(6, not bad, f"max rel err {worst:.2e}" + ("; failing: " + ", ".join(bad) if bad else ""))


def test_c7_monte_carlo_suite():
    t0 = time.perf_counter()
    cfg = SimConfig(n_paths=100_000, dt=1e-3, seed=20261018, bridge=True)
    rep = run_suite(list(MODELS.values()), cfg)
    mc = [c for c in rep.checks if c.kind == "mc" and c.verdict != "n/a"]
    bad = [f"{c.model} {c.identity_id} z={c.z:.2f}" for c in mc if abs(c.z) > 4]
    dt = time.perf_counter() - t0
    zmax = max(abs(c.z) for c in mc)
    ok = not bad and len(mc) >= 20 and dt <= 600
    report(7, ok, f"{len(mc)} checks, max |z| {zmax:.2f}, {dt:.0f}s" + ("; failing: " + ", ".join(bad) if bad else ""))


def test_c8_dual_representation():
    rng = np.random.default_rng(7)
    worst = 0.0
    for m in MODELS.values():
        ks = KernelSet(m, 0.05, 1.0, -2.0)
        for x in rng.uniform(0.0, 8.0, 20):
            worst = max(worst, abs(ks.W_a(x) / M_alternative(ks, "W", x) - 1),
                        abs(ks.Zbar_a(x) / M_alternative(ks, "Zbar", x) - 1))
    report(8, worst <= 1e-8, f"max rel err {worst:.2e}")


def _verify_json(workers, out):
    env = dict(os.environ, NUMBA_NUM_THREADS="4")
    cmd = [sys.executable, "-m", "parisian_levy.cli", "verify", "--model", str(ROOT / "models/bm.model"),
           "--model", str(ROOT / "models/cl.model"), "--suite", "smoke", "--seed", "99",
           "--workers", str(workers), "--json", str(out)]
    subprocess.run(cmd, env=env, capture_output=True, check=False)
    return Path(out).read_bytes()


def test_c9_determinism():
    with tempfile.TemporaryDirectory() as d:
        runs = [_verify_json(w, Path(d) / f"{k}.json") for k, w in enumerate((1, 1, 2, 4))]
    same = all(r == runs[0] for r in runs)
    n = len(json.loads(runs[0])["checks"])
    report(9, same, f"smoke suite, {n} checks, identical bytes across 2 runs and workers 1/2/4")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
