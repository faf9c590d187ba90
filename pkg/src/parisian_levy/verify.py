"""Mechanical comparison of every registry identity with an independent check.

Identities with a simulable functional are compared against Monte Carlo; every
limit mode is compared against its finite partner along a barrier sequence.
A registry id with neither fails the suite before anything runs.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, UnsupportedOperationError
from .identities import LIMIT_PAIRS, REGISTRY, IdentityRequest, evaluate, evaluate_limit_consistency
from .levy_model import LevyModel
from .scale_functions import ScaleFunctions
from .simulator import CLOCK, DOWN, SimConfig, _mean_se, _pairs, simulate_lemma, simulate_many

__all__ = ["CheckReport", "SuiteReport", "MC_CHECKS", "CANONICAL", "run_check", "run_limit_check",
           "run_suite", "check_coverage", "VERIFY_CONFIG"]

VERIFY_CONFIG = SimConfig(bridge=True)

CANONICAL = {"q": 0.05, "r": 1.0, "a": -2.0, "b": 3.0, "x": 0.5, "theta": 0.5}

# id -> ("process", process, uses r, functional) or ("lemma", reflected, payoff)
MC_CHECKS: dict[str, tuple] = {
    "classic.up": ("process", "X", False, "up_exit"),
    "classic.down": ("process", "X", False, "down_exit"),
    "classic.creep.two_sided": ("process", "X", False, "creep"),
    "classic.overshoot": ("process", "X", False, "overshoot"),
    "refl_above.down_time": ("process", "XtildeB", False, "down_exit"),
    "refl_above.dividends": ("process", "XtildeB", False, "discounted_LS"),
    "refl_above.overshoot": ("process", "XtildeB", False, "overshoot"),
    "refl_below.up_time": ("process", "YrA", False, "up_exit"),
    "refl_below.injection": ("process", "YrA", False, "discounted_R"),
    "refl_double.dividends": ("process", "YtildeAB", False, "discounted_LS"),
    "refl_double.injection": ("process", "YtildeAB", False, "discounted_R"),
    "lemma.W_overshoot": ("lemma", False, "W"),
    "lemma.W_overshoot_reflected": ("lemma", True, "W"),
    "lemma.Z_overshoot": ("lemma", False, "Z"),
    "lemma.Z_overshoot_reflected": ("lemma", True, "Z"),
    "lemma.HX": ("lemma", False, "HX"),
    "lemma.X_at_er": ("lemma", False, "X"),
    "xr.dividends": ("process", "Xr", True, "discounted_Lr"),
    "xr.up": ("process", "Xr", True, "up_exit"),
    "xr.down": ("process", "Xr", True, "down_exit"),
    "xr.creep": ("process", "Xr", True, "creep"),
    "xr.overshoot": ("process", "Xr", True, "overshoot"),
    "xtilde.div_periodic": ("process", "XtildeB", True, "discounted_Lr"),
    "xtilde.div_singular": ("process", "XtildeB", True, "discounted_LS"),
    "xtilde.down": ("process", "XtildeB", True, "down_exit"),
    "xtilde.overshoot": ("process", "XtildeB", True, "overshoot"),
    "yr.dividends": ("process", "YrA", True, "discounted_Lr"),
    "yr.injection": ("process", "YrA", True, "discounted_R"),
    "yr.up": ("process", "YrA", True, "up_exit"),
    "ytilde.div_periodic": ("process", "YtildeAB", True, "discounted_Lr"),
    "ytilde.div_singular": ("process", "YtildeAB", True, "discounted_LS"),
    "ytilde.injection": ("process", "YtildeAB", True, "discounted_R"),
}


@dataclass(frozen=True)
class CheckReport:
    identity_id: str
    kind: str  # "mc" or "limit"
    model: str
    params: dict
    analytic: float
    estimate: float
    stderr: float
    z: float
    rule: str
    verdict: str  # pass | fail | fail-bias | n/a
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict in ("pass", "n/a")


@dataclass
class SuiteReport:
    checks: list[CheckReport] = field(default_factory=list)

    @property
    def n_pass(self) -> int:
        return sum(c.verdict == "pass" for c in self.checks)

    @property
    def n_fail(self) -> int:
        return sum(c.verdict == "fail" for c in self.checks)

    @property
    def n_bias(self) -> int:
        return sum(c.verdict == "fail-bias" for c in self.checks)

    @property
    def n_mc(self) -> int:
        return sum(c.kind == "mc" and c.verdict != "n/a" for c in self.checks)

    @property
    def ok(self) -> bool:
        return self.n_fail == 0

    def summary(self) -> dict:
        return {"checks": len(self.checks), "mc_checks": self.n_mc, "pass": self.n_pass, "fail": self.n_fail,
                "fail_bias_flagged": self.n_bias, "n/a": sum(c.verdict == "n/a" for c in self.checks),
                "ok": self.ok}

    def to_json(self) -> str:
        rows = [_jsonable(asdict(c)) for c in self.checks]
        return json.dumps({"summary": self.summary(), "checks": rows}, indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["identity_id", "kind", "model", "params", "analytic", "estimate", "stderr", "z", "rule",
                "verdict", "note"]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for c in self.checks:
            d = asdict(c)
            d["params"] = ";".join(f"{k}={_fmt(v)}" for k, v in sorted(c.params.items()))
            w.writerow([_fmt(d[k]) if isinstance(d[k], float) else d[k] for k in cols])
        return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, float):
        return "inf" if v == math.inf else "-inf" if v == -math.inf else "nan" if v != v else repr(v)
    return str(v)


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return _fmt(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def check_coverage() -> None:
    """Every registry id needs a Monte Carlo check or a limit-consistency check."""
    limit_ids = {k[0] for k in LIMIT_PAIRS}
    missing = [i for i in REGISTRY if i not in MC_CHECKS and i not in limit_ids]
    if missing:
        raise ConfigurationError(f"registry ids without any check: {missing}")
    unknown = [i for i in MC_CHECKS if i not in REGISTRY]
    if unknown:
        raise ConfigurationError(f"checks for unknown ids: {unknown}")


def _model_name(model: LevyModel) -> str:
    return model.describe()


def _lemma_payoff(identity_id: str, batch, model: LevyModel, p: dict, antithetic: bool) -> np.ndarray:
    payoff = MC_CHECKS[identity_id][2]
    q, a, theta = p["q"], p["a"], p["theta"]
    sf = ScaleFunctions(model, q)
    w = np.exp(-q * batch.t_end)
    down = batch.code == DOWN
    clock = batch.code == CLOCK
    y = batch.level - a
    if payoff == "W":
        v = np.where(down, w * sf.W(y), 0.0)
    elif payoff == "Z":
        v = np.where(down, w * sf.Z_theta(y, theta), 0.0)
    elif payoff == "HX":
        v = np.where(clock, w, 0.0) + np.where(down, w * sf.W(y) / sf.W(-a), 0.0)
    else:
        v = np.where(clock, w * batch.level, 0.0)
    return _pairs(np.asarray(v, dtype=float), antithetic)


def _verdict(analytic, est, se, z_max, abs_floor, config: SimConfig) -> tuple[float, str, str]:
    diff = est - analytic
    if se > 0:
        z = diff / se
    else:
        # zero-variance estimate (e.g. overshoot of a jump-free model): exact up to rounding or not at all
        z = 0.0 if abs(diff) <= 1e-12 * max(1.0, abs(analytic)) else math.copysign(math.inf, diff)
    rule = f"|z|<={z_max:g} or |diff|<={abs_floor:g}"
    if abs(z) <= z_max or abs(diff) <= abs_floor:
        return z, rule, "pass"
    coarse = config.dt > 1e-3 or not config.bridge
    return z, rule, "fail-bias" if coarse else "fail"


def _params_for(identity_id: str, params: dict) -> dict:
    spec = REGISTRY[identity_id]
    p = dict(CANONICAL, **params)
    if not spec.uses_theta:
        p["theta"] = 0.0
    return p


def _request(identity_id: str, model: LevyModel, p: dict) -> IdentityRequest:
    r = p["r"] if REGISTRY[identity_id].parisian else None
    return IdentityRequest(identity_id, model, q=p["q"], a=p["a"], b=p["b"], x=p["x"], r=r, theta=p["theta"])


class _BatchCache:
    """Shares simulated paths between checks that use the same process."""

    def __init__(self, model: LevyModel, config: SimConfig):
        self.model, self.config = model, config
        self.proc: dict = {}
        self.lemma: dict = {}

    def process(self, identity_id: str, p: dict, theta: float, wanted: list[str]):
        # theta only enters the down_exit payoff, so it is part of the key but not of the seed
        _, proc, uses_r, functional = MC_CHECKS[identity_id]
        r = p["r"] if uses_r else 0.0
        key = (proc, r, p["q"], p["a"], p["b"], p["x"], theta)
        if key not in self.proc:
            res = simulate_many(self.model, proc, {"r": r, "a": p["a"], "b": p["b"]}, wanted, p["q"], theta,
                                self.config, x=p["x"])
            self.proc[key] = dict(zip(wanted, res))
        return self.proc[key][functional]

    def lemma_batch(self, reflected: bool, p: dict):
        key = (reflected, p["q"], p["r"], p["b"], p["x"])
        if key not in self.lemma:
            self.lemma[key] = simulate_lemma(self.model, p["q"], p["r"], p["b"], p["x"], reflected, self.config)
        return self.lemma[key]


def _siblings(identity_id: str, model: LevyModel) -> list[str]:
    kind, proc, uses_r, _ = MC_CHECKS[identity_id]
    out = []
    for other, entry in MC_CHECKS.items():
        if entry[0] != "process":
            continue
        _, pr, ur, f = entry
        if pr == proc and ur == uses_r:
            if REGISTRY[other].needs_sigma and model.sigma == 0:
                continue
            if f not in out:
                out.append(f)
    return out


def _run_check(identity_id, model, params, config, z_max, abs_floor, cache: _BatchCache) -> CheckReport:
    if identity_id not in REGISTRY:
        raise KeyError(f"unknown identity id {identity_id!r}")
    p = _params_for(identity_id, params)
    spec = REGISTRY[identity_id]
    if identity_id not in MC_CHECKS:
        raise ConfigurationError(f"{identity_id} has no simulable functional; use run_limit_check")
    if spec.needs_sigma and model.sigma == 0:
        return CheckReport(identity_id, "mc", _model_name(model), p, math.nan, math.nan, math.nan, math.nan,
                           "", "n/a", "creeping needs sigma > 0")
    analytic = evaluate(_request(identity_id, model, p)).value
    if not math.isfinite(analytic):
        return CheckReport(identity_id, "mc", _model_name(model), p, analytic, math.nan, math.nan, math.nan,
                           "", "n/a", "analytic value is infinite")
    entry = MC_CHECKS[identity_id]
    if entry[0] == "process":
        theta = dict(CANONICAL, **params)["theta"]
        res = cache.process(identity_id, p, theta, _siblings(identity_id, model))
        est, se, note = res.estimate, res.stderr, res.bias_note
    else:
        batch = cache.lemma_batch(entry[1], p)
        est, se = _mean_se(_lemma_payoff(identity_id, batch, model, p, config.antithetic))
        note = "mode=clocked; " + ("exact event-driven paths" if model.sigma == 0 else f"grid dt={config.dt:g}")
    z, rule, verdict = _verdict(analytic, est, se, z_max, abs_floor, config)
    return CheckReport(identity_id, "mc", _model_name(model), p, analytic, est, se, z, rule, verdict, note)


def run_check(identity_id: str, model: LevyModel, params: dict | None = None, sim_config: SimConfig = VERIFY_CONFIG,
              z_max: float = 4.0, abs_floor: float = 2e-3) -> CheckReport:
    """Compare one identity at ``params`` (defaults: the canonical set) with Monte Carlo.

    Ids without a simulable functional are routed to :func:`run_limit_check`.
    """
    if identity_id in REGISTRY and identity_id not in MC_CHECKS:
        mode = next(m for (i, m) in LIMIT_PAIRS if i == identity_id)
        return run_limit_check(identity_id, mode, model, params)
    return _run_check(identity_id, model, params or {}, sim_config, z_max, abs_floor, _BatchCache(model, sim_config))


def run_limit_check(identity_id: str, mode: str, model: LevyModel, params: dict | None = None) -> CheckReport:
    p = _params_for(identity_id, params or {})
    name = f"{identity_id}[{mode}]"
    try:
        rep = evaluate_limit_consistency(identity_id, mode, {"model": model, "q": p["q"], "r": p["r"],
                                                             "a": p["a"], "b": p["b"], "x": p["x"],
                                                             "theta": p["theta"]})
    except UnsupportedOperationError as exc:
        return CheckReport(name, "limit", _model_name(model), p, math.nan, math.nan, math.nan, math.nan, "", "n/a",
                           str(exc))
    rule = (f"final deviation <= {rep.tolerance:.3g} and deviation ratio <= 0.2 per doubling "
            f"({rep.param} in {list(rep.sequence)})")
    ratios = ",".join("-" if r is None else f"{r:.3g}" for r in rep.ratios[1:])
    note = f"deviations={','.join(f'{d:.3g}' for d in rep.deviations)}; ratios={ratios}"
    return CheckReport(name, "limit", _model_name(model), p, rep.limit_value, rep.finite_values[-1], math.nan,
                       math.nan, rule, "pass" if rep.passed else "fail", note)


def _wide_grid() -> list[dict]:
    return [{"r": r, "b": b} for r in (0.5, 1.0, 2.0) for b in (2.0, 3.0, 4.0)]


def run_suite(models, sim_config: SimConfig = VERIFY_CONFIG, suite: str = "full", wide: bool = False,
              z_max: float = 4.0, abs_floor: float = 2e-3, progress=None) -> SuiteReport:
    """All Monte Carlo checks and all limit checks for each model, in registry order.

    ``suite="smoke"`` caps the number of paths at 4000 and skips the lemma checks.
    """
    check_coverage()
    if suite not in ("full", "smoke"):
        raise ConfigurationError(f"suite must be 'full' or 'smoke', got {suite!r}")
    if suite == "smoke":
        sim_config = replace(sim_config, n_paths=min(sim_config.n_paths, 4000))
    grid = _wide_grid() if wide else [{}]
    report = SuiteReport()
    for model in models:
        for overrides in grid:
            cache = _BatchCache(model, sim_config)
            for identity_id in REGISTRY:
                if identity_id not in MC_CHECKS:
                    continue
                if suite == "smoke" and identity_id.startswith("lemma."):
                    continue
                rep = _run_check(identity_id, model, overrides, sim_config, z_max, abs_floor, cache)
                report.checks.append(rep)
                if progress:
                    progress(rep)
            for identity_id, mode in LIMIT_PAIRS:
                rep = run_limit_check(identity_id, mode, model, overrides)
                report.checks.append(rep)
                if progress:
                    progress(rep)
    return report
