"""Command line entry point: ``parisian-levy {scale,identity,simulate,verify,sweep}``.

Exit codes: 0 success, 1 validation error, 2 failed verification suite.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

from .errors import ParisianLevyError
from .identities import REGISTRY, IdentityRequest, barrier_sweep, evaluate
from .levy_model import load_model
from .scale_functions import build_scale_table, eval_W, eval_W_bar, eval_W_bar2, eval_W_prime, eval_Z, eval_Z_bar
from .simulator import Functional, Process, SimConfig, simulate_batch

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _num(v) -> float | str:
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else "-inf" if v < 0 else "nan"
    return v


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _known_id(identity_id: str) -> str:
    if identity_id not in REGISTRY:
        raise _UsageError(f"unknown identity id {identity_id!r}; valid ids:\n  " + "\n  ".join(REGISTRY))
    return identity_id


def _add_model(p):
    p.add_argument("--model", required=True, help="model file (see docs/formats.md)")


def _add_out(p):
    p.add_argument("--format", choices=["csv", "json"], default=None)
    p.add_argument("--out", default=None, help="output path (default: standard output)")


def _build_parser() -> _Parser:
    ap = _Parser(prog="parisian-levy", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("scale", help="tabulate W, W', Wbar, Wbarbar, Z, Zbar")
    _add_model(p)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--x-max", type=float, default=10.0)
    p.add_argument("--h", type=float, default=0.005)
    p.add_argument("--inversion", action="store_true", help="force the numerical Laplace-inversion path")
    _add_out(p)

    p = sub.add_parser("identity", help="evaluate one registry identity")
    p.add_argument("--id", required=True)
    _add_model(p)
    for k in ("q", "a", "b", "x"):
        p.add_argument(f"--{k}", type=float, default=None)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--limit", choices=["a_inf", "b_inf", "perpetual"], default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("simulate", help="Monte Carlo estimate of one functional")
    _add_model(p)
    p.add_argument("--process", required=True, choices=[e.value for e in Process])
    p.add_argument("--functional", required=True, choices=[e.value for e in Functional])
    for k in ("q", "a", "b", "x"):
        p.add_argument(f"--{k}", type=float, required=True)
    p.add_argument("--r", type=float, default=0.0)
    p.add_argument("--theta", type=float, default=0.0)
    _add_sim(p)
    p.add_argument("--bridge", action="store_true", help="Brownian-bridge crossing correction (off by default)")
    p.add_argument("--out", default=None)

    p = sub.add_parser("verify", help="compare identities with Monte Carlo and limit sequences")
    p.add_argument("--model", action="append", required=True, help="model file; repeat for several models")
    p.add_argument("--suite", choices=["full", "smoke"], default="full")
    p.add_argument("--wide", action="store_true", help="3x3 grid over (r, b) instead of the canonical set")
    _add_sim(p)
    p.add_argument("--no-bridge", action="store_true", help="turn the Brownian-bridge crossing correction off")
    p.add_argument("--csv", default=None, help="write the CSV report here")
    p.add_argument("--json", default=None, help="write the JSON report here")

    p = sub.add_parser("sweep", help="evaluate an identity along a parameter grid")
    p.add_argument("--id", required=True)
    _add_model(p)
    p.add_argument("--param", required=True, choices=["a", "b", "x", "r"])
    p.add_argument("--from", dest="lo", type=float, required=True)
    p.add_argument("--to", dest="hi", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--q", type=float, default=0.05)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--a", type=float, default=-2.0)
    p.add_argument("--b", type=float, default=3.0)
    p.add_argument("--x", type=float, default=0.5)
    p.add_argument("--theta", type=float, default=0.0)
    _add_out(p)
    return ap


def _add_sim(p):
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t-max", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--antithetic", action="store_true")
    p.add_argument("--workers", type=int, default=1)


def _sim_config(ns) -> SimConfig:
    # simulate: bridge opt-in; verify: opt-out
    bridge = ns.bridge if hasattr(ns, "bridge") else not ns.no_bridge
    return SimConfig(n_paths=ns.paths, dt=ns.dt, t_max=ns.t_max, seed=ns.seed, antithetic=ns.antithetic,
                     bridge=bridge, workers=ns.workers)


def _cmd_scale(ns) -> int:
    model = load_model(ns.model)
    t = build_scale_table(model, ns.q, x_max=ns.x_max, h=ns.h, force_inversion=ns.inversion)
    x = t.grid
    cols = {"x": x, "W": eval_W(t, x), "Wp": eval_W_prime(t, x), "Wbar": eval_W_bar(t, x),
            "Wbarbar": eval_W_bar2(t, x), "Z": eval_Z(t, x), "Zbar": eval_Z_bar(t, x)}
    if (ns.format or "csv") == "json":
        doc = {"model": model.describe(), "q": ns.q, "method": "closed form" if t.closed_form else "inversion",
               "columns": {k: [float(v) for v in vals] for k, vals in cols.items()}}
        _emit(json.dumps(doc) + "\n", ns.out)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for i in range(len(x)):
            w.writerow([repr(float(cols[k][i])) for k in cols])
        _emit(buf.getvalue(), ns.out)
    return EXIT_OK


def _cmd_identity(ns) -> int:
    _known_id(ns.id)
    model = load_model(ns.model)
    mode = ns.limit or "finite"
    if ns.q is None or ns.x is None:
        raise _UsageError("identity: --q and --x are required")
    a = ns.a if ns.a is not None else (-math.inf if mode in ("a_inf", "perpetual") else None)
    b = ns.b if ns.b is not None else (math.inf if mode in ("b_inf", "perpetual") else None)
    if a is None or b is None:
        raise _UsageError(f"identity: --a and --b are required in mode {mode!r}")
    req = IdentityRequest(ns.id, model, q=ns.q, a=a, b=b, x=ns.x, r=ns.r, theta=ns.theta, mode=mode)
    val = evaluate(req)
    params = {"q": ns.q, "r": ns.r, "a": _num(req.a), "b": _num(req.b), "x": ns.x, "theta": ns.theta, "mode": mode}
    doc = {"id": ns.id, "params": params, "value": _num(val.value), "meaning": val.meaning.value,
           "citation": val.formula_citation, "model": model.describe()}
    _emit(json.dumps(doc) + "\n", ns.out)
    return EXIT_OK


def _cmd_simulate(ns) -> int:
    model = load_model(ns.model)
    res = simulate_batch(model, ns.process, {"r": ns.r, "a": ns.a, "b": ns.b}, ns.functional, ns.q, ns.theta,
                         _sim_config(ns), x=ns.x)
    doc = dict(res.to_dict(), process=ns.process, functional=ns.functional, model=model.describe())
    _emit(json.dumps(doc) + "\n", ns.out)
    return EXIT_OK


def _cmd_verify(ns) -> int:
    from .verify import run_suite

    models = [load_model(m) for m in ns.model]
    t0 = time.monotonic()
    report = run_suite(models, _sim_config(ns), suite=ns.suite, wide=ns.wide)
    if ns.csv:
        Path(ns.csv).write_text(report.to_csv())
    if ns.json:
        Path(ns.json).write_text(report.to_json())
    if not ns.csv and not ns.json:
        sys.stdout.write(report.to_json())
    else:
        sys.stdout.write(json.dumps(report.summary(), sort_keys=True) + "\n")
    print(f"elapsed {time.monotonic() - t0:.1f}s", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_FAILED


def _cmd_sweep(ns) -> int:
    _known_id(ns.id)
    model = load_model(ns.model)
    base = {"model": model, "q": ns.q, "a": ns.a, "b": ns.b, "x": ns.x, "theta": ns.theta}
    if REGISTRY[ns.id].parisian or ns.param == "r":
        base["r"] = ns.r
    rows = barrier_sweep(ns.id, ns.param, ns.lo, ns.hi, ns.steps, base)
    if (ns.format or "csv") == "json":
        doc = {"id": ns.id, "param": ns.param, "citation": REGISTRY[ns.id].citation,
               "rows": [{"param": r.param_value, "value": None if r.value is None else _num(r.value),
                         "error": r.error, "argmax": r.is_argmax} for r in rows]}
        _emit(json.dumps(doc) + "\n", ns.out)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([ns.param, "value", "argmax", "error"])
        for r in rows:
            w.writerow([repr(r.param_value), "" if r.value is None else _num(repr(r.value)) if math.isfinite(r.value)
                        else _num(r.value), int(r.is_argmax), r.error or ""])
        _emit(buf.getvalue(), ns.out)
    return EXIT_OK


_COMMANDS = {"scale": _cmd_scale, "identity": _cmd_identity, "simulate": _cmd_simulate, "verify": _cmd_verify,
             "sweep": _cmd_sweep}


def main(argv=None) -> int:
    try:
        ns = _build_parser().parse_args(argv)
        return _COMMANDS[ns.cmd](ns)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ParisianLevyError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
