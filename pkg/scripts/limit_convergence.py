"""Deviation of finite-barrier values from the limit modes along the default barrier sequences.

For a -> -inf the deviation should fall like exp(-gap * |a|) where ``gap`` is the
distance from Phi(q) to the nearest other root of psi(theta) = q.  With slow
decay the fixed sequence (-5, -10, -20) cannot reach the 1e-4 target.
"""

from dataclasses import dataclass

from _common import ROOT, parse_config, write_csv

from parisian_levy import REGISTRY, load_model
from parisian_levy.identities import LIMIT_PAIRS, evaluate_limit_consistency
from parisian_levy.scale_functions import laplace_roots
from parisian_levy.verify import CANONICAL


@dataclass(frozen=True)
class Config:
    models: tuple = ("bm", "cl")
    qs: tuple = (0.05, 0.5)


def main(cfg: Config) -> None:
    rows = []
    for name in cfg.models:
        m = load_model(ROOT / "models" / f"{name}.model")
        for q in cfg.qs:
            roots = sorted(laplace_roots(m, q).real)
            print(f"{name} q={q}: roots of psi = q: {', '.join(f'{r:.4f}' for r in roots)}")
            for (i, mode) in LIMIT_PAIRS:
                if REGISTRY[i].needs_sigma and m.sigma == 0:
                    continue
                p = dict(model=m, q=q, r=CANONICAL["r"], a=CANONICAL["a"], b=CANONICAL["b"], x=CANONICAL["x"],
                         theta=CANONICAL["theta"] if REGISTRY[i].uses_theta else 0.0)
                try:
                    rep = evaluate_limit_consistency(i, mode, p)
                except Exception as exc:  # infinite or undefined limits at this q
                    print(f"  {i}[{mode}]: skipped ({exc})")
                    continue
                devs = ",".join(f"{d:.2e}" for d in rep.deviations)
                rows.append([name, q, i, mode, rep.param, *rep.deviations, rep.tolerance, int(rep.passed)])
                print(f"  {'ok  ' if rep.passed else 'MISS'} {i}[{mode}] deviations {devs}")
    print("wrote", write_csv("limit_convergence.csv",
                             ["model", "q", "id", "mode", "param", "dev1", "dev2", "dev3", "tolerance", "passed"], rows))


if __name__ == "__main__":
    main(parse_config(Config, __doc__))
