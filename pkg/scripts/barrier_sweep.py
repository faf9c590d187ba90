"""Optimal periodic dividend barrier as a function of the observation rate r.

In original coordinates the surplus starts at u, ruin is below 0 and dividends
bring the surplus down to the barrier beta at Poisson(r) epochs.  Shifting by
beta gives the registry quantity ``xr.dividends[b_inf]`` with a = -beta and
x = u - beta.
"""

from dataclasses import dataclass

from scipy.optimize import minimize_scalar

from _common import ROOT, parse_config, write_csv

from parisian_levy import load_model, value_of


@dataclass(frozen=True)
class Config:
    models: tuple = ("bm", "cl")
    rates: tuple = (0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0)
    q: float = 0.05
    u: float = 1.0
    beta_max: float = 20.0


def npv(model, cfg: Config, r: float, beta: float) -> float:
    return value_of("xr.dividends", model, q=cfg.q, r=r, a=-beta, x=cfg.u - beta, mode="b_inf")


def main(cfg: Config) -> None:
    rows = []
    for name in cfg.models:
        m = load_model(ROOT / "models" / f"{name}.model")
        for r in cfg.rates:
            res = minimize_scalar(lambda beta: -npv(m, cfg, r, beta), bounds=(1e-4, cfg.beta_max),
                                  method="bounded", options={"xatol": 1e-7})
            beta, v = float(res.x), float(-res.fun)
            rows.append([name, r, beta, v, npv(m, cfg, r, 1e-4)])
            print(f"{name:3s} r={r:<5g} beta*={beta:.4f} npv={v:.6f} (barrier at 0: {rows[-1][-1]:.6f})")
    print("wrote", write_csv("barrier_sweep.csv", ["model", "r", "beta_star", "npv", "npv_beta0"], rows))


if __name__ == "__main__":
    main(parse_config(Config, __doc__))
