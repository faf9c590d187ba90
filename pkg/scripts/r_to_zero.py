"""Distance between Parisian identities and their classical counterparts as r -> 0."""

from dataclasses import dataclass

from _common import ROOT, parse_config, write_csv

from parisian_levy import REGISTRY, load_model, value_of

PAIRS = [
    ("xr.up", "classic.up"), ("xr.down", "classic.down"), ("xr.creep", "classic.creep.two_sided"),
    ("xr.overshoot", "classic.overshoot"), ("xtilde.down", "refl_above.down_time"),
    ("xtilde.overshoot", "refl_above.overshoot"), ("xtilde.div_singular", "refl_above.dividends"),
    ("yr.up", "refl_below.up_time"), ("yr.injection", "refl_below.injection"),
    ("ytilde.div_singular", "refl_double.dividends"), ("ytilde.injection", "refl_double.injection"),
]


@dataclass(frozen=True)
class Config:
    models: tuple = ("bm", "cl")
    rates: tuple = (1e-1, 1e-2, 1e-3, 1e-4)
    q: float = 0.05
    a: float = -2.0
    b: float = 3.0
    x: float = 0.5
    theta: float = 0.5


def main(cfg: Config) -> None:
    rows = []
    for name in cfg.models:
        m = load_model(ROOT / "models" / f"{name}.model")
        for par, cls in PAIRS:
            if REGISTRY[par].needs_sigma and m.sigma == 0:
                continue
            th = cfg.theta if REGISTRY[par].uses_theta else 0.0
            p = dict(q=cfg.q, a=cfg.a, b=cfg.b, x=cfg.x, theta=th)
            target = value_of(cls, m, **p)
            # relative error, or absolute error when the classical value vanishes (no jumps, no overshoot)
            scale = abs(target) if abs(target) > 1e-12 else 1.0
            rel = [abs(value_of(par, m, r=r, **p) - target) / scale for r in cfg.rates]
            rows.append([name, par, cls, target, *rel])
            print(f"{name} {par:22s} " + " ".join(f"{e:.2e}" for e in rel))
    print("wrote", write_csv("r_to_zero.csv", ["model", "id", "classical", "classical_value",
                                                *[f"err_r={r:g}" for r in cfg.rates]], rows))


if __name__ == "__main__":
    main(parse_config(Config, __doc__))
