"""Discretisation bias of a Brownian first-passage probability versus dt, bridge off and on."""

from dataclasses import dataclass

from _common import ROOT, parse_config, write_csv

from parisian_levy import SimConfig, load_model, simulate_batch, value_of


@dataclass(frozen=True)
class Config:
    model: str = "bm"
    dts: tuple = (1e-2, 4e-3, 2e-3, 1e-3)
    paths: int = 400_000
    q: float = 2.0
    a: float = -50.0
    b: float = 3.0
    x: float = 2.5
    seed: int = 21


def main(cfg: Config) -> None:
    m = load_model(ROOT / "models" / f"{cfg.model}.model")
    exact = value_of("classic.up", m, q=cfg.q, a=cfg.a, b=cfg.b, x=cfg.x)
    rows = []
    for bridge in (False, True):
        for dt in cfg.dts:
            sim = SimConfig(n_paths=cfg.paths, dt=dt, seed=cfg.seed, bridge=bridge)
            res = simulate_batch(m, "X", {"a": cfg.a, "b": cfg.b}, "up_exit", cfg.q, config=sim, x=cfg.x)
            err = res.estimate - exact
            rows.append([int(bridge), dt, res.estimate, res.stderr, err, err / res.stderr])
            print(f"bridge={int(bridge)} dt={dt:<7g} est={res.estimate:.5f} err={err:+.5f} z={err / res.stderr:+.2f}")
    print(f"exact {exact:.6f}; wrote", write_csv("dt_refinement.csv", ["bridge", "dt", "estimate", "stderr", "error", "z"], rows))


if __name__ == "__main__":
    main(parse_config(Config, __doc__))
