"""Full verification suite (Monte Carlo + limit checks) for the bundled models."""

import json
import time
from dataclasses import dataclass

from _common import RESULTS, ROOT, parse_config

from parisian_levy import SimConfig, load_model
from parisian_levy.verify import run_suite


@dataclass(frozen=True)
class Config:
    models: tuple = ("bm", "cl")
    paths: int = 100_000
    dt: float = 1e-3
    seed: int = 20261018
    suite: str = "full"
    wide: bool = False


def main(cfg: Config) -> int:
    models = [load_model(ROOT / "models" / f"{m}.model") for m in cfg.models]
    sim = SimConfig(n_paths=cfg.paths, dt=cfg.dt, seed=cfg.seed, bridge=True)
    t0 = time.monotonic()

    def progress(c):
        z = "" if c.z != c.z else f" z={c.z:+.2f}"
        print(f"{c.verdict:9s} {c.kind:5s} {c.model[:24]:24s} {c.identity_id}{z}", flush=True)

    rep = run_suite(models, sim, suite=cfg.suite, wide=cfg.wide, progress=progress)
    tag = "_".join(cfg.models) + ("_wide" if cfg.wide else "")
    RESULTS.mkdir(exist_ok=True)
    (RESULTS / f"verify_{tag}.csv").write_text(rep.to_csv())
    (RESULTS / f"verify_{tag}.json").write_text(rep.to_json())
    print(json.dumps(rep.summary()), f"elapsed {time.monotonic() - t0:.0f}s")
    return 0 if rep.ok else 2


if __name__ == "__main__":
    raise SystemExit(main(parse_config(Config, __doc__)))
