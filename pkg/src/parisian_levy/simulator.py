"""Monte Carlo oracle for the controlled processes.

Paths are generated by one numba kernel that knows about a lower level (kill or
classical reflection), an upper level (stop or classical reflection), an
independent Poisson observation clock of rate ``r`` that pushes the path down
to 0, and an optional independent exponential clock.  With ``sigma > 0`` the
path lives on a grid of step ``dt`` into which jump times and clock epochs are
inserted exactly; barrier crossings inside a step use the Brownian bridge.
Models without a Gaussian part move linearly between events and are simulated
without any grid.

Three estimators sit on top of the kernel:

* discounted: run to exit (or ``t_max``) and weight by ``e^{-qt}``;
* killing: run undiscounted until an independent ``Exp(q)`` time; used for
  classically reflected processes that may never exit;
* regenerative: for ``r > 0`` every push restarts the path at 0, so one cycle
  from ``x`` and one from ``0`` give ``V(x) = E_x[Y] + E_x[D] V(0)``.

Every path draws from its own splitmix64 stream keyed on ``(seed, path)``;
results are bit-identical for any number of worker threads.
"""

from __future__ import annotations

import enum
import math
import warnings
import zlib
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import ConfigurationError
from .levy_model import LevyModel

__all__ = [
    "Process",
    "Functional",
    "SimConfig",
    "SimResult",
    "PathBatch",
    "run_paths",
    "simulate_batch",
    "simulate_many",
    "functional_samples",
    "simulate_lemma",
    "estimate_resolvent_check",
    "derive_seed",
]

# exit codes
HORIZON, UP, DOWN, CLOCK, PUSH = 0, 1, 2, 3, 4
# level modes
NONE, KILL, STOP, REFLECT = 0, 1, 2, 3

# the bundled TBB is too old for numba; numba falls back to another layer by itself
warnings.filterwarnings("ignore", message="The TBB threading layer", category=numba.NumbaWarning)
_NEAR = 8.0  # bridge work is skipped beyond this many sigma*sqrt(h) from a barrier


class Process(str, enum.Enum):
    X = "X"
    XR = "Xr"
    XTILDE = "XtildeB"
    YR = "YrA"
    YTILDE = "YtildeAB"


class Functional(str, enum.Enum):
    DISCOUNTED_LR = "discounted_Lr"
    DISCOUNTED_LS = "discounted_LS"
    DISCOUNTED_R = "discounted_R"
    UP = "up_exit"
    DOWN = "down_exit"
    CREEP = "creep"
    OVERSHOOT = "overshoot"


# process -> (lower mode, upper mode)
_LEVELS = {
    Process.X: (KILL, STOP),
    Process.XR: (KILL, STOP),
    Process.XTILDE: (KILL, REFLECT),
    Process.YR: (REFLECT, STOP),
    Process.YTILDE: (REFLECT, REFLECT),
}

_ALLOWED = {
    Process.X: {Functional.UP, Functional.DOWN, Functional.CREEP, Functional.OVERSHOOT},
    Process.XR: {Functional.DISCOUNTED_LR, Functional.UP, Functional.DOWN, Functional.CREEP, Functional.OVERSHOOT},
    Process.XTILDE: {Functional.DISCOUNTED_LR, Functional.DISCOUNTED_LS, Functional.DOWN, Functional.CREEP,
                     Functional.OVERSHOOT},
    Process.YR: {Functional.DISCOUNTED_LR, Functional.DISCOUNTED_R, Functional.UP},
    Process.YTILDE: {Functional.DISCOUNTED_LR, Functional.DISCOUNTED_LS, Functional.DISCOUNTED_R},
}


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 100_000
    dt: float = 1e-3
    t_max: float | None = None  # None: e^{-q t_max} = 1e-6, or 200 when q = 0
    seed: int = 0
    antithetic: bool = False
    bridge: bool = False  # verification runs switch it on
    workers: int = 1

    def __post_init__(self):
        if int(self.n_paths) < 1:
            raise ConfigurationError("n_paths must be >= 1")
        if self.antithetic and self.n_paths % 2:
            raise ConfigurationError("antithetic sampling needs an even n_paths")
        if not (0 < self.dt <= 1e-2):
            raise ConfigurationError(f"dt must lie in (0, 1e-2], got {self.dt!r}")
        if self.t_max is not None and not self.t_max > 0:
            raise ConfigurationError("t_max must be > 0")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")
        if int(self.workers) < 1:
            raise ConfigurationError("workers must be >= 1")

    def horizon(self, q: float) -> float:
        if self.t_max is not None:
            return float(self.t_max)
        return math.log(1e6) / q if q > 0 else 200.0


@dataclass(frozen=True)
class SimResult:
    estimate: float
    stderr: float
    n_effective: int
    dt: float
    bias_note: str
    seed: int = 0
    n_paths: int = 0
    extra: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "stderr": self.stderr, "n": self.n_paths,
                "n_effective": self.n_effective, "dt": self.dt, "seed": self.seed, "bias_note": self.bias_note}


# ---------------------------------------------------------------------------
# numba kernel


@numba.njit(inline="always")
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@numba.njit(inline="always")
def _uniform(state):
    state[0] += np.uint64(0x9E3779B97F4A7C15)
    return ((_mix(state[0]) >> np.uint64(11)) + 0.5) * (1.0 / 9007199254740992.0)


@numba.njit(inline="always")
def _normal(state, spare):
    if spare[1] != 0.0:
        spare[1] = 0.0
        return spare[0]
    u1 = _uniform(state)
    u2 = _uniform(state)
    rad = math.sqrt(-2.0 * math.log(u1))
    spare[0] = rad * math.sin(2.0 * math.pi * u2)
    spare[1] = 1.0
    return rad * math.cos(2.0 * math.pi * u2)


@numba.njit(inline="always")
def _jump(state, alphas, cumw):
    u = _uniform(state)
    k = 0
    while k < alphas.shape[0] - 1 and u > cumw[k]:
        k += 1
    return -math.log(_uniform(state)) / alphas[k]


@numba.njit(parallel=True, cache=True)
def _kernel(n, seed, x0, c, sigma, lam, alphas, cumw, lo, lo_mode, hi, hi_mode, r, regen, k_rate,
            q, dt, t_max, bridge, antithetic,
            code, t_end, lvl, creep, lp, ls, rr):
    base = _mix(np.uint64(seed) ^ np.uint64(0x5851F42D4C957F2D))
    for i in numba.prange(n):
        pid = i // 2 if antithetic else i
        sign = -1.0 if (antithetic and (i % 2) == 1) else 1.0
        state = np.empty(1, dtype=np.uint64)
        state[0] = _mix(base + np.uint64(pid) * np.uint64(0x9E3779B97F4A7C15))
        spare = np.zeros(2)
        t = 0.0
        x = x0
        acc_p = 0.0
        acc_s = 0.0
        acc_r = 0.0
        out = HORIZON
        crp = False
        lev = x0
        inf = np.inf
        nj = -math.log(_uniform(state)) / lam if lam > 0 else inf
        npar = -math.log(_uniform(state)) / r if r > 0 else inf
        nk = -math.log(_uniform(state)) / k_rate if k_rate > 0 else inf
        s2 = sigma * sigma
        while True:
            te = min(nj, npar, nk, t_max)
            if sigma > 0.0:
                te = min(te, t + dt)
                h = te - t
                if h > 0.0:
                    sh = sigma * math.sqrt(h)
                    x1 = x + c * h + sh * sign * _normal(state, spare)
                    band = _NEAR * sh
                    if hi_mode == STOP:
                        if x1 >= hi:
                            out = UP
                        elif bridge and hi - x < band and hi - x1 < band:
                            if _uniform(state) < math.exp(-2.0 * (hi - x) * (hi - x1) / (s2 * h)):
                                out = UP
                        if out == UP:
                            t = te
                            lev = hi
                            break
                    elif hi_mode == REFLECT:
                        if bridge:
                            if hi - x < band or hi - x1 < band:
                                d = x1 - x
                                m = 0.5 * (x + x1 + math.sqrt(d * d - 2.0 * s2 * h * math.log(_uniform(state))))
                                if m > hi:
                                    x1 -= m - hi
                                    acc_s += math.exp(-q * te) * (m - hi)
                        elif x1 > hi:
                            acc_s += math.exp(-q * te) * (x1 - hi)
                            x1 = hi
                    if lo_mode == KILL:
                        if x1 <= lo:
                            out = DOWN
                        elif bridge and x - lo < band and x1 - lo < band:
                            if _uniform(state) < math.exp(-2.0 * (x - lo) * (x1 - lo) / (s2 * h)):
                                out = DOWN
                        if out == DOWN:
                            t = te
                            lev = lo
                            crp = True
                            break
                    elif lo_mode == REFLECT:
                        if bridge:
                            if x - lo < band or x1 - lo < band:
                                d = x1 - x
                                m = 0.5 * (x + x1 - math.sqrt(d * d - 2.0 * s2 * h * math.log(_uniform(state))))
                                if m < lo:
                                    x1 += lo - m
                                    acc_r += math.exp(-q * te) * (lo - m)
                        elif x1 < lo:
                            acc_r += math.exp(-q * te) * (lo - x1)
                            x1 = lo
                    x = x1
                t = te
            else:
                # linear motion at slope c > 0 until the next event
                if hi_mode != NONE and x + c * (te - t) >= hi:
                    th = t + (hi - x) / c
                    if hi_mode == STOP:
                        t = th
                        lev = hi
                        out = UP
                        break
                    if q > 0.0:
                        acc_s += c * (math.exp(-q * th) - math.exp(-q * te)) / q
                    else:
                        acc_s += c * (te - th)
                    x = hi
                else:
                    x += c * (te - t)
                t = te
            if t >= t_max:
                lev = x
                out = HORIZON
                break
            if t == nj:
                x -= _jump(state, alphas, cumw)
                nj = t + (-math.log(_uniform(state)) / lam)
                if x < lo:
                    if lo_mode == KILL:
                        lev = x
                        out = DOWN
                        break
                    if lo_mode == REFLECT:
                        acc_r += math.exp(-q * t) * (lo - x)
                        x = lo
            if t == nk:
                lev = x
                out = CLOCK
                break
            if t == npar:
                npar = t + (-math.log(_uniform(state)) / r)
                if x > 0.0:
                    acc_p += math.exp(-q * t) * x
                    if regen:
                        lev = x
                        x = 0.0
                        out = PUSH
                        break
                    x = 0.0
        code[i] = out
        t_end[i] = t
        lvl[i] = lev
        creep[i] = crp
        lp[i] = acc_p
        ls[i] = acc_s
        rr[i] = acc_r


# ---------------------------------------------------------------------------
# host side


@dataclass(frozen=True)
class PathBatch:
    """Per-path outputs of one kernel run."""

    code: np.ndarray
    t_end: np.ndarray
    level: np.ndarray
    creep: np.ndarray
    lp: np.ndarray
    ls: np.ndarray
    r_acc: np.ndarray
    antithetic: bool
    horizon_fraction: float


def derive_seed(seed: int, *key) -> int:
    """Deterministic 64-bit substream seed from a base seed and a key."""
    h = zlib.crc32(repr(key).encode())
    z = (int(seed) * 0x9E3779B97F4A7C15 + h * 0xBF58476D1CE4E5B9 + 0x632BE59BD9B4E019) % 2**64
    return z


def run_paths(model: LevyModel, x0: float, *, lo: float, lo_mode: int, hi: float, hi_mode: int, r: float,
              regen: bool, clock_rate: float, q: float, config: SimConfig, seed: int,
              t_max: float) -> PathBatch:
    n = int(config.n_paths)
    alphas = model.alphas if model.has_jumps else np.ones(1)
    cumw = np.cumsum(model.weights) if model.has_jumps else np.ones(1)
    if model.sigma == 0 and model.drift <= 0:
        raise ConfigurationError("a model without Gaussian part needs drift c > 0")
    code = np.zeros(n, dtype=np.int8)
    t_end = np.zeros(n)
    lvl = np.zeros(n)
    creep = np.zeros(n, dtype=np.bool_)
    lp = np.zeros(n)
    ls = np.zeros(n)
    rr = np.zeros(n)
    prev = numba.get_num_threads()
    numba.set_num_threads(min(int(config.workers), numba.config.NUMBA_NUM_THREADS))
    try:
        _kernel(n, np.uint64(seed), float(x0), float(model.drift), float(model.sigma), float(model.lam),
                np.ascontiguousarray(alphas, dtype=float), np.ascontiguousarray(cumw, dtype=float),
                float(lo), lo_mode, float(hi), hi_mode, float(r), bool(regen), float(clock_rate),
                float(q), float(config.dt), float(t_max), bool(config.bridge), bool(config.antithetic),
                code, t_end, lvl, creep, lp, ls, rr)
    finally:
        numba.set_num_threads(prev)
    return PathBatch(code, t_end, lvl, creep, lp, ls, rr, bool(config.antithetic), float(np.mean(code == HORIZON)))


def _pairs(v: np.ndarray, antithetic: bool) -> np.ndarray:
    return v.reshape(-1, 2).mean(axis=1) if antithetic else v


def _mean_se(v: np.ndarray) -> tuple[float, float]:
    n = v.shape[0]
    m = float(np.mean(v))
    se = float(np.std(v, ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return m, se


def functional_samples(batch: PathBatch, functional: Functional, q: float, theta: float, a: float,
                       discounted: bool) -> np.ndarray:
    """Per-path payoff ``Y`` of one functional (no regeneration term)."""
    disc = np.exp(-q * batch.t_end) if discounted else np.ones_like(batch.t_end)
    down = batch.code == DOWN
    if functional is Functional.DISCOUNTED_LR:
        return batch.lp.copy()
    if functional is Functional.DISCOUNTED_LS:
        return batch.ls.copy()
    if functional is Functional.DISCOUNTED_R:
        return batch.r_acc.copy()
    if functional is Functional.UP:
        return np.where(batch.code == UP, disc, 0.0)
    if functional is Functional.DOWN:
        return np.where(down, disc * np.exp(-theta * (a - batch.level)), 0.0)
    if functional is Functional.CREEP:
        return np.where(down & batch.creep, disc, 0.0)
    if functional is Functional.OVERSHOOT:
        return np.where(down, disc * (a - batch.level), 0.0)
    raise ConfigurationError(f"unknown functional {functional!r}")


def _bias_note(config: SimConfig, model: LevyModel, mode: str, horizon_frac: float) -> str:
    parts = [f"mode={mode}"]
    if model.sigma > 0:
        parts.append(f"grid dt={config.dt:g}")
        parts.append("bridge correction on" if config.bridge else "bridge correction off (discrete monitoring bias)")
    else:
        parts.append("exact event-driven paths")
    if horizon_frac > 1e-3:
        parts.append(f"WARNING horizon reached on {100 * horizon_frac:.2f}% of paths")
    return "; ".join(parts)


def simulate_batch(model: LevyModel, process: Process | str, params: dict, functional: Functional | str,
                   q: float, theta: float = 0.0, config: SimConfig = SimConfig(), x: float = 0.0) -> SimResult:
    """Estimate one functional of one controlled process started at ``x``.

    ``params`` holds ``r`` (0 for the classical process), ``a`` and ``b``.
    """
    return simulate_many(model, process, params, [functional], q, theta, config, x)[0]


def simulate_many(model: LevyModel, process: Process | str, params: dict, functionals, q: float,
                  theta: float = 0.0, config: SimConfig = SimConfig(), x: float = 0.0) -> list[SimResult]:
    """Like :func:`simulate_batch` but several functionals share the same paths."""
    process = Process(process)
    functionals = [Functional(f) for f in functionals]
    r = float(params.get("r", 0.0) or 0.0)
    a, b = float(params["a"]), float(params["b"])
    if process is Process.X and r > 0:
        raise ConfigurationError("process X carries no Parisian clock; use Xr")
    if process is not Process.X and r < 0:
        raise ConfigurationError("r must be >= 0")
    for f in functionals:
        if f not in _ALLOWED[process]:
            raise ConfigurationError(f"functional {f.value} is not defined for process {process.value}")
    if not (math.isfinite(a) and math.isfinite(b) and a < b):
        raise ConfigurationError(f"need finite a < b, got a={a!r}, b={b!r}")
    if r > 0 and not a < 0 < b:
        raise ConfigurationError("Parisian processes need a < 0 < b")
    if not a <= x <= b:
        raise ConfigurationError(f"start x={x!r} must lie in [a, b]")
    if q < 0 or theta < 0:
        raise ConfigurationError("q and theta must be >= 0")
    lo_mode, hi_mode = _LEVELS[process]
    t_max = config.horizon(q)
    common = dict(lo=a, lo_mode=lo_mode, hi=b, hi_mode=hi_mode, config=config, t_max=t_max)
    key = (process.value, r, a, b, q)

    if r > 0:
        # regenerative: cycles end at the first push
        bx = run_paths(model, x, r=r, regen=True, clock_rate=0.0, q=q,
                       seed=derive_seed(config.seed, key, "x", x), **common)
        b0 = bx if x == 0 else run_paths(model, 0.0, r=r, regen=True, clock_rate=0.0, q=q,
                                         seed=derive_seed(config.seed, key, "zero"), **common)
        dx = np.where(bx.code == PUSH, np.exp(-q * bx.t_end), 0.0)
        d0 = np.where(b0.code == PUSH, np.exp(-q * b0.t_end), 0.0)
        note = _bias_note(config, model, "regenerative", max(bx.horizon_fraction, b0.horizon_fraction))
        out = []
        for f in functionals:
            y0 = _pairs(functional_samples(b0, f, q, theta, a, True), config.antithetic)
            dd0 = _pairs(d0, config.antithetic)
            m_d0 = float(np.mean(dd0))
            if m_d0 >= 1.0:
                raise ConfigurationError("regeneration cycle never terminates (q = 0 without exit)")
            v0 = float(np.mean(y0)) / (1.0 - m_d0)
            _, se_v0 = _mean_se(y0 + v0 * dd0)
            se_v0 /= 1.0 - m_d0
            if x == 0:
                out.append(SimResult(v0, se_v0, y0.shape[0], config.dt, note, config.seed, config.n_paths,
                                     {"V0": v0, "E0[D]": m_d0}))
                continue
            yx = _pairs(functional_samples(bx, f, q, theta, a, True), config.antithetic)
            ddx = _pairs(dx, config.antithetic)
            est, se1 = _mean_se(yx + v0 * ddx)
            se = math.sqrt(se1**2 + (float(np.mean(ddx)) * se_v0) ** 2)
            out.append(SimResult(est, se, yx.shape[0], config.dt, note, config.seed, config.n_paths,
                                 {"V0": v0, "E0[D]": m_d0, "Ex[D]": float(np.mean(ddx))}))
        return out

    killing = q > 0
    batch = run_paths(model, x, r=0.0, regen=False, clock_rate=q if killing else 0.0, q=0.0 if killing else q,
                      seed=derive_seed(config.seed, key, "x", x), **common)
    note = _bias_note(config, model, "Exp(q) killing" if killing else "discounted", batch.horizon_fraction)
    out = []
    for f in functionals:
        y = _pairs(functional_samples(batch, f, q, theta, a, not killing), config.antithetic)
        m, se = _mean_se(y)
        out.append(SimResult(m, se, y.shape[0], config.dt, note, config.seed, config.n_paths))
    return out


# ---------------------------------------------------------------------------
# auxiliary expectations under the (q + r) discount


def simulate_lemma(model: LevyModel, q: float, r: float, b: float, x: float, reflected: bool,
                   config: SimConfig = SimConfig()) -> PathBatch:
    """Paths of X (or of X reflected at b) started at x, stopped below 0, at b, or at an Exp(r) time.

    Payoffs are assembled by the caller: the clock fired first when ``code == CLOCK``
    (``level`` is then ``X(e_r)``), and ``code == DOWN`` flags passage below 0
    before the clock.  Weights are ``e^{-q t_end}``.
    """
    if not (0 <= x <= b) or r <= 0 or q < 0:
        raise ConfigurationError("need 0 <= x <= b, r > 0 and q >= 0")
    return run_paths(model, x, lo=0.0, lo_mode=KILL, hi=b, hi_mode=REFLECT if reflected else STOP,
                     r=0.0, regen=False, clock_rate=r, q=q, config=config,
                     seed=derive_seed(config.seed, "lemma", reflected, q, r, b, x), t_max=config.horizon(q + r))


def estimate_resolvent_check(model: LevyModel, q: float, r: float, b: float, x: float,
                             config: SimConfig = SimConfig()) -> SimResult:
    """Monte Carlo estimate of ``E_x[e^{-q e_r} X(e_r); e_r < tau_b+ ^ tau_0-]``."""
    batch = simulate_lemma(model, q, r, b, x, False, config)
    y = np.where(batch.code == CLOCK, np.exp(-q * batch.t_end) * batch.level, 0.0)
    m, se = _mean_se(_pairs(y, config.antithetic))
    note = _bias_note(config, model, "clocked", batch.horizon_fraction)
    return SimResult(m, se, len(y) // (2 if config.antithetic else 1), config.dt, note, config.seed, config.n_paths)
