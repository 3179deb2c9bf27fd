"""Euler schemes for stable-driven SDEs with singular drift.

Three variants:

lebesgue
    Truncated drift, evaluated at a uniform random time inside the step,
    switched off on the first step.
hoelder
    Time-randomised drift, no truncation.
besov
    Deterministic step drift ``int_{t_k}^{t_k+h} P_{u-t_k} b(u, x) du``.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
import struct

import numpy as np

from . import conditions
from .drift import (CutoffConfig, Drift, LebesgueSum, LebesguePower, cutoff_drift, eval_drift,
                    integrated_drift, integrated_series)
from .exceptions import (AdmissibilityError, CapacityError, DomainError, ParameterError)
from .noise import StableLaw, sample_increment
from .rng import BLOCK_SIZE, Role, blocks_for, stream

VARIANTS = ("lebesgue", "hoelder", "besov")
_ALIASES = {
    "lebesguecutoffrandomized": "lebesgue",
    "holderrandomized": "hoelder",
    "hoelderrandomized": "hoelder",
    "holder": "hoelder",
    "besovmollified": "besov",
}

MEMORY_BUDGET = 60_000_000  # floats kept in a PathBatch


@dataclass(frozen=True)
class SchemeConfig:
    """Discretisation parameters.

    ``T`` is stored as given and ``h = T / n``; use dyadic T and n so that
    ``n * h == T`` exactly.
    """

    variant: str
    n: int
    T: float = 1.0
    law: StableLaw = field(default_factory=lambda: StableLaw(2.0))
    B: float = 1.0
    x0: float = 0.0
    seed: int = 0

    def __post_init__(self):
        v = _ALIASES.get(str(self.variant).lower(), str(self.variant).lower())
        if v not in VARIANTS:
            raise ParameterError(f"unknown scheme variant {self.variant!r}")
        object.__setattr__(self, "variant", v)
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError("n must be a positive integer")
        object.__setattr__(self, "n", int(self.n))
        if not self.T > 0:
            raise ParameterError("T must be positive")
        if not self.B > 0:
            raise ParameterError("B must be positive")
        if self.n * (self.T / self.n) != self.T:
            raise ParameterError("T / n is not exact in floating point; pick dyadic values")

    @property
    def h(self) -> float:
        return self.T / self.n

    @property
    def dim(self) -> int:
        return self.law.dim

    @property
    def times(self):
        return self.h * np.arange(self.n + 1)

    def start(self):
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        if x0.size == 1:
            x0 = np.full(self.dim, x0[0])
        if x0.size != self.dim:
            raise ParameterError("x0 has the wrong dimension")
        return x0

    def refined(self, factor):
        return SchemeConfig(self.variant, self.n * factor, self.T, self.law, self.B, self.x0, self.seed)

    def with_n(self, n):
        return SchemeConfig(self.variant, n, self.T, self.law, self.B, self.x0, self.seed)


def admissibility(config: SchemeConfig, drift: Drift):
    """List the violated hypotheses of the variant for this drift."""
    law = config.law
    reg = drift.regularity
    a, d = law.alpha, drift.dim
    out = []
    if drift.dim != law.dim:
        out.append(conditions.Violation("dimension", f"drift dim {drift.dim} != noise dim {law.dim}"))
    if config.variant == "lebesgue":
        out += conditions.lebesgue_beta(reg.beta)
        if isinstance(drift, (LebesgueSum, LebesguePower)):
            pieces = [(p.regularity.p, p.regularity.theta) for p in drift.pieces()]
            out += conditions.lebesgue_sum(a, d, pieces)
            if isinstance(drift, LebesguePower):
                out += conditions.power_drift(a, d, drift.delta)
                out += conditions.power_membership(d, drift.delta, drift.p_inner)
        else:
            out += conditions.krylov_rockner(a, d, reg.p, reg.theta)
    elif config.variant == "hoelder":
        out += conditions.hoelder_range(reg.beta)
        out += conditions.hoelder_time(reg.theta, not drift.time_constant)
    else:
        out += conditions.besov_serrin(a, d, reg.p, reg.theta, reg.beta)
        if not getattr(drift, "spectral", False):
            out.append(conditions.Violation("besov-spectral", "Besov scheme needs a spectral drift"))
    return out


def check_admissible(config: SchemeConfig, drift: Drift):
    """Raise ``AdmissibilityError`` listing every violated inequality."""
    errs = [v for v in admissibility(config, drift) if v.severity == "error"]
    if errs:
        raise AdmissibilityError([v.message for v in errs])


# --------------------------------------------------------------------------
# single steps


def _as_drift_arg(state, dim):
    return state[:, 0] if dim == 1 else state


def _as_state(v, dim):
    v = np.asarray(v, dtype=float)
    return v[:, None] if dim == 1 else v


def step_lebesgue(state, k, config: SchemeConfig, drift: Drift, increment, u):
    """One step of the truncated, time-randomised scheme.

    Parameters
    ----------
    state : ndarray, shape (M, d)
    k : int
        Step index (unused by the formula, kept for symmetry).
    increment : ndarray, shape (M, d)
        Noise increment over the step.
    u : ndarray, shape (M,)
        Evaluation times, uniform on [t_k, t_{k+1}).
    """
    cfg = CutoffConfig(config.B, config.h, config.law.alpha)
    b = cutoff_drift(drift, cfg, u, _as_drift_arg(state, drift.dim))
    return state + increment + config.h * _as_state(b, drift.dim)


def step_hoelder(state, k, config: SchemeConfig, drift: Drift, increment, u):
    """One step of the time-randomised scheme without truncation."""
    b = eval_drift(drift, u, _as_drift_arg(state, drift.dim))
    return state + config.h * _as_state(b, drift.dim) + increment


def step_besov(state, k, config: SchemeConfig, drift: Drift, increment, series=None):
    """One step of the mollified scheme; ``series`` caches the step drift."""
    tk = k * config.h
    if series is None:
        series = integrated_series(drift, config.law, tk, config.h)
    return state + _as_state(series(state[:, 0]), 1) + increment


# --------------------------------------------------------------------------
# batches


@dataclass
class PathBatch:
    """Simulated trajectories.

    ``states`` has shape (M, n+1, d) (None in streaming mode), ``u`` holds the
    random evaluation times (M, n) and ``increments`` the noise increments
    (M, n, d) needed by :func:`interpolate`.
    """

    config: SchemeConfig
    terminal: np.ndarray
    states: np.ndarray = None
    u: np.ndarray = None
    increments: np.ndarray = None
    drift: Drift = None

    @property
    def M(self):
        return self.terminal.shape[0]


def _draw_step(config: SchemeConfig, block, k):
    h = config.h
    z = sample_increment(config.law, h, stream(config.seed, block, k, Role.SUBORDINATOR),
                         size=BLOCK_SIZE,
                         gaussian_rng=stream(config.seed, block, k, Role.GAUSSIAN))
    v = stream(config.seed, block, k, Role.UNIFORM_TIME).random(BLOCK_SIZE)
    return z, v


def _step_series(config, drift):
    if config.variant != "besov":
        return None
    if drift.profile.constant:
        s = integrated_series(drift, config.law, 0.0, config.h)
        return [s] * config.n
    return [integrated_series(drift, config.law, k * config.h, config.h) for k in range(config.n)]


def _run_block(config, drift, block, keep, series, coarse_factor=None):
    n, h = config.n, config.h
    d = config.dim
    x = np.tile(config.start(), (BLOCK_SIZE, 1))
    path = np.empty((BLOCK_SIZE, n + 1, d)) if keep else None
    us = np.empty((BLOCK_SIZE, n)) if keep else None
    incs = np.empty((BLOCK_SIZE, n, d)) if keep else None
    if keep:
        path[:, 0] = x
    for k in range(n):
        z, v = _draw_step(config, block, k)
        u = k * h + h * v
        if config.variant == "lebesgue":
            x = step_lebesgue(x, k, config, drift, z, u)
        elif config.variant == "hoelder":
            x = step_hoelder(x, k, config, drift, z, u)
        else:
            x = step_besov(x, k, config, drift, z, series[k])
        if keep:
            path[:, k + 1] = x
            us[:, k] = u
            incs[:, k] = z
    return x, path, us, incs


def simulate_batch(config: SchemeConfig, drift: Drift, M, workers=1, keep_paths=True,
                   memory_budget=MEMORY_BUDGET):
    """Simulate ``M`` independent paths.

    Path ``i`` lives in block ``i // BLOCK_SIZE``; its draws depend only on
    ``(seed, block, step, role)`` so the output is independent of ``workers``.

    Parameters
    ----------
    keep_paths : bool
        Store full trajectories, evaluation times and increments.  Set to False
        (streaming mode) to keep terminal states only.
    memory_budget : int
        Maximum number of floats stored in the batch.
    """
    M = int(M)
    if M < 1:
        raise ParameterError("M must be >= 1")
    check_admissible(config, drift)
    n, d = config.n, config.dim
    need = M * d * (1 + ((n + 1) + n + n) * int(bool(keep_paths)))
    if need > memory_budget:
        raise CapacityError(
            f"batch needs {need} floats (> budget {memory_budget}); use keep_paths=False (streaming) "
            "or fewer paths")
    series = _step_series(config, drift)
    blocks = list(blocks_for(M))

    def job(spec):
        b, lo, hi = spec
        x, path, us, incs = _run_block(config, drift, b, keep_paths, series)
        m = hi - lo
        return (x[:m], None if path is None else path[:m], None if us is None else us[:m],
                None if incs is None else incs[:m])

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(job, blocks))
    else:
        parts = [job(b) for b in blocks]
    terminal = np.concatenate([p[0] for p in parts])
    if keep_paths:
        return PathBatch(config, terminal, np.concatenate([p[1] for p in parts]),
                         np.concatenate([p[2] for p in parts]), np.concatenate([p[3] for p in parts]),
                         drift)
    return PathBatch(config, terminal, drift=drift)


def simulate_coupled(config: SchemeConfig, drift: Drift, M, factor, workers=1):
    """Terminal states at step ``h`` and ``h / factor`` driven by common draws.

    The fine level uses exactly the draws of ``simulate_batch`` at the fine
    resolution.  Coarse increments are sums of fine ones; the coarse evaluation
    time of step k is ``t_k + h V`` where V is the fine uniform of the first
    sub-step, which keeps the coarse law exact.

    Returns
    -------
    coarse, fine : ndarray, shape (M, d)
    """
    factor = int(factor)
    if factor < 2:
        raise ParameterError("factor must be >= 2")
    check_admissible(config, drift)
    fine_cfg = config.refined(factor)
    s_c = _step_series(config, drift)
    s_f = _step_series(fine_cfg, drift)
    blocks = list(blocks_for(M))
    hc, hf = config.h, fine_cfg.h

    def job(spec):
        b, lo, hi = spec
        xc = np.tile(config.start(), (BLOCK_SIZE, 1))
        xf = xc.copy()
        for kc in range(config.n):
            zsum = 0.0
            vc = None
            for j in range(factor):
                kf = kc * factor + j
                z, v = _draw_step(fine_cfg, b, kf)
                u = kf * hf + hf * v
                if fine_cfg.variant == "lebesgue":
                    xf = step_lebesgue(xf, kf, fine_cfg, drift, z, u)
                elif fine_cfg.variant == "hoelder":
                    xf = step_hoelder(xf, kf, fine_cfg, drift, z, u)
                else:
                    xf = step_besov(xf, kf, fine_cfg, drift, z, s_f[kf])
                zsum = zsum + z
                if j == 0:
                    vc = v
            uc = kc * hc + hc * vc
            if config.variant == "lebesgue":
                xc = step_lebesgue(xc, kc, config, drift, zsum, uc)
            elif config.variant == "hoelder":
                xc = step_hoelder(xc, kc, config, drift, zsum, uc)
            else:
                xc = step_besov(xc, kc, config, drift, zsum, s_c[kc])
        m = hi - lo
        return xc[:m], xf[:m]

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(job, blocks))
    else:
        parts = [job(b) for b in blocks]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def interpolate(batch: PathBatch, t, paths=None):
    """Continuous-time extension of stored paths at time ``t``.

    For alpha = 2 the sub-step noise is a Brownian bridge conditioned on the
    stored step increment.  For alpha < 2 the sub-step noise is drawn forward
    (independent of the stored increment), so the value at ``t`` has the exact
    marginal law but is not pathwise reconciled with the next grid state.
    """
    cfg = batch.config
    if batch.states is None:
        raise ParameterError("interpolation needs keep_paths=True")
    t = float(t)
    if t < 0 or t > cfg.T:
        raise DomainError(f"t = {t} outside [0, {cfg.T}]")
    idx = np.arange(batch.M) if paths is None else np.atleast_1d(np.asarray(paths))
    h = cfg.h
    k = min(int(math.floor(t / h)), cfg.n)
    if k * h == t:
        return batch.states[idx, k].copy()
    s = t - k * h
    x = batch.states[idx, k]
    drift = batch.drift
    d = cfg.dim
    # bridge noise: one normal (and one subordinator) per path from dedicated streams
    blocks = idx // BLOCK_SIZE
    offs = idx % BLOCK_SIZE
    g = np.empty((idx.size, d))
    fresh = np.empty((idx.size, d))
    for b in np.unique(blocks):
        sel = blocks == b
        gb = stream(cfg.seed, int(b), k, Role.BRIDGE).standard_normal((BLOCK_SIZE, d))
        g[sel] = gb[offs[sel]]
        if not cfg.law.brownian:
            zb = sample_increment(cfg.law, s, stream(cfg.seed, int(b), k, Role.AUX), size=BLOCK_SIZE,
                                  gaussian_rng=stream(cfg.seed, int(b), k, Role.BRIDGE))
            fresh[sel] = zb[offs[sel]]
    if cfg.law.brownian:
        dz = batch.increments[idx, k]
        noise = (s / h) * dz + math.sqrt(s * (h - s) / h) * g
    else:
        noise = fresh
    u = batch.u[idx, k]
    if cfg.variant == "lebesgue":
        cut = CutoffConfig(cfg.B, h, cfg.law.alpha)
        b_term = _as_state(cutoff_drift(drift, cut, u, _as_drift_arg(x, drift.dim)), drift.dim) * s
    elif cfg.variant == "hoelder":
        b_term = _as_state(eval_drift(drift, u, _as_drift_arg(x, drift.dim)), drift.dim) * s
    else:
        b_term = _as_state(integrated_drift(drift, cfg.law, k * h, x[:, 0], s), 1)
    return x + b_term + noise


# --------------------------------------------------------------------------
# dumps

MAGIC = b"SSDE"
VERSION = 1
_HEADER = struct.Struct("<4sIQQId")


def write_terminal_csv(batch_or_terminal, path):
    """One row per path: ``path_id, x_1, ..., x_d``."""
    term = batch_or_terminal.terminal if isinstance(batch_or_terminal, PathBatch) else np.asarray(batch_or_terminal)
    if term.ndim == 1:
        term = term[:, None]
    d = term.shape[1]
    with open(path, "w", newline="") as fh:
        fh.write("path_id," + ",".join(f"x_{i + 1}" for i in range(d)) + "\n")
        for i, row in enumerate(term):
            fh.write(str(i) + "," + ",".join(repr(float(v)) for v in row) + "\n")


def write_paths_binary(batch: PathBatch, path):
    """Little-endian dump: header (magic, version, M, n, d, alpha) then states row-major."""
    if batch.states is None:
        raise ParameterError("binary path dump needs keep_paths=True")
    M, n1, d = batch.states.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, M, n1 - 1, d, batch.config.law.alpha))
        fh.write(np.ascontiguousarray(batch.states, dtype="<f8").tobytes())


def read_paths_binary(path):
    """Inverse of :func:`write_paths_binary`; returns (header dict, states)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, version, M, n, d, alpha = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise ValueError("not a path dump (bad magic)")
    states = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(M, n + 1, d)
    return {"version": version, "M": M, "n": n, "d": d, "alpha": alpha}, states
