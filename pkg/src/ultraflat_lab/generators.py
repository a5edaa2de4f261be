"""Candidate sequences and a numerical flattener.

``flatten`` first runs damped alternating projections between the
unimodular-coefficient set and the flat-modulus set.  Plain alternating
projections stall well above useful flatness (around eps = 0.4 from a
quadratic-phase start), so by default a polishing stage follows: L-BFGS on
the grid norm ``||R/sqrt(n+1) - 1||_{2p}`` with ``p`` doubled along a ladder,
which approaches the sup norm.  Stalled attempts restart from the input with
seeded phase noise.
"""

from __future__ import annotations

import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .phase import flatness_report
from .poly_core import UnimodularPolynomial, default_grid_size, grid_values, make_unimodular

METHODS = ("ap", "ap+polish")
P_LADDER = (2, 4, 8, 16, 32, 64, 128)
SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class FlattenerConfig:
    target_eps: float = 0.1
    max_iters: int = 5000
    oversample: int = 16
    seed: int = 0
    damping: float = 0.7
    method: str = "ap+polish"
    # alternating projections hand over after this many steps without progress
    ap_patience: int = 50
    # per attempt; only used when a polishing stage follows
    ap_max_steps: int = 300
    # L-BFGS steps per recorded iteration of the polishing stage
    polish_steps: int = 25
    perturbation: float = 0.5
    restarts: int = 64
    # cap on recorded iterations per rung of the p ladder
    level_chunks: int = 40
    # restart early when eps is still this far above target halfway up the ladder
    abandon_factor: float = 1.25

    def __post_init__(self):
        if not (0.0 < self.target_eps < 1.0):
            raise ValueError(f"target_eps must lie in (0, 1), got {self.target_eps!r}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.oversample < 4:
            raise ValueError("oversample must be at least 4")
        if not (0.0 < self.damping <= 1.0):
            raise ValueError(f"damping must lie in (0, 1], got {self.damping!r}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.ap_patience < 1 or self.polish_steps < 1 or self.restarts < 0:
            raise ValueError("ap_patience, polish_steps must be >= 1 and restarts >= 0")


@dataclass
class FlattenerTrace:
    iterations: int = 0
    eps_history: list[float] = field(default_factory=list)
    stages: list[str] = field(default_factory=list)
    converged: bool = False
    attempts: int = 0

    def record(self, eps: float, stage: str) -> None:
        self.eps_history.append(float(eps))
        self.stages.append(stage)
        self.iterations += 1

    @property
    def final_eps(self) -> float:
        return min(self.eps_history) if self.eps_history else math.nan

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("iter,eps,stage\n")
        for i, (eps, stage) in enumerate(zip(self.eps_history, self.stages), start=1):
            buf.write(f"{i},{eps:.17g},{stage}\n")
        return buf.getvalue()


def quadratic_phase(n: int) -> UnimodularPolynomial:
    """``a_k = exp(i pi k**2 / (n+1))``; the phase is reduced exactly in integers."""
    if n < 0:
        raise ValueError(f"degree must be non-negative, got {n}")
    N = n + 1
    k = np.arange(N, dtype=np.int64)
    residue = (k * k) % (2 * N)
    return make_unimodular(np.exp(1j * np.pi * residue / N))


def rudin_shapiro_pair(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients of ``(P_m, Q_m)`` from ``P_0 = Q_0 = 1``."""
    if m < 0:
        raise ValueError(f"m must be non-negative, got {m}")
    p = np.ones(1)
    q = np.ones(1)
    for _ in range(m):
        p, q = np.concatenate([p, q]), np.concatenate([p, -q])
    return p, q


def rudin_shapiro(m: int) -> UnimodularPolynomial:
    """Rudin-Shapiro polynomial of degree ``2**m - 1`` (all coefficients +-1)."""
    return make_unimodular(rudin_shapiro_pair(m)[0])


def random_unimodular(n: int, seed: int) -> UnimodularPolynomial:
    if n < 0:
        raise ValueError(f"degree must be non-negative, got {n}")
    rng = np.random.default_rng(int(seed) & SEED_MASK)
    theta = rng.uniform(0.0, 2 * np.pi, n + 1)
    return make_unimodular(np.exp(1j * theta))


def _wrap(x):
    return np.angle(np.exp(1j * x))


def _projection_step(phases, N, M, damping):
    values = grid_values(np.exp(1j * phases), M)
    mag = np.abs(values)
    nz = mag > 0
    values[nz] *= math.sqrt(N) / mag[nz]
    coeffs = np.fft.fft(values)[:N] / M
    proj = np.where(coeffs == 0, 0.0, np.angle(coeffs))
    return phases + damping * _wrap(proj - phases)


def _flatness_objective(p, N, M):
    root = math.sqrt(N)
    expo = 1.0 / (2 * p)

    def fun(theta):
        a = np.exp(1j * theta)
        values = grid_values(a, M)
        R = np.maximum(np.abs(values), 1e-300)
        u = R / root - 1.0
        mean = float(np.mean(u ** (2 * p)))
        if mean <= 0.0:
            return 0.0, np.zeros_like(theta)
        # d mean / dF with F = R**2
        g = (2 * p) * u ** (2 * p - 1) / (M * root * 2 * R)
        w = np.conj(np.fft.fft(g * values)[:N])
        grad = -2.0 * np.imag(a * w)
        val = mean**expo
        return val, grad * expo * val / mean

    return fun


def flatten(P0: UnimodularPolynomial, cfg: FlattenerConfig | None = None):
    """Push ``P0`` towards eps-flatness.

    Returns ``(P, trace)`` where ``P`` is the flattest unimodular iterate
    seen (the converged one when ``trace.converged``).  Non-convergence is
    reported through the trace, never raised.
    """
    cfg = cfg or FlattenerConfig()
    n = P0.degree
    N = n + 1
    cert_M = default_grid_size(n, 16)
    work_M = default_grid_size(n, cfg.oversample)
    rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed) & SEED_MASK, n]))
    trace = FlattenerTrace()

    def certify(phases):
        return flatness_report(np.exp(1j * phases), cert_M).eps

    base = np.angle(P0.coeffs)
    best_phases = base
    best_eps = certify(base)
    trace.record(best_eps, "start")

    def note(phases, stage):
        nonlocal best_eps, best_phases
        eps = certify(phases)
        trace.record(eps, stage)
        if eps < best_eps:
            best_eps, best_phases = eps, phases
        return eps

    def done():
        return best_eps <= cfg.target_eps or trace.iterations >= cfg.max_iters

    while not done() and trace.attempts <= cfg.restarts:
        phases = base
        if trace.attempts:
            phases = base + cfg.perturbation * rng.standard_normal(N)
        trace.attempts += 1

        stale, local_best, steps = 0, math.inf, 0
        while not done():
            phases = _projection_step(phases, N, work_M, cfg.damping)
            steps += 1
            eps = note(phases, "ap")
            if eps < local_best * (1 - 1e-4):
                local_best, stale = eps, 0
            else:
                stale += 1
            if cfg.method == "ap+polish" and (stale >= cfg.ap_patience or steps >= cfg.ap_max_steps):
                break
        if cfg.method == "ap":
            break

        for p in P_LADDER:
            fun = _flatness_objective(p, N, work_M)
            level_best, stale = math.inf, 0
            for _ in range(cfg.level_chunks):
                if done():
                    break
                res = minimize(
                    fun,
                    phases,
                    jac=True,
                    method="L-BFGS-B",
                    options={"maxiter": cfg.polish_steps, "maxcor": 30, "gtol": 1e-12, "ftol": 1e-15},
                )
                phases = res.x
                eps = note(phases, f"polish-p{p}")
                if eps < level_best * (1 - 1e-4):
                    level_best, stale = eps, 0
                else:
                    stale += 1
                if res.nit < cfg.polish_steps or stale >= 4:
                    break
            if p == P_LADDER[3] and best_eps > cfg.abandon_factor * cfg.target_eps:
                break

    trace.converged = best_eps <= cfg.target_eps
    if best_phases is base:
        return P0, trace
    return make_unimodular(np.exp(1j * best_phases)), trace


def _flatten_start(args):
    n, cfg, kind = args
    P0 = quadratic_phase(n) if kind == "quadratic" else random_unimodular(n, cfg.seed)
    P, trace = flatten(P0, cfg)
    return n, P, trace


def flat_sweep(ns, cfg: FlattenerConfig | None = None, kind: str = "quadratic", workers: int | None = None):
    """Flatten one starting polynomial per degree in ``ns``.

    Each run depends only on ``(n, cfg)``, so the result does not depend on
    ``workers`` (default: ``ULTRAFLAT_THREADS`` or 1).
    """
    ns = [int(n) for n in ns]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError(f"ns must be strictly increasing, got {ns}")
    if kind not in ("quadratic", "random"):
        raise ValueError(f"unknown starting family {kind!r}")
    cfg = cfg or FlattenerConfig()
    if workers is None:
        workers = int(os.environ.get("ULTRAFLAT_THREADS", "1") or 1)
    jobs = [(n, cfg, kind) for n in ns]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            return list(pool.map(_flatten_start, jobs))
    return [_flatten_start(job) for job in jobs]


__all__ = [
    "FlattenerConfig",
    "FlattenerTrace",
    "flat_sweep",
    "flatten",
    "quadratic_phase",
    "random_unimodular",
    "rudin_shapiro",
    "rudin_shapiro_pair",
]
