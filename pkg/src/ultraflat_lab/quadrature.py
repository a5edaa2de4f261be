"""L_q means on the circle and the constant K(q) = mean of |sin t|^q."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .poly_core import CircleSamples

Q_MAX = 64.0
DEFAULT_START_M = 256
MAX_GRID = 1 << 24


class NoConvergence(RuntimeError):
    def __init__(self, previous: float, last: float, M: int):
        self.previous = previous
        self.last = last
        self.M = M
        super().__init__(
            f"no convergence up to M={M}: last values {previous!r}, {last!r}"
        )


@dataclass(frozen=True)
class LqResult:
    q: float
    value: float
    M_used: int
    est_error: float


def check_q(q: float) -> float:
    q = float(q)
    if not (0.0 < q <= Q_MAX):
        raise ValueError(f"q must lie in (0, {Q_MAX:g}], got {q!r}")
    return q


def kq_constant(q: float) -> float:
    """``Gamma((q+1)/2) / (Gamma(q/2 + 1) sqrt(pi))``, via log-gamma."""
    q = float(q)
    if not q > 0:
        raise ValueError(f"q must be positive, got {q!r}")
    return math.exp(gammaln((q + 1) / 2) - gammaln(q / 2 + 1)) / math.sqrt(math.pi)


def _abs_values(samples) -> np.ndarray:
    if isinstance(samples, CircleSamples):
        samples = samples.values
    return np.abs(np.asarray(samples))


def periodic_lq_mean(samples, q: float) -> LqResult:
    """Uniform-grid mean of ``|f(t_j)|**q``.

    The error estimate compares against the even-indexed half grid; it is
    infinite for odd ``M``.
    """
    q = check_q(q)
    mag = _abs_values(samples)
    M = mag.size
    if M < 2:
        raise ValueError("periodic_lq_mean needs at least 2 samples")
    powered = mag**q
    value = float(np.mean(powered))
    if M % 2 == 0:
        est = abs(value - float(np.mean(powered[::2])))
    else:
        est = math.inf
    return LqResult(q=q, value=value, M_used=M, est_error=est)


def refine_until(
    f: Callable[[int], np.ndarray],
    q: float,
    tol: float,
    M0: int = DEFAULT_START_M,
    max_M: int = MAX_GRID,
) -> LqResult:
    """Double the grid until two successive L_q means agree to ``tol`` (relative).

    ``f(M)`` must return the samples of the integrand's base function on the
    grid of size ``M``.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    q = check_q(q)
    M = int(M0)
    older = math.nan
    prev = float(np.mean(_abs_values(f(M)) ** q))
    while True:
        M *= 2
        if M > max_M:
            raise NoConvergence(older, prev, M // 2)
        value = float(np.mean(_abs_values(f(M)) ** q))
        delta = abs(value - prev)
        if delta <= tol * max(value, 1e-300):
            return LqResult(q=q, value=value, M_used=M, est_error=delta)
        older, prev = prev, value


def _abs_cos_power_integral(u0: float, u1: float, q: float, period_value: float) -> float:
    """``int_{u0}^{u1} |cos u|^q du`` for ``u0 <= u1``.

    Whole periods of length pi contribute ``period_value`` each; the
    remainder is integrated with the cusps at ``pi/2 + k pi`` as breakpoints.
    """
    span = u1 - u0
    whole = math.floor(span / math.pi)
    start = u0 + whole * math.pi
    cusps = []
    k = math.ceil((start - math.pi / 2) / math.pi)
    while (c := math.pi / 2 + k * math.pi) < u1:
        if c > start:
            cusps.append(c)
        k += 1
    rest, _ = integrate.quad(
        lambda u: abs(math.cos(u)) ** q,
        start,
        u1,
        points=cusps or None,
        limit=200,
        epsabs=1e-13,
        epsrel=1e-12,
    )
    return whole * period_value + rest


def _one_period(q: float) -> float:
    """``int_0^pi |sin u|^q du`` by adaptive quadrature (no gamma functions)."""
    val, _ = integrate.quad(lambda u: math.sin(u) ** q, 0.0, math.pi, epsabs=1e-14, epsrel=1e-13)
    return val


def interval_integrals(A: float, B: float, q: float, interval) -> tuple[float, float]:
    """``int_I |cos(Bt + A)|^q dt`` and ``int_I |sin(Bt + A)|^q dt``."""
    if B == 0:
        raise ValueError("B must be nonzero")
    q = check_q(q)
    a, b = map(float, interval)
    if not (0.0 <= a <= b <= 2 * math.pi + 1e-12):
        raise ValueError(f"interval {interval!r} is not inside [0, 2pi]")
    period = _one_period(q)
    out = []
    for shift in (0.0, -math.pi / 2):  # sin(x) = cos(x - pi/2)
        u0, u1 = sorted((B * a + A + shift, B * b + A + shift))
        out.append(_abs_cos_power_integral(u0, u1, q, period) / abs(B))
    return out[0], out[1]


def interval_lemma37_check(A: float, B: float, q: float, interval) -> tuple[float, float]:
    """Return ``(defect, bound)``.

    ``defect`` is the larger of ``|int_I |cos(Bt+A)|^q - K(q) meas(I)|`` and
    the same for sine; ``bound`` is ``pi/|B|``.
    """
    cos_int, sin_int = interval_integrals(A, B, q, interval)
    a, b = map(float, interval)
    expected = kq_constant(q) * (b - a)
    defect = max(abs(cos_int - expected), abs(sin_int - expected))
    return defect, math.pi / abs(B)


def moment_39_check(beta_prime, n: int, q: float) -> float:
    """Grid mean of ``|2 beta' / n|**q`` minus ``1/(q+1)``."""
    q = check_q(q)
    bp = np.asarray(beta_prime, dtype=np.float64)
    return float(np.mean(np.abs(2.0 * bp / n) ** q) - 1.0 / (q + 1.0))
