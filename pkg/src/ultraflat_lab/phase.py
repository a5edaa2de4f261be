"""Modulus, continuous phase and angular speed of a polynomial on the unit circle.

Everything here is sampled on the grid ``t_j = 2*pi*j/M``.  The angular speed
is always obtained from the ratio ``Re(z P'(z) / P(z))`` at ``z = e^{it}``,
never by differencing the phase.
"""

from __future__ import annotations

import io
import json
from dataclasses import asdict, dataclass

import numpy as np

from .poly_core import (
    CircleSamples,
    as_polynomial,
    conjugate_reciprocal,
    default_grid_size,
    grid_values,
)

NEAR_ZERO_REL = 1e-9
DEFAULT_PROBES = np.linspace(0.0, 1.0, 201)


class NearZeroModulus(ValueError):
    """The polynomial (nearly) vanishes at a grid point, so its phase is undefined."""

    def __init__(self, t: float, modulus: float, cutoff: float):
        self.t = float(t)
        self.modulus = float(modulus)
        self.cutoff = float(cutoff)
        super().__init__(
            f"|P(e^(it))| = {modulus:.3e} below cutoff {cutoff:.3e} at t = {t:.17g}"
        )


@dataclass(frozen=True, eq=False)
class PhaseProfile:
    n: int
    M: int
    R: np.ndarray
    alpha: np.ndarray
    alpha_prime: np.ndarray
    beta: np.ndarray
    min_modulus: float
    speed_range: tuple[float, float]
    second_deriv_max_scaled: float
    r_prime_max_scaled: float

    @property
    def t(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.M) / self.M

    @property
    def speed_margin(self) -> tuple[float, float]:
        """``(min alpha'/n, 1 - max alpha'/n)``; both tend to 0 for ultraflat input."""
        lo, hi = self.speed_range
        return lo / self.n, 1.0 - hi / self.n

    def summary(self) -> dict:
        return {
            "n": self.n,
            "M": self.M,
            "min_modulus": self.min_modulus,
            "speed_range": list(self.speed_range),
            "speed_margin": list(self.speed_margin),
            "second_deriv_max_scaled": self.second_deriv_max_scaled,
            "r_prime_max_scaled": self.r_prime_max_scaled,
        }

    def to_json(self) -> str:
        data = self.summary()
        for name in ("R", "alpha", "alpha_prime", "beta"):
            data[name] = getattr(self, name).tolist()
        return json.dumps(data)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,R,alpha,alpha_prime,beta\n")
        for row in zip(self.t, self.R, self.alpha, self.alpha_prime, self.beta):
            buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class DistributionReport:
    n: int
    xs: np.ndarray
    measure: np.ndarray
    sup_deviation: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "xs": self.xs.tolist(),
                "measure": self.measure.tolist(),
                "sup_deviation": self.sup_deviation,
            }
        )


@dataclass(frozen=True)
class FlatnessReport:
    """Flatness of ``P`` relative to ``sqrt(n+1)``.

    ``eps_grid`` only looks at the grid; ``eps`` is a certified upper bound
    for all real ``t``.
    """

    n: int
    M: int
    eps: float
    eps_grid: float
    min_ratio: float
    max_ratio: float
    slack: float

    def to_dict(self) -> dict:
        return asdict(self)


def _cutoff(n: int) -> float:
    return NEAR_ZERO_REL * np.sqrt(n + 1)


def _check_modulus(values: np.ndarray, cutoff: float) -> None:
    mod = np.abs(values)
    j = int(np.argmin(mod))
    if mod[j] < cutoff:
        raise NearZeroModulus(2 * np.pi * j / values.size, mod[j], cutoff)


def _grid_size(P, M):
    return default_grid_size(P.degree) if M is None else int(M)


def modulus_profile(samples: CircleSamples) -> np.ndarray:
    return np.abs(samples.values)


def phase_derivative(P, M: int | None = None) -> np.ndarray:
    """Angular speed ``alpha'(t_j) = Re(e^{it} P'(e^{it}) / P(e^{it}))``."""
    P = as_polynomial(P)
    M = _grid_size(P, M)
    values = grid_values(P.coeffs, M)
    _check_modulus(values, _cutoff(P.degree))
    k = np.arange(P.degree + 1)
    zdp = grid_values(k * P.coeffs, M)
    return np.real(zdp / values)


def unwrap_phase(samples: CircleSamples, n: int | None = None) -> np.ndarray:
    """Continuous branch of ``arg`` on the grid, anchored at the principal value at ``t = 0``.

    The near-zero cutoff scales with ``sqrt(n+1)``; without ``n`` the RMS of
    the samples is used, which is the same number for unimodular input.
    """
    values = samples.values
    scale = np.sqrt(n + 1) if n is not None else np.sqrt(np.mean(np.abs(values) ** 2))
    _check_modulus(values, NEAR_ZERO_REL * scale)
    return np.unwrap(np.angle(values))


def winding_number(samples: CircleSamples, n: int | None = None) -> int:
    """``(alpha(2*pi) - alpha(0)) / (2*pi)``, closing the loop back to ``t = 0``."""
    alpha = unwrap_phase(samples, n)
    v = samples.values
    closing = np.angle(v[0] / v[-1])
    total = alpha[-1] - alpha[0] + closing
    return int(round(total / (2 * np.pi)))


def conjugate_speed_identity(P, M: int | None = None) -> float:
    """Largest violation of ``alpha' + alpha*' = n`` over the grid."""
    P = as_polynomial(P)
    M = _grid_size(P, M)
    a = phase_derivative(P, M)
    b = phase_derivative(conjugate_reciprocal(P), M)
    return float(np.max(np.abs(a + b - P.degree)))


def beta_profile(P, M: int | None = None) -> np.ndarray:
    """Half phase gap ``(alpha - alpha*)/2`` with both branches anchored at ``t = 0``."""
    P = as_polynomial(P)
    M = _grid_size(P, M)
    n = P.degree
    alpha = unwrap_phase(CircleSamples(grid_values(P.coeffs, M)), n)
    star = conjugate_reciprocal(P)
    alpha_star = unwrap_phase(CircleSamples(grid_values(star.coeffs, M)), n)
    return 0.5 * (alpha - alpha_star)


def sine_beta_identity(P, M: int | None = None) -> float:
    """Largest violation of ``|P - P*| = 2 R |sin(beta)|`` over the grid.

    ``|sin(beta)|`` only depends on ``beta`` modulo ``pi``, so it is taken from
    the pointwise half-angle of ``P conj(P*)``; grid zeros of ``P`` (where
    ``P*`` vanishes too) then contribute ``0 = 0`` instead of failing.
    """
    P = as_polynomial(P)
    M = _grid_size(P, M)
    values = grid_values(P.coeffs, M)
    star = grid_values(conjugate_reciprocal(P).coeffs, M)
    half_gap = 0.5 * np.angle(values * np.conj(star))
    lhs = np.abs(values - star)
    rhs = 2 * np.abs(values) * np.abs(np.sin(half_gap))
    return float(np.max(np.abs(lhs - rhs)))


def speed_distribution(alpha_prime, n: int, xs=None) -> DistributionReport:
    """``meas{t : 0 <= alpha'(t) <= n x}`` from grid samples of the angular speed."""
    ap = np.asarray(alpha_prime, dtype=np.float64)
    xs = DEFAULT_PROBES if xs is None else np.asarray(xs, dtype=np.float64)
    M = ap.size
    inside = np.sort(ap[ap >= 0.0])
    counts = np.searchsorted(inside, n * xs, side="right")
    measure = 2 * np.pi * counts / M
    sup_dev = float(np.max(np.abs(measure - 2 * np.pi * xs))) if xs.size else 0.0
    return DistributionReport(n=n, xs=xs, measure=measure, sup_deviation=sup_dev)


def angular_speed_distribution(P, M: int | None = None, xs=None) -> DistributionReport:
    P = as_polynomial(P)
    return speed_distribution(phase_derivative(P, _grid_size(P, M)), P.degree, xs)


def _hermite_extremes(F, dF, h):
    """Max and min over each grid interval of the cubic Hermite interpolant of F."""
    F0, F1 = F, np.roll(F, -1)
    d0, d1 = dF * h, np.roll(dF, -1) * h
    # H(s) = c3 s^3 + c2 s^2 + c1 s + c0 on s in [0, 1]
    c3 = 2 * F0 + d0 - 2 * F1 + d1
    c2 = -3 * F0 - 2 * d0 + 3 * F1 - d1
    c1 = d0
    hi = np.maximum(F0, F1)
    lo = np.minimum(F0, F1)
    a, b, c = 3 * c3, 2 * c2, c1
    disc = b * b - 4 * a * c
    sq = np.sqrt(np.maximum(disc, 0.0))
    quad = np.abs(a) > 1e-14 * (np.abs(b) + np.abs(c) + 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        safe_a = np.where(quad, a, 1.0)
        safe_b = np.where(b != 0, b, 1.0)
        roots = (
            np.where(quad, (-b + sq) / (2 * safe_a), -c / safe_b),
            np.where(quad, (-b - sq) / (2 * safe_a), -c / safe_b),
        )
    for r in roots:
        ok = (disc >= 0) & np.isfinite(r) & (r > 0) & (r < 1)
        s = np.where(ok, r, 0.0)
        val = ((c3 * s + c2) * s + c1) * s + F0
        hi = np.where(ok, np.maximum(hi, val), hi)
        lo = np.where(ok, np.minimum(lo, val), lo)
    return hi, lo


def flatness_report(P, M: int | None = None) -> FlatnessReport:
    """Certified flatness of ``P`` against ``sqrt(n+1)``.

    ``F(t) = |P(e^{it})|**2`` is a real trigonometric polynomial of degree n,
    so Bernstein's inequality gives ``max|F''''| <= n**4 max F``.  Between two
    grid points F differs from its cubic Hermite interpolant (built from the
    exact values of F and F') by at most ``h**4/384 * n**4 * max F``.  The
    interpolant's extremes plus that slack bound F everywhere.
    """
    P = as_polynomial(P)
    n = P.degree
    M = _grid_size(P, M)
    if M < 2 * n + 2:
        raise ValueError(f"certification needs M >= 2(n+1), got M={M}")
    root = np.sqrt(n + 1)
    values = grid_values(P.coeffs, M)
    k = np.arange(n + 1)
    dvalues = 1j * grid_values(k * P.coeffs, M)
    F = values.real**2 + values.imag**2
    dF = 2 * np.real(np.conj(values) * dvalues)
    h = 2 * np.pi / M
    R = np.sqrt(F)
    eps_grid = float(max(R.max() / root - 1.0, 1.0 - R.min() / root))

    kappa = (h * n) ** 4 / 384.0
    if kappa >= 1.0:
        raise ValueError(f"grid too coarse for certification (M={M}, n={n})")
    hi, lo = _hermite_extremes(F, dF, h)
    f_max = hi.max() / (1.0 - kappa)
    slack = kappa * f_max
    upper = np.sqrt(hi.max() + slack)
    lower = np.sqrt(max(lo.min() - slack, 0.0))
    eps = float(max(upper / root - 1.0, 1.0 - lower / root, eps_grid))
    return FlatnessReport(
        n=n,
        M=M,
        eps=eps,
        eps_grid=eps_grid,
        min_ratio=float(lower / root),
        max_ratio=float(upper / root),
        slack=float(slack / (n + 1)),
    )


def phase_profile(P, M: int | None = None) -> PhaseProfile:
    """All phase quantities of ``P`` on one grid, plus the scaled diagnostics."""
    P = as_polynomial(P)
    n = P.degree
    M = _grid_size(P, M)
    values = grid_values(P.coeffs, M)
    _check_modulus(values, _cutoff(n))
    k = np.arange(n + 1)
    zdp = grid_values(k * P.coeffs, M)
    R = np.abs(values)
    alpha = np.unwrap(np.angle(values))
    alpha_prime = np.real(zdp / values)
    beta = beta_profile(P, M)
    h = 2 * np.pi / M
    alpha_second = (np.roll(alpha_prime, -1) - np.roll(alpha_prime, 1)) / (2 * h)
    # R' = Re(conj(P) dP/dt) / R with dP/dt = i z P'(z)
    r_prime = np.real(np.conj(values) * 1j * zdp) / R
    scale = max(n, 1)
    return PhaseProfile(
        n=n,
        M=M,
        R=R,
        alpha=alpha,
        alpha_prime=alpha_prime,
        beta=beta,
        min_modulus=float(R.min()),
        speed_range=(float(alpha_prime.min()), float(alpha_prime.max())),
        second_deriv_max_scaled=float(np.max(np.abs(alpha_second)) / scale**2),
        r_prime_max_scaled=float(np.max(np.abs(r_prime)) / scale**1.5),
    )
