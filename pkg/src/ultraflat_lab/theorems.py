"""Measured left-hand sides against the asymptotic right-hand sides.

Ratio-type verdicts should approach 1 along an ultraflat sequence.  The
little-o statements (T25, T26, L31) carry a normalized residual in ``ratio``
that should approach 0.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .phase import angular_speed_distribution, flatness_report, phase_derivative
from .poly_core import (
    as_polynomial,
    conjugate_reciprocal,
    default_grid_size,
    derivative,
    grid_values,
    self_convolution_sum,
    subtract,
)
from .quadrature import check_q, interval_lemma37_check, kq_constant, moment_39_check

THEOREM_IDS = (
    "T14", "T21", "T22", "T23", "T24", "T25", "T26",
    "T27a", "T27b", "L31", "L37", "L38", "L39", "M39",
)
Q_DEPENDENT = frozenset({"T21", "T24", "T27a", "T27b", "L38", "L39", "M39"})
RESIDUAL_IDS = frozenset({"T25", "T26", "L31"})
DEGENERATE_REL = 1e-12
DERIV_FACTOR = 16
SYNTHETIC_M = 1 << 16


@dataclass(frozen=True)
class TheoremVerdict:
    theorem_id: str
    n: int | None
    q: float | None
    lhs: float
    rhs: float
    ratio: float
    eps_achieved: float = math.nan
    degenerate: bool = False
    extras: dict = field(default_factory=dict)

    @property
    def is_residual(self) -> bool:
        return self.theorem_id in RESIDUAL_IDS

    @property
    def deviation(self) -> float:
        """Distance from the limit: ``|ratio - 1|``, or the residual itself."""
        return self.ratio if self.is_residual else abs(self.ratio - 1.0)

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem_id,
            "q": self.q,
            "n": self.n,
            "eps": self.eps_achieved,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "degenerate": self.degenerate,
            "extras": self.extras,
        }


def _verdict(theorem_id, n, q, lhs, rhs, eps, **extras) -> TheoremVerdict:
    lhs = float(lhs)
    rhs = float(rhs)
    if theorem_id in RESIDUAL_IDS:
        ratio = lhs / rhs
        degenerate = False
    else:
        ratio = lhs / rhs if rhs > 0 else math.nan
        degenerate = lhs < DEGENERATE_REL * rhs
    return TheoremVerdict(theorem_id, n, q, lhs, rhs, ratio, float(eps), degenerate, extras)


def _eps(P, eps):
    return flatness_report(P).eps if eps is None else eps


def median_smooth(values, window: int = 3) -> np.ndarray:
    """Running median with a centered window, truncated at the ends."""
    v = np.asarray(values, dtype=np.float64)
    half = window // 2
    return np.array([np.median(v[max(0, i - half): i + half + 1]) for i in range(v.size)])


@dataclass
class ConvergenceTable:
    theorem_id: str
    q: float | None
    rows: list[TheoremVerdict]

    def __post_init__(self):
        for row in self.rows:
            if row.theorem_id != self.theorem_id or row.q != self.q:
                raise ValueError("all rows of a table must share theorem and q")
        self.rows = sorted(self.rows, key=lambda r: r.n)

    def trend(self, max_eps: float | None = None) -> dict:
        """Deviation from the limit along n, median-smoothed.

        Degenerate rows, and rows flatter than ``max_eps`` allows, are left out.
        """
        rows = [r for r in self.rows if not r.degenerate]
        if max_eps is not None:
            rows = [r for r in rows if r.eps_achieved <= max_eps]
        dev = [r.deviation for r in rows]
        smooth = median_smooth(dev) if dev else np.array([])
        return {
            "ns": [r.n for r in rows],
            "eps": [r.eps_achieved for r in rows],
            "ratios": [r.ratio for r in rows],
            "deviation": dev,
            "smoothed": smooth.tolist(),
            "last_deviation": dev[-1] if dev else math.nan,
            "last_eps": rows[-1].eps_achieved if rows else math.nan,
            "nonincreasing": bool(smooth.size == 0 or smooth[-1] <= smooth[0]),
        }

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        if header:
            buf.write("theorem,q,n,eps,lhs,rhs,ratio,degenerate\n")
        for r in self.rows:
            q = "" if r.q is None else f"{r.q:.17g}"
            buf.write(
                f"{r.theorem_id},{q},{r.n},{r.eps_achieved:.17g},{r.lhs:.17g},"
                f"{r.rhs:.17g},{r.ratio:.17g},{int(r.degenerate)}\n"
            )
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem_id,
            "q": self.q,
            "rows": [r.to_dict() for r in self.rows],
            "trend": self.trend(),
        }


def tables_to_csv(tables) -> str:
    parts = ["theorem,q,n,eps,lhs,rhs,ratio,degenerate\n"]
    parts += [t.to_csv(header=False) for t in tables]
    return "".join(parts)


def tables_to_json(tables) -> str:
    return json.dumps([t.to_dict() for t in tables], indent=1)


# -- theorem checks on a single polynomial -----------------------------------


def _gap(P):
    return subtract(P, conjugate_reciprocal(P))


def verify_T21(P, q: float, M: int | None = None, eps=None) -> TheoremVerdict:
    q = check_q(q)
    P = as_polynomial(P)
    n = P.degree
    M = M or default_grid_size(n)
    D = grid_values(_gap(P).coeffs, M)
    lhs = np.mean(np.abs(D) ** q)
    rhs = 2**q * kq_constant(q) * n ** (q / 2)
    return _verdict("T21", n, q, lhs, rhs, _eps(P, eps), M=M)


def verify_T22(P, M: int | None = None, eps=None) -> TheoremVerdict:
    P = as_polynomial(P)
    n = P.degree
    d = _gap(P).coeffs
    lhs = float(np.sum(d.real**2 + d.imag**2))
    M = M or default_grid_size(n)
    quad = float(np.mean(np.abs(grid_values(d, M)) ** 2))
    defect = abs(quad - lhs) / max(lhs, 1e-300)
    return _verdict("T22", n, None, lhs, 2 * n, _eps(P, eps), quadrature=quad, parseval_defect=defect)


def verify_T23(P, M: int | None = None, eps=None) -> TheoremVerdict:
    P = as_polynomial(P)
    n = P.degree
    d = _gap(P).coeffs
    k = np.arange(n + 1)
    lhs = float(np.sum(k**2 * (d.real**2 + d.imag**2)))
    M = M or default_grid_size(n)
    quad = float(np.mean(np.abs(grid_values(derivative(_gap(P)).coeffs, M)) ** 2))
    defect = abs(quad - lhs) / max(lhs, 1e-300)
    return _verdict("T23", n, None, lhs, 2 * n**3 / 3, _eps(P, eps), quadrature=quad, parseval_defect=defect)


def _central_difference(f, M):
    h = 2 * np.pi / M
    return (np.roll(f, -1) - np.roll(f, 1)) / (2 * h)


def verify_T24(P, q: float, factor: int = DERIV_FACTOR, method: str = "exact", eps=None) -> TheoremVerdict:
    """Mean of ``|d/dt |P - P*||**q``.

    ``method="exact"`` uses ``Re(conj(D) dD/dt) / |D|`` with ``dD/dt`` from
    the coefficients; ``method="fd"`` uses central differences of ``|D|``,
    which lose the kinks of ``|D|`` at its near-zeros (a bias of order
    ``n/M`` that does not shrink with n).  Points where ``|D|`` is below
    ``1e-9 sqrt(n+1)`` are left out; their measure is ``excluded_measure``.
    """
    q = check_q(q)
    P = as_polynomial(P)
    n = P.degree
    M = default_grid_size(n, factor)
    d = _gap(P).coeffs
    D = grid_values(d, M)
    mag = np.abs(D)
    keep = mag >= 1e-9 * math.sqrt(n + 1)
    if method == "exact":
        D_t = 1j * grid_values(np.arange(n + 1) * d, M)
        slope = np.zeros(M)
        slope[keep] = np.real(np.conj(D[keep]) * D_t[keep]) / mag[keep]
    elif method == "fd":
        slope = _central_difference(mag, M)
        keep &= np.roll(keep, 1) & np.roll(keep, -1)
    else:
        raise ValueError(f"unknown derivative method {method!r}")
    lhs = np.sum(np.abs(slope[keep]) ** q) / M
    excluded = 2 * np.pi * (M - np.count_nonzero(keep)) / M
    rhs = kq_constant(q) / (q + 1) * n ** (1.5 * q)
    return _verdict("T24", n, q, lhs, rhs, _eps(P, eps), M=M, method=method, excluded_measure=excluded)


def verify_T25(P, eps=None) -> TheoremVerdict:
    P = as_polynomial(P)
    n = P.degree
    s = self_convolution_sum(P, 0)
    return _verdict("T25", n, None, abs(s), max(n, 1), _eps(P, eps), real=s.real, imag=s.imag)


def verify_T26(P, eps=None) -> TheoremVerdict:
    P = as_polynomial(P)
    n = P.degree
    s = self_convolution_sum(P, 2)
    return _verdict("T26", n, None, abs(s), max(n, 1) ** 3, _eps(P, eps), real=s.real, imag=s.imag)


def verify_T27(P, q: float, factor: int = DERIV_FACTOR, method: str = "exact", eps=None):
    """Real part ``f = Re P(e^{it})`` and its derivative, against K(q) n^{q/2} and K(q)/(q+1) n^{3q/2}.

    ``f'`` is ``-Im(z P'(z))`` on the grid, or central differences of ``f``
    with ``method="fd"``.
    """
    q = check_q(q)
    P = as_polynomial(P)
    n = P.degree
    eps = _eps(P, eps)
    M = default_grid_size(n, factor)
    f = grid_values(P.coeffs, M).real
    if method == "exact":
        fp = -grid_values(np.arange(n + 1) * P.coeffs, M).imag
    elif method == "fd":
        fp = _central_difference(f, M)
    else:
        raise ValueError(f"unknown derivative method {method!r}")
    K = kq_constant(q)
    first = _verdict("T27a", n, q, np.mean(np.abs(f) ** q), K * n ** (q / 2), eps, M=M)
    second = _verdict("T27b", n, q, np.mean(np.abs(fp) ** q), K / (q + 1) * n ** (1.5 * q), eps, M=M, method=method)
    return first, second


def verify_T14(P, M: int | None = None, eps=None) -> TheoremVerdict:
    P = as_polynomial(P)
    n = P.degree
    M = M or default_grid_size(n)
    dp = np.abs(grid_values(derivative(P).coeffs, M))
    ds = np.abs(grid_values(derivative(conjugate_reciprocal(P)).coeffs, M))
    lhs = np.mean((dp - ds) ** 2)
    upper = float(np.mean(np.abs(grid_values(derivative(_gap(P)).coeffs, M)) ** 2))
    return _verdict("T14", n, None, lhs, n**3 / 3, _eps(P, eps), triangle_upper=upper)


def verify_L31(P, M: int | None = None, xs=None, eps=None) -> TheoremVerdict:
    """Uniform distribution of the normalized angular speed; ratio is ``sup_deviation / 2pi``."""
    P = as_polynomial(P)
    report = angular_speed_distribution(P, M, xs)
    return _verdict("L31", P.degree, None, report.sup_deviation, 2 * np.pi, _eps(P, eps))


def verify_M39(P, q: float, M: int | None = None, eps=None) -> TheoremVerdict:
    """Moment ``mean |2 beta'|**q`` of a polynomial's own beta against ``n**q/(q+1)``."""
    q = check_q(q)
    P = as_polynomial(P)
    n = P.degree
    beta_prime = phase_derivative(P, M) - n / 2
    lhs = np.mean(np.abs(2 * beta_prime) ** q)
    return _verdict("M39", n, q, lhs, n**q / (q + 1), _eps(P, eps), delta=moment_39_check(beta_prime, n, q))


def verify_L37(A: float, B: float, q: float, interval) -> TheoremVerdict:
    """Ratio is the measured defect over the bound ``pi/|B|`` (should stay <= 1)."""
    defect, bound = interval_lemma37_check(A, B, q, interval)
    return TheoremVerdict("L37", None, float(q), defect, bound, defect / bound, extras={"A": A, "B": B})


# -- synthetic beta family ----------------------------------------------------


def synthetic_beta(n: int, M: int = SYNTHETIC_M):
    """``beta(t) = n t**2/(4 pi) - n t/2`` on the grid, with its first two derivatives.

    ``|2 beta'|/n = |t/pi - 1|`` is exactly uniform on [0, 1], and
    ``beta'' = n/(2 pi)``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    t = 2 * np.pi * np.arange(M) / M
    beta = n * t * t / (4 * np.pi) - n * t / 2
    beta_prime = 0.5 * n * (t / np.pi - 1.0)
    beta_second = np.full(M, n / (2 * np.pi))
    return beta, beta_prime, beta_second


def verify_L38(n: int, q: float, M: int = SYNTHETIC_M) -> TheoremVerdict:
    q = check_q(q)
    beta, _, second = synthetic_beta(n, M)
    lhs = np.mean(np.abs(np.sin(beta)) ** q)
    return _verdict("L38", n, q, lhs, kq_constant(q), 0.0, gamma_n2=float(np.max(np.abs(second))) / n**2)


def verify_L39(n: int, q: float, M: int = SYNTHETIC_M) -> TheoremVerdict:
    q = check_q(q)
    beta, beta_prime, _ = synthetic_beta(n, M)
    lhs = np.mean(np.abs(np.cos(beta) * beta_prime / n) ** q)
    return _verdict("L39", n, q, lhs, kq_constant(q) / (2**q * (q + 1)), 0.0)


def synthetic_moment_check(n: int, q: float, M: int = SYNTHETIC_M) -> float:
    _, beta_prime, _ = synthetic_beta(n, M)
    return moment_39_check(beta_prime, n, q)


# -- sweeps -------------------------------------------------------------------


def _cells(theorem_ids, qs):
    ids = []
    for tid in theorem_ids:
        if tid == "T27":
            ids += ["T27a", "T27b"]
        elif tid in THEOREM_IDS and tid != "L37":
            ids.append(tid)
        else:
            raise ValueError(f"unknown or non-sweepable theorem id {tid!r}")
    for tid in ids:
        if tid in Q_DEPENDENT:
            for q in qs:
                yield tid, check_q(q)
        else:
            yield tid, None


def _verify_cell(tid, q, P, eps):
    n = P.degree
    if tid == "T21":
        return verify_T21(P, q, eps=eps)
    if tid == "T22":
        return verify_T22(P, eps=eps)
    if tid == "T23":
        return verify_T23(P, eps=eps)
    if tid == "T24":
        return verify_T24(P, q, eps=eps)
    if tid == "T25":
        return verify_T25(P, eps=eps)
    if tid == "T26":
        return verify_T26(P, eps=eps)
    if tid in ("T27a", "T27b"):
        a, b = verify_T27(P, q, eps=eps)
        return a if tid == "T27a" else b
    if tid == "T14":
        return verify_T14(P, eps=eps)
    if tid == "L31":
        return verify_L31(P, eps=eps)
    if tid == "M39":
        return verify_M39(P, q, eps=eps)
    if tid == "L38":
        return verify_L38(n, q)
    if tid == "L39":
        return verify_L39(n, q)
    raise ValueError(tid)


def sweep_verify(sequence, theorem_ids, qs=(2.0,)) -> list[ConvergenceTable]:
    """One table per (theorem, q) over a sweep.

    ``sequence`` holds ``(n, P)`` or ``(n, P, trace)`` entries, e.g. the
    output of ``flat_sweep``.
    """
    cells = list(_cells(theorem_ids, qs))
    if not cells:
        return []
    entries = [(item[1], flatness_report(item[1]).eps) for item in sequence]
    if not entries:
        raise ValueError("empty sequence")
    tables = []
    for tid, q in cells:
        rows = [_verify_cell(tid, q, P, eps) for P, eps in entries]
        tables.append(ConvergenceTable(tid, q, rows))
    return tables


def verify_all(P, theorem_ids, qs=(2.0,)) -> list[TheoremVerdict]:
    eps = flatness_report(P).eps
    return [_verify_cell(tid, q, P, eps) for tid, q in _cells(theorem_ids, qs)]
