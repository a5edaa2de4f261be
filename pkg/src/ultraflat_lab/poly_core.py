"""Coefficient-level unimodular polynomials and their values on the unit circle."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MODULUS_TOL = 1e-12


def _freeze(values) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ComplexPolynomial:
    """Polynomial ``sum_k coeffs[k] z**k`` with arbitrary complex coefficients.

    The degree is ``len(coeffs) - 1``; trailing zeros are kept so that
    ``P - P*`` keeps the degree of ``P``.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        arr = _freeze(self.coeffs)
        if arr.size == 0:
            raise ValueError("polynomial needs at least one coefficient")
        object.__setattr__(self, "coeffs", arr)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def n(self) -> int:
        return self.degree

    def __eq__(self, other):
        if not isinstance(other, ComplexPolynomial):
            return NotImplemented
        return np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __len__(self):
        return self.coeffs.size

    def __repr__(self):
        return f"{type(self).__name__}(degree={self.degree})"


@dataclass(frozen=True, eq=False)
class UnimodularPolynomial(ComplexPolynomial):
    """Member of the class K_n: every coefficient has modulus one."""

    def __post_init__(self):
        super().__post_init__()
        dev = np.abs(np.abs(self.coeffs) - 1.0)
        bad = np.flatnonzero(dev > MODULUS_TOL)
        if bad.size:
            k = int(bad[0])
            raise ValueError(
                f"coefficient {k} has modulus {abs(self.coeffs[k])!r}, "
                f"not within {MODULUS_TOL} of 1"
            )

    @property
    def is_real(self) -> bool:
        """True for Littlewood polynomials (all coefficients +-1)."""
        return bool(np.all(self.coeffs.imag == 0))


@dataclass(frozen=True, eq=False)
class CircleSamples:
    """Values at ``t_j = 2*pi*j/M``, ``j = 0..M-1``."""

    values: np.ndarray

    def __post_init__(self):
        arr = _freeze(self.values)
        if arr.size < 1:
            raise ValueError("need at least one sample")
        object.__setattr__(self, "values", arr)

    @property
    def M(self) -> int:
        return self.values.size

    @property
    def t(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.M) / self.M


def make_unimodular(coeffs) -> UnimodularPolynomial:
    """Validate ``coeffs`` as a unimodular polynomial; nothing is renormalized."""
    coeffs = list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs
    if len(coeffs) == 0:
        raise ValueError("coefficient list is empty")
    return UnimodularPolynomial(coeffs)


def as_polynomial(P) -> ComplexPolynomial:
    if isinstance(P, ComplexPolynomial):
        return P
    return ComplexPolynomial(P)


def conjugate_reciprocal(P):
    """Return ``P*(z) = z**n conj(P)(1/z)``, i.e. coefficients ``conj(a[n-k])``.

    The result has the same type as the input, so unimodularity is kept.
    """
    P = as_polynomial(P)
    return type(P)(np.conj(P.coeffs[::-1]))


def derivative(P) -> ComplexPolynomial:
    P = as_polynomial(P)
    if P.degree == 0:
        return ComplexPolynomial([0.0])
    k = np.arange(1, P.degree + 1)
    return ComplexPolynomial(k * P.coeffs[1:])


def subtract(P, Q) -> ComplexPolynomial:
    """Coefficientwise ``P - Q``; the shorter operand is zero-padded."""
    a = as_polynomial(P).coeffs
    b = as_polynomial(Q).coeffs
    size = max(a.size, b.size)
    out = np.zeros(size, dtype=np.complex128)
    out[: a.size] += a
    out[: b.size] -= b
    return ComplexPolynomial(out)


def default_grid_size(n: int, factor: int = 16) -> int:
    """Smallest power of two that is at least ``factor * (n + 1)``."""
    target = max(1, factor * (n + 1))
    return 1 << (target - 1).bit_length()


def grid_values(coeffs: np.ndarray, M: int) -> np.ndarray:
    """``sum_k coeffs[k] exp(2*pi*i*j*k/M)`` for ``j < M`` as a plain array."""
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    if M < coeffs.size:
        raise ValueError(f"grid size M={M} < degree+1={coeffs.size} would alias")
    buf = np.zeros(M, dtype=np.complex128)
    buf[: coeffs.size] = coeffs
    return np.fft.ifft(buf) * M


def evaluate_on_grid(P, M: int | None = None) -> CircleSamples:
    """Evaluate ``P(e^{it})`` on the uniform grid of size ``M`` by a zero-padded FFT."""
    P = as_polynomial(P)
    if M is None:
        M = default_grid_size(P.degree)
    return CircleSamples(grid_values(P.coeffs, int(M)))


def evaluate_at(P, z) -> np.ndarray:
    """Horner evaluation at arbitrary points ``z``."""
    P = as_polynomial(P)
    z = np.asarray(z, dtype=np.complex128)
    acc = np.zeros_like(z)
    for c in P.coeffs[::-1]:
        acc = acc * z + c
    return acc


def mean_square(P) -> float:
    """Parseval: the circle mean of ``|P|**2`` equals ``sum |a_k|**2``."""
    c = as_polynomial(P).coeffs
    return float(np.sum(c.real**2 + c.imag**2))


def self_convolution_sum(P, power: int = 0) -> complex:
    """``sum_k k**power * a_k * a_{n-k}``, computed from the coefficients."""
    c = as_polynomial(P).coeffs
    k = np.arange(c.size, dtype=np.float64)
    return complex(np.sum(k**power * c * c[::-1]))


def to_json_dict(P) -> dict:
    P = as_polynomial(P)
    return {
        "n": P.degree,
        "coeffs": [[float(c.real), float(c.imag)] for c in P.coeffs],
    }


def from_json_dict(data: dict) -> UnimodularPolynomial:
    try:
        n = int(data["n"])
        pairs = data["coeffs"]
        coeffs = [complex(float(re), float(im)) for re, im in pairs]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed coefficient record: {exc}") from exc
    if len(coeffs) != n + 1:
        raise ValueError(f"expected {n + 1} coefficients, found {len(coeffs)}")
    return make_unimodular(coeffs)


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_polynomial(P, path) -> None:
    atomic_write_text(path, json.dumps(to_json_dict(P)) + "\n")


def load_polynomial(path) -> UnimodularPolynomial:
    with open(path) as fh:
        return from_json_dict(json.load(fh))
