"""Two-by-two complex linear algebra for a single qubit.

Matrices are plain ``numpy`` arrays of shape ``(2, 2)`` and dtype ``complex128``.
Density matrices are wrapped in :class:`DensityMatrix`, which validates on
construction. Bloch vectors use the convention ``|0><0| <-> (0, 0, +1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

TOL_HERM = 1e-9
TOL_TRACE = 1e-9
TOL_PSD = 1e-9
TOL_BLOCH = 1e-9
# probabilities further than this outside [0, 1] are an error, not rounding
TOL_PROB_HARD = 1e-6

Mat2 = np.ndarray


class NotHermitian(ValueError):
    pass


class OutsideBlochBall(ValueError):
    pass


class InvalidDensityMatrix(ValueError):
    pass


class ProbabilityOutOfRange(ValueError):
    pass


_PAULI = {
    "I": np.array([[1, 0], [0, 1]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
PAULI_VEC = np.stack([_PAULI["X"], _PAULI["Y"], _PAULI["Z"]])

KET0_PROJ = np.array([[1, 0], [0, 0]], dtype=complex)
KET1_PROJ = np.array([[0, 0], [0, 1]], dtype=complex)


def pauli(which: str) -> Mat2:
    """Return a fresh copy of the Pauli matrix named ``I``, ``X``, ``Y`` or ``Z``."""
    try:
        return _PAULI[which.upper()].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli matrix {which!r}") from None


def as_mat2(m) -> Mat2:
    a = np.asarray(m, dtype=complex)
    if a.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def dagger(m: Mat2) -> Mat2:
    return np.conj(np.asarray(m)).T


def trace(m: Mat2) -> complex:
    return complex(m[0, 0] + m[1, 1])


def hermiticity_error(m: Mat2) -> float:
    return float(np.max(np.abs(m - dagger(m))))


def hermitian_eigenvalues(m: Mat2) -> tuple[float, float]:
    """Eigenvalues ``(l1, l2)`` with ``l1 >= l2`` of a Hermitian 2x2 matrix.

    Uses the quadratic formula on trace and determinant; raises
    :class:`NotHermitian` if ``m`` differs from its adjoint by more than 1e-9.
    """
    m = as_mat2(m)
    if hermiticity_error(m) > TOL_HERM:
        raise NotHermitian(f"matrix is not Hermitian (error {hermiticity_error(m):.3g})")
    a = m[0, 0].real
    d = m[1, 1].real
    b = m[0, 1]
    half_tr = (a + d) / 2
    # discriminant written as a sum of squares so it never goes negative
    disc = math.sqrt(((a - d) / 2) ** 2 + abs(b) ** 2)
    return float(half_tr + disc), float(half_tr - disc)


def trace_norm(m: Mat2) -> float:
    l1, l2 = hermitian_eigenvalues(m)
    return abs(l1) + abs(l2)


class BlochVector(NamedTuple):
    x: float
    y: float
    z: float

    def norm(self) -> float:
        return math.sqrt(self.x**2 + self.y**2 + self.z**2)

    def dot(self, other: Sequence[float]) -> float:
        ox, oy, oz = other
        return self.x * ox + self.y * oy + self.z * oz


def bloch_vector(v: Sequence[float]) -> BlochVector:
    x, y, z = (float(c) for c in v)
    return BlochVector(x, y, z)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated qubit state: Hermitian, unit trace, positive semidefinite."""

    m: Mat2

    def __post_init__(self):
        m = as_mat2(self.m)
        if hermiticity_error(m) > TOL_HERM:
            raise InvalidDensityMatrix("state is not Hermitian")
        if abs(trace(m) - 1) > TOL_TRACE:
            raise InvalidDensityMatrix(f"state has trace {trace(m)}")
        if hermitian_eigenvalues(m)[1] < -TOL_PSD:
            raise InvalidDensityMatrix("state has a negative eigenvalue")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "m", m)

    def __eq__(self, other):
        if not isinstance(other, DensityMatrix):
            return NotImplemented
        return bool(np.array_equal(self.m, other.m))

    def __hash__(self):
        return hash(self.m.tobytes())

    def bloch(self) -> BlochVector:
        return density_to_bloch(self)

    def allclose(self, other: "DensityMatrix", atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.m, other.m, rtol=0, atol=atol))


def bloch_to_density(v: Sequence[float]) -> DensityMatrix:
    """``(I + x X + y Y + z Z) / 2`` for a vector in the closed unit ball."""
    bv = bloch_vector(v)
    if bv.norm() > 1 + TOL_BLOCH:
        raise OutsideBlochBall(f"|v| = {bv.norm():.12g} exceeds 1")
    m = (_PAULI["I"] + bv.x * _PAULI["X"] + bv.y * _PAULI["Y"] + bv.z * _PAULI["Z"]) / 2
    return DensityMatrix(m)


def density_to_bloch(rho: DensityMatrix) -> BlochVector:
    m = rho.m
    return BlochVector(
        float(np.real(trace(m @ _PAULI["X"]))),
        float(np.real(trace(m @ _PAULI["Y"]))),
        float(np.real(trace(m @ _PAULI["Z"]))),
    )


def clamp_probability(p: float) -> float:
    if p < -TOL_PROB_HARD or p > 1 + TOL_PROB_HARD:
        raise ProbabilityOutOfRange(f"probability {p} is outside [0, 1]")
    return min(1.0, max(0.0, p))


def measure_rect(rho: DensityMatrix) -> float:
    """Probability that a computational-basis measurement returns 1."""
    return clamp_probability(float(np.real(trace(rho.m @ KET1_PROJ))))


ZERO_STATE = DensityMatrix(KET0_PROJ)
ONE_STATE = DensityMatrix(KET1_PROJ)
MIXED_STATE = DensityMatrix(_PAULI["I"] / 2)
