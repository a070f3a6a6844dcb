"""Gates on one qubit, all realized as Kraus channels.

Four variants cover the gate alphabets: :class:`Identity`, :class:`BitFlip`,
:class:`EraseTo`, :class:`Unitary` (axis and angle, global phase ignored) and
:class:`Channel` (an explicit Kraus list). Every gate also has a 4x4 real
transfer matrix ``T[i, j] = tr(P_i C(P_j)) / 2`` over ``(I, X, Y, Z)``, which
is how numerically specified gates are compared to the canonical ones.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .qubit_core import (
    PAULI_VEC,
    DensityMatrix,
    Mat2,
    as_mat2,
    bloch_vector,
    dagger,
    pauli,
)

CPTP_TOL = 1e-9
CLASS_TOL = 1e-9
N_CHANNEL_PARAMS = 32

_P4 = np.stack([pauli("I"), pauli("X"), pauli("Y"), pauli("Z")])


class InvalidGate(ValueError):
    pass


class GateClass(enum.Enum):
    CLASSICAL_REVERSIBLE = "cr"
    CLASSICAL_IRREVERSIBLE = "ci"
    QUANTUM_REVERSIBLE = "qr"
    QUANTUM_IRREVERSIBLE = "qi"

    @property
    def label(self) -> str:
        return {
            "cr": "classical reversible",
            "ci": "classical (ir)reversible",
            "qr": "quantum reversible",
            "qi": "quantum (ir)reversible",
        }[self.value]

    @property
    def is_reversible(self) -> bool:
        return self in (GateClass.CLASSICAL_REVERSIBLE, GateClass.QUANTUM_REVERSIBLE)


@dataclass(frozen=True)
class Identity:
    def kraus(self) -> tuple[Mat2, ...]:
        return (pauli("I"),)


@dataclass(frozen=True)
class BitFlip:
    def kraus(self) -> tuple[Mat2, ...]:
        return (pauli("X"),)


@dataclass(frozen=True)
class EraseTo:
    target: int

    def __post_init__(self):
        if self.target not in (0, 1):
            raise InvalidGate(f"erasure target must be 0 or 1, got {self.target!r}")

    def kraus(self) -> tuple[Mat2, ...]:
        return erasure_kraus(self.target)


@dataclass(frozen=True)
class Unitary:
    """``cos(angle/2) I - i sin(angle/2) (axis . sigma)``."""

    axis: tuple[float, float, float]
    angle: float

    def __post_init__(self):
        ax = bloch_vector(self.axis)
        if abs(ax.norm() - 1) > CPTP_TOL:
            raise InvalidGate(f"rotation axis must be a unit vector, |axis| = {ax.norm()}")
        if not math.isfinite(self.angle):
            raise InvalidGate("rotation angle must be finite")
        object.__setattr__(self, "axis", tuple(ax))
        object.__setattr__(self, "angle", float(self.angle))

    def matrix(self) -> Mat2:
        n_sigma = np.tensordot(np.asarray(self.axis), PAULI_VEC, axes=1)
        half = self.angle / 2
        return math.cos(half) * pauli("I") - 1j * math.sin(half) * n_sigma

    def kraus(self) -> tuple[Mat2, ...]:
        return (self.matrix(),)

    def inverse(self) -> "Unitary":
        return Unitary(self.axis, -self.angle)


@dataclass(frozen=True, eq=False)
class Channel:
    kraus_ops: tuple[Mat2, ...]

    def __post_init__(self):
        ops = tuple(as_mat2(k) for k in self.kraus_ops)
        if not 1 <= len(ops) <= 4:
            raise InvalidGate(f"a channel needs 1 to 4 Kraus operators, got {len(ops)}")
        if not is_cptp(ops):
            raise InvalidGate("Kraus operators are not trace preserving")
        for k in ops:
            k.flags.writeable = False
        object.__setattr__(self, "kraus_ops", ops)

    def kraus(self) -> tuple[Mat2, ...]:
        return self.kraus_ops

    def __eq__(self, other):
        if not isinstance(other, Channel):
            return NotImplemented
        return len(self.kraus_ops) == len(other.kraus_ops) and all(
            np.array_equal(a, b) for a, b in zip(self.kraus_ops, other.kraus_ops)
        )

    def __hash__(self):
        return hash(tuple(k.tobytes() for k in self.kraus_ops))


Gate = Union[Identity, BitFlip, EraseTo, Unitary, Channel]
CLASSICAL_GATES = (Identity(), BitFlip(), EraseTo(0), EraseTo(1))


def erasure_kraus(target: int) -> tuple[Mat2, Mat2]:
    k1 = np.array([[1, 0], [0, 0]], dtype=complex)
    k2 = np.array([[0, 1], [0, 0]], dtype=complex)
    if target == 0:
        return k1, k2
    if target == 1:
        x = pauli("X")
        return x @ k1, x @ k2
    raise InvalidGate(f"erasure target must be 0 or 1, got {target!r}")


def rotation_x(angle: float) -> Unitary:
    return Unitary((1.0, 0.0, 0.0), angle)


def is_cptp(kraus: Sequence[Mat2]) -> bool:
    total = sum(dagger(k) @ k for k in kraus)
    return bool(np.max(np.abs(total - np.eye(2))) <= CPTP_TOL)


def apply_kraus(m: Mat2, kraus: Sequence[Mat2]) -> Mat2:
    out = sum(k @ m @ dagger(k) for k in kraus)
    return (out + dagger(out)) / 2


def apply_gate(rho: DensityMatrix, gate: Gate) -> DensityMatrix:
    return DensityMatrix(apply_kraus(rho.m, gate.kraus()))


def transfer_matrix(kraus) -> np.ndarray:
    """Real 4x4 Pauli transfer matrix; broadcasts over leading axes of ``(..., k, 2, 2)``."""
    k = np.asarray(kraus, dtype=complex)
    t = np.einsum("iab,...kbc,jcd,...kad->...ij", _P4, k, _P4, np.conj(k), optimize=True)
    return t.real / 2


def gate_transfer(gate: Gate) -> np.ndarray:
    return transfer_matrix(np.stack(gate.kraus()))


_CANON_T = {
    "I": transfer_matrix(Identity().kraus()),
    "X": transfer_matrix(BitFlip().kraus()),
    "E0": transfer_matrix(erasure_kraus(0)),
    "E1": transfer_matrix(erasure_kraus(1)),
}


def _close(t: np.ndarray, name: str) -> bool:
    return bool(np.max(np.abs(t - _CANON_T[name])) <= CLASS_TOL)


def is_unitary_channel(t: np.ndarray) -> bool:
    # unital, no translation, and the Bloch block is a proper rotation
    if np.max(np.abs(t[0] - [1, 0, 0, 0])) > CLASS_TOL or np.max(np.abs(t[1:, 0])) > CLASS_TOL:
        return False
    r = t[1:, 1:]
    return bool(np.max(np.abs(r.T @ r - np.eye(3))) <= CLASS_TOL and np.linalg.det(r) > 0)


def gate_in_class(gate: Gate, cls: GateClass) -> bool:
    if cls is GateClass.QUANTUM_IRREVERSIBLE:
        return True
    if isinstance(gate, (Identity, BitFlip)):
        return True
    if isinstance(gate, EraseTo):
        return cls is GateClass.CLASSICAL_IRREVERSIBLE
    t = gate_transfer(gate)
    if cls is GateClass.QUANTUM_REVERSIBLE:
        return is_unitary_channel(t)
    names = ("I", "X") if cls is GateClass.CLASSICAL_REVERSIBLE else ("I", "X", "E0", "E1")
    return any(_close(t, n) for n in names)


def unitary_from_matrix(u: Mat2) -> Unitary:
    """Axis-angle form of a 2x2 unitary, dropping its global phase."""
    u = as_mat2(u)
    if np.max(np.abs(dagger(u) @ u - np.eye(2))) > CPTP_TOL:
        raise InvalidGate("matrix is not unitary")
    su = u / np.sqrt(np.linalg.det(u))
    c = float(np.real(su[0, 0] + su[1, 1]) / 2)
    ns = np.array([float(np.real(1j * np.trace(su @ p)) / 2) for p in PAULI_VEC])
    s = float(np.linalg.norm(ns))
    if s < 1e-15:
        # +-I; the sign is a global phase
        return Unitary((0.0, 0.0, 1.0), 0.0)
    return Unitary(tuple(ns / s), 2 * math.atan2(s, c))


def compose(first: Gate, second: Gate) -> Gate:
    """Gate equivalent to applying ``first`` and then ``second``.

    Classical reversible pairs stay exact; unitary pairs fuse into one
    :class:`Unitary`; anything else becomes a :class:`Channel`.
    """
    if isinstance(first, (Identity, BitFlip)) and isinstance(second, (Identity, BitFlip)):
        flips = isinstance(first, BitFlip) + isinstance(second, BitFlip)
        return BitFlip() if flips == 1 else Identity()
    k1, k2 = first.kraus(), second.kraus()
    if len(k1) == 1 and len(k2) == 1:
        return unitary_from_matrix(k2[0] @ k1[0])
    ops = [b @ a for b in k2 for a in k1]
    if len(ops) > 4:
        return compress_kraus(ops)
    return Channel(tuple(ops))


def compress_kraus(ops: Sequence[Mat2]) -> Channel:
    """Rewrite a long Kraus list as at most 4 operators via the Choi matrix."""
    choi = sum(_vec(k) @ _vec(k).conj().T for k in ops)
    w, v = np.linalg.eigh(choi)
    kept = [math.sqrt(max(val, 0.0)) * v[:, i] for i, val in enumerate(w) if val > 1e-14]
    return Channel(tuple(col.reshape(2, 2, order="F") for col in kept[-4:]))


def _vec(k: Mat2) -> np.ndarray:
    return np.asarray(k).reshape(4, 1, order="F")


# -- Stinespring parameterization ------------------------------------------

def _norm(v: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(v.real**2 + v.imag**2, axis=-1, keepdims=True))


def _orthonormal_pair(c1: np.ndarray, c2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gram-Schmidt on batched 8-vectors ``(..., 8)`` with a fixed fallback basis."""
    eye = np.eye(8, dtype=complex)
    n1 = _norm(c1)
    bad1 = n1 < 1e-12
    if bad1.any():
        c1 = np.where(bad1, eye[0], c1 / np.where(bad1, 1.0, n1))
    else:
        c1 = c1 / n1

    def project_out(v):
        return v - np.sum(np.conj(c1) * v, axis=-1, keepdims=True) * c1

    r = project_out(c2)
    nr = _norm(r)
    bad2 = nr < 1e-10 * np.maximum(1.0, _norm(c2))
    if bad2.any():
        # first basis vector with a large component orthogonal to c1
        cand = eye - np.conj(c1)[..., :, None] * c1[..., None, :]
        first = np.argmax(_norm(cand)[..., 0] > 0.5, axis=-1)
        fb = np.take_along_axis(cand, first[..., None, None], axis=-2)[..., 0, :]
        r = np.where(bad2, fb, r)
        nr = _norm(r)
    r = r / nr
    # second pass restores orthogonality lost to cancellation
    r = project_out(r)
    return c1, r / _norm(r)


def kraus_from_params(params) -> np.ndarray:
    """Kraus operators ``(..., 4, 2, 2)`` for parameter arrays ``(..., 32)``.

    Each half of the parameters is an 8-dimensional complex column given as
    interleaved (re, im) pairs; the orthonormalized columns form an isometry
    whose consecutive row pairs are the Kraus operators.
    """
    p = np.asarray(params, dtype=float)
    if p.shape[-1] != N_CHANNEL_PARAMS:
        raise ValueError(f"expected {N_CHANNEL_PARAMS} channel parameters, got {p.shape[-1]}")
    z = p[..., 0::2] + 1j * p[..., 1::2]
    c1, c2 = _orthonormal_pair(z[..., :8], z[..., 8:])
    v = np.stack([c1, c2], axis=-1)
    return v.reshape(p.shape[:-1] + (4, 2, 2))


def channel_from_params(params: Sequence[float]) -> Channel:
    return Channel(tuple(kraus_from_params(params)))


def params_from_kraus(kraus: Sequence[Mat2]) -> np.ndarray:
    """Inverse of :func:`kraus_from_params` for CPTP lists of up to 4 operators."""
    ops = [as_mat2(k) for k in kraus]
    if not 1 <= len(ops) <= 4 or not is_cptp(ops):
        raise InvalidGate("need 1 to 4 trace-preserving Kraus operators")
    v = np.zeros((8, 2), dtype=complex)
    for i, k in enumerate(ops):
        v[2 * i:2 * i + 2] = k
    out = np.empty(N_CHANNEL_PARAMS)
    cols = np.concatenate([v[:, 0], v[:, 1]])
    out[0::2] = cols.real
    out[1::2] = cols.imag
    return out


def gate_params(gate: Gate) -> np.ndarray:
    return params_from_kraus(gate.kraus())


# -- Rotation-vector parameterization of unitaries -------------------------

def rotation_matrices(rotvec) -> np.ndarray:
    """Bloch-sphere rotations ``(..., 3, 3)`` for rotation vectors ``(..., 3)`` (Rodrigues)."""
    w = np.asarray(rotvec, dtype=float)
    theta = np.linalg.norm(w, axis=-1)
    safe = np.where(theta > 1e-300, theta, 1.0)
    n = w / safe[..., None]
    c = np.cos(theta)[..., None, None]
    s = np.sin(theta)[..., None, None]
    zero = np.zeros_like(theta)
    k = np.stack(
        [
            np.stack([zero, -n[..., 2], n[..., 1]], axis=-1),
            np.stack([n[..., 2], zero, -n[..., 0]], axis=-1),
            np.stack([-n[..., 1], n[..., 0], zero], axis=-1),
        ],
        axis=-2,
    )
    outer = n[..., :, None] * n[..., None, :]
    return c * np.eye(3) + s * k + (1 - c) * outer


def _axis_angle(w: np.ndarray):
    theta = np.sqrt(w[..., 0] ** 2 + w[..., 1] ** 2 + w[..., 2] ** 2)
    safe = np.where(theta > 1e-300, theta, 1.0)
    return w / safe[..., None], np.cos(theta), np.sin(theta)


def rotated_z(rotvec) -> np.ndarray:
    """Image of the +z Bloch vector, i.e. column 2 of :func:`rotation_matrices`."""
    n, c, s = _axis_angle(np.asarray(rotvec, dtype=float))
    k = (1 - c) * n[..., 2]
    return np.stack([s * n[..., 1] + k * n[..., 0], -s * n[..., 0] + k * n[..., 1], c + k * n[..., 2]], axis=-1)


def rotation_z_row(rotvec) -> np.ndarray:
    """Row 2 of :func:`rotation_matrices`."""
    n, c, s = _axis_angle(np.asarray(rotvec, dtype=float))
    k = (1 - c) * n[..., 2]
    return np.stack([-s * n[..., 1] + k * n[..., 0], s * n[..., 0] + k * n[..., 1], c + k * n[..., 2]], axis=-1)


def unitary_from_rotvec(rotvec: Sequence[float]) -> Unitary:
    w = np.asarray(rotvec, dtype=float)
    theta = float(np.linalg.norm(w))
    if theta == 0.0:
        return Unitary((0.0, 0.0, 1.0), 0.0)
    return Unitary(tuple(w / theta), theta)


def rotvec_from_unitary(g: Unitary) -> np.ndarray:
    return np.asarray(g.axis) * g.angle
