"""Small dense complex linear algebra for qubit/qudit history spaces.

Matrices and vectors are plain ``numpy`` complex arrays. Everything here is
sized for fiber dimensions 2-8 and total operator dimension at most 64.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

ATOL = 1e-10
MAX_DIM = 64

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)

_S = 1 / math.sqrt(2)
KETS = {
    "z+": np.array([1, 0], dtype=complex),
    "z-": np.array([0, 1], dtype=complex),
    "x+": np.array([_S, _S], dtype=complex),
    "x-": np.array([_S, -_S], dtype=complex),
    "y+": np.array([_S, 1j * _S], dtype=complex),
    "y-": np.array([_S, -1j * _S], dtype=complex),
}


class DegenerateSpectrumError(ValueError):
    """Eigenvalues too close to be resolved into distinct projectors."""


def as_matrix(a) -> np.ndarray:
    m = np.array(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {m.shape}")
    if max(m.shape) > MAX_DIM:
        raise ValueError(f"dimension {max(m.shape)} exceeds supported maximum {MAX_DIM}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def as_vector(v) -> np.ndarray:
    x = np.array(v, dtype=complex).reshape(-1)
    if not np.all(np.isfinite(x)):
        raise ValueError("vector has non-finite entries")
    return x


def frozen(a: np.ndarray) -> np.ndarray:
    """Read-only copy, so values shared between histories cannot be mutated."""
    out = np.array(a, dtype=complex)
    out.setflags(write=False)
    return out


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def dagger(a) -> np.ndarray:
    return np.conj(np.asarray(a)).T


def projector(v) -> np.ndarray:
    """Rank-1 projector onto the normalized direction of ``v``."""
    x = as_vector(v)
    nrm = np.linalg.norm(x)
    if nrm < ATOL:
        raise ValueError("cannot project onto the zero vector")
    x = x / nrm
    return np.outer(x, x.conj())


def ket(name: str) -> np.ndarray:
    return KETS[name].copy()


def proj(name: str) -> np.ndarray:
    """Qubit projector by label, e.g. ``proj("x-")`` is [x-] = |x-><x-|."""
    return projector(KETS[name])


def is_normalized(v, tol: float = ATOL) -> bool:
    return bool(abs(np.vdot(v, v).real - 1.0) <= tol)


def is_hermitian(a, tol: float = ATOL) -> bool:
    a = np.asarray(a)
    return bool(a.shape[0] == a.shape[1] and np.max(np.abs(a - dagger(a)), initial=0.0) <= tol)


def is_unitary(u, tol: float = ATOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(dagger(u) @ u - np.eye(u.shape[0]))) <= tol)


def is_projector(p, tol: float = ATOL) -> bool:
    p = np.asarray(p)
    return bool(is_hermitian(p, tol) and np.max(np.abs(p @ p - p)) <= tol)


def close(a, b, tol: float = ATOL) -> bool:
    """Entrywise max-norm comparison."""
    a, b = np.asarray(a), np.asarray(b)
    return bool(a.shape == b.shape and np.max(np.abs(a - b), initial=0.0) <= tol)


@dataclass(frozen=True)
class BlochDirection:
    x: float
    y: float
    z: float

    def __post_init__(self):
        r2 = self.x**2 + self.y**2 + self.z**2
        if abs(r2 - 1.0) > 1e-12:
            raise ValueError(f"Bloch direction must be unit norm, |n|^2 = {r2!r}")

    @classmethod
    def planar(cls, theta: float) -> "BlochDirection":
        """Direction in the X-Z plane at angle ``theta`` from +Z towards +X."""
        return cls(math.sin(theta), 0.0, math.cos(theta))

    @classmethod
    def from_vector(cls, v) -> "BlochDirection":
        v = np.asarray(v, dtype=float)
        return cls(*(v / np.linalg.norm(v)))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def angles(self) -> tuple[float, float]:
        """Spherical (polar, azimuth) angles in radians."""
        return math.acos(max(-1.0, min(1.0, self.z))), math.atan2(self.y, self.x)

    def dot(self, other: "BlochDirection") -> float:
        return float(self.vector @ other.vector)


def observable_from_bloch(n: BlochDirection) -> np.ndarray:
    """Dichotomic qubit observable n.sigma (eigenvalues +1 and -1)."""
    if not isinstance(n, BlochDirection):
        n = BlochDirection(*n)
    return n.x * SX + n.y * SY + n.z * SZ


def dichotomic_projectors(a) -> list[tuple[float, np.ndarray]]:
    """Spectral projectors of a Hermitian matrix, sorted by descending eigenvalue.

    Observables with spectrum in {+1, -1} (``a @ a == I``) use the exact
    split ``(I +- a) / 2``. Otherwise eigenvalues equal within ``ATOL`` share one
    eigenspace, and distinct eigenvalues closer than 1e-8 raise
    :class:`DegenerateSpectrumError`.
    """
    a = as_matrix(a)
    if not is_hermitian(a):
        raise ValueError("observable is not Hermitian")
    d = a.shape[0]
    eye = np.eye(d, dtype=complex)
    if close(a @ a, eye):
        out = []
        for sign in (1.0, -1.0):
            p = (eye + sign * a) / 2
            if np.max(np.abs(p)) > ATOL:
                out.append((sign, p))
        return out

    w, v = np.linalg.eigh(a)
    groups: list[list[int]] = []
    for k in range(d):
        if groups and abs(w[k] - w[groups[-1][-1]]) <= ATOL:
            groups[-1].append(k)
        elif groups and abs(w[k] - w[groups[-1][-1]]) < 1e-8:
            raise DegenerateSpectrumError("degenerate spectrum")
        else:
            groups.append([k])
    out = []
    for g in reversed(groups):
        vecs = v[:, g]
        out.append((float(np.mean(w[g])), vecs @ dagger(vecs)))
    return out


def outcome_projectors(a) -> dict[int, np.ndarray]:
    """Projectors of a +-1 observable keyed by integer outcome."""
    out = {}
    for ev, p in dichotomic_projectors(a):
        if abs(abs(ev) - 1) > 1e-9:
            raise ValueError(f"observable is not dichotomic (eigenvalue {ev})")
        out[1 if ev > 0 else -1] = p
    return out


def random_state(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-random pure state: complex Gaussian entries, normalized."""
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_density(rng: np.random.Generator, dim: int, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def random_dichotomic(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Random +-1 observable 2P - I with P a projector of random rank in [1, dim-1]."""
    u = random_unitary(rng, dim)
    rank = int(rng.integers(1, dim)) if dim > 2 else 1
    vecs = u[:, :rank]
    return 2 * (vecs @ dagger(vecs)) - np.eye(dim)
