"""Entangled-history vectors on a discrete time grid.

A history is a complex combination of elementary projector chains
``P_n (.) ... (.) P_0``. Its dynamics are compressed into the chain operator

    K(H) = sum_terms c * P_n T(t_n, t_n-1) ... P_1 T(t_1, t_0) P_0

and all inner products, weights and equalities here are taken at the level of
chain operators: ``(H1|H2) = Tr(K(H1)^dag K(H2))``.

Ops are stored early -> late (index 0 is the earliest time). The :func:`chain`
constructor takes them in the left-to-right notation order instead, i.e.
late -> early, so ``chain(proj("z+"), proj("x+"), proj("z+"))`` reads like
``[z+] (.) [x+] (.) [z+]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Any, Sequence

import numpy as np

from .linalg import as_matrix, close, dagger, frozen, is_unitary

NULL_WEIGHT = 1e-12


class NullHistoryError(ValueError):
    """Raised when a history with vanishing chain operator must be normalized."""


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class TimeGrid:
    labels: tuple
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) < 1:
            raise ValueError("time grid needs at least one label")
        if any(not (a < b) for a, b in zip(self.labels, self.labels[1:])):
            raise ValueError(f"time labels must be strictly increasing: {self.labels}")
        if self.dim < 1:
            raise ValueError("fiber dimension must be positive")

    @classmethod
    def of_length(cls, n: int, dim: int = 2) -> "TimeGrid":
        return cls(tuple(range(n)), dim)

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label) -> int:
        return self.labels.index(label)


@dataclass(frozen=True, eq=False)
class ElementaryHistory:
    ops: tuple  # one square matrix per time, early -> late

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(frozen(as_matrix(p)) for p in self.ops))


def identity_bridging(n: int, dim: int) -> tuple:
    return tuple(frozen(np.eye(dim)) for _ in range(max(n - 1, 0)))


def propagator(bridging: Sequence[np.ndarray], i: int, j: int) -> np.ndarray:
    """Bridging operator T(t_j, t_i) composed from adjacent steps.

    ``bridging[k]`` carries t_k -> t_k+1. For j < i the adjoint of the forward
    propagator is returned, so T(t_i, t_j) = T(t_j, t_i)^dag.
    """
    if j < i:
        return dagger(propagator(bridging, j, i))
    dim = bridging[0].shape[0] if bridging else None
    out = np.eye(dim, dtype=complex) if dim else np.eye(1, dtype=complex)
    for k in range(i, j):
        out = bridging[k] @ out
    return out


def _check_bridging(bridging, grid: TimeGrid) -> tuple:
    if bridging is None:
        return identity_bridging(len(grid), grid.dim)
    bridging = tuple(frozen(as_matrix(u)) for u in bridging)
    if len(bridging) != len(grid) - 1:
        raise ValueError(f"need {len(grid) - 1} bridging unitaries, got {len(bridging)}")
    for u in bridging:
        if u.shape != (grid.dim, grid.dim) or not is_unitary(u):
            raise ValueError("bridging operators must be unitary of the fiber dimension")
    return bridging


@dataclass(frozen=True, eq=False)
class HistoryVector:
    grid: TimeGrid
    bridging: tuple
    terms: tuple  # of (complex coefficient, ElementaryHistory)

    def __post_init__(self):
        if not self.terms:
            raise ValueError("a history needs at least one term")
        object.__setattr__(self, "bridging", _check_bridging(self.bridging, self.grid))
        terms = []
        for c, e in self.terms:
            if not isinstance(e, ElementaryHistory):
                e = ElementaryHistory(tuple(e))
            if len(e.ops) != len(self.grid):
                raise ValueError("each elementary history needs one op per time label")
            for p in e.ops:
                if p.shape != (self.grid.dim, self.grid.dim):
                    raise ValueError("op shape does not match fiber dimension")
            terms.append((complex(c), e))
        object.__setattr__(self, "terms", tuple(terms))

    @classmethod
    def elementary(cls, ops: Sequence, grid: TimeGrid | None = None,
                   bridging: Sequence | None = None, coefficient: complex = 1.0) -> "HistoryVector":
        """Single-term history; ``ops`` ordered early -> late."""
        ops = [as_matrix(p) for p in ops]
        if grid is None:
            grid = TimeGrid.of_length(len(ops), ops[0].shape[0])
        return cls(grid, bridging, ((coefficient, ElementaryHistory(tuple(ops))),))

    def _compatible(self, other: "HistoryVector"):
        if self.grid != other.grid:
            raise GridMismatchError("histories live on different time grids")
        if any(not close(a, b) for a, b in zip(self.bridging, other.bridging)):
            raise GridMismatchError("histories use different bridging operators")

    def __add__(self, other: "HistoryVector") -> "HistoryVector":
        self._compatible(other)
        return HistoryVector(self.grid, self.bridging, self.terms + other.terms)

    def __neg__(self) -> "HistoryVector":
        return -1 * self

    def __sub__(self, other: "HistoryVector") -> "HistoryVector":
        return self + (-other)

    def __mul__(self, scalar) -> "HistoryVector":
        s = complex(scalar)
        return HistoryVector(self.grid, self.bridging, tuple((s * c, e) for c, e in self.terms))

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "HistoryVector":
        return self * (1 / complex(scalar))

    def __len__(self) -> int:
        return len(self.terms)


def chain(*ops, bridging: Sequence | None = None, labels: Sequence | None = None) -> HistoryVector:
    """Elementary history written in notation order (latest time first).

    ``bridging`` is still given early -> late: ``bridging[k]`` maps t_k to t_k+1.
    """
    early_first = [as_matrix(p) for p in reversed(ops)]
    dim = early_first[0].shape[0]
    grid = TimeGrid(tuple(labels) if labels is not None else tuple(range(len(ops))), dim)
    return HistoryVector.elementary(early_first, grid, bridging)


def sum_histories(hs: Sequence[HistoryVector], coeffs: Sequence[complex] | None = None) -> HistoryVector:
    coeffs = [1.0] * len(hs) if coeffs is None else list(coeffs)
    out = coeffs[0] * hs[0]
    for c, h in zip(coeffs[1:], hs[1:]):
        out = out + c * h
    return out


def _elementary_chain(e: ElementaryHistory, bridging) -> np.ndarray:
    k = e.ops[0]
    for t in range(1, len(e.ops)):
        k = e.ops[t] @ bridging[t - 1] @ k
    return k


def chain_operator(h: HistoryVector) -> np.ndarray:
    d = h.grid.dim
    k = np.zeros((d, d), dtype=complex)
    for c, e in h.terms:
        k = k + c * _elementary_chain(e, h.bridging)
    return k


def inner_product(h1: HistoryVector, h2: HistoryVector) -> complex:
    h1._compatible(h2)
    return complex(np.vdot(chain_operator(h1), chain_operator(h2)))


def weight(h: HistoryVector) -> float:
    """Realization weight Tr(K^dag K)."""
    k = chain_operator(h)
    return float(np.vdot(k, k).real)


def normalize(h: HistoryVector) -> HistoryVector:
    w = weight(h)
    if w <= NULL_WEIGHT:
        raise NullHistoryError("null history: inconsistent chain")
    return h / np.sqrt(w)


def equivalent(h1: HistoryVector, h2: HistoryVector, tol: float = 1e-9) -> bool:
    """Equality of chain operators up to a global phase."""
    h1._compatible(h2)
    k1, k2 = chain_operator(h1), chain_operator(h2)
    m1, m2 = np.max(np.abs(k1)), np.max(np.abs(k2))
    if m1 <= tol or m2 <= tol:
        return m1 <= tol and m2 <= tol
    idx = np.unravel_index(np.argmax(np.abs(k1)), k1.shape)
    if abs(k2[idx]) <= tol:
        return False
    phase = k1[idx] / k2[idx]
    phase /= abs(phase)
    return bool(np.max(np.abs(k1 - phase * k2)) <= tol)


def odot(h_late: HistoryVector, h_early: HistoryVector, bridge=None) -> HistoryVector:
    """Sequential product ``h_late (.) h_early`` joined by ``bridge``.

    Integer-labelled grids that overlap are shifted so the late segment
    follows the early one.
    """
    if h_late.grid.dim != h_early.grid.dim:
        raise ValueError("fiber dimensions differ")
    dim = h_early.grid.dim
    late_labels = h_late.grid.labels
    if not h_early.grid.labels[-1] < late_labels[0]:
        if all(isinstance(x, (int, np.integer)) for x in h_early.grid.labels + late_labels):
            shift = h_early.grid.labels[-1] + 1 - late_labels[0]
            late_labels = tuple(x + shift for x in late_labels)
        else:
            raise ValueError("late segment must start after the early segment ends")
    grid = TimeGrid(h_early.grid.labels + late_labels, dim)
    bridge = np.eye(dim) if bridge is None else as_matrix(bridge)
    bridging = h_early.bridging + (bridge,) + h_late.bridging
    terms = tuple(
        (cl * ce, ElementaryHistory(ee.ops + el.ops))
        for cl, el in h_late.terms
        for ce, ee in h_early.terms
    )
    return HistoryVector(grid, bridging, terms)


def inject_measurement(h: HistoryVector, per_time_ops: Sequence) -> tuple[HistoryVector, float]:
    """Act with ``M_t . P . M_t^dag`` on every op, then renormalize.

    ``per_time_ops`` is ordered like the grid (early -> late); pass the identity
    where nothing acts. Returns the new history and the normalization factor
    alpha applied to it.
    """
    ms = [as_matrix(m) for m in per_time_ops]
    if len(ms) != len(h.grid):
        raise ValueError("need one operator per time label")
    terms = tuple(
        (c, ElementaryHistory(tuple(m @ p @ dagger(m) for m, p in zip(ms, e.ops))))
        for c, e in h.terms
    )
    out = HistoryVector(h.grid, h.bridging, terms)
    w = weight(out)
    if w <= NULL_WEIGHT:
        raise NullHistoryError("measurement annihilates history")
    alpha = 1 / np.sqrt(w)
    return out * alpha, float(alpha)


def gram_matrix(family: Sequence[HistoryVector]) -> np.ndarray:
    ks = [chain_operator(h) for h in family]
    for h in family[1:]:
        family[0]._compatible(h)
    return np.array([[np.vdot(a, b) for b in ks] for a in ks])


def _check_orthonormal(family: Sequence[HistoryVector], tol: float = 1e-8):
    g = gram_matrix(family)
    if np.max(np.abs(g - np.eye(len(family)))) > tol:
        raise ValueError("histories are not orthonormal under the chain inner product")


def history_expectation(observable_terms: Sequence[tuple[float, HistoryVector]],
                        h: HistoryVector) -> float:
    """<A> = Tr(A |H)(H|) for A = sum_i a_i |H_i)(H_i|."""
    _check_orthonormal([hi for _, hi in observable_terms])
    return float(sum(a * abs(inner_product(hi, h)) ** 2 for a, hi in observable_terms))


@dataclass
class ConsistencyReport:
    gram: np.ndarray
    consistent: bool
    max_off_diagonal: float
    additive: bool | None = None  # None when not consistent


def consistency_check(family: Sequence[HistoryVector], tol: float = 1e-9) -> ConsistencyReport:
    """Medium consistency: Tr(K_a^dag K_b) = 0 for every a != b."""
    g = gram_matrix(family)
    off = g - np.diag(np.diag(g))
    worst = float(np.max(np.abs(off), initial=0.0))
    report = ConsistencyReport(g, worst <= tol, worst)
    if report.consistent:
        w = np.diag(g).real
        m = len(family)
        # every subset for small families, pairs otherwise
        sizes = range(2, m + 1) if m <= 10 else [2]
        report.additive = all(
            abs(weight(sum_histories([family[i] for i in s])) - sum(w[list(s)])) <= tol
            for r in sizes for s in combinations(range(m), r)
        )
    return report


@dataclass
class CompletenessReport:
    identity_raw: bool
    identity_normalized: bool
    unit_norm: bool

    @property
    def resolves_identity(self) -> bool:
        return self.identity_raw or self.identity_normalized

    def __bool__(self) -> bool:
        return self.unit_norm and self.resolves_identity


def completeness_check(family: Sequence[HistoryVector], coeffs: Sequence[complex],
                       tol: float = 1e-9) -> CompletenessReport:
    """Check sum_a c_a H_a against the all-identity history and sum |c_a|^2 = 1.

    The identity condition is reported both against the raw all-identity chain
    and against its weight-1 normalization; the two conditions are kept apart.
    """
    k = chain_operator(sum_histories(family, coeffs))
    h0 = family[0]
    ident = chain_operator(HistoryVector.elementary(
        [np.eye(h0.grid.dim)] * len(h0.grid), h0.grid, h0.bridging))
    ident_n = ident / np.sqrt(np.vdot(ident, ident).real)
    norm2 = float(sum(abs(complex(c)) ** 2 for c in coeffs))
    return CompletenessReport(
        identity_raw=close(k, ident, tol),
        identity_normalized=close(k, ident_n, tol),
        unit_norm=abs(norm2 - 1) <= tol,
    )


def tensor(h: HistoryVector) -> np.ndarray:
    """History as a vector in the product of per-time operator spaces.

    Each op is flattened row-major; slot order is early -> late. Bridging
    does not enter this representation.
    """
    out = 0
    for c, e in h.terms:
        v = np.ones(1, dtype=complex)
        for p in e.ops:
            v = np.kron(v, p.reshape(-1))
        out = out + c * v
    return np.asarray(out)


def history_space_inner(h1: HistoryVector, h2: HistoryVector) -> complex:
    """Inner product in the product operator space (no bridging)."""
    return complex(np.vdot(tensor(h1), tensor(h2)))


# JSON-compatible trees

def matrix_to_json(m) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def matrix_from_json(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


def vector_to_json(v) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v).reshape(-1)]


def vector_from_json(items) -> np.ndarray:
    return np.array([complex(re, im) for re, im in items], dtype=complex)


def history_to_json(h: HistoryVector) -> dict[str, Any]:
    return {
        "grid": {"labels": list(h.grid.labels), "dim": h.grid.dim},
        "bridging": [matrix_to_json(u) for u in h.bridging],
        "terms": [
            {"coefficient": [c.real, c.imag], "ops": [matrix_to_json(p) for p in e.ops]}
            for c, e in h.terms
        ],
    }


def history_from_json(doc: dict[str, Any]) -> HistoryVector:
    grid = TimeGrid(tuple(doc["grid"]["labels"]), int(doc["grid"]["dim"]))
    bridging = tuple(matrix_from_json(u) for u in doc["bridging"])
    terms = tuple(
        (complex(*t["coefficient"]), ElementaryHistory(tuple(matrix_from_json(p) for p in t["ops"])))
        for t in doc["terms"]
    )
    return HistoryVector(grid, bridging, terms)
