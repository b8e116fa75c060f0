"""Probabilistic mixtures of histories and the temporal partial trace."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .histories import (
    NULL_WEIGHT,
    ElementaryHistory,
    HistoryVector,
    TimeGrid,
    _check_orthonormal,
    history_from_json,
    history_to_json,
    inner_product,
    propagator,
    tensor,
    weight,
)

EIG_CUTOFF = 1e-10
DEGENERACY_GAP = 1e-9


@dataclass(frozen=True, eq=False)
class MixedHistory:
    """Ensemble {p_i, |H_i)} of chain-normalized histories on one grid.

    ``discarded_weight`` is the probability mass a reduction dropped because the
    corresponding reduced histories had vanishing chain operators.
    """
    ensemble: tuple  # of (probability, HistoryVector)
    discarded_weight: float = 0.0

    def __post_init__(self):
        if not self.ensemble:
            raise ValueError("empty ensemble")
        ps = [float(p) for p, _ in self.ensemble]
        if any(p < 0 or p > 1 for p in ps):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(sum(ps) - 1) > 1e-10:
            raise ValueError(f"probabilities sum to {sum(ps)!r}, not 1")
        first = self.ensemble[0][1]
        for _, h in self.ensemble:
            first._compatible(h)
            if abs(weight(h) - 1) > 1e-9:
                raise ValueError("ensemble members must be normalized histories")
        object.__setattr__(self, "ensemble", tuple((float(p), h) for p, h in self.ensemble))

    @property
    def grid(self) -> TimeGrid:
        return self.ensemble[0][1].grid

    @property
    def probabilities(self) -> list[float]:
        return [p for p, _ in self.ensemble]

    @property
    def histories(self) -> list[HistoryVector]:
        return [h for _, h in self.ensemble]

    def trace(self) -> float:
        return float(sum(p * weight(h) for p, h in self.ensemble))


def mix(ensemble: Sequence[tuple[float, HistoryVector]]) -> MixedHistory:
    return MixedHistory(tuple(ensemble))


def matrix_representation(m: MixedHistory, basis: Sequence[HistoryVector]) -> np.ndarray:
    """rho_jk = sum_i p_i (b_j|H_i)(H_i|b_k) in an orthonormal history basis."""
    _check_orthonormal(basis)
    amps = np.array([[inner_product(b, h) for b in basis] for h in m.histories])
    p = np.array(m.probabilities)
    return np.einsum("i,ij,ik->jk", p, amps, amps.conj())


def _canonical_basis(v: np.ndarray) -> np.ndarray:
    """Basis-choice-independent orthonormal basis of the column span of ``v``.

    Projects the standard basis vectors onto the span in order and keeps the
    first independent ones (Gram-Schmidt), which reproduces standard vectors
    whenever the span contains them.
    """
    proj = v @ v.conj().T
    cols: list[np.ndarray] = []
    for k in range(proj.shape[0]):
        x = proj[:, k].copy()
        for c in cols:
            x -= np.vdot(c, x) * c
        n = np.linalg.norm(x)
        if n > 1e-8:
            x = x / n
            # fix phase: largest component real positive
            j = np.argmax(np.abs(x) > np.max(np.abs(x)) - 1e-12)
            x *= np.conj(x[j]) / abs(x[j])
            cols.append(x)
        if len(cols) == v.shape[1]:
            break
    return np.stack(cols, axis=1)


def _clusters(w: np.ndarray, gap: float) -> list[list[int]]:
    groups: list[list[int]] = []
    for k in range(len(w)):
        if groups and abs(w[k] - w[groups[-1][-1]]) <= gap:
            groups[-1].append(k)
        else:
            groups.append([k])
    return groups


def _vector_to_history(x: np.ndarray, grid: TimeGrid, bridging) -> HistoryVector:
    """Expand a kept-slot operator-space vector over matrix units."""
    d = grid.dim
    n = len(grid)
    units = []
    for a in range(d):
        for b in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[a, b] = 1
            units.append(e)
    terms = []
    for idx in np.flatnonzero(np.abs(x) > 1e-13):
        digits = np.unravel_index(idx, (d * d,) * n)
        terms.append((x[idx], ElementaryHistory(tuple(units[k] for k in digits))))
    return HistoryVector(grid, bridging, tuple(terms))


def reduced_operator(h: HistoryVector | MixedHistory, keep: Sequence) -> tuple[np.ndarray, list[int]]:
    """Contract the traced slots of |H)(H| in the product operator space.

    Returns the reduced operator on the kept slots (in early -> late order) and
    the kept slot indices. Members of a mixture are weighted by their
    probabilities after unit-normalizing their operator-space vectors.
    """
    members = [(1.0, h)] if isinstance(h, HistoryVector) else list(h.ensemble)
    grid = members[0][1].grid
    keep_idx = sorted(grid.index(t) for t in keep)
    if len(set(keep_idx)) != len(keep_idx):
        raise ValueError("duplicate time labels in keep")
    n = len(grid)
    if not keep_idx or len(keep_idx) == n:
        raise ValueError("temporal partial trace must keep a nonempty proper subset of times")
    traced = [i for i in range(n) if i not in keep_idx]
    dd = grid.dim**2
    rho = np.zeros((dd ** len(keep_idx),) * 2, dtype=complex)
    for p, hm in members:
        v = tensor(hm)
        if isinstance(h, MixedHistory):
            v = v / np.linalg.norm(v)
        t = v.reshape((dd,) * n).transpose(keep_idx + traced).reshape(dd ** len(keep_idx), -1)
        rho += p * (t @ t.conj().T)
    return rho, keep_idx


def temporal_partial_trace(h: HistoryVector | MixedHistory, keep: Sequence) -> MixedHistory:
    """Trace out every time slot not in ``keep``.

    The reduced operator is eigendecomposed; each eigenvector with eigenvalue
    above 1e-10 becomes an ensemble member with probability proportional to its
    eigenvalue. Degenerate eigenspaces are resolved by diagonalizing the chain
    Gram matrix inside them (then a canonical basis for any remaining tie), so
    that members are mutually consistent where possible. Members whose chain
    operator vanishes under the composed bridging are dropped and the remaining
    probabilities renormalized.
    """
    grid0 = h.grid
    bridging0 = h.bridging if isinstance(h, HistoryVector) else h.histories[0].bridging
    rho, keep_idx = reduced_operator(h, keep)
    grid = TimeGrid(tuple(grid0.labels[i] for i in keep_idx), grid0.dim)
    bridging = tuple(propagator(bridging0, a, b) for a, b in zip(keep_idx, keep_idx[1:]))

    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    keep_cols = w > EIG_CUTOFF
    w, v = w[keep_cols], v[:, keep_cols]

    members: list[tuple[float, HistoryVector]] = []
    for group in _clusters(w, DEGENERACY_GAP):
        basis = _canonical_basis(v[:, group]) if len(group) > 1 else v[:, group]
        hs = [_vector_to_history(basis[:, j], grid, bridging) for j in range(basis.shape[1])]
        if len(group) > 1:
            g = np.array([[inner_product(a, b) for b in hs] for a in hs])
            if np.max(np.abs(g - np.diag(np.diag(g)))) > 1e-12:
                gw, gv = np.linalg.eigh(g)
                gorder = np.argsort(-gw, kind="stable")
                gw, gv = gw[gorder], gv[:, gorder]
                rotated = basis @ gv
                cols = []
                for sub in _clusters(gw, DEGENERACY_GAP):
                    blk = rotated[:, sub]
                    cols.append(_canonical_basis(blk) if len(sub) > 1 else blk)
                basis = np.concatenate(cols, axis=1)
                hs = [_vector_to_history(basis[:, j], grid, bridging) for j in range(basis.shape[1])]
        lam = float(np.mean(w[group]))
        members.extend((lam, hm) for hm in hs)

    total = sum(lam for lam, _ in members)
    kept, dropped = [], 0.0
    for lam, hm in members:
        wt = weight(hm)
        if wt <= NULL_WEIGHT:
            dropped += lam / total
        else:
            kept.append((lam, hm / np.sqrt(wt)))
    if not kept:
        raise ValueError("reduction leaves no consistent history")
    z = sum(lam for lam, _ in kept)
    ensemble = [(lam / z, hm) for lam, hm in kept]
    # absorb rounding so probabilities sum to one exactly enough
    ps = np.array([p for p, _ in ensemble])
    ps = ps / ps.sum()
    return MixedHistory(tuple((float(p), hm) for p, (_, hm) in zip(ps, ensemble)), dropped)


def mixture_to_json(m: MixedHistory) -> dict[str, Any]:
    return {
        "ensemble": [{"probability": p, "history": history_to_json(h)} for p, h in m.ensemble],
        "discarded_weight": m.discarded_weight,
    }


def mixture_from_json(doc: dict[str, Any]) -> MixedHistory:
    return MixedHistory(
        tuple((float(e["probability"]), history_from_json(e["history"])) for e in doc["ensemble"]),
        float(doc.get("discarded_weight", 0.0)),
    )
