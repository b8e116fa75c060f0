"""Temporal CHSH / Leggett-Garg functionals, their bounds, and a settings optimizer.

Every two-time correlator c_ij is its own forward Lueders experiment: measure
A_i, then B_j, on a fresh copy of the input state, and average the product of
the outcomes. Longer functionals are assembled from such separate runs and
never by marginalizing a longer measurement chain.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
import math
from typing import Any, Sequence

import numpy as np
from scipy.optimize import minimize

from .linalg import BlochDirection, as_matrix, dagger, observable_from_bloch
from .twotime import Setting, joint_distribution

TSIRELSON = 2 * math.sqrt(2)
MAXIMALLY_MIXED = np.eye(2, dtype=complex) / 2


def _obs(a) -> np.ndarray:
    return observable_from_bloch(a) if isinstance(a, BlochDirection) else as_matrix(a)


def temporal_correlator(state, a, b) -> float:
    """<A, B> = sum_{alpha,beta} alpha * beta * p(alpha, beta) for A then B."""
    dist = joint_distribution(state, [Setting("a", _obs(a)), Setting("b", _obs(b))])
    return dist.correlator()


def anticommutator_correlator(state, a, b) -> float:
    """Closed form 1/2 Tr(rho {A, B}); used as an independent check."""
    a, b = _obs(a), _obs(b)
    rho = np.asarray(state, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    return float(0.5 * np.trace(rho @ (a @ b + b @ a)).real)


@dataclass(frozen=True)
class SettingsPair:
    alice: tuple  # (A1, A2) BlochDirections
    bob: tuple  # (B1, B2)

    @classmethod
    def planar(cls, a1: float, a2: float, b1: float, b2: float) -> "SettingsPair":
        p = BlochDirection.planar
        return cls((p(a1), p(a2)), (p(b1), p(b2)))

    def to_json(self) -> dict[str, Any]:
        return {
            "alice": [list(d.angles) for d in self.alice],
            "bob": [list(d.angles) for d in self.bob],
        }


# A1 = Z, A2 = X, B1 = (Z+X)/sqrt2, B2 = (Z-X)/sqrt2
CANONICAL_CHSH = SettingsPair.planar(0.0, math.pi / 2, math.pi / 4, -math.pi / 4)
# A1 = Z, A2 = (Z+X)/sqrt2, B1 = Z, B2 = (Z-X)/sqrt2 as printed alongside the 2*sqrt2 claim
PRINTED_CHSH = SettingsPair.planar(0.0, math.pi / 4, 0.0, -math.pi / 4)
ALL_Z_CHSH = SettingsPair.planar(0.0, 0.0, 0.0, 0.0)


@dataclass
class BellResult:
    value: float
    c11: float
    c12: float
    c21: float
    c22: float
    settings: SettingsPair
    bound_classical: float = 2.0
    bound_quantum: float = TSIRELSON

    def recompute(self) -> float:
        return self.c12 + self.c21 + self.c11 - self.c22

    def to_json(self) -> dict[str, Any]:
        return {
            "functional": "chsh",
            "settings": self.settings.to_json(),
            "correlators": {"c11": self.c11, "c12": self.c12, "c21": self.c21, "c22": self.c22},
            "value": self.value,
            "bound_classical": self.bound_classical,
            "bound_quantum": self.bound_quantum,
        }


def chsh_temporal(state, s: SettingsPair) -> BellResult:
    """S = c12 + c21 + c11 - c22, each c_ij from its own A_i-then-B_j run."""
    state = MAXIMALLY_MIXED if state is None else state
    c = {
        (i, j): temporal_correlator(state, s.alice[i], s.bob[j])
        for i in range(2) for j in range(2)
    }
    value = c[0, 1] + c[1, 0] + c[0, 0] - c[1, 1]
    return BellResult(value, c[0, 0], c[0, 1], c[1, 0], c[1, 1], s)


@dataclass
class LgiResult:
    n: int
    value: float
    neighbours: list  # c_{i,i+1} for i = 1..n-1
    c1n: float
    classical: tuple
    luders: float
    directions: list = field(default_factory=list)

    def recompute(self) -> float:
        return sum(self.neighbours) - self.c1n

    def to_json(self) -> dict[str, Any]:
        return {
            "functional": f"lgi{self.n}",
            "settings": [list(d.angles) for d in self.directions],
            "correlators": {
                **{f"c{i + 1},{i + 2}": c for i, c in enumerate(self.neighbours)},
                f"c1,{self.n}": self.c1n,
            },
            "value": self.value,
            "bound_classical": list(self.classical),
            "bound_luders": self.luders,
        }


def classical_lgi_bounds(n: int) -> tuple[int, int]:
    """(min, max) of K_n over all 2^n deterministic +-1 assignments."""
    if not 3 <= n <= 20:
        raise ValueError("n must lie in 3..20")
    q = np.array(list(product((1, -1), repeat=n)), dtype=np.int64)
    k = np.sum(q[:, :-1] * q[:, 1:], axis=1) - q[:, 0] * q[:, -1]
    return int(k.min()), int(k.max())


def luders_bound(n: int) -> float:
    if n < 3:
        raise ValueError("n must be at least 3")
    return n * math.cos(math.pi / n)


def lgi_n(state, directions: Sequence[BlochDirection]) -> LgiResult:
    """K_n = c12 + c23 + ... + c_{n-1,n} - c_1n from n separate two-time runs."""
    n = len(directions)
    if n < 3:
        raise ValueError("K_n needs n >= 3")
    state = MAXIMALLY_MIXED if state is None else state
    nb = [temporal_correlator(state, directions[i], directions[i + 1]) for i in range(n - 1)]
    c1n = temporal_correlator(state, directions[0], directions[-1])
    bounds = classical_lgi_bounds(n) if n <= 20 else (None, None)
    return LgiResult(n, sum(nb) - c1n, nb, c1n, bounds, luders_bound(n), list(directions))


def _post_measurement_state(state, a) -> list[tuple[float, np.ndarray]]:
    """(probability, normalized state) for each outcome of measuring ``a``."""
    rho = np.asarray(state, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    out = []
    for _, p in Setting("a", _obs(a)).projectors.items():
        r = p @ rho @ dagger(p)
        w = np.trace(r).real
        if w > 1e-14:
            out.append((w, r / w))
    return out


def monogamy_sum(state, s_ab: SettingsPair, s_bc: SettingsPair) -> float:
    """S_tauAB + S_tauBC for three consecutive slots A, B, C of one system.

    The BC experiments run on the state left behind by the A-slot measurement:
    for each A setting (equal weight) and outcome (its Born weight) the
    post-measurement state is fed to the BC functional and the results averaged.
    """
    state = MAXIMALLY_MIXED if state is None else state
    s1 = chsh_temporal(state, s_ab).value
    s2 = 0.0
    for a in s_ab.alice:
        for w, rho in _post_measurement_state(state, a):
            s2 += 0.5 * w * chsh_temporal(rho, s_bc).value
    return s1 + s2


@dataclass
class ChainResult:
    n: int
    value: float
    per_pair: list
    bound: float

    @property
    def within_bound(self) -> bool:
        return self.value <= self.bound + 1e-9


def chain_bound_sum(n: int, per_pair_settings: Sequence[SettingsPair], state=None) -> ChainResult:
    """Sum of n pairwise temporal CHSH values, each pair a fresh replicated run.

    A single SettingsPair is replicated over all n pairs.
    """
    if n < 2:
        raise ValueError("chain needs n >= 2")
    settings = list(per_pair_settings)
    if len(settings) == 1:
        settings = settings * n
    if len(settings) != n:
        raise ValueError("need one SettingsPair per pair or a single one to replicate")
    state = MAXIMALLY_MIXED if state is None else state
    vals = [chsh_temporal(state, s).value for s in settings]
    return ChainResult(n, float(sum(vals)), vals, TSIRELSON * n)


# optimizer

GRID_STEP = math.radians(2.0)


@dataclass
class OptimizerConfig:
    budget: int = 3000
    seed: int = 0
    grid_fraction: float = 0.5
    step: float = GRID_STEP
    restarts: int = 3


@dataclass
class OptimizationResult:
    functional: str
    angles: list
    best_value: float
    bound: float
    evaluations: int
    settings: Any = None

    @property
    def exceeds_bound(self) -> bool:
        return self.best_value > self.bound + 1e-6


def _objective(functional: str, state):
    if functional == "chsh":
        def f(th):
            return chsh_temporal(state, SettingsPair.planar(*th)).value
        return f, 4, TSIRELSON
    if functional.startswith("lgi"):
        n = int(functional[3:].strip(":()"))
        def f(th):
            return lgi_n(state, [BlochDirection.planar(t) for t in th]).value
        return f, n, luders_bound(n)
    raise ValueError(f"unknown functional {functional!r}")


def optimize_settings(functional: str, state=None, budget: int = 3000, seed: int = 0,
                      config: OptimizerConfig | None = None) -> OptimizationResult:
    """Maximize a temporal functional over X-Z plane settings.

    Phase 1 evaluates points of the 2-degree angle lattice: all of it when it
    fits in the grid share of the budget, otherwise a seeded sample of lattice
    points. Ties go to the lexicographically smallest angle vector. Phase 2 runs
    Nelder-Mead from the best lattice point, restarting from its own optimum
    while the budget allows.

    ``functional`` is "chsh" or "lgiN" (e.g. "lgi5").
    """
    cfg = config or OptimizerConfig(budget=budget, seed=seed)
    if cfg.budget < 1000:
        raise ValueError("budget must be at least 1000 evaluations")
    state = MAXIMALLY_MIXED if state is None else state
    f, dim, bound = _objective(functional, state)
    rng = np.random.default_rng(cfg.seed)

    count = 0

    def g(th):
        nonlocal count
        count += 1
        return f(th)

    per_axis = int(round(2 * math.pi / cfg.step))
    n_grid = int(cfg.budget * cfg.grid_fraction)
    if per_axis**dim <= n_grid:
        idx = np.array(list(product(range(per_axis), repeat=dim)))
    else:
        idx = rng.integers(0, per_axis, size=(n_grid, dim))
        idx = np.unique(idx, axis=0)  # sorted lexicographically
    points = idx * cfg.step
    vals = np.array([g(p) for p in points])
    best_i = int(np.flatnonzero(vals == vals.max())[0])
    x, fx = points[best_i].astype(float), float(vals[best_i])

    for _ in range(cfg.restarts):
        remaining = cfg.budget - count
        if remaining <= dim + 1:
            break
        res = minimize(lambda t: -g(t), x, method="Nelder-Mead",
                       options={"maxfev": remaining, "xatol": 1e-10, "fatol": 1e-14,
                                "initial_simplex": x + np.vstack([np.zeros(dim), np.eye(dim) * cfg.step])})
        if -res.fun > fx + 1e-15:
            improved = -res.fun - fx
            x, fx = np.asarray(res.x, dtype=float), float(-res.fun)
            if improved < 1e-13:
                break
        else:
            break

    x = np.mod(x, 2 * math.pi)
    settings = SettingsPair.planar(*x) if functional == "chsh" else [BlochDirection.planar(t) for t in x]
    return OptimizationResult(functional, [float(t) for t in x], fx, bound, count, settings)
