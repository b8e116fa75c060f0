"""Pre- and post-selected processes: ABL rule and sequential joint distributions.

Outcomes of dichotomic observables are encoded as integers +1/-1 and outcome
tuples are ordered early -> late.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Any, Mapping, Sequence

import numpy as np

from .linalg import (
    BlochDirection,
    as_matrix,
    as_vector,
    dagger,
    dichotomic_projectors,
    is_normalized,
    is_unitary,
    observable_from_bloch,
    outcome_projectors,
)

CLAMP = 1e-12
POST_FLOOR = 1e-14


class PostSelectionError(ValueError):
    """Every outcome is annihilated by the post-selection."""


@dataclass(frozen=True, eq=False)
class TwoTimeState:
    pre: np.ndarray
    post: np.ndarray
    stage_unitaries: tuple = ()

    def __post_init__(self):
        pre, post = as_vector(self.pre), as_vector(self.post)
        if not (is_normalized(pre) and is_normalized(post)):
            raise ValueError("pre- and post-selected states must be normalized")
        if pre.shape != post.shape:
            raise ValueError("pre and post dimensions differ")
        us = tuple(as_matrix(u) for u in self.stage_unitaries)
        for u in us:
            if u.shape != (pre.size, pre.size) or not is_unitary(u):
                raise ValueError("stage unitaries must be unitary of the state dimension")
        object.__setattr__(self, "pre", pre)
        object.__setattr__(self, "post", post)
        object.__setattr__(self, "stage_unitaries", us)

    def reversed(self) -> "TwoTimeState":
        """Time-reversed boundary conditions: swap pre/post, reverse and dagger the stages."""
        return TwoTimeState(self.post, self.pre, tuple(dagger(u) for u in reversed(self.stage_unitaries)))


def _observable(obs) -> np.ndarray:
    if isinstance(obs, BlochDirection):
        return observable_from_bloch(obs)
    return as_matrix(obs)


@dataclass(frozen=True)
class Setting:
    """A named dichotomic observable."""
    name: str
    observable: Any

    @property
    def matrix(self) -> np.ndarray:
        return _observable(self.observable)

    @property
    def projectors(self) -> dict[int, np.ndarray]:
        return outcome_projectors(self.matrix)


@dataclass(frozen=True)
class MeasurementSlot:
    label: Any
    settings: tuple  # of Setting

    def __post_init__(self):
        if not self.settings:
            raise ValueError("a measurement slot needs at least one setting")
        for s in self.settings:
            s.projectors  # validates +-1 spectrum

    def setting(self, name: str) -> Setting:
        for s in self.settings:
            if s.name == name:
                return s
        raise KeyError(name)


@dataclass
class JointDistribution:
    settings: tuple  # one setting name per slot
    probabilities: dict = field(default_factory=dict)  # outcome tuple -> probability

    def __post_init__(self):
        total = sum(self.probabilities.values())
        if any(p < 0 for p in self.probabilities.values()) or abs(total - 1) > 1e-9:
            raise ValueError(f"not a probability distribution (sum {total!r})")

    def __getitem__(self, outcomes) -> float:
        return self.probabilities.get(tuple(outcomes), 0.0)

    def correlator(self) -> float:
        """Expectation of the product of all outcomes."""
        return float(sum(np.prod(k) * p for k, p in self.probabilities.items()))


def outcome_key(outcomes: Sequence[int]) -> str:
    return "".join("+" if a > 0 else "-" for a in outcomes)


def distribution_to_json(d: JointDistribution) -> dict[str, Any]:
    return {
        "settings": list(d.settings),
        "probabilities": {outcome_key(k): float(p) for k, p in sorted(d.probabilities.items(), reverse=True)},
    }


def distribution_from_json(doc: Mapping[str, Any]) -> JointDistribution:
    probs = {tuple(1 if ch == "+" else -1 for ch in k): float(p) for k, p in doc["probabilities"].items()}
    return JointDistribution(tuple(doc["settings"]), probs)


def _clamp_normalize(raw: dict, normalize: bool) -> dict:
    out = {k: (0.0 if abs(p) < CLAMP else float(p)) for k, p in raw.items()}
    if normalize:
        n = sum(out.values())
        if n <= POST_FLOOR:
            raise PostSelectionError("post-selection impossible")
        out = {k: p / n for k, p in out.items()}
    return out


def abl_probability(tts: TwoTimeState, observable) -> dict[float, float]:
    """ABL probabilities p(a_n) = |<Phi|U2 P_n U1|Psi>|^2 / N for one intermediate slot."""
    if len(tts.stage_unitaries) not in (0, 2):
        raise ValueError("single intermediate slot needs exactly two stage unitaries (U1, U2)")
    d = tts.pre.size
    u1, u2 = tts.stage_unitaries or (np.eye(d), np.eye(d))
    raw = {}
    for ev, p in dichotomic_projectors(_observable(observable)):
        amp = np.vdot(tts.post, u2 @ p @ u1 @ tts.pre)
        raw[round(ev, 12) + 0.0] = abs(amp) ** 2
    return _clamp_normalize(raw, normalize=True)


def _stages(stage_unitaries, m: int, d: int, with_post: bool) -> list[np.ndarray]:
    need = m + 1 if with_post else m
    if stage_unitaries is None:
        return [np.eye(d, dtype=complex)] * (m + 1)
    us = [as_matrix(u) for u in stage_unitaries]
    if len(us) == m and not with_post:
        us = us + [np.eye(d, dtype=complex)]
    if len(us) != m + 1:
        raise ValueError(f"expected {need} stage unitaries, got {len(us)}")
    for u in us:
        if u.shape != (d, d) or not is_unitary(u):
            raise ValueError("stage unitaries must be unitary of the state dimension")
    return us


def _settings(slots) -> list[Setting]:
    out = []
    for i, s in enumerate(slots):
        if isinstance(s, Setting):
            out.append(s)
        elif isinstance(s, MeasurementSlot):
            if len(s.settings) != 1:
                raise ValueError("slot has several settings; choose one")
            out.append(s.settings[0])
        else:
            out.append(Setting(f"s{i}", s))
    return out


def joint_distribution(pre, slots: Sequence, stage_unitaries: Sequence | None = None,
                       post=None) -> JointDistribution:
    """Joint outcome distribution of a sequence of dichotomic measurements.

    ``pre`` is a state vector or (forward-only) a density matrix. Stage unitaries
    are U_1 ... U_{m+1}: U_k acts just before slot k and U_{m+1} before the
    post-selection. Without ``post`` the Lueders chain
    ||P_am U_m ... P_a1 U_1 |Psi>||^2 is returned unnormalized; with ``post`` the
    amplitudes <Phi|U_{m+1} P_am ... P_a1 U_1|Psi> are squared and normalized over
    outcomes for these settings.
    """
    settings = _settings(slots)
    pre = np.asarray(pre, dtype=complex)
    d = pre.shape[0]
    us = _stages(stage_unitaries, len(settings), d, post is not None)
    if stage_unitaries is None and post is None:
        us = [None] * len(us)
    projs = [s.projectors for s in settings]
    keys = list(product(*[sorted(p, reverse=True) for p in projs]))

    if post is not None:
        if pre.ndim != 1:
            raise ValueError("post-selection needs a pure pre-selected state")
        phi = as_vector(post)
        raw = {}
        for k in keys:
            x = us[0] @ pre
            for a, p, u in zip(k, projs, us[1:]):
                x = u @ (p[a] @ x)
            raw[k] = abs(np.vdot(phi, x)) ** 2
        probs = _clamp_normalize(raw, normalize=True)
    else:
        rho = np.outer(pre, pre.conj()) if pre.ndim == 1 else pre
        raw = {}
        for k in keys:
            r = rho
            for a, p, u in zip(k, projs, us):
                if u is not None:
                    r = u @ r @ dagger(u)
                r = p[a] @ r @ p[a]
            raw[k] = np.trace(r).real
        probs = _clamp_normalize(raw, normalize=False)
    return JointDistribution(tuple(s.name for s in settings), probs)


def marginal(d: JointDistribution, keep_slots: Sequence[int]) -> dict[tuple, float]:
    keep_slots = list(keep_slots)
    if not keep_slots:
        raise ValueError("keep at least one slot")
    out: dict[tuple, float] = {}
    for k, p in d.probabilities.items():
        sub = tuple(k[i] for i in keep_slots)
        out[sub] = out.get(sub, 0.0) + p
    return out


@dataclass
class SignalingReport:
    past_independent: bool
    future_independent: bool
    max_past_deviation: float
    max_future_deviation: float
    past_witness: tuple | None  # (x, y, y') where p(a|x) changed with y
    future_witness: tuple | None  # (y, x, x') where p(b|y) changed with x

    def as_dict(self) -> dict[str, Any]:
        return {
            "past_independent": self.past_independent,
            "future_independent": self.future_independent,
            "max_past_deviation": self.max_past_deviation,
            "max_future_deviation": self.max_future_deviation,
            "past_witness": list(self.past_witness) if self.past_witness else None,
            "future_witness": list(self.future_witness) if self.future_witness else None,
        }


def _max_dev(m1: dict, m2: dict) -> float:
    keys = set(m1) | set(m2)
    return max(abs(m1.get(k, 0.0) - m2.get(k, 0.0)) for k in keys)


def signaling_report(pre, slots: Sequence[MeasurementSlot], stage_unitaries=None,
                     tol: float = 1e-9) -> SignalingReport:
    """No-signaling checks for a forward-only two-slot experiment.

    Past independence: p(a|x) does not depend on the later setting y.
    Future independence: p(b|y) does not depend on the earlier setting x.
    """
    if len(slots) != 2:
        raise ValueError("signaling report needs exactly two slots")
    first, second = slots
    dists = {
        (x.name, y.name): joint_distribution(pre, [x, y], stage_unitaries)
        for x in first.settings for y in second.settings
    }
    past_dev, past_w = 0.0, None
    for x in first.settings:
        ys = [y.name for y in second.settings]
        ref = marginal(dists[(x.name, ys[0])], [0])
        for y in ys[1:]:
            dev = _max_dev(ref, marginal(dists[(x.name, y)], [0]))
            if dev > past_dev:
                past_dev, past_w = dev, (x.name, ys[0], y)
    fut_dev, fut_w = 0.0, None
    for y in second.settings:
        xs = [x.name for x in first.settings]
        ref = marginal(dists[(xs[0], y.name)], [1])
        for x in xs[1:]:
            dev = _max_dev(ref, marginal(dists[(x, y.name)], [1]))
            if dev > fut_dev:
                fut_dev, fut_w = dev, (y.name, xs[0], x)
    return SignalingReport(past_dev <= tol, fut_dev <= tol, past_dev, fut_dev, past_w, fut_w)
