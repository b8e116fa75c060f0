"""History bundles on a discrete time base.

A bundle fixes a time grid, bridging dynamics, a pre-selected state and
(optionally) a post-selected state. Sections assign one state per time; a
measurement fiber is the history [Phi] (.) [outcome projectors] (.) [Psi]
steered by one choice of settings and outcomes between the fixed endpoints.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Any, Sequence

import numpy as np

from .histories import (
    NULL_WEIGHT,
    HistoryVector,
    TimeGrid,
    history_to_json,
    identity_bridging,
    vector_to_json,
    weight,
)
from .linalg import as_matrix, as_vector, is_normalized, is_unitary, projector
from .twotime import Setting, _settings, joint_distribution, outcome_key


@dataclass(frozen=True, eq=False)
class HistoryBundle:
    grid: TimeGrid
    bridging: tuple
    pre: np.ndarray
    post: np.ndarray | None = None

    def __post_init__(self):
        pre = as_vector(self.pre)
        if pre.size != self.grid.dim or not is_normalized(pre):
            raise ValueError("pre-selected state must be normalized with the fiber dimension")
        post = None
        if self.post is not None:
            post = as_vector(self.post)
            if post.size != self.grid.dim or not is_normalized(post):
                raise ValueError("post-selected state must be normalized with the fiber dimension")
        bridging = (identity_bridging(len(self.grid), self.grid.dim) if self.bridging is None
                    else tuple(as_matrix(u) for u in self.bridging))
        if len(bridging) != len(self.grid) - 1 or not all(is_unitary(u) for u in bridging):
            raise ValueError("need one unitary per adjacent pair of times")
        object.__setattr__(self, "pre", pre)
        object.__setattr__(self, "post", post)
        object.__setattr__(self, "bridging", bridging)

    @classmethod
    def for_slots(cls, n_slots: int, pre, post=None, stage_unitaries=None) -> "HistoryBundle":
        """Grid t0 (pre), t1..tm (measurement slots), t_{m+1} (post)."""
        pre = as_vector(pre)
        grid = TimeGrid.of_length(n_slots + 2, pre.size)
        return cls(grid, stage_unitaries, pre, post)

    @property
    def n_slots(self) -> int:
        return len(self.grid) - 2


@dataclass(frozen=True, eq=False)
class Section:
    states: tuple

    def __post_init__(self):
        states = tuple(as_vector(s) for s in self.states)
        if not all(is_normalized(s) for s in states):
            raise ValueError("section states must be normalized")
        object.__setattr__(self, "states", states)


@dataclass
class SectionHistory:
    history: HistoryVector
    weight: float

    @property
    def consistent(self) -> bool:
        return self.weight > NULL_WEIGHT


def section_to_history(b: HistoryBundle, s: Section) -> SectionHistory:
    if len(s.states) != len(b.grid):
        raise ValueError("section needs one state per time")
    if any(x.size != b.grid.dim for x in s.states):
        raise ValueError("section state dimension differs from the fiber")
    h = HistoryVector.elementary([projector(x) for x in s.states], b.grid, b.bridging)
    return SectionHistory(h, weight(h))


@dataclass
class MeasurementFiber:
    settings: tuple  # setting name per slot
    outcome: tuple  # +-1 per slot, early -> late
    history: HistoryVector
    abl_weight: float

    @property
    def consistent(self) -> bool:
        return self.abl_weight > NULL_WEIGHT


def fibers_for_settings(b: HistoryBundle, settings: Sequence) -> list[MeasurementFiber]:
    """One fiber per outcome tuple, including zero-weight ones."""
    if b.post is None:
        raise ValueError("fibers need a post-selected state")
    chosen: list[Setting] = _settings(settings)
    if len(chosen) != b.n_slots:
        raise ValueError(f"bundle has {b.n_slots} slots, got {len(chosen)} settings")
    dist = joint_distribution(b.pre, chosen, b.bridging, b.post)
    projs = [s.projectors for s in chosen]
    p_pre, p_post = projector(b.pre), projector(b.post)
    fibers = []
    for outcome in product(*[sorted(p, reverse=True) for p in projs]):
        ops = [p_pre] + [p[a] for a, p in zip(outcome, projs)] + [p_post]
        h = HistoryVector.elementary(ops, b.grid, b.bridging)
        fibers.append(MeasurementFiber(dist.settings, outcome, h, dist[outcome]))
    return fibers


@dataclass
class CorrespondenceReport:
    max_deviation: float
    weights: dict  # outcome key -> normalized chain weight
    abl: dict  # outcome key -> ABL / joint probability
    tol: float = 1e-9

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tol


def verify_weight_correspondence(b: HistoryBundle, settings: Sequence,
                                 tol: float = 1e-9) -> CorrespondenceReport:
    """Compare normalized fiber chain weights with the two-time joint distribution."""
    fibers = fibers_for_settings(b, settings)
    w = np.array([weight(f.history) for f in fibers])
    w = w / w.sum()
    keys = [outcome_key(f.outcome) for f in fibers]
    abl = {k: f.abl_weight for k, f in zip(keys, fibers)}
    dev = max(abs(wi - f.abl_weight) for wi, f in zip(w, fibers))
    return CorrespondenceReport(float(dev), dict(zip(keys, map(float, w))), abl, tol)


def _branch(a: int) -> str:
    return "p" if a > 0 else "m"


def bundle_graph(b: HistoryBundle, fibers: Sequence[MeasurementFiber]) -> dict[str, Any]:
    """Nodes per (time, branch) and one edge per fiber step.

    Endpoints are shared: node "t0_0" (pre-selection) and "t{m+1}_0"
    (post-selection); slot nodes are "t{i}_p" / "t{i}_m" for outcomes +1 / -1.
    """
    last = len(b.grid) - 1
    nodes: dict[str, dict[str, Any]] = {"t0_0": {"time": b.grid.labels[0], "role": "pre"}}
    edges = []
    for f in fibers:
        path = ["t0_0"]
        for i, a in enumerate(f.outcome, start=1):
            name = f"t{i}_{_branch(a)}"
            nodes.setdefault(name, {"time": b.grid.labels[i], "setting": f.settings[i - 1], "outcome": a})
            path.append(name)
        path.append(f"t{last}_0")
        for src, dst in zip(path, path[1:]):
            edges.append({
                "source": src,
                "target": dst,
                "fiber": outcome_key(f.outcome),
                "weight": f.abl_weight,
                "inconsistent": not f.consistent,
            })
    nodes[f"t{last}_0"] = {"time": b.grid.labels[last], "role": "post"}
    # time order, "+" branch before "-"
    order = sorted(nodes, key=lambda k: (int(k[1:].split("_")[0]), "0pm".index(k[-1])))
    return {"nodes": [{"id": k, **nodes[k]} for k in order], "edges": edges}


def _g6(x: float) -> str:
    return f"{x:.6g}"


def to_dot(graph: dict[str, Any], name: str = "bundle") -> str:
    lines = [f'digraph "{name}" {{', "  rankdir=LR;"]
    for n in graph["nodes"]:
        if "role" in n:
            label = n["role"]
        else:
            label = f'{n["setting"]}{"+" if n["outcome"] > 0 else "-"}'
        lines.append(f'  {n["id"]} [label="{label}"];')
    for e in graph["edges"]:
        attrs = f'label="{e["fiber"]}: {_g6(e["weight"])}"'
        if e["inconsistent"]:
            attrs += ', style=dashed, class="inconsistent"'
        lines.append(f'  {e["source"]} -> {e["target"]} [{attrs}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def bundle_to_json(b: HistoryBundle, fibers: Sequence[MeasurementFiber]) -> dict[str, Any]:
    return {
        "grid": {"labels": list(b.grid.labels), "dim": b.grid.dim},
        "pre": vector_to_json(b.pre),
        "post": vector_to_json(b.post) if b.post is not None else None,
        "settings": list(fibers[0].settings) if fibers else [],
        "fibers": [
            {"outcome": outcome_key(f.outcome), "weight": f.abl_weight, "history": history_to_json(f.history)}
            for f in fibers
        ],
    }


def export_bundle(b: HistoryBundle, fibers: Sequence[MeasurementFiber]) -> tuple[dict[str, Any], str]:
    """JSON document (bundle plus graph) and DOT text for the fiber graph."""
    graph = bundle_graph(b, fibers)
    doc = bundle_to_json(b, fibers)
    doc["graph"] = graph
    return doc, to_dot(graph)
