"""Resource states: stored graph states plus per-request fulfillment recipes."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Iterable, Sequence

from .graph_state import GraphState, GraphStateError, QubitId, _hashable, disjoint_union

SINGLE = ("X", "Y", "Z", "LC")
LOCAL_PAIR = ("MERGE", "BELL")


@dataclass(frozen=True)
class Step:
    """One local operation: a single-qubit action or a node-local pair move."""

    action: str
    qubits: tuple
    neighbor: QubitId | None = None

    def __post_init__(self):
        if self.action in SINGLE:
            if len(self.qubits) != 1:
                raise ValueError(f"{self.action} acts on one qubit")
        elif self.action in LOCAL_PAIR:
            if len(self.qubits) != 2:
                raise ValueError(f"{self.action} acts on two qubits")
        else:
            raise ValueError(f"unknown action {self.action!r}")

    @property
    def single_qubit(self) -> bool:
        return self.action in SINGLE

    def apply(self, g: GraphState) -> None:
        a = self.action
        if a == "Z":
            g.measure_z_inplace(self.qubits[0])
        elif a == "Y":
            g.measure_y_inplace(self.qubits[0])
        elif a == "X":
            g.measure_x_inplace(self.qubits[0], self.neighbor)
        elif a == "LC":
            g.local_complement_inplace(self.qubits[0])
        elif a == "MERGE":
            g.merging_measure_inplace(*self.qubits)
        else:
            g.bell_merge_inplace(*self.qubits)

    def to_dict(self) -> dict[str, Any]:
        if self.single_qubit:
            out: dict[str, Any] = {"action": self.action, "qubit": self.qubits[0]}
            if self.neighbor is not None:
                out["neighbor"] = self.neighbor
            return out
        return {"action": self.action, "qubits": list(self.qubits)}

    @classmethod
    def from_dict(cls, d: dict) -> Step:
        if "qubit" in d:
            nb = d.get("neighbor")
            return cls(d["action"], (_hashable(d["qubit"]),), None if nb is None else _hashable(nb))
        return cls(d["action"], tuple(_hashable(q) for q in d["qubits"]))

    def __str__(self) -> str:
        return f"{self.action}({', '.join(map(str, self.qubits))})"


@lru_cache(maxsize=1 << 16)
def z(q) -> Step:
    # Z steps dominate recipes and are immutable, so instances are shared
    return Step("Z", (q,))


def x(q, neighbor=None) -> Step:
    return Step("X", (q,), neighbor)


def y(q) -> Step:
    return Step("Y", (q,))


def lc(q) -> Step:
    return Step("LC", (q,))


def merge(a, b) -> Step:
    return Step("MERGE", (a, b))


def bell(a, b) -> Step:
    return Step("BELL", (a, b))


Recipe = list[Step]


def run_recipe(state: GraphState, recipe: Iterable[Step]) -> GraphState:
    g = state.copy()
    for step in recipe:
        step.apply(g)
    return g


@dataclass
class ResourceState:
    """Graph states stored across the network; storage is the total qubit count."""

    states: list[GraphState]
    recipes: dict[int, Recipe] = field(default_factory=dict)
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        seen: set = set()
        for s in self.states:
            for q in s.owner:
                if q in seen:
                    raise GraphStateError(f"qubit id {q!r} used in two states")
                seen.add(q)

    @property
    def storage(self) -> int:
        return sum(len(s) for s in self.states)

    def per_node(self, n: int | None = None) -> list[int]:
        counts: dict[int, int] = {}
        for s in self.states:
            for o in s.owner.values():
                counts[o] = counts.get(o, 0) + 1
        size = n if n is not None else (max(counts) + 1 if counts else 0)
        return [counts.get(i, 0) for i in range(size)]

    def union(self) -> GraphState:
        return disjoint_union(self.states)

    def owner_of(self) -> dict:
        out: dict = {}
        for s in self.states:
            out.update(s.owner)
        return out

    def single_qubit_only(self) -> bool:
        return all(step.single_qubit for r in self.recipes.values() for step in r)

    def to_dict(self) -> dict[str, Any]:
        return {
            "states": [s.to_dict() for s in self.states],
            "storage": self.storage,
            "per_node": self.per_node(self.meta.get("n")),
            "recipes": {str(k): [s.to_dict() for s in r] for k, r in sorted(self.recipes.items())},
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ResourceState:
        states = [GraphState.from_dict(s) for s in d["states"]]
        recipes = {int(k): [Step.from_dict(s) for s in r] for k, r in d.get("recipes", {}).items()}
        res = cls(states, recipes, dict(d.get("meta", {})))
        if "storage" in d and d["storage"] != res.storage:
            raise ValueError(f"declared storage {d['storage']} != {res.storage}")
        return res

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> ResourceState:
        return cls.from_dict(json.loads(text))


def combine(resources: Sequence[ResourceState], meta: dict | None = None) -> ResourceState:
    """Disjoint union; recipes for the same request id are concatenated."""
    states: list[GraphState] = []
    recipes: dict[int, Recipe] = {}
    for res in resources:
        states.extend(res.states)
    keys = sorted({k for res in resources for k in res.recipes})
    for k in keys:
        steps: Recipe = []
        for res in resources:
            steps.extend(res.recipes.get(k, discard_all(res)))
        recipes[k] = steps
    return ResourceState(states, recipes, dict(meta or {}))


def discard_all(res: ResourceState) -> Recipe:
    return [z(q) for s in res.states for q in s.qubits]


__all__ = [
    "Step",
    "Recipe",
    "ResourceState",
    "run_recipe",
    "combine",
    "discard_all",
    "x",
    "y",
    "z",
    "lc",
    "merge",
    "bell",
]
