"""Certify that a resource state fulfills requests by local operations."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .gf2 import gf2_rank
from .graph_state import GraphState, GraphStateError
from .requests import Link, Request, RequestSet, norm_link
from .resource import Recipe, ResourceState, Step, bell, lc, merge, x, z

RECIPE_VERIFIED = "RecipeVerified"
RECIPE_FAILED = "RecipeFailed"
SEARCH_VERIFIED = "SearchVerified"
NECESSARY_FAILED = "NecessaryConditionFailed"
SEARCH_EXHAUSTED = "SearchExhausted"

OK_STATUSES = (RECIPE_VERIFIED, SEARCH_VERIFIED)


class VerificationError(ValueError):
    pass


@dataclass
class Verdict:
    request_id: int | None
    status: str
    witness: list[Step] | None = None
    search_space_size: int = 0
    detail: str = ""
    bipartition: list[int] | None = None

    @property
    def ok(self) -> bool:
        return self.status in OK_STATUSES

    def witness_classes(self) -> list[str]:
        return [s.action for s in self.witness or []]

    def to_dict(self) -> dict:
        out: dict = {"request_id": self.request_id, "status": self.status, "search_space_size": self.search_space_size}
        if self.witness is not None:
            out["witness"] = [s.to_dict() for s in self.witness]
        if self.detail:
            out["detail"] = self.detail
        if self.bipartition is not None:
            out["bipartition"] = self.bipartition
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def outcome_diff(g: GraphState, request: Request) -> str:
    """Empty string iff ``g`` is exactly the requested Bell links."""
    problems = []
    got: dict[Link, int] = {}
    for q in g.qubits:
        if g.degree(q) != 1:
            problems.append(f"qubit {q!r} at node {g.owner[q]} has degree {g.degree(q)}")
    for u, v in g.edge_list():
        if g.owner[u] == g.owner[v]:
            problems.append(f"edge {u!r}-{v!r} inside node {g.owner[u]}")
            continue
        link = norm_link(g.owner[u], g.owner[v])
        got[link] = got.get(link, 0) + 1
    for link in sorted(request.links):
        if got.get(link, 0) != 1:
            problems.append(f"link {link} present {got.get(link, 0)} times")
    for link in sorted(set(got) - request.links):
        problems.append(f"unrequested link {link}")
    return "; ".join(problems)


def verify_recipe(
    res: ResourceState,
    request: Request,
    recipe: Recipe | None = None,
    request_id: int | None = None,
    base: GraphState | None = None,
) -> Verdict:
    """Replay a recipe; ``base`` may pass a precomputed ``res.union()``."""
    if recipe is None:
        if request_id is None or request_id not in res.recipes:
            raise VerificationError("no recipe for this request")
        recipe = res.recipes[request_id]
    g = res.union() if base is None else base.copy()
    try:
        for step in recipe:
            step.apply(g)
    except GraphStateError as exc:
        return Verdict(request_id, RECIPE_FAILED, list(recipe), 1, f"step failed: {exc}")
    diff = outcome_diff(g, request)
    if diff:
        return Verdict(request_id, RECIPE_FAILED, list(recipe), 1, diff)
    return Verdict(request_id, RECIPE_VERIFIED, list(recipe), 1)


# cut-rank bounds ---------------------------------------------------------------

def cut_rank(g: GraphState, side: Iterable[int]) -> int:
    """GF(2) rank of the adjacency block between qubits owned by ``side`` and the rest."""
    side = set(side)
    a = [q for q in g.qubits if g.owner[q] in side]
    b = [q for q in g.qubits if g.owner[q] not in side]
    if not side:
        raise VerificationError("trivial bipartition")
    if not a or not b:
        return 0
    col = {q: i for i, q in enumerate(b)}
    rows = []
    for q in a:
        m = 0
        for t in g.adj[q]:
            if t in col:
                m |= 1 << col[t]
        rows.append(m)
    return gf2_rank(rows)


def bipartitions(nodes: Sequence[int], sample: int | None = None, seed: int = 0) -> list[list[int]]:
    """Proper bipartitions as the side without ``nodes[0]``; exhaustive unless sampled."""
    nodes = list(nodes)
    rest = nodes[1:]
    if sample is None:
        out = []
        for mask in range(1, 1 << len(rest)):
            out.append([v for i, v in enumerate(rest) if mask >> i & 1])
        return out
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(sample):
        pick = rng.random(len(rest)) < 0.5
        if not pick.any():
            pick[rng.integers(len(rest))] = True
        out.append([v for v, p in zip(rest, pick) if p])
    return out


def necessary_condition(
    res: ResourceState | GraphState,
    request: Request,
    n: int | None = None,
    exhaustive_limit: int = 12,
    sample: int = 1000,
) -> tuple[bool, list[int] | None]:
    """Cut-rank across every node bipartition must cover the crossing links."""
    g = res.union() if isinstance(res, ResourceState) else res
    nodes = sorted(set(g.owner.values()) | request.nodes) if n is None else list(range(n))
    if len(nodes) < 2:
        return True, None
    sides = bipartitions(nodes, None if len(nodes) <= exhaustive_limit else sample)
    for side in sides:
        s = set(side)
        crossing = sum((i in s) != (j in s) for i, j in request.links)
        if crossing and cut_rank(g, s) < crossing:
            return False, side
    return True, None


# bounded search ------------------------------------------------------------------

_ORDER = {"Z": 0, "Y": 1, "X": 2}


def _patterns(count: int):
    """Assignments of Z/Y/X, fewest non-Z first, then lexicographic (Z<Y<X)."""
    for nonz in range(count + 1):
        for where in itertools.combinations(range(count), nonz):
            for kinds in itertools.product("YX", repeat=nonz):
                out = ["Z"] * count
                for i, kd in zip(where, kinds):
                    out[i] = kd
                yield out


def _render(qubits: Sequence, pattern: Sequence[str]) -> Recipe:
    steps: Recipe = [z(q) for q, p in zip(qubits, pattern) if p == "Z"]
    for q, p in zip(qubits, pattern):
        if p == "Y":
            steps += [lc(q), z(q)]
        elif p == "X":
            steps.append(x(q))
    return steps


def _move_sequences(g: GraphState, caps: dict[int, int], depth: int):
    """Node-local MERGE/BELL sequences of exactly ``depth`` moves."""
    if depth == 0:
        yield []
        return
    by_node: dict[int, list] = {}
    for q in g.qubits:
        by_node.setdefault(g.owner[q], []).append(q)
    for node in sorted(by_node):
        qs = by_node[node]
        if len(qs) < 2 or caps.get(node, 0) <= 0:
            continue
        for kind in ("MERGE", "BELL"):
            for a, b in itertools.combinations(qs, 2):
                step = merge(a, b) if kind == "MERGE" else bell(a, b)
                h = g.copy()
                step.apply(h)
                caps[node] -= 1
                for rest in _move_sequences(h, caps, depth - 1):
                    yield [step, *rest]
                caps[node] += 1


def search_fulfillment(
    res: ResourceState | GraphState,
    request: Request,
    budget: int = 200_000,
    max_qubits: int = 16,
    max_moves: int | None = None,
    request_id: int | None = None,
) -> Verdict:
    """Enumerate local-move sequences, kept qubits and Z/Y/X patterns.

    One qubit is kept per endpoint node; every other qubit is measured.
    Move sequences are tried by increasing length (MERGE before BELL), with at
    most (qubits at the node - 1) moves per node. The first success in this
    deterministic order is returned as the witness (Y rendered as LC + Z).
    """
    g0 = res.union() if isinstance(res, ResourceState) else res.copy()
    if len(g0) > max_qubits:
        raise VerificationError(f"search limited to {max_qubits} qubits, got {len(g0)}")
    endpoints = sorted(request.nodes)
    counts: dict[int, int] = {}
    for o in g0.owner.values():
        counts[o] = counts.get(o, 0) + 1
    caps = {node: c - 1 for node, c in counts.items() if c >= 2}
    depth_cap = sum(caps.values()) if max_moves is None else max_moves
    tried = 0
    for depth in range(depth_cap + 1):
        for moves in _move_sequences(g0, dict(caps), depth):
            g = g0.copy()
            for step in moves:
                step.apply(g)
            by_node: dict[int, list] = {}
            for q in g.qubits:
                by_node.setdefault(g.owner[q], []).append(q)
            if any(node not in by_node for node in endpoints):
                continue
            for keep in itertools.product(*(by_node[node] for node in endpoints)):
                kept = set(keep)
                others = [q for q in g.qubits if q not in kept]
                for pattern in _patterns(len(others)):
                    tried += 1
                    if tried > budget:
                        return Verdict(request_id, SEARCH_EXHAUSTED, None, tried - 1, "budget exhausted")
                    steps = _render(others, pattern)
                    h = g.copy()
                    for step in steps:
                        step.apply(h)
                    if not outcome_diff(h, request):
                        return Verdict(request_id, SEARCH_VERIFIED, [*moves, *steps], tried)
    return Verdict(request_id, SEARCH_EXHAUSTED, None, tried, "search space exhausted")


def certify(
    res: ResourceState,
    request: Request,
    request_id: int | None = None,
    search: bool = True,
    budget: int = 200_000,
) -> Verdict:
    """Recipe first; then the cut-rank bound; then bounded search."""
    recipe_verdict = None
    if request_id is not None and request_id in res.recipes:
        recipe_verdict = verify_recipe(res, request, request_id=request_id)
        if recipe_verdict.ok:
            return recipe_verdict
    ok, side = necessary_condition(res, request, n=res.meta.get("n"))
    if not ok:
        return Verdict(request_id, NECESSARY_FAILED, None, 0, "cut-rank below crossing links", side)
    if search and res.storage <= 16:
        return search_fulfillment(res, request, budget=budget, request_id=request_id)
    if recipe_verdict is not None:
        return recipe_verdict
    return Verdict(request_id, SEARCH_EXHAUSTED, None, 0, "no recipe and too large to search")


def verify_resource(res: ResourceState, rs: RequestSet, search: bool = True) -> list[Verdict]:
    return [certify(res, r, i, search=search) for i, r in enumerate(rs)]


def all_verified(res: ResourceState, rs: RequestSet) -> bool:
    """Fast check: every request's stored recipe yields exactly its links."""
    base = res.union()
    return all(verify_recipe(res, r, request_id=i, base=base).ok for i, r in enumerate(rs))


def cut_rank_witnesses(
    qubits: int,
    nodes: int,
    sides: Sequence[Iterable[int]],
    need: int,
    limit: int | None = None,
) -> list[tuple[tuple[int, ...], tuple[Link, ...]]]:
    """Every (owner tuple, edge list) on ``qubits`` qubits spread over all of
    ``nodes`` nodes whose cut-rank is at least ``need`` across every side.

    Exhaustive over labeled graphs and onto ownership maps; an empty result
    means no state of that size can meet the bound.
    """
    pairs = list(itertools.combinations(range(qubits), 2))
    if len(pairs) > 21:
        raise VerificationError("exhaustive enumeration limited to 7 qubits")
    side_sets = [set(s) for s in sides]
    owners = [o for o in itertools.product(range(nodes), repeat=qubits) if len(set(o)) == nodes]
    splits = []
    for o in owners:
        per = []
        for s in side_sets:
            a = [q for q in range(qubits) if o[q] in s]
            b = [q for q in range(qubits) if o[q] not in s]
            if min(len(a), len(b)) < need:
                break
            per.append((a, b))
        else:
            splits.append((o, per))
    out = []
    for mask in range(1 << len(pairs)):
        adj = [0] * qubits
        for bit, (u, v) in enumerate(pairs):
            if mask >> bit & 1:
                adj[u] |= 1 << v
                adj[v] |= 1 << u
        for o, per in splits:
            for a, b in per:
                bmask = sum(1 << q for q in b)
                if gf2_rank(adj[q] & bmask for q in a) < need:
                    break
            else:
                out.append((o, tuple(p for bit, p in enumerate(pairs) if mask >> bit & 1)))
                if limit is not None and len(out) >= limit:
                    return out
    return out


__all__ = [
    "Verdict",
    "VerificationError",
    "RECIPE_VERIFIED",
    "RECIPE_FAILED",
    "SEARCH_VERIFIED",
    "NECESSARY_FAILED",
    "SEARCH_EXHAUSTED",
    "outcome_diff",
    "verify_recipe",
    "cut_rank",
    "bipartitions",
    "necessary_condition",
    "search_fulfillment",
    "certify",
    "verify_resource",
    "all_verified",
    "cut_rank_witnesses",
]
