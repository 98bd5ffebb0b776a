"""Closed-form resource states for full pairwise connectivity.

Kinds and their storage:

* ``BellFull``: one Bell pair per node pair, n(n-1).
* ``Switch``: hub node 0 holds one half of a Bell pair with every other
  node, 2(n-1). Hub-local moves resolve any matching.
* ``GhzLadder``: n/2 nested GHZ states over nodes t..n-1 (t = 0..n/2-1),
  n(3n+2)/8, single-qubit recipes only.
* ``BellUnidirectional`` / ``GhzUnidirectional``: senders are nodes
  0..n/2-1, receivers n/2..n-1; a Bell pair per sender-receiver pair (n^2/2)
  or one GHZ per sender over all receivers (n/2 (n/2+1)).
* ``Butterfly4``: six qubits on a 2x3 grid. With senders s0, s1 and
  receivers r0, r1 the rows read ``r1 - s0 - r0`` and ``r0 - s1 - r1``, so
  the middle column together with either outer column is a 4-cycle over all
  four nodes, and the receivers' second qubits form the extra pair.
* ``ButterflyGeneral``: one Butterfly4 block per (sender pair, receiver
  pair), 3n^2/8 for n divisible by 4.

GHZ states are stored as stars with the center at the lowest node.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Callable, Iterable, Sequence

from .graph_state import GraphState, star_graph
from .requests import Link, Request, RequestSet, all_matchings, norm_link
from .resource import Recipe, ResourceState, bell, lc, merge, x, z

KINDS = (
    "BellFull",
    "Switch",
    "GhzLadder",
    "BellUnidirectional",
    "GhzUnidirectional",
    "Butterfly4",
    "ButterflyGeneral",
)
UNIDIRECTIONAL = ("BellUnidirectional", "GhzUnidirectional", "Butterfly4", "ButterflyGeneral")

# default recipe tables are skipped above this many requests
FAMILY_LIMIT = 1000


class ConstructionError(ValueError):
    pass


def _check(kind: str, n: int) -> None:
    if kind not in KINDS:
        raise ConstructionError(f"unknown construction kind {kind!r}")
    if n < 2:
        raise ConstructionError("need at least 2 nodes")
    if kind == "Butterfly4" and n != 4:
        raise ConstructionError("Butterfly4 is defined for n = 4 only")
    if kind == "ButterflyGeneral" and n % 4:
        raise ConstructionError("ButterflyGeneral needs n divisible by 4")
    if kind in ("GhzLadder", *UNIDIRECTIONAL) and n % 2:
        raise ConstructionError(f"{kind} needs even n")


def storage_formula(kind: str, n: int) -> int:
    _check(kind, n)
    if kind == "BellFull":
        return n * (n - 1)
    if kind == "Switch":
        return 2 * (n - 1)
    if kind == "GhzLadder":
        return n * (3 * n + 2) // 8
    if kind == "BellUnidirectional":
        return n * n // 2
    if kind == "GhzUnidirectional":
        return (n // 2) * (n // 2 + 1)
    if kind == "Butterfly4":
        return 6
    return 3 * n * n // 8


def senders(n: int) -> list[int]:
    return list(range(n // 2))


def receivers(n: int) -> list[int]:
    return list(range(n // 2, n))


def family(kind: str, n: int) -> list[Request]:
    """The requests a kind is built for: perfect matchings, or sender-receiver
    perfect matchings for the unidirectional kinds."""
    _check(kind, n)
    if kind in UNIDIRECTIONAL:
        rec = receivers(n)
        return [Request.of(zip(senders(n), perm)) for perm in itertools.permutations(rec)]
    return [Request.of(mt) for mt in all_matchings(range(n), perfect=True)]


def family_size(kind: str, n: int) -> int:
    _check(kind, n)
    if kind in UNIDIRECTIONAL:
        return math.factorial(n // 2)
    return math.prod(range(n - 1, 0, -2))


# layouts -------------------------------------------------------------------------
# Each layout returns (states, recipe function). Qubit ids are consecutive ints.

def _bell_pairs(pairs: Sequence[Link]):
    states, ends = [], {}
    for k, (a, b) in enumerate(pairs):
        states.append(GraphState({2 * k: a, 2 * k + 1: b}, [(2 * k, 2 * k + 1)]))
        ends[(a, b)] = (2 * k, 2 * k + 1)

    def recipe(req: Request) -> Recipe:
        missing = req.links - set(ends)
        if missing:
            raise ConstructionError(f"links {sorted(missing)} have no stored pair")
        return [z(q) for link, pair in ends.items() if link not in req.links for q in pair]

    return states, recipe


def _switch(n: int):
    # hub qubit 2(j-1) pairs with qubit 2(j-1)+1 at node j
    states = [GraphState({2 * (j - 1): 0, 2 * (j - 1) + 1: j}, [(2 * (j - 1), 2 * (j - 1) + 1)]) for j in range(1, n)]

    def hub(j: int) -> int:
        return 2 * (j - 1)

    def recipe(req: Request) -> Recipe:
        use_bell = (0, 1) in req.links
        steps: Recipe = []
        busy = set()
        for a, b in sorted(req.links):
            busy |= {a, b}
            if a == 0:
                continue
            if use_bell:
                steps.append(bell(hub(a), hub(b)))
            else:
                steps += [merge(hub(a), hub(b)), lc(hub(a)), z(hub(a))]
        idle = [z(q) for j in range(1, n) if j not in busy for q in (hub(j), hub(j) + 1)]
        return idle + steps

    return states, recipe


def ladder_assignment(n: int, req: Request) -> dict[int, Link]:
    """Layer index per requested pair: pairs sorted by smaller endpoint, each
    taking the smallest unused layer that holds both endpoints."""
    used: dict[int, Link] = {}
    for a, b in sorted(req.links):
        for t in range(min(a, n // 2 - 1), -1, -1):
            if t not in used:
                used[t] = (a, b)
                break
        else:
            raise ConstructionError(f"no free GHZ layer for link {(a, b)}")
    return used


def _ghz_layers(groups: Sequence[Sequence[int]]):
    """One star per node group, center at the group's first node."""
    states, where = [], []
    q = 0
    for nodes in groups:
        ids = list(range(q, q + len(nodes)))
        owners = dict(zip(ids, nodes))
        states.append(star_graph(ids[0], ids[1:], owners))
        where.append(dict(zip(nodes, ids)))
        q += len(nodes)
    return states, where


def _ghz_recipe(where: dict[int, int], pair: Link | None) -> Recipe:
    if pair is None:
        return [z(q) for q in where.values()]
    center_node = next(iter(where))
    u, v = pair
    keep = {where[u], where[v]}
    steps: Recipe = [z(q) for q in where.values() if q not in keep and q != where[center_node]]
    if center_node not in pair:
        steps.append(x(where[center_node], where[u]))
    return steps


def _ghz_ladder(n: int):
    states, where = _ghz_layers([list(range(t, n)) for t in range(n // 2)])

    def recipe(req: Request) -> Recipe:
        assign = ladder_assignment(n, req)
        steps: Recipe = []
        for t, layer in enumerate(where):
            steps += _ghz_recipe(layer, assign.get(t))
        return steps

    return states, recipe


def _ghz_unidirectional(n: int):
    states, where = _ghz_layers([[s, *receivers(n)] for s in senders(n)])

    def recipe(req: Request) -> Recipe:
        by_sender = {}
        for a, b in req.links:
            if a >= n // 2 or b < n // 2:
                raise ConstructionError(f"link {(a, b)} is not sender to receiver")
            by_sender[a] = (a, b)
        steps: Recipe = []
        for s, layer in zip(senders(n), where):
            steps += _ghz_recipe(layer, by_sender.get(s))
        return steps

    return states, recipe


# butterfly ------------------------------------------------------------------------

_BF_OWNERS = (0, 1, 2, 3, 2, 3)  # s0, s1, r0, r1 and the receivers' second qubits
_BF_EDGES = ((0, 1), (0, 3), (0, 4), (1, 2), (1, 5), (2, 3), (4, 5))


def butterfly_block(offset: int = 0, nodes: Sequence[int] = (0, 1, 2, 3)) -> GraphState:
    """2x3 grid; ``nodes`` = (s0, s1, r0, r1)."""
    g = GraphState({offset + i: nodes[o] for i, o in enumerate(_BF_OWNERS)})
    for a, b in _BF_EDGES:
        g.add_edge(offset + a, offset + b)
    return g


@lru_cache(maxsize=None)
def _butterfly_table() -> dict[frozenset, tuple]:
    """Single-qubit recipes on the unit block for every sub-matching, found by
    the verifier's bounded search (deterministic order)."""
    from .verification import search_fulfillment

    g = butterfly_block()
    subs = [frozenset()]
    subs += [frozenset({(s, r)}) for s in (0, 1) for r in (2, 3)]
    subs += [frozenset({(0, 2), (1, 3)}), frozenset({(0, 3), (1, 2)})]
    table = {}
    for links in subs:
        if not links:
            table[links] = tuple(z(q) for q in g.qubits)
            continue
        verdict = search_fulfillment(g, Request(links), max_moves=0)
        if not verdict.ok:
            raise ConstructionError(f"butterfly block cannot serve {sorted(links)}")
        table[links] = tuple(verdict.witness)
    return table


def _relabel(steps: Iterable, offset: int) -> Recipe:
    if offset == 0:
        return list(steps)
    out = []
    for s in steps:
        if s.action == "Z":
            out.append(z(s.qubits[0] + offset))
            continue
        qs = tuple(q + offset for q in s.qubits)
        nb = None if s.neighbor is None else s.neighbor + offset
        out.append(type(s)(s.action, qs, nb))
    return out


def _butterfly(n: int):
    snd, rec = senders(n), receivers(n)
    blocks = []
    for gi in range(0, len(snd), 2):
        for hi in range(0, len(rec), 2):
            blocks.append((snd[gi], snd[gi + 1], rec[hi], rec[hi + 1]))
    states = [butterfly_block(6 * k, nodes) for k, nodes in enumerate(blocks)]

    def recipe(req: Request) -> Recipe:
        table = _butterfly_table()
        covered: set[Link] = set()
        steps: Recipe = []
        for k, nodes in enumerate(blocks):
            local = {v: i for i, v in enumerate(nodes)}
            sub = frozenset(
                norm_link(local[a], local[b])
                for a, b in req.links
                if a in local and b in local and (a in snd) != (b in snd)
            )
            covered |= {(nodes[a], nodes[b]) for a, b in sub}
            steps += _relabel(table[sub], 6 * k)
        if covered != set(req.links):
            raise ConstructionError(f"links {sorted(set(req.links) - covered)} are not sender to receiver")
        return steps

    return states, recipe


_LAYOUTS: dict[str, Callable] = {
    "BellFull": lambda n: _bell_pairs(list(itertools.combinations(range(n), 2))),
    "Switch": _switch,
    "GhzLadder": _ghz_ladder,
    "BellUnidirectional": lambda n: _bell_pairs([(s, r) for s in senders(n) for r in receivers(n)]),
    "GhzUnidirectional": _ghz_unidirectional,
    "Butterfly4": _butterfly,
    "ButterflyGeneral": _butterfly,
}


def build(kind: str, n: int, requests: RequestSet | Iterable[Request] | None = None) -> ResourceState:
    """Resource state of ``kind`` with recipes keyed by request index.

    Without ``requests`` the kind's own family is used when it has at most
    ``FAMILY_LIMIT`` members; otherwise no recipes are attached.
    """
    _check(kind, n)
    states, recipe = _LAYOUTS[kind](n)
    if requests is None:
        reqs = family(kind, n) if family_size(kind, n) <= FAMILY_LIMIT else []
    else:
        reqs = list(requests)
    for r in reqs:
        bad = [v for v in r.nodes if not 0 <= v < n]
        if bad:
            raise ConstructionError(f"request uses nodes {bad} outside 0..{n - 1}")
    recipes = {i: recipe(r) for i, r in enumerate(reqs)}
    res = ResourceState(states, recipes, {"n": n, "kind": kind, "strategy": kind})
    if res.storage != storage_formula(kind, n):
        raise AssertionError(f"{kind} layout has {res.storage} qubits, formula says {storage_formula(kind, n)}")
    return res


def build_on(kind: str, nodes: Sequence[int], requests: Iterable[Request], id_offset: int = 0) -> ResourceState:
    """``kind`` over the given network nodes (local node i is ``nodes[i]``).

    Qubit ids are shifted by ``id_offset``; recipes are keyed by request index.
    """
    nodes = list(nodes)
    local = {v: i for i, v in enumerate(nodes)}
    try:
        reqs = [Request.of((local[a], local[b]) for a, b in r.links) for r in requests]
    except KeyError as exc:
        raise ConstructionError(f"request touches node {exc.args[0]} outside the given nodes") from None
    res = build(kind, len(nodes), reqs)
    states = []
    for g in res.states:
        h = GraphState({q + id_offset: nodes[o] for q, o in g.owner.items()})
        for u, v in g.edge_list():
            h.add_edge(u + id_offset, v + id_offset)
        states.append(h)
    recipes = {i: _relabel(steps, id_offset) for i, steps in res.recipes.items()}
    return ResourceState(states, recipes, {**res.meta, "nodes": nodes})


def recipe_for(kind: str, n: int, request: Request) -> Recipe:
    _check(kind, n)
    return _LAYOUTS[kind](n)[1](request)


__all__ = [
    "KINDS",
    "UNIDIRECTIONAL",
    "ConstructionError",
    "storage_formula",
    "build",
    "build_on",
    "recipe_for",
    "family",
    "family_size",
    "senders",
    "receivers",
    "ladder_assignment",
    "butterfly_block",
]
