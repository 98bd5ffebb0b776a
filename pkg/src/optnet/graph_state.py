"""Graph states with node ownership and the graph rules for local operations.

Every public operation returns a new :class:`GraphState`; the ``_inplace``
methods mutate and are meant for states the caller exclusively holds.
Measurement byproducts (local Pauli / Clifford corrections) are not tracked:
results are exact up to local Clifford operations, and the +1 branch is used.
"""

from __future__ import annotations

import json
from collections import deque
from collections.abc import Hashable, Iterable, Sequence
from typing import Any

from .gf2 import submatrix_rank

QubitId = Hashable


class GraphStateError(ValueError):
    pass


class UnknownQubitError(GraphStateError, KeyError):
    pass


class NonLocalOperationError(GraphStateError):
    pass


def id_key(q: QubitId) -> tuple:
    """Total order over mixed int/str ids (ints first)."""
    if isinstance(q, int):
        return (0, q, "")
    if isinstance(q, tuple):
        return (1, 0, repr(q))
    return (2, 0, str(q))


class GraphState:
    """Simple labeled graph over qubits, each owned by a network node."""

    __slots__ = ("owner", "adj")

    def __init__(self, owners: dict | None = None, edges: Iterable[Sequence] = ()):
        self.owner: dict[QubitId, int] = dict(owners or {})
        self.adj: dict[QubitId, set] = {q: set() for q in self.owner}
        for u, v in edges:
            self.add_edge(u, v)

    # construction helpers -------------------------------------------------
    def add_qubit(self, q: QubitId, owner: int) -> None:
        if q in self.owner:
            raise GraphStateError(f"duplicate qubit id {q!r}")
        self.owner[q] = owner
        self.adj[q] = set()

    def add_edge(self, u: QubitId, v: QubitId) -> None:
        self._check(u)
        self._check(v)
        if u == v:
            raise GraphStateError("self-loops are not allowed")
        self.adj[u].add(v)
        self.adj[v].add(u)

    def copy(self) -> GraphState:
        g = GraphState.__new__(GraphState)
        g.owner = dict(self.owner)
        g.adj = {q: set(n) for q, n in self.adj.items()}
        return g

    # queries ---------------------------------------------------------------
    @property
    def qubits(self) -> list:
        return sorted(self.owner, key=id_key)

    def __len__(self) -> int:
        return len(self.owner)

    def __contains__(self, q: object) -> bool:
        return q in self.owner

    def neighbors(self, q: QubitId) -> frozenset:
        self._check(q)
        return frozenset(self.adj[q])

    def degree(self, q: QubitId) -> int:
        return len(self.adj[q])

    def edges(self) -> set[frozenset]:
        return {frozenset((u, v)) for u, nb in self.adj.items() for v in nb}

    def edge_list(self) -> list[tuple]:
        out = []
        for u in self.qubits:
            for v in sorted(self.adj[u], key=id_key):
                if id_key(u) < id_key(v):
                    out.append((u, v))
        return out

    def has_edge(self, u: QubitId, v: QubitId) -> bool:
        return v in self.adj.get(u, ())

    def components(self) -> list[list]:
        seen: set = set()
        comps = []
        for start in self.qubits:
            if start in seen:
                continue
            comp = []
            queue = deque([start])
            seen.add(start)
            while queue:
                u = queue.popleft()
                comp.append(u)
                for v in self.adj[u]:
                    if v not in seen:
                        seen.add(v)
                        queue.append(v)
            comps.append(sorted(comp, key=id_key))
        return comps

    def subgraph(self, qubits: Iterable[QubitId]) -> GraphState:
        keep = set(qubits)
        g = GraphState({q: self.owner[q] for q in keep})
        for q in keep:
            g.adj[q] = self.adj[q] & keep
        return g

    def relabel(self, mapping: dict) -> GraphState:
        g = GraphState({mapping.get(q, q): o for q, o in self.owner.items()})
        for u, v in self.edge_list():
            g.add_edge(mapping.get(u, u), mapping.get(v, v))
        return g

    def per_node(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for o in self.owner.values():
            counts[o] = counts.get(o, 0) + 1
        return counts

    def same_graph(self, other: GraphState) -> bool:
        return self.owner == other.owner and self.adj == other.adj

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GraphState) and self.same_graph(other)

    def __repr__(self) -> str:
        return f"GraphState(qubits={len(self)}, edges={self.edge_list()})"

    # in-place rules ----------------------------------------------------------
    def _check(self, q: QubitId) -> None:
        if q not in self.owner:
            raise UnknownQubitError(f"unknown qubit id {q!r}")

    def _toggle(self, u: QubitId, v: QubitId) -> None:
        if v in self.adj[u]:
            self.adj[u].discard(v)
            self.adj[v].discard(u)
        else:
            self.adj[u].add(v)
            self.adj[v].add(u)

    def _delete(self, q: QubitId) -> None:
        for v in self.adj.pop(q):
            self.adj[v].discard(q)
        del self.owner[q]

    def local_complement_inplace(self, q: QubitId) -> None:
        self._check(q)
        nb = sorted(self.adj[q], key=id_key)
        for i, u in enumerate(nb):
            for v in nb[i + 1:]:
                self._toggle(u, v)

    def measure_z_inplace(self, q: QubitId) -> None:
        self._check(q)
        self._delete(q)

    def measure_y_inplace(self, q: QubitId) -> None:
        self.local_complement_inplace(q)
        self._delete(q)

    def measure_x_inplace(self, q: QubitId, special_neighbor: QubitId | None = None) -> None:
        self._check(q)
        if not self.adj[q]:
            if special_neighbor is not None:
                raise GraphStateError(f"{special_neighbor!r} is not adjacent to {q!r}")
            self._delete(q)
            return
        if special_neighbor is None:
            special_neighbor = min(self.adj[q], key=id_key)
        elif special_neighbor not in self.adj[q]:
            raise GraphStateError(f"{special_neighbor!r} is not adjacent to {q!r}")
        self.local_complement_inplace(special_neighbor)
        self.local_complement_inplace(q)
        self._delete(q)
        self.local_complement_inplace(special_neighbor)

    def merging_measure_inplace(self, q1: QubitId, q2: QubitId, new_id: QubitId | None = None) -> QubitId:
        self._check_local_pair(q1, q2)
        nb = (self.adj[q1] ^ self.adj[q2]) - {q1, q2}
        owner = self.owner[q1]
        self._delete(q1)
        self._delete(q2)
        merged = q1 if new_id is None else new_id
        self.add_qubit(merged, owner)
        for v in nb:
            self.add_edge(merged, v)
        return merged

    def bell_merge_inplace(self, q1: QubitId, q2: QubitId) -> None:
        merged = self.merging_measure_inplace(q1, q2)
        self.measure_x_inplace(merged)

    def _check_local_pair(self, q1: QubitId, q2: QubitId) -> None:
        self._check(q1)
        self._check(q2)
        if q1 == q2:
            raise GraphStateError("merge needs two distinct qubits")
        if self.owner[q1] != self.owner[q2]:
            raise NonLocalOperationError(
                f"qubits {q1!r} and {q2!r} live at nodes {self.owner[q1]} and {self.owner[q2]}"
            )

    # serialization ---------------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        return {
            "nodes": [{"id": q, "owner": self.owner[q]} for q in self.qubits],
            "edges": [[u, v] for u, v in self.edge_list()],
        }

    @classmethod
    def from_dict(cls, data: dict) -> GraphState:
        owners = {_hashable(n["id"]): int(n["owner"]) for n in data["nodes"]}
        return cls(owners, [(_hashable(u), _hashable(v)) for u, v in data["edges"]])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> GraphState:
        return cls.from_dict(json.loads(text))

    def to_edgelist(self) -> str:
        return "".join(f"{u} {v}\n" for u, v in self.edge_list())

    @classmethod
    def from_edgelist(cls, text: str, owners: dict | None = None) -> GraphState:
        """Parse "u v" lines; qubits without an owner entry own themselves."""
        pairs = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            u, v = (int(t) if t.lstrip("-").isdigit() else t for t in line.split()[:2])
            pairs.append((u, v))
        owners = dict(owners or {})
        for u, v in pairs:
            for q in (u, v):
                owners.setdefault(q, q if isinstance(q, int) else 0)
        return cls(owners, pairs)


def _hashable(x: Any) -> QubitId:
    return tuple(_hashable(y) for y in x) if isinstance(x, list) else x


# constructors ---------------------------------------------------------------

def line_graph(ids: Sequence, owners: Sequence[int] | None = None) -> GraphState:
    owners = list(ids) if owners is None else list(owners)
    g = GraphState(dict(zip(ids, owners)))
    for u, v in zip(ids, ids[1:]):
        g.add_edge(u, v)
    return g


def star_graph(center: QubitId, leaves: Sequence, owners: dict | None = None) -> GraphState:
    ids = [center, *leaves]
    owners = owners or {q: q for q in ids}
    g = GraphState({q: owners[q] for q in ids})
    for leaf in leaves:
        g.add_edge(center, leaf)
    return g


def grid_graph(rows: int, cols: int) -> GraphState:
    """2D cluster with qubit r*cols+c owned by node r*cols+c."""
    g = GraphState({i: i for i in range(rows * cols)})
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                g.add_edge(i, i + 1)
            if r + 1 < rows:
                g.add_edge(i, i + cols)
    return g


def disjoint_union(states: Iterable[GraphState]) -> GraphState:
    out = GraphState()
    for s in states:
        for q, o in s.owner.items():
            out.add_qubit(q, o)
        for q, nb in s.adj.items():
            out.adj[q] |= nb
    return out


# value-semantics operations -------------------------------------------------

def measure_z(state: GraphState, q: QubitId) -> GraphState:
    g = state.copy()
    g.measure_z_inplace(q)
    return g


def local_complement(state: GraphState, q: QubitId) -> GraphState:
    g = state.copy()
    g.local_complement_inplace(q)
    return g


def measure_y(state: GraphState, q: QubitId) -> GraphState:
    g = state.copy()
    g.measure_y_inplace(q)
    return g


def measure_x(state: GraphState, q: QubitId, special_neighbor: QubitId | None = None) -> GraphState:
    """X measurement: LC(b0), LC(q), delete q, LC(b0) with b0 a neighbor of q.

    b0 defaults to the lowest-id neighbor; different choices give
    LC-equivalent graphs.
    """
    g = state.copy()
    g.measure_x_inplace(q, special_neighbor)
    return g


def merging_measure(state: GraphState, q1: QubitId, q2: QubitId, new_id: QubitId | None = None) -> GraphState:
    """Fuse two co-located qubits into one whose neighborhood is N(q1) xor N(q2)."""
    g = state.copy()
    g.merging_measure_inplace(q1, q2, new_id)
    return g


def bell_merge(state: GraphState, q1: QubitId, q2: QubitId) -> GraphState:
    """Bell measurement on two co-located qubits (both vertices removed).

    Realised as a merging measurement (ZZ parity) followed by an X
    measurement of the merged qubit (XX parity).
    """
    g = state.copy()
    g.bell_merge_inplace(q1, q2)
    return g


def repeater_path(
    state: GraphState,
    a: QubitId,
    b: QubitId,
    path: Sequence[QubitId],
    order: str = "Z-first",
) -> GraphState:
    """Isolate a Bell link a-b along ``path`` (the interior qubits, in order)."""
    chain = [a, *path, b]
    if len(set(chain)) != len(chain):
        raise GraphStateError("path is not simple")
    for u, v in zip(chain, chain[1:]):
        if not state.has_edge(u, v):
            raise GraphStateError(f"path broken between {u!r} and {v!r}")
    g = state.copy()
    on_path = set(chain)

    def z_neighborhood(vertices: Iterable[QubitId]) -> None:
        hood = set()
        for u in vertices:
            if u in g.adj:
                hood |= g.adj[u]
        for u in sorted(hood - on_path, key=id_key):
            g.measure_z_inplace(u)

    def x_path() -> None:
        prev = a
        for q in path:
            g.measure_x_inplace(q, prev if prev in g.adj[q] else None)

    if order == "Z-first":
        z_neighborhood(chain)
        x_path()
    elif order == "X-first":
        x_path()
        z_neighborhood([a, b])
    else:
        raise ValueError(f"unknown order {order!r}")
    return g


# LC orbits --------------------------------------------------------------------

def _component_masks(state: GraphState, comp: Sequence) -> tuple[int, ...]:
    idx = {q: i for i, q in enumerate(comp)}
    rows = []
    for q in comp:
        m = 0
        for v in state.adj[q]:
            m |= 1 << idx[v]
        rows.append(m)
    return tuple(rows)


def _lc_masks(rows: tuple[int, ...], v: int) -> tuple[int, ...]:
    nb = rows[v]
    out = list(rows)
    m = nb
    while m:
        low = m & -m
        u = low.bit_length() - 1
        out[u] ^= nb & ~low
        m ^= low
    return tuple(out)


def _cut_rank_profile(rows: tuple[int, ...]) -> tuple[int, ...]:
    n = len(rows)
    if n > 12:
        return ()
    full = (1 << n) - 1
    prof = []
    for s in range(1, 1 << (n - 1)):
        prof.append(submatrix_rank(rows, [i for i in range(n) if s >> i & 1],
                                   [i for i in range(n) if (full ^ s) >> i & 1]))
    return tuple(prof)


def lc_orbit_equal(g1: GraphState, g2: GraphState, max_qubits: int = 12) -> bool:
    """True iff g2 is reachable from g1 by local complementations.

    Works component by component (LC never changes connectivity), with a
    cut-rank profile prefilter and breadth-first orbit search.
    """
    if len(g1) > max_qubits or len(g2) > max_qubits:
        raise GraphStateError(f"lc_orbit_equal limited to {max_qubits} qubits")
    if set(g1.owner) != set(g2.owner):
        return False
    comps1 = g1.components()
    if {frozenset(c) for c in comps1} != {frozenset(c) for c in g2.components()}:
        return False
    for comp in comps1:
        a = _component_masks(g1, comp)
        b = _component_masks(g2, comp)
        if a == b:
            continue
        if _cut_rank_profile(a) != _cut_rank_profile(b):
            return False
        seen = {a}
        queue = deque([a])
        found = False
        while queue and not found:
            cur = queue.popleft()
            for v in range(len(comp)):
                nxt = _lc_masks(cur, v)
                if nxt == b:
                    found = True
                    break
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        if not found:
            return False
    return True


__all__ = [
    "GraphState",
    "GraphStateError",
    "UnknownQubitError",
    "NonLocalOperationError",
    "id_key",
    "line_graph",
    "star_graph",
    "grid_graph",
    "disjoint_union",
    "measure_z",
    "measure_x",
    "measure_y",
    "local_complement",
    "merging_measure",
    "bell_merge",
    "repeater_path",
    "lc_orbit_equal",
]
