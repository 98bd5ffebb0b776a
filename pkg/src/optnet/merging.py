"""Virtual Bell-pair merging and its combination with clustering.

Every distinct requested link (i, j) starts as a virtual Bell pair between a
virtual qubit at i and one at j. Virtual qubits at the same node are merged
two by two whenever the simultaneity test allows it, until nothing merges.

Planning model
--------------
Each link is served by an explicit path of virtual qubits (initially the
direct virtual edge). A request is *servable* when the paths of its links
are induced, pairwise vertex-disjoint and joined by no edge; then Z on every
other qubit and X along path interiors leaves exactly the requested Bell
pairs. Merging two virtual qubits identifies them (union of neighborhoods).
When both already sit in one component the identification closes a cycle;
the edge of the second qubit on that cycle is dropped and the links using
it are rerouted along shortest paths when all links on the cycle are
single-link only; otherwise the cycle is kept. The other option is the
fallback when the first breaks servability. A merge is only committed when every request
stays servable, so recipes never fail.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

from .clustering import build_hierarchy
from .graph_state import GraphState
from .requests import Link, Request, RequestSet
from .resource import Recipe, ResourceState, combine, x, z


class MergingError(RuntimeError):
    pass


@dataclass
class MergeStats:
    merges: int = 0
    dropped_cycles: int = 0
    kept_cycles: int = 0
    global_pass: int = 0
    restricted_pass: int = 0
    rejected_condition: int = 0
    rejected_structure: int = 0


@dataclass
class VirtualGraph:
    """Planning graph of virtual qubits; see the module docstring."""

    rs: RequestSet
    links: list[Link]
    owner: dict[int, int]
    members: dict[int, set[int]]
    adj: dict[int, set[int]]
    paths: list[list[int]]
    req_links: list[frozenset[int]]
    link_size: list[int]
    cooc: list[set[int]]
    through: dict[int, set[int]]
    stats: MergeStats = field(default_factory=MergeStats)
    # condition rejections stay valid until a vqubit of the inspected
    # region changes; watchers maps a vqubit to the cached pairs it guards
    rejected: set[tuple[int, int]] = field(default_factory=set)
    watchers: dict[int, set[tuple[int, int]]] = field(default_factory=dict)

    # construction -------------------------------------------------------------
    @classmethod
    def from_requests(cls, rs: RequestSet) -> VirtualGraph:
        links = rs.links()
        index = {link: k for k, link in enumerate(links)}
        # creation order: per node, by partner index
        slots = sorted((i, j) for a, b in links for i, j in ((a, b), (b, a)))
        vid = {slot: k for k, slot in enumerate(slots)}
        owner = {vid[s]: s[0] for s in slots}
        members = {vid[s]: {s[1]} for s in slots}
        adj: dict[int, set[int]] = {v: set() for v in owner}
        paths = []
        for a, b in links:
            u, v = vid[(a, b)], vid[(b, a)]
            adj[u].add(v)
            adj[v].add(u)
            paths.append([u, v])
        req_links = [frozenset(index[link] for link in r.links) for r in rs]
        size = [0] * len(links)
        cooc: list[set[int]] = [set() for _ in links]
        for ids in req_links:
            for k in ids:
                size[k] = max(size[k], len(ids))
                cooc[k] |= ids
        for k in range(len(links)):
            cooc[k].discard(k)
        through = {v: set() for v in owner}
        for k, p in enumerate(paths):
            for v in p:
                through[v].add(k)
        return cls(rs, links, owner, members, adj, paths, req_links, size, cooc, through)

    # queries -------------------------------------------------------------------
    @property
    def vqubits(self) -> list[int]:
        return sorted(self.owner)

    def at_node(self, node: int) -> list[int]:
        return sorted(v for v, o in self.owner.items() if o == node)

    @property
    def storage(self) -> int:
        return len(self.owner)

    def edges(self) -> list[tuple[int, int]]:
        return sorted((u, v) for u in self.adj for v in self.adj[u] if u < v)

    def components(self) -> list[list[int]]:
        seen: set[int] = set()
        out = []
        for s in sorted(self.owner):
            if s in seen:
                continue
            comp = []
            queue = deque([s])
            seen.add(s)
            while queue:
                u = queue.popleft()
                comp.append(u)
                for w in self.adj[u]:
                    if w not in seen:
                        seen.add(w)
                        queue.append(w)
            out.append(sorted(comp))
        return out

    def is_forest(self) -> bool:
        return all(sum(len(self.adj[v]) for v in c) // 2 == len(c) - 1 for c in self.components())

    def shortest_path(self, a: int, b: int) -> list[int] | None:
        prev = {a: a}
        queue = deque([a])
        while queue:
            u = queue.popleft()
            if u == b:
                out = [b]
                while out[-1] != a:
                    out.append(prev[out[-1]])
                return out[::-1]
            for w in sorted(self.adj[u]):
                if w not in prev:
                    prev[w] = u
                    queue.append(w)
        return None

    def second_neighborhood(self, seeds: Iterable[int]) -> set[int]:
        region = set(seeds)
        first = set()
        for s in region:
            first |= self.adj[s]
        second = set()
        for f in first:
            second |= self.adj[f]
        return region | first | second

    # merge conditions ----------------------------------------------------------------
    def incident_links(self, *vs: int) -> set[int]:
        out: set[int] = set()
        for v in vs:
            out |= self.through[v]
        return out

    def global_condition(self, u: int, v: int) -> bool:
        """Every edge at u and v serves only links of single-link requests."""
        return all(self.link_size[k] <= 1 for k in self.incident_links(u, v))

    def restricted_weights(self, u: int, v: int) -> dict[int, int]:
        """Per link at u or v: largest count, over its requests, of links inside
        the first-plus-second neighborhood of {u, v} (the link itself counted)."""
        region = self.second_neighborhood((u, v))
        inside = {k for w in region for k in self.through[w] if set(self.paths[k]) <= region}
        out = {}
        for k in self.incident_links(u, v):
            best = 1
            for r in range(len(self.req_links)):
                ids = self.req_links[r]
                if k in ids:
                    best = max(best, 1 + len((ids - {k}) & inside))
            out[k] = best
        return out

    def restricted_condition(self, u: int, v: int, region: set[int] | None = None) -> bool:
        # only partners of incident links can violate it
        partners: set[int] = set()
        for k in self.incident_links(u, v):
            partners |= self.cooc[k]
        if not partners:
            return True
        if region is None:
            region = self.second_neighborhood((u, v))
        return not any(region.issuperset(self.paths[k]) for k in partners)

    def merge_condition(self, u: int, v: int) -> str | None:
        """'global', 'restricted' or None; global first, restricted second."""
        if self.global_condition(u, v):
            self.stats.global_pass += 1
            return "global"
        if self.restricted_condition(u, v):
            self.stats.restricted_pass += 1
            return "restricted"
        return None

    # servability ---------------------------------------------------------------
    def path_induced(self, k: int) -> bool:
        p = self.paths[k]
        if len(set(p)) != len(p):
            return False
        pos = {w: i for i, w in enumerate(p)}
        for i, w in enumerate(p):
            for t in self.adj[w]:
                j = pos.get(t)
                if j is not None and abs(i - j) != 1:
                    return False
        return all(p[i + 1] in self.adj[p[i]] for i in range(len(p) - 1))

    def separated(self, k1: int, k2: int) -> bool:
        p2 = set(self.paths[k2])
        for w in self.paths[k1]:
            if w in p2 or self.adj[w] & p2:
                return False
        return True

    def links_servable(self, ks: Iterable[int]) -> bool:
        for k in ks:
            if not self.path_induced(k):
                return False
            for k2 in self.cooc[k]:
                if not self.separated(k, k2):
                    return False
        return True

    def servable(self) -> bool:
        return self.links_servable(range(len(self.links)))

    # mutation with undo ---------------------------------------------------------
    def _touch(self, vs: Iterable[int]) -> None:
        for w in vs:
            for pair in self.watchers.pop(w, ()):
                self.rejected.discard(pair)

    def _set_path(self, k: int, path: list[int], log: list) -> None:
        old = self.paths[k]
        self._touch(old)
        self._touch(path)
        log.append(("path", k, old))
        for w in old:
            self.through[w].discard(k)
        for w in path:
            self.through[w].add(k)
        self.paths[k] = path

    def _undo(self, log: list) -> None:
        for entry in reversed(log):
            kind = entry[0]
            if kind == "path":
                self._touch(self.paths[entry[1]])
                self._touch(entry[2])
            elif kind != "members":
                self._touch(entry[1:3] if kind != "vertex" else entry[1:2])
            if kind == "path":
                _, k, old = entry
                for w in self.paths[k]:
                    self.through[w].discard(k)
                for w in old:
                    self.through[w].add(k)
                self.paths[k] = old
            elif kind == "edge+":
                _, a, b = entry
                self.adj[a].discard(b)
                self.adj[b].discard(a)
            elif kind == "edge-":
                _, a, b = entry
                self.adj[a].add(b)
                self.adj[b].add(a)
            elif kind == "vertex":
                _, v, owner, members, through = entry
                self.owner[v] = owner
                self.members[v] = members
                self.adj[v] = set()
                self.through[v] = through
            elif kind == "members":
                _, w, old = entry
                self.members[w] = old

    def _add_edge(self, a: int, b: int, log: list) -> None:
        if b not in self.adj[a]:
            self._touch((a, b))
            self.adj[a].add(b)
            self.adj[b].add(a)
            log.append(("edge+", a, b))

    def _remove_edge(self, a: int, b: int, log: list) -> None:
        if b in self.adj[a]:
            self._touch((a, b))
            self.adj[a].discard(b)
            self.adj[b].discard(a)
            log.append(("edge-", a, b))

    def _identify(self, u: int, v: int, log: list) -> set[int]:
        """Fold v into u; returns links whose path changed."""
        changed = set(self.through[v])
        for t in sorted(self.adj[v]):
            self._remove_edge(v, t, log)
            self._add_edge(u, t, log)
        for k in sorted(changed):
            p = [u if w == v else w for w in self.paths[k]]
            if p.count(u) > 1:
                i, j = p.index(u), len(p) - 1 - p[::-1].index(u)
                p = p[: i + 1] + p[j + 1:]
            self._set_path(k, p, log)
        log.append(("vertex", v, self.owner[v], self.members[v], self.through[v]))
        log.append(("members", u, set(self.members[u])))
        self.members[u] = self.members[u] | self.members[v]
        del self.owner[v], self.members[v], self.adj[v], self.through[v]
        return changed

    def try_merge(self, u: int, v: int) -> bool:
        """Merge v into u if the condition holds and every request stays servable.

        Closing a cycle: when every link along the cycle belongs only to
        single-link requests, v's cycle edge is dropped first (rerouting cannot
        hurt simultaneity); otherwise the cycle is kept first, since a rerouted
        path would leave the neighborhood the condition inspected.
        """
        if self.owner[u] != self.owner[v]:
            raise MergingError("merge candidates must share a node")
        if (u, v) in self.rejected:
            self.stats.rejected_condition += 1
            return False
        passed = self.merge_condition(u, v)
        if passed is None:
            self.stats.rejected_condition += 1
            self.rejected.add((u, v))
            for w in self.second_neighborhood((u, v)):
                self.watchers.setdefault(w, set()).add((u, v))
            return False
        cycle = self.shortest_path(u, v)
        free = cycle is not None and all(self.link_size[k] <= 1 for k in self.incident_links(*cycle))
        log: list = []
        changed = self._identify(u, v, log)
        if cycle is None or len(cycle) <= 3:
            if self.links_servable(changed | self.through[u]):
                self.stats.merges += 1
                return True
            self._undo(log)
            self.stats.rejected_structure += 1
            return False
        order = ("drop", "keep") if free else ("keep", "drop")
        for mode in order:
            if mode == "keep":
                if self.links_servable(changed | self.through[u]):
                    self.stats.kept_cycles += 1
                    self.stats.merges += 1
                    return True
                continue
            inner: list = []
            if self._drop_and_reroute(u, cycle[-2], changed, inner):
                log.extend(inner)
                self.stats.dropped_cycles += 1
                self.stats.merges += 1
                return True
            self._undo(inner)
        self._undo(log)
        self.stats.rejected_structure += 1
        return False

    def _drop_and_reroute(self, u: int, p_v: int, changed: set[int], log: list) -> bool:
        users = sorted(self.through[u] & self.through[p_v])
        self._remove_edge(u, p_v, log)
        for k in users:
            new = self.shortest_path(self.paths[k][0], self.paths[k][-1])
            if new is None:
                return False
            self._set_path(k, new, log)
        return self.links_servable(changed | set(users) | self.through[u])


def merge_pass(rs: RequestSet, max_sweeps: int = 50) -> VirtualGraph:
    """Fixed point of pairwise merging.

    Nodes are visited in ascending order; at each node candidate pairs are
    scanned lexicographically by creation order and the scan restarts after
    every merge. Sweeps repeat until one completes without a merge.
    """
    vg = VirtualGraph.from_requests(rs)
    for _ in range(max_sweeps):
        merged_any = False
        for node in range(rs.n):
            while True:
                cands = vg.at_node(node)
                done = True
                for a in range(len(cands)):
                    for b in range(a + 1, len(cands)):
                        if vg.try_merge(cands[a], cands[b]):
                            done = False
                            merged_any = True
                            break
                    if not done:
                        break
                if done:
                    break
        if not merged_any:
            return vg
    raise MergingError("merging did not reach a fixed point")


def link_recipe(vg: VirtualGraph, link_ids: Iterable[int], qubit: dict[int, int]) -> Recipe:
    """Z off the chosen paths, then X along each path interior."""
    ids = sorted(link_ids)
    on_path = {w for k in ids for w in vg.paths[k]}
    steps: Recipe = [z(qubit[w]) for w in sorted(vg.owner) if w not in on_path]
    for k in ids:
        p = vg.paths[k]
        for w in p[1:-1]:
            steps.append(x(qubit[w], qubit[p[0]]))
    return steps


def realize(vg: VirtualGraph, id_offset: int = 0, meta: dict | None = None) -> ResourceState:
    """One graph state per component; qubit ids are consecutive from ``id_offset``."""
    qubit = {w: id_offset + i for i, w in enumerate(sorted(vg.owner))}
    states = []
    for comp in vg.components():
        g = GraphState({qubit[w]: vg.owner[w] for w in comp})
        for w in comp:
            for t in vg.adj[w]:
                if w < t:
                    g.add_edge(qubit[w], qubit[t])
        states.append(g)
    recipes = {r: link_recipe(vg, ids, qubit) for r, ids in enumerate(vg.req_links)}
    info = {"n": vg.rs.n, "strategy": "merging"}
    info.update(meta or {})
    return ResourceState(states, recipes, info)


def merge_resource(rs: RequestSet, id_offset: int = 0) -> ResourceState:
    return realize(merge_pass(rs), id_offset)


def bell_union(rs: RequestSet, id_offset: int = 0) -> ResourceState:
    """Baseline: one stored Bell pair per distinct requested link."""
    states = []
    ends: dict[Link, tuple[int, int]] = {}
    q = id_offset
    for a, b in rs.links():
        states.append(GraphState({q: a, q + 1: b}, [(q, q + 1)]))
        ends[(a, b)] = (q, q + 1)
        q += 2
    recipes = {}
    for r_idx, r in enumerate(rs):
        recipes[r_idx] = [z(t) for link, pair in ends.items() if link not in r.links for t in pair]
    return ResourceState(states, recipes, {"n": rs.n, "strategy": "bell_union"})


def _on_parts(rs: RequestSet, hierarchy, synth) -> ResourceState:
    pieces = []
    offset = 0
    for part in hierarchy.parts:
        sub, where = part.request_set(rs.n)
        res = synth(sub, offset)
        offset += res.storage
        pieces.append(ResourceState(res.states, {r: res.recipes[i] for r, i in where.items()}, res.meta))
    return combine(pieces)


def cluster_then_merge(rs: RequestSet, rounds: int = 1, order: str = "smallest", seed=None) -> ResourceState:
    """Cluster, then merge each layer's link slice independently."""
    h = build_hierarchy(rs, rounds=rounds, order=order, seed=seed)
    res = _on_parts(rs, h, merge_resource)
    res.meta.update({"n": rs.n, "strategy": "cluster_merge", "rounds": rounds, "parts": len(h.parts)})
    return res


def parts_resource(rs: RequestSet, hierarchy, synth) -> ResourceState:
    res = _on_parts(rs, hierarchy, synth)
    res.meta["n"] = rs.n
    return res


__all__ = [
    "MergingError",
    "MergeStats",
    "VirtualGraph",
    "merge_pass",
    "realize",
    "link_recipe",
    "merge_resource",
    "bell_union",
    "cluster_then_merge",
    "parts_resource",
]
