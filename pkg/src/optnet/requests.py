"""Network requests, connectivity matrices and random request ensembles."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

Link = tuple[int, int]


class RequestError(ValueError):
    pass


def norm_link(i: int, j: int) -> Link:
    i, j = int(i), int(j)
    if i == j:
        raise RequestError(f"self-link at node {i}")
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Request:
    """A target configuration: a set of simultaneous Bell links."""

    links: frozenset[Link]
    probability: float | None = None

    @classmethod
    def of(cls, links: Iterable[Sequence[int]], probability: float | None = None) -> Request:
        return cls(frozenset(norm_link(i, j) for i, j in links), probability)

    @property
    def key(self) -> tuple[Link, ...]:
        return tuple(sorted(self.links))

    @property
    def nodes(self) -> set[int]:
        return {x for link in self.links for x in link}

    def max_degree(self) -> int:
        deg: dict[int, int] = {}
        for i, j in self.links:
            deg[i] = deg.get(i, 0) + 1
            deg[j] = deg.get(j, 0) + 1
        return max(deg.values(), default=0)

    def __len__(self) -> int:
        return len(self.links)


@dataclass(frozen=True)
class RequestSet:
    """n network nodes and the m requests the resource must fulfill."""

    n: int
    requests: tuple[Request, ...]
    relaxed: bool = False
    _index: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def build(
        cls,
        n: int,
        requests: Iterable[Request | Iterable[Sequence[int]]],
        probabilities: Sequence[float] | None = None,
        relaxed: bool = False,
    ) -> RequestSet:
        """Validate and deduplicate (probabilities of duplicates are summed)."""
        reqs = [r if isinstance(r, Request) else Request.of(r) for r in requests]
        if probabilities is not None:
            if len(probabilities) != len(reqs):
                raise RequestError("one probability per request expected")
            reqs = [Request(r.links, float(p)) for r, p in zip(reqs, probabilities)]
        merged: dict[tuple, Request] = {}
        for r in reqs:
            for i, j in r.links:
                if not (0 <= i < n and 0 <= j < n):
                    raise RequestError(f"link {(i, j)} outside [0, {n})")
            if not relaxed and r.max_degree() > 1:
                raise RequestError(f"node used twice in request {sorted(r.links)}")
            if r.probability is not None and not (0 < r.probability <= 1 + 1e-12):
                raise RequestError(f"probability {r.probability} outside (0, 1]")
            prev = merged.get(r.key)
            if prev is None:
                merged[r.key] = r
            elif prev.probability is not None or r.probability is not None:
                merged[r.key] = Request(r.links, (prev.probability or 0.0) + (r.probability or 0.0))
        out = tuple(merged.values())
        probs = [r.probability for r in out]
        if any(p is not None for p in probs):
            if any(p is None for p in probs):
                raise RequestError("either all or no requests carry probabilities")
            if abs(sum(probs) - 1.0) > 1e-9:
                raise RequestError(f"probabilities sum to {sum(probs)}, expected 1")
        return cls(int(n), out, relaxed)

    def __len__(self) -> int:
        return len(self.requests)

    def __iter__(self):
        return iter(self.requests)

    def __getitem__(self, i: int) -> Request:
        return self.requests[i]

    @property
    def m(self) -> int:
        return len(self.requests)

    @property
    def has_probabilities(self) -> bool:
        return bool(self.requests) and self.requests[0].probability is not None

    def probabilities(self) -> np.ndarray:
        if self.has_probabilities:
            return np.array([r.probability for r in self.requests])
        return np.full(self.m, 1.0 / max(self.m, 1))

    def links(self) -> list[Link]:
        """Distinct links over all requests, sorted."""
        return sorted({link for r in self.requests for link in r.links})

    def active_nodes(self) -> list[int]:
        return sorted({x for r in self.requests for x in r.nodes})

    def to_dict(self) -> dict:
        reqs = []
        for r in self.requests:
            item: dict = {"links": [list(link) for link in r.key]}
            if r.probability is not None:
                item["p"] = r.probability
            reqs.append(item)
        out: dict = {"n": self.n, "requests": reqs}
        if self.relaxed:
            out["relaxed"] = True
        return out

    @classmethod
    def from_dict(cls, data: dict) -> RequestSet:
        reqs = [Request.of(item["links"], item.get("p")) for item in data["requests"]]
        return cls.build(data["n"], reqs, relaxed=bool(data.get("relaxed", False)))

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> RequestSet:
        return cls.from_dict(json.loads(text))


# connectivity matrices ------------------------------------------------------

def adjacency(rs: RequestSet) -> np.ndarray:
    a = np.zeros((rs.n, rs.n), dtype=int)
    for r in rs:
        for i, j in r.links:
            a[i, j] = a[j, i] = 1
    return a


def simultaneous(rs: RequestSet) -> np.ndarray:
    """S_ij = largest request (by link count) that contains link i-j."""
    s = np.zeros((rs.n, rs.n), dtype=int)
    for r in rs:
        size = len(r.links)
        for i, j in r.links:
            s[i, j] = s[j, i] = max(s[i, j], size)
    return s


def cumulative(rs: RequestSet) -> np.ndarray:
    c = np.zeros((rs.n, rs.n), dtype=int)
    for r in rs:
        for i, j in r.links:
            c[i, j] += 1
            c[j, i] += 1
    return c


def laplacian(rs: RequestSet | np.ndarray) -> np.ndarray:
    c = cumulative(rs) if isinstance(rs, RequestSet) else np.asarray(rs)
    return np.diag(c.sum(axis=1)) - c


@dataclass
class ConnectivityMatrices:
    A: np.ndarray
    S: np.ndarray
    C: np.ndarray
    L: np.ndarray
    virtual_A: np.ndarray
    virtual_S: np.ndarray
    virtual_C: np.ndarray
    mask: np.ndarray

    def virtual_index(self, node: int, partner: int) -> int:
        return node * self.A.shape[0] + partner


def virtual_matrices(rs: RequestSet) -> ConnectivityMatrices:
    """Node-level matrices plus their per-qubit (n^2 x n^2) versions.

    Virtual qubit (i, j) sits at node i and is reserved for partner j; flat
    index i*n + j. Non-existent virtual qubits are masked, not removed.
    """
    n = rs.n
    a, s, c = adjacency(rs), simultaneous(rs), cumulative(rs)
    va = np.zeros((n * n, n * n), dtype=int)
    vs = np.zeros_like(va)
    vc = np.zeros_like(va)
    for i in range(n):
        for j in range(n):
            if a[i, j]:
                p, q = i * n + j, j * n + i
                va[p, q] = 1
                vs[p, q] = s[i, j]
                vc[p, q] = c[i, j]
    return ConnectivityMatrices(a, s, c, laplacian(c), va, vs, vc, a.reshape(-1).astype(bool))


def matrix_to_csv(m: np.ndarray, labels: Sequence | None = None) -> str:
    labels = list(range(m.shape[0])) if labels is None else list(labels)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["", *labels])
    for lab, row in zip(labels, m):
        w.writerow([lab, *(int(x) if float(x).is_integer() else float(x) for x in row)])
    return buf.getvalue()


# random ensembles -----------------------------------------------------------

def _random_request(n: int, accept, rng: np.random.Generator) -> list[Link]:
    free = set(range(n))
    links = []
    for i in range(n):
        if i not in free:
            continue
        free.discard(i)
        candidates = sorted(free)
        for c in rng.permutation(candidates) if candidates else ():
            c = int(c)
            if rng.random() < accept(i, c):
                links.append(norm_link(i, c))
                free.discard(c)
                break
    return links


def _collect(n: int, m: int, accept, rng: np.random.Generator) -> RequestSet:
    seen: dict[tuple, Request] = {}
    attempts = 0
    while len(seen) < m and attempts < 1000 * m + 1000:
        attempts += 1
        links = _random_request(n, accept, rng)
        if not links:
            continue
        r = Request.of(links)
        seen.setdefault(r.key, r)
    return RequestSet.build(n, list(seen.values()))


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def gen_uniform(n: int, m: int, seed=None) -> RequestSet:
    """m distinct random partial matchings; each proposal accepted w.p. 1/n."""
    if n < 2 or m < 1:
        raise RequestError("need n >= 2 and m >= 1")
    return _collect(n, m, lambda i, j: 1.0 / n, _rng(seed))


def group_of(node: int, group_size: int) -> int:
    return node // group_size


def gen_grouped(n: int, m: int, group_size: int = 4, bias: float = 10.0, seed=None) -> RequestSet:
    """Like gen_uniform, but intra-group proposals are accepted ``bias`` times as often."""
    if n < 2 or m < 1 or group_size < 1:
        raise RequestError("need n >= 2, m >= 1, group_size >= 1")
    p_in = min(1.0, bias / n)
    p_out = 1.0 / n

    def accept(i: int, j: int) -> float:
        return p_in if group_of(i, group_size) == group_of(j, group_size) else p_out

    return _collect(n, m, accept, _rng(seed))


# exhaustive ensembles -------------------------------------------------------

def all_matchings(nodes: Sequence[int], perfect: bool = True) -> list[list[Link]]:
    """Perfect (or all non-empty partial) matchings over ``nodes``."""
    nodes = sorted(nodes)
    out: list[list[Link]] = []

    def rec(rest: list[int], acc: list[Link]) -> None:
        if not rest:
            if acc or not perfect:
                out.append(list(acc))
            return
        first, others = rest[0], rest[1:]
        if not perfect:
            rec(others, acc)
        for k, partner in enumerate(others):
            rec(others[:k] + others[k + 1:], acc + [(first, partner)])

    rec(nodes, [])
    return [mm for mm in out if mm]


def all_requests(n: int) -> RequestSet:
    """Every non-empty partial matching on n nodes (9 for n = 4)."""
    return RequestSet.build(n, all_matchings(range(n), perfect=False))


def full_connectivity_requests(n: int) -> RequestSet:
    return RequestSet.build(n, all_matchings(range(n), perfect=True))


def bipartite_matchings(senders: Sequence[int], receivers: Sequence[int]) -> list[list[Link]]:
    from itertools import permutations

    return [[norm_link(s, r) for s, r in zip(senders, perm)] for perm in permutations(receivers)]


def _interval_configs(n: int, nn_only: bool) -> list[list[Link]]:
    out: list[list[Link]] = []

    def rec(pos: int, acc: list[Link]) -> None:
        if pos >= n - 1:
            if acc:
                out.append(list(acc))
            return
        rec(pos + 1, acc)
        last = pos + 1 if nn_only else n - 1
        for b in range(pos + 1, last + 1):
            rec(b + 2, acc + [(pos, b)])

    rec(0, [])
    return out


def _interval_counts(n: int, nn_only: bool) -> list[int]:
    # counts[p] = configurations (incl. empty) on nodes p..n-1
    counts = [1] * (n + 3)
    for p in range(n - 2, -1, -1):
        last = p + 1 if nn_only else n - 1
        counts[p] = counts[p + 1] + sum(counts[b + 2] for b in range(p + 1, last + 1))
    return counts


def cluster_requests_1d(n: int, nn_only: bool = False, sample: int | None = None, seed=None) -> RequestSet:
    """Link configurations obtainable from a 1D cluster by disjoint repeater paths.

    A link (a, b) consumes the segment a..b and needs the outside neighbors
    Z-measured, so segments are separated by at least one node. With
    ``sample`` the configurations are drawn uniformly without enumeration.
    """
    if n < 2:
        raise RequestError("need n >= 2")
    if sample is None:
        return RequestSet.build(n, _interval_configs(n, nn_only))
    rng = _rng(seed)
    counts = _interval_counts(n, nn_only)
    total = counts[0] - 1
    if sample >= total:
        return RequestSet.build(n, _interval_configs(n, nn_only))
    picks: dict[tuple, list[Link]] = {}
    while len(picks) < sample:
        links: list[Link] = []
        pos = 0
        while pos < n - 1:
            options = [(counts[pos + 1], None)]
            last = pos + 1 if nn_only else n - 1
            options += [(counts[b + 2], b) for b in range(pos + 1, last + 1)]
            weights = np.array([w for w, _ in options], dtype=float)
            choice = options[int(rng.choice(len(options), p=weights / weights.sum()))][1]
            if choice is None:
                pos += 1
            else:
                links.append((pos, choice))
                pos = choice + 2
        if links:
            picks.setdefault(tuple(links), links)
    return RequestSet.build(n, list(picks.values()))


def _grid_edges(side: int) -> list[Link]:
    edges = []
    for r in range(side):
        for c in range(side):
            i = r * side + c
            if c + 1 < side:
                edges.append((i, i + 1))
            if r + 1 < side:
                edges.append((i, i + side))
    return edges


def cluster_requests_2d(n: int, nn_only: bool = True, sample: int | None = None, seed=None) -> RequestSet:
    """Configurations obtainable from a sqrt(n) x sqrt(n) cluster by repeater paths.

    Nearest-neighbor mode enumerates every induced matching of the grid (each
    pair isolated by Z-measuring its neighbors). The general mode samples
    ``sample`` (default 2n) configurations by random disjoint path extraction.
    """
    side = math.isqrt(n)
    if side * side != n or n < 4:
        raise RequestError("2D cluster needs a perfect-square n >= 4")
    edges = _grid_edges(side)
    nbr: dict[int, set[int]] = {i: set() for i in range(n)}
    for i, j in edges:
        nbr[i].add(j)
        nbr[j].add(i)
    if nn_only and sample is None:
        out: list[list[Link]] = []

        def rec(k: int, acc: list[Link], blocked: set[int]) -> None:
            if k == len(edges):
                if acc:
                    out.append(list(acc))
                return
            rec(k + 1, acc, blocked)
            i, j = edges[k]
            if i not in blocked and j not in blocked:
                rec(k + 1, acc + [(i, j)], blocked | {i, j} | nbr[i] | nbr[j])

        rec(0, [], set())
        return RequestSet.build(n, out)
    rng = _rng(seed)
    want = 2 * n if sample is None else sample
    picks: dict[tuple, list[Link]] = {}
    attempts = 0
    while len(picks) < want and attempts < 200 * want:
        attempts += 1
        blocked: set[int] = set()
        links: list[Link] = []
        for _ in range(int(rng.integers(1, max(2, n // 4) + 1))):
            free = [v for v in range(n) if v not in blocked]
            if len(free) < 2:
                break
            a = int(rng.choice(free))
            if nn_only:
                cands = [b for b in nbr[a] if b not in blocked]
                if not cands:
                    continue
                b = int(rng.choice(sorted(cands)))
                path = [a, b]
            else:
                b = int(rng.choice([v for v in free if v != a]))
                path = _bfs_path(a, b, nbr, blocked)
                if path is None:
                    continue
            links.append(norm_link(a, b))
            for v in path:
                blocked.add(v)
                blocked |= nbr[v]
        if links:
            r = Request.of(links)
            picks.setdefault(r.key, links)
    return RequestSet.build(n, list(picks.values()))


def _bfs_path(a: int, b: int, nbr: dict[int, set[int]], blocked: set[int]) -> list[int] | None:
    from collections import deque

    prev = {a: None}
    queue = deque([a])
    while queue:
        u = queue.popleft()
        if u == b:
            path = [u]
            while prev[path[-1]] is not None:
                path.append(prev[path[-1]])
            return path[::-1]
        for v in sorted(nbr[u]):
            if v not in prev and v not in blocked:
                prev[v] = u
                queue.append(v)
    return None


def double_factorial(k: int) -> int:
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


__all__ = [
    "Link",
    "Request",
    "RequestSet",
    "RequestError",
    "ConnectivityMatrices",
    "norm_link",
    "adjacency",
    "simultaneous",
    "cumulative",
    "laplacian",
    "virtual_matrices",
    "matrix_to_csv",
    "gen_uniform",
    "gen_grouped",
    "group_of",
    "all_matchings",
    "all_requests",
    "full_connectivity_requests",
    "bipartite_matchings",
    "cluster_requests_1d",
    "cluster_requests_2d",
    "double_factorial",
]
