"""Copy counting and strategy choice when k requests are drawn at random.

Sizing at the mean stores ``ceil(k * p)`` copies of each resource (at least
one when p > 0). With ``margin=True`` copies are sized at
``k p + 2 sqrt(k p (1 - p))`` instead. With ``confidence=c`` every resource
is sized at the binomial quantile ``1 - (1 - c) / R`` for R sized resources,
so by the union bound a batch fails with probability at most ``1 - c``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import binom

from .clustering import spectral_cluster
from .merging import merge_resource
from .requests import Link, Request, RequestSet

EPS = 1e-9

BELL = "bell"
GHZ = "ghz"
MERGE = "merge"


class PlanningError(ValueError):
    pass


def _ceil(x: float) -> int:
    # 0.3 * 10 must give 3, not 4
    return int(math.ceil(x - EPS))


def copies_needed(k: int, p: float, margin: bool = False, quantile: float | None = None) -> int:
    """Copies of a resource used with probability p by each of k requests."""
    if p <= EPS:
        return 0
    if quantile is not None:
        return max(1, int(binom.ppf(quantile, k, min(1.0, p))))
    mean = k * p
    if margin:
        mean += 2.0 * math.sqrt(k * p * max(0.0, 1.0 - p))
    return max(1, _ceil(mean))


def _require_probs(rs: RequestSet) -> np.ndarray:
    if not rs.has_probabilities:
        raise PlanningError("request probabilities are required")
    return rs.probabilities()


def edge_weights(rs: RequestSet, probs: Sequence[float] | None = None) -> dict[Link, float]:
    """Total probability of the requests containing each link (q/m when uniform)."""
    p = rs.probabilities() if probs is None else np.asarray(probs, dtype=float)
    out: dict[Link, float] = {}
    for r, pr in zip(rs, p):
        for link in r.links:
            out[link] = out.get(link, 0.0) + float(pr)
    return dict(sorted(out.items()))


def expected_copies(rs: RequestSet, k: int) -> dict[Link, float]:
    return {e: w * k for e, w in edge_weights(rs, _require_probs(rs)).items()}


def asymptotic_copies(rs: RequestSet, k: int, margin: bool = False) -> dict[Link, int]:
    """Bell-pair copies per link: ceil(k * sum of p_j over requests using it), min 1."""
    return {e: copies_needed(k, w, margin) for e, w in edge_weights(rs, _require_probs(rs)).items()}


def bell_storage(copies: dict[Link, int]) -> int:
    return 2 * sum(copies.values())


# single-link requests ---------------------------------------------------------------

def single_pair_storage(n: int, k: int) -> dict[str, int]:
    """All n(n-1)/2 single-link requests equally likely: k GHZ states versus
    ceil(k p_j) (at least one) Bell pairs per link."""
    if n < 2 or k < 1:
        raise PlanningError("need n >= 2 and k >= 1")
    pairs = n * (n - 1) // 2
    return {GHZ: n * k, BELL: 2 * pairs * max(1, -(-k // pairs))}


def single_pair_threshold(n: int, k: int, rule: str = "direct") -> str:
    """GHZ copies or Bell copies for uniformly random single links.

    ``rule="direct"`` compares the two inventories (GHZ only when strictly
    smaller); ``rule="half"`` applies the closed form k <= (n-1)/2.
    """
    if rule == "half":
        if n < 2 or k < 1:
            raise PlanningError("need n >= 2 and k >= 1")
        return GHZ if 2 * k <= n - 1 else BELL
    if rule != "direct":
        raise ValueError(f"unknown rule {rule!r}")
    s = single_pair_storage(n, k)
    return GHZ if s[GHZ] < s[BELL] else BELL


# clusters of simultaneous links -----------------------------------------------------

def ladder_storage(n: int) -> int:
    return n * (3 * n + 2) // 8


def cluster_merge_threshold(n: int) -> float:
    """Largest k p_c for which a merged GHZ ladder beats the n(n-1) Bell floor."""
    if n < 4 or n % 2:
        raise PlanningError("cluster threshold needs even n >= 4")
    return 8.0 * (n - 1) / (3 * n + 2)


def cluster_strategy_storage(n: int, k: int, p_c: float) -> dict[str, int]:
    cluster_merge_threshold(n)
    return {MERGE: _ceil(ladder_storage(n) * k * p_c), BELL: n * (n - 1)}


def choose_cluster_strategy(n: int, k: int, p_c: float) -> str:
    return MERGE if k * p_c <= cluster_merge_threshold(n) + EPS else BELL


# slicing ---------------------------------------------------------------------------

@dataclass
class Slice:
    """Requests (without probabilities) plus their absolute probabilities."""

    requests: RequestSet
    probs: np.ndarray
    origin: list[int]

    @property
    def mass(self) -> float:
        return float(self.probs.sum())


def _slice(n: int, reqs: list[Request], probs: list[float], origin: list[int]) -> Slice:
    merged: dict[tuple, int] = {}
    keep: list[Request] = []
    p: list[float] = []
    org: list[int] = []
    for r, pr, o in zip(reqs, probs, origin):
        if not r.links:
            continue
        bare = Request(r.links)
        if bare.key in merged:
            p[merged[bare.key]] += pr
            continue
        merged[bare.key] = len(keep)
        keep.append(bare)
        p.append(pr)
        org.append(o)
    return Slice(RequestSet.build(n, keep), np.array(p, dtype=float), org)


def as_slice(rs: RequestSet) -> Slice:
    p = rs.probabilities()
    return _slice(rs.n, list(rs), list(p), list(range(rs.m)))


def probability_sets(rs: RequestSet) -> dict[int, Slice]:
    """Bucket m holds requests with 10^-m < p <= 10^-(m-1)."""
    p = _require_probs(rs)
    buckets: dict[int, list[int]] = {}
    for i, pr in enumerate(p):
        m = int(math.floor(-math.log10(pr) + 1e-12)) + 1
        buckets.setdefault(m, []).append(i)
    return {
        m: _slice(rs.n, [rs[i] for i in idx], [float(p[i]) for i in idx], idx)
        for m, idx in sorted(buckets.items())
    }


@dataclass
class WeightLayer:
    lo: float
    hi: float
    edges: set[Link]
    slice: Slice


def weight_layers(
    rs: RequestSet | Slice,
    boundaries: Sequence[float] = (0.5,),
) -> list[WeightLayer]:
    """Edges bucketed by weight into (0, b0], (b0, b1], ..., (b_last, inf).

    Weight is the total probability of requests containing the edge, which is
    q/m for equally likely requests. Empty layers are kept so indices line up
    with the boundaries.
    """
    sl = rs if isinstance(rs, Slice) else as_slice(rs)
    bounds = [float(b) for b in boundaries]
    if any(b <= 0 for b in bounds) or bounds != sorted(set(bounds)):
        raise ValueError("boundaries must be positive and strictly ascending")
    w = edge_weights(sl.requests, sl.probs)
    edges = [[] for _ in range(len(bounds) + 1)]
    for e, we in w.items():
        i = 0
        while i < len(bounds) and we > bounds[i] + EPS:
            i += 1
        edges[i].append(e)
    lows = [0.0, *bounds]
    highs = [*bounds, math.inf]
    out = []
    for lo, hi, es in zip(lows, highs, edges):
        es_set = set(es)
        sub = _slice(
            sl.requests.n,
            [Request(frozenset(r.links & es_set)) for r in sl.requests],
            list(sl.probs),
            list(sl.origin),
        )
        out.append(WeightLayer(lo, hi, es_set, sub))
    return out


def drop_unlikely(rs: RequestSet, epsilon: float) -> tuple[RequestSet, list[int]]:
    """Ignore the least likely requests while their total probability stays
    <= epsilon. Returns the kept requests and the dropped original indices."""
    p = _require_probs(rs)
    if epsilon <= 0:
        return rs, []
    order = sorted(range(rs.m), key=lambda i: (p[i], i))
    dropped, total = [], 0.0
    for i in order:
        if total + p[i] > epsilon + EPS or len(dropped) == rs.m - 1:
            break
        dropped.append(i)
        total += p[i]
    keep = [i for i in range(rs.m) if i not in set(dropped)]
    mass = float(sum(p[i] for i in keep))
    kept = RequestSet.build(rs.n, [Request(rs[i].links) for i in keep], [p[i] / mass for i in keep])
    return kept, sorted(dropped)


# planning --------------------------------------------------------------------------

@dataclass
class Group:
    """Links synthesized together and the inventory chosen for them."""

    label: str
    nodes: list[int]
    slice: Slice
    strategy: str
    storage: int
    copies: int | dict[Link, int]
    unit_storage: int = 0
    fractions: list[float] = field(default_factory=list)
    candidates: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "label": self.label,
            "nodes": self.nodes,
            "strategy": self.strategy,
            "storage": self.storage,
            "candidates": self.candidates,
            "requests": self.slice.requests.m,
        }
        if isinstance(self.copies, dict):
            out["copies"] = {f"{a}-{b}": c for (a, b), c in self.copies.items()}
        else:
            out["copies"] = self.copies
            out["unit_storage"] = self.unit_storage
        return out


def request_fraction(links: int, cluster_nodes: int) -> float:
    """Share of one merged copy used by a request slice: links / ceil(n_c/2), at most 1."""
    return min(1.0, links / max(1, -(-cluster_nodes // 2)))


Sizer = Callable[[float], int]


def _group(label: str, nodes: list[int], sl: Slice, size_of: Sizer, force: str | None = None) -> Group:
    copies = {e: size_of(w) for e, w in edge_weights(sl.requests, sl.probs).items()}
    cand = {BELL: bell_storage(copies)}
    size = len(nodes) if nodes else len(sl.requests.active_nodes())
    frac = [request_fraction(len(r), size) for r in sl.requests]
    p_c = float(np.dot(frac, sl.probs))
    unit = merge_resource(sl.requests).storage
    n_merge = size_of(min(1.0, p_c))
    cand[MERGE] = unit * n_merge
    best = force or min(cand, key=lambda s: (cand[s], s != BELL))
    if best == BELL:
        return Group(label, nodes, sl, BELL, cand[BELL], copies, 0, frac, cand)
    return Group(label, nodes, sl, MERGE, cand[MERGE], n_merge, unit, frac, cand)


@dataclass
class ScenarioPlan:
    k: int
    per_edge_copies: dict[Link, int]
    per_strategy_storage: dict[str, int]
    chosen: str
    groups: list[Group]
    margin: bool = False
    dropped: list[int] = field(default_factory=list)

    @property
    def storage(self) -> int:
        return self.per_strategy_storage[self.chosen]

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "chosen": self.chosen,
            "storage": self.storage,
            "per_strategy_storage": self.per_strategy_storage,
            "per_edge_copies": {f"{a}-{b}": c for (a, b), c in self.per_edge_copies.items()},
            "margin": self.margin,
            "dropped": self.dropped,
            "groups": [g.to_dict() for g in self.groups],
        }

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _layer_groups(layer: WeightLayer, idx: int, size_of: Sizer) -> list[Group]:
    sl = layer.slice
    if sl.requests.m == 0:
        return []
    part = spectral_cluster(sl.requests)
    out = []
    labels = sorted(set(int(c) for c in part))
    for c in labels:
        members = [v for v in range(len(part)) if part[v] == c]
        ms = set(members)
        sub = _slice(
            sl.requests.n,
            [Request(frozenset(e for e in r.links if e[0] in ms and e[1] in ms)) for r in sl.requests],
            list(sl.probs),
            list(sl.origin),
        )
        if sub.requests.m:
            out.append(_group(f"layer{idx}/cluster{c}", members, sub, size_of))
    cross = _slice(
        sl.requests.n,
        [Request(frozenset(e for e in r.links if part[e[0]] != part[e[1]])) for r in sl.requests],
        list(sl.probs),
        list(sl.origin),
    )
    if cross.requests.m:
        out.append(_group(f"layer{idx}/cross", [], cross, size_of))
    return out


def plan(
    rs: RequestSet,
    k: int,
    boundaries: Sequence[float] = (0.5,),
    margin: bool = False,
    allow_failure: float = 0.0,
    confidence: float | None = None,
) -> ScenarioPlan:
    """Inventory for k random requests; the cheapest of three candidates.

    ``bell``: Bell copies for every link. ``merge``: copies of one merged
    state for everything. ``composed``: probability decades, then weight
    layers, then spectral clusters, each group taking the cheaper of Bell
    copies and merged-state copies.
    """
    if k < 1:
        raise PlanningError("k must be >= 1")
    dropped: list[int] = []
    if allow_failure > 0:
        rs, dropped = drop_unlikely(rs, allow_failure)
    _require_probs(rs)
    buckets = probability_sets(rs)
    quantile = None
    if confidence is not None:
        if not 0 < confidence < 1:
            raise PlanningError("confidence must lie in (0, 1)")
        # every candidate sizes at most this many resources
        resources = 2 * len(buckets) * max(1, len(rs.links()))
        quantile = 1.0 - (1.0 - confidence) / resources

    def size_of(p: float) -> int:
        return copies_needed(k, p, margin, quantile)

    whole = as_slice(rs)
    copies = {e: size_of(w) for e, w in edge_weights(rs).items()}
    totals = {BELL: bell_storage(copies)}
    overall = _group("all", list(range(rs.n)), whole, size_of)
    totals[MERGE] = overall.candidates[MERGE]
    groups: list[Group] = []
    for m, bucket in buckets.items():
        for i, layer in enumerate(weight_layers(bucket, boundaries)):
            for g in _layer_groups(layer, i, size_of):
                g.label = f"decade{m}/{g.label}"
                groups.append(g)
    totals["composed"] = sum(g.storage for g in groups)
    chosen = min(totals, key=lambda s: (totals[s], list(totals).index(s)))
    if chosen == BELL:
        groups = [Group("all", list(range(rs.n)), whole, BELL, totals[BELL], copies, 0, [], {BELL: totals[BELL]})]
    elif chosen == MERGE:
        groups = [_group("all", list(range(rs.n)), whole, size_of, force=MERGE)]
    return ScenarioPlan(k, copies, totals, chosen, groups, margin, dropped)


# Monte Carlo -----------------------------------------------------------------------

def _group_uses(g: Group, req: Request) -> tuple[dict[Link, int], float]:
    """Links (Bell groups) or merged-copy share (merge groups) one request draws."""
    ks = set(g.slice.requests.links())
    part = req.links & ks
    if not part:
        return {}, 0.0
    if g.strategy == BELL:
        return {e: 1 for e in part}, 0.0
    size = len(g.nodes) if g.nodes else len(g.slice.requests.active_nodes())
    return {}, request_fraction(len(part), size)


def fulfills(pl: ScenarioPlan, batch: Sequence[Request]) -> bool:
    """Whether the planned inventory covers every request in ``batch``.

    Bell groups spend one pair per requested link; merge groups spend a
    request's fractional share of one copy.
    """
    for g in pl.groups:
        used_links: dict[Link, int] = {}
        share = 0.0
        for req in batch:
            links, s = _group_uses(g, req)
            for e, c in links.items():
                used_links[e] = used_links.get(e, 0) + c
            share += s
        if g.strategy == BELL:
            assert isinstance(g.copies, dict)
            if any(c > g.copies.get(e, 0) for e, c in used_links.items()):
                return False
        elif share > g.copies + EPS:
            return False
    return True


def monte_carlo(rs: RequestSet, pl: ScenarioPlan, trials: int = 1000, seed: int = 0) -> float:
    """Empirical failure rate of ``pl`` over batches of k i.i.d. requests."""
    p = _require_probs(rs)
    rng = np.random.default_rng(seed)
    fails = 0
    for _ in range(trials):
        draw = rng.choice(rs.m, size=pl.k, p=p / p.sum())
        if not fulfills(pl, [rs[int(i)] for i in draw]):
            fails += 1
    return fails / trials


__all__ = [
    "PlanningError",
    "BELL",
    "GHZ",
    "MERGE",
    "copies_needed",
    "edge_weights",
    "expected_copies",
    "asymptotic_copies",
    "bell_storage",
    "single_pair_storage",
    "single_pair_threshold",
    "ladder_storage",
    "cluster_merge_threshold",
    "cluster_strategy_storage",
    "choose_cluster_strategy",
    "Slice",
    "as_slice",
    "probability_sets",
    "WeightLayer",
    "weight_layers",
    "drop_unlikely",
    "Group",
    "ScenarioPlan",
    "request_fraction",
    "plan",
    "fulfills",
    "monte_carlo",
]
