"""Spectral clustering of network nodes by cumulative request connectivity.

Nodes are embedded with eigenvectors of ``L = D - C`` and grouped with
k-means; groups then act as single router nodes of a higher layer and the
procedure repeats. Besides the induced router-level request sets, every
layer records which original links it is responsible for, so resource
synthesis can work on plain node-level link slices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .requests import Link, Request, RequestSet, cumulative, laplacian, norm_link


class ClusteringError(RuntimeError):
    pass


def choose_k(eigenvalues: Sequence[float], tol: float = 1e-9) -> int:
    """Eigengap heuristic over the ascending spectrum.

    The gap ``lam[i+1] - lam[i]`` is searched for i in [1, n-2] (the gap above
    the trivial zero mode is skipped), giving k = i + 1 >= 2. A flat
    spectrum, or one too short to search, gives k = 1.
    """
    lam = np.sort(np.asarray(eigenvalues, dtype=float))
    if lam.size < 2:
        raise ClusteringError("choose_k needs at least two eigenvalues")
    gaps = np.diff(lam)[1:]
    if gaps.size == 0:
        return 1
    scale = max(1.0, float(np.max(np.abs(lam))))
    if float(gaps.max()) <= tol * scale:
        return 1
    return int(np.argmax(gaps)) + 2


def _eigh(lap: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    try:
        vals, vecs = np.linalg.eigh(lap.astype(float))
    except np.linalg.LinAlgError as exc:
        raise ClusteringError(f"eigensolver failed: {exc}") from exc
    return vals, vecs


def kmeans(
    points: np.ndarray,
    k: int,
    tol: float = 1e-8,
    max_iter: int = 100,
    seed=None,
) -> np.ndarray:
    """Lloyd iterations from a farthest-point initialization.

    The first center is the point farthest from the centroid (or a seeded
    random point when ``seed`` is given); each later center is the point
    farthest from the chosen ones. Ties go to the lowest index.
    """
    pts = np.asarray(points, dtype=float)
    n = pts.shape[0]
    if k <= 1 or n <= 1:
        return np.zeros(n, dtype=int)
    k = min(k, n)
    if seed is None:
        first = int(np.argmax(np.linalg.norm(pts - pts.mean(axis=0), axis=1)))
    else:
        first = int(np.random.default_rng(seed).integers(n))
    centers = [pts[first]]
    dist = np.linalg.norm(pts - centers[0], axis=1)
    for _ in range(1, k):
        nxt = int(np.argmax(dist))
        centers.append(pts[nxt])
        dist = np.minimum(dist, np.linalg.norm(pts - pts[nxt], axis=1))
    c = np.array(centers)
    labels = np.zeros(n, dtype=int)
    for _ in range(max_iter):
        d = np.linalg.norm(pts[:, None, :] - c[None, :, :], axis=2)
        labels = np.argmin(d, axis=1)
        new = np.array([pts[labels == j].mean(axis=0) if np.any(labels == j) else c[j] for j in range(k)])
        shift = float(np.max(np.linalg.norm(new - c, axis=1)))
        c = new
        if shift < tol:
            break
    return _canonical(labels)


def _canonical(labels: Sequence[int]) -> np.ndarray:
    """Relabel clusters by first appearance so equal partitions compare equal."""
    order: dict[int, int] = {}
    out = np.empty(len(labels), dtype=int)
    for i, lab in enumerate(labels):
        out[i] = order.setdefault(int(lab), len(order))
    return out


def spectral_embedding(lap: np.ndarray, k: int, order: str = "smallest") -> np.ndarray:
    vals, vecs = _eigh(lap)
    if order == "smallest":
        emb = vecs[:, :k]
    elif order == "largest":
        emb = vecs[:, -k:]
    else:
        raise ValueError(f"unknown spectral order {order!r}")
    norms = np.linalg.norm(emb, axis=1, keepdims=True)
    return np.divide(emb, norms, out=np.zeros_like(emb), where=norms > 1e-12)


def spectral_cluster(
    rs: RequestSet | np.ndarray,
    k: int | None = None,
    order: str = "smallest",
    seed=None,
) -> np.ndarray:
    """Partition nodes (cluster id per node) from the Laplacian of C."""
    c = cumulative(rs) if isinstance(rs, RequestSet) else np.asarray(rs)
    n = c.shape[0]
    if n < 2:
        return np.zeros(n, dtype=int)
    lap = laplacian(c)
    if k is None:
        k = choose_k(_eigh(lap)[0])
    if k <= 1:
        return np.zeros(n, dtype=int)
    return kmeans(spectral_embedding(lap, k, order), k, seed=seed)


def induce_layer(rs: RequestSet, partition: Sequence[int]) -> RequestSet:
    """Requests over cluster ids; intra-cluster links drop, repeats collapse."""
    part = list(partition)
    k = max(part) + 1 if part else 0
    out = []
    for r in rs:
        links = {norm_link(part[i], part[j]) for i, j in r.links if part[i] != part[j]}
        if links:
            out.append(Request(frozenset(links)))
    return RequestSet.build(k, out, relaxed=True)


@dataclass
class Layer:
    partition: np.ndarray
    induced: RequestSet
    node_map: np.ndarray  # original node -> cluster id at this layer

    @property
    def k(self) -> int:
        return int(self.partition.max()) + 1 if self.partition.size else 0


@dataclass
class Part:
    """A group of original links synthesized together.

    ``links[r]`` holds the links of original request r assigned here.
    """

    layer: int
    cluster: int
    nodes: list[int]
    links: dict[int, list[Link]] = field(default_factory=dict)

    def request_set(self, n: int) -> tuple[RequestSet, dict[int, int]]:
        """Deduplicated sub-requests over the original n nodes, and a map from
        each original request index to its sub-request index."""
        subs = {r: Request.of(ls) for r, ls in sorted(self.links.items()) if ls}
        rs = RequestSet.build(n, list(subs.values()))
        pos = {req.key: i for i, req in enumerate(rs)}
        return rs, {r: pos[req.key] for r, req in subs.items()}

    @property
    def link_count(self) -> int:
        return sum(len(v) for v in self.links.values())


@dataclass
class ClusterHierarchy:
    base: RequestSet
    layers: list[Layer]
    parts: list[Part]

    @property
    def base_n(self) -> int:
        return self.base.n

    def to_dict(self) -> dict:
        return {
            "base_n": self.base_n,
            "layers": [
                {"partition": [int(x) for x in lay.partition], "induced": lay.induced.to_dict()}
                for lay in self.layers
            ],
            "parts": [
                {
                    "layer": p.layer,
                    "cluster": p.cluster,
                    "nodes": p.nodes,
                    "links": {str(r): [list(x) for x in ls] for r, ls in sorted(p.links.items())},
                }
                for p in self.parts
            ],
        }

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def build_hierarchy(
    rs: RequestSet,
    rounds: int = 1,
    order: str = "smallest",
    k: int | None = None,
    seed=None,
) -> ClusterHierarchy:
    """Repeated clustering with per-layer link slices.

    Layer l cluster c owns every original link whose endpoints sit in
    different layer l-1 clusters but in the same layer l cluster c. Links
    still crossing clusters after the last layer form one residual part.
    Stops early when a layer has fewer than 3 nodes or k = 1.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    layers: list[Layer] = []
    current = rs
    node_map = np.arange(rs.n)
    for depth in range(rounds):
        if current.n < 3:
            break
        part = spectral_cluster(current, k=k if depth == 0 else None, order=order, seed=seed)
        layer_map = part[node_map]
        layers.append(Layer(part, induce_layer(current, part), layer_map))
        node_map = layer_map
        current = layers[-1].induced
        if int(part.max()) == 0:
            break

    parts: list[Part] = []
    prev = np.arange(rs.n)
    for depth, lay in enumerate(layers):
        for c in range(lay.k):
            members = [int(v) for v in np.flatnonzero(lay.node_map == c)]
            parts.append(Part(depth, c, members))
        base = len(parts) - lay.k
        for r_idx, r in enumerate(rs):
            for i, j in sorted(r.links):
                if prev[i] != prev[j] and lay.node_map[i] == lay.node_map[j]:
                    parts[base + int(lay.node_map[i])].links.setdefault(r_idx, []).append((i, j))
        prev = lay.node_map
    residual = Part(len(layers), 0, list(range(rs.n)))
    for r_idx, r in enumerate(rs):
        for i, j in sorted(r.links):
            if prev[i] != prev[j]:
                residual.links.setdefault(r_idx, []).append((i, j))
    parts.append(residual)
    parts = [p for p in parts if p.link_count]
    return ClusterHierarchy(rs, layers, parts)


def rand_index(a: Sequence[int], b: Sequence[int]) -> float:
    a, b = np.asarray(a), np.asarray(b)
    n = a.size
    if n < 2:
        return 1.0
    same_a = a[:, None] == a[None, :]
    same_b = b[:, None] == b[None, :]
    agree = (same_a == same_b)[np.triu_indices(n, 1)]
    return float(agree.mean())


__all__ = [
    "ClusteringError",
    "ClusterHierarchy",
    "Layer",
    "Part",
    "choose_k",
    "kmeans",
    "spectral_embedding",
    "spectral_cluster",
    "induce_layer",
    "build_hierarchy",
    "rand_index",
]
