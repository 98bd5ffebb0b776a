"""Stabilizer-tableau oracle for checking graph rules on small states.

Rows are generators ``(-1)^phase * prod_j X_j^x Z_j^z`` (x=z=1 meaning Y).
Only the stabilizer group matters for the LC-equivalence checks; phases are
carried through row products for completeness.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .gf2 import gf2_rank
from .graph_state import GraphState, GraphStateError, id_key


def _g(x1: int, z1: int, x2: int, z2: int) -> int:
    if x1 == 0 and z1 == 0:
        return 0
    if x1 == 1 and z1 == 1:
        return z2 - x2
    if x1 == 1:
        return z2 * (2 * x2 - 1)
    return x2 * (1 - 2 * z2)


@dataclass
class StabilizerTableau:
    n: int
    x_part: np.ndarray
    z_part: np.ndarray
    phases: np.ndarray
    labels: list

    @classmethod
    def from_graph(cls, state: GraphState) -> StabilizerTableau:
        labels = state.qubits
        idx = {q: i for i, q in enumerate(labels)}
        n = len(labels)
        x = np.eye(n, dtype=np.uint8)
        z = np.zeros((n, n), dtype=np.uint8)
        for u, v in state.edge_list():
            z[idx[u], idx[v]] = 1
            z[idx[v], idx[u]] = 1
        return cls(n, x, z, np.zeros(n, dtype=np.uint8), list(labels))

    def copy(self) -> StabilizerTableau:
        return StabilizerTableau(self.n, self.x_part.copy(), self.z_part.copy(), self.phases.copy(), list(self.labels))

    def index(self, q) -> int:
        try:
            return self.labels.index(q)
        except ValueError:
            raise GraphStateError(f"unknown qubit id {q!r}") from None

    # algebra ------------------------------------------------------------------
    def symplectic(self, a_x: np.ndarray, a_z: np.ndarray, b_x: np.ndarray, b_z: np.ndarray) -> int:
        return int((a_x @ b_z + a_z @ b_x) % 2)

    def rowsum(self, h: int, i: int) -> None:
        """Row h <- row i * row h."""
        total = 2 * int(self.phases[h]) + 2 * int(self.phases[i])
        for j in range(self.n):
            total += _g(int(self.x_part[i, j]), int(self.z_part[i, j]), int(self.x_part[h, j]), int(self.z_part[h, j]))
        self.phases[h] = 0 if total % 4 == 0 else 1
        self.x_part[h] ^= self.x_part[i]
        self.z_part[h] ^= self.z_part[i]

    def is_valid(self) -> bool:
        for a in range(self.n):
            for b in range(a + 1, self.n):
                if self.symplectic(self.x_part[a], self.z_part[a], self.x_part[b], self.z_part[b]):
                    return False
        rows = [int("".join(map(str, np.concatenate([self.x_part[r], self.z_part[r]]))) or "0", 2) for r in range(self.n)]
        return gf2_rank(rows) == self.n

    # gates and measurements -------------------------------------------------
    def hadamard(self, j: int) -> None:
        self.phases ^= self.x_part[:, j] & self.z_part[:, j]
        xj = self.x_part[:, j].copy()
        self.x_part[:, j] = self.z_part[:, j]
        self.z_part[:, j] = xj

    def phase_gate(self, j: int) -> None:
        self.phases ^= self.x_part[:, j] & self.z_part[:, j]
        self.z_part[:, j] ^= self.x_part[:, j]

    def cnot(self, c: int, t: int) -> None:
        self.phases ^= self.x_part[:, c] & self.z_part[:, t] & (self.x_part[:, t] ^ self.z_part[:, c] ^ 1)
        self.x_part[:, t] ^= self.x_part[:, c]
        self.z_part[:, c] ^= self.z_part[:, t]

    def measure(self, px: np.ndarray, pz: np.ndarray) -> None:
        """Project onto the +1 eigenspace of the Pauli (px, pz)."""
        anti = [r for r in range(self.n) if self.symplectic(self.x_part[r], self.z_part[r], px, pz)]
        if not anti:
            return
        p = anti[0]
        for h in anti[1:]:
            self.rowsum(h, p)
        self.x_part[p] = px
        self.z_part[p] = pz
        self.phases[p] = 0

    def measure_single(self, q, basis: str) -> None:
        j = self.index(q)
        px = np.zeros(self.n, dtype=np.uint8)
        pz = np.zeros(self.n, dtype=np.uint8)
        if basis in ("X", "Y"):
            px[j] = 1
        if basis in ("Z", "Y"):
            pz[j] = 1
        self.measure(px, pz)

    def remove(self, qubits: Sequence) -> None:
        """Drop qubits that are in a product state with the rest."""
        cols = [self.index(q) for q in qubits]
        used: set[int] = set()
        for part in (self.x_part, self.z_part):
            for c in cols:
                pivot = next((r for r in range(self.n) if r not in used and part[r, c]), None)
                if pivot is None:
                    continue
                for r in range(self.n):
                    if r != pivot and part[r, c]:
                        self.rowsum(r, pivot)
                used.add(pivot)
        if len(used) != len(cols):
            raise GraphStateError("qubits to remove are entangled with the rest")
        keep_rows = [r for r in range(self.n) if r not in used]
        keep_cols = [c for c in range(self.n) if c not in cols]
        if any(self.x_part[r, c] or self.z_part[r, c] for r in keep_rows for c in cols):
            raise GraphStateError("qubits to remove are entangled with the rest")
        self.x_part = self.x_part[np.ix_(keep_rows, keep_cols)]
        self.z_part = self.z_part[np.ix_(keep_rows, keep_cols)]
        self.phases = self.phases[keep_rows]
        self.labels = [self.labels[c] for c in keep_cols]
        self.n = len(keep_cols)

    # conversion ---------------------------------------------------------------
    def to_graph(self, owners: dict) -> GraphState:
        """A graph state LC-equivalent to this stabilizer state."""
        t = self.copy()
        n = t.n
        rank = 0
        x_pivots = set()
        for c in range(n):
            pivot = next((r for r in range(rank, n) if t.x_part[r, c]), None)
            if pivot is None:
                continue
            x_pivots.add(c)
            t._swap(rank, pivot)
            for r in range(n):
                if r != rank and t.x_part[r, c]:
                    t.rowsum(r, rank)
            rank += 1
        # rows rank..n-1 have no X part; their Z parts are independent off the
        # X pivot columns, so Hadamards there restore a full-rank X block
        zr = rank
        had = []
        for c in range(n):
            if c in x_pivots:
                continue
            pivot = next((r for r in range(zr, n) if t.z_part[r, c]), None)
            if pivot is None:
                continue
            t._swap(zr, pivot)
            for r in range(rank, n):
                if r != zr and t.z_part[r, c]:
                    t.rowsum(r, zr)
            had.append(c)
            zr += 1
        for c in had:
            t.hadamard(c)
        x = t.x_part.astype(int)
        inv = _gf2_inverse(x)
        gamma = (inv @ t.z_part.astype(int)) % 2
        if not np.array_equal(gamma, gamma.T):
            raise GraphStateError("stabilizer state did not reduce to graph form")
        g = GraphState({q: owners[q] for q in t.labels})
        for a in range(n):
            for b in range(a + 1, n):
                if gamma[a, b]:
                    g.add_edge(t.labels[a], t.labels[b])
        return g

    def _swap(self, a: int, b: int) -> None:
        if a == b:
            return
        for arr in (self.x_part, self.z_part, self.phases):
            arr[[a, b]] = arr[[b, a]]


def _gf2_inverse(m: np.ndarray) -> np.ndarray:
    n = m.shape[0]
    aug = np.concatenate([m % 2, np.eye(n, dtype=int)], axis=1)
    for c in range(n):
        pivot = next((r for r in range(c, n) if aug[r, c]), None)
        if pivot is None:
            raise GraphStateError("singular X block")
        aug[[c, pivot]] = aug[[pivot, c]]
        for r in range(n):
            if r != c and aug[r, c]:
                aug[r] ^= aug[c]
    return aug[:, n:]


def to_tableau(state: GraphState, max_qubits: int = 12) -> StabilizerTableau:
    """Stabilizer rows K_a = X_a prod_{b in N(a)} Z_b of the graph state."""
    if len(state) > max_qubits:
        raise GraphStateError(f"tableau oracle limited to {max_qubits} qubits")
    return StabilizerTableau.from_graph(state)


def oracle_measure(state: GraphState, q, basis: str) -> GraphState:
    t = to_tableau(state)
    t.measure_single(q, basis)
    t.remove([q])
    return t.to_graph(state.owner)


def oracle_merging(state: GraphState, q1, q2) -> GraphState:
    """Merging measurement: ZZ parity, then CNOT(q1->q2) and drop q2."""
    t = to_tableau(state)
    i, j = t.index(q1), t.index(q2)
    px = np.zeros(t.n, dtype=np.uint8)
    pz = np.zeros(t.n, dtype=np.uint8)
    pz[[i, j]] = 1
    t.measure(px, pz)
    t.cnot(i, j)
    t.remove([q2])
    return t.to_graph(state.owner)


def oracle_bell(state: GraphState, q1, q2) -> GraphState:
    t = to_tableau(state)
    i, j = t.index(q1), t.index(q2)
    zero = np.zeros(t.n, dtype=np.uint8)
    pair = zero.copy()
    pair[[i, j]] = 1
    t.measure(zero.copy(), pair.copy())
    t.measure(pair.copy(), zero.copy())
    t.remove([q1, q2])
    return t.to_graph(state.owner)


__all__ = ["StabilizerTableau", "to_tableau", "oracle_measure", "oracle_merging", "oracle_bell"]
