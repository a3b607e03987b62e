"""Greedy colorings: the finite workhorse behind packing partitions and
conflict-free simultaneous path flips.

Processing vertices in a fixed order and giving each the least color
absent among its already-colored neighbors is proper by construction and
uses at most d+1 colors on a graph of maximum degree d. Determinism is
part of the contract: same graph and order, same coloring, bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InfeasibleParameters, InvalidInput, VerificationFailure
from .groups import Shape, multiply_set
from .windows import ActionWindow, PointSet


@dataclass
class LocalGraph:
    """Finite graph given by symmetric adjacency lists over 0..n-1."""

    n: int
    adjacency: list
    degree_bound: int | None = None

    def validate(self) -> None:
        if len(self.adjacency) != self.n:
            raise InvalidInput("adjacency length mismatch")
        for v, nbrs in enumerate(self.adjacency):
            for u in nbrs:
                if u == v:
                    raise InvalidInput(f"self-loop at {v}")
                if v not in self.adjacency[u]:
                    raise InvalidInput(f"asymmetric edge {v}-{u}")
            if self.degree_bound is not None and len(nbrs) > self.degree_bound:
                raise InvalidInput(
                    f"vertex {v} has degree {len(nbrs)} > bound {self.degree_bound}")

    def to_csr(self) -> tuple[np.ndarray, np.ndarray]:
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        for v, nbrs in enumerate(self.adjacency):
            indptr[v + 1] = indptr[v] + len(nbrs)
        indices = np.empty(int(indptr[-1]), dtype=np.int64)
        for v, nbrs in enumerate(self.adjacency):
            indices[indptr[v]:indptr[v + 1]] = sorted(nbrs)
        return indptr, indices


@dataclass
class Coloring:
    """Proper vertex coloring: colors[v] for v in 0..n-1."""

    colors: np.ndarray

    @property
    def color_count(self) -> int:
        return int(self.colors.max()) + 1 if self.colors.size else 0

    def classes(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.colors == c).astype(np.int64)
                for c in range(self.color_count)]


def greedy_coloring(graph: LocalGraph, order=None) -> Coloring:
    """Least-absent-color greedy over the given vertex order."""
    if order is None:
        order = np.arange(graph.n, dtype=np.int64)
    else:
        order = np.asarray(order, dtype=np.int64)
        if sorted(order.tolist()) != list(range(graph.n)):
            raise InvalidInput("order must be a permutation of the vertices")
    indptr, indices = graph.to_csr()
    colors = _kernels.greedy_color_csr(indptr, indices, order)
    coloring = Coloring(colors)
    verify_proper(graph, coloring)
    if graph.degree_bound is not None and coloring.color_count > graph.degree_bound + 1:
        raise VerificationFailure(
            f"greedy used {coloring.color_count} colors on degree bound "
            f"{graph.degree_bound}")
    return coloring


def verify_proper(graph: LocalGraph, coloring: Coloring) -> None:
    """Independent pass over all edges; raises with a witness edge."""
    colors = coloring.colors
    for v, nbrs in enumerate(graph.adjacency):
        for u in nbrs:
            if colors[v] == colors[u]:
                raise VerificationFailure(f"improper edge {v}-{u}",
                                          witness=(v, int(u)))
    if (colors < 0).any():
        raise VerificationFailure("uncolored vertex remains")


def translate_overlap_partition(window: ActionWindow, T: Shape,
                                ) -> list[PointSet]:
    """Partition the carrier so translates T.x within a class are pairwise
    disjoint.

    Two points overlap iff x' = d.x for some d in T^{-1}T other than the
    identity, so a greedy coloring over those difference translates in
    canonical index order does it with at most |T^{-1}T| classes.
    """
    window.require_free(T, "overlap partition shape")
    model = T.model
    diffs = multiply_set(T.inverse(), T)
    ident = model.identity()
    diffs = Shape.from_elements(model, [e for e in diffs if e != ident])
    # distinct group differences can collide on the carrier; drop duplicates
    # and any difference that acts trivially
    seen = {}
    for el in diffs:
        r = window.reduce(el)
        if r != window.reduce(ident):
            seen.setdefault(r, el)
    diffs = Shape.from_elements(model, seen.values())
    if len(diffs) == 0:
        return [window.full_set()]
    colors = window.color_by_diffs(diffs)
    ncls = int(colors.max()) + 1
    if ncls > len(diffs) + 1:
        raise VerificationFailure(
            f"{ncls} classes exceeds |T^-1 T| = {len(diffs) + 1}")
    classes = []
    for c in range(ncls):
        mask = (colors == c).astype(np.uint8)
        classes.append(PointSet(window, mask))
    return classes


def verify_partition_disjointness(window: ActionWindow, T: Shape,
                                  classes: list[PointSet]) -> None:
    """Check the partition property directly: classes tile the carrier and
    within each class the T-translates are pairwise disjoint."""
    total = np.zeros(window.size, dtype=np.int64)
    for cls in classes:
        total += cls.mask
        cnt = window.counts(cls.mask, T.inverse())
        # |class meet T^{-1} x| <= 1 everywhere iff translates are disjoint:
        # t.c = t'.c' would put both c and c' inside T^{-1}.(t.c)
        if int(cnt.max()) > 1:
            raise VerificationFailure("overlapping translates inside a class")
    if not np.all(total == 1):
        raise VerificationFailure("classes do not partition the carrier")


def color_random_regular(n: int, d: int, rng: np.random.Generator) -> LocalGraph:
    """Random d-regular simple graph via the pairing model (retry loop)."""
    if n * d % 2:
        raise InvalidInput("n*d must be even for a d-regular graph")
    for _ in range(200):
        stubs = np.repeat(np.arange(n), d)
        rng.shuffle(stubs)
        pairs = stubs.reshape(-1, 2)
        ok = True
        adj = [set() for _ in range(n)]
        for a, b in pairs:
            a, b = int(a), int(b)
            if a == b or b in adj[a]:
                ok = False
                break
            adj[a].add(b)
            adj[b].add(a)
        if ok:
            return LocalGraph(n, [sorted(s) for s in adj], degree_bound=d)
    raise InfeasibleParameters(f"could not draw a simple {d}-regular graph")
