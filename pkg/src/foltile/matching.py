"""Bipartite matching by bounded augmenting paths with conflict-free flips.

The driver grows a partial injection in phases: phase n removes every
augmenting path of length below n, and expansivity of the relation makes
the unmatched fraction decay like c^-n, so finitely many phases saturate
the left side. Inside a phase, candidate paths are regenerated lazily
from the current injection, a greedy coloring of their intersection
graph splits them into conflict-free classes, and each class is flipped
simultaneously.

Path length convention: (x0, y0, ..., xm, ym) has length m; a length-0
path is a free edge between two unmatched vertices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels
from .coloring import LocalGraph, greedy_coloring
from .errors import InvalidInput, VerificationFailure


@dataclass
class BipartiteRelation:
    """Locally finite relation between left points and right slot tokens.

    Adjacency lists are kept sorted; all canonical tie-breaking (BFS visit
    order, origin order) follows them.
    """

    n_left: int
    n_right: int
    adj: list  # adj[x] = sorted tuple of right neighbors
    left_labels: list | None = None
    right_labels: list | None = None

    def __post_init__(self):
        self.adj = [tuple(sorted(set(nbrs))) for nbrs in self.adj]
        self._indptr = np.zeros(self.n_left + 1, dtype=np.int64)
        for x, nbrs in enumerate(self.adj):
            self._indptr[x + 1] = self._indptr[x] + len(nbrs)
        self._indices = np.fromiter(
            (y for nbrs in self.adj for y in nbrs), dtype=np.int64,
            count=int(self._indptr[-1]))

    @staticmethod
    def from_edges(n_left: int, n_right: int, edges) -> "BipartiteRelation":
        adj = [[] for _ in range(n_left)]
        for x, y in edges:
            if not (0 <= x < n_left and 0 <= y < n_right):
                raise InvalidInput(f"edge ({x},{y}) out of range")
            adj[x].append(y)
        return BipartiteRelation(n_left, n_right, adj)

    def right_adjacency(self) -> list:
        radj = [[] for _ in range(self.n_right)]
        for x, nbrs in enumerate(self.adj):
            for y in nbrs:
                radj[y].append(x)
        return [tuple(r) for r in radj]

    def min_left_degree(self) -> int:
        return min((len(n) for n in self.adj), default=0)

    def max_right_degree(self) -> int:
        deg = np.zeros(self.n_right, dtype=np.int64)
        for nbrs in self.adj:
            for y in nbrs:
                deg[y] += 1
        return int(deg.max()) if self.n_right else 0

    def neighborhood_size(self, xs) -> int:
        seen = set()
        for x in xs:
            seen.update(self.adj[x])
        return len(seen)


@dataclass
class ExpansivityCertificate:
    """Degree-ratio expansivity witness: |R_A| >= (a/b)|A| for all A."""

    a: int
    b: int
    c: Fraction
    transcript: list = field(default_factory=list)

    @property
    def expansive(self) -> bool:
        return self.c > 1


def certify_expansivity(rel: BipartiteRelation, rng=None,
                        subset_checks: int = 100) -> ExpansivityCertificate:
    """Compute c = (min left degree) / (max right degree) and spot-verify
    the neighborhood bound on random subsets."""
    a = rel.min_left_degree()
    if a == 0:
        raise VerificationFailure("unmatched-impossible vertex: "
                                  "a left point has no neighbors")
    b = rel.max_right_degree()
    c = Fraction(a, b)
    cert = ExpansivityCertificate(a, b, c)
    if rng is None:
        rng = np.random.default_rng(0)
    for _ in range(subset_checks):
        k = int(rng.integers(1, rel.n_left + 1))
        subset = rng.choice(rel.n_left, size=k, replace=False)
        nb = rel.neighborhood_size(int(x) for x in subset)
        ok = nb * c.denominator >= c.numerator * k
        cert.transcript.append((k, nb, ok))
        if not ok:
            raise VerificationFailure(
                f"expansivity spot check failed on subset of size {k}")
    return cert


class MatchingState:
    """Partial injection left -> right as paired index arrays."""

    def __init__(self, n_left: int, n_right: int):
        self.n_left = n_left
        self.n_right = n_right
        self.match_left = np.full(n_left, -1, dtype=np.int64)
        self.match_right = np.full(n_right, -1, dtype=np.int64)
        self.phase = 0

    def copy(self) -> "MatchingState":
        out = MatchingState(self.n_left, self.n_right)
        out.match_left = self.match_left.copy()
        out.match_right = self.match_right.copy()
        out.phase = self.phase
        return out

    def matched_count(self) -> int:
        return int((self.match_left >= 0).sum())

    def unmatched_left(self) -> np.ndarray:
        return np.flatnonzero(self.match_left < 0).astype(np.int64)

    def pairs(self) -> list[tuple[int, int]]:
        return [(int(x), int(y)) for x, y in enumerate(self.match_left) if y >= 0]

    def check_consistent(self, rel: BipartiteRelation) -> None:
        """Injectivity and compatibility with the relation."""
        for x, y in enumerate(self.match_left):
            if y >= 0:
                if self.match_right[y] != x:
                    raise VerificationFailure(f"pairing arrays disagree at {x}")
                if int(y) not in rel.adj[x]:
                    raise VerificationFailure(f"pair ({x},{y}) not in relation")
        for y, x in enumerate(self.match_right):
            if x >= 0 and self.match_left[x] != y:
                raise VerificationFailure(f"pairing arrays disagree at right {y}")


@dataclass(frozen=True)
class AugmentingPath:
    """Alternating path; xs and ys have equal length m+1, length = m."""

    xs: tuple
    ys: tuple

    @property
    def length(self) -> int:
        return len(self.ys) - 1

    def vertices(self):
        return self.xs, self.ys

    def validate(self, rel: BipartiteRelation, state: MatchingState) -> None:
        xs, ys = self.xs, self.ys
        if len(xs) != len(ys) or not xs:
            raise InvalidInput("malformed path")
        if state.match_left[xs[0]] >= 0:
            raise VerificationFailure("origin is already matched")
        if len(set(ys)) != len(ys):
            raise VerificationFailure("repeated right vertex on path")
        for x, y in zip(xs, ys):
            if y not in rel.adj[x]:
                raise VerificationFailure(f"path edge ({x},{y}) not in relation")
        for i in range(len(ys) - 1):
            if state.match_left[xs[i + 1]] != ys[i]:
                raise VerificationFailure("path does not alternate along the matching")
        if state.match_right[ys[-1]] >= 0:
            raise VerificationFailure("terminal right vertex is matched")


def flip(state: MatchingState, path: AugmentingPath,
         rel: BipartiteRelation) -> MatchingState:
    """Reroute the injection along an augmenting path; size grows by one."""
    path.validate(rel, state)
    out = state.copy()
    for x, y in zip(path.xs, path.ys):
        out.match_left[x] = y
        out.match_right[y] = x
    # the origin's new pair is set above; old pairs y_i -> x_{i+1} are all
    # overwritten consistently because ys are distinct
    out.check_consistent(rel)
    if out.matched_count() != state.matched_count() + 1:
        raise VerificationFailure("flip did not grow the matching by one")
    return out


def _flip_inplace(state: MatchingState, path: AugmentingPath) -> None:
    for x, y in zip(path.xs, path.ys):
        state.match_left[x] = y
        state.match_right[y] = x


def _is_augmenting(state: MatchingState, path: AugmentingPath) -> bool:
    if state.match_left[path.xs[0]] >= 0:
        return False
    if state.match_right[path.ys[-1]] >= 0:
        return False
    for i in range(len(path.ys) - 1):
        if state.match_left[path.xs[i + 1]] != path.ys[i]:
            return False
    return True


def shortest_augmenting_from(rel: BipartiteRelation, state: MatchingState,
                             origin: int, max_len: int) -> AugmentingPath | None:
    """Canonical shortest augmenting path of length < max_len from origin."""
    ys = _kernels.bfs_augmenting(rel._indptr, rel._indices, state.match_left,
                                 state.match_right, origin, max_len)
    if ys is None:
        return None
    xs = [origin]
    for y in ys[:-1]:
        xs.append(int(state.match_right[y]))
    return AugmentingPath(tuple(xs), tuple(int(y) for y in ys))


def enumerate_augmenting_paths(rel: BipartiteRelation, state: MatchingState,
                               max_len: int, origins=None):
    """Exhaustive generator of augmenting paths of length < max_len.

    Independent of the BFS machinery; used as the bounded verifier. Cost is
    exponential in max_len, fine for max_len <= ~6 at desk scale.
    """
    if origins is None:
        origins = state.unmatched_left()
    for origin in origins:
        stack = [(int(origin), (), ())]
        while stack:
            x, xs, ys = stack.pop()
            xs = xs + (x,)
            for y in rel.adj[x]:
                if y in ys:
                    continue
                if state.match_right[y] < 0:
                    yield AugmentingPath(xs, ys + (y,))
                elif len(ys) + 2 <= max_len:
                    stack.append((int(state.match_right[y]), xs, ys + (y,)))


def has_short_augmenting_path(rel: BipartiteRelation, state: MatchingState,
                              max_len: int) -> bool:
    for _ in enumerate_augmenting_paths(rel, state, max_len):
        return True
    return False


def eliminate_short_augmenting(rel: BipartiteRelation, state: MatchingState,
                               n: int) -> MatchingState:
    """Return an extension of `state` with no augmenting path of length < n.

    Per sweep: the canonical shortest candidate path is regenerated from
    each unmatched origin, the paths' intersection graph is greedy-colored,
    and the color classes are flipped in round-robin order (a class is
    conflict-free, so its still-augmenting members flip simultaneously).
    Changed-point count stays at most n * (initially unmatched), since each
    origin flips at most once and carries at most n left vertices.
    """
    if n <= 0:
        return state.copy()
    before = state
    out = state.copy()
    while True:
        paths = []
        for origin in out.unmatched_left():
            p = shortest_augmenting_from(rel, out, int(origin), n)
            if p is not None:
                paths.append(p)
        if not paths:
            break
        classes = _color_paths(paths)
        for cls in classes:
            for pi in cls:
                path = paths[pi]
                if _is_augmenting(out, path):
                    _flip_inplace(out, path)
    out.check_consistent(rel)
    if not np.all((before.match_left < 0) | (out.match_left >= 0)):
        raise VerificationFailure("domain monotonicity violated")
    changed = int(np.count_nonzero(out.match_left != before.match_left))
    budget = n * int((before.match_left < 0).sum())
    if changed > budget:
        raise VerificationFailure(
            f"changed {changed} points, budget n*unmatched = {budget}")
    return out


def _color_paths(paths: list[AugmentingPath]) -> list[np.ndarray]:
    """Color the path-intersection graph (shared vertex => adjacent)."""
    owners_left = {}
    owners_right = {}
    adj = [set() for _ in paths]
    for i, p in enumerate(paths):
        for x in p.xs:
            owners_left.setdefault(x, []).append(i)
        for y in p.ys:
            owners_right.setdefault(y, []).append(i)
    for owners in (owners_left, owners_right):
        for group in owners.values():
            for i in group:
                for j in group:
                    if i != j:
                        adj[i].add(j)
    graph = LocalGraph(len(paths), [sorted(s) for s in adj])
    return greedy_coloring(graph).classes()


def hall_violation_witness(rel: BipartiteRelation, state: MatchingState,
                           origin: int) -> list[int]:
    """Alternating-reachability set A from a stuck origin; |R_A| < |A|."""
    seen_left = {origin}
    seen_right = set()
    frontier = [origin]
    while frontier:
        nxt = []
        for x in frontier:
            for y in rel.adj[x]:
                if y in seen_right:
                    continue
                seen_right.add(y)
                x2 = int(state.match_right[y])
                if x2 >= 0 and x2 not in seen_left:
                    seen_left.add(x2)
                    nxt.append(x2)
        frontier = nxt
    if len(seen_right) >= len(seen_left):
        raise VerificationFailure("witness set does not violate Hall's condition")
    return sorted(seen_left)


def match_saturating(rel: BipartiteRelation, certificate=None,
                     require_expansive: bool = True):
    """Phase iteration: f_n has no augmenting path of length < n, so the
    unmatched fraction falls below c^-n each phase; at desk scale this
    terminates with every left point matched.

    Returns (state, transcript); transcript rows are (phase, unmatched,
    bound_numerator_ok) with the exact c^-n comparison.
    """
    if certificate is None:
        certificate = certify_expansivity(rel)
    if require_expansive and not certificate.expansive:
        raise VerificationFailure(
            f"relation is not expansive: c = {certificate.c}")
    a, b = certificate.a, certificate.b
    state = MatchingState(rel.n_left, rel.n_right)
    transcript = []
    n = 0
    prev_unmatched = rel.n_left + 1
    while True:
        n += 1
        state = eliminate_short_augmenting(rel, state, n)
        state.phase = n
        unmatched = rel.n_left - state.matched_count()
        # unmatched / n_left <= (b/a)^n, compared in integers
        ok = unmatched * a ** n <= rel.n_left * b ** n
        transcript.append((n, unmatched, ok))
        if certificate.expansive and not ok:
            raise VerificationFailure(
                f"phase bound broken at phase {n}: {unmatched} unmatched")
        if unmatched == 0:
            return state, transcript
        if unmatched == prev_unmatched:
            # phases stopped helping: check for any augmenting path at all
            origin = int(state.unmatched_left()[0])
            p = shortest_augmenting_from(rel, state, origin, rel.n_right + 1)
            if p is None:
                if require_expansive:
                    witness = hall_violation_witness(rel, state, origin)
                    raise VerificationFailure(
                        "no augmenting path of any length; Hall condition "
                        "fails", witness=witness)
                return state, transcript
        prev_unmatched = unmatched


# ---------------------------------------------------------------------------
# independent oracles


def oracle_max_matching(rel: BipartiteRelation) -> int:
    """Maximum matching size via the classical layered phase algorithm
    (breadth-first distance labeling plus depth-first augmentation),
    implemented with no shared code with the flip machinery."""
    INF = -1
    pair_left = [INF] * rel.n_left
    pair_right = [INF] * rel.n_right
    dist = [0] * rel.n_left

    def bfs() -> bool:
        from collections import deque

        q = deque()
        found = False
        limit = None
        for x in range(rel.n_left):
            if pair_left[x] == INF:
                dist[x] = 0
                q.append(x)
            else:
                dist[x] = INF
        while q:
            x = q.popleft()
            if limit is not None and dist[x] >= limit:
                continue
            for y in rel.adj[x]:
                x2 = pair_right[y]
                if x2 == INF:
                    if limit is None:
                        limit = dist[x] + 1
                    found = True
                elif dist[x2] == INF:
                    dist[x2] = dist[x] + 1
                    q.append(x2)
        return found

    def dfs(x: int) -> bool:
        for y in rel.adj[x]:
            x2 = pair_right[y]
            if x2 == INF or (dist[x2] == dist[x] + 1 and dfs(x2)):
                pair_left[x] = y
                pair_right[y] = x
                return True
        dist[x] = INF
        return False

    size = 0
    while bfs():
        for x in range(rel.n_left):
            if pair_left[x] == INF and dfs(x):
                size += 1
    return size


def exhaustive_max_matching(rel: BipartiteRelation) -> int:
    """Brute-force maximum matching by recursion over left vertices.

    Exponential; only for cross-checking the oracle on tiny graphs.
    """
    adj = rel.adj

    def best(i: int, used: frozenset) -> int:
        if i == rel.n_left:
            return 0
        top = best(i + 1, used)
        for y in adj[i]:
            if y not in used:
                top = max(top, 1 + best(i + 1, used | {y}))
        return top

    return best(0, frozenset())
