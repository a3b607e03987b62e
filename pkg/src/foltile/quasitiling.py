"""Quasitilings: greedy saturating packs, density-(1-eps) covers of action
windows, and the group-level variant on a finite target set.

The window construction descends a ladder of shapes, largest first. Each
stage packs translates of one shape greedily against everything covered
so far, working class by class through an overlap partition so that the
translates admitted within a class are automatically disjoint. Stage
coverage then obeys an explicit geometric recursion, which quasitile_window
re-measures and checks whenever the full hypothesis set is in force.

Desk-scale honesty note: the hypothesis chain (every ladder shape
(K,eps)-invariant, plus cross-invariance between levels) is isoperimetrically
out of reach for nontrivial K inside any small window, so the checks are
mode-gated: strict mode verifies and errors, relaxed mode records measured
densities and leaves the final guarantees to downstream verification.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InfeasibleParameters, InvalidInput, VerificationFailure
from .groups import (GroupModel, Shape, Zd, boundary, invariance_defect,
                     multiply_set)
from .coloring import translate_overlap_partition
from .windows import (ActionWindow, PointSet, is_star_invariant,
                      lower_banach_density)

ONE = Fraction(1)


def ladder_length(eps: Fraction) -> int:
    """Smallest n with (1-eps)^n < eps."""
    if not Fraction(0) < eps < Fraction(1, 2):
        raise InvalidInput("eps must lie in (0, 1/2)")
    n = 1
    p = ONE - eps
    acc = p
    while acc >= eps:
        acc *= p
        n += 1
    return n


def pack_slack_delta(eps: Fraction, n: int, bits: int = 30) -> Fraction:
    """Largest dyadic delta = 2^-k <= 1 with
    (1+d)^-1 (1-(1+d) eps)^n < eps - 1 + (1+d)^-1, the slack that makes the
    stage recursion close. Exists iff (1-eps)^n < eps."""

    def ok(d: Fraction) -> bool:
        u = 1 + d
        lhs = (1 - u * eps)
        if lhs <= 0:
            return False
        return lhs ** n / u < eps - 1 + 1 / u

    for k in range(bits + 1):
        cand = Fraction(1, 2 ** k)
        if ok(cand):
            return cand
    if (ONE - eps) ** n >= eps:
        raise InfeasibleParameters(
            f"(1-eps)^n < eps fails for eps={eps}, n={n}")
    raise InfeasibleParameters(
        f"no dyadic slack delta satisfies the recursion bound for "
        f"eps={eps}, n={n}")


@dataclass
class QuasitileParams:
    """Validated parameter bundle for a quasitiling run."""

    eps: Fraction
    ladder: list
    delta: Fraction | None = None
    beta: Fraction | None = None
    group_case: bool = False

    def validate(self) -> None:
        n = len(self.ladder)
        if n == 0:
            raise InvalidInput("empty ladder")
        if self.group_case:
            if not Fraction(0) < self.beta < Fraction(1, 2):
                raise InfeasibleParameters("need 0 < beta < 1/2")
            if (1 - self.beta / 2) ** n >= self.beta:
                raise InfeasibleParameters(
                    f"(1-beta/2)^n < beta fails for beta={self.beta}, n={n}")
        else:
            if not Fraction(0) < self.eps < Fraction(1, 2):
                raise InfeasibleParameters("need eps in (0, 1/2)")
            if (ONE - self.eps) ** n >= self.eps:
                raise InfeasibleParameters(
                    f"(1-eps)^n < eps fails for eps={self.eps}, n={n}")
            if self.delta is not None:
                u = 1 + self.delta
                if not (1 - u * self.eps) > 0 or not \
                        (1 - u * self.eps) ** n / u < self.eps - 1 + 1 / u:
                    raise InfeasibleParameters(
                        "slack delta fails the recursion inequality")


@dataclass
class PackResult:
    """Output of one greedy saturating pack."""

    centers: list            # carrier indices, ascending
    cores: dict              # center -> Shape (subset of T)
    saturated: PointSet      # Y union T.C
    passes: int


def greedy_pack(window: ActionWindow, Y: PointSet, T: Shape, eps: Fraction,
                classes: list[PointSet] | None = None) -> PackResult:
    """Greedy saturating pack of T-translates against the blocked set Y.

    Iterates the overlap-partition classes once each; a candidate center
    joins iff its translate meets the current blocked set in fewer than
    eps|T| points, and its core is the unblocked part of the translate. On
    return, every carrier point x has |(Y u TC) meet Tx| >= eps|T|, the
    cores hold more than a (1-eps) fraction of T, and core translates are
    pairwise disjoint and avoid Y.
    """
    if not Fraction(0) < eps < Fraction(1, 2):
        raise InvalidInput("eps must lie in (0, 1/2)")
    window.require_free(T, "pack shape")
    if classes is None:
        classes = translate_overlap_partition(window, T)
    p, q = eps.numerator, eps.denominator
    blocked = Y.mask.copy()
    centers: list[int] = []
    cores: dict[int, Shape] = {}
    t_elems = list(T)
    for cls in classes:
        idxs = cls.indices()
        if idxs.size == 0:
            continue
        cnts = window.counts_at(blocked, T, idxs)
        join = idxs[q * cnts < p * len(T)]
        if join.size == 0:
            continue
        free_elems = {int(c): [] for c in join}
        for el in t_elems:
            tgt = window.act_indices(el, join)
            hit = blocked[tgt] == 0
            for c in join[hit]:
                free_elems[int(c)].append(el)
        for el in t_elems:
            blocked[window.act_indices(el, join)] = 1
        for c in join:
            c = int(c)
            core = Shape.from_elements(T.model, free_elems[c])
            # join condition gives |core| = |T| - |Y meet Tc| > (1-eps)|T|
            if q * len(core) <= (q - p) * len(T):
                raise VerificationFailure(f"core too small at center {c}")
            centers.append(c)
            cores[c] = core
    sat = PointSet(window, blocked)
    cnt = window.counts(blocked, T)
    if q * int(cnt.min()) < p * len(T):
        raise VerificationFailure("saturation failed",
                                  witness=int(np.argmin(cnt)))
    return PackResult(sorted(centers), cores, sat, len(classes))


@dataclass
class TileAtlas:
    """Centers with per-center subshapes and the covered/leftover split."""

    window: ActionWindow
    eps: Fraction
    ladder: list
    entries: list            # (center index, ladder level 1-based, core Shape)
    covered: PointSet
    leftover: PointSet
    delta: Fraction | None = None
    stage_densities: list = field(default_factory=list)
    hypotheses_checked: bool = False

    def verify(self) -> None:
        """Re-derive the atlas invariants from raw data."""
        paint = np.zeros(self.window.size, dtype=np.int64)
        qd = self.eps.denominator
        pd = self.eps.numerator
        for center, level, core in self.entries:
            F_i = self.ladder[level - 1]
            if any(el not in F_i for el in core):
                raise VerificationFailure(f"core not inside level shape at {center}")
            if qd * len(core) <= (qd - pd) * len(F_i):
                raise VerificationFailure(f"core below (1-eps) fraction at {center}")
            for el in core:
                paint[self.window.act(el, center)] += 1
        if int(paint.max(initial=0)) > 1:
            raise VerificationFailure("tile translates overlap",
                                      witness=int(np.argmax(paint)))
        if not np.array_equal((paint > 0).astype(np.uint8), self.covered.mask):
            raise VerificationFailure("covered set disagrees with tiles")
        if not np.array_equal(self.covered.mask ^ self.leftover.mask,
                              np.ones(self.window.size, dtype=np.uint8)):
            raise VerificationFailure("covered/leftover do not partition")


def quasitile_window(window: ActionWindow, K: Shape, eps: Fraction,
                     ladder: list[Shape], delta: Fraction | None = None,
                     check_hypotheses: bool = True) -> TileAtlas:
    """Cover all but an eps fraction of the window by eps-disjoint translates
    drawn from the ladder, largest (last) shape first.

    In strict mode the full hypothesis set is verified first: the ladder
    length inequality, every ladder shape (K,eps)-invariant, and each later
    shape invariant against earlier inverses at slack delta(1-eps). Stage
    coverage is then checked against the geometric recursion
    lBD(A_i) >= (1+d)^-1 (1 - (1-eps(1+d))^(n+1-i)).
    """
    n = len(ladder)
    for i, F in enumerate(ladder):
        window.require_free(F, f"ladder shape {i + 1}")
    if check_hypotheses:
        if delta is None:
            delta = pack_slack_delta(eps, n)
        QuasitileParams(eps=eps, ladder=ladder, delta=delta).validate()
        for i, F in enumerate(ladder):
            d = invariance_defect(K, F)
            if d >= eps:
                raise InfeasibleParameters(
                    f"ladder shape {i + 1} is not (K, eps)-invariant: "
                    f"defect {d} >= {eps}")
        theta = delta * (1 - eps)
        for i in range(n):
            for j in range(i):
                d = invariance_defect(ladder[j].inverse(), ladder[i])
                if d >= theta:
                    raise InfeasibleParameters(
                        f"ladder cross-invariance fails for pair "
                        f"({j + 1}, {i + 1}): defect {d} >= {theta}")

    covered = window.empty_set()
    entries = []
    stage_densities = []
    part_cache: dict[Shape, list] = {}
    for level in range(n, 0, -1):
        T = ladder[level - 1]
        if T not in part_cache:
            part_cache[T] = translate_overlap_partition(window, T)
        pack = greedy_pack(window, covered, T, eps, classes=part_cache[T])
        for c in pack.centers:
            entries.append((c, level, pack.cores[c]))
        covered = pack.saturated
        measured = lower_banach_density(covered, ladder).lower
        stage_densities.append((level, measured))
        if check_hypotheses:
            u = 1 + delta
            bound = 1 / u - (1 / u) * (1 - eps * u) ** (n + 1 - level)
            if measured < bound:
                raise VerificationFailure(
                    f"stage {level} density {measured} below recursion "
                    f"bound {bound}")
    if check_hypotheses:
        final = stage_densities[-1][1]
        if final <= 1 - eps:
            raise VerificationFailure(
                f"final covered density {final} not above 1-eps")
    entries.sort(key=lambda e: (e[0], e[1]))
    atlas = TileAtlas(window=window, eps=eps, ladder=list(ladder),
                      entries=entries, covered=covered,
                      leftover=covered.complement(), delta=delta,
                      stage_densities=stage_densities,
                      hypotheses_checked=check_hypotheses)
    atlas.verify()
    return atlas


# ---------------------------------------------------------------------------
# group-level quasitiling


@dataclass
class GroupQuasitiling:
    """Centers per ladder level with disjoint-core witnesses, all inside E."""

    target: Shape
    ladder: list
    beta: Fraction
    centers: list            # per level: list of group elements
    cores: list              # per level: dict center -> Shape

    def covered_count(self) -> int:
        seen = set()
        for T, cs, cores in zip(self.ladder, self.centers, self.cores):
            for c in cs:
                for el in cores[c]:
                    seen.add(T.model.mul(el, c))
        return len(seen)


def group_quasitile(E: Shape, ladder: list[Shape], beta: Fraction,
                    check_hypotheses: bool = True) -> GroupQuasitiling:
    """Greedy beta-disjoint packing of right translates of the ladder shapes
    into E, largest shape first; covers at least a (1-beta) fraction of E.

    Preconditions (each reported by name): 0 < beta < 1/2 and
    (1-beta/2)^n < beta; identity in T_1 and T_1 <= ... <= T_n nested;
    |boundary_{T_{i-1}}(T_i)| <= (beta/8)|T_i| for i >= 2; E nonempty and
    (T_n, beta/4)-invariant.
    """
    model = E.model
    n = len(ladder)
    if len(E) == 0:
        raise InvalidInput("target set E is empty")
    if check_hypotheses:
        QuasitileParams(eps=Fraction(1, 4), ladder=ladder, beta=beta,
                        group_case=True).validate()
        if model.identity() not in ladder[0]:
            raise InfeasibleParameters("identity not in T_1")
        for i in range(1, n):
            if any(el not in ladder[i] for el in ladder[i - 1]):
                raise InfeasibleParameters(
                    f"ladder not nested: T_{i} is not inside T_{i + 1}")
        for i in range(1, n):
            b = boundary(ladder[i - 1], ladder[i])
            if len(b) * beta.denominator * 8 > beta.numerator * len(ladder[i]):
                raise InfeasibleParameters(
                    f"|boundary_(T_{i})(T_{i + 1})| <= (beta/8)|T_{i + 1}| "
                    f"fails: {len(b)} vs {beta / 8} * {len(ladder[i])}")
        d = invariance_defect(ladder[-1], E)
        if d >= beta / 4:
            raise InfeasibleParameters(
                f"E is not (T_n, beta/4)-invariant: defect {d} >= {beta / 4}")

    e_set = E._member
    covered: set = set()
    centers_per_level = [[] for _ in range(n)]
    cores_per_level = [dict() for _ in range(n)]
    p, q = beta.numerator, beta.denominator
    for level in range(n, 0, -1):
        T = ladder[level - 1]
        t_elems = list(T)
        for c in E.elements:
            tile = [model.mul(t, c) for t in t_elems]
            if any(el not in e_set for el in tile):
                continue
            overlap = sum(1 for el in tile if el in covered)
            # admit while |tile meet covered| <= beta|T|: core keeps >= (1-beta)|T|
            if q * overlap <= p * len(T):
                core = Shape.from_elements(
                    model, [t for t, el in zip(t_elems, tile) if el not in covered])
                centers_per_level[level - 1].append(c)
                cores_per_level[level - 1][c] = core
                covered.update(tile)
    out = GroupQuasitiling(target=E, ladder=list(ladder), beta=beta,
                           centers=centers_per_level, cores=cores_per_level)
    verify_group_quasitiling(out)
    return out


def verify_group_quasitiling(qt: GroupQuasitiling) -> None:
    """Re-derive the three output clauses from raw data."""
    model = qt.target.model
    e_set = qt.target._member
    core_union: set = set()
    tile_union: set = set()
    p, q = qt.beta.numerator, qt.beta.denominator
    for T, cs, cores in zip(qt.ladder, qt.centers, qt.cores):
        for c in cs:
            tile = {model.mul(t, c) for t in T}
            if not tile <= e_set:
                raise VerificationFailure("translate escapes E", witness=c)
            tile_union |= tile
            core = cores[c]
            if any(el not in T for el in core):
                raise VerificationFailure("core not inside its shape")
            if q * len(core) < (q - p) * len(T):
                raise VerificationFailure(
                    f"core below (1-beta) fraction at {c}")
            tr = {model.mul(t, c) for t in core}
            if core_union & tr:
                raise VerificationFailure("witness cores overlap", witness=c)
            core_union |= tr
    if q * len(tile_union & e_set) < (q - p) * len(e_set):
        raise VerificationFailure(
            f"covered only {len(tile_union & e_set)} of {len(e_set)} points, "
            f"below the (1-beta) fraction")


def group_quasitile_ladder(model: GroupModel, E: Shape,
                           beta: Fraction) -> list[Shape]:
    """Build a hypothesis-satisfying nested ladder for group_quasitile,
    largest shape first found backward, padded with identity singletons.

    For Z^d the family is dyadic boxes [0,2^k)^d; otherwise the model's
    Folner sequence. Boundary conditions force rapid growth, so most levels
    degenerate to the identity singleton, which satisfies every inequality
    vacuously.
    """
    n = ladder_length_group(beta)
    ident = Shape.from_elements(model, [model.identity()])

    def family(k: int) -> Shape:
        if isinstance(model, Zd):
            return model.box(*([2 ** k] * model.d))
        return model.folner(k + 1)

    # largest level: E must be (T_n, beta/4)-invariant
    top = None
    k = 0
    while True:
        cand = family(k)
        if len(cand) > len(E):
            break
        if invariance_defect(cand, E) < beta / 4:
            top = cand
            k += 1
        else:
            break
    if top is None:
        raise InfeasibleParameters(
            "no family shape keeps E (T_n, beta/4)-invariant")
    ladder = [top]
    # walk down: each earlier shape must keep |boundary| small in the later
    while len(ladder) < n:
        nxt = None
        k = 0
        while True:
            cand = family(k)
            if len(cand) >= len(ladder[0]) or \
                    any(el not in ladder[0] for el in cand):
                break
            b = boundary(cand, ladder[0])
            if len(b) * beta.denominator * 8 <= beta.numerator * len(ladder[0]):
                nxt = cand
                k += 1
            else:
                break
        if nxt is None or nxt == ident:
            break
        ladder.insert(0, nxt)
    while len(ladder) < n:
        ladder.insert(0, ident)
    return ladder


def ladder_length_group(beta: Fraction) -> int:
    """Smallest n with (1-beta/2)^n < beta."""
    if not Fraction(0) < beta < Fraction(1, 2):
        raise InvalidInput("beta must lie in (0, 1/2)")
    n = 1
    p = 1 - beta / 2
    acc = p
    while acc >= beta:
        acc *= p
        n += 1
    return n


# ---------------------------------------------------------------------------
# statement checkers


def star_invariance_check(window: ActionWindow, atlas: TileAtlas, K: Shape,
                          delta: Fraction, eps: Fraction, F: Shape) -> bool:
    """Check that the atlas's covered set is (K, delta)*-invariant on the
    window F, after verifying the hypotheses that entitle us to expect it:
    eps-disjointness with the atlas cores as witnesses and per-core
    (K, delta(1-eps))-invariance."""
    tiles = [(core, center) for center, _level, core in atlas.entries]
    cores = [core for _c, _l, core in atlas.entries]
    from .windows import check_epsilon_disjoint

    if not check_epsilon_disjoint(window, tiles, cores, eps):
        raise InfeasibleParameters("atlas tiles are not eps-disjoint")
    theta = delta * (1 - eps)
    for center, _level, core in atlas.entries:
        d = invariance_defect(K, core)
        if d >= theta:
            raise InfeasibleParameters(
                f"tile at {center} is not (K, delta(1-eps))-invariant: "
                f"defect {d} >= {theta}")
    ok, _witness = is_star_invariant(atlas.covered, K, delta, F)
    return ok


@dataclass
class PackBoundResult:
    passed: bool
    failed_precondition: str | None
    lhs: Fraction | None = None
    rhs: Fraction | None = None


def pack_bound_check(window: ActionWindow, A: PointSet, B: PointSet, T: Shape,
                     eps: Fraction, delta: Fraction, U: Shape) -> PackBoundResult:
    """Check the density boost bound
    lBD(B) >= (1 - eps(1+delta)) lBD(A) + eps on the window list {TU}.

    Precondition violations are reported distinctly from a bound failure.
    """
    if eps * (1 + delta) >= 1:
        return PackBoundResult(False, "eps(1+delta) < 1")
    if not A.issubset(B):
        return PackBoundResult(False, "B contains A")
    cnt = window.counts(B.mask, T)
    p, q = eps.numerator, eps.denominator
    if (q * cnt < p * len(T)).any():
        return PackBoundResult(False, "|B meet Tx| >= eps|T| for all x")
    if A.count() > 0:
        ok, _w = is_star_invariant(A, T.inverse(), delta, U)
        if not ok:
            return PackBoundResult(False, "A is (T^-1, delta)*-invariant")
        lower_a = lower_banach_density(A, [multiply_set(T, U)]).lower
    else:
        lower_a = Fraction(0)
    lower_b = lower_banach_density(B, [multiply_set(T, U)]).lower
    rhs = (1 - eps * (1 + delta)) * lower_a + eps
    return PackBoundResult(lower_b >= rhs, None, lower_b, rhs)
