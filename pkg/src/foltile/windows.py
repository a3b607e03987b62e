"""Finite windows standing in for free actions of the built-in groups.

Each window is a finite quotient of its group (torus for Z^d, the mod-N
Heisenberg quotient, the mod-L lamplighter quotient) carrying the left
translation action. Points are flat indices; subsets are dense bitsets
(PointSet). The measure is normalized counting measure, so every density
and every predicate below is an exact integer or rational computation.

Left multiplication on a quotient acts the same way at every point, so a
shape translates freely everywhere iff its elements project to distinct
quotient elements; require_free checks exactly that instead of a
conservative word-length radius.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels
from .errors import InfeasibleParameters, InvalidInput, VerificationFailure
from .groups import GroupModel, Heisenberg, Lamplighter, Shape, Zd


class ActionWindow:
    """Base: a finite carrier with a left translation action of the model."""

    model: GroupModel
    size: int
    kind: str

    # -- raw action ---------------------------------------------------------

    def reduce(self, el) -> int:
        """Project a group element to its carrier index."""
        raise NotImplementedError

    def lift(self, idx: int):
        """Canonical group-element representative of a carrier point."""
        raise NotImplementedError

    def act_indices(self, el, idxs: np.ndarray) -> np.ndarray:
        """Vectorized el . x for an array of carrier indices."""
        raise NotImplementedError

    def act(self, el, idx: int) -> int:
        return int(self.act_indices(el, np.asarray([idx], dtype=np.int64))[0])

    def offset(self, y_idx: int, c_idx: int):
        """Group element g with g.c = y, canonically lifted."""
        m = self.model
        g = m.mul(self.lift(y_idx), m.inv(self.lift(c_idx)))
        return self.lift(self.reduce(g))

    # -- kernel plumbing ----------------------------------------------------

    def _elems_reduced_impl(self, shape: Shape) -> np.ndarray:
        raise NotImplementedError

    def _elems_reduced(self, shape: Shape) -> np.ndarray:
        # id-keyed cache with a strong ref to the key, so ids cannot be reused
        cache = getattr(self, "_ecache", None)
        if cache is None:
            cache = self._ecache = {}
        hit = cache.get(id(shape))
        if hit is not None and hit[0] is shape:
            return hit[1]
        arr = self._elems_reduced_impl(shape)
        cache[id(shape)] = (shape, arr)
        return arr

    def _kernel_kwargs(self) -> dict:
        raise NotImplementedError

    def counts(self, member: np.ndarray, shape: Shape) -> np.ndarray:
        """counts[x] = |A intersect (shape.x)| for the member bitset A."""
        return _kernels.window_counts(self.kind, member,
                                      self._elems_reduced(shape),
                                      **self._kernel_kwargs())

    def counts_at(self, member: np.ndarray, shape: Shape,
                  xs: np.ndarray) -> np.ndarray:
        return _kernels.window_counts_at(self.kind, member,
                                         self._elems_reduced(shape),
                                         np.ascontiguousarray(xs, dtype=np.int64),
                                         **self._kernel_kwargs())

    def color_by_diffs(self, diffs: Shape) -> np.ndarray:
        return _kernels.greedy_color_diffs(self.kind, self.size,
                                           self._elems_reduced(diffs),
                                           **self._kernel_kwargs())

    # -- freeness -----------------------------------------------------------

    def require_free(self, shape: Shape, what: str = "shape") -> None:
        """Error unless the shape's translates have full size everywhere."""
        seen = set()
        for el in shape:
            r = self.reduce(el)
            if r in seen:
                raise InfeasibleParameters(
                    f"{what} exceeds the freeness radius of this window: "
                    f"elements collide at carrier point {self.lift(r)}")
            seen.add(r)

    def is_free(self, shape: Shape) -> bool:
        return len({self.reduce(el) for el in shape}) == len(shape)

    # -- sets ----------------------------------------------------------------

    def empty_set(self) -> "PointSet":
        return PointSet(self, np.zeros(self.size, dtype=np.uint8))

    def full_set(self) -> "PointSet":
        return PointSet(self, np.ones(self.size, dtype=np.uint8))

    def point_set(self, idxs) -> "PointSet":
        mask = np.zeros(self.size, dtype=np.uint8)
        mask[np.asarray(list(idxs), dtype=np.int64)] = 1
        return PointSet(self, mask)

    def translate_set(self, F: Shape, x: int) -> "PointSet":
        """The translate F.x as a PointSet."""
        idxs = np.asarray([x], dtype=np.int64)
        out = np.zeros(self.size, dtype=np.uint8)
        for el in F:
            out[self.act_indices(el, idxs)[0]] = 1
        return PointSet(self, out)

    def translate_points(self, F: Shape, A: "PointSet") -> "PointSet":
        """The set F.A = {f.a}."""
        idxs = A.indices()
        out = np.zeros(self.size, dtype=np.uint8)
        for el in F:
            out[self.act_indices(el, idxs)] = 1
        return PointSet(self, out)


@dataclass(eq=False)
class PointSet:
    """Subset of a window's carrier with dense-bitset semantics."""

    window: ActionWindow
    mask: np.ndarray

    def __post_init__(self):
        self.mask = np.ascontiguousarray(self.mask, dtype=np.uint8)
        if self.mask.shape != (self.window.size,):
            raise InvalidInput("point set mask has wrong shape")

    def count(self) -> int:
        return int(self.mask.sum())

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask).astype(np.int64)

    def contains(self, idx: int) -> bool:
        return bool(self.mask[idx])

    def union(self, other: "PointSet") -> "PointSet":
        return PointSet(self.window, self.mask | other.mask)

    def intersection(self, other: "PointSet") -> "PointSet":
        return PointSet(self.window, self.mask & other.mask)

    def difference(self, other: "PointSet") -> "PointSet":
        return PointSet(self.window, self.mask & (1 - other.mask))

    def symmetric_difference(self, other: "PointSet") -> "PointSet":
        return PointSet(self.window, self.mask ^ other.mask)

    def complement(self) -> "PointSet":
        return PointSet(self.window, 1 - self.mask)

    def issubset(self, other: "PointSet") -> bool:
        return not np.any(self.mask & (1 - other.mask))

    def isdisjoint(self, other: "PointSet") -> bool:
        return not np.any(self.mask & other.mask)

    def __eq__(self, other):
        return isinstance(other, PointSet) and np.array_equal(self.mask, other.mask)

    def copy(self) -> "PointSet":
        return PointSet(self.window, self.mask.copy())


class TorusWindow(ActionWindow):
    """(Z/N)^d with componentwise translation."""

    kind = "torus"

    def __init__(self, model: Zd, side: int):
        if side < 2:
            raise InvalidInput("torus side must be >= 2")
        self.model = model
        self.side = side
        self.sides = np.full(model.d, side, dtype=np.int64)
        self.size = side ** model.d
        self.strides = np.array(
            [side ** (model.d - 1 - i) for i in range(model.d)], dtype=np.int64)
        grids = np.meshgrid(*[np.arange(side, dtype=np.int64)] * model.d,
                            indexing="ij")
        self.coords = np.stack([g.ravel() for g in grids], axis=1)

    def describe(self):
        return {"model": self.model.name, "N": self.side}

    def reduce(self, el) -> int:
        c = [v % self.side for v in el]
        return int(sum(v * s for v, s in zip(c, self.strides)))

    def lift(self, idx: int):
        c = self.coords[idx]
        half = self.side // 2
        return tuple(int(v) if v <= half else int(v) - self.side for v in c)

    def act_indices(self, el, idxs):
        c = (self.coords[idxs] + np.asarray(el)) % self.side
        return c @ self.strides

    def _elems_reduced_impl(self, shape: Shape) -> np.ndarray:
        return shape.coords_array() % self.side

    def _kernel_kwargs(self):
        return {"coords": self.coords, "sides": self.sides,
                "strides": self.strides}


class HeisWindow(ActionWindow):
    """Heisenberg mod N: triples with the twisted product, a genuine
    quotient group of H3(Z) since the congruence respects the twist."""

    kind = "heis"

    def __init__(self, model: Heisenberg, side: int):
        if side < 2:
            raise InvalidInput("torus side must be >= 2")
        self.model = model
        self.side = side
        self.sides = np.full(3, side, dtype=np.int64)
        self.size = side ** 3
        n = side
        self.strides = np.array([n * n, n, 1], dtype=np.int64)
        grids = np.meshgrid(*[np.arange(n, dtype=np.int64)] * 3, indexing="ij")
        self.coords = np.stack([g.ravel() for g in grids], axis=1)

    def describe(self):
        return {"model": self.model.name, "N": self.side}

    def reduce(self, el) -> int:
        n = self.side
        return int(((el[0] % n) * n + el[1] % n) * n + el[2] % n)

    def lift(self, idx: int):
        n = self.side
        half = n // 2
        c = self.coords[idx]
        return tuple(int(v) if v <= half else int(v) - n for v in c)

    def act_indices(self, el, idxs):
        n = self.side
        c = self.coords[idxs]
        cx = (c[:, 0] + el[0]) % n
        cy = (c[:, 1] + el[1]) % n
        cz = (c[:, 2] + el[2] + el[0] * c[:, 1]) % n
        return (cx * n + cy) * n + cz

    def _elems_reduced_impl(self, shape: Shape) -> np.ndarray:
        return shape.coords_array() % self.side

    def _kernel_kwargs(self):
        return {"coords": self.coords, "sides": self.sides}


class LamplighterWindow(ActionWindow):
    """Z2 wr (Z/L): lamp masks over L positions with a cursor, the mod-L
    quotient of the lamplighter group. Carrier size is L * 2^L."""

    kind = "lamp"

    def __init__(self, model: Lamplighter, nlamps: int):
        if not 2 <= nlamps <= 16:
            raise InvalidInput("lamplighter window supports 2..16 lamps")
        self.model = model
        self.nlamps = nlamps
        self.size = nlamps * (1 << nlamps)
        idx = np.arange(self.size, dtype=np.int64)
        self._masks = idx // nlamps
        self._curs = idx % nlamps

    def describe(self):
        return {"model": self.model.name, "L": self.nlamps}

    def _mask_of(self, lamps) -> int:
        # xor, not or: distinct G-positions may collide mod L and must cancel
        m = 0
        for i in lamps:
            m ^= 1 << (i % self.nlamps)
        return m

    def reduce(self, el) -> int:
        lamps, pos = el
        return self._mask_of(lamps) * self.nlamps + pos % self.nlamps

    def lift(self, idx: int):
        mask, cur = divmod(idx, self.nlamps)
        lamps = tuple(i for i in range(self.nlamps) if mask >> i & 1)
        return (lamps, int(cur))

    def act_indices(self, el, idxs):
        L = self.nlamps
        full = (1 << L) - 1
        gmask = self._mask_of(el[0])
        s = el[1] % L
        masks = idxs // L
        curs = idxs % L
        rot = masks if s == 0 else ((masks << s) | (masks >> (L - s))) & full
        return (gmask ^ rot) * L + (s + curs) % L

    def _elems_reduced_impl(self, shape: Shape) -> np.ndarray:
        out = np.empty((len(shape), 2), dtype=np.int64)
        for j, (lamps, pos) in enumerate(shape):
            out[j, 0] = self._mask_of(lamps)
            out[j, 1] = pos % self.nlamps
        return out

    def _kernel_kwargs(self):
        return {"nlamps": self.nlamps, "masks": self._masks,
                "curs": self._curs}


def make_window(model_name: str, size_param: int) -> ActionWindow:
    from .groups import get_model

    model = get_model(model_name)
    if isinstance(model, Zd):
        return TorusWindow(model, size_param)
    if isinstance(model, Heisenberg):
        return HeisWindow(model, size_param)
    return LamplighterWindow(model, size_param)


# ---------------------------------------------------------------------------
# densities and invariance predicates


@dataclass
class DensityReport:
    """Banach density bounds of a set along the supplied window shapes."""

    windows: list
    inf_counts: list
    sup_counts: list
    lower: Fraction
    upper: Fraction


def lower_banach_density(A: PointSet, windows: list[Shape]) -> DensityReport:
    """Best inf-count ratio over the supplied shapes (and the dual sup).

    lower = max_F min_x |A meet Fx| / |F|, upper = min_F max_x of the same;
    the true Banach densities are the limits along a Folner sequence, which
    desk scale replaces with an explicit window list.
    """
    if not windows:
        raise InvalidInput("density needs a nonempty window list")
    w = A.window
    infs, sups = [], []
    lower = Fraction(0)
    upper = Fraction(1)
    for F in windows:
        w.require_free(F, "density window")
        cnt = w.counts(A.mask, F)
        lo, hi = int(cnt.min()), int(cnt.max())
        infs.append(lo)
        sups.append(hi)
        lower = max(lower, Fraction(lo, len(F)))
        upper = min(upper, Fraction(hi, len(F)))
    return DensityReport(list(windows), infs, sups, lower, upper)


def upper_banach_density(A: PointSet, windows: list[Shape]) -> Fraction:
    return lower_banach_density(A, windows).upper


def is_star_invariant(A: PointSet, K: Shape, delta: Fraction,
                      F: Shape) -> tuple[bool, int | None]:
    """Window-relative invariance: |(KA symdiff A) meet Fx| < delta |A meet Fx|
    at every carrier point x. Returns (ok, witness_index).

    The comparison is division-free, so a point with an empty A-window and a
    nonempty boundary-window is reported as a failure witness rather than a
    division error.
    """
    w = A.window
    if A.count() == 0:
        raise InvalidInput("star invariance of the empty set")
    w.require_free(F, "star invariance window")
    ka = w.translate_points(K, A)
    b = ka.symmetric_difference(A)
    cnt_b = w.counts(b.mask, F)
    cnt_a = w.counts(A.mask, F)
    # delta = p/q; require q*|B meet Fx| < p*|A meet Fx| everywhere
    p, q = delta.numerator, delta.denominator
    bad = q * cnt_b >= p * cnt_a
    if bad.any():
        return False, int(np.flatnonzero(bad)[0])
    return True, None


def check_epsilon_disjoint(window: ActionWindow,
                           tiles: list[tuple[Shape, int]],
                           witnesses: list[Shape],
                           eps: Fraction) -> bool:
    """Verify the eps-disjointness certificate: each witness core sits inside
    its tile shape, keeps more than a (1-eps) fraction of it, and the core
    translates are pairwise disjoint in the carrier."""
    if len(tiles) != len(witnesses):
        raise InvalidInput("witness list does not align with tile list")
    seen = np.zeros(window.size, dtype=np.uint8)
    for (shape, center), core in zip(tiles, witnesses):
        if any(el not in shape for el in core):
            return False
        if len(core) * eps.denominator <= (eps.denominator - eps.numerator) * len(shape):
            # |core| <= (1-eps)|shape| violates the strict inequality
            return False
        idxs = np.asarray([window.act(el, center) for el in core], dtype=np.int64)
        if seen[idxs].any():
            return False
        seen[idxs] = 1
    return True


def assert_measure_preserved(src: PointSet, img: PointSet) -> None:
    """Counting-measure preservation for translation-carried injections."""
    if src.count() != img.count():
        raise VerificationFailure(
            f"translation moved {src.count()} points onto {img.count()}")
