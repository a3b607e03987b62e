"""Finitely generated amenable groups with exact arithmetic.

Three built-in models: Z^d (d <= 3), the discrete Heisenberg group
H3(Z), and the lamplighter group Z2 wr Z. Elements are plain tuples in a
canonical normal form, so tuple equality is element equality and the
lexicographic order on coordinate tuples is the canonical order used for
every deterministic tie-break downstream.

Shapes are finite subsets of a group: sorted, duplicate-free tuples of
elements. All invariance predicates compare exact rationals
(fractions.Fraction); no floating point enters any comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InvalidInput


class GroupModel:
    """Multiplication/inversion oracles plus a Folner-sequence generator."""

    name: str

    def identity(self):
        raise NotImplementedError

    def mul(self, a, b):
        raise NotImplementedError

    def inv(self, a):
        raise NotImplementedError

    def coords(self, a) -> tuple:
        """Canonical coordinate tuple; lexicographic order on these is total."""
        raise NotImplementedError

    def generators(self) -> "Shape":
        """Symmetric generating set containing the identity."""
        raise NotImplementedError

    def folner(self, index: int) -> "Shape":
        raise NotImplementedError

    def word_length(self, a) -> int:
        raise NotImplementedError

    # vectorized coordinate representation; models without one fall back to
    # elementwise python (is_vector stays False)
    is_vector = False

    def sort_key(self, a):
        return self.coords(a)

    def shape(self, elements) -> "Shape":
        return Shape.from_elements(self, elements)


@dataclass(frozen=True, eq=False)
class Shape:
    """A canonical finite subset of a group: sorted, duplicate-free."""

    model: GroupModel
    elements: tuple
    _member: frozenset = field(repr=False, hash=False, compare=False)

    @staticmethod
    def from_elements(model: GroupModel, elements) -> "Shape":
        elems = sorted(set(elements), key=model.sort_key)
        return Shape(model, tuple(elems), frozenset(elems))

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, el):
        return el in self._member

    def __eq__(self, other):
        return isinstance(other, Shape) and self.elements == other.elements

    def __hash__(self):
        return hash(self.elements)

    def union(self, other: "Shape") -> "Shape":
        return Shape.from_elements(self.model, self.elements + other.elements)

    def difference(self, other: "Shape") -> "Shape":
        return Shape.from_elements(
            self.model, [e for e in self.elements if e not in other])

    def inverse(self) -> "Shape":
        m = self.model
        return Shape.from_elements(m, [m.inv(e) for e in self.elements])

    def symmetrize(self) -> "Shape":
        return self.union(self.inverse())

    def is_symmetric(self) -> bool:
        return self == self.inverse()

    def translate(self, c) -> "Shape":
        """Right translate: elements g*c."""
        m = self.model
        return Shape.from_elements(m, [m.mul(e, c) for e in self.elements])

    def coords_array(self) -> np.ndarray:
        cached = getattr(self, "_coords_arr", None)
        if cached is None:
            cached = np.asarray([self.model.coords(e) for e in self.elements],
                                dtype=np.int64)
            object.__setattr__(self, "_coords_arr", cached)
        return cached


class Zd(GroupModel):
    """Z^d under addition; elements are integer d-tuples."""

    is_vector = True

    def __init__(self, d: int):
        if not 1 <= d <= 3:
            raise InvalidInput(f"Z^d supported for d in 1..3, got {d}")
        self.d = d
        self.name = f"z{d}"

    def identity(self):
        return (0,) * self.d

    def mul(self, a, b):
        return tuple(x + y for x, y in zip(a, b))

    def inv(self, a):
        return tuple(-x for x in a)

    def coords(self, a):
        return a

    def from_coords(self, c):
        return tuple(int(v) for v in c)

    def word_length(self, a):
        return sum(abs(x) for x in a)

    def generators(self):
        gens = [self.identity()]
        for i in range(self.d):
            for s in (1, -1):
                e = [0] * self.d
                e[i] = s
                gens.append(tuple(e))
        return self.shape(gens)

    def folner(self, index):
        if index < 1:
            raise InvalidInput("folner index must be >= 1")
        rng = range(index)
        if self.d == 1:
            pts = [(x,) for x in rng]
        elif self.d == 2:
            pts = [(x, y) for x in rng for y in rng]
        else:
            pts = [(x, y, z) for x in rng for y in rng for z in rng]
        return self.shape(pts)

    def box(self, *sides) -> Shape:
        """Axis-aligned box prod [0, sides_i); a handy Folner-type shape."""
        if len(sides) != self.d:
            raise InvalidInput(f"box needs {self.d} side lengths")
        grids = np.meshgrid(*[np.arange(s) for s in sides], indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        return self.shape([tuple(int(v) for v in row) for row in pts])


class Heisenberg(GroupModel):
    """Discrete Heisenberg group: triples with (x,y,z)(x',y',z') =
    (x+x', y+y', z+z'+x*y')."""

    is_vector = True
    name = "heis"
    d = 3

    def identity(self):
        return (0, 0, 0)

    def mul(self, a, b):
        return (a[0] + b[0], a[1] + b[1], a[2] + b[2] + a[0] * b[1])

    def inv(self, a):
        return (-a[0], -a[1], -a[2] + a[0] * a[1])

    def coords(self, a):
        return a

    def from_coords(self, c):
        return tuple(int(v) for v in c)

    def word_length(self, a):
        # crude but monotone: |x| + |y| + |z| with z discounted by sqrt
        return abs(a[0]) + abs(a[1]) + int(abs(a[2]) ** 0.5)

    def generators(self):
        return self.shape([
            (0, 0, 0),
            (1, 0, 0), (-1, 0, 0),
            (0, 1, 0), (0, -1, 0),
            (0, 0, 1), (0, 0, -1),
        ])

    def folner(self, index):
        if index < 1:
            raise InvalidInput("folner index must be >= 1")
        n = index
        return self.box(n, n, n * n)

    def box(self, a, b, c) -> Shape:
        pts = [(x, y, z) for x in range(a) for y in range(b) for z in range(c)]
        return self.shape(pts)


class Lamplighter(GroupModel):
    """Z2 wr Z: elements (lamps, pos) with lamps a sorted tuple of lit
    positions. (f,k)(g,m) = (f xor (g+k), k+m)."""

    name = "lamplighter"

    def identity(self):
        return ((), 0)

    def mul(self, a, b):
        f, k = a
        g, m = b
        shifted = frozenset(i + k for i in g)
        lamps = frozenset(f).symmetric_difference(shifted)
        return (tuple(sorted(lamps)), k + m)

    def inv(self, a):
        f, k = a
        return (tuple(sorted(i - k for i in f)), -k)

    def coords(self, a):
        return (a[1], len(a[0])) + a[0]

    def word_length(self, a):
        f, k = a
        span = [abs(k)] + [abs(i) for i in f] + [abs(i - k) for i in f]
        return max(span) + len(f)

    def generators(self):
        return self.shape([
            ((), 0), ((), 1), ((), -1), ((0,), 0),
        ])

    def folner(self, index):
        """Left-Folner sets: cursor in [0,n), lamps within the n positions
        ending at the cursor. (These are shifted inverses of the natural
        right-Folner boxes; plain boxes are not left-Folner here.)"""
        if index < 1:
            raise InvalidInput("folner index must be >= 1")
        n = index
        if n > 16:
            raise InvalidInput("lamplighter folner index capped at 16")
        out = []
        for k in range(n):
            window = list(range(k - n + 1, k + 1))
            for mask in range(1 << n):
                lamps = tuple(sorted(window[i] for i in range(n)
                                     if mask >> i & 1))
                out.append((lamps, k))
        return self.shape(out)


_MODELS = {}


def get_model(name: str) -> GroupModel:
    """Model registry: z1, z2, z3, heis, lamplighter."""
    if name not in _MODELS:
        if name in ("z1", "z2", "z3"):
            _MODELS[name] = Zd(int(name[1]))
        elif name == "heis":
            _MODELS[name] = Heisenberg()
        elif name == "lamplighter":
            _MODELS[name] = Lamplighter()
        else:
            raise InvalidInput(f"unknown group model {name!r}")
    return _MODELS[name]


# ---------------------------------------------------------------------------
# shape operations


_PACK_BITS = 21  # coordinates must fit in (-2^20, 2^20)


def _pack_rows(rows: np.ndarray) -> np.ndarray:
    """Encode small-coordinate rows into single int64 keys (fast unique)."""
    if np.abs(rows).max(initial=0) >= 1 << (_PACK_BITS - 1):
        raise InvalidInput("coordinates too large for packed arithmetic")
    d = rows.shape[1]
    keys = np.zeros(rows.shape[0], dtype=np.int64)
    off = 1 << (_PACK_BITS - 1)
    for i in range(d):
        keys = (keys << _PACK_BITS) | (rows[:, i] + off)
    return keys


def _unpack_keys(keys: np.ndarray, d: int) -> np.ndarray:
    out = np.empty((keys.shape[0], d), dtype=np.int64)
    off = 1 << (_PACK_BITS - 1)
    mask = (1 << _PACK_BITS) - 1
    for i in range(d - 1, -1, -1):
        out[:, i] = (keys & mask) - off
        keys = keys >> _PACK_BITS
    return out


def multiply_set(K: Shape, F: Shape) -> Shape:
    """The product set {k*f : k in K, f in F}, canonicalized."""
    m = K.model
    if m.is_vector and len(K) * len(F) > 512:
        ka = K.coords_array()[:, None, :]
        fa = F.coords_array()[None, :, :]
        if isinstance(m, Heisenberg):
            x = ka[..., 0] + fa[..., 0]
            y = ka[..., 1] + fa[..., 1]
            z = ka[..., 2] + fa[..., 2] + ka[..., 0] * fa[..., 1]
            prod = np.stack([x, y, z], axis=-1).reshape(-1, 3)
        else:
            prod = (ka + fa).reshape(-1, ka.shape[-1])
        keys = np.unique(_pack_rows(prod))
        uniq = _unpack_keys(keys, prod.shape[1])
        # packed keys sort in the same lexicographic order as the tuples
        elems = tuple(map(tuple, uniq.tolist()))
        return Shape(m, elems, frozenset(elems))
    return Shape.from_elements(m, [m.mul(k, f) for k in K for f in F])


def symmetric_difference_size(A: Shape, B: Shape) -> int:
    return len(A._member.symmetric_difference(B._member))


def invariance_defect(K: Shape, F: Shape) -> Fraction:
    """|KF symdiff F| / |F| as an exact rational."""
    if len(F) == 0:
        raise InvalidInput("invariance defect of the empty shape")
    kf = multiply_set(K, F)
    return Fraction(symmetric_difference_size(kf, F), len(F))


def is_invariant(K: Shape, delta: Fraction, F: Shape) -> bool:
    """(K, delta)-invariance: |KF symdiff F| < delta |F|, strictly."""
    return invariance_defect(K, F) < delta


def boundary(F: Shape, A: Shape) -> Shape:
    """{s in A : Fs meets both A and its complement}."""
    if len(F) == 0:
        raise InvalidInput("boundary with empty window shape")
    m = F.model
    out = []
    for s in A:
        hit = miss = False
        for f in F:
            if m.mul(f, s) in A:
                hit = True
            else:
                miss = True
            if hit and miss:
                out.append(s)
                break
    return Shape.from_elements(m, out)


def propagate_invariance(K: Shape, delta: Fraction, eps: Fraction) -> Fraction:
    """Invariance bound ((|K|+1)*eps + delta) / (1 - eps) for a shape within
    eps relative symmetric difference of a (K, delta)-invariant one."""
    if eps >= 1:
        raise InvalidInput("perturbation ratio must satisfy eps < 1")
    return ((len(K) + 1) * eps + delta) / (1 - eps)


def spot_check_associativity(model: GroupModel, rng: np.random.Generator,
                             trials: int = 100, span: int = 8) -> None:
    """Random-triple associativity check; raises on failure."""
    def rand_el():
        if isinstance(model, Lamplighter):
            k = int(rng.integers(-span, span + 1))
            lamps = tuple(sorted(int(v) for v in
                                 rng.choice(2 * span, size=rng.integers(0, 4),
                                            replace=False) - span))
            return (lamps, k)
        dim = model.d
        return tuple(int(v) for v in rng.integers(-span, span + 1, size=dim))

    for _ in range(trials):
        a, b, c = rand_el(), rand_el(), rand_el()
        left = model.mul(model.mul(a, b), c)
        right = model.mul(a, model.mul(b, c))
        if left != right:
            raise AssertionError(f"associativity broken: {a} {b} {c}")
