"""Hot inner loops with two interchangeable backends.

Every kernel here exists twice: a numba @njit version and a pure
numpy/python fallback. The active backend is picked once at import from
the FOLTILE_BACKEND environment variable ("numba" or "numpy"); the
default is numba whenever it imports. set_backend() swaps at runtime,
which the benchmark and the backend-agreement tests rely on.

Carrier points are flat indices. Translation models are identified by
kind: "torus" (componentwise add mod sides), "heis" (Heisenberg triple
product mod N, with the x*y twist in the last coordinate), "lamp"
(lamplighter: lamp mask rotate-xor plus cursor add). Group elements
arrive pre-reduced mod the carrier sides, so all arithmetic stays in
nonnegative int64 range.
"""

from __future__ import annotations

import os

import numpy as np

_env = os.environ.get("FOLTILE_BACKEND", "").strip().lower()

try:
    import numba as _nb

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

if _env not in ("", "numba", "numpy"):
    raise RuntimeError(f"FOLTILE_BACKEND must be 'numba' or 'numpy', got {_env!r}")
if _env == "numba" and not _HAVE_NUMBA:
    raise RuntimeError("FOLTILE_BACKEND=numba but numba is not importable")

_backend = _env or ("numba" if _HAVE_NUMBA else "numpy")


def active_backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    """Switch kernel backend at runtime ("numba" or "numpy")."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not _HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    _backend = name


# ---------------------------------------------------------------------------
# numba kernels


if _HAVE_NUMBA:
    _njit = _nb.njit(cache=True)
    _njit_par = _nb.njit(cache=True, parallel=True)

    @_njit_par
    def _counts_torus_nb(member, elems, coords, sides, strides, out):
        size = member.shape[0]
        k = elems.shape[0]
        d = sides.shape[0]
        for x in _nb.prange(size):
            acc = 0
            for j in range(k):
                idx = 0
                for i in range(d):
                    c = coords[x, i] + elems[j, i]
                    if c >= sides[i]:
                        c -= sides[i]
                    idx += c * strides[i]
                acc += member[idx]
            out[x] = acc

    @_njit_par
    def _counts_heis_nb(member, elems, coords, n, out):
        size = member.shape[0]
        k = elems.shape[0]
        n2 = n * n
        for x in _nb.prange(size):
            xx = coords[x, 0]
            xy = coords[x, 1]
            xz = coords[x, 2]
            acc = 0
            for j in range(k):
                cx = (elems[j, 0] + xx) % n
                cy = (elems[j, 1] + xy) % n
                cz = (elems[j, 2] + xz + elems[j, 0] * xy) % n
                acc += member[cx * n2 + cy * n + cz]
            out[x] = acc

    @_njit_par
    def _counts_lamp_nb(member, elems, nlamps, out):
        size = member.shape[0]
        k = elems.shape[0]
        full = (1 << nlamps) - 1
        for x in _nb.prange(size):
            mask = x // nlamps
            cur = x % nlamps
            acc = 0
            for j in range(k):
                s = elems[j, 1]
                if s == 0:
                    rot = mask
                else:
                    rot = ((mask << s) | (mask >> (nlamps - s))) & full
                m2 = elems[j, 0] ^ rot
                c2 = (s + cur) % nlamps
                acc += member[m2 * nlamps + c2]
            out[x] = acc

    @_njit_par
    def _counts_at_torus_nb(member, elems, coords, sides, strides, xs, out):
        k = elems.shape[0]
        d = sides.shape[0]
        for t in _nb.prange(xs.shape[0]):
            x = xs[t]
            acc = 0
            for j in range(k):
                idx = 0
                for i in range(d):
                    c = coords[x, i] + elems[j, i]
                    if c >= sides[i]:
                        c -= sides[i]
                    idx += c * strides[i]
                acc += member[idx]
            out[t] = acc

    @_njit_par
    def _counts_at_heis_nb(member, elems, coords, n, xs, out):
        k = elems.shape[0]
        n2 = n * n
        for t in _nb.prange(xs.shape[0]):
            x = xs[t]
            xx = coords[x, 0]
            xy = coords[x, 1]
            xz = coords[x, 2]
            acc = 0
            for j in range(k):
                cx = (elems[j, 0] + xx) % n
                cy = (elems[j, 1] + xy) % n
                cz = (elems[j, 2] + xz + elems[j, 0] * xy) % n
                acc += member[cx * n2 + cy * n + cz]
            out[t] = acc

    @_njit_par
    def _counts_at_lamp_nb(member, elems, nlamps, xs, out):
        k = elems.shape[0]
        full = (1 << nlamps) - 1
        for t in _nb.prange(xs.shape[0]):
            x = xs[t]
            mask = x // nlamps
            cur = x % nlamps
            acc = 0
            for j in range(k):
                s = elems[j, 1]
                if s == 0:
                    rot = mask
                else:
                    rot = ((mask << s) | (mask >> (nlamps - s))) & full
                acc += member[(elems[j, 0] ^ rot) * nlamps + (s + cur) % nlamps]
            out[t] = acc

    @_njit
    def _color_torus_nb(elems, coords, sides, strides, colors, scratch):
        size = colors.shape[0]
        k = elems.shape[0]
        d = sides.shape[0]
        for x in range(size):
            stamp = x + 1
            for j in range(k):
                idx = 0
                for i in range(d):
                    c = coords[x, i] + elems[j, i]
                    if c >= sides[i]:
                        c -= sides[i]
                    idx += c * strides[i]
                col = colors[idx]
                if col >= 0:
                    scratch[col] = stamp
            col = 0
            while scratch[col] == stamp:
                col += 1
            colors[x] = col

    @_njit
    def _color_heis_nb(elems, coords, n, colors, scratch):
        size = colors.shape[0]
        k = elems.shape[0]
        n2 = n * n
        for x in range(size):
            stamp = x + 1
            xx = coords[x, 0]
            xy = coords[x, 1]
            xz = coords[x, 2]
            for j in range(k):
                cx = (elems[j, 0] + xx) % n
                cy = (elems[j, 1] + xy) % n
                cz = (elems[j, 2] + xz + elems[j, 0] * xy) % n
                col = colors[cx * n2 + cy * n + cz]
                if col >= 0:
                    scratch[col] = stamp
            col = 0
            while scratch[col] == stamp:
                col += 1
            colors[x] = col

    @_njit
    def _color_lamp_nb(elems, nlamps, colors, scratch):
        size = colors.shape[0]
        k = elems.shape[0]
        full = (1 << nlamps) - 1
        for x in range(size):
            stamp = x + 1
            mask = x // nlamps
            cur = x % nlamps
            for j in range(k):
                s = elems[j, 1]
                if s == 0:
                    rot = mask
                else:
                    rot = ((mask << s) | (mask >> (nlamps - s))) & full
                col = colors[(elems[j, 0] ^ rot) * nlamps + (s + cur) % nlamps]
                if col >= 0:
                    scratch[col] = stamp
            col = 0
            while scratch[col] == stamp:
                col += 1
            colors[x] = col

    @_njit
    def _color_csr_nb(indptr, indices, order, colors, scratch):
        n = order.shape[0]
        for t in range(n):
            v = order[t]
            stamp = t + 1
            for e in range(indptr[v], indptr[v + 1]):
                col = colors[indices[e]]
                if col >= 0:
                    scratch[col] = stamp
            col = 0
            while scratch[col] == stamp:
                col += 1
            colors[v] = col

    @_njit
    def _bfs_augmenting_nb(indptr, indices, match_left, match_right, origin,
                           max_ys, dist_y, prev_y, queue):
        """Shortest alternating path from a free left vertex to a free right.

        Layers over right vertices; adjacency is scanned in CSR (canonical)
        order so the first free right found at the smallest depth gives the
        canonical shortest path. Returns the final right vertex, or -1.
        dist_y/prev_y are int64 scratch of size n_right, queue likewise.
        """
        dist_y[:] = -1
        head = 0
        tail = 0
        for e in range(indptr[origin], indptr[origin + 1]):
            y = indices[e]
            if dist_y[y] < 0:
                dist_y[y] = 0
                prev_y[y] = -1
                if match_right[y] < 0:
                    return y
                queue[tail] = y
                tail += 1
        while head < tail:
            y0 = queue[head]
            head += 1
            if dist_y[y0] + 1 >= max_ys:
                continue
            x = match_right[y0]
            for e in range(indptr[x], indptr[x + 1]):
                y = indices[e]
                if dist_y[y] < 0:
                    dist_y[y] = dist_y[y0] + 1
                    prev_y[y] = y0
                    if match_right[y] < 0:
                        return y
                    queue[tail] = y
                    tail += 1
        return -1

else:  # pragma: no cover
    _counts_torus_nb = _counts_heis_nb = _counts_lamp_nb = None
    _counts_at_torus_nb = _counts_at_heis_nb = _counts_at_lamp_nb = None
    _color_torus_nb = _color_heis_nb = _color_lamp_nb = None
    _color_csr_nb = _bfs_augmenting_nb = None


# ---------------------------------------------------------------------------
# numpy / python fallbacks


def _apply_torus_np(elem, coords, sides, strides):
    return ((coords + elem) % sides) @ strides


def _apply_heis_np(elem, coords, n):
    cx = (coords[:, 0] + elem[0]) % n
    cy = (coords[:, 1] + elem[1]) % n
    cz = (coords[:, 2] + elem[2] + elem[0] * coords[:, 1]) % n
    return (cx * n + cy) * n + cz


def _apply_lamp_np(elem, masks, curs, nlamps):
    s = int(elem[1])
    full = (1 << nlamps) - 1
    if s == 0:
        rot = masks
    else:
        rot = ((masks << s) | (masks >> (nlamps - s))) & full
    return (elem[0] ^ rot) * nlamps + (s + curs) % nlamps


def _counts_np(apply_elem, member, elems):
    out = np.zeros(member.shape[0], dtype=np.int64)
    for elem in elems:
        out += member[apply_elem(elem)]
    return out


def _color_np(neighbor_idx_of, size, elems):
    colors = np.full(size, -1, dtype=np.int32)
    for x in range(size):
        idx = neighbor_idx_of(x)
        used = colors[idx]
        used = set(used[used >= 0].tolist())
        col = 0
        while col in used:
            col += 1
        colors[x] = col
    return colors


def _color_csr_py(indptr, indices, order):
    n = order.shape[0]
    colors = np.full(n, -1, dtype=np.int32)
    for v in order.tolist():
        used = set()
        for e in range(indptr[v], indptr[v + 1]):
            c = colors[indices[e]]
            if c >= 0:
                used.add(int(c))
        col = 0
        while col in used:
            col += 1
        colors[v] = col
    return colors


def _bfs_augmenting_py(indptr, indices, match_left, match_right, origin, max_ys):
    from collections import deque

    dist_y = {}
    prev_y = {}
    queue = deque()
    for e in range(indptr[origin], indptr[origin + 1]):
        y = int(indices[e])
        if y not in dist_y:
            dist_y[y] = 0
            prev_y[y] = -1
            if match_right[y] < 0:
                return y, prev_y
            queue.append(y)
    while queue:
        y0 = queue.popleft()
        if dist_y[y0] + 1 >= max_ys:
            continue
        x = int(match_right[y0])
        for e in range(indptr[x], indptr[x + 1]):
            y = int(indices[e])
            if y not in dist_y:
                dist_y[y] = dist_y[y0] + 1
                prev_y[y] = y0
                if match_right[y] < 0:
                    return y, prev_y
                queue.append(y)
    return -1, prev_y


# ---------------------------------------------------------------------------
# dispatchers


def window_counts(kind, member, elems, *, coords=None, sides=None, strides=None,
                  nlamps=None, masks=None, curs=None):
    """counts[x] = number of shape elements f with f.x in the member set."""
    size = member.shape[0]
    if _backend == "numba":
        out = np.empty(size, dtype=np.int64)
        if kind == "torus":
            _counts_torus_nb(member, elems, coords, sides, strides, out)
        elif kind == "heis":
            _counts_heis_nb(member, elems, coords, int(sides[0]), out)
        else:
            _counts_lamp_nb(member, elems, nlamps, out)
        return out
    if kind == "torus":
        return _counts_np(lambda e: _apply_torus_np(e, coords, sides, strides),
                          member, elems)
    if kind == "heis":
        return _counts_np(lambda e: _apply_heis_np(e, coords, int(sides[0])),
                          member, elems)
    return _counts_np(lambda e: _apply_lamp_np(e, masks, curs, nlamps),
                      member, elems)


def window_counts_at(kind, member, elems, xs, *, coords=None, sides=None,
                     strides=None, nlamps=None, masks=None, curs=None):
    """Like window_counts but only at the carrier indices in xs."""
    if _backend == "numba":
        out = np.empty(xs.shape[0], dtype=np.int64)
        if kind == "torus":
            _counts_at_torus_nb(member, elems, coords, sides, strides, xs, out)
        elif kind == "heis":
            _counts_at_heis_nb(member, elems, coords, int(sides[0]), xs, out)
        else:
            _counts_at_lamp_nb(member, elems, nlamps, xs, out)
        return out
    out = np.zeros(xs.shape[0], dtype=np.int64)
    if kind == "torus":
        sub = coords[xs]
        for elem in elems:
            out += member[((sub + elem) % sides) @ strides]
        return out
    if kind == "heis":
        n = int(sides[0])
        sub = coords[xs]
        for elem in elems:
            cx = (sub[:, 0] + elem[0]) % n
            cy = (sub[:, 1] + elem[1]) % n
            cz = (sub[:, 2] + elem[2] + elem[0] * sub[:, 1]) % n
            out += member[(cx * n + cy) * n + cz]
        return out
    sub_m = masks[xs]
    sub_c = curs[xs]
    for elem in elems:
        out += member[_apply_lamp_np(elem, sub_m, sub_c, nlamps)]
    return out


def greedy_color_diffs(kind, size, elems, *, coords=None, sides=None,
                       strides=None, nlamps=None, masks=None, curs=None):
    """Greedy coloring in index order of the graph x ~ d.x for d in elems."""
    if _backend == "numba":
        colors = np.full(size, -1, dtype=np.int32)
        scratch = np.zeros(elems.shape[0] + 2, dtype=np.int64)
        if kind == "torus":
            _color_torus_nb(elems, coords, sides, strides, colors, scratch)
        elif kind == "heis":
            _color_heis_nb(elems, coords, int(sides[0]), colors, scratch)
        else:
            _color_lamp_nb(elems, nlamps, colors, scratch)
        return colors
    if kind == "torus":
        fn = lambda x: _apply_torus_np(elems, coords[x], sides, strides)
    elif kind == "heis":
        n = int(sides[0])

        def fn(x):
            cx = (elems[:, 0] + coords[x, 0]) % n
            cy = (elems[:, 1] + coords[x, 1]) % n
            cz = (elems[:, 2] + coords[x, 2] + elems[:, 0] * coords[x, 1]) % n
            return (cx * n + cy) * n + cz
    else:
        full = (1 << nlamps) - 1

        def fn(x):
            mask = x // nlamps
            cur = x % nlamps
            s = elems[:, 1]
            rot = np.where(s == 0, mask,
                           ((mask << s) | (mask >> (nlamps - s))) & full)
            return (elems[:, 0] ^ rot) * nlamps + (s + cur) % nlamps

    return _color_np(fn, size, elems)


def greedy_color_csr(indptr, indices, order):
    """Greedy coloring of an explicit graph, visiting vertices in `order`."""
    if _backend == "numba":
        colors = np.full(order.shape[0], -1, dtype=np.int32)
        maxdeg = int((indptr[1:] - indptr[:-1]).max(initial=0))
        scratch = np.zeros(maxdeg + 2, dtype=np.int64)
        _color_csr_nb(indptr, indices, order, colors, scratch)
        return colors
    return _color_csr_py(indptr, indices, order)


def bfs_augmenting(indptr, indices, match_left, match_right, origin, max_ys):
    """Canonical shortest augmenting path from `origin`, bounded length.

    Returns the list of right vertices [y0, .., ym] (m+1 <= max_ys) of the
    path, or None. The left vertices are implied: x0=origin and
    x_{i+1} = match_right[y_i].
    """
    if _backend == "numba":
        n_right = match_right.shape[0]
        dist_y = np.empty(n_right, dtype=np.int64)
        prev_y = np.empty(n_right, dtype=np.int64)
        queue = np.empty(n_right, dtype=np.int64)
        y_end = int(_bfs_augmenting_nb(indptr, indices, match_left, match_right,
                                       origin, max_ys, dist_y, prev_y, queue))
        if y_end < 0:
            return None
        ys = [y_end]
        while prev_y[ys[-1]] >= 0:
            ys.append(int(prev_y[ys[-1]]))
        ys.reverse()
        return ys
    y_end, prev_y = _bfs_augmenting_py(indptr, indices, match_left, match_right,
                                       origin, max_ys)
    if y_end < 0:
        return None
    ys = [y_end]
    while prev_y[ys[-1]] >= 0:
        ys.append(prev_y[ys[-1]])
    ys.reverse()
    return ys
