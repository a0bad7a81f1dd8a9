"""Abstract triangulations of the n-gon and the dual tree the action-angle chart assembles along.

Chords are 1-indexed vertex pairs (a, b) with a < b, stored in construction
order: diagonal i of the chart is ``chords[i]``.  The dual tree has one node
per triangle, edges labeled by shared chords, and is rooted at the triangle
containing polygon edge (1, 2) so the assembly frame is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np


def _normalize_chord(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


@dataclass
class DualTree:
    """Rooted tree on triangle indices; edge to the parent is labeled by a chord index."""

    root: int
    parent: list[int]            # parent triangle index, -1 at the root
    parent_chord: list[int]      # chord index shared with the parent, -1 at the root
    children: list[list[int]]
    bfs_order: list[int]


class Triangulation:
    """A triangulation of the abstract n-gon given by its n-3 non-crossing chords."""

    def __init__(self, n: int, chords):
        if n < 3:
            raise ValueError("a polygon needs n >= 3")
        chords = [_normalize_chord(int(a), int(b)) for a, b in chords]
        if len(chords) != n - 3:
            raise ValueError(f"a triangulation of an {n}-gon has {n - 3} chords, got {len(chords)}")
        if len(set(chords)) != len(chords):
            raise ValueError("duplicate chord")
        for a, b in chords:
            if not (1 <= a < b <= n) or b - a < 2 or (a, b) == (1, n):
                raise ValueError(f"({a},{b}) is not a chord of the {n}-gon")
        for i, (a, b) in enumerate(chords):
            for c, d in chords[i + 1:]:
                if a < c < b < d or c < a < d < b:
                    raise ValueError(f"chords ({a},{b}) and ({c},{d}) cross")
        self.n = n
        self.chords: list[tuple[int, int]] = chords
        self.chord_index = {c: i for i, c in enumerate(chords)}
        self.triangles = self._find_triangles()
        self.dual_tree = self._build_dual_tree()

    def _edges(self) -> set[tuple[int, int]]:
        n = self.n
        boundary = {_normalize_chord(i, i % n + 1) for i in range(1, n + 1)}
        return boundary | set(self.chords)

    def _find_triangles(self) -> list[tuple[int, int, int]]:
        # In a polygon triangulation every 3-cycle of the edge+chord graph
        # bounds a triangle: any vertex inside it would need a crossing chord.
        edges = self._edges()
        adjacency: dict[int, list[int]] = {v: [] for v in range(1, self.n + 1)}
        for a, b in edges:
            adjacency[a].append(b)
            adjacency[b].append(a)
        triangles = []
        for a in range(1, self.n + 1):
            nbrs = sorted(w for w in adjacency[a] if w > a)
            for i, b in enumerate(nbrs):
                for c in nbrs[i + 1:]:
                    if _normalize_chord(b, c) in edges:
                        triangles.append((a, b, c))
        if len(triangles) != self.n - 2:
            raise ValueError("triangulation does not decompose into n-2 triangles")
        return triangles

    def _build_dual_tree(self) -> DualTree:
        tri_of_chord: dict[tuple[int, int], list[int]] = {c: [] for c in self.chords}
        for ti, (a, b, c) in enumerate(self.triangles):
            for side in ((a, b), (b, c), (a, c)):
                if side in tri_of_chord:
                    tri_of_chord[side].append(ti)
        root = next(
            ti for ti, tri in enumerate(self.triangles) if 1 in tri and 2 in tri
        )
        m = len(self.triangles)
        parent = [-1] * m
        parent_chord = [-1] * m
        children: list[list[int]] = [[] for _ in range(m)]
        seen = [False] * m
        seen[root] = True
        order = [root]
        queue = [root]
        while queue:
            ti = queue.pop(0)
            a, b, c = self.triangles[ti]
            for side in ((a, b), (b, c), (a, c)):
                if side not in tri_of_chord:
                    continue
                for tj in tri_of_chord[side]:
                    if not seen[tj]:
                        seen[tj] = True
                        parent[tj] = ti
                        parent_chord[tj] = self.chord_index[side]
                        children[ti].append(tj)
                        order.append(tj)
                        queue.append(tj)
        if not all(seen):
            raise ValueError("dual tree is not connected")
        return DualTree(root, parent, parent_chord, children, order)

    def chord_set(self) -> frozenset[tuple[int, int]]:
        """Canonical form for equality independent of construction order."""
        return frozenset(self.chords)

    def __repr__(self):
        return f"Triangulation(n={self.n}, chords={self.chords})"


def fan(n: int) -> Triangulation:
    """Chords from vertex 1 to every non-adjacent vertex: (1,3), (1,4), ..., (1,n-1)."""
    return Triangulation(n, [(1, k) for k in range(3, n)])


def spiral(n: int) -> Triangulation:
    """Traverse the surviving cycle, repeatedly chording to the vertex after next."""
    if n < 3:
        raise ValueError("a polygon needs n >= 3")
    cycle = list(range(1, n + 1))
    chords = []
    pos = 0
    while len(cycle) > 3:
        a = cycle[pos]
        b = cycle[(pos + 2) % len(cycle)]
        chords.append((a, b))
        del cycle[(pos + 1) % len(cycle)]
        pos = cycle.index(b)
    return Triangulation(n, chords)


def teeth(n: int) -> Triangulation:
    """Zigzag chords alternating between the low and high ends of the vertex cycle.

    Pattern (1,3), (3,n), (n,4), (4,n-1), ... until n-3 chords exist.  The
    exact zigzag is a fixed convention here; it only matters for sampler
    tuning comparisons, not correctness.
    """
    if n < 3:
        raise ValueError("a polygon needs n >= 3")
    if n == 3:
        return Triangulation(n, [])
    chords = [(1, 3)]
    lo, hi = 3, n
    if len(chords) < n - 3:
        chords.append((lo, hi))
    bump_lo = True
    while len(chords) < n - 3:
        if bump_lo:
            lo += 1
        else:
            hi -= 1
        chords.append((lo, hi))
        bump_lo = not bump_lo
    return Triangulation(n, chords)


def random_triangulation(n: int, rng: np.random.Generator) -> Triangulation:
    """Uniformly random among the Catalan-many triangulations, by recursive splitting.

    The triangle on edge (lo, hi) of the sub-polygon [lo..hi] has its apex at k
    with probability proportional to Catalan(k-lo-1) * Catalan(hi-k-1).
    """
    if n < 3:
        raise ValueError("a polygon needs n >= 3")
    catalan = [comb(2 * i, i) // (i + 1) for i in range(n)]
    chords: list[tuple[int, int]] = []
    stack = [(1, n)]
    while stack:
        lo, hi = stack.pop()
        if hi - lo < 2:
            continue
        ks = np.arange(lo + 1, hi)
        weights = np.array(
            [catalan[k - lo - 1] * catalan[hi - k - 1] for k in ks], dtype=float
        )
        k = int(rng.choice(ks, p=weights / weights.sum()))
        if k - lo >= 2:
            chords.append((lo, k))
        if hi - k >= 2:
            chords.append((k, hi))
        stack.append((lo, k))
        stack.append((k, hi))
    return Triangulation(n, chords)


def dual_tree(t: Triangulation) -> DualTree:
    return t.dual_tree
