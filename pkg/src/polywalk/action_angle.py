"""The measure-preserving chart between (diagonals, dihedrals) and fixed-edgelength polygons.

Convention, locked by the round-trip tests: dihedral theta_i is the rotation
about the axis of chord i (oriented from its lower- to its higher-indexed
endpoint) that carries the unfolded position of the child triangle -- coplanar
with its parent, on the opposite side of the chord, which is theta = pi -- to
its actual position.  Assembly walks the dual tree breadth-first from the root
triangle, which is placed with vertex 1 at the origin, vertex 2 on the +x
axis, and its third vertex in the upper half of the xy-plane.

Statistics are convention-independent; only the round trip cares.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import atan2, cos, sin, sqrt, tau

import numpy as np

from .geometry import Polygon, as_edge_lengths, edge_vectors
from .polytopes import HPolytope, triangulation_polytope
from .triangulation import Triangulation

_DEGENERATE_AREA = 1e-12


@dataclass(frozen=True)
class ActionAngle:
    """Diagonal lengths and dihedral angles, ordered by the triangulation's chords."""

    d: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "d", np.asarray(self.d, dtype=float))
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=float))
        if self.d.shape != self.theta.shape:
            raise ValueError("d and theta must have the same length")


@dataclass(frozen=True)
class ArmCoordinates:
    """Edge z-components and azimuths of an open arm: the action-angle chart of the hyperbox."""

    z: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "z", np.asarray(self.z, dtype=float))
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=float))
        if self.z.shape != self.theta.shape:
            raise ValueError("z and theta must have the same length")


def build_arm(c: ArmCoordinates, r) -> Polygon:
    """Open polygon from the origin with edge i = (cos t_i * w_i, sin t_i * w_i, z_i), w_i = sqrt(r_i^2 - z_i^2)."""
    r = as_edge_lengths(r, n=c.z.size)
    if np.any(np.abs(c.z) > r):
        raise ValueError("|z_i| must not exceed r_i")
    w = np.sqrt(np.maximum(r * r - c.z * c.z, 0.0))
    edges = np.column_stack([np.cos(c.theta) * w, np.sin(c.theta) * w, c.z])
    vertices = np.vstack([np.zeros(3), np.cumsum(edges, axis=0)])
    return Polygon(vertices, closed=False)


class ActionAngleChart:
    """Precompiled assembly/recovery program for one triangulation and edge-length vector.

    Immutable after construction; shareable across threads.  ``build`` and
    ``recover`` run in plain scalar arithmetic because they sit inside the
    samplers' hot loop.
    """

    def __init__(self, t: Triangulation, r):
        if t.n < 4:
            raise ValueError("the chart needs n >= 4 (n = 3 has a single point of moduli)")
        self.triangulation = t
        self.r = as_edge_lengths(r, n=t.n, closed=True)
        self.polytope: HPolytope = triangulation_polytope(t, self.r)
        self.n = t.n

        def side_key(a: int, b: int):
            if (a, b) in t.chord_index:
                return ("d", t.chord_index[(a, b)])
            return ("r", float(self.r[t.n - 1] if (a, b) == (1, t.n) else self.r[a - 1]))

        tris = t.triangles
        root = t.dual_tree.root
        ra, rb, rw = tris[root]  # sorted, so (1, 2, w)
        assert (ra, rb) == (1, 2)
        self._root_w = rw - 1
        self._root_l1 = side_key(ra, rw)   # |v1 - w|
        self._root_l2 = side_key(rb, rw)   # |v2 - w|
        self._r1 = float(self.r[0])

        # One placement per non-root triangle, in BFS order; per chord, the
        # apexes of the two triangles it separates (parent first).
        steps = []
        apex_pairs: list[tuple[int, int] | None] = [None] * len(t.chords)
        for ti in t.dual_tree.bfs_order[1:]:
            parent = t.dual_tree.parent[ti]
            chord_idx = t.dual_tree.parent_chord[ti]
            a, b = t.chords[chord_idx]
            child_apex = next(v for v in tris[ti] if v not in (a, b))
            parent_apex = next(v for v in tris[parent] if v not in (a, b))
            apex_pairs[chord_idx] = (parent_apex - 1, child_apex - 1)
            steps.append((
                child_apex - 1, a - 1, b - 1, parent_apex - 1, chord_idx,
                side_key(*_ordered(a, child_apex)),
                side_key(*_ordered(b, child_apex)),
            ))
        self._steps = steps
        self._apex_pairs = apex_pairs

    def _length(self, key, d) -> float:
        kind, val = key
        return d[val] if kind == "d" else val

    def build(self, d, theta) -> np.ndarray:
        """Vertex array of the closed polygon at (d, theta); raises on degenerate triangles."""
        n = self.n
        vx = [0.0] * n
        vy = [0.0] * n
        vz = [0.0] * n
        vx[1] = self._r1
        l1 = self._length(self._root_l1, d)
        l2 = self._length(self._root_l2, d)
        tx = (l1 * l1 + self._r1 * self._r1 - l2 * l2) / (2.0 * self._r1)
        h2 = l1 * l1 - tx * tx
        if h2 <= _DEGENERATE_AREA ** 2:
            raise ValueError("degenerate root triangle; d is on the moment polytope boundary")
        w = self._root_w
        vx[w], vy[w], vz[w] = tx, sqrt(h2), 0.0

        for c, a, b, p, ci, ka, kb in self._steps:
            ax, ay, az = vx[a], vy[a], vz[a]
            ux, uy, uz = vx[b] - ax, vy[b] - ay, vz[b] - az
            dd = d[ci]
            ux, uy, uz = ux / dd, uy / dd, uz / dd
            la = self._length(ka, d)
            lb = self._length(kb, d)
            tx = (la * la + dd * dd - lb * lb) / (2.0 * dd)
            h2 = la * la - tx * tx
            if h2 <= _DEGENERATE_AREA ** 2:
                raise ValueError(
                    f"degenerate triangle across chord {self.triangulation.chords[ci]}"
                )
            h = sqrt(h2)
            px, py, pz = vx[p] - ax, vy[p] - ay, vz[p] - az
            dot = px * ux + py * uy + pz * uz
            px, py, pz = px - dot * ux, py - dot * uy, pz - dot * uz
            pn = sqrt(px * px + py * py + pz * pz)
            if pn <= _DEGENERATE_AREA:
                raise ValueError("degenerate parent triangle during assembly")
            e1x, e1y, e1z = px / pn, py / pn, pz / pn
            e2x = uy * e1z - uz * e1y
            e2y = uz * e1x - ux * e1z
            e2z = ux * e1y - uy * e1x
            th = theta[ci]
            ct, st = cos(th), sin(th)
            rx = ct * e1x + st * e2x
            ry = ct * e1y + st * e2y
            rz = ct * e1z + st * e2z
            vx[c] = ax + tx * ux + h * rx
            vy[c] = ay + tx * uy + h * ry
            vz[c] = az + tx * uz + h * rz

        out = np.empty((n, 3))
        out[:, 0] = vx
        out[:, 1] = vy
        out[:, 2] = vz
        return out

    def recover(self, vertices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(d, theta) of a closed polygon, inverting ``build``'s convention."""
        v = np.asarray(vertices, dtype=float)
        t = self.triangulation
        m = len(t.chords)
        d = np.empty(m)
        theta = np.empty(m)
        vx, vy, vz = v[:, 0], v[:, 1], v[:, 2]
        for ci in range(m):
            a1, b1 = t.chords[ci]
            a, b = a1 - 1, b1 - 1
            p, c = self._apex_pairs[ci]
            ax, ay, az = vx[a], vy[a], vz[a]
            ux, uy, uz = vx[b] - ax, vy[b] - ay, vz[b] - az
            dd = sqrt(ux * ux + uy * uy + uz * uz)
            if dd <= _DEGENERATE_AREA:
                raise ValueError("degenerate chord of length ~0")
            d[ci] = dd
            ux, uy, uz = ux / dd, uy / dd, uz / dd
            px, py, pz = vx[p] - ax, vy[p] - ay, vz[p] - az
            dot = px * ux + py * uy + pz * uz
            px, py, pz = px - dot * ux, py - dot * uy, pz - dot * uz
            pn = sqrt(px * px + py * py + pz * pz)
            cxx, cyy, czz = vx[c] - ax, vy[c] - ay, vz[c] - az
            dot = cxx * ux + cyy * uy + czz * uz
            cxx, cyy, czz = cxx - dot * ux, cyy - dot * uy, czz - dot * uz
            cn = sqrt(cxx * cxx + cyy * cyy + czz * czz)
            if pn <= _DEGENERATE_AREA or cn <= _DEGENERATE_AREA:
                raise ValueError(
                    f"degenerate triangle at chord {t.chords[ci]}; dihedral undefined"
                )
            e1x, e1y, e1z = px / pn, py / pn, pz / pn
            e2x = uy * e1z - uz * e1y
            e2y = uz * e1x - ux * e1z
            e2z = ux * e1y - uy * e1x
            ang = atan2(cxx * e2x + cyy * e2y + czz * e2z,
                        cxx * e1x + cyy * e1y + czz * e1z)
            theta[ci] = ang % tau
        return d, theta


def _ordered(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def build_polygon(t: Triangulation, r, aa: ActionAngle) -> Polygon:
    """Closed polygon with edge lengths r realizing the given diagonals and dihedrals.

    The diagonal vector must be strictly inside the moment polytope; boundary
    points correspond to flat triangles and are rejected.
    """
    chart = ActionAngleChart(t, r)
    if not np.all(chart.polytope.A @ aa.d < chart.polytope.b):
        raise ValueError("d is not strictly inside the moment polytope")
    return Polygon(chart.build(aa.d, aa.theta), closed=True)


def recover_coordinates(t: Triangulation, p: Polygon) -> ActionAngle:
    """Diagonal lengths and dihedral angles of a closed polygon under triangulation t."""
    if not p.closed:
        raise ValueError("recovery needs a closed polygon")
    if p.n != t.n:
        raise ValueError("polygon and triangulation disagree on n")
    r = np.linalg.norm(edge_vectors(p), axis=1)
    chart = ActionAngleChart(t, r)
    d, theta = chart.recover(p.vertices)
    return ActionAngle(d, theta)


def permute_edges(p: Polygon, sigma) -> Polygon:
    """Closed polygon whose edge-vector sequence is the sigma-permutation of p's, re-rooted at the origin."""
    if not p.closed:
        raise ValueError("edge permutation needs a closed polygon")
    sigma = np.asarray(sigma, dtype=int)
    if sorted(sigma.tolist()) != list(range(p.n)):
        raise ValueError("sigma must be a permutation of 0..n-1")
    edges = edge_vectors(p)[sigma]
    vertices = np.vstack([np.zeros(3), np.cumsum(edges[:-1], axis=0)])
    return Polygon(vertices, closed=True)
