"""Minimal topological classification of closed space polygons.

A generic planar projection turns the polygon into a knot diagram; the
determinant |Delta(-1)| then separates the unknot (1) from the trefoil (3),
which is all the hexagon census needs since hexagons admit no other knots.
At t = -1 the Alexander matrix takes a sign-free form: each crossing
contributes +2 on its over-arc and -1 on each under-arc, so the whole
computation is integer linear algebra.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import tau

import numpy as np

from .action_angle import ActionAngle
from .geometry import Polygon

_DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class Crossing:
    over_arc: int
    under_in_arc: int
    under_out_arc: int
    sign: int


@dataclass(frozen=True)
class KnotDiagram:
    """Crossing list over arcs 0..arc_count-1; arcs are the strands between consecutive under-passages."""

    crossings: tuple[Crossing, ...]
    arc_count: int


def _projection_frame(direction: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w = direction / np.linalg.norm(direction)
    helper = np.array([1.0, 0.0, 0.0]) if abs(w[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u1 = np.cross(w, helper)
    u1 /= np.linalg.norm(u1)
    u2 = np.cross(w, u1)
    return u1, u2


def _pair_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    idx_i, idx_j = [], []
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            idx_i.append(i)
            idx_j.append(j)
    return np.array(idx_i), np.array(idx_j)


def generic_projection(p: Polygon, rng: np.random.Generator,
                       max_retries: int = 50) -> KnotDiagram:
    """Project along a random direction, retrying whenever the diagram is within
    1e-9 of a degenerate configuration (near-parallel strands, a crossing at a
    vertex, a triple point, or an over/under depth tie)."""
    if not p.closed:
        raise ValueError("knot diagrams need a closed polygon")
    v = p.vertices
    n = p.n
    scale = float(np.max(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)))
    ii, jj = _pair_indices(n)
    for _ in range(max_retries):
        w = rng.standard_normal(3)
        w /= np.linalg.norm(w)
        u1, u2 = _projection_frame(w)
        q = np.column_stack([v @ u1, v @ u2])
        depth = v @ w
        e = np.roll(q, -1, axis=0) - q
        de = np.roll(depth, -1) - depth

        # Adjacent edges must not project near-parallel (overlap ambiguity).
        cross_adj = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
        seg_len = np.linalg.norm(e, axis=1)
        if np.any(np.abs(cross_adj) < _DEGENERACY_TOL * seg_len * np.roll(seg_len, -1)):
            continue

        a = q[ii]
        ei = e[ii]
        ej = e[jj]
        rhs = q[jj] - a
        det = ei[:, 0] * ej[:, 1] - ei[:, 1] * ej[:, 0]
        norm_prod = seg_len[ii] * seg_len[jj]
        parallel = np.abs(det) < _DEGENERACY_TOL * norm_prod
        if np.any(parallel):
            # Separated parallel strands are harmless; near-collinear ones
            # could overlap and make the diagram ambiguous.
            line_dist = np.abs(ei[parallel, 0] * rhs[parallel, 1]
                               - ei[parallel, 1] * rhs[parallel, 0]) / seg_len[ii[parallel]]
            if np.any(line_dist < _DEGENERACY_TOL * scale):
                continue
        safe_det = np.where(parallel, 1.0, det)
        s = np.where(parallel, 2.0, (rhs[:, 0] * ej[:, 1] - rhs[:, 1] * ej[:, 0]) / safe_det)
        t = np.where(parallel, 2.0, (rhs[:, 0] * ei[:, 1] - rhs[:, 1] * ei[:, 0]) / safe_det)
        near = (s > -_DEGENERACY_TOL) & (s < 1 + _DEGENERACY_TOL) & \
               (t > -_DEGENERACY_TOL) & (t < 1 + _DEGENERACY_TOL)
        at_vertex = (np.abs(s) < _DEGENERACY_TOL) | (np.abs(s - 1) < _DEGENERACY_TOL) | \
                    (np.abs(t) < _DEGENERACY_TOL) | (np.abs(t - 1) < _DEGENERACY_TOL)
        if np.any(near & at_vertex):
            continue
        hit = (s > 0) & (s < 1) & (t > 0) & (t < 1)
        if not np.any(hit):
            return KnotDiagram((), 0)
        si, ti = s[hit], t[hit]
        seg_i, seg_j = ii[hit], jj[hit]
        zi = depth[seg_i] + si * de[seg_i]
        zj = depth[seg_j] + ti * de[seg_j]
        if np.any(np.abs(zi - zj) < _DEGENERACY_TOL * scale):
            continue

        # Passages in order along the curve; a triple point shows up as two
        # crossings at nearly the same parameter on one segment.
        passages = []  # (segment, parameter, crossing id, is_under)
        over_of = zi > zj
        signs = np.sign(det[hit]).astype(int)
        for cid in range(seg_i.size):
            passages.append((seg_i[cid], si[cid], cid, not over_of[cid]))
            passages.append((seg_j[cid], ti[cid], cid, bool(over_of[cid])))
        passages.sort(key=lambda rec: (rec[0], rec[1]))
        degenerate = False
        for (sa, pa, _, _), (sb, pb, _, _) in zip(passages, passages[1:]):
            if sa == sb and abs(pb - pa) < _DEGENERACY_TOL:
                degenerate = True
                break
        if degenerate:
            continue

        return _assemble_diagram(passages, signs)
    raise ValueError(f"no generic projection found in {max_retries} tries; polygon is nearly singular")


def _assemble_diagram(passages, signs) -> KnotDiagram:
    c = len(passages) // 2
    under_positions = [pos for pos, rec in enumerate(passages) if rec[3]]
    arc_of_position = np.searchsorted(under_positions, np.arange(len(passages)),
                                      side="left") % c
    over_arc = {}
    under_in = {}
    under_out = {}
    for pos, (seg, par, cid, is_under) in enumerate(passages):
        if is_under:
            k = under_positions.index(pos)
            under_in[cid] = k
            under_out[cid] = (k + 1) % c
        else:
            over_arc[cid] = int(arc_of_position[pos])
    crossings = tuple(
        Crossing(over_arc[cid], under_in[cid], under_out[cid], int(signs[cid]))
        for cid in range(c)
    )
    return KnotDiagram(crossings, c)


def _bareiss_det(M: list[list[int]]) -> int:
    """Fraction-free integer determinant; exact for the small matrices arising here."""
    n = len(M)
    if n == 0:
        return 1
    M = [row[:] for row in M]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if M[k][k] == 0:
            pivot = next((i for i in range(k + 1, n) if M[i][k] != 0), None)
            if pivot is None:
                return 0
            M[k], M[pivot] = M[pivot], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
            M[i][k] = 0
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


def knot_determinant(diagram: KnotDiagram) -> int:
    """|Alexander polynomial at -1|: 1 for unknots, 3 for trefoils, 5 for figure-eights."""
    c = diagram.arc_count
    if c == 0:
        return 1
    M = [[0] * c for _ in range(c)]
    for row, crossing in enumerate(diagram.crossings):
        M[row][crossing.over_arc] += 2
        M[row][crossing.under_in_arc] -= 1
        M[row][crossing.under_out_arc] -= 1
    minor = [row[: c - 1] for row in M[: c - 1]]
    return abs(_bareiss_det(minor))


def polygon_determinant(p: Polygon, rng: np.random.Generator) -> int:
    return knot_determinant(generic_projection(p, rng))


def is_knotted_hexagon(p: Polygon, rng: np.random.Generator) -> bool:
    """True iff the hexagon's knot determinant differs from 1 (hexagon knots are trefoils)."""
    if p.n != 6 or not p.closed:
        raise ValueError("expects a closed hexagon")
    return polygon_determinant(p, rng) != 1


def dihedral_octant_indicator(aa: ActionAngle) -> bool:
    """True iff all three hexagon dihedrals lie in (0, pi); long-run frequency is exactly 1/8."""
    if aa.theta.size != 3:
        raise ValueError("the octant indicator is defined for hexagons (3 dihedrals)")
    th = np.mod(aa.theta, tau)
    return bool(np.all((th > 0.0) & (th < np.pi)))
