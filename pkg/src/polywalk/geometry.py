"""Polygons in 3-space and the elementary observables integrated by every experiment.

A polygon is an ordered list of vertices, open or closed.  All operations are
pure functions on immutable data and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEGENERATE_EDGE = 1e-14


@dataclass(frozen=True)
class Polygon:
    """Ordered vertices in R^3; ``closed`` means edge n runs from the last vertex back to the first."""

    vertices: np.ndarray
    closed: bool = True

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError("vertices must be an (n, 3) array")
        if v.shape[0] < 3:
            raise ValueError("a polygon needs at least 3 vertices")
        if not np.all(np.isfinite(v)):
            raise ValueError("vertices must be finite")
        object.__setattr__(self, "vertices", v)

    @property
    def n(self) -> int:
        return self.vertices.shape[0]

    def reversed(self) -> "Polygon":
        """Same cyclic vertex sequence traversed backwards, still starting at vertex 1."""
        v = self.vertices
        return Polygon(np.concatenate([v[:1], v[:0:-1]]), closed=self.closed)


def as_edge_lengths(r, n: int | None = None, closed: bool = False) -> np.ndarray:
    """Validate an edge-length vector: positive, and (for closed use) no edge longer than the rest combined."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if n is not None and r.size == 1:
        r = np.full(n, r[0])
    if n is not None and r.size != n:
        raise ValueError(f"expected {n} edge lengths, got {r.size}")
    if not np.all(np.isfinite(r)) or np.any(r <= 0):
        raise ValueError("edge lengths must be positive and finite")
    if closed and r.size >= 2 and np.any(r > r.sum() - r):
        raise ValueError("no edge length may exceed the sum of the others (closure impossible)")
    return r


def edge_vectors(p: Polygon) -> np.ndarray:
    """Edge vectors of p: n of them for a closed polygon (wrapping), n-1 for an open one."""
    v = p.vertices
    if not p.closed:
        return v[1:] - v[:-1]
    e = np.empty_like(v)
    np.subtract(v[1:], v[:-1], out=e[:-1])
    e[-1] = v[0] - v[-1]
    return e


def edge_lengths_of(p: Polygon) -> np.ndarray:
    return np.linalg.norm(edge_vectors(p), axis=1)


def total_curvature(p: Polygon) -> float:
    """Sum of turning angles between consecutive edges of a closed polygon, in [0, n*pi]."""
    if not p.closed:
        raise ValueError("total curvature is defined for closed polygons")
    e = edge_vectors(p)
    norms = np.sqrt(np.einsum("ij,ij->i", e, e))
    if norms.min() < DEGENERATE_EDGE:
        raise ValueError("degenerate (zero-length) edge")
    dots = np.einsum("ij,ij->i", e[:-1], e[1:])
    dots = np.append(dots, e[-1] @ e[0])
    dots /= norms * np.concatenate([norms[1:], norms[:1]])
    # Clamp absorbs 1-ulp overshoot at collinear edges.
    np.clip(dots, -1.0, 1.0, out=dots)
    return float(np.arccos(dots).sum())


def chord_length(p: Polygon, k: int) -> float:
    """Distance |v_1 - v_{k+1}| across the chord skipping the first k edges, 2 <= k <= n-2."""
    if not p.closed:
        raise ValueError("chord length is defined for closed polygons")
    if not 2 <= k <= p.n - 2:
        raise ValueError(f"k must be in [2, {p.n - 2}], got {k}")
    return float(np.linalg.norm(p.vertices[0] - p.vertices[k]))


def z_width(p: Polygon) -> float:
    """Vertical extent: max z-coordinate minus min z-coordinate over the vertices."""
    z = p.vertices[:, 2]
    return float(z.max() - z.min())


def closure_defect_of_edges(edges) -> float:
    """Norm of the sum of an edge-vector list (failure-to-close distance of the chain)."""
    edges = np.atleast_2d(np.asarray(edges, dtype=float))
    return float(np.linalg.norm(edges.sum(axis=0)))


def closure_defect(p: Polygon) -> float:
    """Failure-to-close distance of p's edge chain; 0 for any closed polygon."""
    return closure_defect_of_edges(edge_vectors(p))


# Text format for CLI I/O: one vertex per line "x y z", blank-line separated
# polygons, '#' starts a comment.  Open/closed is declared by the caller, not
# stored in the file.

def write_polygons(path, polygons) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, p in enumerate(polygons):
            if i:
                fh.write("\n")
            v = p.vertices if isinstance(p, Polygon) else np.asarray(p, dtype=float)
            for row in v:
                fh.write("%.17g %.17g %.17g\n" % tuple(row))


def read_polygons(path, closed: bool = True) -> list[Polygon]:
    polygons = []
    current: list[list[float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                if current:
                    polygons.append(Polygon(np.array(current), closed=closed))
                    current = []
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"expected 'x y z', got {line!r}")
            current.append([float(x) for x in parts])
    if current:
        polygons.append(Polygon(np.array(current), closed=closed))
    return polygons
