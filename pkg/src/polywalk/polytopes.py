"""Half-space representations of the moment polytopes, membership, chord clipping,
and brute-force Monte Carlo volume/centroid oracles.

Every builder returns a bounded polytope together with a bounding box, which
is what the rejection oracles sample.  No vertex enumeration happens anywhere;
all downstream geometry needs only membership tests and chord clipping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import as_edge_lengths
from .triangulation import Triangulation, fan

CONTAINS_TOL = 1e-9
_RAY_EPS = 1e-13


@dataclass(frozen=True)
class HPolytope:
    """Rows a . x <= b.  ``box_lo``/``box_hi`` bound the polytope coordinatewise."""

    A: np.ndarray
    b: np.ndarray
    box_lo: np.ndarray
    box_hi: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        if A.shape[0] != b.size:
            raise ValueError("row count mismatch between A and b")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "box_lo", np.asarray(self.box_lo, dtype=float))
        object.__setattr__(self, "box_hi", np.asarray(self.box_hi, dtype=float))

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @property
    def rows(self) -> int:
        return self.A.shape[0]

    def box_volume(self) -> float:
        return float(np.prod(self.box_hi - self.box_lo))

    def contains(self, x, tol: float = CONTAINS_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"point has dimension {x.shape}, polytope has {self.dim}")
        return bool(np.all(self.A @ x <= self.b + tol))

    def contains_many(self, X, tol: float = CONTAINS_TOL) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.all(X @ self.A.T <= self.b + tol, axis=1)

    def chord_intersection(self, x, v) -> tuple[float, float]:
        """Maximal interval (t0, t1) with x + t*v inside, t0 < 0 < t1.

        x must be strictly interior.  Rows nearly orthogonal to v are skipped
        when satisfied; if violated the interval is empty, which signals
        numerical drift and raises.
        """
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        slack = self.b - self.A @ x
        if np.any(slack < 0):
            raise ValueError("chord_intersection: point is outside the polytope")
        av = self.A @ v
        t0, t1 = -np.inf, np.inf
        pos = av > _RAY_EPS
        neg = av < -_RAY_EPS
        if np.any(pos):
            t1 = float(np.min(slack[pos] / av[pos]))
        if np.any(neg):
            t0 = float(np.max(slack[neg] / av[neg]))
        if not (np.isfinite(t0) and np.isfinite(t1)) or not t0 < 0 < t1:
            raise ValueError(
                f"chord_intersection: degenerate interval ({t0}, {t1}); numerical drift"
            )
        return t0, t1


def hyperbox(r) -> HPolytope:
    """The box Prod_i [-r_i, r_i]: moment polytope of an unconfined open arm."""
    r = as_edge_lengths(r)
    n = r.size
    A = np.vstack([np.eye(n), -np.eye(n)])
    b = np.concatenate([r, r])
    return HPolytope(A, b, -r, r)


def _triangle_rows(sides, n_dims: int):
    """Rows for the three triangle inequalities of one triangle.

    ``sides`` are length-3 descriptors: ("d", j) for diagonal j or ("r", value)
    for a fixed edge length.  Constant sides fold into the right-hand side.
    """
    rows = []
    for i in range(3):
        # side i <= side (i+1) + side (i+2)
        a = np.zeros(n_dims)
        b = 0.0
        for sign, (kind, val) in zip((1.0, -1.0, -1.0), (sides[i], sides[(i + 1) % 3], sides[(i + 2) % 3])):
            if kind == "d":
                a[val] += sign
            else:
                b -= sign * val
        rows.append((a, b))
    return rows


def triangulation_polytope(t: Triangulation, r) -> HPolytope:
    """Moment polytope of closed polygons under triangulation t: all 3(n-2) triangle inequalities.

    Coordinate i is the length of chord i of t.
    """
    r = as_edge_lengths(r, n=t.n, closed=True)
    n, dims = t.n, t.n - 3
    if dims < 1:
        raise ValueError("moment polytope is a point for n=3; use n >= 4")

    def side(a: int, b: int):
        if (a, b) in t.chord_index:
            return ("d", t.chord_index[(a, b)])
        # boundary edge (a, b) with b = a+1, or the wrapping edge (1, n)
        return ("r", r[n - 1] if (a, b) == (1, n) else r[a - 1])

    rows_a, rows_b = [], []
    for (a, b, c) in t.triangles:
        for row_a, row_b in _triangle_rows([side(a, b), side(b, c), side(a, c)], dims):
            rows_a.append(row_a)
            rows_b.append(row_b)
    # Coordinatewise bounds: chord (a,b) is at most the shorter boundary path between a and b.
    total = r.sum()
    hi = np.empty(dims)
    for (a, b), i in t.chord_index.items():
        path = r[a - 1:b - 1].sum()
        hi[i] = min(path, total - path)
    return HPolytope(np.array(rows_a), np.array(rows_b), np.zeros(dims), hi)


def fan_polytope(n: int, r) -> HPolytope:
    """Moment polytope for the fan triangulation: d_1 in [|r1-r2|, r1+r2],
    r_{i+2} <= d_i + d_{i+1}, |d_i - d_{i+1}| <= r_{i+2}, d_{n-3} in [|rn-r_{n-1}|, rn+r_{n-1}]."""
    if n < 4:
        raise ValueError("fan polytope needs n >= 4")
    return triangulation_polytope(fan(n), r)


def confined_fan_polytope(n: int, r, radius: float) -> HPolytope:
    """Fan polytope cut by d_i <= radius: rooted spherical confinement about vertex 1.

    An infinite radius is the no-confinement sentinel and returns the plain
    fan polytope.
    """
    if radius <= 0:
        raise ValueError("confinement radius must be positive")
    if not np.isfinite(radius):
        return fan_polytope(n, r)
    P = fan_polytope(n, r)
    dims = P.dim
    A = np.vstack([P.A, np.eye(dims)])
    b = np.concatenate([P.b, np.full(dims, float(radius))])
    return HPolytope(A, b, P.box_lo, np.minimum(P.box_hi, radius))


def slab_polytope(n: int, h: float) -> HPolytope:
    """Action polytope of unit-edge arms confined to a z-slab of height h:
    -1 <= z_i <= 1 and -h <= z_i + ... + z_j <= h for every interval [i, j]."""
    if h <= 0:
        raise ValueError("slab height must be positive")
    rows_a = [np.eye(n), -np.eye(n)]
    rows_b = [np.ones(n), np.ones(n)]
    for i in range(n):
        for j in range(i, n):
            a = np.zeros(n)
            a[i:j + 1] = 1.0
            rows_a.extend([a[None, :], -a[None, :]])
            rows_b.extend([[h], [h]])
    return HPolytope(np.vstack(rows_a), np.concatenate(rows_b),
                     -np.ones(n), np.ones(n))


def half_space_polytope(n: int) -> HPolytope:
    """Unit-edge arms attached to the z=0 plane: z in [-1,1]^n with all partial sums >= 0."""
    if n < 1:
        raise ValueError("need n >= 1")
    prefix = np.tril(np.ones((n, n)))
    A = np.vstack([np.eye(n), -np.eye(n), -prefix])
    b = np.concatenate([np.ones(n), np.ones(n), np.zeros(n)])
    lo = -np.ones(n)
    lo[0] = 0.0
    return HPolytope(A, b, lo, np.ones(n))


def rejection_sample(P: HPolytope, rng: np.random.Generator, count: int,
                     batch: int = 65536) -> np.ndarray:
    """Exactly uniform interior points via rejection from the bounding box."""
    points = []
    have = 0
    while have < count:
        X = rng.uniform(P.box_lo, P.box_hi, size=(batch, P.dim))
        X = X[P.contains_many(X, tol=0.0)]
        points.append(X)
        have += X.shape[0]
    return np.concatenate(points)[:count]


def rejection_volume_estimate(P: HPolytope, rng: np.random.Generator,
                              n_samples: int) -> tuple[float, float]:
    """(volume, stderr) from the hit fraction of bounding-box samples."""
    hits = 0
    remaining = n_samples
    while remaining > 0:
        m = min(remaining, 262144)
        X = rng.uniform(P.box_lo, P.box_hi, size=(m, P.dim))
        hits += int(np.count_nonzero(P.contains_many(X, tol=0.0)))
        remaining -= m
    p = hits / n_samples
    box = P.box_volume()
    return box * p, box * float(np.sqrt(p * (1.0 - p) / n_samples))


def centroid_estimate(P: HPolytope, rng: np.random.Generator, n_samples: int,
                      method: str = "rejection") -> tuple[np.ndarray, np.ndarray]:
    """(centroid, per-coordinate stderr) from uniform interior samples.

    method="rejection" uses exactly uniform points; method="hitandrun" runs a
    long hit-and-run chain from the box center and quotes IPS error bars,
    which stay honest under autocorrelation.
    """
    if method == "rejection":
        X = rejection_sample(P, rng, n_samples)
        mean = X.mean(axis=0)
        stderr = X.std(axis=0, ddof=1) / np.sqrt(n_samples)
        return mean, stderr
    if method == "hitandrun":
        from .samplers import hit_and_run_step
        from .mcmc_stats import ips_variance
        x = interior_point(P)
        X = np.empty((n_samples, P.dim))
        for i in range(n_samples):
            x = hit_and_run_step(P, x, rng)
            X[i] = x
        mean = X.mean(axis=0)
        stderr = np.array([ips_variance(X[:, j]).half_width / 1.96 for j in range(P.dim)])
        return mean, stderr
    raise ValueError(f"unknown method {method!r}")


def interior_point(P: HPolytope, tol: float = 1e-9) -> np.ndarray:
    """A strictly feasible point, by Chebyshev-style shrinking of the box center toward feasibility."""
    x = 0.5 * (P.box_lo + P.box_hi)
    if np.all(P.A @ x < P.b - tol):
        return x
    # Fall back on rejection; cheap at the dimensions used here.
    rng = np.random.default_rng(0)
    for _ in range(64):
        X = rng.uniform(P.box_lo, P.box_hi, size=(8192, P.dim))
        ok = np.all(X @ P.A.T < P.b - tol, axis=1)
        if np.any(ok):
            return X[np.argmax(ok)]
    raise ValueError("could not find a strictly interior point; polytope may be empty")
