"""Markov chain and direct samplers for closed, confined, and open fixed-edgelength walks.

TSMCMC(beta): with probability beta take a moment-polytope move (a block of
hit-and-run steps on the diagonal vector), otherwise resample every dihedral
uniformly.  PTSMCMC(beta, delta) first flips a delta-coin for an edge
permutation move, which is only measure-preserving within equal-length edge
classes and never preserves spherical confinement.

Each chain owns a counter-based (Philox) generator stream, so runs are
reproducible under a seed and independent across chains.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from math import pi, sin, sqrt, tau

import numpy as np

from .action_angle import ActionAngle, ActionAngleChart, build_arm, ArmCoordinates
from .geometry import Polygon, as_edge_lengths
from .polytopes import HPolytope, confined_fan_polytope, interior_point
from .triangulation import Triangulation, fan, spiral, teeth, random_triangulation

_RAY_EPS = 1e-13
_INTERIOR_MARGIN = 1e-12

TRIANGULATIONS = {"fan": fan, "spiral": spiral, "teeth": teeth}


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def spawn_rngs(seed: int, count: int) -> list[np.random.Generator]:
    """Independent child streams for parallel chains."""
    return [np.random.Generator(np.random.Philox(s))
            for s in np.random.SeedSequence(seed).spawn(count)]


def _hr_steps(A: np.ndarray, b: np.ndarray, x: np.ndarray,
              rng: np.random.Generator, count: int) -> np.ndarray:
    """``count`` hit-and-run steps, updating the slack vector incrementally.

    Directions and the chord fractions are drawn in one batch per call; the
    per-step work is two mat-vecs and two masked reductions.
    """
    slack = b - A @ x
    if slack.min() < 0:
        raise ValueError("hit-and-run: point is outside the polytope")
    x = x.copy()
    directions = rng.standard_normal((count, x.size))
    fractions = rng.random(count)
    for k in range(count):
        v = directions[k]
        v /= sqrt(v @ v)
        av = A @ v
        with np.errstate(divide="ignore"):
            ratios = slack / av
        pos = av > _RAY_EPS
        neg = av < -_RAY_EPS
        if not pos.any() or not neg.any():
            raise ValueError("hit-and-run: unbounded chord; polytope is not bounded")
        t1 = ratios[pos].min()
        t0 = ratios[neg].max()
        if not (t0 <= 0.0 <= t1) or t1 - t0 <= 0.0:
            raise ValueError(f"hit-and-run: degenerate chord ({t0}, {t1}); numerical drift")
        # Shrink the admissible range a hair so iterates stay strictly interior.
        t = t0 + (t1 - t0) * (_INTERIOR_MARGIN + fractions[k] * (1.0 - 2.0 * _INTERIOR_MARGIN))
        x += t * v
        slack -= t * av
    return x


def hit_and_run_step(P: HPolytope, x, rng: np.random.Generator) -> np.ndarray:
    """One hit-and-run move: uniform point on the chord through x in a uniform random direction."""
    return _hr_steps(P.A, P.b, np.asarray(x, dtype=float), rng, 1)


@dataclass
class ChainState:
    """Current action-angle coordinates of one chain; single-writer."""

    d: np.ndarray
    theta: np.ndarray
    step: int = 0


@dataclass
class McmcConfig:
    n: int
    steps: int
    edge_lengths: np.ndarray | float = 1.0
    triangulation: str | Triangulation = "fan"
    triangulation_seed: int = 0
    beta: float = 0.5
    delta: float | None = None
    hr_multiplicity: int = 10
    burnin: int | None = None
    seed: int = 0
    confinement_radius: float | None = None

    def resolved_edge_lengths(self) -> np.ndarray:
        return as_edge_lengths(self.edge_lengths, n=self.n, closed=True)

    def is_equilateral(self) -> bool:
        r = self.resolved_edge_lengths()
        return bool(np.all(r == r[0]))

    def resolved_delta(self) -> float:
        if self.delta is not None:
            return self.delta
        # Recommended default: mostly permutation moves for unconfined
        # equilateral polygons, none otherwise.
        if self.confinement_radius is None and self.is_equilateral():
            return 0.9
        return 0.0

    def resolved_burnin(self) -> int:
        return 10 * self.n if self.burnin is None else self.burnin

    def build_triangulation(self) -> Triangulation:
        if isinstance(self.triangulation, Triangulation):
            return self.triangulation
        name = self.triangulation
        if name == "random":
            return random_triangulation(self.n, make_rng(self.triangulation_seed))
        if name not in TRIANGULATIONS:
            raise ValueError(f"unknown triangulation {name!r}; choose fan|spiral|teeth|random")
        return TRIANGULATIONS[name](self.n)

    def validate(self) -> None:
        if self.n < 4:
            raise ValueError("closed-polygon sampling needs n >= 4")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie strictly between 0 and 1")
        delta = self.resolved_delta()
        if not 0.0 <= delta < 1.0:
            raise ValueError("delta must lie in [0, 1)")
        if self.hr_multiplicity < 1:
            raise ValueError("hr_multiplicity must be >= 1")
        if self.steps < 0 or self.resolved_burnin() < 0:
            raise ValueError("steps and burnin must be nonnegative")
        if self.confinement_radius is not None:
            if delta > 0:
                raise ValueError("permutation moves break spherical confinement; use delta = 0")
            if isinstance(self.triangulation, Triangulation):
                if self.triangulation.chord_set() != fan(self.n).chord_set():
                    raise ValueError("confined sampling uses the fan triangulation")
            elif self.triangulation != "fan":
                raise ValueError("confined sampling uses the fan triangulation")
        self.resolved_edge_lengths()


def moment_polytope_step(state: ChainState, P: HPolytope, rng: np.random.Generator,
                         multiplicity: int = 10) -> ChainState:
    """Block of hit-and-run moves on the diagonals; angles untouched."""
    d = _hr_steps(P.A, P.b, state.d, rng, multiplicity)
    return ChainState(d, state.theta, state.step + 1)


def dihedral_step(state: ChainState, rng: np.random.Generator) -> ChainState:
    """Resample every dihedral independently and uniformly; diagonals untouched."""
    theta = rng.uniform(0.0, tau, state.theta.size)
    return ChainState(state.d, theta, state.step + 1)


def tsmcmc_step(state: ChainState, P: HPolytope, beta: float,
                rng: np.random.Generator, multiplicity: int = 10) -> ChainState:
    """With probability beta a moment-polytope move, otherwise a dihedral move."""
    if rng.random() < beta:
        return moment_polytope_step(state, P, rng, multiplicity)
    return dihedral_step(state, rng)


def _class_permutation(r: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Uniform permutation preserving edge lengths: full S_n when equilateral,
    otherwise uniform within each equal-length class."""
    n = r.size
    if np.all(r == r[0]):
        return rng.permutation(n)
    sigma = np.arange(n)
    for val in np.unique(r):
        idx = np.flatnonzero(r == val)
        sigma[idx] = idx[rng.permutation(idx.size)]
    return sigma


def permutation_step(state: ChainState, chart: ActionAngleChart,
                     rng: np.random.Generator) -> tuple[ChainState, bool]:
    """Permute the polygon's edge vectors and pull the result back through the chart.

    Recovered diagonals falling on the moment polytope boundary (a degenerate
    triangle somewhere) reject the move: the chain holds its state, a null
    move at a measure-zero set, preserving reversibility.
    """
    vertices = chart.build(state.d, state.theta)
    edges = np.roll(vertices, -1, axis=0) - vertices
    sigma = _class_permutation(chart.r, rng)
    new_vertices = np.empty_like(vertices)
    new_vertices[0] = 0.0
    np.cumsum(edges[sigma][:-1], axis=0, out=new_vertices[1:])
    try:
        d, theta = chart.recover(new_vertices)
    except ValueError:
        return ChainState(state.d, state.theta, state.step + 1), False
    P = chart.polytope
    if not np.all(P.A @ d <= P.b - _INTERIOR_MARGIN):
        return ChainState(state.d, state.theta, state.step + 1), False
    return ChainState(d, theta, state.step + 1), True


def ptsmcmc_step(state: ChainState, P: HPolytope, chart: ActionAngleChart,
                 beta: float, delta: float, rng: np.random.Generator,
                 multiplicity: int = 10) -> tuple[ChainState, bool]:
    """With probability delta a permutation move, otherwise a TSMCMC(beta) move.

    Returns (state, accepted); accepted is False only for rejected permutations.
    """
    if rng.random() < delta:
        return permutation_step(state, chart, rng)
    return tsmcmc_step(state, P, beta, rng, multiplicity), True


def regular_ngon_diagonals(t: Triangulation) -> np.ndarray:
    """Diagonal lengths of the planar regular unit-edge n-gon under triangulation t."""
    n = t.n
    s = 1.0 / (2.0 * sin(pi / n))
    return np.array([2.0 * s * sin(pi * (b - a) / n) for a, b in t.chords])


def start_unconfined(chart: ActionAngleChart, rng: np.random.Generator,
                     max_tries: int = 100) -> ActionAngle:
    """Fold the regular n-gon along the chart's diagonals and permute its edges.

    The regular n-gon sits in a corner of the moment polytope where
    hit-and-run mixes slowly; folding (random dihedrals) plus one edge
    permutation lands well inside.  Retries with a fresh permutation if the
    permuted polygon degenerates.  Equilateral only.
    """
    if not np.all(chart.r == chart.r[0]):
        raise ValueError("the folded-permuted start applies to equilateral polygons")
    scale = float(chart.r[0])
    d0 = scale * regular_ngon_diagonals(chart.triangulation)
    theta0 = rng.uniform(0.0, tau, d0.size)
    state = ChainState(d0, theta0)
    for _ in range(max_tries):
        candidate, accepted = permutation_step(state, chart, rng)
        if accepted:
            return ActionAngle(candidate.d, candidate.theta)
    raise ValueError(f"no interior start found in {max_tries} permutations")


def start_confined(n: int, rng: np.random.Generator) -> ActionAngle:
    """Folded triangle: every fan diagonal is 1, dihedrals random; confined for every radius >= 1."""
    if n < 4:
        raise ValueError("need n >= 4")
    return ActionAngle(np.ones(n - 3), rng.uniform(0.0, tau, n - 3))


@dataclass
class RunResult:
    series: dict[str, np.ndarray]
    counters: dict[str, int]
    final_state: ChainState
    triangulation: Triangulation | None
    wall_time_s: float


class ChainRunner:
    """One PTSMCMC chain bound to a chart, a polytope, and a Philox stream."""

    def __init__(self, config: McmcConfig):
        config.validate()
        self.config = config
        self.rng = make_rng(config.seed)
        self.triangulation = config.build_triangulation()
        r = config.resolved_edge_lengths()
        self.chart = ActionAngleChart(self.triangulation, r)
        radius = config.confinement_radius
        if radius is None:
            self.polytope = self.chart.polytope
        else:
            self.polytope = confined_fan_polytope(config.n, r, radius)
        self.delta = config.resolved_delta()
        self.counters = {
            "polytope_steps": 0,
            "dihedral_steps": 0,
            "permutation_steps": 0,
            "permutation_rejections": 0,
        }
        if radius is not None:
            aa = start_confined(config.n, self.rng)
        elif config.is_equilateral():
            aa = start_unconfined(self.chart, self.rng)
        else:
            aa = ActionAngle(interior_point(self.polytope),
                             self.rng.uniform(0.0, tau, config.n - 3))
        if not np.all(self.polytope.A @ aa.d < self.polytope.b):
            raise ValueError(
                "start point is not strictly interior; the confinement radius is infeasible"
            )
        self.state = ChainState(aa.d.copy(), aa.theta.copy())

    def step(self) -> None:
        cfg = self.config
        rng = self.rng
        if self.delta > 0.0 and rng.random() < self.delta:
            self.state, accepted = permutation_step(self.state, self.chart, rng)
            self.counters["permutation_steps"] += 1
            if not accepted:
                self.counters["permutation_rejections"] += 1
        elif rng.random() < cfg.beta:
            self.state = moment_polytope_step(self.state, self.polytope, rng,
                                              cfg.hr_multiplicity)
            self.counters["polytope_steps"] += 1
        else:
            self.state = dihedral_step(self.state, rng)
            self.counters["dihedral_steps"] += 1

    def polygon(self) -> Polygon:
        return Polygon(self.chart.build(self.state.d, self.state.theta), closed=True)

    def run(self, observables: dict) -> RunResult:
        cfg = self.config
        start = time.perf_counter()
        burnin = cfg.resolved_burnin()
        series = {name: np.empty(cfg.steps) for name in observables}
        for _ in range(burnin):
            self.step()
        for i in range(cfg.steps):
            self.step()
            if observables:
                poly = self.polygon()
                for name, fn in observables.items():
                    series[name][i] = fn(poly, self.state)
        return RunResult(
            series=series,
            counters=dict(self.counters),
            final_state=self.state,
            triangulation=self.triangulation,
            wall_time_s=time.perf_counter() - start,
        )


def run_chain(config: McmcConfig, observables: dict) -> RunResult:
    """Run one chain to completion, recording every observable at every post-burnin step."""
    return ChainRunner(config).run(observables)


# Observables usable by name from the CLI: callables of (polygon, chain state).

def make_observable(name: str, n: int):
    from . import geometry, knots

    if name == "total_curvature":
        return lambda p, s: geometry.total_curvature(p)
    if name == "zwidth":
        return lambda p, s: geometry.z_width(p)
    if name.startswith("chord:") or name.startswith("squared_chord:"):
        head, _, tail = name.partition(":")
        k = int(tail)
        if not 2 <= k <= n - 2:
            raise ValueError(f"chord index must be in [2, {n - 2}]")
        if head == "chord":
            return lambda p, s: geometry.chord_length(p, k)
        return lambda p, s: geometry.chord_length(p, k) ** 2
    if name == "octant6":
        if n != 6:
            raise ValueError("octant6 is defined for hexagons only")
        return lambda p, s: float(knots.dihedral_octant_indicator(
            ActionAngle(s.d, s.theta)))
    raise ValueError(
        f"unknown observable {name!r}; choose total_curvature, chord:k, "
        "squared_chord:k, zwidth, octant6"
    )


# Open-arm samplers.

def sample_arms_direct(r, count: int, rng: np.random.Generator) -> np.ndarray:
    """Exact iid samples of unconfined open arms; returns (count, n+1, 3) vertex arrays."""
    r = as_edge_lengths(r)
    n = r.size
    z = rng.uniform(-r, r, size=(count, n))
    theta = rng.uniform(0.0, tau, size=(count, n))
    w = np.sqrt(np.maximum(r * r - z * z, 0.0))
    edges = np.stack([np.cos(theta) * w, np.sin(theta) * w, z], axis=-1)
    vertices = np.concatenate(
        [np.zeros((count, 1, 3)), np.cumsum(edges, axis=1)], axis=1
    )
    return vertices


def run_arm_chain(P: HPolytope, r, steps: int, rng: np.random.Generator,
                  observables: dict, burnin: int = 0,
                  hr_multiplicity: int = 10, start=None) -> RunResult:
    """Confined-arm sampler: hit-and-run on the z-polytope, angles freshly uniform each step."""
    r = as_edge_lengths(r)
    if P.dim != r.size:
        raise ValueError("polytope dimension must equal the edge count")
    start_time = time.perf_counter()
    z = np.asarray(start, dtype=float) if start is not None else interior_point(P)
    if not P.contains(z, tol=0.0):
        raise ValueError("start point must lie in the arm polytope")
    series = {name: np.empty(steps) for name in observables}
    for i in range(-burnin, steps):
        z = _hr_steps(P.A, P.b, z, rng, hr_multiplicity)
        if i >= 0 and observables:
            theta = rng.uniform(0.0, tau, r.size)
            arm = build_arm(ArmCoordinates(z, theta), r)
            for name, fn in observables.items():
                series[name][i] = fn(arm, None)
    return RunResult(series=series, counters={"polytope_steps": burnin + steps},
                     final_state=ChainState(z, np.empty(0)),
                     triangulation=None, wall_time_s=time.perf_counter() - start_time)
