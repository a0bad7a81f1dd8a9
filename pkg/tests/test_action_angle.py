import numpy as np
import pytest
from math import pi, sqrt, tau

from polywalk.action_angle import (ActionAngle, ActionAngleChart, ArmCoordinates,
                                   build_arm, build_polygon, recover_coordinates,
                                   permute_edges)
from polywalk.geometry import (Polygon, closure_defect, edge_vectors, total_curvature,
                               chord_length, z_width)
from polywalk.polytopes import rejection_sample
from polywalk.samplers import make_rng
from polywalk.triangulation import fan, spiral, teeth

from conftest import random_rotation


def interior_states(chart, rng, count, jitter=0.12):
    """Interior action vectors from a short randomized walk off the all-ones point."""
    P = chart.polytope
    d = np.ones(P.dim)
    out = []
    for _ in range(count):
        for _ in range(8):
            cand = d + rng.normal(0.0, jitter, P.dim)
            if P.contains(cand, tol=-1e-9):
                d = cand
        out.append((d.copy(), rng.uniform(0.0, tau, P.dim)))
    return out


# ---------------------------------------------------------------- arms

def test_build_arm_vertical_chain():
    n = 5
    arm = build_arm(ArmCoordinates(np.ones(n), np.zeros(n)), 1.0)
    assert not arm.closed
    assert z_width(arm) == pytest.approx(n)
    assert np.allclose(arm.vertices[-1], [0, 0, n])


def test_build_arm_straight_x():
    n = 4
    arm = build_arm(ArmCoordinates(np.zeros(n), np.zeros(n)), 1.0)
    assert np.allclose(arm.vertices[-1], [n, 0, 0])


def test_build_arm_edge_lengths_and_z():
    rng = make_rng(1)
    r = np.array([1.0, 2.0, 0.5, 1.5])
    z = rng.uniform(-r, r)
    theta = rng.uniform(0, tau, 4)
    arm = build_arm(ArmCoordinates(z, theta), r)
    e = edge_vectors(arm)
    assert np.allclose(np.linalg.norm(e, axis=1), r, atol=1e-12)
    assert e[:, 2] == pytest.approx(z)
    assert arm.vertices[-1, 2] == pytest.approx(z.sum())


def test_build_arm_rejects_large_z():
    with pytest.raises(ValueError):
        build_arm(ArmCoordinates(np.array([1.5]), np.zeros(1)), 1.0)


# ---------------------------------------------------------------- closed chart

def test_rhombus():
    p = build_polygon(fan(4), 1.0, ActionAngle([1.0], [pi]))
    assert p.closed and p.n == 4
    assert np.allclose(p.vertices[:, 2], 0.0, atol=1e-12)   # theta=pi is planar
    assert total_curvature(p) == pytest.approx(2 * pi, abs=1e-12)
    e = edge_vectors(p)
    assert np.allclose(np.linalg.norm(e, axis=1), 1.0, atol=1e-12)


def test_pentagon_equilateral_triangles():
    rng = make_rng(2)
    t = fan(5)
    for _ in range(5):
        aa = ActionAngle([1.0, 1.0], rng.uniform(0, tau, 2))
        p = build_polygon(t, 1.0, aa)
        assert chord_length(p, 2) == pytest.approx(1.0, abs=1e-12)
        assert chord_length(p, 3) == pytest.approx(1.0, abs=1e-12)


def test_build_rejects_boundary():
    with pytest.raises(ValueError):
        build_polygon(fan(4), 1.0, ActionAngle([2.0], [1.0]))   # flat triangle
    with pytest.raises(ValueError):
        build_polygon(fan(4), 1.0, ActionAngle([2.5], [1.0]))   # outside


def test_chord_contract_and_closure(rng):
    for maker in (fan, spiral, teeth):
        for n in (5, 6, 10):
            t = maker(n)
            chart = ActionAngleChart(t, 1.0)
            for d, theta in interior_states(chart, rng, 20):
                v = chart.build(d, theta)
                p = Polygon(v, closed=True)
                assert closure_defect(p) < 1e-10
                e = edge_vectors(p)
                assert np.allclose(np.linalg.norm(e, axis=1), 1.0, atol=1e-12)
                for ci, (a, b) in enumerate(t.chords):
                    assert np.linalg.norm(v[a - 1] - v[b - 1]) == pytest.approx(
                        d[ci], abs=1e-10)


def test_round_trip(rng):
    for maker in (fan, spiral):
        for n in (5, 6, 10, 23):
            chart = ActionAngleChart(maker(n), 1.0)
            for d, theta in interior_states(chart, rng, 25):
                d2, th2 = chart.recover(chart.build(d, theta))
                assert np.max(np.abs(d2 - d)) < 1e-9
                assert np.max(np.abs(th2 - theta)) < 1e-9


def test_recover_regular_pentagon():
    s = 1.0 / (2.0 * np.sin(pi / 5))
    verts = np.array([[s * np.cos(2 * pi * k / 5), s * np.sin(2 * pi * k / 5), 0.0]
                      for k in range(5)])
    aa = recover_coordinates(fan(5), Polygon(verts))
    golden = (1.0 + sqrt(5.0)) / 2.0
    assert aa.d == pytest.approx([golden, golden], abs=1e-12)
    assert aa.theta == pytest.approx([pi, pi], abs=1e-12)


def test_build_recover_fixes_polygon_up_to_frame(rng):
    t = spiral(7)
    chart = ActionAngleChart(t, 1.0)
    for d, theta in interior_states(chart, rng, 10):
        v = chart.build(d, theta)
        moved = Polygon(v @ random_rotation(rng).T + rng.normal(size=3), closed=True)
        aa = recover_coordinates(t, moved)
        rebuilt = chart.build(aa.d, aa.theta)
        # the rebuilt polygon equals the original in the canonical frame
        assert np.max(np.abs(rebuilt - v)) < 1e-9


def test_fold_rotates_subtree(rng):
    t = fan(6)
    chart = ActionAngleChart(t, 1.0)
    d, theta = interior_states(chart, rng, 1)[0]
    phi = 0.8
    theta2 = theta.copy()
    theta2[0] = (theta2[0] + phi) % tau
    v1 = chart.build(d, theta)
    v2 = chart.build(d, theta2)
    # chord 0 of the fan joins vertices 1 and 3; vertices 1, 2, 3 stay fixed
    fixed = [0, 1, 2]
    moved = [3, 4, 5]
    assert np.max(np.abs(v2[fixed] - v1[fixed])) < 1e-10
    # moved vertices rotate rigidly about the chord axis by phi
    a, b = v1[0], v1[2]
    axis = (b - a) / np.linalg.norm(b - a)

    def rodrigues(x):
        rel = x - a
        return a + (rel * np.cos(phi) + np.cross(axis, rel) * np.sin(phi)
                    + axis * (axis @ rel) * (1 - np.cos(phi)))

    for idx in moved:
        assert np.max(np.abs(rodrigues(v1[idx]) - v2[idx])) < 1e-10


def test_recover_degenerate_raises():
    flat = Polygon(np.array(
        [[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0], [2, 0, 0], [1, 0, 0]], dtype=float))
    with pytest.raises(ValueError):
        recover_coordinates(fan(6), flat)


# ---------------------------------------------------------------- permutations

def test_permute_edges_identity():
    p = build_polygon(fan(5), 1.0, ActionAngle([1.1, 0.9], [1.0, 2.0]))
    q = permute_edges(p, np.arange(5))
    assert np.allclose(q.vertices, p.vertices - p.vertices[0], atol=1e-12)


def lexsorted_rows(x):
    return x[np.lexsort(x.T[::-1])]


def test_permute_edges_preserves_multiset(rng):
    chart = ActionAngleChart(spiral(8), 1.0)
    d, theta = interior_states(chart, rng, 1)[0]
    p = Polygon(chart.build(d, theta), closed=True)
    sigma = rng.permutation(8)
    q = permute_edges(p, sigma)
    assert closure_defect(q) < 1e-10
    assert np.allclose(lexsorted_rows(edge_vectors(p)), lexsorted_rows(edge_vectors(q)),
                       atol=1e-12)
    assert np.allclose(np.linalg.norm(edge_vectors(q), axis=1), 1.0, atol=1e-12)


def test_permute_edges_validation():
    p = build_polygon(fan(4), 1.0, ActionAngle([1.0], [2.0]))
    with pytest.raises(ValueError):
        permute_edges(p, [0, 1, 1, 2])


# ---------------------------------------------------------------- measure contracts

def test_pushforward_chord_mean():
    # Duistermaat-Heckman contract: uniform (d, theta) push forward to the
    # standard measure, so the k=2 chord mean of equilateral pentagons is the
    # first fan-polytope centroid coordinate, 17/15.
    chart = ActionAngleChart(fan(5), 1.0)
    rng = make_rng(99)
    m = 1_000_000
    D = rejection_sample(chart.polytope, rng, m)
    TH = rng.uniform(0.0, tau, (m, 2))
    chords = np.empty(m)
    for i in range(m):
        v = chart.build(D[i], TH[i])
        chords[i] = sqrt(((v[0] - v[2]) ** 2).sum())
    se = chords.std(ddof=1) / sqrt(m)
    assert abs(chords.mean() - 17.0 / 15.0) < 3 * se


def test_theta_marginals_uniform_after_permutation():
    from scipy.stats import kstest
    chart = ActionAngleChart(fan(6), 1.0)
    rng = make_rng(77)
    m = 100_000
    D = rejection_sample(chart.polytope, rng, m)
    TH = rng.uniform(0.0, tau, (m, 3))
    recovered = np.empty((m, 3))
    kept = 0
    for i in range(m):
        v = chart.build(D[i], TH[i])
        e = np.vstack([v[1:] - v[:-1], (v[0] - v[-1])[None, :]])
        nv = np.vstack([np.zeros(3), np.cumsum(e[rng.permutation(6)][:-1], axis=0)])
        try:
            _, th = chart.recover(nv)
        except ValueError:
            continue
        recovered[kept] = th
        kept += 1
    assert kept > m - 5
    for j in range(3):
        _, pval = kstest(recovered[:kept, j] / tau, "uniform")
        assert pval > 0.01, f"theta_{j} marginal rejected: p={pval}"
