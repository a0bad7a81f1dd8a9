import numpy as np
import pytest
from math import pi, sqrt, tau

from scipy.stats import ks_2samp, kstest

from polywalk.action_angle import ActionAngleChart
from polywalk.geometry import Polygon, closure_defect
from polywalk.mcmc_stats import ips_variance
from polywalk.polytopes import (fan_polytope, confined_fan_polytope, hyperbox,
                                rejection_sample, slab_polytope, half_space_polytope)
from polywalk.samplers import (ChainRunner, ChainState, McmcConfig, dihedral_step,
                               hit_and_run_step, make_observable, make_rng,
                               moment_polytope_step, permutation_step, ptsmcmc_step,
                               run_arm_chain, run_chain, sample_arms_direct,
                               spawn_rngs, start_confined, start_unconfined,
                               tsmcmc_step, regular_ngon_diagonals)
from polywalk.triangulation import fan, spiral


def test_hit_and_run_1d_uniform_from_center():
    P = hyperbox([1.0])
    rng = make_rng(1)
    draws = np.array([hit_and_run_step(P, [0.0], rng)[0] for _ in range(100_000)])
    _, pval = kstest((draws + 1.0) / 2.0, "uniform")
    assert pval > 0.01


def test_hit_and_run_square_symmetry():
    P = hyperbox([1.0, 1.0])
    rng = make_rng(2)
    x = np.zeros(2)
    total = np.zeros(2)
    m = 200_000
    for _ in range(m):
        x = hit_and_run_step(P, x, rng)
        total += x
    mean = total / m
    # stationary mean is 0 by symmetry; autocorrelated, so allow a generous band
    assert np.all(np.abs(mean) < 0.02)


def test_hit_and_run_stays_interior():
    P = fan_polytope(6, 1.0)
    rng = make_rng(3)
    x = np.ones(3)
    for _ in range(2000):
        x = hit_and_run_step(P, x, rng)
        assert np.all(P.A @ x < P.b)


def test_hit_and_run_errors_outside():
    P = hyperbox([1.0])
    with pytest.raises(ValueError):
        hit_and_run_step(P, [2.0], make_rng(0))


def test_moment_polytope_step_leaves_theta():
    P = fan_polytope(6, 1.0)
    rng = make_rng(4)
    state = ChainState(np.ones(3), np.array([0.1, 0.2, 0.3]))
    new = moment_polytope_step(state, P, rng, multiplicity=10)
    assert new.theta is state.theta
    assert np.all(P.A @ new.d < P.b)
    single = moment_polytope_step(state, P, make_rng(5), multiplicity=1)
    redo = hit_and_run_step(P, state.d, make_rng(5))
    assert np.allclose(single.d, redo)


def test_dihedral_step_leaves_d():
    rng = make_rng(6)
    state = ChainState(np.ones(3), np.zeros(3))
    new = dihedral_step(state, rng)
    assert new.d is state.d
    assert np.all((0 <= new.theta) & (new.theta < tau))


def test_dihedral_marginals_uniform_and_independent():
    rng = make_rng(7)
    state = ChainState(np.ones(3), np.zeros(3))
    m = 100_000
    thetas = np.empty(m)
    previous = np.empty(m)
    cur = state
    for i in range(m):
        nxt = dihedral_step(cur, rng)
        previous[i] = cur.theta[0]
        thetas[i] = nxt.theta[0]
        cur = nxt
    _, pval = kstest(thetas / tau, "uniform")
    assert pval > 0.01
    lag1 = np.corrcoef(previous[1:], thetas[1:])[0, 1]
    assert abs(lag1) < 3.0 / sqrt(m)


def test_tsmcmc_limits():
    P = fan_polytope(6, 1.0)
    state = ChainState(np.ones(3), np.array([0.5, 0.6, 0.7]))
    # beta -> 1: the theta-coin never fires
    new = tsmcmc_step(state, P, 1.0 - 1e-12, make_rng(8))
    assert new.theta is state.theta
    # beta -> 0: d never moves
    new = tsmcmc_step(state, P, 1e-12, make_rng(9))
    assert new.d is state.d


def test_permutation_step_preserves_edges():
    # The step re-frames the polygon through the chart, so edge vectors are
    # preserved as a multiset only up to a global rotation; the multiset of
    # pairwise dot products is the rotation-invariant fingerprint.
    chart = ActionAngleChart(fan(6), 1.0)
    rng = make_rng(10)
    state = ChainState(np.ones(3), rng.uniform(0, tau, 3))
    before = chart.build(state.d, state.theta)
    eb = np.vstack([before[1:] - before[:-1], (before[0] - before[-1])[None]])
    new, accepted = permutation_step(state, chart, rng)
    assert accepted
    after = chart.build(new.d, new.theta)
    ea = np.vstack([after[1:] - after[:-1], (after[0] - after[-1])[None]])
    assert np.allclose(np.linalg.norm(ea, axis=1), 1.0, atol=1e-12)
    assert np.allclose(np.sort((eb @ eb.T).ravel()), np.sort((ea @ ea.T).ravel()),
                       atol=1e-9)
    assert closure_defect(Polygon(after, closed=True)) < 1e-10


def test_ptsmcmc_delta_limits():
    chart = ActionAngleChart(fan(6), 1.0)
    P = chart.polytope
    state = ChainState(np.ones(3), np.array([1.0, 2.0, 3.0]))
    # delta -> 1: always a permutation move (d and theta both change in general)
    new, _ = ptsmcmc_step(state, P, chart, 0.5, 1.0 - 1e-12, make_rng(11))
    assert not (new.d is state.d and new.theta is state.theta)
    # delta -> 0 with beta -> 0: pure dihedral
    new, accepted = ptsmcmc_step(state, P, chart, 1e-12, 0.0, make_rng(12))
    assert accepted and new.d is state.d


def test_start_unconfined_interior_and_deterministic():
    for maker, n in ((fan, 6), (spiral, 23)):
        chart = ActionAngleChart(maker(n), 1.0)
        aa = start_unconfined(chart, make_rng(13))
        assert np.all(chart.polytope.A @ aa.d < chart.polytope.b)
        aa2 = start_unconfined(chart, make_rng(13))
        assert np.array_equal(aa.d, aa2.d) and np.array_equal(aa.theta, aa2.theta)


def test_regular_ngon_diagonals_square():
    assert regular_ngon_diagonals(fan(4)) == pytest.approx([sqrt(2.0)])


def test_start_confined_membership():
    rng = make_rng(14)
    for R in (1.1, 1.5, 3.0):
        aa = start_confined(6, rng)
        assert np.array_equal(aa.d, np.ones(3))
        P = confined_fan_polytope(6, 1.0, R)
        assert P.contains(aa.d)
    P6 = fan_polytope(6, 1.0)
    assert np.all(P6.A @ np.ones(3) < P6.b)


def test_run_chain_empty_and_deterministic():
    cfg = McmcConfig(n=5, steps=0, seed=21, delta=0.0)
    res = run_chain(cfg, {"tc": make_observable("total_curvature", 5)})
    assert res.series["tc"].size == 0
    cfg = McmcConfig(n=5, steps=500, seed=21, delta=0.0)
    a = run_chain(cfg, {"tc": make_observable("total_curvature", 5)})
    b = run_chain(cfg, {"tc": make_observable("total_curvature", 5)})
    assert np.array_equal(a.series["tc"], b.series["tc"])
    assert a.counters == b.counters


def test_config_validation():
    with pytest.raises(ValueError):
        McmcConfig(n=6, steps=10, beta=0.0).validate()
    with pytest.raises(ValueError):
        McmcConfig(n=6, steps=10, delta=1.0).validate()
    with pytest.raises(ValueError):
        McmcConfig(n=6, steps=10, delta=0.5, confinement_radius=1.5).validate()
    with pytest.raises(ValueError):
        McmcConfig(n=6, steps=10, triangulation="spiral",
                   confinement_radius=1.5).validate()
    with pytest.raises(ValueError):
        McmcConfig(n=3, steps=10).validate()
    cfg = McmcConfig(n=6, steps=10)
    assert cfg.resolved_delta() == 0.9            # equilateral unconfined default
    assert McmcConfig(n=6, steps=10, confinement_radius=2.0).resolved_delta() == 0.0
    assert cfg.resolved_burnin() == 60


def test_infeasible_confinement_radius():
    with pytest.raises(ValueError):
        ChainRunner(McmcConfig(n=8, steps=10, confinement_radius=0.9, delta=0.0))


def test_fenchel_on_sampled_polygons():
    cfg = McmcConfig(n=7, steps=300, seed=22, triangulation="spiral", delta=0.0)
    res = run_chain(cfg, {"tc": make_observable("total_curvature", 7)})
    assert np.all(res.series["tc"] >= 2 * pi - 1e-9)


def test_confinement_never_violated():
    R = 1.5
    cfg = McmcConfig(n=8, steps=400, seed=23, confinement_radius=R, delta=0.0)
    runner = ChainRunner(cfg)
    for _ in range(400):
        runner.step()
        v = runner.polygon().vertices
        assert np.max(np.linalg.norm(v - v[0], axis=1)) <= R + 1e-9


def test_uniform_marginal_law_pentagon():
    # TSMCMC marginals of (d1, d2) match exactly uniform rejection samples.
    cfg = McmcConfig(n=5, steps=40_000, seed=24, beta=0.5, delta=0.0)
    runner = ChainRunner(cfg)
    for _ in range(cfg.resolved_burnin()):
        runner.step()
    D = np.empty((cfg.steps, 2))
    for i in range(cfg.steps):
        runner.step()
        D[i] = runner.state.d
    Y = rejection_sample(fan_polytope(5, 1.0), make_rng(25), cfg.steps)
    for j in range(2):
        _, pval = ks_2samp(D[:, j], Y[:, j])
        assert pval > 0.01


def test_octant_fraction_tsmcmc():
    cfg = McmcConfig(n=6, steps=100_000, seed=26, beta=0.5, delta=0.0)
    res = run_chain(cfg, {"oct": make_observable("octant6", 6)})
    s = ips_variance(res.series["oct"])
    assert abs(s.mean - 0.125) < 3.0 * s.sigma / sqrt(s.m)


def test_beta_consistency_across_values():
    # total-curvature estimates at different beta agree within joint error bars
    summaries = []
    for beta, seed in ((0.25, 31), (0.5, 32), (0.75, 33)):
        cfg = McmcConfig(n=6, steps=30_000, seed=seed, beta=beta, delta=0.0)
        res = run_chain(cfg, {"tc": make_observable("total_curvature", 6)})
        summaries.append(ips_variance(res.series["tc"]))
    for i in range(len(summaries)):
        for j in range(i + 1, len(summaries)):
            gap = abs(summaries[i].mean - summaries[j].mean)
            joint = summaries[i].half_width + summaries[j].half_width
            assert gap < joint


def test_make_observable_unknown():
    with pytest.raises(ValueError, match="total_curvature"):
        make_observable("winding", 6)
    with pytest.raises(ValueError):
        make_observable("chord:9", 6)
    with pytest.raises(ValueError):
        make_observable("octant6", 7)


def test_spawned_rngs_independent():
    rngs = spawn_rngs(42, 3)
    draws = [r.random(4).tolist() for r in rngs]
    assert draws[0] != draws[1] != draws[2]


def test_arm_direct_statistics():
    rng = make_rng(27)
    arms = sample_arms_direct(1.0 * np.ones(4), 50_000, rng)
    assert arms.shape == (50_000, 5, 3)
    steps = arms[:, 1:, :] - arms[:, :-1, :]
    assert np.allclose(np.linalg.norm(steps, axis=2), 1.0, atol=1e-12)
    # z of each edge uniform in [-1, 1]
    _, pval = kstest((steps[:, 0, 2] + 1) / 2, "uniform")
    assert pval > 0.01


def test_arm_direct_end_to_end_matches_pdf():
    # distribution of |end - start| follows the closed-form arm pdf
    from polywalk.closed_forms import end_to_end_pdf
    n = 5
    rng = make_rng(28)
    arms = sample_arms_direct(np.ones(n), 60_000, rng)
    ell = np.linalg.norm(arms[:, -1, :], axis=1)

    grid = np.linspace(0.0, n, 4001)
    pdf = np.array([end_to_end_pdf(x, n) for x in grid])
    cdf_grid = np.concatenate([[0.0], np.cumsum((pdf[1:] + pdf[:-1]) / 2 * np.diff(grid))])
    cdf_grid /= cdf_grid[-1]

    _, pval = kstest(ell, lambda x: np.interp(x, grid, cdf_grid))
    assert pval > 0.01


def test_slab_arm_chain_confined():
    h = 1.2
    P = slab_polytope(5, h)
    res = run_arm_chain(P, np.ones(5), 500, make_rng(29),
                        {"zw": lambda p, s: float(np.ptp(p.vertices[:, 2]))},
                        burnin=50)
    assert np.all(res.series["zw"] <= h + 1e-9)


def test_halfspace_arm_chain_above_floor():
    P = half_space_polytope(4)
    res = run_arm_chain(P, np.ones(4), 500, make_rng(30),
                        {"minz": lambda p, s: float(p.vertices[:, 2].min())},
                        burnin=50)
    assert np.all(res.series["minz"] >= -1e-9)
