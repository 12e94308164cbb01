import numpy as np
import pytest

from speclink import core, estimation, objective, recursive, simulate, solver

from conftest import grid


def make_scenario(seed=0, m=6, n=2, N=400, g=None):
    g = g or grid(64)
    spec = simulate.random_nested_scenario(
        m, n, [0, N, N], base_edges=5, added_edges=[2, 2], seed=seed, grid=g
    )
    return g, simulate.build_scenario(spec)


def start_state(g, scen, n=2):
    prior = scen.prior_model
    return recursive.initial_state(
        prior.inverse_spectrum(g), prior.support, n, base_degree=prior.n
    )


CFG = solver.SolverConfig(tol_grad=1e-7, max_iters=4000)


class TestStep:
    def test_no_new_edges_at_large_lambda(self):
        g, scen = make_scenario(1)
        state = start_state(g, scen)
        # data drawn from the prior's own model
        y = simulate.sample_path(scen.prior_model, 400, seed=123)
        new = recursive.step(state, y, lam=50.0, t_r=1e-3, cfg=CFG)
        assert new.support == state.support
        groups = objective.PenaltyGroups(6, 2, state.support)
        assert np.abs(groups.gather_poly(new.increments[0])).max() == 0.0

    def test_supports_only_grow(self):
        g, scen = make_scenario(2)
        state = start_state(g, scen)
        s1 = recursive.step(state, scen.windows[0], 0.05, 0.1, CFG)
        s2 = recursive.step(s1, scen.windows[0], 0.05, 0.1, CFG)
        assert state.support <= s1.support
        assert s1.support <= s2.support

    def test_window_length_guard(self):
        g, scen = make_scenario(3)
        state = start_state(g, scen)
        with pytest.raises(core.ArgumentError):
            recursive.step(state, estimation.TimeSeries(np.zeros((2, 6))), 0.05, 0.1)

    def test_solver_failure_carries_window_index(self):
        g, scen = make_scenario(4)
        state = start_state(g, scen)
        # an absurd domain margin makes the solve reject its own prior
        bad = solver.SolverConfig(domain_margin=1e9)
        with pytest.raises(core.ArgumentError, match="window 1"):
            recursive.step(state, scen.windows[0], 0.05, 0.1, bad)


class TestFlattenAndDegree:
    def test_flatten_initial(self):
        g, scen = make_scenario(5)
        state = start_state(g, scen)
        flat = recursive.flatten(state)
        assert np.array_equal(flat.values, state.base_inverse.values)

    def test_flatten_matches_sequential(self):
        g, scen = make_scenario(6)
        state = start_state(g, scen)
        for y in scen.windows:
            state = recursive.step(state, y, 0.05, 0.1, CFG)
        flat = recursive.flatten(state)
        assert np.abs(flat.values - state.current_inverse.values).max() < 1e-12

    def test_degree_bound_exact(self):
        g, scen = make_scenario(7)
        state = start_state(g, scen)
        assert state.degree_bound == scen.prior_model.n
        for y in scen.windows:
            state = recursive.step(state, y, 0.05, 0.1, CFG)
            assert state.degree_bound == scen.prior_model.n + state.n
            assert state.degree_bound <= state.base_degree + state.n
        # summed increments stay at degree n regardless of k
        total = state.increments[0]
        for Q in state.increments[1:]:
            total = total + Q
        assert total.n == state.n

    def test_trajectory_deterministic(self):
        g, scen = make_scenario(8)
        runs = []
        for _ in range(2):
            state = start_state(g, scen)
            for y in scen.windows:
                state = recursive.step(state, y, 0.05, 0.1, CFG)
            runs.append(state)
        a, b = runs
        assert a.support == b.support
        for qa, qb in zip(a.increments, b.increments):
            assert np.array_equal(qa.coeffs, qb.coeffs)

    def test_three_window_scenario_with_metrics(self):
        from speclink.scoring import score_against_truth

        g = grid(96)
        spec = simulate.random_nested_scenario(
            8, 2, [0, 800, 800, 800], base_edges=8, added_edges=[2, 2, 2],
            seed=9, grid=g,
        )
        scen = simulate.build_scenario(spec)
        state = start_state(g, scen)
        f1s = []
        for k, y in enumerate(scen.windows):
            state = recursive.step(state, y, 0.0427, 0.3, CFG)
            met = score_against_truth(
                state.support, scen.truth_supports[k + 1], scen.truth_supports[k]
            )
            f1s.append(met.f1)
        # the pipeline recovers the planted edges at sensible parameters
        assert np.mean(f1s) > 0.8, f1s
