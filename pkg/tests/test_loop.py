import numpy as np
import pytest

from prefopt.core import Bounds, TAU_DUP
from prefopt.errors import ConfigError, ProtocolError
from prefopt.hypercv import CvGrid
from prefopt.loop import (LoopConfig, advance, final_answer, initialize,
                          latin_hypercube, run_autonomous, submit_preference)
from prefopt.oracles import synthetic_user
from prefopt.surrogate import DescriptorBank

B1 = Bounds(np.zeros(1), np.ones(1))
B2 = Bounds(np.array([-1.0, 3.0]), np.array([2.0, 9.0]))

SMALL_GRID = CvGrid((0.0, 10.0), (1e-4, 1e-2), (1.0, 2.0))


def small_cfg(**kw):
    kw.setdefault("cv_grid", SMALL_GRID)
    return LoopConfig(**kw)


class TestInitialize:
    def test_lhs_hits_distinct_strata(self):
        rng = np.random.default_rng(0)
        for n_points, dim in ((4, 2), (7, 3)):
            u = latin_hypercube(n_points, dim, rng)
            for j in range(dim):
                strata = np.floor(u[:, j] * n_points).astype(int)
                assert sorted(strata) == list(range(n_points))

    def test_same_seed_same_design(self):
        cfg = small_cfg(budget=10, n_init=5, seed=3)
        s1, q1 = initialize(B2, cfg)
        s2, q2 = initialize(B2, cfg)
        np.testing.assert_array_equal(s1.dataset.points, s2.dataset.points)
        assert q1.nonce == q2.nonce

    def test_initial_chain_produces_n_init_minus_one_queries(self):
        cfg = small_cfg(budget=8, n_init=6, seed=1)
        state, query = initialize(B2, cfg)
        count = 0
        while state.pending is not None and state.init_remaining or state.pending:
            state = submit_preference(state, state.pending, +1)
            count += 1
            if not state.init_remaining and state.pending is None:
                break
        assert count == cfg.n_init - 1
        assert len(state.prefs) == cfg.n_init - 1

    def test_default_n_init_rule(self):
        cfg = small_cfg(budget=40)
        assert cfg.resolve_n_init(7) == 16

    def test_budget_below_n_init_rejected(self):
        with pytest.raises(ConfigError):
            small_cfg(budget=4, n_init=6).resolve_n_init(2)

    def test_regularized_requires_bank(self):
        cfg = small_cfg(budget=10, mode="regularized")
        with pytest.raises(ConfigError):
            initialize(B2, cfg)


class TestSubmitPreference:
    def _fresh(self):
        cfg = small_cfg(budget=10, n_init=4, seed=5)
        return initialize(B2, cfg)

    def test_candidate_wins_on_minus_one(self):
        state, query = self._fresh()
        new = submit_preference(state, query, -1)
        assert new.best_index == query.candidate_index

    def test_incumbent_kept_on_tie_and_plus_one(self):
        for label in (0, +1):
            state, query = self._fresh()
            new = submit_preference(state, query, label)
            assert new.best_index == query.incumbent_index
            pref = new.prefs.items[-1]
            assert (pref.i, pref.j, pref.label) == (
                query.candidate_index, query.incumbent_index, label)

    def test_stale_nonce_rejected(self):
        state, query = self._fresh()
        moved = submit_preference(state, query, -1)
        with pytest.raises(ProtocolError):
            submit_preference(moved, query, -1)  # same nonce resubmitted

    def test_bad_label_rejected(self):
        state, query = self._fresh()
        with pytest.raises(ProtocolError):
            submit_preference(state, query, 2)

    def test_trace_grows_by_one_per_preference(self):
        state, query = self._fresh()
        sizes = [len(state.trace)]
        while state.pending is not None:
            state = submit_preference(state, state.pending, +1)
            sizes.append(len(state.trace))
        assert sizes == [1, 2, 3, 4]


def run_init_phase(state, judge):
    while state.pending is not None:
        lab = judge(state.pending.candidate, state.pending.incumbent)
        state = submit_preference(state, state.pending, lab)
    return state


class TestAdvance:
    def test_requires_no_outstanding_query(self):
        cfg = small_cfg(budget=10, n_init=4, seed=2)
        state, _ = initialize(B2, cfg)
        with pytest.raises(ProtocolError):
            advance(state)

    def test_candidate_is_fresh_and_feasible(self):
        cfg = small_cfg(budget=10, n_init=4, seed=7)
        state, _ = initialize(B2, cfg)
        judge = synthetic_user(lambda x: float(x[0] ** 2 + x[1]))
        state = run_init_phase(state, judge)
        state, query = advance(state)
        assert state.n_points == 5
        assert B2.contains(query.candidate)
        d = np.linalg.norm(state.dataset.scaled[:-1]
                           - state.dataset.scaled[-1], axis=1).min()
        assert d > TAU_DUP

    def test_deterministic_under_seed_and_labels(self):
        f = lambda x: float(np.sin(3 * x[0]) + 0.2 * x[1])
        runs = []
        for _ in range(2):
            cfg = small_cfg(budget=9, n_init=4, seed=11)
            run = run_autonomous(B2, cfg, f)
            runs.append(run.trace.to_csv())
        assert runs[0] == runs[1]

    def test_budget_exhaustion_raises(self):
        cfg = small_cfg(budget=4, n_init=4, seed=1)
        state, _ = initialize(B2, cfg)
        state = run_init_phase(state, synthetic_user(lambda x: float(x[0])))
        with pytest.raises(ProtocolError):
            advance(state)


class TestRunAutonomous:
    def test_budget_equals_n_init_gives_initial_design_only(self):
        cfg = small_cfg(budget=5, n_init=5, seed=3)
        run = run_autonomous(B2, cfg, lambda x: float(x[0]))
        assert run.state.n_points == 5
        assert len(run.trace) == 5
        assert run.state.advances == 0

    def test_y_best_is_monotone_non_increasing(self):
        cfg = small_cfg(budget=12, n_init=4, seed=9)
        run = run_autonomous(B2, cfg, lambda x: float((x[0] - 0.5) ** 2 + x[1]))
        ys = run.trace.y_best_series()
        assert np.all(np.diff(ys) <= 1e-15)

    def test_one_dim_monotone_objective_converges(self):
        cfg = small_cfg(budget=15, seed=42)
        run = run_autonomous(B1, cfg, lambda x: float(x[0]))
        best = run.state.dataset.points[run.state.best_index]
        assert best[0] <= 0.05

    def test_preference_count_invariant(self):
        cfg = small_cfg(budget=11, n_init=4, seed=13)
        run = run_autonomous(B2, cfg, lambda x: float(x[0] * x[1]))
        assert len(run.state.prefs) == run.state.n_points - 1

    def test_arms_share_initial_design_and_labels(self):
        f = lambda x: float(x[0] ** 2 + 0.3 * x[1])
        bank = DescriptorBank(
            ("sq", "lin"), (lambda x: float(x[0] ** 2), lambda x: float(x[1])))
        base = run_autonomous(B2, small_cfg(budget=8, n_init=5, seed=21), f)
        reg = run_autonomous(B2, small_cfg(budget=8, n_init=5, seed=21,
                                           mode="regularized"), f, bank=bank)
        np.testing.assert_array_equal(base.state.dataset.points[:5],
                                      reg.state.dataset.points[:5])
        assert ([p.label for p in base.state.prefs.items[:4]]
                == [p.label for p in reg.state.prefs.items[:4]])

    def test_regularized_with_forced_zero_strength_equals_baseline(self):
        f = lambda x: float(np.cos(2 * x[0]) + x[1] / 9.0)
        bank = DescriptorBank(
            ("c", "l"), (lambda x: float(np.cos(2 * x[0])), lambda x: float(x[1])))
        zero_grid = CvGrid((0.0,), (1e-4, 1e-2), (1.0, 2.0))
        base = run_autonomous(
            B2, LoopConfig(budget=9, n_init=4, seed=17, cv_grid=zero_grid), f)
        reg = run_autonomous(
            B2, LoopConfig(budget=9, n_init=4, seed=17, cv_grid=zero_grid,
                           mode="regularized"), f, bank=bank)
        np.testing.assert_allclose(base.state.dataset.points,
                                   reg.state.dataset.points, atol=1e-9)

    def test_trace_csv_shape_and_determinism(self):
        cfg = small_cfg(budget=7, n_init=4, seed=1)
        run = run_autonomous(B2, cfg, lambda x: float(x[0]))
        text = run.trace.to_csv(y_star=-1.0)
        lines = text.strip().split("\n")
        assert lines[0] == ("iteration,y_best,y_star,lambda_ls,lambda_beta,"
                            "epsilon,x0,x1")
        assert len(lines) == 8
        assert text == run_autonomous(B2, cfg, lambda x: float(x[0])
                                      ).trace.to_csv(y_star=-1.0)


class TestFinalAnswer:
    def test_best_sample_mode_returns_incumbent(self):
        cfg = small_cfg(budget=8, n_init=4, seed=5)
        run = run_autonomous(B2, cfg, lambda x: float(x[0] + x[1]))
        x = final_answer(run.state)
        np.testing.assert_array_equal(
            x, run.state.dataset.points[run.state.best_index])

    def test_surrogate_minimizer_stays_feasible(self):
        cfg = small_cfg(budget=8, n_init=4, seed=5,
                        final_answer="surrogate-minimizer")
        run = run_autonomous(B2, cfg, lambda x: float(x[0] + x[1]))
        x = final_answer(run.state)
        assert B2.contains(x)

    def test_modes_agree_on_converged_run(self):
        cfg = small_cfg(budget=16, seed=8, final_answer="surrogate-minimizer")
        run = run_autonomous(B1, cfg, lambda x: float(x[0]))
        x_surr = final_answer(run.state)
        x_best = run.state.dataset.points[run.state.best_index]
        assert abs(x_surr[0] - x_best[0]) <= 0.05
