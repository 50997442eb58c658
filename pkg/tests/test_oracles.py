import csv

import numpy as np
import pytest

from prefopt.core import encode_preference
from prefopt.errors import ConfigError, DomainError
from prefopt.halfcar import BumpScenario, export_trace_csv, rms
from prefopt.oracles import (AnalyticalProblem, EtaAnalytical, EtaSuspension,
                             SuspensionProblem, analytical_bounds, analytical_f,
                             ground_truth_2d, ground_truth_4d,
                             hypothesis_bank_for, make_problem,
                             sample_eta_analytical, sample_eta_suspension,
                             synthetic_user)

FAST = BumpScenario(dt=1e-3, duration=4.0)
GENTLE = BumpScenario(dt=1e-3, duration=4.0, bump_height=0.01)


class TestAnalyticalObjective:
    def test_hand_evaluation(self):
        # term by term: 0 - 0 + 1/1 + sin(0) + 0*5 = 1
        x = np.array([0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 5.0])
        eta = EtaAnalytical(np.ones(5))
        assert analytical_f(x, eta) == pytest.approx(1.0)

    def test_second_hand_evaluation(self):
        x = np.array([1.0, 2.0, 0.5, 2.0, np.pi / 2, 0.0, 1.5])
        eta = EtaAnalytical(np.array([2.0, 1.0, 3.0, 1.0, 4.0]))
        expect = 2.0 * 1.0 - 1.0 * 2.25 + 3.0 / 2.0 + 1.0 * 1.0 + 4.0 * 0.0
        assert analytical_f(x, eta) == pytest.approx(expect)

    def test_zero_eta_gives_zero(self):
        rng = np.random.default_rng(0)
        b = analytical_bounds()
        eta = EtaAnalytical(np.zeros(5))
        for _ in range(20):
            x = rng.uniform(b.lower, b.upper)
            assert analytical_f(x, eta) == 0.0

    def test_swap_symmetry_in_x1_x2(self):
        rng = np.random.default_rng(1)
        b = analytical_bounds()
        eta = sample_eta_analytical(rng)
        x = rng.uniform(b.lower, b.upper)
        y = x.copy()
        y[1], y[2] = x[2], x[1]
        assert analytical_f(x, eta) == pytest.approx(analytical_f(y, eta))

    def test_x3_band_guard(self):
        eta = EtaAnalytical(np.ones(5))
        x = np.array([0.0, 0.0, 0.0, 0.1, 0.0, 0.0, 0.0])
        with pytest.raises(DomainError):
            analytical_f(x, eta)

    def test_batch_evaluation(self):
        rng = np.random.default_rng(2)
        b = analytical_bounds()
        eta = sample_eta_analytical(rng)
        X = rng.uniform(b.lower, b.upper, size=(30, 7))
        batch = analytical_f(X, eta)
        for k in range(30):
            assert batch[k] == pytest.approx(analytical_f(X[k], eta))


class TestEtaSampling:
    def test_deterministic_per_seed(self):
        a = sample_eta_analytical(np.random.default_rng(5))
        b = sample_eta_analytical(np.random.default_rng(5))
        np.testing.assert_array_equal(a.eta, b.eta)

    def test_ranges_and_signs(self):
        for seed in range(1000):
            eta = sample_eta_analytical(np.random.default_rng(seed)).eta
            mags = np.abs(eta)
            assert np.all((mags >= 0.5) & (mags <= 2.0))
            assert eta[0] > 0 and eta[2] > 0  # definite terms keep their sign

    def test_distinct_seeds_collide_rarely(self):
        draws = {tuple(sample_eta_analytical(np.random.default_rng(s)).eta)
                 for s in range(200)}
        assert len(draws) == 200

    def test_suspension_eta(self):
        for seed in range(200):
            eta = sample_eta_suspension(np.random.default_rng(seed), with_grip=True)
            assert 0.5 <= eta.eta_az <= 2.0 and 0.5 <= eta.eta_pitch <= 2.0
            lo = 50.0 * (eta.eta_az + eta.eta_pitch)
            hi = 200.0 * (eta.eta_az + eta.eta_pitch)
            assert lo <= eta.eta_grip <= hi
        eta2 = sample_eta_suspension(np.random.default_rng(0), with_grip=False)
        assert eta2.eta_grip == 0.0


class TestSuspensionObjectives:
    def test_weight_homogeneity(self):
        pb = make_problem("susp2d", scenario=FAST)
        x = np.array([1500.0, 2500.0])
        e1 = EtaSuspension(0.8, 1.1)
        e2 = EtaSuspension(1.6, 2.2)
        f1 = pb.objective(e1)(x)
        f2 = pb.objective(e2)(x)
        assert f2 == pytest.approx(2.0 * f1)

    def test_pitch_weight_collapse(self):
        pb = make_problem("susp2d", scenario=FAST)
        x = np.array([1200.0, 3300.0])
        r_az, r_pr, _ = pb.metrics(x)
        f = ground_truth_2d(x, EtaSuspension(1.3, 1e-12), pb.plant, FAST)
        assert f == pytest.approx(1.3 * r_az, rel=1e-9)

    def test_csv_reintegration_matches_descriptor(self, tmp_path):
        pb = make_problem("susp2d", scenario=FAST)
        x = np.array([2000.0, 2000.0])
        r_az, r_pr, _ = pb.metrics(x)
        tr = pb.trace_for(x)
        path = tmp_path / "t.csv"
        export_trace_csv(tr, path)
        with open(path) as fh:
            reader = csv.reader(fh)
            next(reader)
            rows = np.array([[float(c) for c in row] for row in reader])
        assert abs(rms(rows[:, 1], rows[:, 0]) - r_az) <= 1e-9
        assert abs(rms(rows[:, 2], rows[:, 0]) - r_pr) <= 1e-9

    def test_4d_equals_2d_without_liftoff(self):
        pb = make_problem("susp4d", scenario=GENTLE)
        x4 = np.array([2000.0, 2400.0, 1.0, 1.0])
        _, _, t_loss = pb.metrics(x4)
        assert t_loss == 0.0
        eta = EtaSuspension(1.2, 0.7, 300.0)
        f4 = pb.objective(eta)(x4)
        f2 = ground_truth_2d(x4[:2], eta, pb.plant, GENTLE)
        assert f4 == pytest.approx(f2, rel=1e-12)

    def test_grip_term_is_exactly_additive(self):
        pb = make_problem("susp4d", scenario=FAST)
        x = np.array([900.0, 900.0, 0.6, 0.6])
        r_az, r_pr, t_loss = pb.metrics(x)
        assert t_loss > 0
        base = EtaSuspension(1.0, 1.0, 0.0)
        with_grip = EtaSuspension(1.0, 1.0, 123.0)
        assert (pb.objective(with_grip)(x) - pb.objective(base)(x)
                == pytest.approx(123.0 * t_loss, rel=1e-12))

    def test_huge_grip_weight_ranks_by_liftoff_alone(self):
        pb = make_problem("susp4d", scenario=FAST)
        xs = [np.array([900.0, 900.0, 0.6, 0.6]),
              np.array([1400.0, 1400.0, 1.75, 1.5])]
        t_losses = [pb.metrics(x)[2] for x in xs]
        assert t_losses[0] != t_losses[1]
        f = pb.objective(EtaSuspension(1.0, 1.0, 1e6))
        order_f = np.argsort([f(x) for x in xs])
        order_t = np.argsort(t_losses)
        np.testing.assert_array_equal(order_f, order_t)

    def test_ground_truth_4d_function(self):
        pb = make_problem("susp4d", scenario=FAST)
        eta = EtaSuspension(1.0, 2.0, 77.0)
        x = np.array([1100.0, 2900.0, 1.4, 0.8])
        direct = ground_truth_4d(x, eta, pb.plant, FAST)
        assert direct == pytest.approx(pb.objective(eta)(x), rel=1e-12)


class TestSyntheticUser:
    def test_prefers_lower_objective(self):
        eta = EtaAnalytical(np.ones(5))
        judge = synthetic_user(lambda x: analytical_f(x, eta))
        better = np.array([0.0, 0.0, 0.0, 2.9, 0.0, 0.0, 0.0])   # 1/2.9
        worse = np.array([1.5, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0])    # ~7
        assert judge(better, worse) == -1
        assert judge(worse, better) == +1

    def test_same_point_is_equivalent(self):
        judge = synthetic_user(lambda x: float(x[0]))
        x = np.array([0.3])
        assert judge(x, x) == 0

    def test_antisymmetry_and_sign_agreement(self):
        rng = np.random.default_rng(3)
        judge = synthetic_user(lambda x: float(np.sin(x[0]) + x[1] ** 2))
        for _ in range(100):
            xa, xb = rng.uniform(-1, 1, size=(2, 2))
            lab = judge(xa, xb)
            assert lab == -judge(xb, xa)
            fa, fb = np.sin(xa[0]) + xa[1] ** 2, np.sin(xb[0]) + xb[1] ** 2
            assert lab == encode_preference(fa, fb)


class TestBanks:
    def test_analytical_bank_has_five_terms(self):
        pb = make_problem("analytical")
        bank = hypothesis_bank_for(pb)
        assert bank.p == 5
        rng = np.random.default_rng(4)
        x = rng.uniform(pb.bounds.lower, pb.bounds.upper)
        vals = bank.evaluate(x)
        np.testing.assert_allclose(vals, pb.descriptor_values(x), rtol=1e-12)
        eta = sample_eta_analytical(rng)
        assert vals @ eta.eta == pytest.approx(analytical_f(x, eta))

    def test_suspension_banks_have_two_comfort_terms(self):
        for name in ("susp2d", "susp4d"):
            pb = make_problem(name, scenario=FAST)
            bank = hypothesis_bank_for(pb)
            assert bank.p == 2
            assert "grip" not in " ".join(bank.names)
            x = pb.bounds.lower + 0.4 * pb.bounds.span
            vals = bank.evaluate(x)
            r_az, r_pr, _ = pb.metrics(x)
            np.testing.assert_allclose(vals, [r_az, r_pr], rtol=1e-12)

    def test_bank_by_name(self):
        assert hypothesis_bank_for("analytical").p == 5

    def test_misspecification_is_constructible(self):
        # Two configurations with identical comfort metrics but different
        # grip-loss times: the bank cannot tell them apart while the true
        # objective can.
        pb = make_problem("susp4d", scenario=FAST)
        x_a = np.array([1000.0, 1000.0, 1.0, 1.0])
        x_b = np.array([1001.0, 1000.0, 1.0, 1.0])
        pb._memo[tuple(x_a.tolist())] = (1.5, 0.08, 0.0)
        pb._memo[tuple(x_b.tolist())] = (1.5, 0.08, 0.25)
        bank = pb.bank()
        np.testing.assert_array_equal(bank.evaluate(x_a), bank.evaluate(x_b))
        f = pb.objective(EtaSuspension(1.0, 1.0, 200.0))
        assert f(x_b) - f(x_a) == pytest.approx(200.0 * 0.25)

    def test_unknown_problem_rejected(self):
        with pytest.raises(ConfigError):
            make_problem("nope")


class TestProblemRegistry:
    def test_bounds_shapes(self):
        assert make_problem("analytical").bounds.dim == 7
        assert make_problem("susp2d", scenario=FAST).bounds.dim == 2
        assert make_problem("susp4d", scenario=FAST).bounds.dim == 4

    def test_metrics_memoization(self):
        pb = make_problem("susp2d", scenario=FAST)
        x = np.array([1234.0, 4321.0])
        a = pb.metrics(x)
        assert tuple(x.tolist()) in pb._memo
        b = pb.metrics(x)
        assert a is b
