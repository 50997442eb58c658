"""QP solver verification against independent grid oracles.

Two oracles live here, both written without reference to the solver:
``brute_force_grid`` scans every grid point literally; ``grid_oracle``
computes the same minimum exactly per x-column (the feasible y-set for a
fixed x is an interval, and a 1-D convex quadratic on a uniform grid attains
its minimum next to the clamped vertex). The fast one is validated against
the literal one at coarse resolution, then used at the 1e-3 step.
"""

import numpy as np
import pytest

from prefopt.core import Bounds, Dataset, Preference, PreferenceSet
from prefopt.errors import InvalidModelError
from prefopt.qp import (QuadraticProgram, build_preference_rows, kkt_residual,
                        solve_qp)
from prefopt.surrogate import KernelSpec, kernel_matrix

LO, HI = -5.0, 5.0


def brute_force_grid(P, q, G, h, step):
    """Literal scan over the feasible grid; chunked to bound memory."""
    n = int(round((HI - LO) / step)) + 1
    ys = LO + np.arange(n) * step
    best_val, best_pt = np.inf, None
    for i0 in range(0, n, 200):
        xs = LO + np.arange(i0, min(i0 + 200, n)) * step
        XX, YY = np.meshgrid(xs, ys, indexing="ij")
        V = np.stack([XX.ravel(), YY.ravel()], axis=1)
        feas = np.all(V @ G.T <= h + 1e-12, axis=1)
        if not feas.any():
            continue
        Vf = V[feas]
        vals = 0.5 * np.einsum("bi,ij,bj->b", Vf, P, Vf) + Vf @ q
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val, best_pt = float(vals[k]), Vf[k]
    return best_pt, best_val


def _column_candidates(P, q, G, h, step, swap):
    """Best feasible point per grid column, considering the lattice points
    next to the 1-D vertex plus the exact feasibility-interval endpoints.
    ``swap`` scans y-columns instead of x-columns."""
    if swap:
        P = P[::-1, ::-1]
        q = q[::-1]
        G = G[:, ::-1]
    n = int(round((HI - LO) / step)) + 1
    xs = LO + np.arange(n) * step
    ylo = np.full(n, LO)
    yhi = np.full(n, HI)
    feas_x = np.ones(n, dtype=bool)
    for (ga, gb), hb in zip(G, h):
        if gb > 1e-14:
            yhi = np.minimum(yhi, (hb - ga * xs) / gb)
        elif gb < -1e-14:
            ylo = np.maximum(ylo, (hb - ga * xs) / gb)
        else:
            feas_x &= ga * xs <= hb + 1e-12
    ok = feas_x & (ylo <= yhi)
    xs, ylo, yhi = xs[ok], ylo[ok], yhi[ok]

    # f(x, y) = 0.5 P11 y^2 + (P01 x + q1) y + (0.5 P00 x^2 + q0 x)
    jlo = np.ceil((ylo - LO) / step - 1e-9).astype(int).clip(0, n - 1)
    jhi = np.floor((yhi - LO) / step + 1e-9).astype(int).clip(0, n - 1)
    vertex = np.clip(-(P[0, 1] * xs + q[1]) / P[1, 1], ylo, yhi)
    jv = np.round((vertex - LO) / step).astype(int)
    cands = []
    for jj in (jv - 1, jv, jv + 1, jlo, jhi):
        jj = np.clip(jj, jlo, jhi)
        yy = np.clip(LO + jj * step, ylo, yhi)  # lattice y, clamped feasible
        cands.append(yy)
    cands += [ylo, yhi, vertex]                 # exact interval ends + vertex
    pts = np.vstack([np.stack([xs, yy], axis=1) for yy in cands])
    if swap:
        pts = pts[:, ::-1]
    return pts


def grid_oracle(P, q, G, h, step):
    """Minimum over the 1e-3 lattice augmented with exact constraint-boundary
    points per scanned column (both orientations) and feasible pairwise
    constraint intersections. Pure enumeration; no solver involvement."""
    cands = [_column_candidates(P, q, G, h, step, swap=False),
             _column_candidates(P, q, G, h, step, swap=True)]
    extra = [np.linalg.solve(P, -q)]            # unconstrained vertex
    m = G.shape[0]
    for i in range(m):
        for j in range(i + 1, m):
            A = G[[i, j]]
            if abs(np.linalg.det(A)) > 1e-12:
                extra.append(np.linalg.solve(A, h[[i, j]]))
    cands.append(np.array(extra))
    V = np.vstack(cands)
    inside = np.all((V >= LO - 1e-12) & (V <= HI + 1e-12), axis=1)
    feas = inside & np.all(V @ G.T <= h + 1e-9, axis=1)
    V = V[feas]
    vals = 0.5 * np.einsum("bi,ij,bj->b", V, P, V) + V @ q
    k = int(np.argmin(vals))
    return V[k], float(vals[k])


def random_qp(rng):
    """Well-conditioned strictly feasible 2-variable QP with 3 constraints."""
    ang = rng.uniform(0, np.pi)
    R = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
    eigs = rng.uniform(0.2, 3.0, size=2)
    P = R @ np.diag(eigs) @ R.T
    P = 0.5 * (P + P.T)
    v0 = rng.uniform(-2, 2, size=2)
    q = -P @ v0
    G = rng.normal(size=(3, 2))
    G /= np.linalg.norm(G, axis=1, keepdims=True)
    z = rng.uniform(-2, 2, size=2)
    h = G @ z + rng.uniform(0.3, 1.5, size=3)
    return QuadraticProgram(P, q, G, h)


class TestSolveQpExamples:
    def test_clipped_scalar(self):
        qp = QuadraticProgram(np.array([[1.0]]), np.array([-1.0]),
                              np.array([[1.0]]), np.array([0.5]))
        sol = solve_qp(qp)
        assert sol.status == "optimal"
        assert abs(sol.v[0] - 0.5) < 1e-6

    def test_unconstrained(self):
        qp = QuadraticProgram(np.eye(2), np.array([-1.0, -2.0]),
                              np.zeros((0, 2)), np.zeros(0))
        sol = solve_qp(qp)
        assert np.allclose(sol.v, [1.0, 2.0], atol=1e-9)

    def test_infeasible_detected(self):
        qp = QuadraticProgram(np.array([[1.0]]), np.array([0.0]),
                              np.array([[1.0], [-1.0]]), np.array([0.0, -1.0]))
        assert solve_qp(qp).status == "infeasible"

    def test_non_psd_rejected(self):
        with pytest.raises(InvalidModelError):
            solve_qp(QuadraticProgram(np.array([[-1.0]]), np.array([0.0]),
                                      np.zeros((0, 1)), np.zeros(0)))

    def test_asymmetric_rejected(self):
        with pytest.raises(InvalidModelError):
            QuadraticProgram(np.array([[1.0, 0.5], [0.0, 1.0]]),
                             np.zeros(2), np.zeros((0, 2)), np.zeros(0))


class TestOracleAgreement:
    def test_fast_oracle_refines_brute_force(self):
        # The oracle's candidate set contains every lattice point the literal
        # scan visits, so its minimum can only be equal or lower, and at a
        # coarse step the two must sit in the same basin.
        rng = np.random.default_rng(11)
        for _ in range(5):
            qp = random_qp(rng)
            pt_b, val_b = brute_force_grid(qp.P, qp.q, qp.G, qp.h, step=0.05)
            pt_f, val_f = grid_oracle(qp.P, qp.q, qp.G, qp.h, step=0.05)
            assert val_f <= val_b + 1e-12
            assert val_b - val_f <= 0.05
            assert np.abs(pt_b - pt_f).max() <= 0.12

    def test_solver_matches_grid_oracle(self):
        rng = np.random.default_rng(29)
        for _ in range(20):
            qp = random_qp(rng)
            sol = solve_qp(qp)
            assert sol.status == "optimal"
            assert sol.kkt_residual <= 1e-7
            pt, val = grid_oracle(qp.P, qp.q, qp.G, qp.h, step=1e-3)
            assert np.abs(sol.v - pt).max() <= 2e-3
            f_solver = 0.5 * sol.v @ qp.P @ sol.v + qp.q @ sol.v
            assert abs(f_solver - val) <= 1e-5


class TestSolverProperties:
    def test_kkt_recheck_from_scratch(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            qp = random_qp(rng)
            sol = solve_qp(qp, tol=1e-7)
            assert sol.status == "optimal"
            assert kkt_residual(qp, sol.v, sol.duals) <= 10 * 1e-7

    def test_bitwise_determinism(self):
        rng = np.random.default_rng(5)
        qp = random_qp(rng)
        a = solve_qp(qp)
        b = solve_qp(qp)
        assert a.v.tobytes() == b.v.tobytes()
        assert a.duals.tobytes() == b.duals.tobytes()

    def test_homogeneity_in_q_and_h(self):
        # Scaling q and h by c > 0 (P fixed) scales the optimum by c.
        rng = np.random.default_rng(7)
        for c in (0.5, 2.0, 10.0):
            qp = random_qp(rng)
            scaled = QuadraticProgram(qp.P, c * qp.q, qp.G, c * qp.h)
            v1 = solve_qp(qp).v
            v2 = solve_qp(scaled).v
            assert np.allclose(v2, c * v1, rtol=1e-5, atol=1e-6)


def _toy_fit_inputs(values, sigma=1e-2):
    n = len(values)
    pts = np.linspace(0.1, 0.9, n)[:, None]
    ds = Dataset(Bounds(np.zeros(1), np.ones(1)), pts)
    items, inc = [], 0
    for k in range(1, n):
        lab = -1 if values[k] < values[inc] else +1
        items.append(Preference(k, inc, lab))
        if lab == -1:
            inc = k
    prefs = PreferenceSet(tuple(items))
    K = kernel_matrix(KernelSpec(), ds.scaled)
    return ds, prefs, K


class TestPreferenceRows:
    def test_single_strict_preference_row_count(self):
        ds, _, K = _toy_fit_inputs([1.0, 2.0])
        prefs = PreferenceSet((Preference(0, 1, -1),))
        G, h, row_pref = build_preference_rows(ds, prefs, K, sigma=1e-2)
        assert G.shape == (2, 3)  # 1 constraint row + 1 slack-nonnegativity row
        assert list(row_pref) == [0, -1]
        assert h[0] == -1e-2

    def test_equivalence_splits_into_two_rows(self):
        ds, _, K = _toy_fit_inputs([1.0, 2.0])
        prefs = PreferenceSet((Preference(0, 1, 0),))
        G, h, row_pref = build_preference_rows(ds, prefs, K, sigma=1e-2)
        assert G.shape == (3, 3)  # two one-sided rows + slack row
        assert list(row_pref) == [0, 0, -1]
        np.testing.assert_allclose(G[0, :2], -G[1, :2])
        assert h[0] == h[1] == 1e-2

    def test_mirrored_rows_for_plus_and_minus(self):
        ds, _, K = _toy_fit_inputs([1.0, 2.0])
        Gm, _, _ = build_preference_rows(
            ds, PreferenceSet((Preference(0, 1, -1),)), K, sigma=1e-2)
        Gp, _, _ = build_preference_rows(
            ds, PreferenceSet((Preference(0, 1, +1),)), K, sigma=1e-2)
        np.testing.assert_allclose(Gm[0, :2], -Gp[0, :2])

    def test_separable_preferences_solve_with_zero_slack(self):
        # 1-D monotone utility, 3 points: a feasible zero-slack fit exists,
        # so with tiny coefficient shrinkage the coefficients returned by the
        # QP satisfy every preference row outright (induced slack zero).
        ds, prefs, K = _toy_fit_inputs([3.0, 2.0, 1.0])
        G, h, row_pref = build_preference_rows(ds, prefs, K, sigma=1e-2)
        N, M = 3, 2
        P = np.diag(np.r_[np.full(N, 2.0 * 1e-6), np.full(M, 2.0)])
        sol = solve_qp(QuadraticProgram(P, np.zeros(N + M), G, h), tol=1e-9)
        assert sol.status == "optimal"
        beta = sol.v[:N]
        pref_rows = row_pref >= 0
        assert (G[pref_rows, :N] @ beta - h[pref_rows]).max() <= 1e-6

    def test_index_out_of_range(self):
        ds, _, K = _toy_fit_inputs([1.0, 2.0])
        prefs = PreferenceSet((Preference(0, 7, -1),))
        with pytest.raises(Exception):
            build_preference_rows(ds, prefs, K, sigma=1e-2)
