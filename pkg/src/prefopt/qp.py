"""Dense convex QP solver and the preference-constraint row builders.

Solves  min 1/2 v'Pv + q'v  s.t.  Gv <= h  with P symmetric PSD, via a
primal-dual interior-point method with Mehrotra predictor-corrector steps.
The contract is the KKT certificate on the returned solution, not the method.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .core import Dataset, PreferenceSet
from .errors import DomainError, InvalidModelError

#: Default KKT tolerance; margins sigma ~ 1e-2 leave two orders of safety.
EPS_KKT = 1e-7

_SYM_TOL = 1e-10
_MAX_ITER = 100


@dataclass(frozen=True)
class QuadraticProgram:
    """min 1/2 v'Pv + q'v  s.t.  Gv <= h. Empty G/h means unconstrained."""

    P: np.ndarray
    q: np.ndarray
    G: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        q = np.asarray(self.q, dtype=float)
        d = q.size
        G = np.asarray(self.G, dtype=float).reshape(-1, d)
        h = np.asarray(self.h, dtype=float).ravel()
        if P.shape != (d, d):
            raise InvalidModelError(f"P must be ({d}, {d}), got {P.shape}")
        if G.shape[0] != h.size:
            raise InvalidModelError("G and h row counts differ")
        scale = max(1.0, float(np.abs(P).max(initial=0.0)))
        if np.abs(P - P.T).max(initial=0.0) > _SYM_TOL * scale:
            raise InvalidModelError("P is not symmetric")
        for name, a in (("P", P), ("q", q), ("G", G), ("h", h)):
            if not np.isfinite(a).all():
                raise InvalidModelError(f"{name} contains non-finite entries")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "h", h)

    @property
    def dim(self) -> int:
        return self.q.size

    @property
    def n_constraints(self) -> int:
        return self.h.size


@dataclass(frozen=True)
class QpSolution:
    v: np.ndarray
    duals: np.ndarray
    status: str          # "optimal" | "infeasible" | "max-iter"
    kkt_residual: float


def kkt_residual(qp: QuadraticProgram, v: np.ndarray, duals: np.ndarray) -> float:
    """Worst violation among stationarity, primal/dual feasibility, slackness."""
    stat = np.abs(qp.P @ v + qp.q + qp.G.T @ duals).max(initial=0.0)
    if qp.n_constraints == 0:
        return float(stat)
    slack = qp.h - qp.G @ v
    prim = max(0.0, float((-slack).max(initial=0.0)))
    dual = max(0.0, float((-duals).max(initial=0.0)))
    comp = float(np.abs(duals * slack).max(initial=0.0))
    return float(max(stat, prim, dual, comp))


def _check_psd(P: np.ndarray) -> None:
    scale = max(1.0, float(np.abs(P).max(initial=0.0)))
    w = np.linalg.eigvalsh(0.5 * (P + P.T))
    if w.min(initial=0.0) < -1e-8 * scale:
        raise InvalidModelError(f"P is not PSD (min eigenvalue {w.min():.3e})")


def _solve_spd(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Cholesky solve with escalating diagonal jitter on breakdown."""
    jitter = 0.0
    base = max(1.0, float(np.trace(M)) / M.shape[0])
    for attempt in range(8):
        try:
            c = cho_factor(M + jitter * np.eye(M.shape[0]), lower=True,
                           check_finite=False)
            return cho_solve(c, rhs, check_finite=False)
        except LinAlgError:
            jitter = base * 1e-14 if jitter == 0.0 else jitter * 100.0
    return np.linalg.lstsq(M, rhs, rcond=None)[0]


def solve_qp(qp: QuadraticProgram, tol: float = EPS_KKT) -> QpSolution:
    """Solve the QP to a KKT residual below ``tol``.

    Deterministic: identical inputs give identical outputs on one platform.
    Returns status "infeasible" with a Farkas-style certificate when the
    constraints admit no point, "max-iter" if the iteration cap is hit.
    """
    _check_psd(qp.P)
    P, q, G, h = qp.P, qp.q, qp.G, qp.h
    d, m = qp.dim, qp.n_constraints

    if m == 0:
        v = _solve_spd(P, -q)
        res = kkt_residual(qp, v, np.zeros(0))
        if res > tol:
            raise InvalidModelError(
                "unconstrained problem is singular or unbounded "
                f"(stationarity residual {res:.3e})")
        return QpSolution(v=v, duals=np.zeros(0), status="optimal",
                          kkt_residual=res)

    # Infeasible-start interior point. Keep s, z strictly positive throughout.
    v = _solve_spd(P + 1e-12 * np.eye(d), -q)
    s = np.maximum(h - G @ v, 1.0)
    z = np.ones(m)

    best = None
    for it in range(_MAX_ITER):
        r_dual = P @ v + q + G.T @ z
        r_prim = G @ v + s - h
        res = kkt_residual(qp, v, z)
        if best is None or res < best[2]:
            best = (v.copy(), z.copy(), res)
        if res <= 0.5 * tol:
            refined = _polish(qp, v, z, tol)
            if refined is not None and refined[2] <= res:
                v, z, res = refined
            return QpSolution(v=v, duals=z, status="optimal", kkt_residual=res)

        # Farkas certificate: y >= 0, G'y = 0, h'y < 0 proves infeasibility.
        if it >= 5:
            ynorm = z.sum()
            if ynorm > 1e8:
                y = z / ynorm
                gty = np.abs(G.T @ y).max(initial=0.0)
                hty = float(h @ y)
                if gty <= 1e-8 * max(1.0, np.abs(h).max(initial=0.0)) and hty < -1e-10:
                    return QpSolution(v=v, duals=z, status="infeasible",
                                      kkt_residual=res)

        mu = float(s @ z) / m
        dg = z / s
        M = P + (G.T * dg) @ G

        def newton_step(r_comp):
            rhs = -r_dual - G.T @ (dg * r_prim - r_comp / s)
            dv = _solve_spd(M, rhs)
            ds = -r_prim - G @ dv
            dz = -(r_comp + z * ds) / s
            return dv, ds, dz

        # Affine (predictor) direction.
        dv_a, ds_a, dz_a = newton_step(s * z)
        a_p = _max_step(s, ds_a)
        a_d = _max_step(z, dz_a)
        mu_aff = float((s + a_p * ds_a) @ (z + a_d * dz_a)) / m
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0

        # Corrector direction.
        r_comp = s * z + ds_a * dz_a - sigma * mu
        dv, ds, dz = newton_step(r_comp)
        a_p = min(1.0, 0.99 * _max_step(s, ds))
        a_d = min(1.0, 0.99 * _max_step(z, dz))
        v = v + a_p * dv
        s = s + a_p * ds
        z = z + a_d * dz

    v, z, res = best
    return QpSolution(v=v, duals=z, status="max-iter", kkt_residual=res)


def _polish(qp: QuadraticProgram, v: np.ndarray, z: np.ndarray, tol: float):
    """Active-set refinement of a converged interior point.

    Guessing the active set from s_i < z_i and solving the equality KKT
    system exactly turns near-zero slacks and duals into exact zeros. The
    polished point is only accepted when it verifiably improves the KKT
    residual.
    """
    s = qp.h - qp.G @ v
    act = np.flatnonzero(s < z)
    d = qp.dim
    GA = qp.G[act]
    KKT = np.block([[qp.P, GA.T],
                    [GA, np.zeros((act.size, act.size))]])
    rhs = np.concatenate([-qp.q, qp.h[act]])
    try:
        sol = np.linalg.solve(KKT, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(KKT, rhs, rcond=None)[0]
    v2 = sol[:d]
    z2 = np.zeros(qp.n_constraints)
    z2[act] = sol[d:]
    if z2.min(initial=0.0) < -tol:
        return None
    res = kkt_residual(qp, v2, z2)
    return (v2, z2, res) if np.isfinite(res) else None


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest alpha <= 1/0.99-ish keeping x + alpha*dx positive."""
    neg = dx < 0
    if not neg.any():
        return 1.0
    return float(min(1.0, (-x[neg] / dx[neg]).min()))


def build_preference_rows(dataset: Dataset, prefs: PreferenceSet,
                          kernel_matrix: np.ndarray, sigma: float):
    """Linear inequality rows encoding the preference constraints.

    Variables are stacked as (beta[0..N), xi[0..M)). For label -1 the row is
    (K_i - K_j) beta - xi_h <= -sigma; label +1 mirrors it; label 0 splits the
    absolute-value constraint |fhat_i - fhat_j| <= sigma + xi_h into the two
    one-sided rows sharing one slack. Slack nonnegativity rows follow at the
    end. Returns (G, h, row_pref): ``row_pref[r]`` is the preference index a
    constraint row came from (-1 for slack rows).
    """
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    prefs.validate_against(dataset)
    N = len(dataset)
    M = len(prefs)
    K = np.asarray(kernel_matrix, dtype=float)
    if K.shape != (N, N):
        raise DomainError(f"kernel matrix must be ({N}, {N}), got {K.shape}")

    rows, rhs, row_pref = [], [], []
    for hidx, p in enumerate(prefs):
        diff = K[p.i] - K[p.j]
        if p.label == -1:
            signs, bounds = ((+1.0,), (-sigma,))
        elif p.label == +1:
            signs, bounds = ((-1.0,), (-sigma,))
        else:
            signs, bounds = ((+1.0, -1.0), (sigma, sigma))
        for sgn, b in zip(signs, bounds):
            row = np.zeros(N + M)
            row[:N] = sgn * diff
            row[N + hidx] = -1.0
            rows.append(row)
            rhs.append(b)
            row_pref.append(hidx)
    for hidx in range(M):
        row = np.zeros(N + M)
        row[N + hidx] = -1.0
        rows.append(row)
        rhs.append(0.0)
        row_pref.append(-1)
    G = np.array(rows) if rows else np.zeros((0, N + M))
    return G, np.array(rhs), np.array(row_pref, dtype=int)
