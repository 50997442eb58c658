"""RBF surrogate fitting from pairwise preferences, with an optional
sensor-informed alignment penalty.

The baseline fit solves

    min_{beta, xi}  sum_h xi_h^2 + lambda_beta * sum_k beta_k^2
    s.t. preference rows (see :func:`prefopt.qp.build_preference_rows`)

The regularized fit adds descriptor structure: a bank of measurable
descriptors J_r defines a linear hypothesis f_hp(x) = sum_r w_r J_r(x), and
the joint problem penalizes lambda_ls * sum_i (fhat(x_i) - f_hp(x_i))^2 over
the sampled points, staying a convex QP in (beta, w, xi). With lambda_ls = 0
it reduces exactly to the baseline fit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .core import Bounds, Dataset, PreferenceSet
from .errors import (DescriptorError, DomainError, FitError,
                     InsufficientPreferencesError, InvalidValueError)
from .qp import QuadraticProgram, build_preference_rows, solve_qp

KERNEL_KINDS = ("inverse-quadratic", "gaussian", "multiquadric")

#: Ridge added to the hypothesis-weight block when it is singular
#: (collinear descriptors, or lambda_ls = 0).
W_RIDGE = 1e-8


@dataclass(frozen=True)
class KernelSpec:
    """RBF kind and width; width applies to scaled (unit-cube) coordinates."""

    kind: str = "inverse-quadratic"
    epsilon: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise InvalidValueError(f"unknown kernel kind {self.kind!r}")
        if not (self.epsilon > 0 and np.isfinite(self.epsilon)):
            raise InvalidValueError("epsilon must be positive and finite")


def kernel_eval(spec: KernelSpec, r2):
    """Evaluate phi(epsilon * r2) for squared distance(s) r2 >= 0."""
    r2 = np.asarray(r2, dtype=float)
    if np.any(r2 < 0):
        raise DomainError("squared distances must be nonnegative")
    u = spec.epsilon * r2
    if spec.kind == "inverse-quadratic":
        out = 1.0 / (1.0 + u)
    elif spec.kind == "gaussian":
        out = np.exp(-u)
    else:
        out = np.sqrt(1.0 + u)
    return float(out) if out.ndim == 0 else out


def kernel_matrix(spec: KernelSpec, A: np.ndarray, B: np.ndarray | None = None) -> np.ndarray:
    """phi(eps * ||a - b||^2) for all pairs; symmetric when B is None."""
    A = np.atleast_2d(A)
    B = A if B is None else np.atleast_2d(B)
    r2 = cdist(A, B, "sqeuclidean")
    if B is A:
        r2 = 0.5 * (r2 + r2.T)
        np.fill_diagonal(r2, 0.0)
    return kernel_eval(spec, r2)


@dataclass(frozen=True)
class Surrogate:
    """fhat(x) = sum_i beta_i phi(eps ||x - x_i||^2), centers from a dataset."""

    kernel: KernelSpec
    centers: Dataset
    beta: np.ndarray

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float).ravel()
        if beta.size != len(self.centers):
            raise DomainError("beta length must equal the number of centers")
        beta = beta.copy()
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)


def eval_surrogate(s: Surrogate, x_scaled) -> float:
    """Surrogate value at one scaled point."""
    x = np.asarray(x_scaled, dtype=float).ravel()
    if x.size != s.centers.dim:
        raise DomainError("dimension mismatch between point and centers")
    r2 = np.sum((s.centers.scaled - x) ** 2, axis=1)
    return float(kernel_eval(s.kernel, r2) @ s.beta)


def eval_surrogate_batch(s: Surrogate, X_scaled: np.ndarray) -> np.ndarray:
    """Surrogate values at many scaled points, shape (Q,)."""
    X = np.atleast_2d(np.asarray(X_scaled, dtype=float))
    if X.shape[1] != s.centers.dim:
        raise DomainError("dimension mismatch between points and centers")
    return kernel_matrix(s.kernel, X, s.centers.scaled) @ s.beta


@dataclass(frozen=True)
class DescriptorBank:
    """Named descriptor functions J_r (natural-units input) plus a value
    cache at the sampled points, row order matching the dataset.
    ``cache_key`` fingerprints the points the cache was computed for, so a
    stale cache is never silently reused against a different dataset."""

    names: tuple
    funcs: tuple
    cache: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    cache_key: bytes = b""

    def __post_init__(self):
        names = tuple(self.names)
        funcs = tuple(self.funcs)
        if len(names) != len(funcs) or len(names) < 1:
            raise DomainError("need one name per descriptor, at least one")
        cache = np.asarray(self.cache, dtype=float).reshape(-1, len(names))
        if cache.size and not np.isfinite(cache).all():
            raise InvalidValueError("descriptor cache contains non-finite values")
        cache = cache.copy()
        cache.setflags(write=False)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "funcs", funcs)
        object.__setattr__(self, "cache", cache)

    @property
    def p(self) -> int:
        return len(self.names)

    def evaluate(self, x_natural) -> np.ndarray:
        """All descriptor values at one natural-units point."""
        out = np.empty(self.p)
        for r, (name, fn) in enumerate(zip(self.names, self.funcs)):
            try:
                val = float(fn(np.asarray(x_natural, dtype=float)))
            except Exception as exc:
                raise DescriptorError(f"descriptor {name!r} failed: {exc}",
                                      descriptor=name) from exc
            if not np.isfinite(val):
                raise DescriptorError(f"descriptor {name!r} returned {val}",
                                      descriptor=name)
            out[r] = val
        return out


def _points_key(points: np.ndarray) -> bytes:
    import hashlib

    return hashlib.sha256(np.ascontiguousarray(points).tobytes()).digest()


def refresh_descriptor_cache(bank: DescriptorBank, dataset: Dataset) -> DescriptorBank:
    """Return a bank whose cache covers every dataset point.

    Incremental: existing rows are kept verbatim (when their fingerprint
    matches the dataset's leading points) and only missing rows are computed,
    so repeated refreshes are idempotent and append-only.
    """
    N = len(dataset)
    have = bank.cache.shape[0] if bank.cache.size else 0
    if have > N or (have and bank.cache_key != _points_key(dataset.points[:have])):
        have = 0  # cache belongs to different points; recompute fully
    rows = [bank.cache[:have]] if have else []
    for idx in range(have, N):
        try:
            rows.append(bank.evaluate(dataset.points[idx])[None, :])
        except DescriptorError as exc:
            raise DescriptorError(str(exc), descriptor=exc.descriptor,
                                  point_index=idx) from exc
    cache = np.vstack(rows) if rows else np.zeros((0, bank.p))
    return DescriptorBank(bank.names, bank.funcs, cache,
                          cache_key=_points_key(dataset.points))


@dataclass(frozen=True)
class Hypothesis:
    """Linear combination of bank descriptors: f_hp(x) = w . J(x)."""

    bank: DescriptorBank
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.size != self.bank.p:
            raise DomainError("weights length must equal descriptor count")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


def eval_hypothesis(h: Hypothesis, x_natural) -> float:
    return float(h.bank.evaluate(x_natural) @ h.weights)


@dataclass(frozen=True)
class FitConfig:
    sigma: float = 1e-2          # preference margin, scaled problem
    lambda_beta: float = 1e-2    # coefficient shrinkage; > 0 for strict convexity
    lambda_ls: float = 1.0       # alignment strength toward the hypothesis
    qp_tol: float = 1e-8         # KKT tolerance passed to the QP solver

    def __post_init__(self):
        if self.sigma <= 0:
            raise InvalidValueError("sigma must be positive")
        if self.lambda_beta <= 0:
            raise InvalidValueError("lambda_beta must be positive")
        if self.lambda_ls < 0:
            raise InvalidValueError("lambda_ls must be nonnegative")
        if self.qp_tol <= 0:
            raise InvalidValueError("qp_tol must be positive")


@dataclass(frozen=True)
class FitResult:
    surrogate: Surrogate
    slacks: np.ndarray
    hypothesis: Hypothesis | None = None
    w_ridge_applied: bool = False
    kkt_residual: float = float("nan")


def _check_fit_inputs(dataset: Dataset, prefs: PreferenceSet) -> None:
    if len(dataset) < 2 or len(prefs) < 1:
        raise InsufficientPreferencesError(
            f"fitting needs N >= 2 and M >= 1, got N={len(dataset)}, M={len(prefs)}")
    prefs.validate_against(dataset)


def induced_slacks(beta: np.ndarray, G: np.ndarray, h: np.ndarray,
                   row_pref: np.ndarray, n_prefs: int) -> np.ndarray:
    """Minimal feasible slack per preference given the coefficients alone:
    xi_h = max(0, worst violation among that preference's constraint rows).
    Canonical (the QP's auxiliary xi variables can sit slightly above this
    at degenerate optima)."""
    N = beta.size
    slacks = np.zeros(n_prefs)
    for r in range(G.shape[0]):
        hidx = row_pref[r]
        if hidx < 0:
            continue
        viol = float(G[r, :N] @ beta - h[r])
        if viol > slacks[hidx]:
            slacks[hidx] = viol
    return slacks


def fit_baseline(dataset: Dataset, prefs: PreferenceSet, kernel: KernelSpec,
                 cfg: FitConfig) -> FitResult:
    """Preference-only surrogate fit (no descriptor structure)."""
    _check_fit_inputs(dataset, prefs)
    N, M = len(dataset), len(prefs)
    K = kernel_matrix(kernel, dataset.scaled)
    G, h, row_pref = build_preference_rows(dataset, prefs, K, cfg.sigma)
    P = np.diag(np.r_[np.full(N, 2.0 * cfg.lambda_beta), np.full(M, 2.0)])
    sol = _solve_fit(QuadraticProgram(P, np.zeros(N + M), G, h), prefs, cfg.qp_tol)
    beta = sol.v[:N]
    return FitResult(
        surrogate=Surrogate(kernel, dataset, beta),
        slacks=induced_slacks(beta, G, h, row_pref, M),
        kkt_residual=sol.kkt_residual,
    )


def fit_regularized(dataset: Dataset, prefs: PreferenceSet, bank: DescriptorBank,
                    kernel: KernelSpec, cfg: FitConfig) -> FitResult:
    """Joint surrogate + hypothesis-weight fit with alignment penalty.

    The quadratic cost stacks v = (beta, w, xi); the alignment term
    lambda_ls * ||K beta - J w||^2 couples the first two blocks. When the
    w block is singular a tiny ridge is added and reported on the result.
    """
    _check_fit_inputs(dataset, prefs)
    bank = refresh_descriptor_cache(bank, dataset)
    N, M, p = len(dataset), len(prefs), bank.p
    K = kernel_matrix(kernel, dataset.scaled)
    J = bank.cache

    G_bx, h, row_pref = build_preference_rows(dataset, prefs, K, cfg.sigma)
    G = np.hstack([G_bx[:, :N], np.zeros((G_bx.shape[0], p)), G_bx[:, N:]])

    # Alignment acts on centered values: preferences pin only differences,
    # and the kernel expansion decays to zero far from samples, so matching
    # a hypothesis offset would just shift every fitted sample value and
    # make "far from the data" look artificially good to the acquisition.
    center = np.eye(N) - np.full((N, N), 1.0 / N)
    P, ridge = joint_cost_matrix(center @ K, center @ J,
                                 cfg.lambda_beta, cfg.lambda_ls, M)
    sol = _solve_fit(QuadraticProgram(P, np.zeros(N + p + M), G, h), prefs,
                     cfg.qp_tol)
    beta = sol.v[:N]
    return FitResult(
        surrogate=Surrogate(kernel, dataset, beta),
        hypothesis=Hypothesis(bank, sol.v[N:N + p]),
        slacks=induced_slacks(beta, G_bx, h, row_pref, M),
        w_ridge_applied=ridge,
        kkt_residual=sol.kkt_residual,
    )


def joint_cost_matrix(K: np.ndarray, J: np.ndarray, lambda_beta: float,
                      lambda_ls: float, n_slacks: int):
    """Quadratic cost of the joint fit over v = (beta, w, xi).

    The alignment term contributes ||K beta - J w||^2 expanded blockwise.
    Returns (P, ridge_applied); a 1e-8 ridge lands on the w block when it is
    singular (collinear descriptors, or lambda_ls = 0).
    """
    N, p, M = K.shape[0], J.shape[1], n_slacks
    lam = lambda_ls
    P = np.zeros((N + p + M, N + p + M))
    P[:N, :N] = 2.0 * (lambda_beta * np.eye(N) + lam * (K.T @ K))
    P[:N, N:N + p] = -2.0 * lam * (K.T @ J)
    P[N:N + p, :N] = P[:N, N:N + p].T
    P[N:N + p, N:N + p] = 2.0 * lam * (J.T @ J)
    P[N + p:, N + p:] = 2.0 * np.eye(M)

    w_block = P[N:N + p, N:N + p]
    w_scale = max(1.0, float(np.abs(w_block).max(initial=0.0)))
    ridge = bool(np.linalg.eigvalsh(w_block).min(initial=0.0) < 1e-10 * w_scale)
    if ridge:
        P[N:N + p, N:N + p] += 2.0 * W_RIDGE * np.eye(p)
    return P, ridge


def _solve_fit(qp: QuadraticProgram, prefs: PreferenceSet, tol: float):
    sol = solve_qp(qp, tol=tol)
    if sol.status != "optimal":
        raise FitError(
            f"surrogate QP ended with status {sol.status!r} "
            f"(kkt residual {sol.kkt_residual:.3e})",
            preference_indices=range(len(prefs)))
    return sol


def alignment_residual(fit: FitResult, dataset: Dataset) -> float:
    """Disagreement between surrogate and hypothesis at the sampled points,
    measured on centered values (the component the fit actually penalizes;
    the common offset is unidentifiable from preferences)."""
    if fit.hypothesis is None:
        raise DomainError("alignment residual needs a fitted hypothesis")
    fhat = eval_surrogate_batch(fit.surrogate, dataset.scaled)
    fhp = fit.hypothesis.bank.cache[:len(dataset)] @ fit.hypothesis.weights
    diff = (fhat - fhat.mean()) - (fhp - fhp.mean())
    return float(np.sum(diff ** 2))


# --- JSON persistence -------------------------------------------------------

def surrogate_to_json(s: Surrogate) -> str:
    return json.dumps({
        "v": 1,
        "kernel": {"kind": s.kernel.kind, "epsilon": s.kernel.epsilon},
        "bounds": {"lower": s.centers.bounds.lower.tolist(),
                   "upper": s.centers.bounds.upper.tolist()},
        "centers": s.centers.points.tolist(),
        "beta": s.beta.tolist(),
    })


def surrogate_from_json(text: str) -> Surrogate:
    doc = json.loads(text)
    bounds = Bounds(np.array(doc["bounds"]["lower"]), np.array(doc["bounds"]["upper"]))
    dataset = Dataset(bounds, np.array(doc["centers"]))
    kernel = KernelSpec(doc["kernel"]["kind"], doc["kernel"]["epsilon"])
    return Surrogate(kernel, dataset, np.array(doc["beta"]))


def hypothesis_to_json(h: Hypothesis) -> str:
    return json.dumps({
        "v": 1,
        "descriptors": list(h.bank.names),
        "weights": h.weights.tolist(),
    })


def hypothesis_weights_from_json(text: str, bank: DescriptorBank) -> Hypothesis:
    """Rebind serialized weights onto a live bank, checking descriptor names."""
    doc = json.loads(text)
    if tuple(doc["descriptors"]) != bank.names:
        raise DomainError("descriptor names do not match the provided bank")
    return Hypothesis(bank, np.array(doc["weights"]))
