"""Acquisition of the next query point: surrogate exploitation plus
inverse-distance-weighted exploration.

a(x) = fhat(x) / range(fhat) - delta * z(x), minimized over the box by a
deterministic multistart compass search seeded from the samples and a
quasi-random probe set. All geometry is on unit-cube-scaled coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import qmc

from .core import Bounds, Dataset, TAU_DUP, scale_from_unit
from .errors import InvalidValueError
from .surrogate import Surrogate, eval_surrogate_batch


@dataclass(frozen=True)
class AcquisitionConfig:
    delta: float = 0.3            # exploration weight, in (0, 1]
    range_floor: float = 1e-8     # guards division by a flat surrogate's range
    optimizer_budget: int | None = None   # defaults to 2000 * n evaluations
    multistart_count: int = 10
    #: Proposals must keep this scaled distance from every existing sample;
    #: stops the loop from spending consecutive queries on epsilon-variations
    #: of an already-refuted candidate.
    proposal_min_dist: float = 5e-3

    def __post_init__(self):
        if not (0.0 <= self.delta <= 1.0):
            raise InvalidValueError("delta must lie in [0, 1]")
        if self.range_floor <= 0:
            raise InvalidValueError("range_floor must be positive")
        if self.optimizer_budget is not None and self.optimizer_budget < 1:
            raise InvalidValueError("optimizer_budget must be positive")
        if self.multistart_count < 1:
            raise InvalidValueError("multistart_count must be positive")
        if not (TAU_DUP <= self.proposal_min_dist < 0.5):
            raise InvalidValueError("proposal_min_dist must be in [tau_dup, 0.5)")


def idw_z(x_scaled, samples: Dataset) -> float:
    """Exploration term: 0 at sampled points, otherwise
    arctan(1 / sum_i ||x - x_i||^-2), in (0, pi/2)."""
    x = np.asarray(x_scaled, dtype=float).ravel()
    d2 = np.sum((samples.scaled - x) ** 2, axis=1)
    dmin = d2.min()
    if dmin <= TAU_DUP ** 2:
        return 0.0
    return float(np.arctan(1.0 / np.sum(1.0 / d2)))


def idw_z_batch(X_scaled: np.ndarray, samples_scaled: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(X_scaled)
    d2 = cdist(X, samples_scaled, "sqeuclidean")
    out = np.zeros(X.shape[0])
    dup = d2.min(axis=1) <= TAU_DUP ** 2
    ok = ~dup
    if ok.any():
        out[ok] = np.arctan(1.0 / np.sum(1.0 / d2[ok], axis=1))
    return out


def _sobol_points(n: int, count: int, seed: int | None = None) -> np.ndarray:
    """count Sobol points in [0,1]^n; prefixes are nested. Drawn in
    power-of-two blocks to keep the generator balanced (and quiet)."""
    if count <= 0:
        return np.zeros((0, n))
    eng = qmc.Sobol(d=n, scramble=seed is not None, seed=seed)
    m = 1
    while (1 << m) < count:
        m += 1
    return eng.random_base2(m)[:count]


def surrogate_range(s: Surrogate, bounds: Bounds, probe_budget: int = 1000,
                    range_floor: float = 1e-8) -> float:
    """Estimate max fhat - min fhat over the box from the samples plus a
    nested quasi-random probe set; floored away from zero."""
    probes = _sobol_points(bounds.dim, int(probe_budget))
    X = np.vstack([s.centers.scaled, probes])
    vals = eval_surrogate_batch(s, X)
    return float(max(vals.max() - vals.min(), range_floor))


def acquisition_value(x_scaled, s: Surrogate, samples: Dataset, frange: float,
                      cfg: AcquisitionConfig) -> float:
    """a(x) = fhat(x)/frange - delta * z(x) at one scaled point."""
    if frange <= 0:
        raise InvalidValueError("surrogate range must be positive")
    x = np.asarray(x_scaled, dtype=float).ravel()
    fhat = eval_surrogate_batch(s, x[None, :])[0]
    return float(fhat / frange - cfg.delta * idw_z(x, samples))


def _acq_batch(X, s, samples_scaled, frange, delta):
    return (eval_surrogate_batch(s, X) / frange
            - delta * idw_z_batch(X, samples_scaled))


def minimize_acquisition(s: Surrogate, samples: Dataset, bounds: Bounds,
                         cfg: AcquisitionConfig, rng_seed: int) -> np.ndarray:
    """Propose the next query point (natural units).

    Multistart compass search over the unit cube: starts are the current
    samples plus seeded scrambled-Sobol points, with a coarse probe sweep
    first. Deterministic given ``rng_seed``; never returns a point within
    the duplicate tolerance of an existing sample.
    """
    n = bounds.dim
    budget = cfg.optimizer_budget or 2000 * n
    frange = surrogate_range(s, bounds, probe_budget=max(1000, len(samples)),
                             range_floor=cfg.range_floor)
    S = samples.scaled
    delta = cfg.delta

    evaluated_x = []
    evaluated_v = []

    def evaluate(X):
        X = np.atleast_2d(X)
        vals = _acq_batch(X, s, S, frange, delta)
        evaluated_x.append(X)
        evaluated_v.append(vals)
        return vals

    # Coarse sweep: scrambled Sobol (seeded) + the samples themselves.
    n_coarse = max(cfg.multistart_count, min(budget // 2, 200 * n))
    coarse = np.vstack([_sobol_points(n, n_coarse, seed=int(rng_seed)), S])
    cvals = evaluate(coarse)
    spent = coarse.shape[0]

    order = np.argsort(cvals, kind="stable")
    starts = coarse[order[:cfg.multistart_count]]

    # Compass search on all starts in lockstep, batching neighbor evals.
    step = np.full(len(starts), 0.25)
    xs = starts.copy()
    vs = cvals[order[:cfg.multistart_count]].copy()
    min_step = 1e-5
    while spent < budget and np.any(step > min_step):
        active = np.flatnonzero(step > min_step)
        if active.size == 0:
            break
        cand, owner = [], []
        for k in active:
            for axis in range(n):
                for sgn in (+1.0, -1.0):
                    y = xs[k].copy()
                    y[axis] = min(1.0, max(0.0, y[axis] + sgn * step[k]))
                    cand.append(y)
                    owner.append(k)
        cand = np.array(cand)
        vals = evaluate(cand)
        spent += len(cand)
        improved = np.zeros(len(starts), dtype=bool)
        for idx in range(len(cand)):
            k = owner[idx]
            if vals[idx] < vs[k] - 1e-14:
                vs[k] = vals[idx]
                xs[k] = cand[idx]
                improved[k] = True
        step[~improved & (step > min_step)] *= 0.5

    X_all = np.vstack(evaluated_x)
    v_all = np.concatenate(evaluated_v)
    xs_final = np.vstack([X_all, xs])
    vs_final = np.concatenate([v_all, vs])

    # Keep proposals clear of existing samples; fall back to the bare
    # duplicate tolerance if the exclusion radius rejects everything probed.
    d2 = cdist(xs_final, S, "sqeuclidean").min(axis=1)
    for radius in (cfg.proposal_min_dist, TAU_DUP):
        ok = d2 > radius ** 2
        if ok.any():
            idx = np.flatnonzero(ok)[np.argmin(vs_final[ok])]
            return scale_from_unit(xs_final[idx], bounds)
    u = np.full(n, 0.5)  # degenerate: everything probed sits on a sample
    if cdist(u[None, :], S, "sqeuclidean").min() <= TAU_DUP ** 2:
        u = np.full(n, 0.5 + 1e-6)
    return scale_from_unit(u, bounds)
