"""Iteration driver for preference-based optimization sessions.

The loop owns the protocol: a Latin-hypercube initial design whose points are
compared in a chain against the running best, then repeated rounds of
(recalibrate hyperparameters on a cadence) -> (refit surrogate) -> (minimize
the acquisition) -> (ask the user to compare the new candidate with the
incumbent). States are immutable; ``advance`` and ``submit_preference``
return new ones, which makes replay and persistence trivial.
"""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .acquisition import AcquisitionConfig, minimize_acquisition
from .core import Bounds, Dataset, Preference, PreferenceSet, scale_from_unit
from .errors import AbortedRunError, ConfigError, ProtocolError
from .hypercv import CvGrid, cross_validate
from .surrogate import (DescriptorBank, FitConfig, KernelSpec, fit_baseline,
                        fit_regularized)

MODES = ("baseline", "regularized")
FINAL_ANSWER_MODES = ("best-sample", "surrogate-minimizer")


@dataclass(frozen=True)
class LoopConfig:
    budget: int
    n_init: int | None = None      # defaults to 2 * (n + 1)
    mode: str = "baseline"
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)
    fit: FitConfig = field(default_factory=FitConfig)
    cv_grid: CvGrid = field(default_factory=CvGrid)
    cv_k: int = 5
    t_cv: int = 5
    kernel_kind: str = "inverse-quadratic"
    seed: int = 0
    final_answer: str = "best-sample"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}", fields={"mode": self.mode})
        if self.final_answer not in FINAL_ANSWER_MODES:
            raise ConfigError("bad final_answer mode",
                              fields={"final_answer": self.final_answer})
        if self.budget < 2:
            raise ConfigError("budget must be at least 2", fields={"budget": self.budget})
        if self.n_init is not None and self.n_init < 2:
            raise ConfigError("n_init must be at least 2", fields={"n_init": self.n_init})
        if self.t_cv < 1 or self.cv_k < 2:
            raise ConfigError("t_cv must be >= 1 and cv_k >= 2",
                              fields={"t_cv": self.t_cv, "cv_k": self.cv_k})

    def resolve_n_init(self, dim: int) -> int:
        n_init = self.n_init if self.n_init is not None else 2 * (dim + 1)
        if self.budget < n_init:
            raise ConfigError(
                f"budget {self.budget} smaller than initial design {n_init}",
                fields={"budget": self.budget, "n_init": n_init})
        return n_init


@dataclass(frozen=True)
class PendingQuery:
    """One outstanding comparison: new candidate vs. the current best."""

    candidate: np.ndarray
    candidate_index: int
    incumbent: np.ndarray
    incumbent_index: int
    nonce: str

    def __post_init__(self):
        if self.candidate_index == self.incumbent_index:
            raise ProtocolError("candidate and incumbent must differ")


@dataclass(frozen=True)
class TraceEntry:
    iteration: int                 # ordinal of the point this row resolves
    candidate: tuple               # that point, natural units
    incumbent_index: int           # best point after the row's comparison
    incumbent: tuple
    lambda_ls: float | None = None
    lambda_beta: float | None = None
    epsilon: float | None = None
    y_best: float | None = None


@dataclass(frozen=True)
class IterationTrace:
    entries: tuple = ()

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def with_oracle(self, objective) -> "IterationTrace":
        """Fill the y_best column by evaluating the objective at each row's
        incumbent. Idempotent for rows already filled."""
        rows = []
        for e in self.entries:
            if e.y_best is None:
                e = replace(e, y_best=float(objective(np.array(e.incumbent))))
            rows.append(e)
        return IterationTrace(tuple(rows))

    def y_best_series(self) -> np.ndarray:
        return np.array([np.nan if e.y_best is None else e.y_best
                         for e in self.entries])

    def to_csv(self, y_star: float | None = None) -> str:
        """Deterministic CSV text; float cells use repr (shortest round-trip)."""
        dim = len(self.entries[0].candidate) if self.entries else 0
        out = io.StringIO()
        cols = ["iteration", "y_best", "y_star", "lambda_ls", "lambda_beta",
                "epsilon"] + [f"x{i}" for i in range(dim)]
        out.write(",".join(cols) + "\n")

        def cell(v):
            return "" if v is None else repr(float(v))

        for e in self.entries:
            row = [str(e.iteration), cell(e.y_best), cell(y_star),
                   cell(e.lambda_ls), cell(e.lambda_beta), cell(e.epsilon)]
            row += [repr(float(x)) for x in e.candidate]
            out.write(",".join(row) + "\n")
        return out.getvalue()


@dataclass(frozen=True)
class LoopState:
    bounds: Bounds
    cfg: LoopConfig
    dataset: Dataset
    prefs: PreferenceSet
    bank: DescriptorBank | None
    best_index: int
    pending: PendingQuery | None
    init_remaining: tuple          # dataset indices still to be chained in
    advances: int
    hyper: tuple | None            # (lambda_ls, lambda_beta, epsilon)
    surrogate: object = None
    hypothesis: object = None
    trace: IterationTrace = field(default_factory=IterationTrace)

    @property
    def n_points(self) -> int:
        return len(self.dataset)

    @property
    def finished(self) -> bool:
        return (self.pending is None and not self.init_remaining
                and self.n_points >= self.cfg.budget)

    @property
    def awaiting_preference(self) -> bool:
        return self.pending is not None


def _derived_seed(seed: int, tag: int, k: int = 0) -> int:
    h = hashlib.sha256(f"{seed}:{tag}:{k}".encode()).digest()
    return int.from_bytes(h[:4], "little")


def _nonce(seed: int, cand_idx: int, inc_idx: int) -> str:
    return hashlib.sha256(f"{seed}:{cand_idx}:{inc_idx}".encode()).hexdigest()[:16]


def latin_hypercube(n_points: int, dim: int, rng: np.random.Generator,
                    n_shuffles: int = 100) -> np.ndarray:
    """Jittered LHS in the unit cube; the best of ``n_shuffles`` designs by
    maximin pairwise distance."""
    best, best_d = None, -1.0
    for _ in range(n_shuffles):
        u = np.empty((n_points, dim))
        for j in range(dim):
            u[:, j] = (rng.permutation(n_points) + rng.uniform(0, 1, n_points)) / n_points
        d = np.inf
        for i in range(1, n_points):
            d = min(d, float(np.min(np.linalg.norm(u[:i] - u[i], axis=1))))
        if d > best_d:
            best, best_d = u, d
    return best


def initialize(bounds: Bounds, cfg: LoopConfig,
               bank: DescriptorBank | None = None):
    """Create the initial design and the first chained comparison.

    Returns ``(state, first_query)``. The remaining initial queries
    materialize one at a time as labels arrive, because each pairs the next
    design point with the incumbent produced by the previous answer.
    """
    if cfg.mode == "regularized" and bank is None:
        raise ConfigError("regularized mode needs a descriptor bank")
    n_init = cfg.resolve_n_init(bounds.dim)
    rng = np.random.default_rng(_derived_seed(cfg.seed, 0x1115))
    unit = latin_hypercube(n_init, bounds.dim, rng)
    points = np.array([scale_from_unit(u, bounds) for u in unit])
    dataset = Dataset(bounds, points)

    first = TraceEntry(iteration=1, candidate=tuple(points[0]),
                       incumbent_index=0, incumbent=tuple(points[0]))
    query = PendingQuery(candidate=points[1], candidate_index=1,
                         incumbent=points[0], incumbent_index=0,
                         nonce=_nonce(cfg.seed, 1, 0))
    state = LoopState(
        bounds=bounds, cfg=cfg, dataset=dataset, prefs=PreferenceSet(),
        bank=bank, best_index=0, pending=query,
        init_remaining=tuple(range(2, n_init)), advances=0, hyper=None,
        trace=IterationTrace((first,)),
    )
    return state, query


def submit_preference(state: LoopState, query: PendingQuery, label: int) -> LoopState:
    """Record the user's label for the pending query and update the incumbent.

    Label -1 promotes the candidate; 0 and +1 keep the incumbent (a tie keeps
    the current best). During initialization the next chained query is armed
    immediately; in the main phase the loop waits for :func:`advance`.
    """
    if label not in (-1, 0, 1):
        raise ProtocolError(f"label must be in {{-1, 0, +1}}, got {label}")
    if state.pending is None:
        raise ProtocolError("no pending query to answer")
    if query is None or query.nonce != state.pending.nonce:
        raise ProtocolError("stale or duplicate query submission")

    q = state.pending
    pref = Preference(i=q.candidate_index, j=q.incumbent_index, label=int(label))
    prefs = state.prefs.with_item(pref)
    best = q.candidate_index if label == -1 else q.incumbent_index

    hyper = state.hyper
    entry = TraceEntry(
        iteration=q.candidate_index + 1,
        candidate=tuple(q.candidate),
        incumbent_index=best,
        incumbent=tuple(state.dataset.points[best]),
        lambda_ls=None if hyper is None else hyper[0],
        lambda_beta=None if hyper is None else hyper[1],
        epsilon=None if hyper is None else hyper[2],
    )
    trace = IterationTrace(state.trace.entries + (entry,))

    if state.init_remaining:
        nxt, rest = state.init_remaining[0], state.init_remaining[1:]
        pending = PendingQuery(
            candidate=state.dataset.points[nxt], candidate_index=nxt,
            incumbent=state.dataset.points[best], incumbent_index=best,
            nonce=_nonce(state.cfg.seed, nxt, best))
        return replace(state, prefs=prefs, best_index=best, pending=pending,
                       init_remaining=rest, trace=trace)
    return replace(state, prefs=prefs, best_index=best, pending=None,
                   trace=trace)


def advance(state: LoopState):
    """Recalibrate (on cadence), refit, and propose the next comparison.

    Returns ``(state, query)``. Deterministic given the config seed and the
    labels submitted so far.
    """
    if state.pending is not None or state.init_remaining:
        raise ProtocolError("advance called with a query still outstanding")
    if state.n_points >= state.cfg.budget:
        raise ProtocolError("query budget exhausted")
    cfg = state.cfg
    bank = state.bank if cfg.mode == "regularized" else None

    hyper = state.hyper
    if len(state.prefs) >= 2:
        grid = cfg.cv_grid if cfg.mode == "regularized" else cfg.cv_grid.baseline_only()
        cv = None
        if state.advances % cfg.t_cv == 0:
            cv = cross_validate(state.dataset, state.prefs, bank, grid,
                                k=cfg.cv_k,
                                rng_seed=_derived_seed(cfg.seed, 0xCF, state.advances),
                                sigma=cfg.fit.sigma)
        if cv is not None:
            hyper = cv.best
    if hyper is None:
        lls = cfg.fit.lambda_ls if cfg.mode == "regularized" else 0.0
        hyper = (lls, cfg.fit.lambda_beta, 1.0)

    kernel = KernelSpec(cfg.kernel_kind, hyper[2])
    fit_cfg = FitConfig(sigma=cfg.fit.sigma, lambda_beta=hyper[1],
                        lambda_ls=hyper[0])
    if cfg.mode == "regularized":
        fit = fit_regularized(state.dataset, state.prefs, bank, kernel, fit_cfg)
    else:
        fit = fit_baseline(state.dataset, state.prefs, kernel, fit_cfg)

    candidate = minimize_acquisition(
        fit.surrogate, state.dataset, state.bounds, cfg.acquisition,
        rng_seed=_derived_seed(cfg.seed, 0xACC, state.advances))
    dataset = state.dataset.with_point(candidate)
    cand_idx = len(dataset) - 1
    query = PendingQuery(
        candidate=dataset.points[cand_idx], candidate_index=cand_idx,
        incumbent=dataset.points[state.best_index],
        incumbent_index=state.best_index,
        nonce=_nonce(cfg.seed, cand_idx, state.best_index))
    new = replace(state, dataset=dataset, pending=query,
                  advances=state.advances + 1, hyper=hyper,
                  surrogate=fit.surrogate, hypothesis=fit.hypothesis)
    return new, query


@dataclass(frozen=True)
class AutonomousRun:
    state: LoopState
    trace: IterationTrace


def run_autonomous(bounds: Bounds, cfg: LoopConfig, objective,
                   bank: DescriptorBank | None = None,
                   tol: float = 0.0) -> AutonomousRun:
    """Run the whole loop with a synthetic user derived from ``objective``.

    Each query is answered by comparing noise-free objective values; the
    returned trace has y_best filled at every iteration. If the objective
    raises, the partial trace is preserved on the error.
    """
    from .oracles import synthetic_user

    judge = synthetic_user(objective, tol)
    state, query = initialize(bounds, cfg, bank=bank)
    try:
        while True:
            while state.pending is not None:
                label = judge(state.pending.candidate, state.pending.incumbent)
                state = submit_preference(state, state.pending, label)
            if state.n_points >= cfg.budget:
                break
            state, query = advance(state)
    except Exception as exc:
        raise AbortedRunError(
            f"autonomous run aborted at N={state.n_points}: {exc}",
            trace=state.trace) from exc
    return AutonomousRun(state=state, trace=state.trace.with_oracle(objective))


def final_answer(state: LoopState, cfg: LoopConfig | None = None) -> np.ndarray:
    """Best sampled point, or the final surrogate's minimizer (exploration off)."""
    cfg = cfg or state.cfg
    if cfg.final_answer == "surrogate-minimizer" and state.surrogate is not None:
        from .core import TAU_DUP

        acq = AcquisitionConfig(
            delta=0.0, range_floor=cfg.acquisition.range_floor,
            optimizer_budget=cfg.acquisition.optimizer_budget,
            multistart_count=cfg.acquisition.multistart_count,
            proposal_min_dist=TAU_DUP)  # reporting, not proposing a novel query
        return minimize_acquisition(state.surrogate, state.dataset, state.bounds,
                                    acq, rng_seed=_derived_seed(cfg.seed, 0xF1A))
    return state.dataset.points[state.best_index].copy()
