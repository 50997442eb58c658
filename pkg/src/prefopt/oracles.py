"""Ground-truth objectives, synthetic preference users, and descriptor banks
for the three built-in benchmark problems:

- ``analytical``: a randomized seven-dimensional multimodal function;
- ``susp2d``: half-car ride comfort over front/rear damping;
- ``susp4d``: damping plus stiffness ratios, with a grip-loss penalty the
  descriptor bank deliberately cannot see.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Bounds, encode_preference
from .errors import ConfigError, DomainError, InvalidValueError
from .halfcar import (BumpScenario, HalfCarParams, PARAM_COLS, comfort_metrics,
                      comfort_metrics_batch, simulate)
from .surrogate import DescriptorBank

PROBLEM_NAMES = ("analytical", "susp2d", "susp4d")

#: Eq.-(10)-style objective needs x3 bounded away from zero.
X3_MIN = 0.5


@dataclass(frozen=True)
class EtaAnalytical:
    """Five ground-truth coefficients of the analytical objective."""

    eta: np.ndarray

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=float).ravel()
        if eta.size != 5 or not np.isfinite(eta).all():
            raise InvalidValueError("eta must be 5 finite reals")
        eta = eta.copy()
        eta.setflags(write=False)
        object.__setattr__(self, "eta", eta)


@dataclass(frozen=True)
class EtaSuspension:
    """Positive comfort weights; the grip weight is zero for the 2-D task."""

    eta_az: float
    eta_pitch: float
    eta_grip: float = 0.0

    def __post_init__(self):
        if not (self.eta_az > 0 and self.eta_pitch > 0):
            raise InvalidValueError("eta_az and eta_pitch must be positive")
        if self.eta_grip < 0:
            raise InvalidValueError("eta_grip must be nonnegative")


def analytical_bounds() -> Bounds:
    return Bounds(
        lower=np.array([-2.0, -2.0, -2.0, X3_MIN, -np.pi, -np.pi, -2.0]),
        upper=np.array([2.0, 2.0, 2.0, 3.0, np.pi, np.pi, 2.0]),
    )


def analytical_terms(x) -> np.ndarray:
    """The five basis terms; works on (..., 7) arrays, returns (..., 5)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 7:
        raise DomainError("analytical objective expects 7 components")
    if np.any(np.abs(x[..., 3]) < X3_MIN * (1.0 - 1e-12)):
        raise DomainError(f"|x3| must stay >= {X3_MIN}")
    return np.stack([
        x[..., 0] ** 4,
        -((x[..., 1] - x[..., 2]) ** 2),
        1.0 / x[..., 3],
        np.sin(x[..., 4] + x[..., 5]),
        x[..., 5] * x[..., 6],
    ], axis=-1)


def analytical_f(x, eta: EtaAnalytical):
    """eta0*x0^4 - eta1*(x1-x2)^2 + eta2/x3 + eta3*sin(x4+x5) + eta4*x5*x6,
    with the sign conventions folded into the term basis."""
    vals = analytical_terms(x) @ eta.eta
    return float(vals) if np.ndim(vals) == 0 else vals


def sample_eta_analytical(rng: np.random.Generator) -> EtaAnalytical:
    """Magnitudes uniform in [0.5, 2]; random sign on the non-definite
    terms (spread, sine, cross product)."""
    mag = rng.uniform(0.5, 2.0, size=5)
    sign = np.ones(5)
    sign[[1, 3, 4]] = rng.choice([-1.0, 1.0], size=3)
    return EtaAnalytical(mag * sign)


_ANALYTICAL_DESCRIPTORS = (
    ("x0_quartic", lambda x: x[0] ** 4),
    ("neg_spread_sq", lambda x: -((x[1] - x[2]) ** 2)),
    ("inv_x3", lambda x: 1.0 / x[3]),
    ("sin_x4_x5", lambda x: np.sin(x[4] + x[5])),
    ("x5_x6", lambda x: x[5] * x[6]),
)


def ground_truth_2d(x, eta: EtaSuspension, plant: HalfCarParams,
                    scenario: BumpScenario) -> float:
    """eta_az * RMS(A_z) + eta_pitch * RMS(pitch rate) at damping pair x."""
    cf, cr = (float(v) for v in np.asarray(x, dtype=float).ravel())
    r_az, r_pr, _ = comfort_metrics(plant.replace(c_f=cf, c_r=cr), scenario)
    return eta.eta_az * r_az + eta.eta_pitch * r_pr


def ground_truth_4d(x, eta: EtaSuspension, plant: HalfCarParams,
                    scenario: BumpScenario) -> float:
    """2-D comfort terms plus eta_grip times the cumulative grip-loss time."""
    cf, cr, rf, rr = (float(v) for v in np.asarray(x, dtype=float).ravel())
    cfg = plant.replace(c_f=cf, c_r=cr, k_f=rf * plant.k_f, k_r=rr * plant.k_r)
    r_az, r_pr, t_loss = comfort_metrics(cfg, scenario)
    return eta.eta_az * r_az + eta.eta_pitch * r_pr + eta.eta_grip * t_loss


def sample_eta_suspension(rng: np.random.Generator, with_grip: bool) -> EtaSuspension:
    """Comfort weights uniform in [0.5, 2]; when present, the grip weight is
    drawn large enough that lift-off dominates comfort differences."""
    az, pitch = rng.uniform(0.5, 2.0, size=2)
    grip = float(rng.uniform(50.0, 200.0) * (az + pitch)) if with_grip else 0.0
    return EtaSuspension(float(az), float(pitch), grip)


def synthetic_user(f, tol: float = 0.0):
    """Stateless preference callback: (x_a, x_b) -> encode(f(x_a), f(x_b))."""
    def judge(x_a, x_b) -> int:
        return encode_preference(f(x_a), f(x_b), tol)
    return judge


@dataclass
class AnalyticalProblem:
    """Randomized 7-D benchmark; descriptors span the true basis exactly."""

    name: str = "analytical"
    bounds: Bounds = field(default_factory=analytical_bounds)

    def sample_eta(self, rng: np.random.Generator) -> EtaAnalytical:
        return sample_eta_analytical(rng)

    def objective(self, eta: EtaAnalytical):
        return lambda x: float(analytical_f(np.asarray(x, dtype=float), eta))

    def bank(self) -> DescriptorBank:
        names, funcs = zip(*_ANALYTICAL_DESCRIPTORS)
        return DescriptorBank(names, funcs)

    def descriptor_values(self, x) -> np.ndarray:
        return analytical_terms(np.asarray(x, dtype=float))


@dataclass
class SuspensionProblem:
    """Half-car tuning task; every simulation result is memoized so the
    oracle, descriptors, and exports share one run per configuration."""

    name: str
    plant: HalfCarParams = field(default_factory=HalfCarParams)
    scenario: BumpScenario = field(default_factory=BumpScenario)
    damping_range: tuple = (500.0, 5000.0)
    stiffness_ratio_range: tuple = (0.5, 2.0)
    _memo: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.name not in ("susp2d", "susp4d"):
            raise ConfigError(f"unknown suspension task {self.name!r}")
        self.scenario.validate_against(self.plant)

    @property
    def dim(self) -> int:
        return 2 if self.name == "susp2d" else 4

    @property
    def bounds(self) -> Bounds:
        lod, hid = self.damping_range
        if self.name == "susp2d":
            return Bounds(np.array([lod, lod]), np.array([hid, hid]))
        lor, hir = self.stiffness_ratio_range
        return Bounds(np.array([lod, lod, lor, lor]),
                      np.array([hid, hid, hir, hir]))

    def config_for(self, x) -> HalfCarParams:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.dim:
            raise DomainError(f"{self.name} expects {self.dim} parameters")
        kw = {"c_f": float(x[0]), "c_r": float(x[1])}
        if self.dim == 4:
            kw["k_f"] = float(x[2]) * self.plant.k_f
            kw["k_r"] = float(x[3]) * self.plant.k_r
        return self.plant.replace(**kw)

    def metrics(self, x) -> tuple[float, float, float]:
        """(RMS A_z, RMS pitch rate, grip-loss time); simulated once per x."""
        key = tuple(np.asarray(x, dtype=float).ravel().tolist())
        hit = self._memo.get(key)
        if hit is None:
            hit = comfort_metrics(self.config_for(x), self.scenario)
            self._memo[key] = hit
        return hit

    def metrics_grid(self, X: np.ndarray) -> np.ndarray:
        """Batched (B, 3) descriptor table; eta-independent, so reference
        grids can be computed once and reused across Monte Carlo runs."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        base = self.plant.as_row()
        rows = np.tile(base, (X.shape[0], 1))
        icf, icr = PARAM_COLS.index("c_f"), PARAM_COLS.index("c_r")
        rows[:, icf] = X[:, 0]
        rows[:, icr] = X[:, 1]
        if self.dim == 4:
            ikf, ikr = PARAM_COLS.index("k_f"), PARAM_COLS.index("k_r")
            rows[:, ikf] = X[:, 2] * self.plant.k_f
            rows[:, ikr] = X[:, 3] * self.plant.k_r
        return comfort_metrics_batch(rows, self.plant, self.scenario)

    def sample_eta(self, rng: np.random.Generator) -> EtaSuspension:
        return sample_eta_suspension(rng, with_grip=self.name == "susp4d")

    def objective(self, eta: EtaSuspension):
        def f(x) -> float:
            r_az, r_pr, t_loss = self.metrics(x)
            return (eta.eta_az * r_az + eta.eta_pitch * r_pr
                    + eta.eta_grip * t_loss)
        return f

    def objective_from_metrics(self, metrics: np.ndarray, eta: EtaSuspension):
        """Apply the eta weighting to a precomputed (B, 3) metrics table."""
        return (eta.eta_az * metrics[:, 0] + eta.eta_pitch * metrics[:, 1]
                + eta.eta_grip * metrics[:, 2])

    def bank(self) -> DescriptorBank:
        """Comfort descriptors only; grip loss is deliberately not exposed."""
        return DescriptorBank(
            names=("rms_vertical_accel", "rms_pitch_rate"),
            funcs=(lambda x: self.metrics(x)[0], lambda x: self.metrics(x)[1]),
        )

    def descriptor_values(self, x) -> np.ndarray:
        return np.array(self.metrics(x)[:2])

    def trace_for(self, x):
        return simulate(self.config_for(x), self.scenario)


def make_problem(name: str, **overrides):
    """Problem registry addressable by name from the CLI and the service."""
    if name == "analytical":
        return AnalyticalProblem(**overrides)
    if name in ("susp2d", "susp4d"):
        return SuspensionProblem(name=name, **overrides)
    raise ConfigError(f"unknown problem {name!r}; expected one of {PROBLEM_NAMES}",
                      fields={"problem": name})


def hypothesis_bank_for(problem) -> DescriptorBank:
    """Descriptor bank for a problem instance or name."""
    if isinstance(problem, str):
        problem = make_problem(problem)
    return problem.bank()
