"""4-DOF half-car vertical dynamics over a half-sine bump.

States are deviations from static equilibrium: heave z_s, pitch theta, and
the two unsprung heaves z_uf, z_ur, each with its velocity. The model is
linear except for the tire contact: normal force is clamped at zero, so the
wheel can lift off. Integration is fixed-step RK4, which keeps traces
bit-reproducible across runs.

A compiled (numba) kernel handles both single simulations and large
parameter batches (used by grid-search references); a pure-numpy twin exists
as fallback and as an independent cross-check.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InstabilityError, InvalidValueError

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap if not (args and callable(args[0])) else args[0]


GRAVITY = 9.81

#: Column order of the flat parameter matrix used by the batch kernels.
PARAM_COLS = ("m_s", "i_y", "m_uf", "m_ur", "k_f", "k_r", "c_f", "c_r",
              "k_tf", "k_tr", "a", "b")


@dataclass(frozen=True)
class HalfCarParams:
    """Plant constants; defaults are ordinary passenger-car magnitudes."""

    m_s: float = 600.0       # sprung mass, kg
    i_y: float = 1100.0      # pitch inertia, kg m^2
    m_uf: float = 40.0       # front unsprung mass, kg
    m_ur: float = 40.0       # rear unsprung mass, kg
    k_f: float = 25000.0     # front suspension stiffness, N/m
    k_r: float = 25000.0     # rear suspension stiffness, N/m
    c_f: float = 1500.0      # front damping, N s/m
    c_r: float = 1500.0      # rear damping, N s/m
    k_tf: float = 200000.0   # front tire stiffness, N/m
    k_tr: float = 200000.0   # rear tire stiffness, N/m
    a: float = 1.2           # CG to front axle, m
    b: float = 1.4           # CG to rear axle, m

    def __post_init__(self):
        for name in PARAM_COLS:
            # damping may be zero (undamped studies); everything else positive
            low_ok = 0.0 if name in ("c_f", "c_r") else None
            val = getattr(self, name)
            if (val < 0) if low_ok == 0.0 else (not val > 0):
                raise ConfigError(f"{name} must be positive",
                                  fields={name: val})

    @property
    def wheelbase(self) -> float:
        return self.a + self.b

    def as_row(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in PARAM_COLS])

    def replace(self, **kw) -> "HalfCarParams":
        vals = {name: getattr(self, name) for name in PARAM_COLS}
        vals.update(kw)
        return HalfCarParams(**vals)


@dataclass(frozen=True)
class BumpScenario:
    """Half-sine bump test: geometry, speed, and integration grid."""

    speed: float = 30.0 / 3.6   # m/s
    bump_height: float = 0.08   # m
    bump_length: float = 0.6    # m
    duration: float = 5.0       # s
    dt: float = 1e-4            # s
    lead_time: float = 0.25     # quiet time before the front axle hits, s
    sync_axles: bool = False    # zero-delay override: both wheels hit at once

    def __post_init__(self):
        if self.speed <= 0:
            raise ConfigError("speed must be positive")
        if self.bump_height < 0 or self.bump_length <= 0:
            raise ConfigError("bump geometry must be nonnegative height, positive length")
        if not (0 < self.dt <= 1e-3):
            raise ConfigError("dt must lie in (0, 1e-3] s")
        if self.duration <= self.lead_time:
            raise ConfigError("duration must exceed the lead time")

    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def validate_against(self, params: HalfCarParams) -> None:
        needed = self.lead_time + (params.wheelbase + self.bump_length) / self.speed
        if self.duration <= needed:
            raise ConfigError(
                f"duration {self.duration} too short: rear axle clears the bump "
                f"at t = {needed:.3f} s")


def road_profile(t, scenario: BumpScenario, axle_offset: float = 0.0):
    """Road height under an axle trailing the front by ``axle_offset`` meters."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InvalidValueError("time must be nonnegative")
    t0 = scenario.lead_time + axle_offset / scenario.speed
    tau = (t - t0) * scenario.speed / scenario.bump_length  # bump-relative [0,1]
    h = np.where((tau >= 0.0) & (tau <= 1.0),
                 scenario.bump_height * np.sin(np.pi * np.clip(tau, 0.0, 1.0)),
                 0.0)
    return float(h) if h.ndim == 0 else h


@dataclass(frozen=True)
class SignalTrace:
    """Simulation output on the time grid; forces are absolute (clamped)."""

    time: np.ndarray
    a_z: np.ndarray          # CG vertical acceleration, m/s^2
    pitch_rate: np.ndarray   # rad/s
    f_tf: np.ndarray         # front tire normal force, N
    f_tr: np.ndarray         # rear tire normal force, N
    states: np.ndarray       # (nt, 8): z_s, vz_s, th, vth, z_uf, vz_uf, z_ur, vz_ur

    @property
    def dt(self) -> float:
        return float(self.time[1] - self.time[0])


def static_loads(params: HalfCarParams) -> tuple[float, float]:
    """Per-axle static tire loads (front, rear), N."""
    share_f = params.m_s * params.b / params.wheelbase + params.m_uf
    share_r = params.m_s * params.a / params.wheelbase + params.m_ur
    return GRAVITY * share_f, GRAVITY * share_r


def _road_tables(params: HalfCarParams, scenario: BumpScenario):
    """Road height under each axle at half-step resolution (exact samples)."""
    nt = scenario.n_steps() + 1
    t_half = np.arange(2 * nt - 1) * (scenario.dt / 2.0)
    rf = road_profile(t_half, scenario, 0.0)
    offset = 0.0 if scenario.sync_axles else params.wheelbase
    rr = road_profile(t_half, scenario, offset)
    return rf, rr


@njit(cache=True, inline="always")
def _deriv8(y, r_f, r_r, ms, iy, muf, mur, kf, kr, cf, cr, ktf, ktr, la, lb,
            ff0, fr0, d):  # pragma: no cover - compiled
    fsf = -kf * (y[0] + la * y[2] - y[4]) - cf * (y[1] + la * y[3] - y[5])
    fsr = -kr * (y[0] - lb * y[2] - y[6]) - cr * (y[1] - lb * y[3] - y[7])
    tf = ff0 + ktf * (r_f - y[4])
    if tf < 0.0:
        tf = 0.0
    tr = fr0 + ktr * (r_r - y[6])
    if tr < 0.0:
        tr = 0.0
    d[0] = y[1]
    d[1] = (fsf + fsr) / ms
    d[2] = y[3]
    d[3] = (la * fsf - lb * fsr) / iy
    d[4] = y[5]
    d[5] = (-fsf + (tf - ff0)) / muf
    d[6] = y[7]
    d[7] = (-fsr + (tr - fr0)) / mur
    return tf, tr


@njit(cache=True)
def _rk4_trace_kernel(par, rf, rr, dt, az, pr, ftf, ftr, states):  # pragma: no cover
    B = par.shape[0]
    nt = az.shape[0]
    y = np.empty(8)
    yt = np.empty(8)
    k1 = np.empty(8)
    k2 = np.empty(8)
    k3 = np.empty(8)
    k4 = np.empty(8)
    for bi in range(B):
        ms, iy, muf, mur = par[bi, 0], par[bi, 1], par[bi, 2], par[bi, 3]
        kf, kr, cf, cr = par[bi, 4], par[bi, 5], par[bi, 6], par[bi, 7]
        ktf, ktr, la, lb = par[bi, 8], par[bi, 9], par[bi, 10], par[bi, 11]
        ff0 = 9.81 * (ms * lb / (la + lb) + muf)
        fr0 = 9.81 * (ms * la / (la + lb) + mur)
        for i in range(8):
            y[i] = 0.0
        for step in range(nt):
            tf, tr = _deriv8(y, rf[2 * step], rr[2 * step], ms, iy, muf, mur,
                             kf, kr, cf, cr, ktf, ktr, la, lb, ff0, fr0, k1)
            az[step, bi] = k1[1]
            pr[step, bi] = y[3]
            ftf[step, bi] = tf
            ftr[step, bi] = tr
            for i in range(8):
                states[step, i, bi] = y[i]
            if step == nt - 1:
                break
            for i in range(8):
                yt[i] = y[i] + 0.5 * dt * k1[i]
            _deriv8(yt, rf[2 * step + 1], rr[2 * step + 1], ms, iy, muf, mur,
                    kf, kr, cf, cr, ktf, ktr, la, lb, ff0, fr0, k2)
            for i in range(8):
                yt[i] = y[i] + 0.5 * dt * k2[i]
            _deriv8(yt, rf[2 * step + 1], rr[2 * step + 1], ms, iy, muf, mur,
                    kf, kr, cf, cr, ktf, ktr, la, lb, ff0, fr0, k3)
            for i in range(8):
                yt[i] = y[i] + dt * k3[i]
            _deriv8(yt, rf[2 * step + 2], rr[2 * step + 2], ms, iy, muf, mur,
                    kf, kr, cf, cr, ktf, ktr, la, lb, ff0, fr0, k4)
            for i in range(8):
                y[i] = y[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit(cache=True)
def _rk4_descr_kernel(par, rf, rr, dt, out):  # pragma: no cover
    """Online trapezoid accumulation of A_z^2 and pitch_rate^2 integrals plus
    per-wheel lift-off sample counts. out: (B, 4)."""
    B = par.shape[0]
    nt = (rf.shape[0] + 1) // 2
    y = np.empty(8)
    yt = np.empty(8)
    k1 = np.empty(8)
    k2 = np.empty(8)
    k3 = np.empty(8)
    k4 = np.empty(8)
    for bi in range(B):
        ms, iy, muf, mur = par[bi, 0], par[bi, 1], par[bi, 2], par[bi, 3]
        kf, kr, cf, cr = par[bi, 4], par[bi, 5], par[bi, 6], par[bi, 7]
        ktf, ktr, la, lb = par[bi, 8], par[bi, 9], par[bi, 10], par[bi, 11]
        ff0 = 9.81 * (ms * lb / (la + lb) + muf)
        fr0 = 9.81 * (ms * la / (la + lb) + mur)
        for i in range(8):
            y[i] = 0.0
        i_az = 0.0
        i_pr = 0.0
        cnt_f = 0.0
        cnt_r = 0.0
        for step in range(nt):
            tf, tr = _deriv8(y, rf[2 * step], rr[2 * step], ms, iy, muf, mur,
                             kf, kr, cf, cr, ktf, ktr, la, lb, ff0, fr0, k1)
            w = dt if 0 < step < nt - 1 else 0.5 * dt
            i_az += w * k1[1] * k1[1]
            i_pr += w * y[3] * y[3]
            if tf <= 0.0:
                cnt_f += 1.0
            if tr <= 0.0:
                cnt_r += 1.0
            if step == nt - 1:
                break
            for i in range(8):
                yt[i] = y[i] + 0.5 * dt * k1[i]
            _deriv8(yt, rf[2 * step + 1], rr[2 * step + 1], ms, iy, muf, mur,
                    kf, kr, cf, cr, ktf, ktr, la, lb, ff0, fr0, k2)
            for i in range(8):
                yt[i] = y[i] + 0.5 * dt * k2[i]
            _deriv8(yt, rf[2 * step + 1], rr[2 * step + 1], ms, iy, muf, mur,
                    kf, kr, cf, cr, ktf, ktr, la, lb, ff0, fr0, k3)
            for i in range(8):
                yt[i] = y[i] + dt * k3[i]
            _deriv8(yt, rf[2 * step + 2], rr[2 * step + 2], ms, iy, muf, mur,
                    kf, kr, cf, cr, ktf, ktr, la, lb, ff0, fr0, k4)
            for i in range(8):
                y[i] = y[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        out[bi, 0] = i_az
        out[bi, 1] = i_pr
        out[bi, 2] = cnt_f
        out[bi, 3] = cnt_r


def _rk4_trace_numpy(par, rf, rr, dt, az, pr, ftf, ftr, states):
    """Vectorized-over-batch twin of the compiled trace kernel."""
    B = par.shape[0]
    nt = az.shape[0]
    ms, iy, muf, mur, kf, kr, cf, cr, ktf, ktr, la, lb = (par[:, i] for i in range(12))
    ff0 = GRAVITY * (ms * lb / (la + lb) + muf)
    fr0 = GRAVITY * (ms * la / (la + lb) + mur)
    y = np.zeros((8, B))

    def deriv(yv, r_f, r_r):
        zs, vzs, th, vth, zuf, vzuf, zur, vzur = yv
        fsf = -kf * (zs + la * th - zuf) - cf * (vzs + la * vth - vzuf)
        fsr = -kr * (zs - lb * th - zur) - cr * (vzs - lb * vth - vzur)
        tf = np.maximum(ff0 + ktf * (r_f - zuf), 0.0)
        tr = np.maximum(fr0 + ktr * (r_r - zur), 0.0)
        d = np.empty_like(yv)
        d[0] = vzs
        d[1] = (fsf + fsr) / ms
        d[2] = vth
        d[3] = (la * fsf - lb * fsr) / iy
        d[4] = vzuf
        d[5] = (-fsf + (tf - ff0)) / muf
        d[6] = vzur
        d[7] = (-fsr + (tr - fr0)) / mur
        return d, tf, tr

    for step in range(nt):
        d_now, tf, tr = deriv(y, rf[2 * step], rr[2 * step])
        az[step] = d_now[1]
        pr[step] = y[3]
        ftf[step] = tf
        ftr[step] = tr
        states[step] = y
        if step == nt - 1:
            break
        k1 = d_now
        k2, _, _ = deriv(y + 0.5 * dt * k1, rf[2 * step + 1], rr[2 * step + 1])
        k3, _, _ = deriv(y + 0.5 * dt * k2, rf[2 * step + 1], rr[2 * step + 1])
        k4, _, _ = deriv(y + dt * k3, rf[2 * step + 2], rr[2 * step + 2])
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _run_trace(par_rows: np.ndarray, params: HalfCarParams, scenario: BumpScenario,
               use_numba: bool = _HAVE_NUMBA):
    scenario.validate_against(params)
    rf, rr = _road_tables(params, scenario)
    nt = scenario.n_steps() + 1
    B = par_rows.shape[0]
    az = np.empty((nt, B))
    pr = np.empty((nt, B))
    ftf = np.empty((nt, B))
    ftr = np.empty((nt, B))
    states = np.empty((nt, 8, B))
    kern = _rk4_trace_kernel if use_numba else _rk4_trace_numpy
    kern(par_rows, rf, rr, scenario.dt, az, pr, ftf, ftr, states)
    return az, pr, ftf, ftr, states


def simulate(params: HalfCarParams, scenario: BumpScenario,
             use_numba: bool = _HAVE_NUMBA) -> SignalTrace:
    """Integrate the bump response and return the full signal trace."""
    az, pr, ftf, ftr, states = _run_trace(params.as_row()[None, :], params,
                                          scenario, use_numba=use_numba)
    if not np.isfinite(az).all():
        raise InstabilityError("simulation blew up (non-finite state)",
                               params=params)
    nt = az.shape[0]
    time = np.arange(nt) * scenario.dt
    return SignalTrace(time=time, a_z=az[:, 0], pitch_rate=pr[:, 0],
                       f_tf=ftf[:, 0], f_tr=ftr[:, 0], states=states[:, :, 0])


def rms(signal, time) -> float:
    """Trapezoidal sqrt((1/T) * integral signal(t)^2 dt)."""
    sig = np.asarray(signal, dtype=float)
    t = np.asarray(time, dtype=float)
    if sig.size == 0 or sig.size != t.size:
        raise InvalidValueError("signal and time grids must be nonempty and equal")
    if sig.size == 1:
        return float(abs(sig[0]))
    span = t[-1] - t[0]
    return float(np.sqrt(np.trapezoid(sig ** 2, t) / span))


def grip_loss_time(trace: SignalTrace) -> float:
    """Cumulative lift-off duration, per-wheel samples added: dt times the
    number of samples where a tire's normal force is non-positive."""
    dt = trace.dt
    return float(dt * (np.count_nonzero(trace.f_tf <= 0.0)
                       + np.count_nonzero(trace.f_tr <= 0.0)))


def comfort_metrics(params: HalfCarParams, scenario: BumpScenario,
                    trace: SignalTrace | None = None) -> tuple[float, float, float]:
    """(RMS A_z, RMS pitch rate, grip-loss time) for one configuration."""
    if trace is None:
        trace = simulate(params, scenario)
    return (rms(trace.a_z, trace.time), rms(trace.pitch_rate, trace.time),
            grip_loss_time(trace))


def comfort_metrics_batch(par_rows: np.ndarray, base: HalfCarParams,
                          scenario: BumpScenario, chunk: int = 50000) -> np.ndarray:
    """(B, 3) descriptor table for a batch of parameter rows (PARAM_COLS
    order). Uses online accumulation, so no traces are materialized."""
    par_rows = np.ascontiguousarray(np.atleast_2d(par_rows), dtype=float)
    if par_rows.shape[1] != len(PARAM_COLS):
        raise InvalidValueError(f"parameter rows need {len(PARAM_COLS)} columns")
    scenario.validate_against(base)
    rf, rr = _road_tables(base, scenario)
    span = scenario.duration
    dt = scenario.dt
    out = np.empty((par_rows.shape[0], 3))
    for lo in range(0, par_rows.shape[0], chunk):
        rows = par_rows[lo:lo + chunk]
        acc = np.empty((rows.shape[0], 4))
        if _HAVE_NUMBA:
            _rk4_descr_kernel(rows, rf, rr, dt, acc)
        else:
            acc = _descr_from_traces(rows, base, scenario)
        if not np.isfinite(acc).all():
            bad = int(np.flatnonzero(~np.isfinite(acc).all(axis=1))[0]) + lo
            raise InstabilityError(
                f"simulation blew up for parameter row {bad}",
                params=dict(zip(PARAM_COLS, par_rows[bad])))
        out[lo:lo + chunk, 0] = np.sqrt(acc[:, 0] / span)
        out[lo:lo + chunk, 1] = np.sqrt(acc[:, 1] / span)
        out[lo:lo + chunk, 2] = dt * (acc[:, 2] + acc[:, 3])
    return out


def _descr_from_traces(rows, base, scenario):
    """Fallback descriptor accumulation via full traces (numba absent)."""
    az, pr, ftf, ftr, _ = _run_trace(rows, base, scenario, use_numba=False)
    nt = az.shape[0]
    w = np.full(nt, scenario.dt)
    w[0] = w[-1] = scenario.dt / 2.0
    acc = np.empty((rows.shape[0], 4))
    acc[:, 0] = w @ (az ** 2)
    acc[:, 1] = w @ (pr ** 2)
    acc[:, 2] = np.count_nonzero(ftf <= 0.0, axis=0)
    acc[:, 3] = np.count_nonzero(ftr <= 0.0, axis=0)
    return acc


def export_trace_csv(trace: SignalTrace, path) -> None:
    """time, a_z, pitch_rate, f_tf, f_tr as CSV (full precision)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "a_z", "pitch_rate", "f_tf", "f_tr"])
        for k in range(trace.time.size):
            w.writerow([repr(float(v)) for v in
                        (trace.time[k], trace.a_z[k], trace.pitch_rate[k],
                         trace.f_tf[k], trace.f_tr[k])])
