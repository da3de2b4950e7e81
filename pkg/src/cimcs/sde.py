"""Stochastic dynamics of the optical support-estimation models.

Three Langevin models of a network of degenerate optical parametric
oscillator (DOPO) pulses estimate the support vector.  Time is measured in
photon lifetimes and each model is integrated with fixed-step Euler-Maruyama,
dW = sqrt(dt) * Normal(0, 1) per pulse and per noise channel.

Open-loop (truncated-Wigner, amplitudes c_r, s_r):

    dc_r/dt = [-1 + p - (c_r^2 + s_r^2)] c_r + K (|h_r| - eta)
              + g sqrt(c_r^2 + s_r^2 + 1/2) W_r1
    ds_r/dt = [-1 - p - (c_r^2 + s_r^2)] s_r
              + g sqrt(c_r^2 + s_r^2 + 1/2) W_r2

with the Heaviside-binarised local field h of ``local_field_ol`` and the
quadratic pump ramp p(t) = 1.5 (t/5)^2 (clamped at 1.5 past t = 5).

Closed-loop with chaotic amplitude control (CAC) shares the injection

    (dmu_r/dt)_inj = j e_r (R_r h_r - (eta^2/4) sqrt(tau/g^2))
    de_r/dt       = -beta (g^2 mu~_r^2 - tau) e_r
    mu~_r         = mu_r + sqrt(1/(4j)) W_r

where mu~ is the homodyne measurement record entering both the feedback and
the final binarisation, and h is the field of ``local_field_cac``.  One
Gaussian draw per pulse per step is shared between the measurement (as the
white-noise sample w/sqrt(dt)) and the SDE increment (as sqrt(dt) w).  The
error variable is advanced by the exact exponential of its frozen rate,
e <- e * exp(-beta (g^2 mu~^2 - tau) dt), which preserves positivity and is
drift-equivalent to an Euler step at first order.

Wigner CAC (mean mu_r, variance V_r):

    dmu_r/dt = -(1 - p + j) mu_r - g^2 mu_r^3 + sqrt(j) (V_r - 1/2) W_r
               + K (dmu_r/dt)_inj
    dV_r/dt  = -2 (1 - p + j) V_r - 6 g^2 mu_r^2 V_r + 1 + j + 2 g^2 mu_r^2
               - 2 j (V_r - 1/2)^2          (integrated deterministically)

Positive-P CAC (mean mu_r, fluctuation variances n_r, m_r):

    dmu_r/dt = -(1 - p + j) mu_r - g^2 mu_r (mu_r^2 + 2 n_r + m_r)
               + sqrt(j) (m_r + n_r) W_r + K (dmu_r/dt)_inj
    dn_r/dt  = -2 (1 + j) n_r + 2 p m_r - 2 g^2 mu_r^2 (2 n_r + m_r)
               - j (m_r + n_r)^2
    dm_r/dt  = -2 (1 + j) m_r + 2 p n_r - 2 g^2 mu_r^2 (2 m_r + n_r) + p
               - g^2 (mu_r^2 + m_r) - j (m_r + n_r)^2

Both closed-loop models use the sigmoid pump ramp
p(t) = (p_thr - d) + 2d / (1 + exp(-(t - 4)/2)).
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .qubo import local_field_cac, local_field_ol
from .streams import generator

MODEL_WIGNER_OL = "wigner_ol"
MODEL_WIGNER_CAC = "wigner_cac"
MODEL_POSITIVE_P = "positive_p"
MODELS = (MODEL_WIGNER_OL, MODEL_WIGNER_CAC, MODEL_POSITIVE_P)
CAC_MODELS = (MODEL_WIGNER_CAC, MODEL_POSITIVE_P)


class SdeIntegrationError(RuntimeError):
    """Raised when a trajectory leaves the representable range."""

    def __init__(self, message, model=None, step=None, t=None):
        super().__init__(message)
        self.model = model
        self.step = step
        self.t = t


@dataclass(frozen=True)
class SdeParams:
    """Integration parameters for one trajectory.

    K is the feedback strength (the open-loop model reads it as its injection
    gain); j, beta and tau are ignored by the open-loop model.  T is the
    horizon in photon lifetimes, integrated in ``steps`` Euler steps.
    """

    g2: float = 1e-7
    j: float = 1.0
    K: float = 1.0
    beta: float = 1.0
    tau: float = 1.0
    p_thr: float = 1.0
    d: float = 0.6
    T: float = 20.0
    steps: int = 1000
    seed: int = 0
    noise_on: bool = True

    def __post_init__(self):
        if not (self.g2 > 0 and self.j > 0 and self.beta > 0 and self.tau > 0):
            raise ValueError("g2, j, beta and tau must be positive")
        if not (self.T > 0 and self.steps >= 1):
            raise ValueError("need T > 0 and steps >= 1")
        for name in ("g2", "j", "K", "beta", "tau", "p_thr", "d", "T"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def dt(self):
        return self.T / self.steps

    @classmethod
    def cac_defaults(cls, **kw):
        """Closed-loop defaults: 20 lifetimes in 1000 steps, sigmoid pump."""
        return cls(**{**dict(g2=1e-7, j=1.0, K=1.0, beta=1.0, tau=1.0,
                             p_thr=1.0, d=0.6, T=20.0, steps=1000), **kw})

    @classmethod
    def ol_defaults(cls, **kw):
        """Open-loop defaults: 5 lifetimes in 50 steps, quadratic pump ramp."""
        return cls(**{**dict(g2=1e-7, K=0.25, T=5.0, steps=50), **kw})


@dataclass
class WignerOlState:
    c: np.ndarray
    s: np.ndarray
    t: float = 0.0


@dataclass
class WignerCacState:
    mu: np.ndarray
    V: np.ndarray
    e: np.ndarray
    mu_tilde: np.ndarray
    t: float = 0.0


@dataclass
class PositivePState:
    mu: np.ndarray
    n: np.ndarray
    m: np.ndarray
    e: np.ndarray
    mu_tilde: np.ndarray
    t: float = 0.0


def pump_cac(t, p_thr, d):
    """Sigmoid pump ramp from p_thr - d to p_thr + d, centred at t = 4."""
    return (p_thr - d) + 2.0 * d / (1.0 + np.exp(-(t - 4.0) / 2.0))


def pump_ol(t):
    """Quadratic pump ramp 1.5 (t/5)^2, held at 1.5 once t exceeds 5."""
    return 1.5 * (min(t, 5.0) / 5.0) ** 2


def init_state(model, n):
    """Fresh trajectory state: c = s = 0 (open loop); mu = 0, V = 1/2, e = 1
    (Wigner CAC); mu = n = m = 0, e = 1 (positive-P)."""
    if model == MODEL_WIGNER_OL:
        return WignerOlState(c=np.zeros(n), s=np.zeros(n))
    if model == MODEL_WIGNER_CAC:
        return WignerCacState(mu=np.zeros(n), V=np.full(n, 0.5),
                              e=np.ones(n), mu_tilde=np.zeros(n))
    if model == MODEL_POSITIVE_P:
        return PositivePState(mu=np.zeros(n), n=np.zeros(n), m=np.zeros(n),
                              e=np.ones(n), mu_tilde=np.zeros(n))
    raise ValueError(f"unknown model {model!r}")


def _check_finite(model, t, *arrays):
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise SdeIntegrationError(
                f"non-finite state in {model} trajectory at t={t:.6g}",
                model=model, t=t)


def step_wigner_ol(state, problem, R, eta, params, rng):
    """One Euler-Maruyama step of the open-loop model.

    Noise order: a single standard_normal((2, N)) draw; row 0 drives c,
    row 1 drives s.
    """
    dt = params.dt
    c, s, t = state.c, state.s, state.t
    p = pump_ol(t)
    h = local_field_ol(problem, R, c)
    amp2 = c * c + s * s
    drift_c = (-1.0 + p - amp2) * c + params.K * (np.abs(h) - eta)
    drift_s = (-1.0 - p - amp2) * s
    c_new = c + drift_c * dt
    s_new = s + drift_s * dt
    if params.noise_on:
        w = rng.standard_normal((2, c.shape[0]))
        namp = np.sqrt(params.g2) * np.sqrt(amp2 + 0.5) * np.sqrt(dt)
        c_new += namp * w[0]
        s_new += namp * w[1]
    t_new = t + dt
    _check_finite(MODEL_WIGNER_OL, t_new, c_new, s_new)
    return WignerOlState(c=c_new, s=s_new, t=t_new)


def _cac_measure_and_inject(state, problem, R, eta, params, rng):
    """Shared closed-loop plumbing: measurement record, local field, injection.

    Returns (mu_tilde, injection drift, sqrt(dt) * w, new e).
    """
    dt = params.dt
    mu, e, t = state.mu, state.e, state.t
    if params.noise_on:
        w = rng.standard_normal(mu.shape[0])
        # the same white-noise sample w/sqrt(dt) enters the measurement
        # record; the SDE increment below uses sqrt(dt) * w
        mu_tilde = mu + np.sqrt(1.0 / (4.0 * params.j)) * (w / np.sqrt(dt))
        dW = np.sqrt(dt) * w
    else:
        mu_tilde = mu.copy()
        dW = 0.0
    h = local_field_cac(problem, R, mu_tilde, params.tau, params.g2)
    c_amp = np.sqrt(params.tau / params.g2)
    inj = params.j * e * (R * h - 0.25 * eta * eta * c_amp)
    e_new = e * np.exp(-params.beta * (params.g2 * mu_tilde**2 - params.tau) * dt)
    return mu_tilde, inj, dW, e_new


def step_wigner_cac(state, problem, R, eta, params, rng):
    """One Euler-Maruyama step of the Wigner closed-loop model.

    Noise order: a single standard_normal(N) draw shared between measurement
    and SDE increment.
    """
    dt = params.dt
    mu, V, t = state.mu, state.V, state.t
    mu_tilde, inj, dW, e_new = _cac_measure_and_inject(
        state, problem, R, eta, params, rng)
    p = pump_cac(t, params.p_thr, params.d)
    g2 = params.g2
    drift_mu = -(1.0 - p + params.j) * mu - g2 * mu**3 + params.K * inj
    mu_new = mu + drift_mu * dt + np.sqrt(params.j) * (V - 0.5) * dW
    drift_V = (-2.0 * (1.0 - p + params.j) * V - 6.0 * g2 * mu**2 * V
               + 1.0 + params.j + 2.0 * g2 * mu**2
               - 2.0 * params.j * (V - 0.5) ** 2)
    V_new = V + drift_V * dt
    t_new = t + dt
    _check_finite(MODEL_WIGNER_CAC, t_new, mu_new, V_new, e_new)
    if not np.all(e_new > 0.0):
        raise SdeIntegrationError(
            f"error variable left (0, inf) at t={t_new:.6g}",
            model=MODEL_WIGNER_CAC, t=t_new)
    return WignerCacState(mu=mu_new, V=V_new, e=e_new,
                          mu_tilde=mu_tilde, t=t_new)


def step_positive_p(state, problem, R, eta, params, rng):
    """One Euler-Maruyama step of the positive-P closed-loop model.

    Noise order matches the Wigner closed-loop model.
    """
    dt = params.dt
    mu, n, m, t = state.mu, state.n, state.m, state.t
    mu_tilde, inj, dW, e_new = _cac_measure_and_inject(
        state, problem, R, eta, params, rng)
    p = pump_cac(t, params.p_thr, params.d)
    g2, j = params.g2, params.j
    drift_mu = (-(1.0 - p + j) * mu - g2 * mu * (mu**2 + 2.0 * n + m)
                + params.K * inj)
    mu_new = mu + drift_mu * dt + np.sqrt(j) * (m + n) * dW
    mu2 = mu**2
    drift_n = (-2.0 * (1.0 + j) * n + 2.0 * p * m
               - 2.0 * g2 * mu2 * (2.0 * n + m) - j * (m + n) ** 2)
    drift_m = (-2.0 * (1.0 + j) * m + 2.0 * p * n
               - 2.0 * g2 * mu2 * (2.0 * m + n) + p
               - g2 * (mu2 + m) - j * (m + n) ** 2)
    n_new = n + drift_n * dt
    m_new = m + drift_m * dt
    t_new = t + dt
    _check_finite(MODEL_POSITIVE_P, t_new, mu_new, n_new, m_new, e_new)
    if not np.all(e_new > 0.0):
        raise SdeIntegrationError(
            f"error variable left (0, inf) at t={t_new:.6g}",
            model=MODEL_POSITIVE_P, t=t_new)
    return PositivePState(mu=mu_new, n=n_new, m=m_new, e=e_new,
                          mu_tilde=mu_tilde, t=t_new)


_STEPPERS = {
    MODEL_WIGNER_OL: step_wigner_ol,
    MODEL_WIGNER_CAC: step_wigner_cac,
    MODEL_POSITIVE_P: step_positive_p,
}


@dataclass
class SdeTrace:
    """Per-pulse amplitude (and error) snapshots along one trajectory."""

    model: str
    g2: float
    times: np.ndarray          # (k,)
    amp: np.ndarray            # (k, N) mu_tilde for closed loop, c for open loop
    err: np.ndarray = field(default=None)  # (k, N) error variable, closed loop only

    def to_csv(self, path):
        """Columns (t, r, amp, e); closed-loop amplitudes are written as
        g * mu_tilde (the normalised measured amplitude)."""
        scale = np.sqrt(self.g2) if self.model != MODEL_WIGNER_OL else 1.0
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "r", "amp", "e"])
            for k in range(self.times.shape[0]):
                t = repr(float(self.times[k]))
                for r in range(self.amp.shape[1]):
                    e_val = "" if self.err is None else repr(float(self.err[k, r]))
                    wr.writerow([t, r, repr(float(self.amp[k, r] * scale)), e_val])


def readout(model, state):
    """Support vector at the end of a trajectory: Heaviside of the measured
    amplitude (closed loop) or of the in-phase amplitude (open loop)."""
    amp = state.c if model == MODEL_WIGNER_OL else state.mu_tilde
    return (amp > 0.0).astype(np.uint8)


def cim_support_estimation(model, problem, R, eta, params, rng=None,
                           trace_every=0):
    """Integrate one trajectory and binarise the final amplitudes.

    Returns (sigma, trace); trace is None unless trace_every > 0, in which
    case amplitudes (and error variables for the closed-loop models) are
    recorded every ``trace_every`` steps, including the initial and final
    states.  The trajectory is deterministic given (problem, R, eta, params)
    and the seed; pass an explicit numpy Generator to share one stream across
    several calls.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}, expected one of {MODELS}")
    R = np.asarray(R, dtype=float)
    if R.shape != (problem.n,):
        raise ValueError("R must be a length-N vector")
    if rng is None:
        rng = generator(params.seed)
    step_fn = _STEPPERS[model]
    state = init_state(model, problem.n)

    rec_t, rec_amp, rec_err = [], [], []

    def record():
        rec_t.append(state.t)
        if model == MODEL_WIGNER_OL:
            rec_amp.append(state.c.copy())
        else:
            rec_amp.append(state.mu_tilde.copy())
            rec_err.append(state.e.copy())

    if trace_every > 0:
        record()
    for k in range(params.steps):
        try:
            state = step_fn(state, problem, R, eta, params, rng)
        except SdeIntegrationError as exc:
            exc.step = k
            raise
        if trace_every > 0 and ((k + 1) % trace_every == 0 or k + 1 == params.steps):
            record()

    trace = None
    if trace_every > 0:
        trace = SdeTrace(model=model, g2=params.g2,
                         times=np.asarray(rec_t),
                         amp=np.asarray(rec_amp),
                         err=np.asarray(rec_err) if rec_err else None)
    return readout(model, state), trace
