"""Time integration of ``A_div alpha' = nu A_lap alpha + g(alpha)``.

Three schemes are available:

``explicit_euler``
    ``alpha + tau A_div^{-1} (nu A_lap alpha + g(alpha))``.
``semi_implicit_euler``
    ``alpha + tau (A_div - nu tau A_lap)^{-1} (nu A_lap alpha + g(alpha))``.
``imex_rk3``
    The four-stage, third-order, L-stable IMEX Runge-Kutta scheme ARS(4,4,3)
    with the viscous term implicit and ``g`` explicit. All implicit stages
    share the diagonal coefficient 1/2, so one factorization of
    ``A_div - (nu tau / 2) A_lap`` serves every stage. The tableaux are
    listed in ``docs/tableaux.md``.
"""

import time
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BlowUpError, ConfigError, DomainError
from .fields import NodalField, discrete_l2_norm

SCHEMES = ("explicit_euler", "semi_implicit_euler", "imex_rk3")
BLOWUP_LIMIT = 1e12

# ARS(4,4,3). Row i lists coefficients of stages 0..i-1 (explicit) and
# 1..i (implicit); stage 0 is the step's initial value.
IMEX_EXPLICIT = (
    (),
    (1 / 2,),
    (11 / 18, 1 / 18),
    (5 / 6, -5 / 6, 1 / 2),
    (1 / 4, 7 / 4, 3 / 4, -7 / 4),
)
IMEX_IMPLICIT = (
    (),
    (1 / 2,),
    (1 / 6, 1 / 2),
    (-1 / 2, 1 / 2, 1 / 2),
    (3 / 2, -3 / 2, 1 / 2, 1 / 2),
)
IMEX_GAMMA = 1 / 2
IMEX_NODES = (0.0, 1 / 2, 2 / 3, 1 / 2, 1.0)


@dataclass(frozen=True)
class SchemeConfig:
    scheme: str
    tau: float
    T: float

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not (0.0 < self.tau <= self.T):
            raise ConfigError("need 0 < tau <= T")


@dataclass(frozen=True)
class Diagnostic:
    t: float
    e_u: float
    e_p: float
    wall_ms: float


@dataclass
class SolverState:
    """Time, reduced coefficients and the operator bundle they live on.

    ``t`` is recomputed as ``t0 + step * tau`` so that runs and resumed runs
    see identical time values.
    """

    ops: object
    alpha: np.ndarray
    t: float = 0.0
    step: int = 0
    t0: float = 0.0
    history: deque = field(default_factory=lambda: deque(maxlen=10000))

    def velocity_nodes(self):
        return self.ops.velocity_nodes(self.alpha)

    def velocity(self):
        return self.ops.velocity_expansion(self.alpha)

    def e_u(self):
        return discrete_l2_norm(self.velocity_nodes())


def init_state(ops, u0, t=0.0):
    """Interpolate ``u0`` with the divergence-free kernel.

    Parameters
    ----------
    ops : NSEOperators
    u0 : NodalField, (N, 3) array, or callable on (N, 3) points
    """
    if callable(u0):
        u0 = u0(ops.ps.points)
    if not isinstance(u0, NodalField):
        u0 = NodalField(ops.ps, u0)
    alpha = ops.div.solve(u0.reduced())
    return SolverState(ops, alpha, t=float(t), step=0, t0=float(t))


def _check(alpha, state):
    if not np.all(np.isfinite(alpha)) or np.max(np.abs(alpha), initial=0.0) > BLOWUP_LIMIT:
        raise BlowUpError(f"solution blew up after t={state.t:g}", last_state=state)


def _advance(state, alpha, tau):
    _check(alpha, state)
    return replace(state, alpha=alpha, t=state.t + tau, step=state.step + 1)


def step_explicit_euler(state, params, forcing, tau):
    ops = state.ops
    a = state.alpha
    rhs = ops.laplace_term(a, params.nu) + ops.rhs(a, state.t, params, forcing)
    return _advance(state, a + tau * ops.div.solve(rhs), tau)


def step_semi_implicit_euler(state, params, forcing, tau):
    ops = state.ops
    a = state.alpha
    rhs = ops.laplace_term(a, params.nu) + ops.rhs(a, state.t, params, forcing)
    return _advance(state, a + tau * ops.implicit_system(tau * params.nu).solve(rhs), tau)


def step_imex_rk3(state, params, forcing, tau):
    ops = state.ops
    t, nu = state.t, params.nu
    c = IMEX_GAMMA * tau * nu
    system = ops.implicit_system(c)
    base = ops.mass(state.alpha)
    explicit = [ops.rhs(state.alpha, t, params, forcing, mass=base)]
    implicit = [None]
    y = state.alpha
    for i in range(1, 5):
        acc = np.zeros_like(base)
        for j, a in enumerate(IMEX_EXPLICIT[i]):
            acc += a * explicit[j]
        for j, a in enumerate(IMEX_IMPLICIT[i][:-1], start=1):
            acc += a * implicit[j]
        stage_rhs = base + tau * acc
        y = system.solve(stage_rhs)
        if i == 4:
            break
        mass = ops.mass(y)
        # (A_div - c A_lap) y = stage_rhs gives nu A_lap y without another product
        implicit.append((mass - stage_rhs) / (IMEX_GAMMA * tau) if c else ops.laplace_term(y, nu))
        explicit.append(ops.rhs(y, t + IMEX_NODES[i] * tau, params, forcing, mass=mass))
    return _advance(state, y, tau)


STEPPERS = {
    "explicit_euler": step_explicit_euler,
    "semi_implicit_euler": step_semi_implicit_euler,
    "imex_rk3": step_imex_rk3,
}


def diagnose(state, params, forcing, wall_ms=0.0):
    """``e_u`` and ``e_p`` at the state's time (one right-hand-side evaluation)."""
    ops = state.ops
    ops.rhs(state.alpha, state.t, params, forcing)
    e_p = discrete_l2_norm(ops.pressure_nodes(state.t))
    return Diagnostic(state.t, state.e_u(), e_p, wall_ms)


def run(state, scheme, params, forcing, T=None, sample_interval=None,
        snapshot_times=(), on_snapshot=None, on_sample=None, on_step=None,
        sample_start=True):
    """Advance ``state`` to ``T`` with fixed steps.

    Parameters
    ----------
    state : SolverState
    scheme : SchemeConfig
    params : PhysicalParams
    forcing : callable ``(t, x) -> (N, 3)``
    T : float, optional
        Final time, ``scheme.T`` by default.
    sample_interval : float, optional
        Spacing of diagnostics samples; every step by default. A sample is
        always taken at the start and at ``T``.
    snapshot_times : sequence of float
        ``on_snapshot(state)`` fires at the first step time reaching each.
    on_sample, on_step : callables
        ``on_sample(diagnostic, state)`` and ``on_step(state)`` hooks.
    sample_start : bool
        Take a sample before the first step. Resumed runs switch this off
        when the checkpoint step is not a sampling step.

    Returns
    -------
    state : SolverState
    diagnostics : list of Diagnostic
    """
    T = scheme.T if T is None else float(T)
    tau = scheme.tau
    if T < state.t - 1e-12 * max(1.0, abs(T)):
        raise DomainError(f"final time {T} lies before the current time {state.t}")
    stepper = STEPPERS[scheme.scheme]
    every = 1 if not sample_interval else max(1, int(round(sample_interval / tau)))
    pending = sorted(float(s) for s in snapshot_times)
    start = time.perf_counter()
    diags = []

    def sample():
        d = diagnose(state, params, forcing, 1e3 * (time.perf_counter() - start))
        diags.append(d)
        state.history.append(d)
        if on_sample is not None:
            on_sample(d, state)

    def snapshots():
        while pending and state.t >= pending[0] - 1e-9 * max(1.0, pending[0]):
            pending.pop(0)
            if on_snapshot is not None:
                on_snapshot(state)

    # grid: t0 + k tau, with the final step shortened to land on T
    n_full = int(np.floor((T - state.t0) / tau * (1 + 1e-12) + 1e-9))
    if sample_start:
        sample()
    snapshots()
    while True:
        nxt = state.t0 + (state.step + 1) * tau
        if state.step < n_full and nxt <= T + 1e-12 * max(1.0, abs(T)):
            state = stepper(state, params, forcing, tau)
            state.t = state.t0 + state.step * tau
        elif T - state.t > 1e-12 * max(1.0, abs(T)):
            state = stepper(state, params, forcing, T - state.t)
            state.t = T
        else:
            break
        if on_step is not None:
            on_step(state)
        snapshots()
        last = abs(state.t - T) <= 1e-12 * max(1.0, abs(T))
        if state.step % every == 0 or last:
            sample()
    return state, diags
