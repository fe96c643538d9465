"""Damped-forced Boussinesq system in (u, w) form on the unit circle.

    u_t - u_txx - u_xx + w_x + u u_x = f
    w_t + (w u)_x - w_xx = 0

The u equation is solved for u_t by inverting (1 - d_xx), after which
both equations are diagonal-linear plus quadratic transport in Fourier
space.  Time stepping is second-order exponential time differencing
(ETDRK2, Cox & Matthews): both diagonal linear symbols, including the
stiff -4 pi^2 k^2 of the w diffusion, are integrated exactly and the
transport terms explicitly.  The scheme is one-step, so a state plus the
forcing fully determines the future and checkpoints resume bit-exactly.

The tangent propagator in :mod:`boussinesq.tangent` is the exact
derivative of this discrete map; :func:`etd_step_arrays` is shared by both.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InvalidState, PositivityLost
from .spectral import Field, Grid, h1_norm, l2_norm

log = logging.getLogger(__name__)

MEAN_TOL = 1e-10


@dataclass(frozen=True)
class State:
    """Velocity ``u`` (mean zero), height ``w`` (mean one, positive), time ``t``."""

    u: Field
    w: Field
    t: float = 0.0

    def __post_init__(self):
        if self.u.grid != self.w.grid:
            raise InvalidState("u and w live on different grids")
        mu, mw = self.u.mean(), self.w.mean()
        if abs(mu) >= MEAN_TOL:
            raise InvalidState(f"mean(u) = {mu:.3e}, must vanish")
        if abs(mw - 1.0) >= MEAN_TOL:
            raise InvalidState(f"mean(w) - 1 = {mw - 1.0:.3e}, must vanish")
        if self.w.min() <= 0.0:
            raise InvalidState(f"min(w) = {self.w.min():.6g}, must be positive")
        object.__setattr__(self, "t", float(self.t))

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @property
    def eta(self) -> Field:
        return self.w - 1.0

    @classmethod
    def equilibrium(cls, grid: Grid, t: float = 0.0) -> State:
        return cls(Field.zeros(grid), Field.constant(grid, 1.0), t)


ForcingMode = tuple  # (k, cosine amplitude, sine amplitude)


@dataclass(frozen=True)
class SolverConfig:
    """Discretization and forcing for a run.

    ``forcing`` lists ``(k, a, b)`` triples meaning
    ``f(x) = sum a cos(2 pi k x) + b sin(2 pi k x)``.  ``nonlinearity`` scales
    the quadratic terms; 0 gives the system linearized at rest.
    """

    n: int = 128
    dt: float = 1e-3
    t_end: float = 20.0
    forcing: tuple = ()
    output_every: int = 100
    scheme_order: int = 2
    nonlinearity: float = 1.0

    def __post_init__(self):
        Grid(self.n)
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be >= 0, got {self.t_end}")
        if int(self.output_every) != self.output_every or self.output_every < 1:
            raise ValueError(f"output_every must be a positive integer, got {self.output_every}")
        if self.scheme_order != 2:
            raise ValueError("only scheme_order = 2 is implemented")
        modes = []
        for entry in self.forcing:
            k, a, b = entry
            if int(k) != k:
                raise ValueError(f"forcing mode must be an integer, got {k}")
            k = int(k)
            if k == 0:
                raise ValueError("forcing must be mean-free: a k = 0 entry is not allowed")
            if abs(k) > self.n // 2 - 1:
                raise ValueError(f"forcing mode {k} not representable on n = {self.n}")
            modes.append((k, float(a), float(b)))
        object.__setattr__(self, "forcing", tuple(modes))

    @property
    def grid(self) -> Grid:
        return Grid(self.n)

    def forcing_field(self, grid: Optional[Grid] = None) -> Field:
        return forcing_field(grid or self.grid, self.forcing)


def forcing_field(grid: Grid, modes: Sequence[ForcingMode]) -> Field:
    vals = np.zeros(grid.n)
    for k, a, b in modes:
        if k == 0:
            raise ValueError("forcing must be mean-free: a k = 0 entry is not allowed")
        arg = 2.0 * np.pi * k * grid.x
        vals += a * np.cos(arg) + b * np.sin(arg)
    return Field(grid, vals)


def stable_dt(grid: Grid, u_max: float) -> float:
    """Advisory advective bound 0.25 / (n max(1, |u|_inf))."""
    return 0.25 / (grid.n * max(1.0, u_max))


# --------------------------------------------------------------------------
# Spectral right-hand side


def _phi1(z: np.ndarray) -> np.ndarray:
    out = np.ones_like(z)
    nz = z != 0
    out[nz] = np.expm1(z[nz]) / z[nz]
    return out


def _phi2(z: np.ndarray) -> np.ndarray:
    # (e^z - 1 - z) / z^2, series near 0 to dodge cancellation
    out = np.empty_like(z)
    small = np.abs(z) < 0.1
    zs = z[small]
    term = np.full_like(zs, 0.5)
    acc = term.copy()
    for j in range(3, 12):
        term = term * zs / j
        acc = acc + term
    out[small] = acc
    zb = z[~small]
    out[~small] = (np.expm1(zb) - zb) / zb**2
    return out


class _Operators:
    """Per-(n, dt) linear symbols and ETD weights on the half spectrum."""

    def __init__(self, n: int, dt: float):
        g = Grid(n)
        self.grid = g
        self.dt = dt
        k2 = g.kappa**2
        self.lin_u = -k2 / g.helmholtz_symbol
        self.lin_w = -k2
        self.inv_helm = 1.0 / g.helmholtz_symbol
        self.ik = g.ik
        self.mask = g.dealias_mask
        self.exp_u = np.exp(dt * self.lin_u)
        self.exp_w = np.exp(dt * self.lin_w)
        self.phi1_u = dt * _phi1(dt * self.lin_u)
        self.phi1_w = dt * _phi1(dt * self.lin_w)
        self.phi2_u = dt * _phi2(dt * self.lin_u)
        self.phi2_w = dt * _phi2(dt * self.lin_w)

    def ddx_dealiased(self, values: np.ndarray) -> np.ndarray:
        """Dealiased spectral derivative of grid data (last axis)."""
        return np.where(self.mask, self.ik * self.grid.rfft(values), 0.0)


@lru_cache(maxsize=32)
def operators(n: int, dt: float) -> _Operators:
    return _Operators(n, float(dt))


def nonlinear_terms(ops: _Operators, U, W, F, gamma: float):
    """Explicit parts of the tendencies for half spectra ``U``, ``W``.

    Returns the grid values of u and w as well, since the tangent
    linearization needs them at the same stage.
    """
    g = ops.grid
    u = g.irfft(U)
    w = g.irfft(W)
    nu = (F - ops.ik * W - gamma * ops.ddx_dealiased(0.5 * u * u)) * ops.inv_helm
    nw = -ops.ddx_dealiased(u * (1.0 + gamma * (w - 1.0)))
    return nu, nw, u, w


def tangent_terms(ops: _Operators, u, w, V, H, gamma: float):
    """Derivative of :func:`nonlinear_terms` at grid data (u, w) applied to (V, H).

    ``V``/``H`` may carry a leading batch axis.
    """
    g = ops.grid
    v = g.irfft(V)
    h = g.irfft(H)
    dv = (-ops.ik * H - gamma * ops.ddx_dealiased(u * v)) * ops.inv_helm
    dh = -ops.ddx_dealiased(v * (1.0 + gamma * (w - 1.0)) + gamma * u * h)
    return dv, dh


def etd_step_arrays(ops: _Operators, U, W, F, gamma: float, tangents=None):
    """One ETDRK2 step on half spectra, optionally with tangent spectra.

    ``tangents`` is ``(V, H)`` with shape ``(m, n/2+1)`` or ``(n/2+1,)``; the
    returned tangent is the exact derivative of the returned state with
    respect to ``(U, W)`` in that direction.
    """
    nu0, nw0, u0, w0 = nonlinear_terms(ops, U, W, F, gamma)
    Ua = ops.exp_u * U + ops.phi1_u * nu0
    Wa = ops.exp_w * W + ops.phi1_w * nw0
    nua, nwa, ua, wa = nonlinear_terms(ops, Ua, Wa, F, gamma)
    U1 = Ua + ops.phi2_u * (nua - nu0)
    W1 = Wa + ops.phi2_w * (nwa - nw0)
    if tangents is None:
        return U1, W1, None
    V, H = tangents
    dv0, dh0 = tangent_terms(ops, u0, w0, V, H, gamma)
    Va = ops.exp_u * V + ops.phi1_u * dv0
    Ha = ops.exp_w * H + ops.phi1_w * dh0
    dva, dha = tangent_terms(ops, ua, wa, Va, Ha, gamma)
    V1 = Va + ops.phi2_u * (dva - dv0)
    H1 = Ha + ops.phi2_w * (dha - dh0)
    V1[..., 0] = 0.0
    H1[..., 0] = 0.0
    return U1, W1, (V1, H1)


def _advance_values(ops: _Operators, u, w, F, gamma, t_new, tangents=None):
    """Grid values in, grid values out; pins means and checks positivity."""
    g = ops.grid
    U, W = g.rfft(u), g.rfft(w)
    U1, W1, tan = etd_step_arrays(ops, U, W, F, gamma, tangents)
    drift_u, drift_w = abs(U1[0].real), abs(W1[0].real - 1.0)
    if drift_u > 1e-12 or drift_w > 1e-12:
        log.warning("mean drift %.3e / %.3e beyond roundoff at t = %.6g", drift_u, drift_w, t_new)
    U1[0] = 0.0
    W1[0] = 1.0
    u1 = g.irfft(U1)
    w1 = g.irfft(W1)
    j = int(np.argmin(w1))
    if not w1[j] > 0.0:
        raise PositivityLost(t_new, float(g.x[j]), float(w1[j]))
    return u1, w1, tan


# --------------------------------------------------------------------------
# Public operations


def rhs(state: State, f: Field, nonlinearity: float = 1.0) -> tuple[Field, Field]:
    """Tendencies (u_t, w_t) of the continuous system at ``state``."""
    g = state.grid
    ops = operators(g.n, 1.0)
    U, W = state.u.rfft, state.w.rfft
    nu, nw, _, _ = nonlinear_terms(ops, U, W, f.rfft, nonlinearity)
    du = ops.lin_u * U + nu
    dw = ops.lin_w * W + nw
    return Field.from_rfft(g, du), Field.from_rfft(g, dw)


def step(state: State, f: Field, dt: float, nonlinearity: float = 1.0) -> State:
    """Advance ``state`` by one ETDRK2 step of size ``dt``.

    Raises :class:`PositivityLost` if min(w) <= 0 afterwards.
    """
    g = state.grid
    ops = operators(g.n, dt)
    t_new = state.t + dt
    u1, w1, _ = _advance_values(ops, state.u.values, state.w.values, f.rfft, nonlinearity, t_new)
    return State(Field(g, u1), Field(g, w1), t_new)


Observer = Callable[[State, "object"], None]


def integrate(state0: State, config: SolverConfig, observer: Optional[Observer] = None,
              f: Optional[Field] = None) -> State:
    """Step from ``state0.t`` to ``state0.t + config.t_end``.

    ``observer(state, record)`` is called at the start and every
    ``config.output_every`` steps (and at the final step), with a
    :class:`~boussinesq.diagnostics.DiagnosticsRecord`.  The run is a
    deterministic function of its inputs.
    """
    from .diagnostics import DiagnosticsContext

    g = state0.grid
    if g.n != config.n:
        raise ValueError(f"state grid n={g.n} does not match config n={config.n}")
    if f is None:
        f = config.forcing_field(g)
    nsteps = step_count(config.t_end, config.dt)
    if nsteps == 0:
        if observer is not None:
            ctx = DiagnosticsContext(state0, f)
            observer(state0, ctx.record(state0))
        return state0

    ops = operators(g.n, config.dt)
    gamma = config.nonlinearity
    F = f.rfft
    ctx = DiagnosticsContext(state0, f) if observer is not None else None
    if observer is not None:
        observer(state0, ctx.record(state0))

    u, w = state0.u.values, state0.w.values
    t0 = state0.t
    warned = False
    for i in range(1, nsteps + 1):
        if not warned and config.dt > stable_dt(g, float(np.abs(u).max())):
            warnings.warn(
                f"dt = {config.dt} exceeds advisory advective bound "
                f"{stable_dt(g, float(np.abs(u).max())):.3e}",
                RuntimeWarning,
                stacklevel=2,
            )
            warned = True
        u, w, _ = _advance_values(ops, u, w, F, gamma, t0 + i * config.dt)
        if observer is not None and (i % config.output_every == 0 or i == nsteps):
            st = State(Field(g, u), Field(g, w), t0 + i * config.dt)
            observer(st, ctx.record(st))
    return State(Field(g, u), Field(g, w), t0 + nsteps * config.dt)


def step_count(t_end: float, dt: float) -> int:
    """Number of steps of size ``dt`` covering ``t_end``; must divide evenly."""
    ratio = t_end / dt
    nsteps = int(round(ratio))
    if abs(nsteps - ratio) > 1e-6 * max(1.0, ratio):
        raise ValueError(f"t_end = {t_end} is not a multiple of dt = {dt}")
    return nsteps


def trajectory(state0: State, f: Field, dt: float, nsteps: int, every: int = 1,
               nonlinearity: float = 1.0) -> list[State]:
    """States at steps 0, every, 2*every, ... up to ``nsteps``."""
    g = state0.grid
    ops = operators(g.n, dt)
    u, w = state0.u.values, state0.w.values
    out = [state0]
    for i in range(1, nsteps + 1):
        u, w, _ = _advance_values(ops, u, w, f.rfft, nonlinearity, state0.t + i * dt)
        if i % every == 0 or i == nsteps:
            out.append(State(Field(g, u), Field(g, w), state0.t + i * dt))
    return out


def advance(state0: State, f: Field, T: float, dt: float, nonlinearity: float = 1.0) -> State:
    """Final state after time ``T`` (no diagnostics)."""
    nsteps = step_count(T, dt)
    if nsteps == 0:
        return state0
    return trajectory(state0, f, dt, nsteps, every=nsteps, nonlinearity=nonlinearity)[-1]


def separation(a: State, b: State) -> float:
    """||u_a - u_b||_{H^1} + ||w_a - w_b||_{L^2}."""
    return h1_norm(a.u - b.u) + l2_norm(a.w - b.w)


def continuous_dependence_gap(state_a: State, state_b: State, f: Field, T: float, dt: float,
                              every: int = 100, nonlinearity: float = 1.0):
    """Separation of two trajectories sampled every ``every`` steps.

    Returns ``(times, gaps)`` arrays.
    """
    if state_a.grid != state_b.grid:
        raise ValueError("states must share a grid")
    nsteps = step_count(T, dt)
    ta = trajectory(state_a, f, dt, nsteps, every, nonlinearity)
    tb = trajectory(state_b, f, dt, nsteps, every, nonlinearity)
    times = np.array([s.t for s in ta])
    gaps = np.array([separation(a, b) for a, b in zip(ta, tb)])
    return times, gaps
