"""Linearized flow along a base trajectory and the E-space geometry.

E = H^1 x L^2 restricted to mean-free pairs (v, h).  Tangents are advanced
in lockstep with their base by the exact derivative of the ETDRK2 map, so
finite-difference and Taylor-remainder checks see no discretization
mismatch between the nonlinear and linearized propagators.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamics import (
    State,
    _advance_values,
    operators,
    step_count,
    tangent_terms,
)
from .errors import DegenerateFit, InvalidState
from .spectral import Field, Grid, band_limited_random, h1_inner, l2_inner, l2_norm

MEAN_TOL = 1e-10


@dataclass(frozen=True)
class TangentState:
    v: Field
    h: Field
    t: float = 0.0

    def __post_init__(self):
        if self.v.grid != self.h.grid:
            raise InvalidState("v and h live on different grids")
        if abs(self.v.mean()) >= MEAN_TOL or abs(self.h.mean()) >= MEAN_TOL:
            raise InvalidState("tangent components must be mean-free")
        object.__setattr__(self, "t", float(self.t))

    @property
    def grid(self) -> Grid:
        return self.v.grid

    @classmethod
    def zeros(cls, grid: Grid, t: float = 0.0) -> TangentState:
        return cls(Field.zeros(grid), Field.zeros(grid), t)

    def __add__(self, other: TangentState) -> TangentState:
        return TangentState(self.v + other.v, self.h + other.h, self.t)

    def __sub__(self, other: TangentState) -> TangentState:
        return TangentState(self.v - other.v, self.h - other.h, self.t)

    def __mul__(self, c: float) -> TangentState:
        return TangentState(self.v * c, self.h * c, self.t)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


def e_inner(a: TangentState, b: TangentState) -> float:
    """<v_a, v_b>_{H^1} + <h_a, h_b>_{L^2}."""
    return h1_inner(a.v, b.v) + l2_inner(a.h, b.h)


def e_norm(a: TangentState) -> float:
    return float(np.sqrt(max(e_inner(a, a), 0.0)))


def random_tangent(grid: Grid, rng: np.random.Generator, kmax: int | None = None,
                   decay: float = 1.0) -> TangentState:
    """Random band-limited tangent with unit E-norm."""
    kmax = kmax or grid.resolved_modes
    beta = TangentState(band_limited_random(grid, rng, kmax, decay),
                        band_limited_random(grid, rng, kmax, decay))
    return beta * (1.0 / e_norm(beta))


def displace(state: State, beta: TangentState, eps: float) -> State:
    return State(state.u + eps * beta.v, state.w + eps * beta.h, state.t)


def difference(a: State, b: State) -> TangentState:
    """a - b as an element of E."""
    return TangentState(a.u - b.u, a.w - b.w, a.t)


# --------------------------------------------------------------------------
# Tendencies and stepping


def tangent_rhs(tangent: TangentState, base: State, nonlinearity: float = 1.0,
                ) -> tuple[Field, Field]:
    """Tendencies (v_t, h_t) of the linearized system along ``base``."""
    g = base.grid
    if tangent.grid != g:
        raise ValueError("tangent and base grids differ")
    ops = operators(g.n, 1.0)
    V, H = tangent.v.rfft, tangent.h.rfft
    dv, dh = tangent_terms(ops, base.u.values, base.w.values, V, H, nonlinearity)
    return Field.from_rfft(g, ops.lin_u * V + dv), Field.from_rfft(g, ops.lin_w * H + dh)


def tangent_step(tangent: TangentState, base_before: State, base_after: State, dt: float,
                 f: Field | None = None, nonlinearity: float = 1.0) -> TangentState:
    """Advance ``tangent`` across the base step ``base_before -> base_after``.

    The exact linearization of a step needs the base's internal predictor
    stage, which is rebuilt from ``base_before`` and the forcing ``f``
    (zero if omitted); ``base_after`` must be the matching next state.
    """
    g = base_before.grid
    if abs(base_after.t - base_before.t - dt) > 1e-9 * max(1.0, abs(base_before.t)):
        raise ValueError("base states are not one step of size dt apart")
    f = f if f is not None else Field.zeros(g)
    ops = operators(g.n, dt)
    tan = (tangent.v.rfft.copy(), tangent.h.rfft.copy())
    _, _, (V1, H1) = _advance_values(ops, base_before.u.values, base_before.w.values, f.rfft,
                                     nonlinearity, base_after.t, tan)
    return TangentState(Field.from_rfft(g, V1), Field.from_rfft(g, H1), base_after.t)


class CoIntegrator:
    """Base trajectory with a batch of tangents advanced in lockstep.

    Tangents are stored as half spectra of shape ``(m, n/2 + 1)``.
    """

    def __init__(self, base: State, f: Field, dt: float, V=None, H=None, nonlinearity: float = 1.0):
        g = base.grid
        self.grid = g
        self.ops = operators(g.n, dt)
        self.dt = dt
        self.F = f.rfft
        self.gamma = nonlinearity
        self.u = base.u.values
        self.w = base.w.values
        self.t0 = base.t
        self.steps = 0
        nk = g.n // 2 + 1
        self.V = np.zeros((0, nk), complex) if V is None else np.array(V, dtype=complex, ndmin=2)
        self.H = np.zeros((0, nk), complex) if H is None else np.array(H, dtype=complex, ndmin=2)

    @property
    def t(self) -> float:
        return self.t0 + self.steps * self.dt

    def advance(self, nsteps: int = 1):
        for _ in range(nsteps):
            t_new = self.t0 + (self.steps + 1) * self.dt
            tan = (self.V, self.H) if len(self.V) else None
            self.u, self.w, tan = _advance_values(self.ops, self.u, self.w, self.F, self.gamma,
                                                  t_new, tan)
            if tan is not None:
                self.V, self.H = tan
            self.steps += 1

    def base(self) -> State:
        g = self.grid
        return State(Field(g, self.u), Field(g, self.w), self.t)

    def tangent(self, i: int) -> TangentState:
        g = self.grid
        return TangentState(Field.from_rfft(g, self.V[i]), Field.from_rfft(g, self.H[i]), self.t)

    def tangents(self) -> list[TangentState]:
        return [self.tangent(i) for i in range(len(self.V))]


def propagate(base0: State, tangents: Sequence[TangentState], f: Field, T: float, dt: float,
              nonlinearity: float = 1.0) -> tuple[State, list[TangentState]]:
    """(S_T(base0), [DS_T(base0) beta for beta in tangents])."""
    V = np.array([b.v.rfft for b in tangents]) if tangents else None
    H = np.array([b.h.rfft for b in tangents]) if tangents else None
    co = CoIntegrator(base0, f, dt, V, H, nonlinearity)
    co.advance(step_count(T, dt))
    return co.base(), co.tangents()


def propagate_history(base0: State, beta: TangentState, f: Field, T: float, dt: float,
                      every: int = 100, nonlinearity: float = 1.0):
    """Times and E-norms of DS_t(base0) beta sampled every ``every`` steps."""
    co = CoIntegrator(base0, f, dt, beta.v.rfft[None], beta.h.rfft[None], nonlinearity)
    nsteps = step_count(T, dt)
    times, norms = [co.t], [e_norm(co.tangent(0))]
    done = 0
    while done < nsteps:
        k = min(every, nsteps - done)
        co.advance(k)
        done += k
        times.append(co.t)
        norms.append(e_norm(co.tangent(0)))
    return np.array(times), np.array(norms)


# --------------------------------------------------------------------------
# Derivative checks


def _state_scale(s: State) -> float:
    return float(np.sqrt(h1_inner(s.u, s.u) + l2_norm(s.w) ** 2))


def finite_diff_tangent_check(base0: State, direction: TangentState, f: Field, T: float,
                              eps: float, dt: float = 1e-3, nonlinearity: float = 1.0) -> float:
    """|| (S_T(x0 + eps b) - S_T(x0)) / eps - DS_T(x0) b ||_E."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    end, (lin,) = propagate(base0, [direction], f, T, dt, nonlinearity)
    from .dynamics import advance

    pert = advance(displace(base0, direction, eps), f, T, dt, nonlinearity)
    gap = difference(pert, end) * (1.0 / eps) - lin
    return e_norm(gap)


def taylor_remainders(base0: State, direction: TangentState, f: Field, T: float,
                      eps_list: Sequence[float], dt: float = 1e-3, nonlinearity: float = 1.0,
                      ) -> tuple[np.ndarray, float]:
    """R(eps) = ||S_T(x0 + eps b) - S_T(x0) - eps DS_T b||_E for each eps.

    Also returns the scale ||S_T(x0)|| used to judge roundoff.
    """
    from .dynamics import advance

    end, (lin,) = propagate(base0, [direction], f, T, dt, nonlinearity)
    rem = []
    for eps in eps_list:
        pert = advance(displace(base0, direction, eps), f, T, dt, nonlinearity)
        rem.append(e_norm(difference(pert, end) - eps * lin))
    return np.array(rem), _state_scale(end)


def taylor_remainder_order(base0: State, direction: TangentState, f: Field, T: float,
                           eps_list: Sequence[float], dt: float = 1e-3,
                           nonlinearity: float = 1.0) -> float:
    """Least-squares slope of log R(eps) against log eps."""
    eps = np.asarray(eps_list, dtype=float)
    if eps.size < 4:
        raise ValueError("need at least four eps values")
    ratios = eps[1:] / eps[:-1]
    if np.any(eps <= 0) or not np.allclose(ratios, ratios[0], rtol=1e-9):
        raise ValueError("eps_list must be a positive geometric sequence")
    rem, _ = taylor_remainders(base0, direction, f, T, eps, dt, nonlinearity)
    _, (lin,) = propagate(base0, [direction], f, T, dt, nonlinearity)
    # roundoff floor relative to the first-order increment eps * |DS_T b|
    if np.any(rem <= 1e-13 * eps * e_norm(lin)):
        raise DegenerateFit(f"remainder at roundoff level: {rem}")
    slope, _ = np.polyfit(np.log(eps), np.log(rem), 1)
    return float(slope)


def fitted_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of log y against log x."""
    slope, _ = np.polyfit(np.log(np.asarray(x)), np.log(np.asarray(y)), 1)
    return float(slope)
