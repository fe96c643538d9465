"""Volume contraction of tangent frames and the Lyapunov spectrum.

Exponents come from the discrete-QR method: a frame of ``m`` tangents is
co-integrated with the base and re-orthonormalized in the E inner product
every ``renorm_every`` steps, accumulating log stretching factors.  Over
each window the frame is also kept un-orthonormalized, and the Gram
determinant of its E inner products (the squared m-volume) gives a
direct log-volume growth rate to cross-check twice the exponent sum.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import lapack

from .dynamics import State, advance, step_count
from .errors import FrameCollapse, Inconclusive
from .functionals import FORCING_DENOM
from .spectral import Field, Grid, l2_norm
from .tangent import CoIntegrator, TangentState, e_inner

log = logging.getLogger(__name__)

STATED_TRACE_BOUND = 1.0 / 12.0
TRACE_SUM_LIMIT = math.pi**2 / 12.0

# log stretching below this over one window is treated as collapse
_COLLAPSE_LOG = math.log(1e-250)


@dataclass(frozen=True)
class TangentFrame:
    members: tuple

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError("a frame needs at least one member")
        g, t = members[0].grid, members[0].t
        for b in members[1:]:
            if b.grid != g or b.t != t:
                raise ValueError("frame members must share grid and time")
        object.__setattr__(self, "members", members)

    @property
    def m(self) -> int:
        return len(self.members)

    def gram_matrix(self) -> np.ndarray:
        m = self.m
        G = np.empty((m, m))
        for i in range(m):
            for j in range(i, m):
                G[i, j] = G[j, i] = e_inner(self.members[i], self.members[j])
        return G


def psd_determinant(G: np.ndarray) -> float:
    """Determinant of a symmetric positive semidefinite matrix.

    Uses pivoted Cholesky; a numerically rank-deficient matrix gives 0.
    """
    G = np.array(G, dtype=float, order="F")
    m = G.shape[0]
    if m == 0:
        return 1.0
    c, piv, rank, info = lapack.dpstrf(G, lower=1)
    if info < 0:
        raise ValueError(f"dpstrf argument error {info}")
    if rank < m:
        return 0.0
    return float(np.prod(np.diag(c)) ** 2)


def gram_determinant(frame: TangentFrame | Sequence[TangentState]) -> float:
    if not isinstance(frame, TangentFrame):
        frame = TangentFrame(tuple(frame))
    return psd_determinant(frame.gram_matrix())


def attractor_bound_M(f_l2: float) -> float:
    """Asymptotic H^1 bound on u: sqrt(2 (1/4 + ||f||^2 / (4 pi - 2)))."""
    if f_l2 < 0:
        raise ValueError("f_l2 must be >= 0")
    return math.sqrt(2.0 * (0.25 + f_l2**2 / FORCING_DENOM))


def trace_sum(m: int) -> float:
    """2 pi^2 sum_{k=1}^{m/2} (2 pi k)^-2 = (1/2) sum_{k=1}^{m/2} k^-2."""
    if m < 2 or m % 2:
        raise ValueError(f"m must be an even integer >= 2, got {m}")
    k = np.arange(1, m // 2 + 1, dtype=float)
    # smallest terms first; fsum is correctly rounded anyway
    return 0.5 * math.fsum((1.0 / k**2)[::-1])


# --------------------------------------------------------------------------
# E-space embedding for orthonormalization


class _Embedding:
    """Isometry from half-spectrum tangent pairs to real vectors."""

    def __init__(self, grid: Grid):
        wt = grid.parseval_weights
        self.nk = grid.n // 2 + 1
        self.sv = np.sqrt(wt * grid.helmholtz_symbol)
        self.sh = np.sqrt(wt)

    def to_real(self, V: np.ndarray, H: np.ndarray) -> np.ndarray:
        """(m, nk) complex pairs -> (4 nk, m) real matrix."""
        a = V * self.sv
        b = H * self.sh
        return np.concatenate([a.real, a.imag, b.real, b.imag], axis=1).T

    def from_real(self, Q: np.ndarray):
        nk = self.nk
        Q = Q.T
        V = (Q[:, :nk] + 1j * Q[:, nk : 2 * nk]) / self.sv
        H = (Q[:, 2 * nk : 3 * nk] + 1j * Q[:, 3 * nk :]) / self.sh
        return V, H


def random_frame(grid: Grid, m: int, seed: int, kmax: Optional[int] = None):
    """Seeded E-orthonormal frame supported on modes 1..kmax (default n/3).

    Returns half-spectrum arrays ``(V, H)`` of shape ``(m, n/2 + 1)``.
    """
    kmax = kmax or grid.resolved_modes
    rng = np.random.default_rng(seed)
    nk = grid.n // 2 + 1
    V = np.zeros((m, nk), complex)
    H = np.zeros((m, nk), complex)
    shape = (m, kmax)
    V[:, 1 : kmax + 1] = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    H[:, 1 : kmax + 1] = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    if kmax == grid.n // 2:
        V[:, -1] = V[:, -1].real
        H[:, -1] = H[:, -1].real
    emb = _Embedding(grid)
    Q, _ = np.linalg.qr(emb.to_real(V, H))
    return emb.from_real(Q)


def frame_from_arrays(grid: Grid, V, H, t: float) -> TangentFrame:
    return TangentFrame(tuple(
        TangentState(Field.from_rfft(grid, V[i]), Field.from_rfft(grid, H[i]), t)
        for i in range(len(V))
    ))


@dataclass(frozen=True)
class LyapunovReport:
    exponents: np.ndarray
    cumulative: np.ndarray
    log_gram_slope: float
    m_star: Optional[int]
    ky_dimension: Optional[float]
    M: float
    renorm_interval: float
    T: float
    raw_exponents: np.ndarray = field(repr=False, default=None)

    @property
    def m(self) -> int:
        return len(self.exponents)


def lyapunov_spectrum(x0: State, f: Field, m: int, T: float, renorm_every: int, seed: int,
                      dt: float = 1e-3, t_spin: float = 50.0, t_align: float = 0.0,
                      nonlinearity: float = 1.0, auto_tighten: bool = True) -> LyapunovReport:
    """Leading ``m`` Lyapunov exponents along the trajectory from ``x0``.

    The base is first integrated for ``t_spin`` and that transient dropped.
    Stretching over the first ``t_align`` of measurement is also dropped,
    letting the random initial frame settle before averaging.  On
    :class:`FrameCollapse` the window is halved when ``auto_tighten``.
    """
    g = x0.grid
    if m < 1 or m > g.n // 4:
        raise ValueError(f"m must lie in [1, n/4 = {g.n // 4}], got {m}")
    if renorm_every < 1:
        raise ValueError("renorm_every must be >= 1")
    base = advance(x0, f, t_spin, dt, nonlinearity) if t_spin > 0 else x0
    while True:
        try:
            return _qr_spectrum(base, f, m, T, renorm_every, seed, dt, t_align, nonlinearity)
        except FrameCollapse:
            if not auto_tighten or renorm_every == 1:
                raise
            renorm_every //= 2
            log.warning("frame collapse; retrying with renorm_every = %d", renorm_every)


def _qr_spectrum(base: State, f: Field, m, T, renorm_every, seed, dt, t_align, nonlinearity):
    g = base.grid
    emb = _Embedding(g)
    V, H = random_frame(g, m, seed)
    co = CoIntegrator(base, f, dt, V, H, nonlinearity)
    nsteps = step_count(T, dt)
    align_steps = step_count(t_align, dt) if t_align > 0 else 0
    if align_steps >= nsteps:
        raise ValueError("t_align must be shorter than T")

    log_sum = np.zeros(m)
    gram_log_sum = 0.0
    measured = 0
    done = 0
    while done < nsteps:
        k = min(renorm_every, nsteps - done)
        co.advance(k)
        done += k
        A = emb.to_real(co.V, co.H)
        Q, R = np.linalg.qr(A)
        diag = np.abs(np.diag(R))
        with np.errstate(divide="ignore"):
            logs = np.log(diag)
        if not np.all(np.isfinite(logs)) or logs.min() < _COLLAPSE_LOG:
            raise FrameCollapse(f"stretching underflow at t = {co.t:.6g}")
        # shadow frame: the un-orthonormalized window end, started orthonormal
        gdet = psd_determinant(A.T @ A)
        if done > align_steps:
            span = min(k, done - align_steps)
            frac = span / k
            log_sum += frac * logs
            if gdet > 0:
                gram_log_sum += frac * math.log(gdet)
            else:
                gram_log_sum = -math.inf
            measured += span
        # orient columns so the diagonal of R is positive
        signs = np.sign(np.diag(R))
        signs[signs == 0] = 1.0
        co.V, co.H = emb.from_real(Q * signs)

    t_meas = measured * dt
    raw = log_sum / t_meas
    exps = np.sort(raw)[::-1]
    cum = np.cumsum(exps)
    m_star, ky = dimension_estimate_from(exps, cum, strict=False)
    return LyapunovReport(
        exponents=exps,
        cumulative=cum,
        log_gram_slope=gram_log_sum / t_meas,
        m_star=m_star,
        ky_dimension=ky,
        M=attractor_bound_M(l2_norm(f)),
        renorm_interval=renorm_every * dt,
        T=T,
        raw_exponents=raw,
    )


def dimension_estimate_from(exponents, cumulative=None, strict: bool = True, band: float = 0.0):
    """(m_star, Kaplan-Yorke dimension) from a nonincreasing spectrum.

    ``m_star`` is the smallest count whose partial sum is below ``-band``.
    Raises :class:`Inconclusive` when there is none and ``strict``;
    otherwise returns ``(None, None)``.
    """
    exps = np.asarray(exponents, dtype=float)
    cum = np.cumsum(exps) if cumulative is None else np.asarray(cumulative, dtype=float)
    neg = np.nonzero(cum < -band)[0]
    if neg.size == 0:
        if strict:
            raise Inconclusive(f"no negative partial sum among {len(exps)} exponents")
        return None, None
    m_star = int(neg[0]) + 1
    if exps[0] < 0:
        return m_star, 0.0
    nonneg = np.nonzero(cum >= 0)[0]
    j = int(nonneg[-1]) + 1  # count of exponents in the largest nonnegative partial sum
    if j >= len(exps):
        return m_star, None
    return m_star, j + cum[j - 1] / abs(exps[j])


def dimension_estimate(report: LyapunovReport, band: float = 0.0):
    """(m_star, ky) for a report; Kaplan-Yorke is an interpolation extension."""
    return dimension_estimate_from(report.exponents, report.cumulative, strict=True, band=band)
