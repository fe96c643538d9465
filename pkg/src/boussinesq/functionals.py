"""Entropy, Orlicz and energy functionals of the height/velocity pair.

Integrals over [0, 1] are grid averages, which is the trapezoidal rule on
the periodic grid and spectrally accurate for smooth integrands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .errors import MeanNotOne, NegativeArgument, NonPositiveField, ZeroField
from .spectral import Field, derivative, h1_norm, l2_norm, sobolev_norm

# 4*pi - 2: Young/Poincare constant in front of ||f||^2 in the energy law
FORCING_DENOM = 4.0 * math.pi - 2.0


def _require_nonneg(y):
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise NegativeArgument(f"argument must be >= 0, got min {np.min(y):.6g}")
    return y


def q_of(y):
    """Q(y) = y ln y - y + 1, with Q(0) = 1.  Accepts scalars or arrays."""
    y = _require_nonneg(y)
    out = xlogy(y, y) - y + 1.0
    return float(out) if out.ndim == 0 else out


def h_of(y):
    """H(y) = (1 + y) ln(1 + y) - y."""
    y = _require_nonneg(y)
    out = (1.0 + y) * np.log1p(y) - y
    return float(out) if out.ndim == 0 else out


def _require_positive(w: Field, name: str = "w") -> np.ndarray:
    vals = w.values
    if np.any(vals <= 0):
        j = int(np.argmin(vals))
        raise NonPositiveField(f"{name} has min {vals[j]:.6g} <= 0 at x = {w.grid.x[j]:.6g}")
    return vals


def entropy(w: Field) -> float:
    """Integral of Q(w)."""
    return float(np.mean(q_of(_require_positive(w))))


def dissipation_w(w: Field) -> float:
    """Integral of w_x**2 / w."""
    vals = _require_positive(w)
    wx = derivative(w).values
    return float(np.mean(wx**2 / vals))


def orlicz_norm(w: Field, rtol: float = 1e-12) -> float:
    """Luxemburg norm inf{lam > 0 : integral of H(|w|/lam) <= 1}.

    Found by bisection on log(lam); the map lam -> integral of H(|w|/lam)
    is strictly decreasing, so the root is unique.
    """
    a = np.abs(w.values)
    if np.mean(a) == 0.0:
        raise ZeroField("Orlicz norm of the zero field is zero; refusing to bisect")

    def excess(lam):
        return float(np.mean(h_of(a / lam))) - 1.0

    lo, hi = 1e-8, 1e8
    while excess(lo) <= 0.0:
        lo /= 1e4
    while excess(hi) > 0.0:
        hi *= 1e4
    # excess(lo) > 0 >= excess(hi)
    while hi - lo > rtol * hi:
        mid = math.sqrt(lo * hi) if hi / lo > 4.0 else 0.5 * (lo + hi)
        if excess(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class EnergyBreakdown:
    entropy: float
    kinetic: float
    total: float
    dissipation_u: float
    dissipation_w: float
    forcing_bound: float


def energy_breakdown(u: Field, w: Field, f: Field) -> EnergyBreakdown:
    ent = entropy(w)
    kin = 0.5 * h1_norm(u) ** 2
    return EnergyBreakdown(
        entropy=ent,
        kinetic=kin,
        total=ent + kin,
        dissipation_u=sobolev_norm(u, 1.0, homogeneous=True) ** 2,
        dissipation_w=dissipation_w(w),
        forcing_bound=l2_norm(f) ** 2 / FORCING_DENOM,
    )


def apriori_envelope(t: float, E0: float, f_l2: float) -> float:
    """Upper envelope 1/4 + ||f||^2/(4 pi - 2) + exp(-t) E0 for the energy."""
    if t < 0 or E0 < 0:
        raise ValueError(f"need t >= 0 and E0 >= 0, got t={t}, E0={E0}")
    return 0.25 + f_l2**2 / FORCING_DENOM + math.exp(-t) * E0


def sqrtw_h1(w: Field) -> float:
    """||(sqrt w)_x||^2 in L^2."""
    root = Field(w.grid, np.sqrt(_require_positive(w)))
    return sobolev_norm(root, 1.0, homogeneous=True) ** 2


def lemma3_residual(w: Field) -> float:
    """(integral of w_x^2/w)^(1/2) minus the entropy; >= 0 for mean-one w > 0."""
    _require_positive(w)
    m = w.mean()
    if abs(m - 1.0) >= 1e-10:
        raise MeanNotOne(f"mean(w) = {m!r}, expected 1")
    return math.sqrt(dissipation_w(w)) - entropy(w)
