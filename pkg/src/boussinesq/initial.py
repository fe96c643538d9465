"""Initial-condition families.

Two families are provided: rest plus a Fourier perturbation, and a "rough"
family of smoothed periodic step profiles for w whose entropy can be fixed
while the step is sharpened.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .dynamics import State
from .functionals import entropy
from .spectral import Field, Grid, band_limited_random


def _modes_field(grid: Grid, modes: Sequence[tuple]) -> Field:
    vals = np.zeros(grid.n)
    for k, a, b in modes:
        if int(k) == 0:
            raise ValueError("perturbation modes must have k != 0 (means are fixed)")
        arg = 2.0 * np.pi * int(k) * grid.x
        vals += a * np.cos(arg) + b * np.sin(arg)
    return Field(grid, vals)


def perturbed_rest(grid: Grid, u_modes: Sequence[tuple] = (), w_modes: Sequence[tuple] = (),
                   t: float = 0.0) -> State:
    """(u, w) = (sum of u modes, 1 + sum of w modes); modes are (k, cos, sin)."""
    return State(_modes_field(grid, u_modes), 1.0 + _modes_field(grid, w_modes), t)


def random_perturbed(grid: Grid, seed: int, amp_u: float = 0.3, amp_w: float = 0.3,
                     kmax: int = 4) -> State:
    """Rest plus random band-limited perturbations of given L^2 sizes."""
    rng = np.random.default_rng(seed)
    u = band_limited_random(grid, rng, kmax, amplitude=amp_u) if amp_u else Field.zeros(grid)
    eta = band_limited_random(grid, rng, kmax, amplitude=amp_w) if amp_w else Field.zeros(grid)
    return State(u, 1.0 + eta)


def step_profile(grid: Grid, width: float) -> np.ndarray:
    """Smooth periodic indicator of [1/4, 3/4] with transition width ``width``.

    The profile s satisfies s(x) + s(1/2 - x) = 1, so its grid mean is 1/2.
    """
    if width <= 0:
        raise ValueError(f"width must be positive, got {width}")
    return 0.5 * (1.0 - np.tanh(np.cos(2.0 * np.pi * grid.x) / (2.0 * np.pi * width)))


def smoothed_step(grid: Grid, width: float, amplitude: float, project: bool = False) -> Field:
    """w = 1 + amplitude (2 s - 1); mean one by symmetry of s.

    ``project`` truncates to the modes kept by the two-thirds rule.
    """
    if not 0 <= amplitude < 1:
        raise ValueError(f"amplitude must lie in [0, 1) for positivity, got {amplitude}")
    vals = 1.0 + amplitude * (2.0 * step_profile(grid, width) - 1.0)
    w = Field(grid, vals)
    if project:
        rc = np.where(grid.dealias_mask, w.rfft, 0.0)
        rc[0] = 1.0
        w = Field.from_rfft(grid, rc)
    return w


def step_with_entropy(grid: Grid, width: float, target_entropy: float,
                      project: bool = False) -> Field:
    """Smoothed step whose integral of Q(w) equals ``target_entropy``."""
    def gap(a):
        return entropy(smoothed_step(grid, width, a, project)) - target_entropy

    hi = 0.95
    if gap(hi) < 0:
        raise ValueError(f"entropy {target_entropy} unreachable with amplitude < {hi}")
    a = brentq(gap, 0.0, hi, xtol=1e-14, rtol=1e-14)
    return smoothed_step(grid, width, a, project)


def rough_state(grid: Grid, width: float, target_entropy: float, u0: Field | None = None,
                project: bool = True) -> State:
    u = u0 if u0 is not None else Field.zeros(grid)
    return State(u, step_with_entropy(grid, width, target_entropy, project))

