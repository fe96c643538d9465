"""Fourier collocation on the unit-period line.

A :class:`Field` is a real 1-periodic function sampled at ``x_j = j/n``.
Grid values are the canonical representation; spectral coefficients are
derived from them on demand and cached.  Coefficients are normalized so
that the k = 0 coefficient is the mean and Parseval reads
``mean(values**2) == sum(|c_k|**2)``.

Internally the half spectrum of :func:`numpy.fft.rfft` is used; the full
``n``-term spectrum is available through :attr:`Field.coefficients`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import NegativeNormNonzeroMean

TWO_PI = 2.0 * np.pi

# |mean| above which negative-order norms are refused
MEAN_FREE_TOL = 1e-10


@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``n`` points on [0, 1)."""

    n: int

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise TypeError(f"grid size must be an integer, got {n!r}")
        if n < 16 or n & (n - 1):
            raise ValueError(f"grid size must be a power of two >= 16, got {n}")
        object.__setattr__(self, "n", int(n))

    @property
    def length(self) -> float:
        return 1.0

    @property
    def dx(self) -> float:
        return 1.0 / self.n

    @cached_property
    def x(self) -> np.ndarray:
        x = np.arange(self.n) / self.n
        x.setflags(write=False)
        return x

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Integer mode labels in FFT order, Nyquist labelled ``+n/2``."""
        k = np.fft.fftfreq(self.n, d=1.0 / self.n).astype(int)
        k[self.n // 2] = self.n // 2
        k.setflags(write=False)
        return k

    # Half-spectrum helpers used by the time steppers.

    @cached_property
    def k(self) -> np.ndarray:
        k = np.arange(self.n // 2 + 1)
        k.setflags(write=False)
        return k

    @cached_property
    def kappa(self) -> np.ndarray:
        """Angular wavenumbers 2*pi*k of the half spectrum."""
        kappa = TWO_PI * self.k
        kappa.setflags(write=False)
        return kappa

    @cached_property
    def ik(self) -> np.ndarray:
        """Symbol of d/dx with the Nyquist mode removed."""
        ik = 1j * self.kappa
        ik[-1] = 0.0
        ik.setflags(write=False)
        return ik

    @cached_property
    def helmholtz_symbol(self) -> np.ndarray:
        sym = 1.0 + self.kappa**2
        sym.setflags(write=False)
        return sym

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        mask = 3 * self.k <= self.n
        mask.setflags(write=False)
        return mask

    @cached_property
    def parseval_weights(self) -> np.ndarray:
        """Multiplicity of each half-spectrum mode in the full spectrum."""
        wt = np.full(self.n // 2 + 1, 2.0)
        wt[0] = wt[-1] = 1.0
        wt.setflags(write=False)
        return wt

    @property
    def resolved_modes(self) -> int:
        """Largest mode kept by the two-thirds rule."""
        return self.n // 3

    def rfft(self, values: np.ndarray) -> np.ndarray:
        return np.fft.rfft(values, axis=-1) / self.n

    def irfft(self, coeffs: np.ndarray) -> np.ndarray:
        return np.fft.irfft(coeffs * self.n, n=self.n, axis=-1)


class Field:
    """Immutable real periodic field on a :class:`Grid`."""

    __slots__ = ("grid", "_values", "_rcoef")

    def __init__(self, grid: Grid, values):
        values = np.array(values, dtype=float)
        if values.shape != (grid.n,):
            raise ValueError(f"expected {grid.n} samples, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field samples must be finite")
        values.setflags(write=False)
        self.grid = grid
        self._values = values
        self._rcoef = None

    @classmethod
    def zeros(cls, grid: Grid) -> Field:
        return cls(grid, np.zeros(grid.n))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> Field:
        return cls(grid, np.full(grid.n, float(value)))

    @classmethod
    def from_function(cls, grid: Grid, func: Callable[[np.ndarray], np.ndarray]) -> Field:
        return cls(grid, np.broadcast_to(func(grid.x), (grid.n,)))

    @classmethod
    def from_coefficients(cls, grid: Grid, coeffs) -> Field:
        """Build from the full spectrum in FFT order (conjugate symmetric)."""
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (grid.n,):
            raise ValueError(f"expected {grid.n} coefficients, got shape {coeffs.shape}")
        return cls(grid, np.fft.ifft(coeffs * grid.n).real)

    @classmethod
    def from_rfft(cls, grid: Grid, rcoef) -> Field:
        return cls(grid, grid.irfft(np.asarray(rcoef)))

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def rfft(self) -> np.ndarray:
        """Half spectrum ``c_0 .. c_{n/2}`` (read-only)."""
        if self._rcoef is None:
            rc = self.grid.rfft(self._values)
            rc.setflags(write=False)
            self._rcoef = rc
        return self._rcoef

    @property
    def coefficients(self) -> np.ndarray:
        """Full spectrum in FFT order."""
        rc = self.rfft
        full = np.empty(self.n, dtype=complex)
        full[: self.n // 2 + 1] = rc
        full[self.n // 2 + 1 :] = np.conj(rc[1 : self.n // 2][::-1])
        return full

    def _check_grid(self, other: Field):
        if other.grid != self.grid:
            raise ValueError(f"grid mismatch: n={self.n} vs n={other.n}")

    def _binary(self, other, op):
        if isinstance(other, Field):
            self._check_grid(other)
            return Field(self.grid, op(self._values, other._values))
        return Field(self.grid, op(self._values, float(other)))

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return Field(self.grid, float(other) - self._values)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, np.divide)

    def __neg__(self):
        return Field(self.grid, -self._values)

    def __eq__(self, other):
        if not isinstance(other, Field):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self._values, other._values)

    __hash__ = None

    def __repr__(self):
        return f"Field(n={self.n}, mean={self.mean():.6g}, max|.|={np.abs(self._values).max():.6g})"

    def mean(self) -> float:
        return mean(self)

    def min(self) -> float:
        return float(self._values.min())


def derivative(field: Field, order: int = 1) -> Field:
    """Spectral derivative of the given order.

    Odd orders drop the Nyquist mode so the result stays real.
    """
    if int(order) != order or order < 1:
        raise ValueError(f"derivative order must be a positive integer, got {order}")
    g = field.grid
    if order % 2:
        sym = g.ik**order
    else:
        sym = (-(g.kappa**2)) ** (order // 2)
    return Field.from_rfft(g, sym * field.rfft)


def helmholtz_solve(field: Field) -> Field:
    """Solve ``g - g_xx = field`` for periodic ``g``."""
    g = field.grid
    return Field.from_rfft(g, field.rfft / g.helmholtz_symbol)


def dealias(field: Field) -> Field:
    """Zero every mode with |k| > n/3."""
    g = field.grid
    return Field.from_rfft(g, np.where(g.dealias_mask, field.rfft, 0.0))


def mean(field: Field) -> float:
    return float(field.rfft[0].real)


def sobolev_norm(field: Field, s: float, homogeneous: bool = False) -> float:
    """H^s norm with weight ``(1 + 4 pi^2 k^2)^s``.

    Negative ``s`` always uses the homogeneous weight ``(4 pi^2 k^2)^s`` and
    requires a mean-free field.  ``homogeneous=True`` selects the seminorm
    for ``s >= 0`` as well.
    """
    g = field.grid
    power = g.parseval_weights * np.abs(field.rfft) ** 2
    if s < 0:
        if abs(mean(field)) > MEAN_FREE_TOL:
            raise NegativeNormNonzeroMean(
                f"H^{s} norm needs a mean-free field, mean = {mean(field):.3e}"
            )
        homogeneous = True
    if homogeneous:
        weight = np.zeros_like(g.kappa)
        weight[1:] = g.kappa[1:] ** (2.0 * s)
    else:
        weight = g.helmholtz_symbol**s
    return float(np.sqrt(np.sum(weight * power)))


def l2_norm(field: Field) -> float:
    return sobolev_norm(field, 0.0)


def h1_norm(field: Field) -> float:
    return sobolev_norm(field, 1.0)


def l2_inner(a: Field, b: Field) -> float:
    a._check_grid(b)
    g = a.grid
    return float(np.sum(g.parseval_weights * (a.rfft * np.conj(b.rfft)).real))


def h1_inner(a: Field, b: Field) -> float:
    a._check_grid(b)
    g = a.grid
    return float(np.sum(g.parseval_weights * g.helmholtz_symbol * (a.rfft * np.conj(b.rfft)).real))


def band_limited_random(grid: Grid, rng: np.random.Generator, kmax: int, decay: float = 1.0,
                        amplitude: float = 1.0) -> Field:
    """Random mean-free field with modes 1..kmax and spectrum ~ k**-decay."""
    if not 1 <= kmax <= grid.n // 2 - 1:
        raise ValueError(f"kmax must lie in [1, {grid.n // 2 - 1}], got {kmax}")
    rc = np.zeros(grid.n // 2 + 1, dtype=complex)
    k = np.arange(1, kmax + 1)
    rc[1 : kmax + 1] = (rng.standard_normal(kmax) + 1j * rng.standard_normal(kmax)) * k**-decay
    field = Field.from_rfft(grid, rc)
    scale = l2_norm(field)
    return field * (amplitude / scale)
