"""Randomized checks of the scalar and functional inequalities.

Each check draws seeded samples and records the worst slack
(right side minus left side, scaled as noted); a sample violates when its
slack is below ``-tol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .functionals import entropy, h_of, lemma3_residual, q_of
from .spectral import Field, Grid, band_limited_random, derivative, l2_norm, sobolev_norm


@dataclass(frozen=True)
class CheckResult:
    name: str
    samples: int
    violations: int
    worst_slack: float

    @property
    def passed(self) -> bool:
        return self.violations == 0


@dataclass(frozen=True)
class InequalityReport:
    seed: int
    results: tuple
    fitted_c0: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def as_dict(self) -> dict:
        out = {"seed": self.seed, "fitted_c0": self.fitted_c0}
        for r in self.results:
            out[f"{r.name}.samples"] = r.samples
            out[f"{r.name}.violations"] = r.violations
            out[f"{r.name}.worst_slack"] = r.worst_slack
        return out


def _result(name, slack, tol):
    slack = np.asarray(slack, dtype=float)
    return CheckResult(name, int(slack.size), int(np.sum(slack < -tol)), float(slack.min()))


def log_uniform(rng: np.random.Generator, size: int, lo: float = 1e-6, hi: float = 1e6):
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size))


def random_mean_one(grid: Grid, rng: np.random.Generator, kmax_max: int = 8) -> Field:
    """Smooth positive field with mean one and minimum in [0.05, 0.95]."""
    kmax = int(rng.integers(1, kmax_max + 1))
    eta = band_limited_random(grid, rng, kmax, decay=float(rng.uniform(0.5, 2.0)))
    depth = float(rng.uniform(0.05, 0.95))
    eta = eta * (depth / float(np.max(-eta.values)))
    return 1.0 + eta


def random_smooth(grid: Grid, rng: np.random.Generator, kmax_max: int = 8) -> Field:
    """Smooth periodic field with random mean (for the Agmon check)."""
    kmax = int(rng.integers(1, kmax_max + 1))
    return band_limited_random(grid, rng, kmax) + float(rng.normal())


def lemma1_sandwich(y: np.ndarray, tol: float):
    """Q(y) - 1 <= H(y), slack relative to max(1, H); also sup H / (Q + 1)."""
    q, h = q_of(y), h_of(y)
    slack = (h - (q - 1.0)) / np.maximum(1.0, h)
    return _result("lemma1_lower", slack, tol), float(np.max(h / (q + 1.0)))


def h_sqrt_bound(y: np.ndarray, tol: float) -> CheckResult:
    """H(y) >= (sqrt(y + 1) - 1)^2 / 2, slack relative to max(1, H)."""
    h = h_of(y)
    rhs = 0.5 * (np.sqrt(y + 1.0) - 1.0) ** 2
    return _result("h_sqrt_bound", (h - rhs) / np.maximum(1.0, h), tol)


def agmon_slack(phi: Field) -> float:
    """2 |phi| |phi'| + |phi|^2 - max phi^2 (all L^2 norms)."""
    a, b = l2_norm(phi), l2_norm(derivative(phi))
    return 2.0 * a * b + a * a - float(np.max(phi.values**2))


def entropy_l2_chain_slack(w: Field) -> float:
    """integral w^2 - 1 - integral Q(w) for mean-one positive w."""
    return float(np.mean(w.values**2)) - 1.0 - entropy(w)


def poincare_slack(g: Field) -> float:
    """|g_x|^2 / (4 pi^2) - |g|^2 for mean-free g."""
    return sobolev_norm(g, 1.0, homogeneous=True) ** 2 / (4.0 * math.pi**2) - l2_norm(g) ** 2


def run_inequality_suite(seed: int = 0, samples: int = 1000, n: int = 128,
                         tol: float = 1e-8) -> InequalityReport:
    rng = np.random.default_rng(seed)
    grid = Grid(n)
    y = log_uniform(rng, samples)
    lemma1, c0 = lemma1_sandwich(y, tol)
    results = [lemma1, h_sqrt_bound(y, tol)]

    ws = [random_mean_one(grid, rng) for _ in range(samples)]
    results.append(_result("lemma3", [lemma3_residual(w) for w in ws], tol))
    results.append(_result("entropy_l2_chain", [entropy_l2_chain_slack(w) for w in ws], tol))
    phis = [random_smooth(grid, rng) for _ in range(samples)]
    results.append(_result("agmon", [agmon_slack(p) for p in phis], tol))
    results.append(_result("poincare", [poincare_slack(p - p.mean()) for p in phis], tol))
    return InequalityReport(seed, tuple(results), c0)
