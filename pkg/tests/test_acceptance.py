"""Acceptance criteria, one test per criterion.

Each test records a single ``criterion N: PASS|FAIL ...`` line; the lines are
printed in the pytest terminal summary (see conftest.py) and also when this
file is run directly with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import sys
import time
from functools import lru_cache

import numpy as np

from boussinesq.checkpoint import dumps_checkpoint, loads_checkpoint
from boussinesq.config import build_config, parse_text
from boussinesq.diagnostics import Recorder, with_energy_law_residuals
from boussinesq.dimension import (
    STATED_TRACE_BOUND,
    TRACE_SUM_LIMIT,
    lyapunov_spectrum,
    trace_sum,
)
from boussinesq.dynamics import SolverConfig, State, integrate
from boussinesq.inequalities import run_inequality_suite
from boussinesq.initial import random_perturbed
from boussinesq.scenarios import read_summary, run_scenario
from boussinesq.spectral import (
    Field,
    Grid,
    band_limited_random,
    derivative,
    h1_norm,
    helmholtz_solve,
    l2_norm,
)
from boussinesq.tangent import (
    e_norm,
    finite_diff_tangent_check,
    fitted_slope,
    propagate,
    random_tangent,
    taylor_remainders,
)

TWO_PI = 2.0 * math.pi
RESULTS: list[str] = []


def report(number: int, ok: bool, detail: str):
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def _cfg(text: str):
    return build_config(parse_text(text))


def _perturbed(n: int, seed: int) -> State:
    """Rest plus band-limited noise, with w0 >= 0.2 checked."""
    s = random_perturbed(Grid(n), seed, 0.3, 0.3, kmax=4)
    assert s.w.min() >= 0.2
    return s


@lru_cache(maxsize=None)
def envelope_runs():
    """f = 0 and three forcing amplitudes at n = 128, dt = 1e-3, T = 20."""
    runs = {}
    for amp in (0.0, 0.1, 0.5, 1.0):
        forcing = ((1, amp, 0.0), (3, 0.0, amp)) if amp else ()
        cfg = SolverConfig(n=128, dt=1e-3, t_end=20.0, forcing=forcing, output_every=100)
        f = cfg.forcing_field()
        s0 = _perturbed(128, 11)
        rec = Recorder()
        integrate(s0, cfg, rec)
        runs[amp] = (l2_norm(f), with_energy_law_residuals(rec.records, l2_norm(f)), s0)
    return runs


# --------------------------------------------------------------------------


def test_criterion_01_spectral_exactness():
    g = Grid(64)
    x = g.x
    f = Field(g, np.sin(TWO_PI * 5 * x) + 0.25 * np.cos(TWO_PI * 17 * x) + 0.3)
    d1 = TWO_PI * 5 * np.cos(TWO_PI * 5 * x) - 0.25 * TWO_PI * 17 * np.sin(TWO_PI * 17 * x)
    d2 = -(TWO_PI * 5) ** 2 * np.sin(TWO_PI * 5 * x) - 0.25 * (TWO_PI * 17) ** 2 * np.cos(
        TWO_PI * 17 * x)
    hel = (np.sin(TWO_PI * 5 * x) / (1 + (TWO_PI * 5) ** 2)
           + 0.25 * np.cos(TWO_PI * 17 * x) / (1 + (TWO_PI * 17) ** 2) + 0.3)
    e1 = np.abs(derivative(f).values - d1).max()
    e2 = np.abs(derivative(f, 2).values - d2).max() / np.abs(d2).max()
    eh = np.abs(helmholtz_solve(f).values - hel).max()
    rnd = band_limited_random(g, np.random.default_rng(0), 31) + 0.5
    ep = abs(np.mean(rnd.values**2) - l2_norm(rnd) ** 2)
    ok = e1 < 1e-10 and e2 < 1e-10 and eh < 1e-10 and ep < 1e-12
    report(1, ok, f"d/dx {e1:.1e}, d2/dx2 (rel) {e2:.1e}, Helmholtz {eh:.1e}, Parseval {ep:.1e}")


def test_criterion_02_conservation():
    cfg = SolverConfig(n=128, dt=1e-3, t_end=50.0, forcing=((1, 1.0, 0.0), (2, 0.0, 0.5)),
                       output_every=100)
    rec = Recorder()
    integrate(_perturbed(128, 2), cfg, rec)
    mu = max(abs(r.mean_u) for r in rec.records)
    mw = max(abs(r.mean_w - 1.0) for r in rec.records)
    report(2, mu <= 1e-10 and mw <= 1e-10,
           f"max |mean u| {mu:.1e}, max |mean w - 1| {mw:.1e} over T = 50")


def test_criterion_03_decay_to_equilibrium():
    _, records, s0 = envelope_runs()[0.0]
    cfg = SolverConfig(n=128, dt=1e-3, t_end=20.0)
    end = integrate(s0, cfg)
    d0 = h1_norm(s0.u) + l2_norm(s0.w - 1.0)
    d1 = h1_norm(end.u) + l2_norm(end.w - 1.0)
    E = np.array([r.energy_E for r in records])
    rise = float(np.max(np.diff(E)))
    ok = d1 < 1e-3 * d0 and rise <= 1e-8
    report(3, ok, f"distance ratio {d1 / d0:.2e} at T = 20, largest energy rise {rise:.1e}")


def test_criterion_04_envelope():
    worst = -math.inf
    for f_l2, records, _ in envelope_runs().values():
        worst = max(worst, max(r.energy_E - r.envelope for r in records))
    report(4, worst <= 1e-6, f"max E - envelope = {worst:.3e} over f = 0 and amplitudes 0.1, 0.5, 1")


def test_criterion_05_energy_law():
    worst, largest, count = -math.inf, -math.inf, 0
    for f_l2, records, _ in envelope_runs().values():
        for r in records:
            if math.isnan(r.energy_law_residual):
                continue
            count += 1
            # stored residual already subtracts ||f||^2 / (4 pi - 2)
            largest = max(largest, r.energy_law_residual)
            worst = max(worst, r.energy_law_residual - 1e-3 * (1.0 + r.energy_E))
    report(5, worst <= 0.0 and count > 0,
           f"{count} interior points; max (residual - ||f||^2/(4 pi - 2)) = {largest:.3e}, "
           f"max excess over 1e-3 (1 + E) = {worst:.3e}")


def test_criterion_06_positivity():
    lows = []
    for f_l2, records, s0 in envelope_runs().values():
        lows.append(min(r.min_w for r in records))
        alpha = s0.w.min()
        dips = sum(r.min_w < alpha for r in records)
        print(f"  logged: alpha = {alpha:.4f}, min w = {lows[-1]:.4f}, dips below alpha = {dips}")
    report(6, min(lows) > 0.0, f"min over runs of min_x w = {min(lows):.4f} (w0 >= 0.2)")


def test_criterion_07_smoothing(tmp_path):
    text = ("n=512\ndt=4e-4\nt_end=10\noutput_every=250\nscenario=smoothing\n"
            "ic.width=0.02\nic.entropy=0.05\nic.sharpen=4\n")
    o = run_scenario("smoothing", _cfg(text), tmp_path)
    base, sharp = o.summary["base.sup_sqrtw_h1"], o.summary["sharp.sup_sqrtw_h1"]
    ratio = o.summary["sup_ratio"]
    ok = math.isfinite(base) and math.isfinite(sharp) and ratio < 2.0 and o.status == 0
    report(7, ok, f"sup_[1,10] |(sqrt w)_x|^2: {base:.3e} vs {sharp:.3e} (4x sharper), "
                  f"ratio {ratio:.3f}; initial {o.summary['base.initial_sqrtw_h1']:.2f} vs "
                  f"{o.summary['sharp.initial_sqrtw_h1']:.2f}")


def test_criterion_08_inequalities():
    rep = run_inequality_suite(seed=0, samples=1000, tol=1e-8)
    names = ", ".join(f"{r.name} {r.violations}/{r.samples}" for r in rep.results)
    report(8, rep.passed, f"violations: {names}; fitted C0 = {rep.fitted_c0:.4f}")


def test_criterion_09_tangent_correctness():
    g = Grid(64)
    cfg = SolverConfig(n=64, forcing=((1, 2.0, 0.0),))
    f = cfg.forcing_field()
    base = _perturbed(64, 5)
    rng = np.random.default_rng(9)
    beta = random_tangent(g, rng, kmax=4, decay=2.0)
    # below ~1e-5 the difference quotient is dominated by roundoff / eps
    eps = [1e-2, 1e-3, 1e-4, 1e-5]
    gaps = [finite_diff_tangent_check(base, beta, f, 1.0, e) for e in eps]
    slope = fitted_slope(eps, gaps)
    b1, b2 = random_tangent(g, rng), random_tangent(g, rng)
    _, (l1, l2, l12) = propagate(base, [b1, b2, b1 * 0.7 + b2 * -1.3], f, 1.0, 1e-3)
    lin = e_norm(l12 - (l1 * 0.7 + l2 * -1.3))
    report(9, 0.9 <= slope <= 1.1 and lin <= 1e-10,
           f"finite-difference slope {slope:.4f} (gaps "
           + ", ".join(f"{x:.2e}" for x in gaps) + f"), linearity defect {lin:.1e}")


def test_criterion_10_taylor_order():
    g = Grid(64)
    cfg = SolverConfig(n=64, forcing=((2, 3.0, 0.0),))
    f = cfg.forcing_field()
    eps = [1e-2, 1e-3, 1e-4, 1e-5]
    slopes = []
    for seed in range(3):
        base = integrate(_perturbed(64, 100 + seed), SolverConfig(n=64, t_end=5.0), f=f)
        beta = random_tangent(g, np.random.default_rng([7, seed]), kmax=4, decay=2.0)
        rem, _ = taylor_remainders(base, beta, f, 1.0, eps)
        slopes.append(fitted_slope(eps, rem))
    report(10, min(slopes) > 1.0, "fitted orders " + ", ".join(f"{s:.4f}" for s in slopes))


def test_criterion_11_lyapunov_oracle():
    from test_dimension import equilibrium_oracle

    g = Grid(128)
    rep = lyapunov_spectrum(State.equilibrium(g), Field.zeros(g), m=8, T=10.0, renorm_every=10,
                            seed=0, t_spin=0.0, t_align=1.0)
    oracle = equilibrium_oracle(128, 8)
    err = float(np.max(np.abs(rep.exponents - oracle)))
    report(11, err <= 1e-4, f"max |exponent - oracle| = {err:.2e} over 8 exponents")


def test_criterion_12_dimension(tmp_path):
    text = ("n=64\ndt=1e-3\nt_end=10\nscenario=sweep\nlyap.m=8\nlyap.t_spin=20\n"
            "sweep.amplitudes=0,1,5,10\nsweep.workers=2\nseed=3\n")
    o = run_scenario("sweep", _cfg(text), tmp_path)
    unforced = read_summary(tmp_path / "member_000" / "summary.txt")
    exps0 = [float(v) for v in unforced["exponents"].split(",")]
    table = (tmp_path / "sweep.csv").read_text().strip().splitlines()
    forced_ok = all(row.split(",")[3] != "none" for row in table[1:])
    ok = o.status == 0 and max(exps0) <= 0.0 and unforced["m_star"] == "1" and forced_ok
    print("  " + "\n  ".join(table))
    report(12, ok, f"f = 0: max exponent {max(exps0):.3e}, m_star {unforced['m_star']}; "
                   f"m_star per amplitude {o.summary['m_star']}")


def test_criterion_13_trace_sum(tmp_path):
    gap = TRACE_SUM_LIMIT - trace_sum(10**6)
    text = "n=64\nt_end=2\nscenario=lyapunov\nlyap.m=4\nlyap.t_spin=1\n"
    run_scenario("lyapunov", _cfg(text), tmp_path)
    flagged = read_summary(tmp_path / "summary.txt")["stated_trace_bound_consistent"] == "false"
    report(13, 0 < gap < 1e-6 and flagged,
           f"pi^2/12 - trace_sum(1e6) = {gap:.6e}; stated bound {STATED_TRACE_BOUND:.4f} "
           f"flagged inconsistent: {flagged}")


def test_criterion_14_determinism(tmp_path):
    text = "n=128\ndt=1e-3\nt_end=2\nscenario=forced\nforcing.k.1=1\nforcing.cos.1=1\nseed=5\n"
    for d in ("a", "b"):
        run_scenario("forced", _cfg(text), tmp_path / d)
    same = all((tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()
               for n in ("diagnostics.csv", "checkpoint.bsq", "summary.txt"))
    raw = (tmp_path / "a" / "checkpoint.bsq").read_bytes()
    s, f = loads_checkpoint(raw)
    round_trip = dumps_checkpoint(s, f) == raw
    ineq = [run_inequality_suite(seed=4, samples=100).as_dict() for _ in range(2)]
    report(14, same and round_trip and ineq[0] == ineq[1],
           f"identical outputs {same}, checkpoint round trip {round_trip}, "
           f"inequality report repeatable {ineq[0] == ineq[1]}")


if __name__ == "__main__":
    import pathlib
    import tempfile

    sys.path.insert(0, str(pathlib.Path(__file__).parent))
    failures = 0
    t0 = time.time()
    for name, fn in sorted(globals().copy().items()):
        if not name.startswith("test_criterion_"):
            continue
        try:
            if "tmp_path" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as d:
                    fn(pathlib.Path(d))
            else:
                fn()
        except AssertionError:
            failures += 1
    print(f"{14 - failures}/14 criteria pass ({time.time() - t0:.0f} s)")
    sys.exit(1 if failures else 0)
