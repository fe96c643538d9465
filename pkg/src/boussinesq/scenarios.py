"""Named batch scenarios.

Each scenario writes into its output directory:

* ``summary.txt``: ``key=value`` lines, always including ``breaches``;
* ``diagnostics.csv`` for time-dependent runs;
* ``checkpoint.bsq``, the final state of time-dependent runs;
* ``failure.json`` when any check was breached.

The exit status is nonzero exactly when ``breaches`` is positive.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .checkpoint import save_checkpoint
from .config import ExperimentConfig
from .diagnostics import Recorder, with_energy_law_residuals, write_csv
from .dimension import (
    STATED_TRACE_BOUND,
    TRACE_SUM_LIMIT,
    attractor_bound_M,
    lyapunov_spectrum,
    trace_sum,
)
from .dynamics import SolverConfig, State, advance, integrate
from .errors import BoussinesqError
from .functionals import FORCING_DENOM
from .inequalities import run_inequality_suite
from .initial import perturbed_rest, random_perturbed, rough_state
from .spectral import Field, h1_norm, l2_norm
from .tangent import fitted_slope, random_tangent, taylor_remainders

log = logging.getLogger(__name__)

# tolerances for the per-record checks
MEAN_TOL = 1e-10
SPLIT_TOL = 1e-10
ENVELOPE_TOL = 1e-6
MONOTONE_TOL = 1e-8
ENERGY_LAW_TOL = 1e-3
DECAY_FACTOR = 1e-3
SMOOTHING_RATIO = 2.0


@dataclass
class Outcome:
    scenario: str
    summary: dict = field(default_factory=dict)
    breaches: list = field(default_factory=list)

    @property
    def status(self) -> int:
        return 1 if self.breaches else 0

    def breach(self, message: str):
        log.error("%s: %s", self.scenario, message)
        self.breaches.append(message)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if v is None:
        return "none"
    if isinstance(v, (list, tuple, np.ndarray)):
        return ",".join(_fmt(x) for x in v)
    return str(v)


def write_summary(outcome: Outcome, out: Path):
    lines = [f"scenario={outcome.scenario}", f"breaches={len(outcome.breaches)}"]
    lines += [f"{k}={_fmt(v)}" for k, v in outcome.summary.items()]
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    failure = out / "failure.json"
    if outcome.breaches:
        failure.write_text(json.dumps(
            {"scenario": outcome.scenario, "breaches": outcome.breaches}, indent=2) + "\n")
    elif failure.exists():
        failure.unlink()


def read_summary(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if line:
            k, v = line.split("=", 1)
            out[k] = v
    return out


# --------------------------------------------------------------------------
# Initial data


def initial_state(cfg: ExperimentConfig, seed_offset: int = 0) -> State:
    grid = cfg.solver.grid
    ic = cfg.ic
    family = ic["family"]
    if family == "random":
        return random_perturbed(grid, cfg.seed + seed_offset, ic["u_amp"], ic["w_amp"], ic["kmax"])
    if family == "modes":
        k = ic["k"]
        return perturbed_rest(grid, [(k, 0.0, ic["u_amp"])], [(k, ic["w_amp"], 0.0)])
    if family == "step":
        return rough_state(grid, ic["width"], ic["entropy"])
    return State.equilibrium(grid)


# --------------------------------------------------------------------------
# Time-dependent runs


def check_records(records, f_l2: float, outcome: Outcome, prefix: str = "") -> dict:
    """Count per-record invariant breaches and note them on ``outcome``."""
    counts = dict(conservation_violations=0, split_violations=0, envelope_violations=0,
                  energy_law_violations=0, positivity_violations=0)
    bound = f_l2**2 / FORCING_DENOM
    for r in records:
        if abs(r.mean_u) > MEAN_TOL or abs(r.mean_w - 1.0) > MEAN_TOL:
            counts["conservation_violations"] += 1
        if abs(r.energy_E - r.entropy_Q - 0.5 * r.u_h1**2) > SPLIT_TOL * max(1.0, r.energy_E):
            counts["split_violations"] += 1
        if r.energy_E > r.envelope + ENVELOPE_TOL:
            counts["envelope_violations"] += 1
        if not math.isnan(r.energy_law_residual):
            # residual already has the forcing bound subtracted
            if r.energy_law_residual > ENERGY_LAW_TOL * (1.0 + r.energy_E):
                counts["energy_law_violations"] += 1
        if not r.min_w > 0:
            counts["positivity_violations"] += 1
    for k, v in counts.items():
        if v:
            outcome.breach(f"{prefix}{k}={v}")
    out = {prefix + k: v for k, v in counts.items()}
    out[prefix + "energy_law_bound"] = bound
    finite = [r.energy_law_residual for r in records if not math.isnan(r.energy_law_residual)]
    out[prefix + "energy_law_max_residual"] = max(finite) if finite else math.nan
    return out


def alpha_diagnostic(records, prefix: str = "") -> dict:
    """Logged only: does min w stay above alpha = min w(0)?"""
    alpha = records[0].min_w
    lowest = min(r.min_w for r in records)
    dips = sum(r.min_w < alpha for r in records)
    if dips:
        log.info("min w fell below its initial value %.6g (lowest %.6g)", alpha, lowest)
    return {prefix + "alpha": alpha, prefix + "min_w_lowest": lowest,
            prefix + "alpha_dips_logged": dips}


def run_dynamics(state0: State, solver: SolverConfig, f: Field, out: Optional[Path],
                 outcome: Outcome, csv_name: str = "diagnostics.csv",
                 checkpoint_name: Optional[str] = "checkpoint.bsq", prefix: str = ""):
    """Integrate with diagnostics; returns (final state or None, records)."""
    rec = Recorder()
    final = None
    try:
        final = integrate(state0, solver, rec, f=f)
    except BoussinesqError as exc:
        outcome.breach(f"{prefix}integration failed: {exc}")
    records = with_energy_law_residuals(rec.records, l2_norm(f))
    if out is not None:
        with open(out / csv_name, "w", newline="") as fh:
            write_csv(records, fh)
        if final is not None and checkpoint_name:
            save_checkpoint(final, f, out / checkpoint_name)
    outcome.summary.update(check_records(records, l2_norm(f), outcome, prefix))
    if records:
        outcome.summary.update(alpha_diagnostic(records, prefix))
    return final, records


def scenario_decay(cfg: ExperimentConfig, out: Path, state0: Optional[State] = None) -> Outcome:
    o = Outcome("decay")
    grid = cfg.solver.grid
    f = Field.zeros(grid)
    state0 = state0 or initial_state(cfg)
    final, records = run_dynamics(state0, cfg.solver, f, out, o)
    if final is None:
        return o
    drops = np.diff([r.energy_E for r in records])
    o.summary["monotonicity_violations"] = int(np.sum(drops > MONOTONE_TOL))
    if o.summary["monotonicity_violations"]:
        o.breach(f"Lyapunov functional increased at {o.summary['monotonicity_violations']} outputs")

    def dist(s):
        return h1_norm(s.u) + l2_norm(s.w - 1.0)

    d0, d1 = dist(state0), dist(final)
    ratio = d1 / d0 if d0 > 0 else 0.0
    o.summary.update(initial_distance=d0, final_distance=d1, decay_ratio=ratio,
                     t_final=records[-1].t)
    if records[-1].t - records[0].t >= 20.0 and not ratio < DECAY_FACTOR:
        o.breach(f"decay ratio {ratio:.3e} not below {DECAY_FACTOR} by T = 20")
    return o


def scenario_forced(cfg: ExperimentConfig, out: Path, state0: Optional[State] = None) -> Outcome:
    o = Outcome("forced")
    grid = cfg.solver.grid
    f = cfg.solver.forcing_field(grid)
    state0 = state0 or initial_state(cfg)
    _, records = run_dynamics(state0, cfg.solver, f, out, o)
    if not records:
        return o
    f_l2 = l2_norm(f)
    o.summary.update(
        f_l2=f_l2,
        M=attractor_bound_M(f_l2),
        sup_w_l2=max(r.w_l2 for r in records),
        sup_u_h2=max(r.u_h2 for r in records),
        sup_w_h2=max(r.w_h2 for r in records),
        sup_energy=max(r.energy_E for r in records),
        t_final=records[-1].t,
    )
    for key in ("sup_w_l2", "sup_u_h2", "sup_w_h2"):
        if not math.isfinite(o.summary[key]):
            o.breach(f"{key} is not finite")
    return o


def smoothing_sup(records, t_lo: float = 1.0, t_hi: float = 10.0) -> float:
    vals = [r.sqrtw_h1 for r in records if t_lo - 1e-12 <= r.t - records[0].t <= t_hi + 1e-12]
    return max(vals) if vals else math.nan


def scenario_smoothing(cfg: ExperimentConfig, out: Path) -> Outcome:
    """Two smoothed steps of equal entropy, the second sharper by ic.sharpen."""
    o = Outcome("smoothing")
    grid = cfg.solver.grid
    f = cfg.solver.forcing_field(grid)
    width, target = cfg.ic["width"], cfg.ic["entropy"]
    sups = []
    for label, wd in (("base", width), ("sharp", width / cfg.ic["sharpen"])):
        try:
            state0 = rough_state(grid, wd, target)
        except (ValueError, BoussinesqError) as exc:
            o.breach(f"{label}: cannot build initial step: {exc}")
            return o
        csv_name = "diagnostics.csv" if label == "base" else f"diagnostics_{label}.csv"
        _, records = run_dynamics(state0, cfg.solver, f, out, o, csv_name,
                                  checkpoint_name=None, prefix=f"{label}.")
        sup = smoothing_sup(records) if records else math.nan
        o.summary[f"{label}.width"] = wd
        o.summary[f"{label}.initial_sqrtw_h1"] = records[0].sqrtw_h1 if records else math.nan
        o.summary[f"{label}.sup_sqrtw_h1"] = sup
        sups.append(sup)
    ratio = max(sups) / min(sups) if all(math.isfinite(s) and s > 0 for s in sups) else math.nan
    o.summary["sup_ratio"] = ratio
    if not ratio < SMOOTHING_RATIO:
        o.breach(f"smoothing sup ratio {ratio} not below {SMOOTHING_RATIO}")
    return o


def scenario_inequalities(cfg: ExperimentConfig, out: Path) -> Outcome:
    o = Outcome("inequalities")
    report = run_inequality_suite(cfg.seed, cfg.inequalities["samples"])
    o.summary.update(report.as_dict())
    for r in report.results:
        if not r.passed:
            o.breach(f"{r.name}: {r.violations} of {r.samples} samples violate")
    return o


def scenario_taylor(cfg: ExperimentConfig, out: Path) -> Outcome:
    """Taylor-remainder order for seeded (base, direction) pairs."""
    o = Outcome("taylor")
    tp = cfg.taylor
    solver = cfg.solver
    f = solver.forcing_field()
    eps = np.asarray(tp["eps"])
    slopes = []
    for i in range(tp["pairs"]):
        x0 = initial_state(cfg, seed_offset=i)
        base = advance(x0, f, tp["t_spin"], solver.dt) if tp["t_spin"] > 0 else x0
        rng = np.random.default_rng([cfg.seed, i])
        beta = random_tangent(solver.grid, rng, kmax=tp["kmax"], decay=2.0)
        rem, _ = taylor_remainders(base, beta, f, tp["t"], eps, solver.dt)
        slope = fitted_slope(eps, rem)
        slopes.append(slope)
        o.summary[f"pair{i}.remainders"] = rem
        o.summary[f"pair{i}.slope"] = slope
    o.summary["eps"] = eps
    o.summary["slope"] = min(slopes)
    o.summary["slope_mean"] = float(np.mean(slopes))
    bad = [s for s in slopes if not s > 1.0]
    if bad:
        o.breach(f"{len(bad)} fitted remainder orders not above 1: {bad}")
    return o


def _lyapunov_run(cfg: ExperimentConfig, f: Field) -> dict:
    lp = cfg.lyap
    x0 = initial_state(cfg)
    rep = lyapunov_spectrum(x0, f, lp["m"], cfg.solver.t_end, lp["renorm_every"], cfg.seed,
                            dt=cfg.solver.dt, t_spin=lp["t_spin"], t_align=lp["t_align"])
    return dict(f_l2=l2_norm(f), M=rep.M, m_star=rep.m_star, ky=rep.ky_dimension,
                exponents=rep.exponents, cumulative=rep.cumulative,
                log_gram_slope=rep.log_gram_slope, renorm_interval=rep.renorm_interval)


def trace_flags(m: int) -> dict:
    ts = trace_sum(max(2, m + m % 2))
    return dict(trace_sum=ts, trace_sum_limit=TRACE_SUM_LIMIT,
                stated_trace_bound=STATED_TRACE_BOUND,
                stated_trace_bound_consistent=bool(TRACE_SUM_LIMIT <= STATED_TRACE_BOUND),
                stated_trace_bound_note="sum 2 pi^2 (2 pi k)^-2 converges to pi^2/12, "
                                       "exceeding the stated 1/12")


def scenario_lyapunov(cfg: ExperimentConfig, out: Path) -> Outcome:
    o = Outcome("lyapunov")
    f = cfg.solver.forcing_field()
    try:
        res = _lyapunov_run(cfg, f)
    except BoussinesqError as exc:
        o.breach(f"lyapunov run failed: {exc}")
        return o
    o.summary.update(res)
    o.summary["gram_vs_sum_gap"] = res["log_gram_slope"] - 2.0 * res["cumulative"][-1]
    o.summary.update(trace_flags(cfg.lyap["m"]))
    if res["m_star"] is None:
        o.breach("no partial sum of exponents is negative: m_star undetermined")
    if res["f_l2"] == 0.0 and np.any(res["exponents"] > 1e-6):
        o.breach("unforced run has a positive exponent")
    return o


def _sweep_member(args):
    cfg, amplitude, out = args
    k = cfg.sweep["mode"]
    solver = replace(cfg.solver, forcing=((k, amplitude, 0.0),) if amplitude else ())
    member = replace(cfg, solver=solver, scenario="lyapunov")
    out.mkdir(parents=True, exist_ok=True)
    o = scenario_lyapunov(member, out)
    write_summary(o, out)
    return amplitude, o


def scenario_sweep(cfg: ExperimentConfig, out: Path) -> Outcome:
    """Lyapunov runs over forcing amplitudes; each member has its own directory."""
    o = Outcome("sweep")
    amps = sorted(set(cfg.sweep["amplitudes"]))
    jobs = [(cfg, a, out / f"member_{i:03d}") for i, a in enumerate(amps)]
    workers = cfg.sweep["workers"]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_member, jobs))
    else:
        results = [_sweep_member(j) for j in jobs]
    results.sort(key=lambda r: r[0])

    rows = ["amplitude,f_l2,M,m_star,ky"]
    for a, member in results:
        s = member.summary
        for b in member.breaches:
            o.breach(f"amplitude {a}: {b}")
        rows.append(",".join(_fmt(x) for x in
                             (a, s.get("f_l2"), s.get("M"), s.get("m_star"), s.get("ky"))))
    (out / "sweep.csv").write_text("\n".join(rows) + "\n")
    o.summary["members"] = len(results)
    o.summary["amplitudes"] = amps
    o.summary["M"] = [m.summary.get("M") for _, m in results]
    o.summary["m_star"] = [m.summary.get("m_star") for _, m in results]
    o.summary.update(trace_flags(cfg.lyap["m"]))
    return o


SCENARIOS: dict[str, Callable[[ExperimentConfig, Path], Outcome]] = {
    "decay": scenario_decay,
    "forced": scenario_forced,
    "smoothing": scenario_smoothing,
    "inequalities": scenario_inequalities,
    "taylor": scenario_taylor,
    "lyapunov": scenario_lyapunov,
    "sweep": scenario_sweep,
}


def run_scenario(name: str, cfg: ExperimentConfig, out) -> Outcome:
    """Run scenario ``name`` into directory ``out``; see module docs for files."""
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    outcome = SCENARIOS[name](cfg, out)
    write_summary(outcome, out)
    return outcome


def resume_run(state: State, f: Field, cfg: ExperimentConfig, out) -> Outcome:
    """Continue a checkpointed run up to absolute time ``t_end``.

    The forcing stored in the checkpoint is used; the config supplies the
    grid check, step size and output cadence.
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    name = cfg.scenario if cfg.scenario in ("decay", "forced") else "forced"
    o = Outcome(f"resume-{name}")
    if state.grid.n != cfg.n:
        o.breach(f"checkpoint n = {state.grid.n} does not match config n = {cfg.n}")
        write_summary(o, out)
        return o
    remaining = cfg.solver.t_end - state.t
    if remaining < -1e-12:
        o.breach(f"checkpoint time {state.t} is past t_end = {cfg.solver.t_end}")
        write_summary(o, out)
        return o
    steps = round(max(remaining, 0.0) / cfg.solver.dt)
    solver = replace(cfg.solver, t_end=steps * cfg.solver.dt)
    run_dynamics(state, solver, f, out, o)
    o.summary["t_start"] = state.t
    write_summary(o, out)
    return o

