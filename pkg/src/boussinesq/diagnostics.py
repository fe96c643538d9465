"""Per-output-time diagnostics and their CSV form."""

from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass, fields, replace
from typing import Iterable, Sequence, TextIO

from .functionals import FORCING_DENOM, apriori_envelope, energy_breakdown, orlicz_norm, sqrtw_h1
from .spectral import Field, h1_norm, l2_norm, sobolev_norm


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    u_l2: float
    u_h1: float
    w_l2: float
    min_w: float
    mean_u: float
    mean_w: float
    entropy_Q: float
    orlicz_w: float
    energy_E: float
    dissipation_u: float
    dissipation_w: float
    sqrtw_h1: float
    envelope: float
    energy_law_residual: float
    u_h2: float
    w_h2: float

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]


class DiagnosticsContext:
    """Holds what every record of one run shares: E(0), f and its norm."""

    def __init__(self, state0, f: Field):
        self.f = f
        self.f_l2 = l2_norm(f)
        self.t0 = state0.t
        self.E0 = energy_breakdown(state0.u, state0.w, f).total

    def record(self, state) -> DiagnosticsRecord:
        u, w = state.u, state.w
        eb = energy_breakdown(u, w, self.f)
        return DiagnosticsRecord(
            t=state.t,
            u_l2=l2_norm(u),
            u_h1=h1_norm(u),
            w_l2=l2_norm(w),
            min_w=w.min(),
            mean_u=u.mean(),
            mean_w=w.mean(),
            entropy_Q=eb.entropy,
            orlicz_w=orlicz_norm(w),
            energy_E=eb.total,
            dissipation_u=eb.dissipation_u,
            dissipation_w=eb.dissipation_w,
            sqrtw_h1=sqrtw_h1(w),
            envelope=apriori_envelope(state.t - self.t0, self.E0, self.f_l2),
            energy_law_residual=math.nan,
            u_h2=sobolev_norm(u, 2.0),
            w_h2=sobolev_norm(w, 2.0),
        )


def with_energy_law_residuals(records: Sequence[DiagnosticsRecord], f_l2: float,
                              ) -> list[DiagnosticsRecord]:
    """Fill ``energy_law_residual`` at interior output times.

    The residual is dE/dt + ||u||_{H^1}^2 / 2 + integral of w_x^2 / w minus
    ||f||^2/(4 pi - 2), with dE/dt a centered difference over neighbouring
    records.  The energy law says it is <= 0; output spacing must be uniform
    around each interior point for the difference to be centered.
    """
    out = list(records)
    bound = f_l2**2 / FORCING_DENOM
    for i in range(1, len(out) - 1):
        prev, cur, nxt = out[i - 1], out[i], out[i + 1]
        h_lo, h_hi = cur.t - prev.t, nxt.t - cur.t
        if h_lo <= 0 or abs(h_hi - h_lo) > 1e-9 * max(h_lo, h_hi):
            continue
        dEdt = (nxt.energy_E - prev.energy_E) / (nxt.t - prev.t)
        lhs = dEdt + 0.5 * cur.u_h1**2 + cur.dissipation_w
        out[i] = replace(cur, energy_law_residual=lhs - bound)
    return out


def write_csv(records: Iterable[DiagnosticsRecord], stream: TextIO):
    """Header row then one row per record, 17 significant digits."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(DiagnosticsRecord.columns())
    for rec in records:
        writer.writerow([format(v, ".17g") for v in astuple(rec)])


def read_csv(stream: TextIO) -> list[DiagnosticsRecord]:
    reader = csv.reader(stream)
    header = next(reader)
    if header != DiagnosticsRecord.columns():
        raise ValueError(f"unexpected header {header}")
    return [DiagnosticsRecord(*map(float, row)) for row in reader]


class Recorder:
    """Observer that keeps every record (and optionally the states)."""

    def __init__(self, keep_states: bool = False):
        self.records: list[DiagnosticsRecord] = []
        self.states = [] if keep_states else None

    def __call__(self, state, record):
        self.records.append(record)
        if self.states is not None:
            self.states.append(state)
