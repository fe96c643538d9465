"""Plain-text ``key = value`` run configuration.

One pair per line; ``#`` starts a comment.  Every key can be overridden by
an environment variable: prefix ``BSQ_``, upper case, dots replaced by
underscores (``lyap.renorm_every`` -> ``BSQ_LYAP_RENORM_EVERY``).
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .dynamics import SolverConfig
from .errors import ConstraintError, MissingRequired, ParseError, UnknownKey

ENV_PREFIX = "BSQ_"

SCENARIOS = ("decay", "forced", "smoothing", "inequalities", "taylor", "lyapunov", "sweep")
IC_FAMILIES = ("random", "modes", "step", "rest")


def _floats(text: str) -> tuple:
    return tuple(float(p) for p in text.split(",") if p.strip())


# key -> (converter, default); a default of None means required
_SCALARS = {
    "n": (int, 128),
    "dt": (float, 1e-3),
    "t_end": (float, 20.0),
    "output_every": (int, 100),
    "scenario": (str, None),
    "seed": (int, 0),
    "ic.family": (str, "random"),
    "ic.u_amp": (float, 0.3),
    "ic.w_amp": (float, 0.3),
    "ic.kmax": (int, 4),
    "ic.k": (int, 1),
    "ic.width": (float, 0.02),
    "ic.entropy": (float, 0.05),
    "ic.sharpen": (float, 4.0),
    "lyap.m": (int, 8),
    "lyap.renorm_every": (int, 10),
    "lyap.t_spin": (float, 50.0),
    "lyap.t_align": (float, 1.0),
    "sweep.amplitudes": (_floats, (0.0, 1.0, 5.0, 10.0)),
    "sweep.mode": (int, 1),
    "sweep.workers": (int, 1),
    "taylor.t": (float, 1.0),
    "taylor.eps": (_floats, (1e-2, 1e-3, 1e-4, 1e-5)),
    "taylor.pairs": (int, 3),
    "taylor.kmax": (int, 4),
    "taylor.t_spin": (float, 5.0),
    "inequalities.samples": (int, 1000),
}

_FORCING_KEY = re.compile(r"^forcing\.(k|cos|sin)\.(\d+)$")


@dataclass(frozen=True)
class ExperimentConfig:
    """Solver settings plus the parameters of every scenario."""

    solver: SolverConfig
    scenario: str
    seed: int = 0
    ic: Mapping = field(default_factory=dict)
    lyap: Mapping = field(default_factory=dict)
    sweep: Mapping = field(default_factory=dict)
    taylor: Mapping = field(default_factory=dict)
    inequalities: Mapping = field(default_factory=dict)
    raw: Mapping = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.solver.n


def env_key(key: str) -> str:
    return ENV_PREFIX + key.upper().replace(".", "_")


def _known(key: str) -> bool:
    return key in _SCALARS or _FORCING_KEY.match(key) is not None


def parse_text(text: str) -> dict:
    """Raw ``{key: (value, line)}`` pairs from config text."""
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ParseError(f"expected 'key = value', got {body!r}", lineno)
        key, value = (p.strip() for p in body.split("=", 1))
        if not key:
            raise ParseError("empty key", lineno)
        if not value:
            raise ParseError(f"empty value for key {key!r}", lineno)
        if key in pairs:
            raise ParseError(f"duplicate key {key!r} (first set on line {pairs[key][1]})", lineno)
        pairs[key] = (value, lineno)
    return pairs


def _env_overrides(environ: Mapping[str, str], file_keys) -> dict:
    """Environment values for known keys (and forcing keys already in the file).

    Forcing keys from the environment are matched through a reverse lookup
    since their index is free-form.
    """
    out = {}
    lookup = {env_key(k): k for k in list(_SCALARS) + list(file_keys)}
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        key = lookup.get(name)
        if key is None:
            m = re.match(rf"^{ENV_PREFIX}FORCING_(K|COS|SIN)_(\d+)$", name)
            if m is None:
                continue
            key = f"forcing.{m.group(1).lower()}.{m.group(2)}"
        out[key] = (value, None)
    return out


def build_config(pairs: Mapping[str, tuple]) -> ExperimentConfig:
    values = {}
    forcing: dict[int, dict] = {}
    for key, (text, line) in pairs.items():
        if not _known(key):
            where = f" (line {line})" if line is not None else ""
            raise UnknownKey(f"unknown key {key!r}{where}")
        m = _FORCING_KEY.match(key)
        try:
            if m:
                part, idx = m.group(1), int(m.group(2))
                forcing.setdefault(idx, {})[part] = int(text) if part == "k" else float(text)
            else:
                values[key] = _SCALARS[key][0](text)
        except ValueError as exc:
            raise ParseError(f"bad value for {key!r}: {exc}", line) from None

    for key, (_, default) in _SCALARS.items():
        if key not in values:
            if default is None:
                raise MissingRequired(f"required key {key!r} is missing")
            values[key] = default

    modes = []
    for idx in sorted(forcing):
        entry = forcing[idx]
        if "k" not in entry:
            raise MissingRequired(f"forcing entry {idx} needs forcing.k.{idx}")
        if entry["k"] == 0:
            raise ConstraintError(
                f"forcing.k.{idx} = 0: the forcing must be mean-free, so k = 0 is not allowed")
        modes.append((entry["k"], entry.get("cos", 0.0), entry.get("sin", 0.0)))

    if values["scenario"] not in SCENARIOS:
        raise ConstraintError(f"scenario must be one of {SCENARIOS}, got {values['scenario']!r}")
    if values["ic.family"] not in IC_FAMILIES:
        raise ConstraintError(f"ic.family must be one of {IC_FAMILIES}")
    if values["scenario"] == "forced" and not modes:
        raise MissingRequired("scenario 'forced' needs at least one forcing.k.<i> entry")
    if values["lyap.m"] > values["n"] // 4:
        raise ConstraintError(f"lyap.m must be <= n/4 = {values['n'] // 4}")
    if values["sweep.workers"] < 1:
        raise ConstraintError("sweep.workers must be >= 1")

    try:
        solver = SolverConfig(n=values["n"], dt=values["dt"], t_end=values["t_end"],
                              forcing=tuple(modes), output_every=values["output_every"])
    except ValueError as exc:
        raise ConstraintError(str(exc)) from None

    def group(prefix):
        return {k[len(prefix) + 1:]: v for k, v in values.items() if k.startswith(prefix + ".")}

    return ExperimentConfig(
        solver=solver,
        scenario=values["scenario"],
        seed=values["seed"],
        ic=group("ic"),
        lyap=group("lyap"),
        sweep=group("sweep"),
        taylor=group("taylor"),
        inequalities=group("inequalities"),
        raw={k: v[0] for k, v in pairs.items()},
    )


def parse_config(path, environ: Optional[Mapping[str, str]] = None,
                 overrides: Optional[Mapping[str, str]] = None) -> ExperimentConfig:
    """Read ``path`` and apply ``BSQ_*`` overrides from ``environ``.

    ``environ`` defaults to ``os.environ``; pass ``{}`` to ignore it.
    ``overrides`` (key to text value) take precedence over both.
    """
    with open(path, encoding="utf-8") as fh:
        pairs = parse_text(fh.read())
    env = os.environ if environ is None else environ
    pairs.update(_env_overrides(env, pairs))
    pairs.update({k: (str(v), None) for k, v in (overrides or {}).items()})
    return build_config(pairs)


def config_text(cfg: ExperimentConfig) -> str:
    """Canonical text form of the settings that were given explicitly."""
    return "".join(f"{k} = {v}\n" for k, v in sorted(cfg.raw.items()))
