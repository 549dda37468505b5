"""Batch front end.

Subcommands read an INI-style config (``key = value`` under ``[section]``
headers) and write one CSV table to stdout or ``--out``.  Diagnostics go to
stderr.

Exit codes: 0 success, 1 I/O failure, 2 invalid config or arguments,
3 perturbative formula out of regime, 4 integration failure.
"""

from __future__ import annotations

import argparse
import configparser
import io
import logging
import math
import os
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from . import __version__
from .core import BroadeningParams, analytic_moments, entanglement_fidelity
from .ensemble import DEFAULT_ODE_TOL, MAX_DIRECT_N, RealizationModel, mc_entanglement_fidelity
from .exceptions import DomainError, IntegrationError, OutOfRegimeError
from .measurement import (
    ModeSpectrum,
    OverlapVector,
    aligned_identity,
    detection_probabilities,
    interference_objective,
    tune_pulse_shaper,
)
from .raman import BOLTZMANN, SPEED_OF_LIGHT, RamanConfig, derive_dimensionless, sweep_chi

log = logging.getLogger("qmfidelity")

COMMANDS = ("analytic", "mc", "raman-sweep", "measure")
DEFAULT_SEED = 0

ANALYTIC_COLUMNS = ["m00", "m11", "mc", "x0", "degenerate", "fidelity"]
MC_COLUMNS = ANALYTIC_COLUMNS + ["err00", "err11", "errc", "f_err", "n_samples", "seed"]
SWEEP_COLUMNS = ["chi", "zeta", "fidelity", "out_of_regime"]
MEASURE_COLUMNS = ["candidate", "P1", "P2", "P12", "objective", "selected"]

_REQUIRED = {
    "analytic": ("state0", "state1"),
    "mc": ("state0", "state1"),
    "raman-sweep": ("raman",),
    "measure": ("spectrum", "candidates"),
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    sections: dict[str, dict[str, str]]
    n_samples: int = 1000
    seed: int = DEFAULT_SEED
    threads: int = 1
    ode_tol: float = DEFAULT_ODE_TOL
    out: str | None = None
    chi_max: float | None = None
    chi_points: int | None = None
    base_dir: str = field(default=".", repr=False)


# -- config text ---------------------------------------------------------------

def parse_config(text: str) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from exc
    return {name: dict(parser[name]) for name in parser.sections()}


def format_config(sections: dict[str, dict[str, str]]) -> str:
    lines = []
    for name, entries in sections.items():
        lines.append(f"[{name}]")
        lines.extend(f"{key} = {value}" for key, value in entries.items())
        lines.append("")
    return "\n".join(lines)


def _number(section, key, cast=float, default=None, required=False):
    name, entries = section
    if key not in entries:
        if required:
            raise ConfigError(f"[{name}] missing required field '{key}'")
        return default
    raw = entries[key]
    try:
        if cast is int:
            value = float(raw)
            if not value.is_integer():
                raise ValueError
            return int(value)
        if cast is bool:
            lowered = raw.strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError
        value = float(raw)
        if not math.isfinite(value):
            raise ValueError
        return value
    except ValueError:
        raise ConfigError(f"[{name}] field '{key}' has invalid value {raw!r}") from None


def _floats(name, key, raw):
    try:
        values = [float(x) for x in raw.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"[{name}] field '{key}' must be a list of numbers") from None
    if not values:
        raise ConfigError(f"[{name}] field '{key}' is empty")
    return values


def _section(cfg: RunConfig, name):
    if name not in cfg.sections:
        raise ConfigError(f"missing section [{name}]")
    return name, cfg.sections[name]


def _check_keys(section, allowed):
    name, entries = section
    unknown = sorted(set(entries) - set(allowed))
    if unknown:
        raise ConfigError(f"[{name}] unknown field '{unknown[0]}'")


_BROADENING_FIELDS = [f.name for f in fields(BroadeningParams)]


def broadening_from_section(section) -> BroadeningParams:
    _check_keys(section, _BROADENING_FIELDS)
    values = {"kappa_mean": _number(section, "kappa_mean", required=True)}
    for key in _BROADENING_FIELDS[1:]:
        cast = int if key == "n_absorbers" else float
        value = _number(section, key, cast)
        if value is not None:
            values[key] = value
    try:
        return BroadeningParams(**values)
    except DomainError as exc:
        raise ConfigError(f"[{section[0]}] {exc}") from exc


def model_from_section(section) -> RealizationModel:
    kind = section[1].get("model", "independent").strip()
    try:
        if kind == "independent":
            return RealizationModel.independent(_number(section, "redraw_kappa", bool, True))
        if kind == "velocity":
            return RealizationModel.velocity_driven(
                _number(section, "omega_c", required=True), _number(section, "chi", required=True)
            )
    except DomainError as exc:
        raise ConfigError(f"[{section[0]}] {exc}") from exc
    raise ConfigError(f"[{section[0]}] field 'model' must be independent or velocity, got {kind!r}")


_RAMAN_FIELDS = [f.name for f in fields(RamanConfig)]


def raman_from_section(section) -> RamanConfig:
    _check_keys(section, _RAMAN_FIELDS)
    values = {}
    for key in _RAMAN_FIELDS:
        optional = key in ("detuning", "bandwidth")
        values[key] = _number(section, key, int if key == "n_atoms" else float,
                              required=not optional)
    try:
        return RamanConfig(**values)
    except DomainError as exc:
        raise ConfigError(f"[{section[0]}] {exc}") from exc


def spectrum_from_section(cfg: RunConfig) -> ModeSpectrum:
    name, entries = _section(cfg, "spectrum")
    try:
        if "csv" in entries:
            path = entries["csv"]
            if not os.path.isabs(path):
                path = os.path.join(cfg.base_dir, path)
            return ModeSpectrum.from_csv(path)
        if "p" not in entries:
            raise ConfigError("[spectrum] needs either 'csv' or 'p' (with 'p0')")
        return ModeSpectrum(tuple(_floats(name, "p", entries["p"])),
                            _number((name, entries), "p0", required=True))
    except (DomainError, ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[spectrum] {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"[spectrum] cannot read csv: {exc}") from exc


# -- reports -------------------------------------------------------------------

def _format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def emit_report(rows, columns, out=None) -> str:
    """Write rows (mappings keyed by column) as CSV; returns the text written."""
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_format_value(row[c]) for c in columns) + "\n")
    text = buf.getvalue()
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


# -- commands ------------------------------------------------------------------

def _states(cfg):
    return (broadening_from_section(_section(cfg, "state0")),
            broadening_from_section(_section(cfg, "state1")))


def run_analytic(cfg: RunConfig):
    p0, p1 = _states(cfg)
    m = analytic_moments(p0, p1)
    r = entanglement_fidelity(m)
    return [dict(m00=m.m00, m11=m.m11, mc=m.mc, x0=r.x0, degenerate=r.degenerate,
                 fidelity=r.fidelity)], ANALYTIC_COLUMNS


def run_mc(cfg: RunConfig):
    p0, p1 = _states(cfg)
    mc_section = ("mc", cfg.sections.get("mc", {}))
    _check_keys(mc_section, ("model", "redraw_kappa", "omega_c", "chi", "n_samples", "seed",
                             "ode_tol"))
    model = model_from_section(mc_section)
    for p in (p0, p1):
        if p.n_absorbers > MAX_DIRECT_N:
            raise ConfigError(
                f"n_absorbers={p.n_absorbers} exceeds the direct-simulation limit "
                f"{MAX_DIRECT_N}; use the analytic command"
            )
    log.info("mc: %d samples, seed %d, %d thread(s)", cfg.n_samples, cfg.seed, cfg.threads)
    r, est = mc_entanglement_fidelity(p0, p1, model, cfg.n_samples, cfg.seed, cfg.ode_tol,
                                      cfg.threads)
    m = est.moments
    return [dict(m00=m.m00, m11=m.m11, mc=m.mc, x0=r.x0, degenerate=r.degenerate,
                 fidelity=r.fidelity, err00=m.err00, err11=m.err11, errc=m.errc,
                 f_err=r.fidelity_err, n_samples=est.n_samples, seed=est.seed)], MC_COLUMNS


def run_raman_sweep(cfg: RunConfig):
    rc = raman_from_section(_section(cfg, "raman"))
    sweep = ("sweep", cfg.sections.get("sweep", {}))
    _check_keys(sweep, ("chi_min", "chi_max", "n_points"))
    d = derive_dimensionless(rc)
    chi_min = _number(sweep, "chi_min", default=0.0)
    chi_max = cfg.chi_max if cfg.chi_max is not None else _number(sweep, "chi_max")
    if chi_max is None:
        if d.zeta == 0:
            raise ConfigError("[sweep] chi_max is required when zeta = 0")
        chi_max = 1.0 / math.sqrt(d.zeta)
    n_points = cfg.chi_points if cfg.chi_points is not None else _number(
        sweep, "n_points", int, 101)
    if n_points < 1:
        raise ConfigError("number of sweep points must be >= 1")
    if chi_max < chi_min:
        raise ConfigError(f"chi_max={chi_max} is below chi_min={chi_min}")
    log.info("raman-sweep: zeta=%.6g omega_c=%.6g chi in [%g, %g]", d.zeta, d.omega_c,
             chi_min, chi_max)
    rows = sweep_chi(rc, np.linspace(chi_min, chi_max, n_points))
    return [row._asdict() for row in rows], SWEEP_COLUMNS


def run_measure(cfg: RunConfig):
    spectrum = spectrum_from_section(cfg)
    name, entries = _section(cfg, "candidates")
    if not entries:
        raise ConfigError("[candidates] must list at least one overlap vector")
    candidates = []
    for key, raw in entries.items():
        try:
            candidates.append(OverlapVector(tuple(_floats(name, key, raw))))
        except DomainError as exc:
            raise ConfigError(f"[candidates] {key}: {exc}") from exc
    try:
        best, _ = tune_pulse_shaper(spectrum, candidates)
        rows = []
        for i, (key, o) in enumerate(zip(entries, candidates)):
            probs = detection_probabilities(spectrum, o)
            rows.append(dict(candidate=key, P1=probs.P1, P2=probs.P2, P12=probs.P12,
                             objective=interference_objective(spectrum, o),
                             selected=(i == best)))
    except DomainError as exc:
        raise ConfigError(f"[candidates] {exc}") from exc
    log.info("measure: selected %s; aligned p0 + p1 = %.17g", list(entries)[best],
             aligned_identity(spectrum))
    return rows, MEASURE_COLUMNS


_RUNNERS = {
    "analytic": run_analytic,
    "mc": run_mc,
    "raman-sweep": run_raman_sweep,
    "measure": run_measure,
}


# -- argument handling -----------------------------------------------------------

def _version_text():
    return (f"qmfidelity {__version__}\n"
            f"k_B = {BOLTZMANN!r} J/K (CODATA 2018)\n"
            f"c = {SPEED_OF_LIGHT!r} m/s (CODATA 2018)")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    parser = _Parser(prog="qmfidelity", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="store_true", help="print version and constants")
    sub = parser.add_subparsers(dest="command")
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, metavar="PATH")
        cmd.add_argument("--out", metavar="PATH")
        if name == "mc":
            cmd.add_argument("--samples", type=int, metavar="N")
            cmd.add_argument("--seed", type=int, metavar="U64")
            cmd.add_argument("--threads", type=int, default=1, metavar="N")
            cmd.add_argument("--ode-tol", type=float, metavar="REAL")
        if name == "raman-sweep":
            cmd.add_argument("--chi-max", type=float, metavar="REAL")
            cmd.add_argument("--chi-points", type=int, metavar="N")
    return parser


def load_run_config(args) -> RunConfig:
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    sections = parse_config(text)
    for name in _REQUIRED[args.command]:
        if name not in sections:
            raise ConfigError(f"command '{args.command}' requires section [{name}]")
    cfg = RunConfig(args.command, sections, out=args.out,
                    base_dir=os.path.dirname(os.path.abspath(args.config)))
    if args.command == "mc":
        run = ("mc", sections.get("mc", {}))
        cfg.n_samples = args.samples if args.samples is not None else _number(
            run, "n_samples", int, 1000)
        cfg.seed = args.seed if args.seed is not None else _number(run, "seed", int, DEFAULT_SEED)
        cfg.ode_tol = args.ode_tol if args.ode_tol is not None else _number(
            run, "ode_tol", float, DEFAULT_ODE_TOL)
        cfg.threads = args.threads
        if cfg.n_samples < 1:
            raise ConfigError("--samples must be >= 1")
        if not 0 <= cfg.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        if cfg.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if not cfg.ode_tol > 0:
            raise ConfigError("--ode-tol must be positive")
    if args.command == "raman-sweep":
        cfg.chi_max = args.chi_max
        cfg.chi_points = args.chi_points
    return cfg


def run(argv=None) -> int:
    """Execute one command; returns the process exit code."""
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(name)s: %(levelname)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    log.propagate = False
    try:
        return _run(argv)
    finally:
        log.removeHandler(handler)


def _run(argv) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.version:
            print(_version_text())
            return 0
        if args.command is None:
            raise ConfigError("a command is required: " + ", ".join(COMMANDS))
        cfg = load_run_config(args)
        rows, columns = _RUNNERS[cfg.command](cfg)
    except (ConfigError, DomainError) as exc:
        log.error("%s", exc)
        return 2
    except OutOfRegimeError as exc:
        log.error("out of regime: %s", exc)
        return 3
    except IntegrationError as exc:
        log.error("integration failure: %s", exc)
        return 4
    try:
        emit_report(rows, columns, cfg.out)
    except OSError as exc:
        log.error("cannot write output: %s", exc)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
