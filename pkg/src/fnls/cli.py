"""Batch command-line front end for the toolkit.

Six subcommands drive the pipeline end to end and emit plot-ready CSVs:

* ``scatter``    -- profile in, scattering document + reflection CSV out
* ``soliton``    -- discrete data in, exact field on an (x, t) grid out
* ``asymptote``  -- discrete data + cone in, leading-order field out
* ``evolve``     -- profile or discrete data in, split-step run out
* ``compare``    -- two stored/closed-form fields in, error table out
* ``verify``     -- runs the acceptance criteria, machine-readable report out

Configuration lives in a single INI file (sections of key = value pairs);
every key can be overridden on the command line as ``--<section>-<key>``.
``--config-reference`` prints a fully commented reference config with every
default.  The only environment variable honoured is ``FNLS_OUTPUT_DIR``,
which overrides ``run.output_dir``.

Exit codes: 0 on success, 1 when a verification criterion fails, 2 on
input or configuration errors.  Outputs are deterministic: a fixed number
format (17 significant digits, '.' decimal), fixed row order, no locale or
timestamp dependence.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .acceptance import run_all
from .asymptotics import q_asymptotic, save_asymptotics
from .scattering import (
    DiscreteDatum,
    ScatteringData,
    extract_scattering,
    gaussian_profile,
    load_profile,
    load_scattering,
    save_scattering,
    sech_profile,
)
from .solitons import soliton_field
from .splitstep import Grid, load_evolution, save_evolution, split_step

__all__ = ["main", "build_parser", "config_reference"]

OUTPUT_DIR_ENV = "FNLS_OUTPUT_DIR"

# Every configuration key: section -> key -> (default, help).  The argument
# parser, the override machinery and the generated reference are all built
# from this one table, so flags, config keys and documentation cannot drift
# apart.
SCHEMA: dict[str, dict[str, tuple[str, str]]] = {
    "run": {
        "output_dir": ("out", "directory receiving all written artifacts"),
    },
    "profile": {
        "kind": ("none", "initial profile: none | sech | gaussian | csv"),
        "amplitude": ("1.0", "peak amplitude for sech/gaussian profiles"),
        "width": ("1.0", "width parameter for the gaussian profile"),
        "file": ("", "CSV with x,re_q,im_q columns (kind = csv)"),
        "x_min": ("-26.0", "left end of the profile sampling grid"),
        "x_max": ("26.0", "right end of the profile sampling grid"),
        "n": ("1041", "number of profile sample points"),
        "tail_tol": ("1e-10", "largest allowed |q|/peak at the grid ends"),
    },
    "discrete": {
        "file": ("", "scattering document (JSON) holding poles and r samples"),
        "poles": ("", "inline pole list, one per line: "
                      "re im order c0_re c0_im c1_re c1_im"),
    },
    "scatter": {
        "z_min": ("-4.0", "left end of the real spectral grid for r(z)"),
        "z_max": ("4.0", "right end of the real spectral grid for r(z)"),
        "n_z": ("321", "number of spectral grid points"),
        "box": ("", "zero-search box 're_min re_max im_min im_max'; "
                    "empty skips the search"),
        "tol": ("1e-6", "zero-location tolerance"),
    },
    "soliton": {
        "x_min": ("-20.0", "left end of the output x grid"),
        "x_max": ("20.0", "right end of the output x grid"),
        "n_x": ("801", "number of x samples"),
        "t_min": ("0.0", "first output time"),
        "t_max": ("0.0", "last output time"),
        "n_t": ("1", "number of output times"),
    },
    "cone": {
        "x1": ("-1.0", "left foot of the cone at t = 0"),
        "x2": ("1.0", "right foot of the cone at t = 0"),
        "v1": ("-0.5", "lower edge velocity"),
        "v2": ("0.5", "upper edge velocity"),
    },
    "asymptote": {
        "t_min": ("10.0", "first evaluation time"),
        "t_max": ("40.0", "last evaluation time"),
        "n_t": ("4", "number of evaluation times"),
        "n_x": ("9", "points across the cone cross-section per time"),
        "min_t": ("5.0", "reject evaluation times below this floor"),
    },
    "evolve": {
        "n": ("4096", "number of Fourier modes"),
        "x_min": ("-125.66370614359172", "left end of the periodic domain"),
        "x_max": ("125.66370614359172", "right end of the periodic domain"),
        "dt": ("1e-3", "time step"),
        "t_start": ("0.0", "initial time of the run"),
        "t_final": ("1.0", "final time of the run"),
        "t_samples": ("", "extra times to record, space/comma separated"),
        "order": ("2", "splitting order: 2 or 4"),
        "edge_guard": ("1e-10", "warn when edge mass fraction exceeds this"),
    },
    "compare": {
        "a": ("", "evolution directory (with manifest.json) for field A"),
        "b": ("", "field B: an evolution directory, or the word 'discrete' "
                  "to use the closed-form field from the discrete source"),
        "x_min": ("-20.0", "left end of the comparison window"),
        "x_max": ("20.0", "right end of the comparison window"),
        "n_x": ("801", "comparison points across the window"),
        "times": ("", "times to compare, space/comma separated; "
                      "empty uses every stored time of A"),
        "scale_exponent": ("0.0", "errors are also reported scaled by t^p"),
    },
    "verify": {
        "criteria": ("", "comma-separated criterion ids; empty runs all"),
    },
}

# Sections whose keys each subcommand consumes (and therefore exposes as
# command-line flags).  'run' is global.
COMMAND_SECTIONS: dict[str, tuple[str, ...]] = {
    "scatter": ("profile", "scatter"),
    "soliton": ("discrete", "soliton"),
    "asymptote": ("discrete", "cone", "asymptote"),
    "evolve": ("profile", "discrete", "evolve"),
    "compare": ("discrete", "compare"),
    "verify": ("verify",),
}


class ConfigError(ValueError):
    """Bad input or configuration; mapped to exit code 2."""


# ---------------------------------------------------------------------------
# Configuration resolution
# ---------------------------------------------------------------------------

class Settings:
    """Merged view of defaults, config file and command-line overrides."""

    def __init__(self, config_path: str | None, overrides: dict[str, str]):
        self._file: dict[tuple[str, str], str] = {}
        if config_path:
            parser = configparser.ConfigParser(
                interpolation=None, inline_comment_prefixes=("#", ";"))
            try:
                with open(config_path, encoding="utf-8") as fh:
                    parser.read_file(fh)
            except OSError as exc:
                raise ConfigError(f"cannot read config file: {exc}") from exc
            except configparser.Error as exc:
                raise ConfigError(f"malformed config file: {exc}") from exc
            for section in parser.sections():
                if section not in SCHEMA:
                    raise ConfigError(f"unknown config section [{section}]")
                for key, value in parser.items(section):
                    if key not in SCHEMA[section]:
                        raise ConfigError(
                            f"unknown config key '{key}' in section [{section}]")
                    self._file[(section, key)] = value
        self._cli = dict(overrides)

    def raw(self, section: str, key: str) -> str:
        cli = self._cli.get(f"{section}__{key}")
        if cli is not None:
            return cli
        if (section, key) in self._file:
            return self._file[(section, key)]
        return SCHEMA[section][key][0]

    def text(self, section: str, key: str) -> str:
        return self.raw(section, key).strip()

    def number(self, section: str, key: str) -> float:
        value = self.text(section, key)
        try:
            return float(value)
        except ValueError as exc:
            raise ConfigError(
                f"{section}.{key} must be a number, got {value!r}") from exc

    def integer(self, section: str, key: str) -> int:
        value = self.number(section, key)
        if value != int(value):
            raise ConfigError(f"{section}.{key} must be an integer")
        return int(value)

    def positive(self, section: str, key: str) -> float:
        value = self.number(section, key)
        if not value > 0.0:
            raise ConfigError(f"{section}.{key} must be positive")
        return value

    def numbers(self, section: str, key: str) -> list[float]:
        text = self.text(section, key).replace(",", " ")
        try:
            return [float(tok) for tok in text.split()]
        except ValueError as exc:
            raise ConfigError(
                f"{section}.{key} must be a list of numbers") from exc

    def output_dir(self) -> Path:
        cli = self._cli.get("run__output_dir")
        if cli is not None:
            return Path(cli)
        env = os.environ.get(OUTPUT_DIR_ENV)
        if env:
            return Path(env)
        return Path(self.raw("run", "output_dir"))


def config_reference() -> str:
    """A complete config file with every default and its documentation."""
    lines = [
        "# Configuration reference: every key with its default value.",
        "# Command-line flags --<section>-<key> override these; the",
        f"# {OUTPUT_DIR_ENV} environment variable overrides run.output_dir",
        "# (command-line flag wins over both).",
    ]
    for section, keys in SCHEMA.items():
        lines.append("")
        lines.append(f"[{section}]")
        for key, (default, help_text) in keys.items():
            lines.append(f"# {help_text}")
            lines.append(f"{key} = {default}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Data sources
# ---------------------------------------------------------------------------

def _profile_configured(cfg: Settings) -> bool:
    return cfg.text("profile", "kind") != "none"


def _discrete_configured(cfg: Settings) -> bool:
    return bool(cfg.text("discrete", "file") or cfg.text("discrete", "poles"))


def _check_single_source(cfg: Settings) -> None:
    if _profile_configured(cfg) and _discrete_configured(cfg):
        raise ConfigError(
            "exactly one data source may be set: found both a profile "
            "and discrete data")


def _load_source_profile(cfg: Settings):
    kind = cfg.text("profile", "kind")
    if kind == "none":
        raise ConfigError("this command needs a profile source "
                          "(set profile.kind)")
    tail_tol = cfg.positive("profile", "tail_tol")
    if kind == "csv":
        path = cfg.text("profile", "file")
        if not path:
            raise ConfigError("profile.kind = csv requires profile.file")
        try:
            return load_profile(path, tail_tol=tail_tol)
        except OSError as exc:
            raise ConfigError(f"cannot read profile file: {exc}") from exc
    n = cfg.integer("profile", "n")
    x_min = cfg.number("profile", "x_min")
    x_max = cfg.number("profile", "x_max")
    if not x_min < x_max:
        raise ConfigError("profile grid needs x_min < x_max")
    x = np.linspace(x_min, x_max, n)
    amplitude = cfg.number("profile", "amplitude")
    if kind == "sech":
        return sech_profile(amplitude, x, tail_tol=tail_tol)
    if kind == "gaussian":
        return gaussian_profile(amplitude, x, width=cfg.positive("profile", "width"),
                                tail_tol=tail_tol)
    raise ConfigError(f"unknown profile.kind {kind!r}")


def _parse_pole_line(line: str) -> DiscreteDatum:
    tokens = line.replace(",", " ").split()
    if len(tokens) != 7:
        raise ConfigError(
            "each discrete.poles line needs 7 numbers "
            f"(re im order c0_re c0_im c1_re c1_im), got {line!r}")
    try:
        values = [float(tok) for tok in tokens]
    except ValueError as exc:
        raise ConfigError(f"bad number in discrete.poles line {line!r}") from exc
    order = int(values[2])
    if order != values[2] or order not in (1, 2):
        raise ConfigError("pole order must be 1 or 2")
    return DiscreteDatum(complex(values[0], values[1]), order=order,
                         c0=complex(values[3], values[4]),
                         c1=complex(values[5], values[6]))


def _load_source_discrete(cfg: Settings) -> ScatteringData:
    """The discrete source as a full scattering record (r may be empty)."""
    file_path = cfg.text("discrete", "file")
    poles_text = cfg.text("discrete", "poles")
    if file_path and poles_text:
        raise ConfigError("set discrete.file or discrete.poles, not both")
    if file_path:
        try:
            return load_scattering(file_path)
        except OSError as exc:
            raise ConfigError(f"cannot read scattering document: {exc}") from exc
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            raise ConfigError(f"malformed scattering document: {exc}") from exc
    if not poles_text:
        raise ConfigError("this command needs a discrete source "
                          "(set discrete.file or discrete.poles)")
    data = tuple(_parse_pole_line(line)
                 for line in poles_text.splitlines() if line.strip())
    empty = np.zeros(0)
    return ScatteringData(empty, np.zeros(0, dtype=np.complex128), data)


def _cone_from(cfg: Settings) -> tuple[float, float, float, float]:
    cone = tuple(cfg.number("cone", key) for key in ("x1", "x2", "v1", "v2"))
    if not (cone[0] <= cone[1] and cone[2] <= cone[3]):
        raise ConfigError("cone must satisfy x1 <= x2 and v1 <= v2")
    return cone


def _time_grid(cfg: Settings, section: str) -> np.ndarray:
    n_t = cfg.integer(section, "n_t")
    t_min = cfg.number(section, "t_min")
    t_max = cfg.number(section, "t_max")
    if n_t < 1 or t_max < t_min or (n_t == 1 and t_max != t_min):
        raise ConfigError(f"bad time grid in [{section}]")
    return np.linspace(t_min, t_max, n_t)


def _write_csv(path: Path, array: np.ndarray, header: str) -> None:
    np.savetxt(path, np.atleast_2d(array), delimiter=",", fmt="%.17g",
               header=header, comments="# ")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_scatter(cfg: Settings, out_dir: Path) -> int:
    profile = _load_source_profile(cfg)
    n_z = cfg.integer("scatter", "n_z")
    z_min = cfg.number("scatter", "z_min")
    z_max = cfg.number("scatter", "z_max")
    if n_z < 2 or not z_min < z_max:
        raise ConfigError("bad spectral grid in [scatter]")
    z_grid = np.linspace(z_min, z_max, n_z)
    box_text = cfg.numbers("scatter", "box")
    box = None
    if box_text:
        if len(box_text) != 4:
            raise ConfigError("scatter.box needs 4 numbers: "
                              "re_min re_max im_min im_max")
        box = tuple(box_text)
    data = extract_scattering(profile, z_grid, box=box,
                              tol=cfg.positive("scatter", "tol"))
    save_scattering(data, out_dir / "scattering.json")
    _write_csv(out_dir / "reflection.csv",
               np.column_stack([data.z, data.r.real, data.r.imag]),
               "z,re_r,im_r")
    for d in data.discrete:
        print(f"zero: z = {complex(d.z):.12g} order = {d.order}")
    print(f"wrote {out_dir / 'scattering.json'} and {out_dir / 'reflection.csv'}"
          f" ({len(data.discrete)} discrete point(s))")
    return 0


def cmd_soliton(cfg: Settings, out_dir: Path) -> int:
    source = _load_source_discrete(cfg)
    n_x = cfg.integer("soliton", "n_x")
    x_min = cfg.number("soliton", "x_min")
    x_max = cfg.number("soliton", "x_max")
    if n_x < 1 or not x_min <= x_max:
        raise ConfigError("bad x grid in [soliton]")
    x = np.linspace(x_min, x_max, n_x)
    rows = []
    for t in _time_grid(cfg, "soliton"):
        q = soliton_field(source.discrete, x, float(t))
        rows.append(np.column_stack(
            [np.full(n_x, t), x, q.real, q.imag]))
    _write_csv(out_dir / "soliton_field.csv", np.vstack(rows),
               "t,x,re_q,im_q")
    print(f"wrote {out_dir / 'soliton_field.csv'} "
          f"({len(rows)} time slice(s), {n_x} x-points)")
    return 0


def cmd_asymptote(cfg: Settings, out_dir: Path) -> int:
    source = _load_source_discrete(cfg)
    cone = _cone_from(cfg)
    scattering = source if source.r.size and np.any(source.r != 0) else None
    n_x = cfg.integer("asymptote", "n_x")
    if n_x < 1:
        raise ConfigError("asymptote.n_x must be at least 1")
    min_t = cfg.positive("asymptote", "min_t")
    values = []
    for t in _time_grid(cfg, "asymptote"):
        t = float(t)
        lo = cone[0] + cone[2] * t
        hi = cone[1] + cone[3] * t
        for x in np.linspace(lo, hi, n_x):
            values.append(q_asymptotic(float(x), t, source.discrete,
                                       scattering, cone, min_t=min_t))
    save_asymptotics(out_dir / "asymptotics.csv", values)
    print(f"wrote {out_dir / 'asymptotics.csv'} ({len(values)} points)")
    return 0


def cmd_evolve(cfg: Settings, out_dir: Path) -> int:
    grid = Grid(n=cfg.integer("evolve", "n"),
                x_min=cfg.number("evolve", "x_min"),
                x_max=cfg.number("evolve", "x_max"))
    if not grid.x_min < grid.x_max:
        raise ConfigError("evolve domain needs x_min < x_max")
    t_start = cfg.number("evolve", "t_start")
    if _profile_configured(cfg):
        q0 = _load_source_profile(cfg).evaluate(grid.x)
    elif _discrete_configured(cfg):
        q0 = soliton_field(_load_source_discrete(cfg).discrete, grid.x, t_start)
    else:
        raise ConfigError("evolve needs a profile or a discrete source")
    samples = cfg.numbers("evolve", "t_samples")
    order = cfg.integer("evolve", "order")
    ev = split_step(q0, grid,
                    cfg.number("evolve", "t_final"),
                    dt=cfg.positive("evolve", "dt"),
                    t_start=t_start,
                    t_samples=samples or None,
                    edge_guard=cfg.positive("evolve", "edge_guard"),
                    order=order)
    target = out_dir / "evolution"
    save_evolution(ev, target, dt=cfg.number("evolve", "dt"))
    print(f"wrote {target} ({len(ev.t)} slices, "
          f"edge mass fraction {ev.edge_fraction:.3e})")
    return 0


def cmd_compare(cfg: Settings, out_dir: Path) -> int:
    a_dir = cfg.text("compare", "a")
    b_source = cfg.text("compare", "b")
    if not a_dir or not b_source:
        raise ConfigError("compare needs both compare.a and compare.b")
    try:
        ev_a = load_evolution(a_dir)
    except OSError as exc:
        raise ConfigError(f"cannot read evolution A: {exc}") from exc
    if b_source == "discrete":
        data = _load_source_discrete(cfg).discrete

        def b_fn(x, t):
            return soliton_field(data, x, t)
    else:
        try:
            ev_b = load_evolution(b_source)
        except OSError as exc:
            raise ConfigError(f"cannot read evolution B: {exc}") from exc
        b_fn = ev_b.as_callable()

    n_x = cfg.integer("compare", "n_x")
    x_min = cfg.number("compare", "x_min")
    x_max = cfg.number("compare", "x_max")
    if n_x < 2 or not x_min < x_max:
        raise ConfigError("bad comparison window in [compare]")
    if x_max < ev_a.grid.x_min or x_min > ev_a.grid.x_max:
        raise ConfigError("comparison window is disjoint from the stored grid")
    x = np.linspace(x_min, x_max, n_x)
    dx = x[1] - x[0]
    times = cfg.numbers("compare", "times") or [float(t) for t in ev_a.t]
    p = cfg.number("compare", "scale_exponent")
    rows = []
    for t in times:
        diff = np.abs(ev_a.interp(t, x) - np.asarray(b_fn(x, t)))
        linf = float(np.max(diff))
        l2 = float(math.sqrt(np.sum(diff ** 2) * dx))
        scale = abs(t) ** p
        rows.append((t, linf, l2, scale * linf, scale * l2))
    _write_csv(out_dir / "comparison.csv", np.array(rows),
               "t,linf,l2,scaled_linf,scaled_l2")
    worst = max(row[1] for row in rows)
    print(f"wrote {out_dir / 'comparison.csv'} "
          f"({len(rows)} times, worst Linf {worst:.6g})")
    return 0


def cmd_verify(cfg: Settings, out_dir: Path) -> int:
    chosen = cfg.text("verify", "criteria")
    which = None
    if chosen:
        which = [tok for tok in chosen.replace(",", " ").split()]
    try:
        results = run_all(which)
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from exc
    report = {
        "criteria": [
            {
                "id": res.cid,
                "description": res.description,
                "measured": res.measured,
                "threshold": res.threshold,
                "passed": res.passed,
                "detail": res.detail,
            }
            for res in results
        ],
        "all_passed": all(res.passed for res in results),
    }
    with open(out_dir / "verify_report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1)
    for res in results:
        print(res.line())
    print(f"wrote {out_dir / 'verify_report.json'}")
    return 0 if report["all_passed"] else 1


COMMANDS = {
    "scatter": cmd_scatter,
    "soliton": cmd_soliton,
    "asymptote": cmd_asymptote,
    "evolve": cmd_evolve,
    "compare": cmd_compare,
    "verify": cmd_verify,
}

COMMAND_HELP = {
    "scatter": "profile in; scattering document and reflection CSV out",
    "soliton": "discrete data in; exact field on an (x, t) grid out",
    "asymptote": "discrete data and cone in; leading-order field CSV out",
    "evolve": "initial data in; split-step evolution directory out",
    "compare": "two stored/closed-form fields in; error table out",
    "verify": "run acceptance criteria; machine-readable report out",
}


# ---------------------------------------------------------------------------
# Argument parsing and entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fnls",
        description="Pipeline driver: forward scattering, exact pole "
                    "solutions, cone asymptotics and split-step runs.")
    parser.add_argument("--config-reference", action="store_true",
                        help="print a fully documented reference config "
                             "and exit")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE",
                        help="INI configuration file")
    common.add_argument("--output-dir", dest="run__output_dir", metavar="DIR",
                        help="where to write artifacts (overrides config and "
                             f"the {OUTPUT_DIR_ENV} environment variable)")
    subparsers = parser.add_subparsers(dest="command")
    for command, sections in COMMAND_SECTIONS.items():
        sub = subparsers.add_parser(
            command, parents=[common], help=COMMAND_HELP[command])
        for section in sections:
            for key, (default, help_text) in SCHEMA[section].items():
                sub.add_argument(
                    f"--{section}-{key.replace('_', '-')}",
                    dest=f"{section}__{key}", metavar="VALUE",
                    help=f"{help_text} (default: {default or 'empty'})")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config_reference:
        sys.stdout.write(config_reference())
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("error: a command is required", file=sys.stderr)
        return 2

    overrides = {key: value for key, value in vars(args).items()
                 if "__" in key and value is not None}
    try:
        cfg = Settings(args.config, overrides)
        _check_single_source(cfg)
        out_dir = cfg.output_dir()
        out_dir.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out_dir)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as exc:
        # Domain guards from the library (bad cone, t below the floor,
        # spectral singularity at a real z, non-decaying profile, ...)
        # are input problems by the time they reach the CLI.
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
