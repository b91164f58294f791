"""Command-line entry point.

    decohere <group> <action> [--config PATH] [--seed N] [--out PATH]
                              [--format csv|json] [--<key> VALUE ...]

Config files are flat ``key = value`` text ('#' comments allowed). Every
config key can also be given as a flag, and flags win. Unknown keys are
rejected. Output files carry the tool version, command, seed and resolved
config; run duration goes to stderr and to ``<out>.timing.json`` so the
output itself stays byte-identical across reruns.

Exit status: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import configparser
import io
import json
import logging
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from . import __version__, chaos, dephasing, formfactor, mastereq, scattering
from .errors import NumericalError, ValidationError
from .formfactor import Kind, SpectralWeight

log = logging.getLogger("decohere")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


class ConfigError(ValidationError):
    pass


# -- schemas ------------------------------------------------------------------


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _float_list(text) -> list[float]:
    return [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]


def _choice(*options):
    def parse(text):
        v = str(text).strip().lower()
        if v not in options:
            raise ValueError(f"expected one of {options}, got {text!r}")
        return v
    parse.__name__ = "choice"
    return parse


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    default: Any
    help: str = ""


WEIGHT_KEYS = {
    "kind": Key(_choice("flat", "power-law", "ohmic", "inverse-square", "tabulated"), "flat",
                "spectral weight family"),
    "amplitude": Key(float, 1.0, "amplitude A of J(w)"),
    "kappa": Key(float, 0.5, "infrared exponent for power-law, J = A w^(kappa-1)"),
    "omega_min": Key(float, 0.0, "infrared cutoff"),
    "omega_c": Key(float, 1.0, "ultraviolet cutoff"),
    "table": Key(str, "", "two-column CSV (omega, J) for kind = tabulated"),
}

DENSITY_KEYS = {
    "density": Key(_choice("constant", "thermal"), "constant", "boson occupation n(w)"),
    "n0": Key(float, 1.0, "constant occupation"),
    "density_temperature": Key(float, 1.0, "temperature of the Bose occupation"),
}

CHAOS_KEYS = {
    "level_kind": Key(_choice(*chaos.LEVEL_KINDS), "wigner", "level statistics"),
    "M": Key(int, 2000, "levels per bath system"),
    "realizations": Key(int, 100, "independent (levels, Q) draws"),
    "delta": Key(float, 1.0, "mean level spacing"),
    "sigma": Key(float, 0.0, "Gaussian broadening (0: delta/20)"),
    "omega_max": Key(float, 0.0, "grid top (0: 3 delta)"),
    "exclude_diagonal": Key(_bool, True, "drop m = m' terms"),
}

SCHEMAS: dict[tuple[str, str], dict[str, Key]] = {
    ("dephase", "curve"): {
        **WEIGHT_KEYS,
        "psi_plus": Key(complex, complex(math.sqrt(0.5)), "amplitude on e_+"),
        "psi_minus": Key(complex, complex(math.sqrt(0.5)), "amplitude on e_-"),
        "t_min": Key(float, 0.0, "first time"),
        "t_max": Key(float, 10.0, "last time"),
        "samples": Key(int, 101, "number of times"),
    },
    ("dephase", "rate"): {
        **WEIGHT_KEYS,
        "t1": Key(float, 5.0, "fit window start"),
        "t2": Key(float, 1000.0, "fit window end"),
        "samples": Key(int, 64, "fit points"),
    },
    ("formfactor", "classify"): dict(WEIGHT_KEYS),
    ("mastereq", "run"): {
        "equation": Key(_choice("cl", "pure-dephasing"), "cl", "master equation"),
        "n": Key(int, 20, "oscillator truncation (cl)"),
        "grid_points": Key(int, 64, "position grid size (pure-dephasing)"),
        "x_max": Key(float, 3.0, "grid spans [-x_max, x_max]"),
        "mass": Key(float, 1.0, "particle mass M"),
        "eta": Key(float, 0.1, "friction constant"),
        "temperature": Key(float, 0.5, "bath temperature"),
        "gamma": Key(float, 1.0, "pure-dephasing rate"),
        "potential": Key(_choice("harmonic", "zero"), "harmonic", "V(x)"),
        "potential_omega": Key(float, 1.0, "V = M W^2 x^2 / 2"),
        "ref_mass": Key(float, 1.0, "reference oscillator mass for the basis"),
        "ref_omega": Key(float, 1.0, "reference oscillator frequency for the basis"),
        "alpha": Key(float, 1.0, "initial coherent amplitude (cl)"),
        "separation": Key(float, 2.0, "initial cat separation (pure-dephasing)"),
        "width": Key(float, 0.5, "initial cat lobe width (pure-dephasing)"),
        "dt": Key(float, 0.005, "RK4 step"),
        "t_final": Key(float, 1.0, "final time"),
        "stride": Key(int, 10, "rows every this many steps"),
    },
    ("scatter", "rate"): {**WEIGHT_KEYS, **DENSITY_KEYS},
    ("scatter", "family"): {
        **DENSITY_KEYS,
        "gamma_target": Key(float, 0.01, "target dephasing rate"),
        "widths": Key(_float_list, [1e-1, 1e-2, 1e-3, 1e-4], "comma-separated box widths"),
        "omega0": Key(float, 1.0, "box centre"),
    },
    ("chaos", "spectrum"): dict(CHAOS_KEYS),
    ("chaos", "rate"): {
        **CHAOS_KEYS,
        "fit_lo": Key(float, 0.0, "fit window start (0: 2 sigma)"),
        "fit_hi": Key(float, 0.0, "fit window end (0: delta/2)"),
    },
}

DEFAULT_FORMAT = {
    ("dephase", "curve"): "csv",
    ("dephase", "rate"): "json",
    ("formfactor", "classify"): "json",
    ("mastereq", "run"): "csv",
    ("scatter", "rate"): "csv",
    ("scatter", "family"): "csv",
    ("chaos", "spectrum"): "csv",
    ("chaos", "rate"): "json",
}


@dataclass
class RunConfig:
    command: tuple[str, str]
    params: dict[str, Any]
    seed: int
    out: str | None
    fmt: str


def read_config_file(path: str) -> dict[str, str]:
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#",))
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_string("[run]\n" + fh.read(), source=path)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return dict(parser["run"])


def resolve(command, file_values: dict[str, str], flag_values: dict[str, Any]) -> dict[str, Any]:
    schema = SCHEMAS[command]
    unknown = sorted(set(file_values) - set(schema) - {"seed"})
    if unknown:
        raise ConfigError(f"unknown config key(s) for {' '.join(command)}: {', '.join(unknown)}")
    params = {}
    for name, key in schema.items():
        raw = flag_values.get(name)
        if raw is None:
            raw = file_values.get(name, key.default)
        try:
            params[name] = key.parse(raw) if isinstance(raw, str) else raw
        except ValueError as exc:
            raise ConfigError(f"bad value for {name}: {exc}") from exc
    return params


# -- helpers ------------------------------------------------------------------


def weight_from(p) -> SpectralWeight:
    kind = Kind.parse(p["kind"])
    if kind is Kind.TABULATED:
        if not p["table"]:
            raise ConfigError("kind = tabulated needs table = PATH")
        return SpectralWeight.from_csv(p["table"])
    kw = dict(amplitude=p["amplitude"], omega_c=p["omega_c"], omega_min=p["omega_min"])
    if kind is Kind.POWER_LAW:
        return SpectralWeight.power_law(kappa=p["kappa"], **kw)
    return {
        Kind.FLAT: SpectralWeight.flat,
        Kind.OHMIC: SpectralWeight.ohmic,
        Kind.INVERSE_SQUARE: SpectralWeight.inverse_square,
    }[kind](**kw)


def density_from(p) -> scattering.Density:
    if p["density"] == "thermal":
        return scattering.Density.thermal(p["density_temperature"])
    return scattering.Density.constant(p["n0"])


def _jsonable(value):
    if isinstance(value, complex):
        return repr(value)
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


class Table:
    def __init__(self, columns, rows):
        self.columns = list(columns)
        self.rows = rows


# -- commands -----------------------------------------------------------------


def cmd_dephase_curve(p, seed):
    J = weight_from(p)
    psi = dephasing.QubitAmplitudes.normalized(p["psi_plus"], p["psi_minus"])
    if p["samples"] < 1:
        raise ConfigError("samples must be >= 1")
    times = np.linspace(p["t_min"], p["t_max"], p["samples"])
    traj = dephasing.trajectory(psi, J, times)
    rows = [
        (t, g, ph, rho[0, 1].real, rho[0, 1].imag, pur)
        for t, g, ph, rho, pur in zip(traj.times, traj.gamma, traj.phase, traj.states, traj.purity)
    ]
    return Table(["t", "gamma_t", "phase", "re_offdiag", "im_offdiag", "purity"], rows)


def cmd_dephase_rate(p, seed):
    est = dephasing.asymptotic_rate(weight_from(p), (p["t1"], p["t2"]), p["samples"])
    return {
        "slope": est.slope,
        "intercept": est.intercept,
        "residual": est.residual,
        "analytic_candidate": est.analytic_candidate,
        "pi_candidate": est.pi_candidate,
        "window": list(est.window),
    }


def cmd_formfactor_classify(p, seed):
    c = formfactor.classify(weight_from(p))
    return {"label": c.label, "norm_sq": c.norm_sq, "dressing_energy": c.dressing_energy}


def cmd_mastereq_run(p, seed):
    W = p["potential_omega"]
    M = p["mass"]
    V = (lambda x: 0.5 * M * W**2 * np.asarray(x) ** 2) if p["potential"] == "harmonic" else (lambda x: 0.0 * np.asarray(x))
    stride = max(1, p["stride"])
    if p["equation"] == "pure-dephasing":
        x = np.linspace(-p["x_max"], p["x_max"], p["grid_points"])
        rho0 = mastereq.cat_state(x, p["separation"], p["width"])
        tr = mastereq.evolve_pure_decoherence_numeric(rho0, V, p["gamma"], p["t_final"], p["dt"], stride=stride)
        rows = list(zip(tr.times, tr.trace_dev, tr.herm_dev, tr.min_eig, tr.purity, tr.coherence))
        return Table(["t", "trace_dev", "herm_dev", "min_eig", "purity", "coherence_lobes"], rows)
    ops = mastereq.OscillatorOperators.build(p["n"], p["ref_mass"], p["ref_omega"])
    params = mastereq.CLParams(M, p["eta"], p["temperature"], V)
    rho0 = mastereq.coherent_state(p["n"], p["alpha"])
    tr = mastereq.evolve_caldeira_leggett(rho0, ops, params, p["t_final"], p["dt"], stride=stride)
    rows = [
        (t, td, hd, me, pu, lk, abs(r[0, 1]), abs(r[0, 2]))
        for t, td, hd, me, pu, lk, r in zip(
            tr.times, tr.trace_dev, tr.herm_dev, tr.min_eig, tr.purity, tr.leak, tr.states
        )
    ]
    return Table(["t", "trace_dev", "herm_dev", "min_eig", "purity", "leak", "coherence_01", "coherence_02"], rows)


def cmd_scatter_rate(p, seed):
    F = weight_from(p)
    rate = scattering.scattering_rate(scattering.ScatteringChannel(F, density_from(p)))
    return Table(["width", "norm_sq", "rate"], [(F.omega_c - F.omega_min, formfactor.moment(F, 0), rate)])


def cmd_scatter_family(p, seed):
    fam = scattering.small_norm_family(p["gamma_target"], p["widths"], p["omega0"], density_from(p))
    return Table(["width", "norm_sq", "rate"], [tuple(m) for m in fam])


def _chaos_estimate(p, seed):
    # write resolved defaults back so the echoed config is the one actually run
    p["sigma"] = sigma = p["sigma"] or p["delta"] / 20
    p["omega_max"] = p["omega_max"] or 3.0 * p["delta"]
    grid = chaos.default_grid(p["delta"], sigma, p["omega_max"])
    log.info("sampling %d realisations of %d %s levels", p["realizations"], p["M"], p["level_kind"])
    return chaos.ensemble_spectral_function(
        p["level_kind"], p["M"], p["delta"], p["realizations"], seed, sigma, grid, p["exclude_diagonal"]
    )


def cmd_chaos_spectrum(p, seed):
    est = _chaos_estimate(p, seed)
    return Table(["omega", "R", "stderr"], list(zip(est.omega, est.R, est.stderr)))


def cmd_chaos_rate(p, seed):
    est = _chaos_estimate(p, seed)
    p["fit_lo"] = p["fit_lo"] or 2 * est.sigma
    p["fit_hi"] = p["fit_hi"] or est.delta / 2
    fit = chaos.dephasing_rate_from_spectrum(est, (p["fit_lo"], p["fit_hi"]))
    return {
        "gamma": fit.gamma,
        "gamma_stderr": fit.gamma_stderr,
        "slope": fit.slope,
        "slope_stderr": fit.slope_stderr,
        "intercept": fit.intercept,
        "stderr": fit.intercept_stderr,
        "window": list(fit.window),
        "qbar_sq": est.qbar_sq,
        "correlation_Q_spacing": est.q_spacing_correlation,
    }


COMMANDS = {
    ("dephase", "curve"): cmd_dephase_curve,
    ("dephase", "rate"): cmd_dephase_rate,
    ("formfactor", "classify"): cmd_formfactor_classify,
    ("mastereq", "run"): cmd_mastereq_run,
    ("scatter", "rate"): cmd_scatter_rate,
    ("scatter", "family"): cmd_scatter_family,
    ("chaos", "spectrum"): cmd_chaos_spectrum,
    ("chaos", "rate"): cmd_chaos_rate,
}


# -- output -------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, complex):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def render(result, cfg: RunConfig) -> str:
    meta = {
        "tool": "decohere",
        "version": __version__,
        "command": " ".join(cfg.command),
        "seed": cfg.seed,
        "config": {k: _jsonable(v) for k, v in sorted(cfg.params.items())},
    }
    if cfg.fmt == "json":
        if isinstance(result, Table):
            body = {"columns": result.columns, "rows": [[_jsonable(v) for v in r] for r in result.rows]}
        else:
            body = {k: _jsonable(v) for k, v in result.items()}
        return json.dumps({**meta, "result": body}, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(f"# decohere {__version__}\n")
    buf.write(f"# command: {meta['command']}\n")
    buf.write(f"# seed: {cfg.seed}\n")
    buf.write(f"# config: {json.dumps(meta['config'], sort_keys=True)}\n")
    if not isinstance(result, Table):
        result = Table(list(result), [tuple(result.values())])
    buf.write(",".join(result.columns) + "\n")
    for row in result.rows:
        buf.write(",".join(_fmt(v) if not isinstance(v, list) else ";".join(map(_fmt, v)) for v in row) + "\n")
    return buf.getvalue()


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".decohere-", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(cfg: RunConfig) -> str:
    """Execute one command; returns the rendered output text."""
    return render(COMMANDS[cfg.command](cfg.params, cfg.seed), cfg)


# -- argument parsing ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="decohere", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"decohere {__version__}")
    groups = parser.add_subparsers(dest="group", required=True)
    by_group: dict[str, argparse._SubParsersAction] = {}
    for (group, action), schema in SCHEMAS.items():
        if group not in by_group:
            by_group[group] = groups.add_parser(group).add_subparsers(dest="action", required=True)
        sub = by_group[group].add_parser(action)
        sub.add_argument("--config", help="flat key = value file")
        sub.add_argument("--seed", type=int, help="master seed (default 0)")
        sub.add_argument("--out", help="output path (default stdout)")
        sub.add_argument("--format", choices=("csv", "json"), dest="fmt")
        sub.add_argument("-v", "--verbose", action="store_true")
        for name, key in schema.items():
            flag = "--" + name.replace("_", "-")
            sub.add_argument(flag, dest=f"key_{name}", default=None, help=key.help)
        if (group, action) == ("chaos", "rate") or (group, action) == ("chaos", "spectrum"):
            sub.add_argument("--kind", dest="key_level_kind", default=None, help="alias of --level-kind")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    command = (args.group, args.action)
    started = time.perf_counter()
    try:
        file_values = read_config_file(args.config) if args.config else {}
        flags = {k[4:]: v for k, v in vars(args).items() if k.startswith("key_") and v is not None}
        params = resolve(command, file_values, flags)
        if args.seed is not None:
            seed = args.seed
        else:
            try:
                seed = int(file_values.get("seed", 0))
            except ValueError as exc:
                raise ConfigError(f"bad seed: {exc}") from exc
        cfg = RunConfig(command, params, seed, args.out, args.fmt or DEFAULT_FORMAT[command])
        text = run(cfg)
    except ValidationError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    elapsed = time.perf_counter() - started
    if args.out:
        write_atomic(args.out, text)
        write_atomic(args.out + ".timing.json", json.dumps({"wall_clock_seconds": elapsed}) + "\n")
    else:
        sys.stdout.write(text)
    print(f"decohere {' '.join(command)}: done in {elapsed:.3f} s", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
