"""Command-line front end; every subcommand writes plot-ready CSV.

Each CSV opens with ``#`` comment lines carrying the SHA-256 of the fully
resolved configuration, and the configuration itself is written next to it
as ``<command>_config.json``.  Precedence for ``sweep`` settings: explicit
flags, then the ``--config`` INI file, then the experiment defaults.

Exit status: 0 success, 1 numerical failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import lyapunov_largest, psd_estimate
from .dynamics import FilteredHenonSystem, MapParams, fixed_points, iterate
from .exceptions import FilterDesignError, FilteredHenonError
from .fir_design import (
    EquallySpaced,
    HammingLowpass,
    Notch,
    NotchPlusNyquist,
    RepeatedNyquist,
    freqz,
    make_prototype,
    prototype_zeros,
)
from .sweep import (
    EXPERIMENTS,
    Axis,
    ExperimentConfig,
    bifurcation_diagram,
    classify_cell,
    default_workers,
    load_config,
    run_experiment,
)

log = logging.getLogger("filtered_henon")

PROTOTYPES = ("none", "equally-spaced", "notch", "notch-nyquist", "repeated-nyquist", "hamming")
# settings that never change the payload, so they stay out of the hash
_UNHASHED = {"out", "workers", "config", "verbose", "func"}


class UsageError(Exception):
    pass


# --- output helpers ---------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def write_csv(path: Path, command: str, config: dict, columns, rows):
    digest = config_hash(config)
    with open(path, "w", newline="") as fh:
        fh.write(f"# filtered-henon {command}\n")
        fh.write(f"# config_sha256={digest}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    log.info("wrote %s", path)
    return digest


def _resolved(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _UNHASHED}


def _emit_config(out: Path, command: str, config: dict, extra: dict | None = None):
    doc = {"command": command, "version": __version__, "config": config,
           "config_sha256": config_hash(config)}
    doc.update(extra or {})
    with open(out / f"{command.replace('-', '_')}_config.json", "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    log.info("resolved config: %s", json.dumps(config, sort_keys=True, default=str))


# --- prototype flags --------------------------------------------------------


def _prototype(args, gain=None):
    kind = args.prototype
    g = args.gain if gain is None else gain
    need = {"equally-spaced": "nz", "repeated-nyquist": "nz", "notch": "w0",
            "notch-nyquist": "w0", "hamming": ("nz", "wc")}.get(kind, ())
    for name in (need,) if isinstance(need, str) else need:
        if getattr(args, name) is None:
            raise UsageError(f"--prototype {kind} requires --{name}")
    try:
        if kind == "equally-spaced":
            return EquallySpaced(args.nz, g)
        if kind == "notch":
            return Notch(args.w0 * math.pi, g)
        if kind == "notch-nyquist":
            return NotchPlusNyquist(args.w0 * math.pi, g)
        if kind == "repeated-nyquist":
            return RepeatedNyquist(args.nz, g)
        if kind == "hamming":
            return HammingLowpass(args.nz, args.wc * math.pi)
    except FilterDesignError as exc:
        raise UsageError(str(exc)) from exc
    return None


def _coefficients(args):
    proto = _prototype(args)
    if proto is None:
        return np.array([1.0, 0.0]), ()
    try:
        return make_prototype(proto).coefficients, prototype_zeros(proto)
    except FilterDesignError as exc:
        raise UsageError(str(exc)) from exc


def _system(args):
    c, _ = _coefficients(args)
    return FilteredHenonSystem(c, MapParams(args.alpha, args.beta))


def _x0(args, sys):
    if args.x0 is None:
        return np.zeros(sys.dimension)
    try:
        vals = [float(s) for s in args.x0.split(",")]
    except ValueError as exc:
        raise UsageError(f"--x0: {exc}") from exc
    if len(vals) == 1:
        vals = vals * sys.dimension
    if len(vals) != sys.dimension:
        raise UsageError(f"--x0 needs 1 or {sys.dimension} comma-separated values")
    return np.array(vals)


# --- subcommands ------------------------------------------------------------


def cmd_filter(args, out: Path):
    c, zeros = _coefficients(args)
    cfg = _resolved(args)
    _emit_config(out, "filter", cfg)
    write_csv(out / "coeffs.csv", "filter", cfg, ["index", "coefficient"], enumerate(c))
    omega, db, phase = freqz(c, args.bins)
    write_csv(out / "freqz.csv", "filter", cfg, ["omega_over_pi", "magnitude_db", "phase_rad"],
              zip(omega / np.pi, db, phase))
    write_csv(out / "zeros.csv", "filter", cfg, ["re", "im"], ((z.real, z.imag) for z in zeros))
    print(f"{len(c)} coefficients, gain {float(np.sum(c)):.12g}")


def cmd_orbit(args, out: Path):
    sys_ = _system(args)
    orbit = iterate(sys_, _x0(args, sys_), args.n)
    cfg = _resolved(args)
    _emit_config(out, "orbit", cfg, {"diverged": orbit.diverged, "escape_index": orbit.escape_index})
    cols = ["n"] + [f"x{k + 1}" for k in range(sys_.dimension)]
    write_csv(out / "orbit.csv", "orbit", cfg, cols, ([k, *row] for k, row in enumerate(orbit.states)))
    if orbit.diverged:
        print(f"orbit escaped at n={orbit.escape_index}")


def cmd_lyapunov(args, out: Path):
    sys_ = _system(args)
    est = lyapunov_largest(sys_, _x0(args, sys_), args.n, args.transient)
    cfg = _resolved(args)
    _emit_config(out, "lyapunov", cfg)
    write_csv(out / "lyapunov.csv", "lyapunov", cfg,
              ["lambda_max", "n_used", "diverged", "escape_index"],
              [(est.lambda_max, est.n_used, est.diverged, est.escape_index)])
    print("diverged" if est.diverged else f"{est.lambda_max:.6f}")


def cmd_fixed_points(args, out: Path):
    params = MapParams(args.alpha, args.beta)
    rows = []
    for g in Axis(args.g_min, args.g_max, args.step).values():
        fp = fixed_points(FilteredHenonSystem([g, 0.0], params))
        rows.append((g, fp.p1_plus, fp.p1_minus))
    cfg = _resolved(args)
    _emit_config(out, "fixed-points", cfg)
    write_csv(out / "fixed_points.csv", "fixed-points", cfg, ["G", "p1_plus", "p1_minus"], rows)


def cmd_classify(args, out: Path):
    sys_ = _system(args)
    cell = classify_cell(sys_, n_total=args.n_total, n_transient=args.transient, n_ic=args.n_ic,
                         ic_radius=args.ic_radius, keep_per_ic=True, rng_seed=args.seed)
    cfg = _resolved(args)
    _emit_config(out, "classify", cfg, {"lambda_per_ic": cell.lambda_per_ic})
    write_csv(out / "classify.csv", "classify", cfg,
              ["gain", "spectral_radius", "lambda_avg", "n_diverged", "class"],
              [(sys_.gain, cell.spectral_radius, cell.lambda_avg, cell.n_diverged, cell.orbit_class)])
    print(cell.orbit_class)


_ALIASES = {
    # flag -> axis label it edits; resolved per experiment
    "g": "G", "nz": "N_z", "w0": "omega0_over_pi", "wc": "omegac_over_pi",
}


def _sweep_config(args) -> ExperimentConfig:
    overrides = {}
    if args.config:
        try:
            overrides.update(load_config(args.config))
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
    experiment = args.experiment or overrides.pop("experiment", None)
    overrides.pop("experiment", None)
    if experiment is None:
        raise UsageError("sweep needs --experiment or an experiment key in --config")
    if experiment not in EXPERIMENTS:
        raise UsageError(f"unknown experiment {experiment!r}")
    d = EXPERIMENTS[experiment]
    for short, label in _ALIASES.items():
        for part in ("min", "max", "step"):
            val = getattr(args, f"{short}_{part}", None)
            if val is None:
                continue
            if label == d.axis1:
                overrides[f"axis1_{part}"] = val
            elif label == d.axis2:
                overrides[f"axis2_{part}"] = val
            else:
                raise UsageError(f"--{short}-{part} does not apply to experiment {experiment}")
    for ax in ("axis1", "axis2"):
        for part in ("min", "max", "step"):
            val = getattr(args, f"{ax}_{part}")
            if val is not None:
                overrides[f"{ax}_{part}"] = val
    for key, dest in (("n_total", "n_total"), ("transient", "n_transient"), ("n_ic", "n_ic"),
                      ("ic_radius", "ic_radius"), ("seed", "rng_seed"), ("alpha", "alpha"),
                      ("beta", "beta")):
        val = getattr(args, key)
        if val is not None:
            overrides[dest] = val
    if args.per_ic:
        overrides["keep_per_ic"] = True
    try:
        return ExperimentConfig.default(experiment, **overrides)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def cmd_sweep(args, out: Path):
    cfg = _sweep_config(args)
    resolved = cfg.to_dict()
    t0 = time.perf_counter()
    result = run_experiment(cfg, workers=args.workers)
    wall = time.perf_counter() - t0
    a1, a2 = cfg.axis_names
    cols = ["axis1", "axis2", "spectral_radius", "lambda_avg", "n_diverged", "class"]
    if cfg.keep_per_ic:
        cols.append("lambda_per_ic")
    rows = []
    for c in result.cells:
        row = [c.axis1, c.axis2, c.spectral_radius, c.lambda_avg, c.n_diverged,
               c.orbit_class if c.orbit_class is not None else "error"]
        if cfg.keep_per_ic:
            row.append(";".join(_fmt(v) for v in c.lambda_per_ic or ()))
        rows.append(row)
    if EXPERIMENTS[cfg.experiment].default1.integer:
        rows = [[int(r[0]), *r[1:]] for r in rows]
    if EXPERIMENTS[cfg.experiment].default2.integer:
        rows = [[r[0], int(r[1]), *r[2:]] for r in rows]
    digest = write_csv(out / "sweep.csv", "sweep", resolved, cols, rows)
    counts = {}
    for c in result.cells:
        key = str(c.orbit_class) if c.orbit_class is not None else "error"
        counts[key] = counts.get(key, 0) + 1
    manifest = {
        "experiment": cfg.experiment,
        "axis1": a1,
        "axis2": a2,
        "config": resolved,
        "config_sha256": digest,
        "seed": cfg.rng_seed,
        "workers": args.workers,
        "wall_time_s": round(wall, 3),
        "cell_count": len(result.cells),
        "class_counts": counts,
        "failures": [
            {"axis1": c.axis1, "axis2": c.axis2, "error": c.error} for c in result.failures()
        ],
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("resolved config: %s", json.dumps(resolved, sort_keys=True))
    print(f"{len(result.cells)} cells in {wall:.1f}s: {counts}")


def cmd_bifurcate(args, out: Path):
    if args.prototype in ("none", "hamming"):
        raise UsageError("bifurcate needs a gain-parameterized prototype")
    proto = _prototype(args, gain=1.0)
    g_values = Axis(args.g_min, args.g_max, args.g_step).values()
    points = bifurcation_diagram(proto, g_values, n_total=args.n_total, n_keep=args.n_keep,
                                 params=MapParams(args.alpha, args.beta))
    rows = []
    for p in points:
        if p.diverged:
            rows.append((p.gain, float("nan")))
        else:
            rows.extend((p.gain, x) for x in p.samples)
    cfg = _resolved(args)
    _emit_config(out, "bifurcate", cfg,
                 {"diverged_gains": [p.gain for p in points if p.diverged]})
    write_csv(out / "bifurcation.csv", "bifurcate", cfg, ["G", "x1"], rows)


def cmd_psd(args, out: Path):
    sys_ = _system(args)
    orbit = iterate(sys_, _x0(args, sys_), args.n + args.transient)
    if orbit.diverged:
        raise FilteredHenonError(f"orbit escaped at n={orbit.escape_index}; no spectrum")
    est = psd_estimate(orbit.states[args.transient + 1:, 0])
    cfg = _resolved(args)
    _emit_config(out, "psd", cfg)
    write_csv(out / "psd.csv", "psd", cfg, ["omega_over_pi", "power_db"],
              zip(est.frequencies / np.pi, est.power_db))


# --- parser -----------------------------------------------------------------


def _common(sweep=False):
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=None if sweep else 42, help="RNG seed (default 42)")
    p.add_argument("--out", default=".", help="output directory (created if missing)")
    p.add_argument("--workers", type=int, default=default_workers(),
                   help="worker processes for sweeps (default: available CPUs)")
    p.add_argument("--alpha", type=float, default=None if sweep else 1.4)
    p.add_argument("--beta", type=float, default=None if sweep else 0.3)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _proto_flags():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--prototype", choices=PROTOTYPES, default="none")
    p.add_argument("--nz", type=int, help="number of zeros")
    p.add_argument("--gain", type=float, default=1.0, help="filter gain G")
    p.add_argument("--w0", type=float, help="notch frequency in units of pi")
    p.add_argument("--wc", type=float, help="lowpass cutoff in units of pi")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="filtered-henon", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    common, proto = _common(), _proto_flags()

    p = sub.add_parser("filter", parents=[common, proto], help="coefficients and frequency response")
    p.add_argument("--bins", type=int, default=1024, help="frequency bins over [0, pi]")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("orbit", parents=[common, proto], help="dump an orbit")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--x0", help="initial state, comma-separated (default zeros)")
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("lyapunov", parents=[common, proto], help="largest Lyapunov exponent")
    p.add_argument("--n", type=int, default=3000, help="total iterations")
    p.add_argument("--transient", type=int, default=500)
    p.add_argument("--x0", help="initial state, comma-separated (default zeros)")
    p.set_defaults(func=cmd_lyapunov)

    p = sub.add_parser("fixed-points", parents=[common], help="p1+ and p1- versus G")
    p.add_argument("--g-min", type=float, default=-2.0)
    p.add_argument("--g-max", type=float, default=2.0)
    p.add_argument("--step", type=float, default=0.01)
    p.set_defaults(func=cmd_fixed_points)

    p = sub.add_parser("classify", parents=[common, proto], help="classify one parameter cell")
    p.add_argument("--n-total", type=int, default=3000)
    p.add_argument("--transient", type=int, default=500)
    p.add_argument("--n-ic", type=int, default=25)
    p.add_argument("--ic-radius", type=float, default=0.01)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("sweep", parents=[_common(sweep=True)], help="run experiment I..V")
    p.add_argument("--experiment", choices=list(EXPERIMENTS))
    p.add_argument("--config", help="INI file with an [experiment] section")
    for ax in ("axis1", "axis2"):
        for part in ("min", "max", "step"):
            p.add_argument(f"--{ax}-{part}", type=float)
    for short in _ALIASES:
        for part in ("min", "max", "step"):
            p.add_argument(f"--{short}-{part}", type=float)
    p.add_argument("--n-total", type=int)
    p.add_argument("--transient", type=int)
    p.add_argument("--n-ic", type=int)
    p.add_argument("--ic-radius", type=float)
    p.add_argument("--per-ic", action="store_true", help="also emit per-initial-condition exponents")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bifurcate", parents=[common, proto], help="attractor-following diagram")
    p.add_argument("--g-min", type=float, default=0.0)
    p.add_argument("--g-max", type=float, default=1.5)
    p.add_argument("--g-step", type=float, default=0.005)
    p.add_argument("--n-total", type=int, default=3000)
    p.add_argument("--n-keep", type=int, default=200)
    p.set_defaults(func=cmd_bifurcate)

    p = sub.add_parser("psd", parents=[common, proto], help="power spectral density of x1")
    p.add_argument("--n", type=int, default=8192, help="post-transient samples")
    p.add_argument("--transient", type=int, default=500)
    p.add_argument("--x0", help="initial state, comma-separated (default zeros)")
    p.set_defaults(func=cmd_psd)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        args.func(args, out)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (FilteredHenonError, ArithmeticError) as exc:
        print(f"{parser.prog} {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
