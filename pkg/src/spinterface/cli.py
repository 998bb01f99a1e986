"""``spinterface`` command-line front end.

Every subcommand writes its CSV outputs plus ``manifest.json`` into the
output directory. Exit codes: 0 success, 2 configuration or usage error,
3 domain error, 4 sequence parse/validation error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import fitting, protocols, seqlang, svgplot
from .config import load_config
from .errors import ConfigError, DomainError
from .series import Trace, _fmt, _meta_lines, read_csv
from .spectra import LineShape, Powder, Single, cw_esr_spectrum, odmr_map, zeeman_pl_spectrum
from .spin import FieldPoint, diagonalize, transition_table

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_SEQUENCE = 0, 2, 3, 4


class _Run:
    """Collects outputs for the manifest."""

    def __init__(self, name, args, cfg):
        self.name = name
        self.cfg = cfg
        self.out = Path(args.out) if args.out is not None else cfg.output_dir
        self.out.mkdir(parents=True, exist_ok=True)
        self.files = []
        self.extra = {}
        self.start = time.perf_counter()
        self.args = {k: v for k, v in vars(args).items() if k != "func"}

    def path(self, name) -> Path:
        p = self.out / name
        self.files.append(name)
        return p

    def finish(self):
        manifest = {
            "subcommand": self.name,
            "arguments": {k: (str(v) if isinstance(v, Path) else v) for k, v in self.args.items()},
            "config": self.cfg.snapshot,
            "outputs": list(self.files),
            **self.extra,
            "wall_time_s": round(time.perf_counter() - self.start, 6),
        }
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _vector(text):
    parts = [float(p) for p in text.replace(",", " ").split()]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated components")
    v = np.asarray(parts)
    n = np.linalg.norm(v)
    if n == 0:
        raise argparse.ArgumentTypeError("direction must be non-zero")
    return tuple(v / n)


def _write_rows(path, header, rows, metadata):
    lines = _meta_lines({"columns": header, **metadata})
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row) + "\n")
    path.write_text("".join(lines), encoding="utf-8")


# -- subcommands -----------------------------------------------------------

def cmd_levels(args):
    cfg = load_config(args.config)
    run = _Run("levels", args, cfg)
    sys_ = cfg.spin_system
    axis = np.asarray(args.axis if args.axis is not None else sys_.zfs_axis)
    fp = FieldPoint(B0=tuple(axis * args.field * 1e-3))
    es = diagonalize(sys_, fp)
    temperature = args.temperature if args.temperature is not None else cfg.get("spectra", "temperature_K")
    meta = {"B_mT": args.field, "axis": list(axis), "D_GHz": sys_.D, "E_GHz": sys_.E, "g": sys_.g_factor}
    _write_rows(run.path("levels.csv"), "index,energy_GHz", [(i, e) for i, e in enumerate(es.energies)], meta)
    rows = [(t.lower, t.upper, t.frequency, t.intensity, t.population_weight)
            for t in transition_table(sys_, fp, temperature)]
    _write_rows(run.path("transitions.csv"), "lower,upper,frequency_GHz,intensity,population_weight", rows,
                dict(meta, temperature_K=temperature))
    run.finish()
    return EXIT_OK


def cmd_odmr(args):
    cfg = load_config(args.config)
    run = _Run("odmr", args, cfg)
    sys_ = cfg.spin_system
    B = np.linspace(args.B_min, args.B_max, args.B_steps)
    f = np.linspace(args.f_min, args.f_max, args.f_steps)
    line = LineShape("lorentzian", cfg.get("spectra", "odmr_linewidth_GHz"))
    m = odmr_map(sys_, cfg.optical, B, f, line, cfg.get("spectra", "temperature_K"), axis=args.axis)
    m.to_csv(run.path("odmr.csv"))
    low, high = m.ridges()
    _write_rows(run.path("odmr_ridges.csv"), "field_mT,lower_GHz,upper_GHz", zip(B, low, high),
                {"D_GHz": sys_.D})
    if args.svg:
        svgplot.heatmap(run.path("odmr.svg"), B, f, m.contrast, "field (mT)", "frequency (GHz)")
    run.finish()
    return EXIT_OK


def cmd_esr(args):
    cfg = load_config(args.config)
    run = _Run("esr", args, cfg)
    B = np.linspace(args.B_min, args.B_max, args.B_steps)
    freq = args.frequency if args.frequency is not None else cfg.get("spectra", "esr_frequency_GHz")
    width = args.linewidth if args.linewidth is not None else cfg.get("spectra", "esr_linewidth_mT")
    line = LineShape("lorentzian", width, derivative=args.derivative)
    orientation = Powder(args.powder) if args.powder else Single(args.axis or cfg.spin_system.zfs_axis)
    spec = cw_esr_spectrum(cfg.spin_system, freq, B, line, cfg.get("spectra", "temperature_K"), orientation)
    spec.to_csv(run.path("esr.csv"))
    if args.svg:
        svgplot.line_plot(run.path("esr.svg"), B, spec.values, "field (mT)", "ESR signal")
    run.finish()
    return EXIT_OK


def cmd_zeeman_pl(args):
    cfg = load_config(args.config)
    run = _Run("zeeman-pl", args, cfg)
    optical = cfg.optical
    centre = optical.zpl_wavelength
    lo = args.lambda_min if args.lambda_min is not None else centre - 3.0
    hi = args.lambda_max if args.lambda_max is not None else centre + 3.0
    lam = np.linspace(lo, hi, args.lambda_steps)
    line = LineShape("lorentzian", cfg.get("spectra", "pl_linewidth_GHz"))
    spec, diff = zeeman_pl_spectrum(cfg.spin_system, optical, args.field, lam, line)
    meta = {k: v for k, v in spec.metadata.items()}
    _write_rows(run.path("zeeman_pl.csv"), "wavelength_nm,emission,differential",
                zip(lam, spec.values, diff.values), meta)
    if args.svg:
        svgplot.line_plot(run.path("zeeman_pl.svg"), lam, diff.values, "wavelength (nm)", "PL(B) - PL(0)")
    run.finish()
    return EXIT_OK


def cmd_run(args):
    cfg = load_config(args.config)
    text = Path(args.sequence).read_text(encoding="utf-8")
    try:
        seq = seqlang.parse(seqlang.tokenize(text))
        model = cfg.pump_model
        params = cfg.coherent
        seq = seqlang.validate(seq, protocols.validation_context(model, params))
    except seqlang.SeqError as exc:
        print(exc.format(str(args.sequence)), file=sys.stderr)
        return EXIT_SEQUENCE
    run = _Run("run", args, cfg)
    ideal = args.ideal_pulses or cfg.get("dynamics", "ideal_pulses")
    try:
        result = protocols.execute_sequence(seq, model, params, ideal_pulses=ideal)
    except seqlang.SeqError as exc:
        print(exc.format(str(args.sequence)), file=sys.stderr)
        return EXIT_SEQUENCE
    noise = cfg.get("output", "noise")
    rng = np.random.default_rng(cfg.seed)
    grid = []
    for k, point in enumerate(result.points):
        grid.append({name: float(q) for name, q in point.sweep_values.items()})
        if args.traces:
            tr = point.trace
            tr.metadata.update({f"sweep_{n}": float(q) for n, q in point.sweep_values.items()})
            tr.to_csv(run.path(f"trace_{k:04d}.csv"))
    sweep = result.sweep_trace()
    if sweep.signal.size:
        signal = sweep.signal
        if noise > 0:
            signal = signal * (1.0 + noise * rng.standard_normal(signal.shape))
        out = Trace(sweep.time, signal, axis_name=sweep.axis_name,
                    metadata={"sequence": Path(args.sequence).name, "observable": "integrated PL",
                              "ideal_pulses": bool(ideal), "seed": cfg.seed, "noise": noise})
        out.to_csv(run.path("sweep.csv"))
        if args.svg and out.signal.ndim == 1:
            svgplot.line_plot(run.path("sweep.svg"), out.time, out.signal, sweep.axis_name, "integrated PL")
    if len(result.points) == 1 and not args.traces:
        result.points[0].trace.to_csv(run.path("trace.csv"))
    run.extra["sweep_grid"] = grid
    run.extra["canonical_sequence"] = seqlang.serialize(seq)
    run.finish()
    return EXIT_OK


def cmd_fit(args):
    cfg = load_config(args.config)
    run = _Run("fit", args, cfg)
    meta, data = read_csv(args.data)
    if data.ndim != 2 or data.shape[1] < 2:
        raise ConfigError(f"{args.data}: need at least two numeric columns")
    x = data[:, 0] * args.x_scale
    y = data[:, args.column]
    res = fitting.solve(fitting.FitProblem(args.model, x, y, k=args.peaks))
    (run.path("fit_report.txt")).write_text(res.report(), encoding="utf-8")
    res.residuals_csv(run.path("fit_residuals.csv"))
    sys.stdout.write(res.report())
    run.finish()
    return EXIT_OK


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="INI configuration file (default: built-in compound-1 values)")
    common.add_argument("--out", type=Path, default=None, help="output directory (default: [output] directory)")
    common.add_argument("--svg", action="store_true", help="also write a static SVG plot")

    p = argparse.ArgumentParser(prog="spinterface", description="Spin-optical simulation toolkit for S=1 molecular qubits.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("levels", parents=[common], help="energy levels and transitions at one field")
    s.add_argument("--field", type=float, default=0.0, help="static field magnitude in mT (default 0)")
    s.add_argument("--axis", type=_vector, default=None, help="field direction x,y,z (default: molecular axis)")
    s.add_argument("--temperature", type=float, default=None, help="temperature in K for population weights")
    s.set_defaults(func=cmd_levels)

    s = sub.add_parser("odmr", parents=[common], help="field/frequency cw-ODMR map")
    s.add_argument("--B-min", type=float, default=0.0, help="lowest field in mT (default 0)")
    s.add_argument("--B-max", type=float, default=30.0, help="highest field in mT (default 30)")
    s.add_argument("--B-steps", type=int, default=61, help="field samples (default 61)")
    s.add_argument("--f-min", type=float, default=3.0, help="lowest frequency in GHz (default 3.0)")
    s.add_argument("--f-max", type=float, default=4.3, help="highest frequency in GHz (default 4.3)")
    s.add_argument("--f-steps", type=int, default=261, help="frequency samples (default 261)")
    s.add_argument("--axis", type=_vector, default=None, help="field direction x,y,z (default: molecular axis)")
    s.set_defaults(func=cmd_odmr)

    s = sub.add_parser("esr", parents=[common], help="field-swept cw-ESR spectrum")
    s.add_argument("--frequency", type=float, default=None, help="microwave frequency in GHz (default [spectra])")
    s.add_argument("--B-min", type=float, default=0.0, help="lowest field in mT (default 0)")
    s.add_argument("--B-max", type=float, default=700.0, help="highest field in mT (default 700)")
    s.add_argument("--B-steps", type=int, default=1401, help="field samples (default 1401)")
    s.add_argument("--linewidth", type=float, default=None, help="Lorentzian FWHM in mT (default [spectra])")
    s.add_argument("--derivative", action="store_true", help="first-derivative line shape")
    s.add_argument("--powder", type=int, default=0, metavar="N", help="powder average over N orientations")
    s.add_argument("--axis", type=_vector, default=None, help="single-crystal field direction x,y,z")
    s.set_defaults(func=cmd_esr)

    s = sub.add_parser("zeeman-pl", parents=[common], help="zero-phonon emission and its field-induced change")
    s.add_argument("--field", type=float, default=9.0, help="field in tesla along the molecular axis (default 9)")
    s.add_argument("--lambda-min", type=float, default=None, help="lowest wavelength in nm (default ZPL - 3)")
    s.add_argument("--lambda-max", type=float, default=None, help="highest wavelength in nm (default ZPL + 3)")
    s.add_argument("--lambda-steps", type=int, default=1201, help="wavelength samples (default 1201)")
    s.set_defaults(func=cmd_zeeman_pl)

    s = sub.add_parser("run", parents=[common], help="execute a .seq pulse sequence")
    s.add_argument("sequence", type=Path, help="sequence file")
    s.add_argument("--ideal-pulses", action="store_true", help="instantaneous microwave rotations")
    s.add_argument("--traces", action="store_true", help="write the full PL trace of every sweep point")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("fit", parents=[common], help="fit a model to a two-column CSV")
    s.add_argument("data", type=Path, help="CSV with x in the first column")
    s.add_argument("--model", required=True, choices=fitting.MODEL_TAGS, help="model family")
    s.add_argument("--peaks", type=int, default=2, help="peak count for lorentzian_sum (default 2)")
    s.add_argument("--column", type=int, default=1, help="data column holding y (default 1)")
    s.add_argument("--x-scale", type=float, default=1.0, help="multiply x by this factor before fitting")
    s.set_defaults(func=cmd_fit)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"spinterface: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except seqlang.SeqError as exc:
        print(exc.format(), file=sys.stderr)
        return EXIT_SEQUENCE
    except DomainError as exc:
        print(f"spinterface: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except FileNotFoundError as exc:
        print(f"spinterface: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
