"""Command-line entry point: ``rmode-toa <command>``.

Exit codes: 0 success, 2 input/parse error, 3 identifiability error,
4 model misuse (unknown transmitter, SNR convention mismatch).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .fit import RESIDUAL_SPACES, WEIGHTINGS, FitConfig, FitInput, FitResult, IdentifiabilityError, fit_model
from .ingest import (
    SPEED_OF_LIGHT,
    ConfigError,
    LogFormatError,
    TransmitterConfig,
    dump_config,
    load_config,
    parse_log,
    render_log,
)
from .model import ModelError, SnrConvention, Unit, VarianceModel, convert_sigma_units, predict_variance
from .phase import (
    DEFAULT_MAX_GAP_S,
    DEFAULT_MAX_SNR_SPREAD_DB,
    DEFAULT_WINDOW_LEN,
    VarianceSample,
    WindowConfig,
    phase_to_toa,
    scan_windows,
    unwrap_phase,
)
from .synth import SynthTruth, TruthError, generate

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_IDENTIFIABILITY = 3
EXIT_MODEL = 4

FIT_FORMAT = "rmode-toa-fit/1"
CURVE_POINTS = 200


class InputError(Exception):
    pass


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


# ---------------------------------------------------------------- plot data


@dataclass
class PlotExport:
    scatter: dict[str, list[tuple[float, float]]]
    curve: dict[str, list[tuple[float, float]]]
    metadata: dict = field(default_factory=dict)


def build_plot_export(model: VarianceModel, samples, metadata=None, n_points: int = CURVE_POINTS) -> PlotExport:
    """Scatter of measured samples plus the model curve over each scatter's SNR span."""
    scatter: dict[str, list[tuple[float, float]]] = {}
    for s in samples:
        scatter.setdefault(s.transmitter_id, []).append((s.snr_db, s.variance_m2))
    curve = {}
    for tid, pts in scatter.items():
        dbs = [p[0] for p in pts]
        grid = np.linspace(min(dbs), max(dbs), n_points).tolist()
        curve[tid] = [(db, predict_variance(model, tid, 10.0 ** (db / 10.0))) for db in grid]
    return PlotExport(scatter, curve, dict(metadata or {}))


def _xy_csv(rows) -> str:
    return "snr_db,variance_m2\n" + "".join(f"{x!r},{y!r}\n" for x, y in rows)


def write_plot_export(export: PlotExport, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    written = []
    for tid in export.scatter:
        for kind, rows in (("scatter", export.scatter[tid]), ("curve", export.curve[tid])):
            path = out_dir / f"{kind}_{tid}.csv"
            write_atomic(path, _xy_csv(rows))
            written.append(path)
    write_atomic(out_dir / "plot_metadata.json", json.dumps(export.metadata, indent=2) + "\n")
    return written


# ---------------------------------------------------------------- documents


def _sample_dict(s: VarianceSample) -> dict:
    return {
        "transmitter_id": s.transmitter_id,
        "snr_db": s.snr_db,
        "snr_linear": s.snr_linear,
        "variance_m2": s.variance_m2,
        "window_start": s.window_start,
        "window_len": s.window_len,
    }


def fit_document(result: FitResult, samples, config: dict, windows: dict | None = None) -> dict:
    return {
        "format": FIT_FORMAT,
        "model": result.model.to_dict(),
        "model_nanoseconds": result.model.in_unit(Unit.NANOSECONDS).to_dict(),
        "fit": result.to_dict(),
        "config": config,
        "windows": windows or {},
        "samples": [_sample_dict(s) for s in samples],
    }


def load_model_document(text: str) -> tuple[VarianceModel, dict]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"model document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError("model document must be a JSON object")
    try:
        model = VarianceModel.from_dict(doc["model"] if "model" in doc else doc)
    except ModelError as exc:
        raise InputError(str(exc)) from exc
    return model, doc


def _samples_from_doc(doc: dict) -> list[VarianceSample]:
    try:
        return [
            VarianceSample(
                d["transmitter_id"], d["snr_linear"], d["variance_m2"], d["window_start"], d["window_len"], d["snr_db"]
            )
            for d in doc["samples"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"fit document has malformed samples: {exc}") from exc


# ---------------------------------------------------------------- commands


def cmd_simulate(args) -> int:
    try:
        truth_doc = json.loads(_read(args.truth))
    except json.JSONDecodeError as exc:
        raise InputError(f"truth file is not valid JSON: {exc}") from exc
    if not isinstance(truth_doc, dict):
        raise InputError("truth file must be a JSON object")
    try:
        truth = SynthTruth.from_dict(truth_doc)
    except TruthError as exc:
        raise InputError(str(exc)) from exc
    series = generate(truth)
    out = Path(args.out)
    write_atomic(out, render_log(series))
    write_atomic(out.with_name(out.name + ".truth.json"), truth.dumps() + "\n")
    freq = SPEED_OF_LIGHT / truth.wavelength
    cfg = [TransmitterConfig(tid, tid, freq) for tid in truth.jitter]
    cfg_path = Path(args.config_out) if args.config_out else out.with_name(out.name + ".config.json")
    write_atomic(cfg_path, dump_config(cfg) + "\n")
    n = len(series[0])
    print(f"wrote {len(series)} transmitter(s) x {n} epochs to {out}")
    return EXIT_OK


def _pipeline(measurements: str, config: str, wcfg: WindowConfig, max_gap_s: float):
    try:
        series = parse_log(_read(measurements))
    except LogFormatError as exc:
        raise InputError(f"{measurements}: {exc}") from exc
    try:
        tx = {c.id: c for c in load_config(_read(config))}
    except ConfigError as exc:
        raise InputError(f"{config}: {exc}") from exc
    unknown = [s.transmitter_id for s in series if s.transmitter_id not in tx]
    if unknown:
        raise InputError(f"transmitters missing from config: {', '.join(unknown)}")
    samples, windows = [], {}
    for s in series:
        toa = phase_to_toa(unwrap_phase(s, max_gap_s), tx[s.transmitter_id].wavelength)
        scan = scan_windows(toa, wcfg)
        samples.extend(scan.samples)
        windows[s.transmitter_id] = {
            "n_windows": scan.n_windows,
            "n_skipped_spread": scan.n_skipped_spread,
            "n_epochs_unused": scan.n_epochs_unused,
            "n_segments": len(toa.segment_starts),
            "wavelength_m": toa.wavelength,
        }
    return samples, windows


def cmd_fit(args) -> int:
    wcfg = WindowConfig(args.window_len, args.max_snr_spread_db)
    samples, windows = _pipeline(args.measurements, args.config, wcfg, args.max_gap_s)
    if not samples:
        raise InputError("no windows survived the SNR-spread gate; nothing to fit")
    fcfg = FitConfig(residual_space=args.residual_space, weighting=args.weighting)
    result = fit_model(FitInput(samples), fcfg)
    config = {
        "window_len": wcfg.window_len,
        "max_snr_spread_db": wcfg.max_snr_spread_db,
        "max_gap_s": args.max_gap_s,
        "residual_space": fcfg.residual_space,
        "weighting": fcfg.weighting,
        "snr_convention": fcfg.snr_convention.value,
    }
    doc = fit_document(result, samples, config, windows)
    write_atomic(args.out_model, json.dumps(doc, indent=2) + "\n")
    plot_dir = Path(args.plot_dir) if args.plot_dir else Path(args.out_model).parent
    write_plot_export(build_plot_export(result.model, samples, {**doc["fit"], "config": config}), plot_dir)

    m = result.model
    ns = m.in_unit(Unit.NANOSECONDS)
    print(f"C = {m.c_const:.6f} m ({ns.c_const:.6f} ns)")
    counts = {}
    for s in samples:
        counts[s.transmitter_id] = counts.get(s.transmitter_id, 0) + 1
    for tid in m.transmitter_ids:
        print(
            f"J[{tid}] = {m.jitter[tid]:.6f} m ({ns.jitter[tid]:.6f} ns), "
            f"samples = {counts[tid]}, rss = {result.per_transmitter_rss[tid]:.6g}"
        )
    print(
        f"rss = {result.rss:.6g} ({result.residual_space} space, {result.weighting} weights), "
        f"n_samples = {result.n_samples}, solver = {result.solver}, identifiability = {result.identifiability}"
    )
    print(
        f"config: window_len = {wcfg.window_len}, max_snr_spread_db = {wcfg.max_snr_spread_db}, "
        f"max_gap_s = {args.max_gap_s}, snr_convention = {fcfg.snr_convention.value}"
    )
    return EXIT_OK


def cmd_predict(args) -> int:
    model, _ = load_model_document(_read(args.model))
    if args.snr_db is not None:
        snr = 10.0 ** (args.snr_db / 10.0)
        convention = SnrConvention.DB_TO_LINEAR
    else:
        snr = args.snr_linear
        convention = SnrConvention.LINEAR
    var = predict_variance(model, args.transmitter, snr, convention)
    unit = model.unit
    other = Unit.NANOSECONDS if unit == Unit.METERS else Unit.METERS
    abbrev = {Unit.METERS: "m", Unit.NANOSECONDS: "ns"}
    var_o = convert_sigma_units(var, unit, other, squared=True)
    print(f"transmitter = {args.transmitter}, snr_linear = {snr!r}")
    print(f"variance = {var!r} {abbrev[unit]}^2 = {var_o!r} {abbrev[other]}^2")
    print(f"sigma = {math.sqrt(var)!r} {abbrev[unit]} = {math.sqrt(var_o)!r} {abbrev[other]}")
    return EXIT_OK


def cmd_unwrap(args) -> int:
    try:
        series = parse_log(_read(args.measurements))
    except LogFormatError as exc:
        raise InputError(f"{args.measurements}: {exc}") from exc
    lines = ["epoch_s,transmitter_id,phase_cont_rad,snr_db,segment"]
    for s in series:
        cont = unwrap_phase(s, args.max_gap_s)
        seg = np.zeros(len(cont), dtype=int)
        for a in cont.segment_starts[1:]:
            seg[a:] += 1
        for e, p, q, g in zip(cont.epochs.tolist(), cont.phase_cont.tolist(), cont.snr_db.tolist(), seg.tolist()):
            lines.append(f"{e!r},{s.transmitter_id},{p!r},{q!r},{g}")
    text = "\n".join(lines) + "\n"
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_export_plot(args) -> int:
    model, doc = load_model_document(_read(args.fit_doc))
    if "samples" not in doc:
        raise InputError(f"{args.fit_doc} has no samples; export-plot needs a document written by 'fit'")
    samples = _samples_from_doc(doc)
    meta = {**doc.get("fit", {}), "config": doc.get("config", {})}
    try:
        paths = write_plot_export(build_plot_export(model, samples, meta), args.out_dir)
    except ModelError as exc:
        raise InputError(str(exc)) from exc
    print(f"wrote {len(paths)} file(s) to {args.out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rmode-toa", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate a synthetic measurement log from a truth file")
    s.add_argument("truth")
    s.add_argument("out")
    s.add_argument("--config-out", help="transmitter config path (default <out>.config.json)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("fit", help="fit jitter and C to a measurement log")
    s.add_argument("measurements")
    s.add_argument("config")
    s.add_argument("out_model")
    s.add_argument("--window-len", type=int, default=DEFAULT_WINDOW_LEN)
    s.add_argument("--max-snr-spread-db", type=float, default=DEFAULT_MAX_SNR_SPREAD_DB)
    s.add_argument("--max-gap-s", type=float, default=DEFAULT_MAX_GAP_S)
    s.add_argument("--residual-space", choices=RESIDUAL_SPACES, default="variance")
    s.add_argument("--weighting", choices=WEIGHTINGS, default="uniform")
    s.add_argument("--plot-dir", help="directory for scatter/curve CSVs (default: next to out_model)")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("predict", help="predict TOA variance for one transmitter at a given SNR")
    s.add_argument("model")
    s.add_argument("transmitter")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--snr-db", type=float)
    g.add_argument("--snr-linear", type=float)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("unwrap", help="dump continuous phase for a measurement log")
    s.add_argument("measurements")
    s.add_argument("--out")
    s.add_argument("--max-gap-s", type=float, default=DEFAULT_MAX_GAP_S)
    s.set_defaults(func=cmd_unwrap)

    s = sub.add_parser("export-plot", help="write scatter/curve CSVs from a fit document")
    s.add_argument("fit_doc")
    s.add_argument("out_dir")
    s.set_defaults(func=cmd_export_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        sys.stderr.close()
        return EXIT_OK
    except IdentifiabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IDENTIFIABILITY
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
