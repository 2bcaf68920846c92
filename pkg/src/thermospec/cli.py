"""Command-line front end.

Exit codes
----------
0  success
1  unexpected internal error
2  bad command line or missing input file
3  schema error in a config, trace, manifest or calibration file
4  circuit / bolometer / synthesis model error
5  thermometry error (junction model, calibration range)
6  fitting error (Lorentzian, internal Q, loss model)
7  quantum solver error or failed equivalence check
"""
from __future__ import annotations

import argparse
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import AnalysisError, analyze_power_sweep, analyze_trace
from .bolometer import BolometerError, figures_of_merit
from .circuit import (
    loaded_quality_factors,
    power_to_bolometer_lorentzian,
    quality_factors,
    shifted_resonance,
    transmission_exact,
)
from .config import REFERENCE_DEVICE_PATH, ConfigError, DeviceConfig, load_config, parse_config
from .constants import dbm_to_watts
from .lorentzian import FitError
from .losses import LossModelFitError, LossModelParams, UnphysicalLinewidthError, loss_model_q
from .nis import (
    CalibrationFit,
    ThermometryError,
    calibration_curve,
    linear_calibration_fit,
)
from .quantum import SteadyStateError, circuit_equivalence_table
from .reports import atomic_write_text, digest_bytes, digest_files, dumps, fmt, make_report, write_json
from .synth import NoiseSpec, SynthConfig, SynthesisError, synthesize_trace
from .trace import TraceFormatError, ValueKind, read_trace_csv

log = logging.getLogger("thermospec")

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_SCHEMA = 0, 1, 2, 3
EXIT_MODEL, EXIT_THERMOMETRY, EXIT_FIT, EXIT_QUANTUM = 4, 5, 6, 7
QUANTUM_TOLERANCE = 1e-3

# Order matters: subclasses before their bases.
ERROR_CODES = (
    (FileNotFoundError, EXIT_USAGE),
    (ConfigError, EXIT_SCHEMA),
    (TraceFormatError, EXIT_SCHEMA),
    (json.JSONDecodeError, EXIT_SCHEMA),
    (ThermometryError, EXIT_THERMOMETRY),
    (FitError, EXIT_FIT),
    (UnphysicalLinewidthError, EXIT_FIT),
    (LossModelFitError, EXIT_FIT),
    (AnalysisError, EXIT_FIT),
    (SteadyStateError, EXIT_QUANTUM),
    (BolometerError, EXIT_MODEL),
    (SynthesisError, EXIT_MODEL),
    (ValueError, EXIT_MODEL),
)


class CheckFailed(RuntimeError):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _emit(text: str, out: str | None) -> None:
    if out:
        atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


def _config_bytes(args) -> bytes:
    return Path(args.config).read_bytes() if args.config else REFERENCE_DEVICE_PATH.read_bytes()


def _device(args) -> DeviceConfig:
    if args.config:
        return load_config(args.config)
    return parse_config(REFERENCE_DEVICE_PATH.read_text())


def _internal_q(args, device: DeviceConfig, p_in: float) -> float:
    if getattr(args, "internal_q", None):
        return args.internal_q
    if device.internal_q is not None:
        return device.internal_q
    return float(loss_model_q(p_in, LossModelParams.reference()).q_internal)


# commands


def cmd_lumped(args) -> int:
    device = _device(args)
    a = device.assembly()
    qf = quality_factors(a)
    payload = {
        "mode_index": device.mode_index,
        "lumped_resonator": {
            "inductance_L_henry": a.resonator.inductance_L,
            "capacitance_C_farad": a.resonator.capacitance_C,
            "resistance_R_ohm": a.resonator.resistance_R,
            "z_lc_ohm": a.resonator.z_lc,
            "f_mode_hz": a.resonator.f0,
        },
        "quality_factors": qf.to_dict(),
        "shifted_resonance_hz": shifted_resonance(a),
    }
    if math.isfinite(a.resonator.resistance_R):
        payload["loaded_quality_factors"] = loaded_quality_factors(a).to_dict()
    report = make_report("lumped", payload, digest_bytes(_config_bytes(args)), qf.diagnostics)
    _emit(dumps(report), args.out)
    return EXIT_OK


def cmd_transmit(args) -> int:
    device = _device(args)
    if not (0 < args.fstart < args.fstop) or args.points < 2:
        raise CheckFailed("need 0 < --fstart < --fstop and --points >= 2", EXIT_USAGE)
    f = np.linspace(args.fstart, args.fstop, args.points)
    p_in = dbm_to_watts(args.pin_dbm)
    a = device.assembly().with_internal_q(_internal_q(args, device, p_in))
    buf = io.StringIO()
    if args.exact:
        buf.write("frequency_hz,s_squared\n")
        vals = transmission_exact(a, f)
    else:
        buf.write("frequency_hz,p_b_watt\n")
        vals = power_to_bolometer_lorentzian(f, loaded_quality_factors(a), p_in)
    for x, y in zip(f, vals):
        buf.write(f"{fmt(x)},{fmt(y)}\n")
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    device = _device(args)
    t, v = calibration_curve(device.thermometer(), args.tmin, args.tmax, args.points)
    cal = linear_calibration_fit(list(zip(t, v)))
    if args.out:
        csv = "t0_kelvin,v_th_volt\n" + "".join(f"{fmt(a)},{fmt(b)}\n" for a, b in zip(t, v))
        atomic_write_text(args.out, csv)
    report = make_report("calibrate", {"calibration": cal.to_dict()}, digest_bytes(_config_bytes(args)))
    _emit(dumps(report), args.report)
    return EXIT_OK


def cmd_simulate(args) -> int:
    device = _device(args)
    p_in = dbm_to_watts(args.pin_dbm)
    cfg = SynthConfig.from_device(device, p_in, _internal_q(args, device, p_in), points=args.points,
                                  span_linewidths=args.span)
    if args.noise_nep == 0:
        noise = NoiseSpec.none().with_seed(args.seed)
    else:
        noise = NoiseSpec(nep=args.noise_nep, integration_time=args.integration_time, seed=args.seed)
    trace = synthesize_trace(cfg, noise, args.kind)
    trace.write_csv(args.out)
    log.info("wrote %d-point %s trace to %s", len(trace), trace.value_kind.value, args.out)
    return EXIT_OK


def _read_calibration(path) -> CalibrationFit | None:
    if not path:
        return None
    data = json.loads(Path(path).read_text())
    data = data.get("calibration", data)
    try:
        return CalibrationFit(
            slope_a=float(data["slope_a"]),
            intercept_b=float(data["intercept_b"]),
            valid_range=tuple(data["valid_range"]),
            residuals=list(data.get("residuals", [])),
            rms_residual=float(data.get("rms_residual", 0.0)),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"calibration file {path}: missing or bad field {exc}") from exc


def cmd_fit(args) -> int:
    device = _device(args)
    trace = read_trace_csv(args.trace, args.kind)
    p_in = dbm_to_watts(args.pin_dbm) if args.pin_dbm is not None else trace.metadata.get("p_in_watt")
    cal = _read_calibration(args.calibration)
    res = analyze_trace(trace, device.model(), p_in, cal)
    inputs = [args.trace] + ([args.config] if args.config else []) + ([args.calibration] if args.calibration else [])
    payload = {
        "trace": str(args.trace),
        "quality_factors": quality_factors(device.assembly()).to_dict(),
        "analysis": res.to_dict(),
    }
    write_json(args.out, make_report("fit", payload, digest_files(inputs), res.diagnostics))
    return EXIT_OK


def cmd_sweep(args) -> int:
    device = _device(args)
    manifest_path = Path(args.manifest)
    entries = json.loads(manifest_path.read_text())
    if not isinstance(entries, list) or not entries:
        raise ConfigError("manifest must be a non-empty JSON array of {pin_dbm, trace_path}")
    pairs, paths = [], []
    for i, e in enumerate(entries):
        if not isinstance(e, dict) or set(e) != {"pin_dbm", "trace_path"}:
            raise ConfigError(f"manifest entry {i}: expected exactly the keys pin_dbm and trace_path")
        p = Path(e["trace_path"])
        p = p if p.is_absolute() else manifest_path.parent / p
        paths.append(p)
        pairs.append((dbm_to_watts(float(e["pin_dbm"])), read_trace_csv(p, args.kind)))
    cal = _read_calibration(args.calibration)
    sweep = analyze_power_sweep(pairs, device.model(), cal)
    digest = digest_files([manifest_path, *paths] + ([args.config] if args.config else []))
    write_json(args.out, make_report("sweep", sweep.to_dict(), digest, sweep.notices))
    return EXIT_OK


def cmd_quantum_check(args) -> int:
    device = _device(args)
    p_in = dbm_to_watts(args.pin_dbm)
    qf = quality_factors(device.assembly().with_internal_q(_internal_q(args, device, p_in)))
    rows = circuit_equivalence_table(qf, p_in, args.nmax, args.points)
    if args.out:
        head = "drive_frequency_hz,p_numeric_watt,p_analytic_watt,p_lorentzian_watt,rel_err_analytic,rel_err_lorentzian\n"
        atomic_write_text(args.out, head + "".join(",".join(fmt(x) for x in r) + "\n" for r in rows))
    worst = float(rows[:, 4:].max())
    summary = {
        "max_relative_error_analytic": float(rows[:, 4].max()),
        "max_relative_error_lorentzian": float(rows[:, 5].max()),
        "tolerance": QUANTUM_TOLERANCE,
        "passed": worst < QUANTUM_TOLERANCE,
    }
    sys.stdout.write(dumps(make_report("quantum-check", summary, digest_bytes(_config_bytes(args)))))
    if worst >= QUANTUM_TOLERANCE:
        raise CheckFailed(f"quantum/circuit disagreement {worst:.3e} exceeds {QUANTUM_TOLERANCE}", EXIT_QUANTUM)
    return EXIT_OK


def cmd_figures(args) -> int:
    device = _device(args)
    a = device.assembly()
    qf = quality_factors(a)
    fom = figures_of_merit(device.body(), args.tb, device.t0_kelvin, qf.q_bolometer, qf.f0)
    payload = {"figures_of_merit": fom.to_dict(), "q_bolometer": qf.q_bolometer, "f0_hz": qf.f0}
    _emit(dumps(make_report("figures", payload, digest_bytes(_config_bytes(args)))), args.out)
    return EXIT_OK


# parser


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="thermospec",
        description="Forward models and trace analysis for bolometric resonator spectroscopy.",
        epilog="Exit codes: 0 ok, 1 internal, 2 usage/missing file, 3 schema, 4 model, 5 thermometry, "
        "6 fitting, 7 quantum.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", help="device config JSON (default: packaged reference device)")
    p.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("lumped", help="lumped L, C, R and the quality-factor budget")
    s.add_argument("--out", help="write the JSON report here instead of stdout")
    s.set_defaults(func=cmd_lumped)

    s = sub.add_parser("transmit", help="CSV of exact |S|^2 or Lorentzian bolometer power")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--exact", action="store_true", help="full circuit |S|^2")
    g.add_argument("--lorentzian", action="store_true", help="Lorentzian P_b with loaded Q's, watts")
    s.add_argument("--fstart", type=float, required=True, help="start frequency, Hz")
    s.add_argument("--fstop", type=float, required=True, help="stop frequency, Hz")
    s.add_argument("--points", type=_positive_int, default=401)
    s.add_argument("--pin-dbm", type=float, default=-110.0, help="drive power for --lorentzian, dBm")
    s.add_argument("--internal-q", type=float, help="internal Q (default: config, else loss model at P_in)")
    s.add_argument("--out", help="CSV path (default stdout)")
    s.set_defaults(func=cmd_transmit)

    s = sub.add_parser("calibrate", help="forward V_th(T0) curve and its linear fit")
    s.add_argument("--tmin", type=float, default=0.05, help="kelvin")
    s.add_argument("--tmax", type=float, default=0.4, help="kelvin")
    s.add_argument("--points", type=_positive_int, default=15)
    s.add_argument("--out", help="calibration curve CSV")
    s.add_argument("--report", help="linear-fit JSON (default stdout)")
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("simulate", help="synthesize a trace CSV")
    s.add_argument("--pin-dbm", type=float, required=True)
    s.add_argument("--noise-nep", type=float, default=1.4e-18, help="W/sqrt(Hz); 0 disables noise")
    s.add_argument("--integration-time", type=float, default=1.0, help="seconds per point")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--points", type=_positive_int, default=401)
    s.add_argument("--span", type=float, default=5.0, help="half-span in linewidths")
    s.add_argument("--internal-q", type=float)
    s.add_argument("--kind", default=ValueKind.THERMOMETER_VOLTAGE.value, choices=[k.value for k in ValueKind])
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("fit", help="analyze one trace and write a fit report")
    s.add_argument("--trace", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--kind", choices=[k.value for k in ValueKind], help="override the file's value_kind")
    s.add_argument("--pin-dbm", type=float, help="drive power (default: from trace metadata)")
    s.add_argument("--calibration", help="calibrate report JSON; use the linear calibration instead of the model")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("sweep", help="analyze a power sweep and fit the loss model")
    s.add_argument("--manifest", required=True, help="JSON array of {pin_dbm, trace_path}")
    s.add_argument("--out", required=True)
    s.add_argument("--kind", choices=[k.value for k in ValueKind])
    s.add_argument("--calibration")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("quantum-check", help="master-equation vs circuit bolometer power")
    s.add_argument("--pin-dbm", type=float, default=-130.0)
    s.add_argument("--nmax", type=_positive_int, default=40)
    s.add_argument("--points", type=_positive_int, default=11)
    s.add_argument("--internal-q", type=float)
    s.add_argument("--out", help="comparison CSV")
    s.set_defaults(func=cmd_quantum_check)

    s = sub.add_parser("figures", help="NEP, time constant, cutoff and single-photon power")
    s.add_argument("--tb", type=float, default=0.130, help="bolometer electron temperature, kelvin")
    s.add_argument("--out")
    s.set_defaults(func=cmd_figures)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CheckFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except Exception as exc:
        for cls, code in ERROR_CODES:
            if isinstance(exc, cls):
                print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
                return code
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
