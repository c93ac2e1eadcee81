"""The ``wptlab`` command-line tool.

Subcommands: ``gains``, ``fit``, ``gain-sweep``, ``mc``, ``moments``,
``circuit``, ``synth``. Tables are emitted as CSV (default) or JSON; floats
use the shortest round-trip representation with a '.' decimal separator.
dBm appears only at this boundary — everything inside runs in watts.

Every output file is paired with a ``<file>.manifest.json`` recording the
command, the full argument list, the seed, the tool version and a timestamp;
re-running the recorded arguments reproduces the numeric columns
byte-for-byte. The default seed comes from the ``WPTLAB_SEED`` environment
variable. Exit status is 0 iff no emitted row carries an error flag.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys

import numpy as np

from . import __version__, circuit as circuit_mod
from .distributions import dist_from_name
from .errors import DivergentIntegralError, WptlabError
from .gains import DEFAULT_QUADRATURE, decompose, g_mod, g_td, g_wf
from .harvester import (
    CwCscgFading,
    CwNoFading,
    FitDataset,
    LogPolyFitModel,
    TdCw,
    TdMod,
    TdWf,
    fit_logpoly,
    fit_rmse_log,
    fourth_order_factor,
)
from .montecarlo import estimate_moments, mc_channel_fourth_moment, mc_fading_gain, mc_td_gain
from .rng import RNG_SCHEME
from .signals import (
    Cw,
    Modulated,
    Multisine,
    SampledSignal,
    TransmitConfig,
    WaveformSpec,
    synthesize,
)
from .units import dbm_to_watts


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _emit(rows, fmt, out, manifest):
    """Write rows (list of dicts with identical keys) to stdout or a file."""
    if fmt == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        fields = list(rows[0].keys()) if rows else []
        lines = [",".join(fields)]
        lines += [",".join(_fmt(row[f]) for f in fields) for row in rows]
        text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        _write_manifest(out, manifest)
    else:
        sys.stdout.write(text)


def _write_manifest(out_path, manifest):
    with open(out_path + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _manifest(args, argv):
    return {
        "command": args.cmd,
        "argv": argv,
        "seed": args.seed,
        "version": __version__,
        "rng_scheme": RNG_SCHEME,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }


def _parse_range(text):
    """Parse 'LO:HI:N' (inclusive linear grid) or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"expected LO:HI:N, got {text!r}")
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 1:
            raise argparse.ArgumentTypeError("range needs at least one point")
        return [float(v) for v in np.linspace(lo, hi, n)]
    return [float(v) for v in text.split(",")]


def _parse_m_range(text):
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",")]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_gains(args, argv):
    def one(scheme_name, m, n, dist_name, l):
        dist = dist_from_name(dist_name, l) if dist_name else None
        if scheme_name == "cw":
            scheme = CwNoFading()
        elif scheme_name == "cw-fading":
            scheme = CwCscgFading()
        elif scheme_name == "td-cw":
            scheme = TdCw(m)
        elif scheme_name == "td-mod":
            if dist is None:
                raise WptlabError("td-mod requires --dist")
            scheme = TdMod(m, dist)
        elif scheme_name == "td-wf":
            scheme = TdWf(m, n)
        else:  # pragma: no cover - argparse restricts choices
            raise WptlabError(f"unknown scheme {scheme_name}")
        row = {
            "scheme": scheme_name,
            "m": m,
            "n": n if scheme_name == "td-wf" else None,
            "dist": dist_name if scheme_name == "td-mod" else None,
            "l": l if dist_name == "flash" else None,
            "g_td": g_td(m),
            "g_mod": g_mod(dist) if dist is not None else None,
            "g_wf": g_wf(n) if scheme_name == "td-wf" else None,
            "fourth_order_factor": fourth_order_factor(scheme),
        }
        return row

    if args.sweep_m:
        rows = [one(args.scheme, m, args.n, args.dist, args.l) for m in _parse_m_range(args.sweep_m)]
    else:
        rows = [one(args.scheme, args.m, args.n, args.dist, args.l)]
    _emit(rows, args.format, args.out, _manifest(args, argv))
    return 0


def _cmd_fit(args, argv):
    data = FitDataset.from_csv(args.input)
    model = fit_logpoly(data, degree=args.degree)
    model.save_json(args.out)
    _write_manifest(args.out, _manifest(args, argv))
    rmse = fit_rmse_log(model, data)
    sys.stdout.write(
        f"fitted degree-{model.degree} model: a={model.a!r} b={model.b!r} c={model.c!r}\n"
        f"valid range: {model.valid_range[0]!r} .. {model.valid_range[1]!r} W "
        f"({len(data)} points)\n"
        f"log-domain residual RMSE: {rmse!r}\n"
        f"wrote {args.out}\n"
    )
    return 0


def _cmd_gain_sweep(args, argv):
    model = LogPolyFitModel.load_json(args.model)
    if args.sensitivity_dbm is not None:
        model = model.with_floor(dbm_to_watts(args.sensitivity_dbm))
    rows = []
    had_error = False
    for dbm in args.prf_dbm:
        p = dbm_to_watts(dbm)
        row = {
            "prf_dbm": dbm,
            "e_rfdc": None,
            "gain": None,
            "combined": None,
            "extrapolated_flag": model.is_extrapolated(p),
        }
        if args.mode in ("mc-fading", "mc-td"):
            row["std_error"] = None
        try:
            if args.mode == "fading":
                dec = decompose(model, p, "fading", DEFAULT_QUADRATURE)
            elif args.mode == "td2":
                dec = decompose(model, p, "td2", DEFAULT_QUADRATURE)
            else:
                fn = mc_fading_gain if args.mode == "mc-fading" else mc_td_gain
                mc = fn(model, p, trials=args.trials, seed=args.seed)
                e_rfdc = model.evaluate(p) / p
                row.update(
                    e_rfdc=e_rfdc, gain=mc.estimate, combined=e_rfdc * mc.estimate,
                    std_error=mc.std_error,
                )
                rows.append(row)
                continue
            row.update(e_rfdc=dec.e_rfdc, gain=dec.gain_factor, combined=dec.combined)
        except DivergentIntegralError as exc:
            row["error"] = str(exc)
            had_error = True
        rows.append(row)
    for row in rows:
        row.setdefault("error", None)
    _emit(rows, args.format, args.out, _manifest(args, argv))
    return 1 if had_error else 0


def _cmd_mc(args, argv):
    if args.op == "channel-moment":
        res = mc_channel_fourth_moment(args.m, trials=args.trials, seed=args.seed)
    else:
        model = LogPolyFitModel.load_json(args.model)
        if args.sensitivity_dbm is not None:
            model = model.with_floor(dbm_to_watts(args.sensitivity_dbm))
        p = dbm_to_watts(args.prf_dbm)
        if args.op == "fading-gain":
            res = mc_fading_gain(model, p, trials=args.trials, seed=args.seed)
        else:
            res = mc_td_gain(model, p, m=args.m, trials=args.trials, seed=args.seed)
    _emit([res.to_dict()], args.format, args.out, _manifest(args, argv))
    return 0


def _cmd_moments(args, argv):
    if args.input.endswith(".csv"):
        sig = SampledSignal.from_csv(args.input)
    else:
        sig = SampledSignal.from_binary(args.input)
    est = estimate_moments(sig)
    row = {
        "m2_w": est.m2,
        "m4_w2": est.m4,
        "se_m2": est.se_m2,
        "se_m4": est.se_m4,
        "count": est.count,
    }
    _emit([row], args.format, args.out, _manifest(args, argv))
    return 0


def _make_family(args):
    if args.family == "cw":
        return Cw()
    if args.family == "multisine":
        return Multisine(n_tones=args.n_tones, delta_f=args.delta_f)
    return Modulated(dist=dist_from_name(args.dist or "cscg", args.l), symbol_rate=args.symbol_rate)


def _cmd_synth(args, argv):
    family = _make_family(args)
    w = WaveformSpec(family=family, power=dbm_to_watts(args.power_dbm), carrier=args.carrier)
    cfg = TransmitConfig.uniform(args.m, args.phase_rate)
    sig = synthesize(w, cfg, args.duration, args.sample_rate, args.seed)
    if args.out.endswith(".csv"):
        sig.to_csv(args.out)
    else:
        sig.to_binary(args.out)
    _write_manifest(args.out, _manifest(args, argv))
    sys.stdout.write(
        f"wrote {len(sig)} samples at {sig.sample_rate!r} Hz to {args.out}\n"
    )
    return 0


def _cmd_circuit(args, argv):
    params = circuit_mod.CircuitParams.from_config(args.config) if args.config \
        else circuit_mod.CircuitParams()
    schemes = []
    for name in args.scheme:
        if name == "cw":
            schemes.append(circuit_mod.DriveScheme.cw())
        elif name == "td-cw":
            schemes.append(circuit_mod.DriveScheme.cw(m=args.m, phase_rate=args.phase_rate))
        elif name == "multisine":
            schemes.append(circuit_mod.DriveScheme.multisine(args.n_tones, args.delta_f))
        elif name == "td-multisine":
            schemes.append(circuit_mod.DriveScheme.multisine(
                args.n_tones, args.delta_f, m=args.m, phase_rate=args.phase_rate))
        else:  # pragma: no cover - argparse restricts choices
            raise WptlabError(f"unknown scheme {name}")
    settings = circuit_mod.SolverSettings(samples_per_period=args.samples_per_period)
    rows = circuit_mod.sweep(
        params, schemes, args.prf_dbm, realizations=args.realizations,
        seed=args.seed, carrier=args.carrier, settings=settings, workers=args.workers,
    )
    _emit([r.to_dict() for r in rows], args.format, args.out, _manifest(args, argv))
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser():
    top = argparse.ArgumentParser(
        prog="wptlab",
        description="Signal design and harvester modeling for wireless power transfer.",
    )
    top.add_argument("--version", action="version", version=f"wptlab {__version__}")
    sub = top.add_subparsers(dest="cmd", required=True)

    def common(p, needs_seed=True):
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--out", help="output file (default: stdout)")
        if needs_seed:
            p.add_argument("--seed", type=int, default=None,
                           help="RNG seed (default: $WPTLAB_SEED or 0)")

    p = sub.add_parser("gains", help="closed-form gain factors")
    p.add_argument("--scheme", choices=("cw", "cw-fading", "td-cw", "td-mod", "td-wf"),
                   required=True)
    p.add_argument("--m", type=int, default=1, help="transmit antennas")
    p.add_argument("--n", type=int, default=1, help="multisine tones")
    p.add_argument("--dist", choices=("cscg", "real-gaussian", "flash"))
    p.add_argument("--l", type=float, default=1.0, help="flash amplitude parameter")
    p.add_argument("--sweep-m", help="antenna sweep, e.g. 1..64")
    common(p)
    p.set_defaults(fn=_cmd_gains)

    p = sub.add_parser("fit", help="fit the log-domain polynomial harvester model")
    p.add_argument("input", help="CSV with header prf_dbm,pdc_dbm or prf_w,pdc_w")
    p.add_argument("--degree", type=int, choices=(1, 2), default=2)
    p.add_argument("--out", required=True, help="output model JSON")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=_cmd_fit)

    p = sub.add_parser("gain-sweep", help="fading / diversity gain over a power range")
    p.add_argument("model", help="model JSON from 'wptlab fit'")
    p.add_argument("--mode", choices=("fading", "td2", "mc-fading", "mc-td"), required=True)
    p.add_argument("--prf-dbm", type=_parse_range, required=True,
                   help="power grid: LO:HI:N or comma-separated dBm values")
    p.add_argument("--sensitivity-dbm", type=float, default=None,
                   help="rectifier sensitivity floor in dBm")
    p.add_argument("--trials", type=int, default=1_000_000, help="MC modes only")
    common(p)
    p.set_defaults(fn=_cmd_gain_sweep)

    p = sub.add_parser("mc", help="Monte Carlo oracles")
    p.add_argument("op", choices=("channel-moment", "fading-gain", "td-gain"))
    p.add_argument("--model", help="model JSON (gain ops)")
    p.add_argument("--prf-dbm", type=float, help="operating power (gain ops)")
    p.add_argument("--sensitivity-dbm", type=float, default=None)
    p.add_argument("--m", type=int, default=2, help="antennas (channel-moment, td-gain)")
    p.add_argument("--trials", type=int, default=1_000_000)
    common(p)
    p.set_defaults(fn=_cmd_mc)

    p = sub.add_parser("moments", help="second/fourth moments of a stored signal")
    p.add_argument("input", help="signal file (.csv or binary)")
    common(p)
    p.set_defaults(fn=_cmd_moments)

    p = sub.add_parser("synth", help="synthesize a received signal to a file")
    p.add_argument("--family", choices=("cw", "multisine", "modulated"), default="cw")
    p.add_argument("--n-tones", type=int, default=4)
    p.add_argument("--delta-f", type=float, default=2.5e6)
    p.add_argument("--dist", choices=("cscg", "real-gaussian", "flash"))
    p.add_argument("--l", type=float, default=1.0)
    p.add_argument("--symbol-rate", type=float, default=2.5e6)
    p.add_argument("--power-dbm", type=float, default=-20.0)
    p.add_argument("--carrier", type=float, default=2.45e6,
                   help="carrier in Hz (default is desk-scale 2.45 MHz)")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--phase-rate", type=float, default=2.5e3)
    p.add_argument("--duration", type=float, required=True, help="seconds")
    p.add_argument("--sample-rate", type=float, required=True, help="Hz")
    p.add_argument("--out", required=True, help=".csv or binary output path")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("circuit", help="steady-state rectifier power sweep")
    p.add_argument("--config", help="circuit config file (key=value)")
    p.add_argument("--scheme", action="append", required=True,
                   choices=("cw", "multisine", "td-cw", "td-multisine"),
                   help="repeatable")
    p.add_argument("--prf-dbm", type=_parse_range, required=True)
    p.add_argument("--realizations", type=int, default=150)
    p.add_argument("--m", type=int, default=2, help="antennas for td schemes")
    p.add_argument("--n-tones", type=int, default=4)
    p.add_argument("--delta-f", type=float, default=2.5e6)
    p.add_argument("--phase-rate", type=float, default=2.5e6)
    p.add_argument("--carrier", type=float, default=2.45e9)
    p.add_argument("--samples-per-period", type=int, default=512)
    p.add_argument("--workers", type=int, default=1)
    common(p)
    p.set_defaults(fn=_cmd_circuit)

    return top


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is None:
        args.seed = int(os.environ.get("WPTLAB_SEED", "0"))
    try:
        return args.fn(args, argv)
    except WptlabError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
