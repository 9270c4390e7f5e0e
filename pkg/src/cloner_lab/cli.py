"""Command-line harness: ``cloner-lab {clone,reverse,partial,distributed,sweep,verify}``."""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import __version__, _kernels
from .protocols import (
    ConfigError,
    ProtocolConfig,
    closed_form_asymmetric,
    closed_form_distributed,
    closed_form_distributed_photons,
    closed_form_partial,
    closed_form_partial_photons,
    closed_form_total_photons,
    effective_gamma,
    run,
)
from .quad_algebra import NonCommutingMeasurement, fidelity_from_photons

EXIT_OK, EXIT_CONFIG, EXIT_NONCOMMUTING, EXIT_VERIFY = 0, 2, 3, 4

COMMAND_PROTOCOL = {
    "clone": "clone_only",
    "reverse": "total_reversal",
    "partial": "partial_reversal",
    "distributed": "distributed",
}
SWEEP_DEFAULT_PROTOCOL = {
    "gamma": "clone_only",
    "kappa": "partial_reversal",
    "gain": "distributed",
    "L": "distributed",
}
CSV_COLUMNS = ["param", "F_S_sim", "F_Sp_sim", "F_S_closed", "F_Sp_closed", "abs_delta", "n_ch", "gamma_eff"]
CONFIG_KEYS = {f.name for f in fields(ProtocolConfig)}


@dataclass
class RunManifest:
    config: dict
    artifact_version: str
    seed: int
    outputs: list
    wall_time_ms: int
    backend: str = _kernels.BACKEND


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------


def load_config_file(path):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a flat JSON object")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    nested = [k for k, v in data.items() if isinstance(v, (dict, list))]
    if nested:
        raise ConfigError(f"config values must be scalars: {', '.join(nested)}")
    return data


def build_config(args, protocol):
    values = load_config_file(args.config) if args.config else {}
    for key in ("gamma", "kappa", "M", "L", "gain", "input", "trials", "seed"):
        val = getattr(args, key, None)
        if val is not None:
            values[key] = val
    values["protocol"] = protocol
    try:
        return ProtocolConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def parse_gain(text):
    if text == "auto":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"gain must be a number or 'auto', got {text!r}") from None


# ---------------------------------------------------------------------------
# report rows
# ---------------------------------------------------------------------------


def _fmt(x):
    if x is None:
        return ""
    return format(float(x), ".17g")


def _closed_forms(config):
    """Closed-form ``(F_S, F_S')`` for the configured gain; ``F_S'`` may be None."""
    p = config.protocol
    if p == "clone_only":
        return closed_form_asymmetric(config.gamma)
    if p == "total_reversal":
        if config.gain == "auto":
            return 1.0, None
        if not config.input.is_coherent:
            return None, None
        return fidelity_from_photons(closed_form_total_photons(config.gamma, config.gain)), None
    if p == "partial_reversal":
        fs, fsp = closed_form_partial(config.gamma, config.kappa)
        if config.gain != "auto":
            fs = fidelity_from_photons(closed_form_partial_photons(config.gamma, config.kappa, config.gain))
        return (fs if config.input.is_coherent else None), (fsp if config.input.is_coherent else None)
    F, _, _ = closed_form_distributed(config.M, config.L)
    if config.gain != "auto":
        F = fidelity_from_photons(closed_form_distributed_photons(config.M, config.L, config.gain))
    return (F if config.input.is_coherent else None), None


def report_row(config, report, param=None):
    p = config.protocol
    fid = report.fidelities
    if p == "distributed":
        key_s, key_sp = f"S{config.M}", None
    elif p == "total_reversal":
        key_s, key_sp = "S", None
    else:
        key_s, key_sp = "S", "S'"
    fs, fsp = fid[key_s], fid.get(key_sp) if key_sp else None
    cs, csp = _closed_forms(config)
    deltas = [abs(a - b) for a, b in ((fs, cs), (fsp, csp)) if a is not None and b is not None]
    if p == "partial_reversal":
        g_eff = effective_gamma(config.gamma, config.kappa)
    elif p == "clone_only":
        g_eff = config.gamma
    else:
        g_eff = None
    return {
        "param": param,
        "F_S_sim": fs,
        "F_Sp_sim": fsp,
        "F_S_closed": cs,
        "F_Sp_closed": csp,
        "abs_delta": max(deltas) if deltas else None,
        "n_ch": report.chaotic_photons.get(key_s),
        "gamma_eff": g_eff,
    }


def write_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def summary_line(config, report):
    parts = [config.protocol]
    if config.protocol == "distributed":
        parts.append(f"M={config.M} L={config.L}")
    else:
        parts.append(f"gamma={config.gamma:g}")
        if config.protocol == "partial_reversal":
            parts.append(f"kappa={config.kappa:g}")
    parts.append(f"input={config.input}")
    for k, v in report.fidelities.items():
        cf = report.closed_form.get(k)
        parts.append(f"F_{k}={v:.9f}" + (f" (closed form {cf:.9f})" if cf is not None else ""))
    if report.gamma_effective is not None and config.protocol == "partial_reversal":
        parts.append(f"gamma_eff={report.gamma_effective:.9f}")
    if config.protocol != "clone_only":
        parts.append(f"gain={report.gain_used:.9g}")
    if report.mc_fidelity is not None:
        parts.append(f"MC={report.mc_fidelity:.6f}+-{report.mc_stderr:.1e} ({report.mc_trials} trials)")
    return " ".join(parts)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _finish(args, config, payload, rows, t0, stream):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if args.format in ("json", "both"):
        write_json(out / "report.json", payload)
        written.append(str(out / "report.json"))
    if args.format in ("csv", "both"):
        write_csv(out / "sweep.csv", rows)
        written.append(str(out / "sweep.csv"))
    manifest = RunManifest(
        config=config.to_dict(),
        artifact_version=__version__,
        seed=config.seed,
        outputs=written + [str(out / "manifest.json")],
        wall_time_ms=int(round(1000 * (time.perf_counter() - t0))),
    )
    write_json(out / "manifest.json", asdict(manifest))


def cmd_protocol(args, stream):
    t0 = time.perf_counter()
    config = build_config(args, COMMAND_PROTOCOL[args.command])
    kwargs = {"variant": args.variant} if config.protocol == "partial_reversal" else {}
    report = run(config, **kwargs)
    payload = {"command": args.command, "config": config.to_dict(), "report": report.to_dict()}
    _finish(args, config, payload, [report_row(config, report)], t0, stream)
    print(summary_line(config, report), file=stream)
    return EXIT_OK


def sweep_values(start, stop, step, integer=False):
    if step is None or step <= 0 or not math.isfinite(step):
        raise ConfigError("sweep step must be a positive number")
    if stop < start:
        raise ConfigError(f"empty sweep range [{start}, {stop}]")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    vals = [round(start + i * step, 12) for i in range(n)]
    if integer:
        if any(v != int(v) for v in vals):
            raise ConfigError("L sweep needs integer start and step")
        vals = [int(v) for v in vals]
    return vals


def cmd_sweep(args, stream):
    t0 = time.perf_counter()
    protocol = args.protocol or SWEEP_DEFAULT_PROTOCOL[args.param]
    base = build_config(args, protocol)
    if args.param == "gain" and protocol not in ("partial_reversal", "distributed"):
        raise ConfigError("gain sweep needs the partial_reversal or distributed protocol")
    if args.param == "L" and protocol != "distributed":
        raise ConfigError("L sweep needs the distributed protocol")
    if args.param == "kappa" and protocol != "partial_reversal":
        raise ConfigError("kappa sweep needs the partial_reversal protocol")
    values = sweep_values(args.start, args.stop, args.step, integer=args.param == "L")
    kwargs = {"monte_carlo": False}
    if protocol == "partial_reversal":
        kwargs["variant"] = args.variant
    rows = []
    for v in values:
        cfg = ProtocolConfig(**{**base.to_dict(), args.param: v})
        rows.append(report_row(cfg, run(cfg, **kwargs), v))
    payload = {"command": "sweep", "param": args.param, "config": base.to_dict(), "rows": rows}
    _finish(args, base, payload, rows, t0, stream)
    deltas = [r["abs_delta"] for r in rows if r["abs_delta"] is not None]
    best = min(rows, key=lambda r: r["n_ch"] if r["n_ch"] is not None else math.inf)
    print(
        f"sweep {args.param} over {len(rows)} points ({protocol}): max |delta| = "
        f"{max(deltas) if deltas else float('nan'):.3g}, min n_ch = {best['n_ch']} at {args.param}={best['param']}",
        file=stream,
    )
    return EXIT_OK


def cmd_verify(args, stream):
    from .verify import run_verification

    t0 = time.perf_counter()
    results = run_verification(y_sign=-1.0 if args.inject_y_sign_fault else 1.0)
    for r in results:
        print(r.line(), file=stream)
    ok = all(r.passed for r in results)
    print(f"{'all suites passed' if ok else 'verification FAILED'} in {time.perf_counter() - t0:.1f}s", file=stream)
    return EXIT_OK if ok else EXIT_VERIFY


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _common(p):
    p.add_argument("--config", help="flat JSON file of configuration fields (flags override it)")
    p.add_argument("--gamma", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--M", type=int)
    p.add_argument("--L", type=int)
    p.add_argument("--gain", type=parse_gain, help='number or "auto"')
    p.add_argument("--input", help="vacuum | coherent:RE,IM | squeezed:R,ANGLE | thermal:NBAR")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--format", choices=("json", "csv", "both"), default="json")
    p.add_argument("--variant", choices=("two_qnd", "four_qnd"), default="two_qnd",
                   help="meter-coupling decomposition for partial reversal")


def build_parser():
    parser = argparse.ArgumentParser(prog="cloner-lab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "clone": "run the asymmetric cloner alone",
        "reverse": "total reversal by Eve's Bell measurement and Bob's displacement",
        "partial": "partial reversal through QND meter couplings",
        "distributed": "reversal by L collaborating eavesdroppers of a 1->M cloner",
    }
    for name, text in helps.items():
        _common(sub.add_parser(name, help=text))
    sw = sub.add_parser("sweep", help="tabulate simulated vs closed-form fidelities over a parameter")
    _common(sw)
    sw.add_argument("--param", required=True, choices=("gamma", "kappa", "gain", "L"))
    sw.add_argument("--start", type=float, required=True)
    sw.add_argument("--stop", type=float, required=True)
    sw.add_argument("--step", type=float, required=True)
    sw.add_argument("--protocol", choices=tuple(COMMAND_PROTOCOL.values()))
    vf = sub.add_parser("verify", help="run the oracle and invariant suites")
    vf.add_argument("--inject-y-sign-fault", action="store_true",
                    help="flip the sign of the transmitted outcome (the total-reversal suite must fail)")
    return parser


def main(argv=None, stream=None):
    stream = stream or sys.stdout
    args = build_parser().parse_args(argv)
    handler = {"sweep": cmd_sweep, "verify": cmd_verify}.get(args.command, cmd_protocol)
    try:
        return handler(args, stream)
    except ConfigError as exc:
        print(f"cloner-lab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonCommutingMeasurement as exc:
        print(f"cloner-lab: non-commuting measurement: {exc}", file=sys.stderr)
        return EXIT_NONCOMMUTING
    except ValueError as exc:
        print(f"cloner-lab: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
