"""Command-line front end: ``codedmr run|sweep|analyze|verify|demo-wordcount``.

Exit status is 0 on success, 2 for a bad configuration and 3 when a
correctness check fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys

from . import analysis
from .errors import DecodeFailure, SpecError
from .experiment import SCHEME_NAMES, analytic_load, resolve, run_job
from .mapexec import TimingModel, mean_overall_time, mean_subfile_time
from .model import JobSpec, validate_spec

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CORRECTNESS = 3

LOADS_COLUMNS = ["rk", "l_conv", "l_uncoded", "l_cmr", "lower", "gap", "rep_gain", "coding_gain"]
TIMING_COLUMNS = ["rk", "mean_subfile_time", "mean_overall_time", "load_cmr"]
SIM_COLUMNS = ["sim_coded", "sim_uncoded", "sim_overall_gain"]
ALL_COLUMNS = LOADS_COLUMNS + SIM_COLUMNS + ["mean_subfile_time", "mean_overall_time"]
COLUMN_SETS = {"loads": LOADS_COLUMNS, "timing": TIMING_COLUMNS, "all": ALL_COLUMNS}

_SPEC_FLAGS = ("n", "q", "k", "pk", "rk", "f", "mu", "seed")
_RUN_FLAGS = ("trials", "strategy", "scheme")
_LOG_LEVELS = {"off": None, "info": logging.INFO, "debug": logging.DEBUG}

log = logging.getLogger("codedmr")


class ConfigError(Exception):
    pass


def _configure_logging():
    level_name = os.environ.get("CMR_LOG", "off").strip().lower() or "off"
    if level_name not in _LOG_LEVELS:
        raise ConfigError(f"CMR_LOG must be one of {sorted(_LOG_LEVELS)}, got {level_name!r}")
    level = _LOG_LEVELS[level_name]
    root = logging.getLogger("codedmr")
    root.handlers.clear()
    if level is None:
        root.addHandler(logging.NullHandler())
        root.setLevel(logging.CRITICAL + 1)
        root.propagate = False
        return
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root.addHandler(handler)
    root.setLevel(level)
    root.propagate = False


def fmt(x) -> str:
    """6 significant digits; non-finite values print as nan / inf."""
    if isinstance(x, int) and not isinstance(x, bool):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.6g}"


def parse_rk_values(text) -> list[int]:
    """``"3"``, ``"1,2,5"`` or an inclusive range ``"1..7"``."""
    if isinstance(text, int):
        return [text]
    if isinstance(text, list):
        return [int(v) for v in text]
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            return list(range(int(lo), int(hi) + 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse rk value list {text!r}")


def _merged_config(args) -> dict:
    cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}")
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(cfg) - set(_SPEC_FLAGS) - set(_RUN_FLAGS)
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    for name in _SPEC_FLAGS + _RUN_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            cfg[name] = value
    if isinstance(cfg.get("rk"), str):
        values = parse_rk_values(cfg["rk"])
        if len(values) == 1:
            cfg["rk"] = values[0]
    return cfg


def _spec_from(cfg: dict, rk=None) -> JobSpec:
    fields = {k: cfg[k] for k in _SPEC_FLAGS if k in cfg}
    if rk is not None:
        fields["rk"] = rk
    if "rk" not in fields and "pk" in fields:
        fields["rk"] = fields["pk"]
    try:
        return validate_spec(JobSpec.from_dict(fields))
    except (SpecError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc))


def _emit(text: str, out_path):
    if out_path:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _lower(spec):
    value, _ = analysis.lower_bound(spec)
    return value


def cmd_run(args) -> int:
    cfg = _merged_config(args)
    if "rk" in cfg and not isinstance(cfg["rk"], int):
        raise ConfigError("run takes a single rk; use sweep for several")
    spec = _spec_from(cfg)
    scheme = cfg.get("scheme", "coded")
    trials = int(cfg.get("trials", 50))
    try:
        job_spec, strategy = resolve(spec, cfg.get("strategy"), scheme)
        result = run_job(spec, cfg.get("strategy"), scheme, trials,
                         keep_transcript=bool(args.transcript))
    except DecodeFailure as exc:
        _emit(json.dumps({"decode": "failed", "error": str(exc)}, indent=2) + "\n", args.out)
        return EXIT_CORRECTNESS
    except ValueError as exc:
        raise ConfigError(str(exc))
    if args.transcript:
        with open(args.transcript, "w") as fh:
            fh.write(result.first_transcript.to_jsonl())
    report = {
        "spec": job_spec.to_dict(),
        "n_raw": job_spec.n_input,
        "n_padded": job_spec.n,
        "strategy": strategy,
        "scheme": scheme,
        "trials": trials,
        "loads": result.loads,
        "mean_load": result.mean_load,
        "analytic_load": analytic_load(job_spec, scheme),
        "lower_bound": _lower(job_spec),
        "decode": "ok",
    }
    _emit(json.dumps(report, indent=2) + "\n", args.out)
    return EXIT_OK


def sweep_rows(base_cfg: dict, rk_values, trials: int, columns, decode: bool = False) -> list[dict]:
    rows = []
    for rk in rk_values:
        spec = _spec_from(base_cfg, rk=rk)
        rep = analysis.bounds_report(spec)
        row = {
            "rk": rk,
            "l_conv": rep.l_conv,
            "l_uncoded": rep.l_uncoded,
            "l_cmr": rep.l_cmr_asymptotic,
            "load_cmr": rep.l_cmr_asymptotic,
            "lower": rep.lower_max,
            "gap": math.nan if math.isinf(rep.gap_ratio) else rep.gap_ratio,
            "rep_gain": rep.repetition_gain,
            "coding_gain": rep.coding_gain,
        }
        if any(c in columns for c in SIM_COLUMNS):
            coded = run_job(spec, "batch", "coded", trials, decode=decode)
            uncoded = run_job(spec, "batch", "uncoded", trials, decode=decode)
            row["sim_coded"] = coded.mean_load
            row["sim_uncoded"] = uncoded.mean_load
            exact = coded.mean_load_exact
            row["sim_overall_gain"] = (
                math.inf if exact == 0 else float(analysis.load_conventional_exact(spec) / exact)
            )
        if "mean_subfile_time" in columns or "mean_overall_time" in columns:
            t = TimingModel.from_spec(spec)
            row["mean_subfile_time"] = mean_subfile_time(t, spec)
            row["mean_overall_time"] = mean_overall_time(t, spec)
        rows.append(row)
    return rows


def format_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row[c]) for c in columns])
    return buf.getvalue()


def cmd_sweep(args) -> int:
    cfg = _merged_config(args)
    if "pk" not in cfg:
        raise ConfigError("sweep needs pk")
    rk_values = parse_rk_values(cfg["rk"]) if "rk" in cfg else list(range(1, int(cfg["pk"]) + 1))
    cfg.pop("rk", None)
    columns = COLUMN_SETS[args.columns]
    trials = int(cfg.get("trials", 50))
    try:
        rows = sweep_rows(cfg, rk_values, trials, columns, decode=args.decode)
    except DecodeFailure as exc:
        print(f"decode failure: {exc}", file=sys.stderr)
        return EXIT_CORRECTNESS
    _emit(format_csv(rows, columns), args.out)
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = _merged_config(args)
    spec = _spec_from(cfg)
    rep = analysis.bounds_report(spec).to_dict()
    if args.table:
        width = max(len(k) for k in rep)
        text = "".join(f"{k:<{width}}  {fmt(v) if v is not None else 'inf'}\n" for k, v in rep.items())
    else:
        text = json.dumps({"spec": spec.to_dict(), **rep}, indent=2) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import verify_instances

    if args.instances < 1:
        raise ConfigError("--instances must be positive")
    report = verify_instances(args.instances, args.seed if args.seed is not None else 0, gf2=args.gf2)
    _emit(json.dumps(report.to_dict(), indent=2) + "\n", args.out)
    return EXIT_OK if report.ok else EXIT_CORRECTNESS


def cmd_demo(args) -> int:
    from .wordcount import DemoFailure, run_demo

    lines = []
    try:
        run_demo(out=lines.append)
    except (DemoFailure, DecodeFailure) as exc:
        lines.append(f"FAILED: {exc}")
        _emit("\n".join(lines) + "\n", args.out)
        return EXIT_CORRECTNESS
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _add_spec_flags(p, rk_help="rK, the number of servers that finish each subfile"):
    p.add_argument("--config", help="JSON file with job fields; flags take precedence")
    p.add_argument("--n", type=int, help="number of subfiles N")
    p.add_argument("--q", type=int, help="number of keys Q")
    p.add_argument("--k", type=int, help="number of servers K")
    p.add_argument("--pk", type=int, help="pK, servers each subfile is assigned to")
    p.add_argument("--rk", help=rk_help)
    p.add_argument("--f", type=int, help="bits per intermediate value")
    p.add_argument("--mu", type=float, help="per-server Map processing rate")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="write output here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="codedmr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one job over several trials")
    _add_spec_flags(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--strategy", choices=["batch", "naive", "conventional"])
    p.add_argument("--scheme", choices=list(SCHEME_NAMES))
    p.add_argument("--transcript", help="write the first trial's messages as JSON lines")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="CSV of loads, bounds and timing over rK")
    _add_spec_flags(p, rk_help="rK values: 3, 1,2,5 or 1..7 (default 1..pK)")
    p.add_argument("--trials", type=int)
    p.add_argument("--strategy", choices=["batch"])
    p.add_argument("--scheme", choices=["coded"])
    p.add_argument("--columns", choices=sorted(COLUMN_SETS), default="all")
    p.add_argument("--decode", action="store_true", help="also decode and verify every trial")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="closed-form loads, bounds and gains")
    _add_spec_flags(p)
    p.add_argument("--table", action="store_true", help="aligned text instead of JSON")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="randomised oracle cross-check")
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gf2", type=int, default=200, help="instances also checked by GF(2) elimination")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("demo-wordcount", help="the four-server word-counting walk-through")
    p.add_argument("--out")
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        _configure_logging()
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
