"""Command line entry point: ``temphist run --scenario NAME [options]``.

Exit codes: 0 success, 2 a check exceeded its tolerance, 64 usage error,
74 I/O failure.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .scenarios import SCENARIOS, Report, ScenarioConfig, run

EX_OK, EX_CHECK, EX_USAGE, EX_IOERR = 0, 2, 64, 74


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="temphist", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command")
    r = sub.add_parser("run", help="run a registered scenario")
    r.add_argument("--config", help="key = value file; flags override its entries")
    r.add_argument("--scenario")
    r.add_argument("--n", type=int)
    r.add_argument("--trials", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--tolerance", type=float)
    r.add_argument("--format", choices=("json", "csv"))
    r.add_argument("--out")
    sub.add_parser("list", help="list registered scenarios")
    return p


_TYPES = {"n": int, "trials": int, "seed": int, "tolerance": float, "scenario": str, "format": str, "out": str}


def read_config(path: str) -> dict:
    cp = configparser.ConfigParser()
    cp.read_string("[run]\n" + Path(path).read_text())
    out = {}
    for key, value in cp["run"].items():
        key = key.replace("-", "_")
        if key not in _TYPES:
            raise UsageError(f"unknown config key {key!r}")
        out[key] = _TYPES[key](value)
    return out


def make_config(args: argparse.Namespace) -> ScenarioConfig:
    values = read_config(args.config) if args.config else {}
    for key in _TYPES:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    name = values.get("scenario")
    if name not in SCENARIOS:
        raise UsageError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    try:
        return ScenarioConfig(**values)
    except (TypeError, ValueError) as e:
        raise UsageError(str(e)) from e


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def render_json(report: Report) -> str:
    return json.dumps(_plain(report.as_dict()), indent=2) + "\n"


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    if isinstance(v, (list, tuple)):
        return " ".join(_cell(x) for x in v)
    return str(v)


def render_csv(report: Report) -> str:
    buf = io.StringIO()
    rows = report.table
    header = list(rows[0]) if rows else []
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(row.get(k, "")) for k in header])
    return buf.getvalue()


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "list":
            print("\n".join(SCENARIOS))
            return EX_OK
        if args.command != "run":
            raise UsageError("expected a command: run or list")
        cfg = make_config(args)
    except UsageError as e:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(f"temphist: error: {e}", file=sys.stderr)
        return EX_USAGE
    except OSError as e:
        print(f"temphist: cannot read config: {e}", file=sys.stderr)
        return EX_IOERR

    report = run(cfg)
    text = render_json(report) if cfg.format == "json" else render_csv(report)
    try:
        if cfg.out:
            out = Path(cfg.out)
            out.write_text(text)
            if report.dot is not None:
                out.with_suffix(".dot").write_text(report.dot)
        else:
            sys.stdout.write(text)
    except OSError as e:
        print(f"temphist: cannot write output: {e}", file=sys.stderr)
        return EX_IOERR

    for c in report.checks:
        if not c.passed:
            print(f"FAIL {c.name}: {c.value} vs {c.expected} (tol {c.tolerance})", file=sys.stderr)
    return EX_OK if report.ok else EX_CHECK


if __name__ == "__main__":
    sys.exit(main())
