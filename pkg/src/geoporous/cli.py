"""Command line entry point: ``geoporous run|show|suites``."""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np

from geoporous.errors import CertificateFailed, ConfigInvalid, GeoporousError
from geoporous.suites import SUITES, SuiteResult, run

SCHEMA_VERSION = 1

_NUM = {"type": "number"}
_INT = {"type": "integer", "minimum": 1}

PARAMETER_SCHEMAS = {
    "spaces": {"n": _INT, "kinds": {"type": "array", "items": {"enum": ["euclidean", "sup_norm", "sphere", "hyperbolic"]},
                                    "minItems": 1}},
    "catcheck": {"triangles": _INT, "delta_pairs": _INT, "sigma": {"type": "number", "exclusiveMinimum": 0},
                 "sample_count": _INT},
    "extension": {"sources": _INT, "pairs": _INT, "q": _NUM, "q_prime": _NUM, "r": _NUM, "u0_index": {"type": "integer"},
                  "samples": _INT, "Z_points": _INT, "max_attempts": _INT},
    "porosity": {"cell": {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3}, "trials": _INT,
                 "slope": _NUM, "samples": _INT,
                 "constant": {"type": "object", "additionalProperties": False,
                              "properties": {"sigma": _NUM, "eps": _NUM, "r": _NUM, "u0": _NUM,
                                             "y0": {"type": "array", "items": _NUM}, "trials": _INT}}},
    "hyperspace": {"random_sets": _INT, "max_members": _INT},
}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["suite"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "suite": {"enum": sorted(SUITES)},
        "parameters": {"type": "object"},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "output_dir": {"type": "string"},
    },
}

DESCRIPTIONS = {
    "spaces": "segment isometry on random (x, y, s, t) for every space kind",
    "catcheck": "comparison-triangle checks and temperate-curvature delta search on the sphere",
    "extension": "weighted McShane extension of random piecewise-linear sources",
    "porosity": "cell witness, excluded-ball trials and the constant-mapping witness",
    "hyperspace": "Hausdorff golden values, segment isometry and the hyperbolic inequality",
}


def validate_config(obj) -> dict:
    try:
        jsonschema.validate(obj, CONFIG_SCHEMA)
        params = obj.get("parameters", {})
        jsonschema.validate(params, {"type": "object", "additionalProperties": False,
                                     "properties": PARAMETER_SCHEMAS[obj["suite"]]})
    except jsonschema.ValidationError as exc:
        raise ConfigInvalid(exc.message) from None
    return obj


def load_config(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigInvalid(f"config file not found: {path}")
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"malformed JSON: {exc}") from None
    return validate_config(obj)


def _plain(obj):
    """Recursively convert numpy scalars/arrays to JSON-ready Python values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def report_payload(result: SuiteResult, seed: int) -> dict:
    """Everything in report.json except the timestamp."""
    failed_rows = [r for r in result.rows if not r.get("passed", True)]
    return _plain({
        "schema_version": SCHEMA_VERSION,
        "suite": result.suite,
        "seed": seed,
        "parameters": result.parameters,
        "results": result.payload,
        "certificates": result.certificates,
        "failed": result.failed,
        "failed_rows": failed_rows,
        "passed": result.passed,
    })


def dumps(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def write_details(path: Path, rows) -> None:
    header = []
    for r in rows:
        for k in r:
            if k not in header:
                header.append(k)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(_plain(r))


def run_suite(config: dict, seed: int = None, out: str = None) -> tuple[int, Path]:
    """Run a validated config; returns (exit status, output directory)."""
    seed = int(config.get("seed", 0) if seed is None else seed)
    out_dir = Path(out or config.get("output_dir") or "geoporous-out")
    error = None
    try:
        result = run(config["suite"], config.get("parameters", {}), seed)
    except GeoporousError as exc:
        result = SuiteResult(config["suite"], config.get("parameters", {}), {"error": str(exc)},
                             certificates={type(exc).__name__: False})
        error = exc
    payload = report_payload(result, seed)
    payload["generated_at"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(dumps(payload))
    write_details(out_dir / "details.csv", result.rows)
    if not result.passed:
        raise CertificateFailed(", ".join(result.failed), str(error) if error else "certificate check failed")
    return 0, out_dir


def show_certificate(path) -> str:
    path = Path(path)
    if path.is_dir():
        path = path / "report.json"
    if not path.is_file():
        raise FileNotFoundError(f"no report at {path}")
    rep = json.loads(path.read_text())
    lines = [f"suite {rep['suite']}  seed {rep['seed']}  generated {rep.get('generated_at', '?')}",
             f"overall: {'PASS' if rep['passed'] else 'FAIL'}", "", "constants:"]
    for key, val in sorted(rep.get("results", {}).items()):
        if isinstance(val, dict):
            for k2, v2 in sorted(val.items()):
                if not isinstance(v2, (dict, list)):
                    lines.append(f"  {key}.{k2} = {v2}")
        elif not isinstance(val, list):
            lines.append(f"  {key} = {val}")
    lines += ["", "certificates:"]
    width = max((len(k) for k in rep["certificates"]), default=0)
    for name, ok in sorted(rep["certificates"].items()):
        lines.append(f"  {name.ljust(width)}  {'PASS' if ok else 'FAIL'}")
    for row in rep.get("failed_rows", []):
        idx = row.get("trial", row.get("index", row.get("source", "?")))
        label = row.get("witness", row.get("check", "row"))
        lines.append(f"  FAIL {label} trial {idx}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geoporous", description="Porosity certificates for nonexpansive mappings.")
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a suite from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    s = sub.add_parser("show", help="summarise a report.json")
    s.add_argument("report")
    sub.add_parser("suites", help="list available suites")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "suites":
        for name in sorted(SUITES):
            print(f"{name:12s} {DESCRIPTIONS[name]}")
        return 0
    if args.command == "show":
        try:
            print(show_certificate(args.report))
        except FileNotFoundError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        return 0
    try:
        config = load_config(args.config)
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigInvalid("seed must fit in 64 bits")
        _, out_dir = run_suite(config, args.seed, args.out)
    except ConfigInvalid as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    except CertificateFailed as exc:
        print(f"certificate failed: {exc}", file=sys.stderr)
        return 1
    print(f"all certificates passed; report in {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
