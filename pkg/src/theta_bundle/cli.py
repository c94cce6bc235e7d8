"""Command line driver: ``theta-bundle {theta|bundle|sections|embed|symplectic} verify``.

Settings are merged as defaults < ``--config`` file < flags given on the
command line.  Exit status is 0 when every asserted check passes, 1 when one
fails and 2 on a usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

from .suites import DEFAULT_TOLERANCES, SUITES, ConfigError, RunConfig, run_suite

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# flag dest -> RunConfig field
_FIELD_FLAGS = {
    "bundle": "bundle",
    "k": "k",
    "grid": "grid",
    "rank_points": "rank_points",
    "injectivity_grid": "injectivity_grid",
    "fd_step": "fd_step",
    "resolution": "resolution",
    "seed": "seed",
    "target_error": "target_abs_error",
    "max_terms": "max_terms",
    "format": "format",
    "tamper": "tamper",
}


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.strip().replace("i", "j").replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _parse_matrix(text: str):
    try:
        vals = [int(v) for v in text.replace(";", ",").split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"matrix entries must be integers: {text!r}") from None
    if len(vals) != 4:
        raise argparse.ArgumentTypeError("a 2x2 matrix needs four entries a,b,c,d")
    return [[vals[0], vals[1]], [vals[2], vals[3]]]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="theta-bundle",
        description="Verification suites for theta functions on T^2-bundles over T^2.",
        epilog="Tolerances: --tol.NAME VALUE for NAME in " + ", ".join(sorted(DEFAULT_TOLERANCES)),
    )
    parser.add_argument("suite", choices=sorted(SUITES), help="which suite to run")
    parser.add_argument("action", choices=["verify"], help="only 'verify' is available")
    S = argparse.SUPPRESS
    parser.add_argument("--bundle", default=S, help="type with parameter (C:1, B2, F:2,1,1,1), JSON object or JSON file")
    parser.add_argument("--A", dest="A", type=_parse_matrix, default=S, help="monodromy A as a,b,c,d (overrides --bundle)")
    parser.add_argument("--B", dest="B", type=_parse_matrix, default=S, help="monodromy B as a,b,c,d (default identity)")
    parser.add_argument("--k", type=int, default=S, help="degree of the section space (default 3)")
    parser.add_argument("--grid", type=int, default=S, help="points per axis of the verification grid (default 5)")
    parser.add_argument("--rank-points", type=int, default=S, help="random points for the rank check (default 100)")
    parser.add_argument("--injectivity-grid", type=int, default=S, help="points per axis of the injectivity scan (default 6)")
    parser.add_argument("--fd-step", type=float, default=S, help="finite-difference step (default 1e-5)")
    parser.add_argument("--resolution", type=int, default=S, help="quadrature nodes per axis for periods (default 200)")
    parser.add_argument("--seed", type=int, default=S, help="seed for random sample points (default 0)")
    parser.add_argument("--tau", type=_parse_complex, action="append", default=S,
                        help="period for the theta suite; repeat for several (Im tau >= 0.05)")
    parser.add_argument("--target-error", type=float, default=S, help="absolute tail bound for series (default 1e-15)")
    parser.add_argument("--max-terms", type=int, default=S, help="series length cap (default 4001)")
    parser.add_argument("--format", choices=["json", "csv"], default=S, help="report format (default json)")
    parser.add_argument("--tamper", action="store_true", default=S, help="run the suite's negative control")
    parser.add_argument("--config", type=Path, help="JSON file with RunConfig fields")
    parser.add_argument("--out", type=Path, help="write the report here instead of stdout")
    parser.add_argument("--timing", action="store_true", help="add wall time to the report (breaks byte equality)")
    return parser


def _split_tolerances(argv: list[str]) -> tuple[list[str], dict[str, float]]:
    """Pull --tol.NAME VALUE / --tol.NAME=VALUE out of argv."""
    rest, tols = [], {}
    i = 0
    while i < len(argv):
        arg = argv[i]
        if arg.startswith("--tol."):
            name, eq, value = arg[len("--tol."):].partition("=")
            if not eq:
                if i + 1 >= len(argv):
                    raise ConfigError(f"{arg} needs a value")
                value = argv[i + 1]
                i += 1
            if name not in DEFAULT_TOLERANCES:
                raise ConfigError(f"unknown tolerance {name!r}")
            try:
                tols[name] = float(value)
            except ValueError:
                raise ConfigError(f"tolerance {name} is not a number: {value!r}") from None
        else:
            rest.append(arg)
        i += 1
    return rest, tols


def _apply(cfg: RunConfig, values: dict, tols: dict) -> None:
    for key, val in values.items():
        if key == "tolerances":
            tols = {**val, **tols}
            continue
        if key == "taus":
            cfg.taus = [_parse_complex(v) if isinstance(v, str) else complex(*v) if isinstance(v, list) else complex(v)
                        for v in val]
            continue
        if not hasattr(cfg, key):
            raise ConfigError(f"unknown config field {key!r}")
        setattr(cfg, key, val)
    for name, v in tols.items():
        if name not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance {name!r}")
        cfg.tolerances[name] = float(v)


def _bundle_from_matrices(values: dict):
    A = values.pop("A", None)
    B = values.pop("B", None)
    if A is None and B is None:
        return None
    if A is None:
        raise ConfigError("--B needs --A")
    return {"A": A, "B": B if B is not None else [[1, 0], [0, 1]]}


def make_config(args: argparse.Namespace, flag_tols: dict) -> RunConfig:
    cfg = RunConfig()
    if args.config is not None:
        try:
            file_values = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(file_values, dict):
            raise ConfigError("config file must hold a JSON object")
        mats = _bundle_from_matrices(file_values)
        if mats is not None:
            file_values["bundle"] = mats
        _apply(cfg, file_values, {})
    given = vars(args)
    flags = {field: given[dest] for dest, field in _FIELD_FLAGS.items() if dest in given}
    if "tau" in given:
        flags["taus"] = given["tau"]
    mats = _bundle_from_matrices({k: given[k] for k in ("A", "B") if k in given})
    if mats is not None:
        flags["bundle"] = mats
    _apply(cfg, flags, flag_tols)
    if isinstance(cfg.bundle, dict):
        cfg.bundle = json.dumps(cfg.bundle, sort_keys=True)
    return cfg


def _flatten(obj, prefix="") -> list[tuple[str, object]]:
    if isinstance(obj, dict):
        out = []
        for k, v in obj.items():
            out += _flatten(v, f"{prefix}.{k}" if prefix else str(k))
        return out
    if isinstance(obj, list):
        if prefix.endswith("checks"):
            out = []
            for item in obj:
                out += _flatten(item, f"{prefix}.{item.get('name', len(out))}")
            return out
        return [(prefix, json.dumps(obj))]
    return [(prefix, obj)]


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["key", "value"])
    for key, value in _flatten(report):
        writer.writerow([key, "" if value is None else value])
    return buf.getvalue()


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        rest, flag_tols = _split_tolerances(argv)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"theta-bundle: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(rest)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    try:
        cfg = make_config(args, flag_tols)
        start = time.perf_counter()
        report = run_suite(args.suite, cfg)
        elapsed = time.perf_counter() - start
    except ConfigError as exc:
        print(f"theta-bundle: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = report.to_dict()
    if args.timing:
        out["wall_time_s"] = round(elapsed, 3)
    text = render(out, cfg.format)
    if args.out is not None:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    for line in _summary(report):
        print(line, file=sys.stderr)
    return EXIT_PASS if report.verdict == "pass" else EXIT_FAIL


def _summary(report) -> list[str]:
    lines = []
    for c in report.checks:
        mark = "PASS" if c.passed else "FAIL"
        if not c.asserted:
            mark = "info"
        val = "n/a" if c.value is None else f"{c.value:.3e}"
        tol = "" if c.tolerance is None else f" {c.comparison} {c.tolerance:.1e}"
        lines.append(f"[{mark}] {c.name}: {val}{tol}")
    lines.append(f"verdict: {report.verdict}")
    return lines


if __name__ == "__main__":
    raise SystemExit(main())
