"""Command-line front end.

Exit codes: 0 success, 1 audit bound violation, 2 invalid geometry or numeric
domain error, 3 usage or parse error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from datetime import datetime, timezone
from typing import Any, Sequence

from . import __version__, analytic, studies
from .documents import DocumentError, load_pair
from .geometry import DomainError, GeometryError

EXIT_OK, EXIT_VIOLATION, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2, 3
DEFAULT_SEED = 0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals or not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError(f"expected finite comma-separated numbers, got {text!r}")
    return vals


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return vals


def _samples(text: str) -> int:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a sample count, got {text!r}")
    if not v.is_integer() or v < 2:
        raise argparse.ArgumentTypeError(f"sample count must be an integer >= 2, got {text!r}")
    return int(v)


def _confirm_samples(text: str) -> int:
    return 0 if text.strip() == "0" else _samples(text)


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (default: standard output)")
    common.add_argument("--format", choices=("json", "csv"), help="output format")
    common.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    mc = argparse.ArgumentParser(add_help=False)
    mc.add_argument("--seed", type=int, default=DEFAULT_SEED, help="random seed (default 0)")
    mc.add_argument("--workers", type=_positive_int, default=1, help="Monte Carlo worker threads")

    p = _Parser(prog="gravform", description="Tidal form factors of equal-volume body pairs.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("eval", parents=[common, mc], help="form factor of one geometry document")
    e.add_argument("--pair", required=True, help="geometry document (JSON)")
    e.add_argument("--method", choices=("auto", "analytic", "mc"), default="auto")
    e.add_argument("--samples", type=_samples, default=1_000_000)

    c = sub.add_parser("comb", parents=[common], help="comb convergence table")
    c.add_argument("--H", type=float, default=studies.DEFAULT_COMB_H, help="slab thickness")
    c.add_argument("--h", type=_float_list, default=list(studies.DEFAULT_COMB_h), help="gap widths")
    c.add_argument("--N", type=_int_list, default=list(studies.DEFAULT_COMB_N), help="tooth counts")

    s = sub.add_parser("slab-limit", parents=[common], help="thin-slab ratio scan")
    s.add_argument("--H-list", type=_float_list, default=list(studies.DEFAULT_SLAB_H))

    lat = sub.add_parser("lattice", parents=[common], help="lattice toy-model sum")
    lat.add_argument("--cutoff", type=_positive_int, default=2000)

    sc = sub.add_parser("sphere-curve", parents=[common], help="equal-sphere form factor against d/R")
    sc.add_argument("--ratios", type=_float_list, default=list(studies.DEFAULT_SPHERE_RATIOS))

    cy = sub.add_parser("cylinder-sweep", parents=[common, mc], help="coaxial cylinder sweep")
    cy.add_argument("--grid", help='JSON file or inline object {"radius": [...], "height": [...], "gap": [...]}; '
                                   "gap is in units of the height")
    cy.add_argument("--samples", type=_samples, default=studies.DEFAULT_CYL_SAMPLES)
    cy.add_argument("--confirm-samples", type=_confirm_samples, default=None,
                    help="samples for re-estimating the best grid point (default 10x --samples, 0 disables)")

    a = sub.add_parser("audit", parents=[common, mc], help="check the 2*pi bound over a corpus")
    a.add_argument("--corpus", help="JSON corpus file (default: built-in corpus)")
    a.add_argument("--samples", type=_samples, default=1_000_000)
    return p


def _read_json(source: str, what: str) -> Any:
    text = source if source.lstrip().startswith(("{", "[")) else None
    if text is None:
        try:
            with open(source, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read {what} {source!r}: {exc.strerror}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{what}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _grid(source: str | None) -> dict[str, list[float]]:
    grid = {"radius": list(studies.DEFAULT_CYL_RADII), "height": list(studies.DEFAULT_CYL_HEIGHTS),
            "gap": list(studies.DEFAULT_CYL_GAPS)}
    if source is None:
        return grid
    obj = _read_json(source, "grid")
    if not isinstance(obj, dict):
        raise DocumentError("grid: expected an object")
    for key, vals in obj.items():
        if key not in grid:
            raise DocumentError(f"grid.{key}: unknown field (expected radius, height, gap)")
        if (not isinstance(vals, list) or not vals
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0 for v in vals)):
            raise DocumentError(f"grid.{key}: expected a non-empty list of positive numbers")
        grid[key] = [float(v) for v in vals]
    return grid


def _corpus(source: str | None) -> list[tuple[str, Any]]:
    if source is None:
        return studies.default_corpus()
    obj = _read_json(source, "corpus")
    if isinstance(obj, dict):
        return list(obj.items())
    if isinstance(obj, list):
        out = []
        for i, item in enumerate(obj):
            if isinstance(item, dict) and "pair" in item:
                out.append((str(item.get("name", f"entry {i}")), item["pair"]))
            else:
                out.append((f"entry {i}", item))
        return out
    raise DocumentError("corpus: expected a list of documents or an object of named documents")


# -- writers ---------------------------------------------------------------------

def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def write_csv(records: list[dict]) -> str:
    columns: list[str] = []
    for r in records:
        columns.extend(k for k in r if k not in columns)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in records:
        w.writerow([_fmt(r.get(k)) for k in columns])
    return buf.getvalue()


def write_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _provenance(args) -> dict:
    prov = {"version": __version__}
    if not args.no_timestamp:
        prov["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return prov


def _row_record(row: studies.StudyRow) -> dict:
    rec: dict[str, Any] = dict(row.params)
    rec["lambda"] = row.lambda_
    rec["std_error"] = row.std_error
    rec.update(row.extra)
    rec.update(method=row.method, seed=row.seed, samples=row.samples)
    return rec


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_rows(args, rows: list[dict], default_format: str = "csv", **summary) -> None:
    prov = _provenance(args)
    records = [{**r, **prov} for r in rows]
    if (args.format or default_format) == "csv":
        _emit(args, write_csv(records))
    else:
        _emit(args, write_json({**summary, "rows": [dict(r) for r in rows], **prov}))


# -- commands --------------------------------------------------------------------

def _cmd_eval(args) -> int:
    pair = load_pair(args.pair)
    ev = studies.evaluate_pair(pair, args.method, args.samples, args.seed)
    rec = {"lambda": ev.lambda_, "std_error": ev.std_error, "method": ev.method, "seed": ev.seed,
           "samples": ev.samples, "direction": list(ev.direction), "volume": ev.volume}
    rec.update(_provenance(args))
    if (args.format or "json") == "csv":
        flat = dict(rec, direction=" ".join(_fmt(c) for c in ev.direction))
        _emit(args, write_csv([flat]))
    else:
        _emit(args, write_json(rec))
    return EXIT_OK


def _cmd_comb(args) -> int:
    rows = studies.comb_convergence(args.H, args.h, args.N)
    _emit_rows(args, [_row_record(r) for r in rows])
    return EXIT_OK


def _cmd_slab(args) -> int:
    _emit_rows(args, [_row_record(r) for r in studies.slab_limit_scan(args.H_list)])
    return EXIT_OK


def _cmd_lattice(args) -> int:
    total = analytic.lattice_sum(args.cutoff)
    rec = {"cutoff": args.cutoff, "sum": total, "toy_lambda": total * math.pi / 6.0,
           "method": "lattice_sum", "seed": None, "samples": None}
    rec.update(_provenance(args))
    _emit(args, write_csv([rec]) if args.format == "csv" else write_json(rec))
    return EXIT_OK


def _cmd_sphere(args) -> int:
    _emit_rows(args, [_row_record(r) for r in studies.sphere_curve(args.ratios)])
    return EXIT_OK


def _cmd_cylinder(args) -> int:
    g = _grid(args.grid)
    best, rows = studies.cylinder_sweep(g["radius"], g["height"], g["gap"], args.samples, args.seed,
                                        args.confirm_samples)
    records = [dict(_row_record(r), is_best=int(r.params == best.params)) for r in rows]
    _emit_rows(args, records, best=_row_record(best), sweep_seed=args.seed)
    print(f"best lambda {best.lambda_:.6g} +/- {best.std_error:.2g} at "
          + ", ".join(f"{k}={v:.6g}" for k, v in best.params.items()), file=sys.stderr)
    return EXIT_OK


def _cmd_audit(args) -> int:
    report = studies.bound_audit(_corpus(args.corpus), args.samples, args.seed)
    entries = [{"name": e.name, "status": e.status, "lambda": e.lambda_, "std_error": e.std_error,
                "tolerance": e.tolerance, "method": e.method, "seed": args.seed if e.method == "montecarlo" else None,
                "samples": args.samples if e.method == "montecarlo" else None, "message": e.message}
               for e in report.entries]
    summary = {"passed": report.passed, "bound": report.bound, "max_lambda": report.max_lambda,
               "argmax": report.argmax, "violations": len(report.violations), "invalid": len(report.invalid)}
    if args.format == "csv":
        _emit_rows(args, entries)
    else:
        _emit(args, write_json({**summary, "entries": entries, **_provenance(args)}))
    verdict = "PASS" if report.passed else "FAIL"
    max_txt = "n/a" if report.max_lambda is None else f"{report.max_lambda:.10g} ({report.argmax})"
    print(f"audit {verdict}: {len(entries)} entries, {len(report.violations)} violations, "
          f"{len(report.invalid)} invalid, max lambda {max_txt}, bound 2*pi = {report.bound:.10g}",
          file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_VIOLATION


COMMANDS = {"eval": _cmd_eval, "comb": _cmd_comb, "slab-limit": _cmd_slab, "lattice": _cmd_lattice,
            "sphere-curve": _cmd_sphere, "cylinder-sweep": _cmd_cylinder, "audit": _cmd_audit}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    prog = f"gravform {args.command}"
    try:
        return COMMANDS[args.command](args)
    except (DocumentError, UsageError) as exc:
        print(f"{prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"{prog}: error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_USAGE
    except (GeometryError, DomainError) as exc:
        print(f"{prog}: invalid geometry or domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
