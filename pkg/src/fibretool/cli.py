"""Command-line front end.

Every command prints one JSON envelope on stdout.  Exit codes: 0 success,
1 usage or configuration error (message on stderr), 2 when the result fails
validation or cannot be computed (the envelope is still printed).
"""
from __future__ import annotations

import argparse
import copy
import json
import sys
import time
from pathlib import Path
from typing import List, Optional

from . import __version__, canonical
from .blf_builder import EllipticSurfaceSpec, LayoutOptions, build_blf, emit_json, emit_svg, validate_blf
from .errors import ConfigParse, FibreToolError
from .fiber_tracer import fiber_stats, trace_fiber
from .grid import GridSpec
from .handle_complex import (
    ValidationReport, build_exceptional_p1, build_multiple_fiber, movie_slices, validate_complex,
)
from .model_maps import DEFAULT_RANK_TOL, MapId, induced_homology, scan_singularities, worker_count
from .surgery_algebra import (
    SurgeryData, det3, direction_normalizer, gluing_matrix, is_integral, matvec, surgery_class,
)

SCHEMA_ID = "fibretool.envelope/1"
DEFAULT_CONFIG_NAME = "fibretool.json"

DEFAULTS = {
    "grid": {
        "multiple_fiber": [16, 16, 16, 16],
        "seifert": [64, 64, 64],
        "fold_chart": [32, 32, 32],
    },
    "fiber_grid": {
        "multiple_fiber": [32, 32, 24, 24],
        "seifert": [64, 64, 64],
        "fold_chart": [32, 32, 32],
    },
    "tolerance": DEFAULT_RANK_TOL,
    "delta": None,
    "threads": None,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def envelope_schema() -> dict:
    """The published JSON schema for command envelopes."""
    return json.loads((Path(__file__).parent / "schema" / "envelope.schema.json").read_text(encoding="utf-8"))


def load_config(path=None, *, explicit: bool = False) -> dict:
    """Built-in defaults overridden by a JSON config file.

    Without an explicit path, ``fibretool.json`` in the working directory is
    used when present.
    """
    cfg = copy.deepcopy(DEFAULTS)
    if path is None:
        path = Path(DEFAULT_CONFIG_NAME)
        if not path.exists():
            return cfg
    path = Path(path)
    if not path.exists():
        if explicit:
            raise ConfigParse(path, "config file not found")
        return cfg
    text = path.read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParse(path, exc.msg, exc.lineno) from None
    if not isinstance(raw, dict):
        raise ConfigParse(path, "top level must be an object", 1)
    for key, value in raw.items():
        if key not in cfg:
            raise ConfigParse(path, f"unknown key {key!r}", _line_of(text, key))
        if key in ("grid", "fiber_grid"):
            if not isinstance(value, dict) or any(k not in cfg[key] for k in value):
                raise ConfigParse(path, f"{key} must map {sorted(cfg[key])} to resolutions",
                                  _line_of(text, key))
            for k, res in value.items():
                if not (isinstance(res, list) and all(isinstance(r, int) for r in res)):
                    raise ConfigParse(path, f"{key}.{k} must be a list of integers", _line_of(text, k))
                cfg[key][k] = res
        elif key in ("tolerance", "delta"):
            if value is not None and (isinstance(value, bool) or not isinstance(value, (int, float)) or value <= 0):
                raise ConfigParse(path, f"{key} must be a positive number", _line_of(text, key))
            cfg[key] = None if value is None else float(value)
        elif key == "threads":
            if value is not None and (isinstance(value, bool) or not isinstance(value, int) or value < 1):
                raise ConfigParse(path, "threads must be a positive integer", _line_of(text, key))
            cfg[key] = value
    return cfg


def _line_of(text: str, key: str) -> Optional[int]:
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None


def _ints(text: str) -> List[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _floats(text: str) -> List[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _signs(text: str) -> List[int]:
    out = []
    for ch in text.replace(",", ""):
        if ch == "+":
            out.append(1)
        elif ch == "-":
            out.append(-1)
        else:
            raise argparse.ArgumentTypeError(f"signs are written like '+-' or '++-', got {text!r}")
    if not out:
        raise argparse.ArgumentTypeError("at least one sign is required")
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fibretool", description="Torus-surgery fibrations: algebra, models, round handles, BLFs.")
    parser.add_argument("--version", action="version", version=f"fibretool {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config with grid/tolerance defaults")
    common.add_argument("--threads", type=int, help="worker threads for grid scans (capped by FIBRETOOL_THREADS)")
    common.add_argument("--timing", action="store_true", help="add wall_time to the envelope")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("surgery", parents=[common], help="gluing matrix and surgery class")
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--alpha", type=_ints, default=[0, 1], help="direction as 'a,b' (default 0,1)")

    def map_args(sp):
        sp.add_argument("--map", required=True, choices=["multiple-fiber", "seifert", "fold-chart"])
        sp.add_argument("--p", type=int)
        sp.add_argument("--q", type=int, help="seifert q, or surgery q used to solve k (default 1)")
        sp.add_argument("--k", type=int, help="multiple-fiber exponent (default: solved from p, q)")
        sp.add_argument("--signs", type=_signs, help="fold chart signs such as '+-'")
        sp.add_argument("--grid", type=_ints, help="resolutions, comma-separated")

    s = sub.add_parser("scan", parents=[common], help="classify the singular set of a model map")
    map_args(s)
    s.add_argument("--tolerance", type=float)
    s.add_argument("--no-samples", action="store_true", help="omit the per-cell singular samples")

    s = sub.add_parser("fiber", parents=[common], help="trace one fiber and count its components")
    map_args(s)
    s.add_argument("--target", type=_floats, required=True, help="target value 're,im' (fold chart: 't,v')")
    s.add_argument("--delta", type=float, help="value thickness (default: automatic)")
    s.add_argument("--csv", help="write component cell centers to this CSV file")
    s.add_argument("--allow-singular", action="store_true")

    s = sub.add_parser("construct", parents=[common], help="round-handle complex for a multiple/exceptional fiber")
    s.add_argument("--kind", required=True, choices=["exceptional", "multiple-fiber"])
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--phi", type=float, help="also list the movie charts in the frame at this angle")

    s = sub.add_parser("blf", parents=[common], help="BLF critical image on E(n)_{p,q}")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--lefschetz", type=int, help="number of Lefschetz points (default 12n)")
    s.add_argument("--svg", help="write the SVG drawing here")
    s.add_argument("--json", help="write the canonical diagram JSON here")
    return parser


def _map_from_args(args) -> MapId:
    if args.map == "fold-chart":
        if not args.signs:
            raise UsageError("fold-chart needs --signs")
        return MapId.fold_chart(args.signs)
    if args.p is None:
        raise UsageError(f"{args.map} needs --p")
    if args.map == "seifert":
        return MapId.seifert(args.p, 1 if args.q is None else args.q)
    k = args.k
    if k is None:
        k = SurgeryData(args.p, 1 if args.q is None else args.q).k
    return MapId.multiple_fiber(args.p, k)


def _grid_for(map_id: MapId, res, delta=None) -> GridSpec:
    if map_id.kind == "fold_chart":
        if len(res) != map_id.dim:
            raise UsageError(f"fold chart with {len(map_id.params)} signs needs {map_id.dim} resolutions")
        return GridSpec(tuple(res), "box", delta=delta)
    return GridSpec(tuple(res), map_id.domain, delta=delta)


def _cmd_surgery(args, cfg):
    if len(args.alpha) != 2:
        raise UsageError("--alpha takes two integers")
    data = SurgeryData(args.p, args.q, tuple(args.alpha))
    G = gluing_matrix(data)
    gamma = surgery_class(data)
    M = direction_normalizer(data.alpha)
    normalized = (matvec(M, gamma.coeffs[:2]) + (gamma.c,))
    rep = ValidationReport()
    det = det3(G)
    rep.add("determinant", det == 1 if data.p >= 1 else abs(det) == 1, f"det = {det}")
    rep.add("gamma_primitive", gamma.is_primitive(), f"gamma = {gamma.coeffs}")
    rep.add("meridian_image", matvec(G, (0, 0, 1)) == (0, data.q, data.p) == normalized,
            "matrix column, normalized gamma and (0, q, p) disagree")
    rep.add("normalizer", matvec(M, data.alpha) == (0, 1), f"M alpha = {matvec(M, data.alpha)}")
    if data.p >= 1:
        rep.add("winding_matrix", induced_homology(data) == G,
                "winding numbers of the multiplicative gluing differ from the matrix")
    result = {
        "data": data.to_dict(),
        "k": data.k,
        "matrix": [list(r) for r in G],
        "determinant": det,
        "gamma": list(gamma.coeffs),
        "gamma_normalized": list(normalized),
        "normalizer": [list(r) for r in M],
        "integral": is_integral(data),
    }
    echo = {"p": args.p, "q": args.q, "alpha": list(args.alpha)}
    return echo, result, rep


def _cmd_scan(args, cfg):
    map_id = _map_from_args(args)
    res = args.grid or cfg["grid"][map_id.kind]
    tol = args.tolerance if args.tolerance is not None else cfg["tolerance"]
    grid = _grid_for(map_id, res)
    report = scan_singularities(map_id, grid, tol, workers=worker_count(args.threads or cfg["threads"]))
    result = report.to_dict()
    if args.no_samples:
        result.pop("samples")
    rep = ValidationReport()
    rank = report.rank
    lab = report.labels
    consistent = bool(((lab == "regular") == (rank == 2)).all() and ((lab == "degenerate_rank0") == (rank == 0)).all())
    rep.add("labels_match_sigma", consistent, "a classification disagrees with its singular values")
    echo = {"map": map_id.to_dict(), "grid": list(res), "tolerance": tol}
    return echo, result, rep


def _cmd_fiber(args, cfg):
    map_id = _map_from_args(args)
    res = args.grid or cfg["fiber_grid"][map_id.kind]
    delta = args.delta if args.delta is not None else cfg["delta"]
    tol = cfg["tolerance"]
    if len(args.target) != 2:
        raise UsageError("--target takes two numbers")
    echo = {"map": map_id.to_dict(), "grid": list(res), "target": list(args.target),
            "delta": delta, "tolerance": tol}
    grid = _grid_for(map_id, res, delta)
    rep = ValidationReport()
    try:
        fiber = trace_fiber(map_id, tuple(args.target), grid, allow_singular=args.allow_singular, tol=tol)
        stats = fiber_stats(fiber)
    except FibreToolError as exc:
        rep.add(type(exc).__name__, False, str(exc))
        return echo, None, rep
    if args.csv:
        import io
        buf = io.StringIO()
        fiber.write_csv(buf)
        canonical.write_atomic(args.csv, buf.getvalue())
    result = dict(fiber.to_dict(), stats=stats.to_dict())
    rep.add("regular_target", not fiber.singular.any(), "fiber meets singular cells")
    return echo, result, rep


def _cmd_construct(args, cfg):
    builder = build_exceptional_p1 if args.kind == "exceptional" else build_multiple_fiber
    complex_ = builder(args.p)
    rep = validate_complex(complex_)
    result = complex_.to_dict()
    result["summary"] = {
        "fold_circle_count": complex_.fold_circle_count,
        "innermost_components": complex_.innermost.count,
        "euler": complex_.euler,
    }
    echo = {"kind": args.kind, "p": args.p}
    if args.phi is not None:
        echo["phi"] = args.phi
        if args.kind == "multiple-fiber" and args.p >= 2:
            result["movie"] = [c.to_dict() for c in movie_slices(args.p, args.phi)]
        else:
            result["movie"] = []
    return echo, result, rep


def _cmd_blf(args, cfg):
    spec = EllipticSurfaceSpec(args.n, args.p, args.q, args.lefschetz)
    d = build_blf(spec)
    rep = validate_blf(d, spec.lefschetz_count)
    if args.svg:
        canonical.write_atomic(args.svg, emit_svg(d, LayoutOptions()))
    if args.json:
        canonical.write_atomic(args.json, emit_json(d))
    echo = {"n": args.n, "p": args.p, "q": args.q, "lefschetz": spec.lefschetz_count,
            "svg": args.svg, "json": args.json}
    return echo, d.to_dict(), rep


COMMANDS = {
    "surgery": _cmd_surgery,
    "scan": _cmd_scan,
    "fiber": _cmd_fiber,
    "construct": _cmd_construct,
    "blf": _cmd_blf,
}


def run(argv: Optional[List[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    start = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args.config, explicit=args.config is not None)
        echo, result, rep = COMMANDS[args.command](args, cfg)
    except (UsageError, ConfigParse) as exc:
        print(f"error: {exc}", file=stderr)
        return 1
    except (ValueError, FibreToolError) as exc:
        print(f"error: {exc}", file=stderr)
        return 1
    envelope = {
        "schema": SCHEMA_ID,
        "tool": "fibretool",
        "version": __version__,
        "command": dict(echo, name=args.command),
        "result": result,
        "validation": rep.to_dict(),
    }
    if args.timing:
        envelope["wall_time"] = time.perf_counter() - start
    stdout.write(canonical.dumps(envelope))
    return 0 if rep.ok else 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
