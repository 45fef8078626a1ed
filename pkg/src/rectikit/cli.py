"""Batch front door: ``rectikit <subcommand> [flags]``.

Every run writes ``report.json`` (config echo, results, library version) into
``--out``; some subcommands add plot-ready CSV files.  Exit codes: 0 success,
2 domain error, 3 refused precondition, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .besipart import extract_partitions, verify_family
from .blowup import ClassifierParams, classify, default_ladder, profile_point
from .covering import greedy_separated_cover, overlap_counts, verify_T_properties
from .errors import DomainError, PreconditionError
from .generators import CorpusSpec
from .metric import MeasuredSpace, load_space, save_csv
from .quasipath import quasi_path

SCHEMA_VERSION = "1.0"
SUBCOMMANDS = ("generate", "cover", "quasipath", "besipart", "profile", "classify", "report")
EXIT_OK, EXIT_DOMAIN, EXIT_REFUSED, EXIT_USAGE = 0, 2, 3, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


@dataclass
class RunConfig:
    subcommand: str
    input: str | None = None
    corpus: dict | None = None
    params: dict = field(default_factory=dict)
    out: str = "."
    seed: int = 0


def _ladder_arg(text: str) -> tuple[float, float]:
    try:
        r0, lam = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("--ladder expects 'r0,lambda'") from None
    return r0, lam


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rectikit", description="Rectifiability diagnostics for finite metric measure spaces.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--input", help="CSV (x,y[,z...],w) or JSON {distance_matrix, weights}")
    p.add_argument("--kind", help="corpus kind when no --input is given")
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--m", type=int, default=400)
    p.add_argument("--L", type=float, default=0.5, help="slope bound for lipschitz_graph")
    p.add_argument("--delta", type=float, default=0.1667)
    p.add_argument("--R", type=float, default=2.0)
    p.add_argument("--rhat", type=float, help="cover radius (absolute length)")
    p.add_argument("--ladder", type=_ladder_arg, help="r0,lambda")
    p.add_argument("--a", type=int, help="quasipath start index")
    p.add_argument("--b", type=int, help="quasipath end index")
    p.add_argument("--x", type=int, help="profile basepoint (default: every support point)")
    p.add_argument("--seeds", help="comma-separated seed indices for besipart")
    p.add_argument("--eps", type=float, default=0.5, help="besipart cumulative-size slack")
    p.add_argument("--out", default=".")
    p.add_argument("--seed", type=int, default=0)
    return p


def _corpus(args) -> CorpusSpec:
    return CorpusSpec(kind=args.kind, m=args.m, depth=args.depth, L=args.L, seed=args.seed)


def _load(args) -> MeasuredSpace:
    if args.input:
        return load_space(args.input)
    if not args.kind:
        raise DomainError("give --input or --kind")
    return _corpus(args).build()


def _params(args, M: MeasuredSpace) -> ClassifierParams:
    r0, lam = args.ladder if args.ladder else (None, 0.5)
    return ClassifierParams(delta=args.delta, R=args.R, r0=r0, lam=lam)


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(header)
        out.writerows(rows)


def _cmd_generate(args, out: Path) -> dict:
    if not args.kind:
        raise DomainError("generate needs --kind")
    M = _corpus(args).build()
    save_csv(M, out / "points.csv")
    return {"n": M.n, "total_mass": M.total_mass, "csv": "points.csv"}


def _cover_results(M: MeasuredSpace, r: float) -> tuple[dict, object]:
    cover = greedy_separated_cover(M, r)
    C = M.ahlfors_constant(r / 4, 3 * r)
    rep = verify_T_properties(cover, M, C)
    res = {
        "r": r,
        "centers": list(cover.centers),
        "ahlfors_C": C,
        "ahlfors_window": [r / 4, 3 * r],
        "T1": rep.T1,
        "T2": rep.T2,
        "T2_margin": rep.T2_margin,
        "T3": rep.T3,
        "T3_margin": rep.T3_margin,
        "max_overlap": rep.max_overlap,
    }
    return res, cover


def _cmd_cover(args, out: Path) -> dict:
    M = _load(args)
    r = args.rhat if args.rhat else M.space.diameter(M.support) / 10
    res, cover = _cover_results(M, r)
    counts = overlap_counts(M, cover)
    _write_rows(out / "cover.csv", ["center", "overlap"], zip(cover.centers, counts.tolist()))
    return res


def _cmd_quasipath(args, out: Path) -> dict:
    M = _load(args)
    if args.a is None or args.b is None:
        raise DomainError("quasipath needs --a and --b")
    cert = quasi_path(M, args.a, args.b, args.delta, args.R)
    return {"certificate": json.loads(cert.to_json())}


def _cmd_besipart(args, out: Path) -> dict:
    M = _load(args)
    diam = M.space.diameter(M.support)
    delta = args.delta * diam
    bound = delta / (3 * (2 * args.R + 1))
    r_hat = args.rhat if args.rhat else bound
    seeds = None if not args.seeds else [int(s) for s in args.seeds.split(",")]
    fam = extract_partitions(M, seeds, delta, args.R, r_hat)
    rep = verify_family(fam, M, delta, args.R, args.eps)
    _write_rows(
        out / "partitions.csv",
        ["p1", "p2", "omega"],
        [(p.p1, p.p2, repr(p.omega)) for p in fam.partitions],
    )
    return {
        "delta_abs": delta,
        "r_hat": r_hat,
        "partitions": [{"p1": p.p1, "p2": p.p2, "omega": p.omega, "E1_size": len(p.E1), "E2_size": len(p.E2)} for p in fam.partitions],
        "P1": rep.P1,
        "P2": rep.P2,
        "sum_omega": rep.sum_omega,
        "ratio": rep.ratio,
        "threshold": rep.threshold,
        "diagnostic": fam.diagnostic,
        "trace": fam.trace,
    }


def _profile_rows(profiles):
    for prof in profiles:
        for rec in prof.records:
            yield [prof.x, repr(rec.r), rec.resolvable, rec.connected, rec.flatness]


def _cmd_profile(args, out: Path) -> dict:
    M = _load(args)
    params = _params(args, M)
    params.validate()
    ladder = default_ladder(M, params.r0, params.lam)
    points = [args.x] if args.x is not None else [int(v) for v in M.support]
    profiles = [profile_point(M, x, ladder, params) for x in points]
    _write_rows(out / "profile.csv", ["point", "scale", "resolvable", "connected", "flatness"], _profile_rows(profiles))
    return {
        "ladder": ladder,
        "profiles": [
            {"x": p.x, "scales": [{"r": rec.r, "resolvable": rec.resolvable, "connected": rec.connected, "flatness": rec.flatness} for rec in p.records]}
            for p in profiles
        ],
    }


def _classify_results(M: MeasuredSpace, params: ClassifierParams, out: Path):
    verdict = classify(M, params)
    verdict.write_csv(out / "profile.csv")
    return {"ladder": verdict.ladder, "labels": verdict.labels, "fractions": verdict.fractions}


def _cmd_classify(args, out: Path) -> dict:
    M = _load(args)
    return _classify_results(M, _params(args, M), out)


def _cmd_report(args, out: Path) -> dict:
    M = _load(args)
    diam = M.space.diameter(M.support)
    r = args.rhat if args.rhat else diam / 10
    cover, _ = _cover_results(M, r)
    cls = _classify_results(M, _params(args, M), out)
    return {
        "n": M.n,
        "support_size": int(M.support.size),
        "total_mass": M.total_mass,
        "diameter": diam,
        "cover": cover,
        "fractions": cls["fractions"],
        "ladder": cls["ladder"],
    }


COMMANDS = {
    "generate": _cmd_generate,
    "cover": _cmd_cover,
    "quasipath": _cmd_quasipath,
    "besipart": _cmd_besipart,
    "profile": _cmd_profile,
    "classify": _cmd_classify,
    "report": _cmd_report,
}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def render_report(config: RunConfig, results: dict, timestamp: str) -> str:
    report = {
        "schema_version": SCHEMA_VERSION,
        "library_version": __version__,
        "config": asdict(config),
        "results": results,
        "timestamp": timestamp,
    }
    return json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = RunConfig(
        subcommand=args.subcommand,
        input=args.input,
        corpus=None if args.input else asdict(_corpus(args)) if args.kind else None,
        params={k: v for k, v in vars(args).items() if k not in ("subcommand", "input", "out", "seed")},
        out=str(out),
        seed=args.seed,
    )
    try:
        results = COMMANDS[args.subcommand](args, out)
    except PreconditionError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    stamp = datetime.now(timezone.utc).isoformat()
    (out / "report.json").write_text(render_report(config, results, stamp))
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
