"""Command-line entry point: ``streamsamp <command> [options]``.

Exit codes: 0 success, 1 verification failure, 2 input error.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import sys
from typing import IO, Iterator, Optional, Sequence

import numpy as np

from . import deville, ids, joint, oracle
from .core import Frame, NumericDriftError, SamplingError, UnitRecord, build_window_layout
from .estimators import ht_estimate
from .frameio import RecordError, iter_records, iter_sizes, read_frame, write_frame_csv

log = logging.getLogger("streamsamp")

SEED_ENV = "STREAMSAMP_SEED"
EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2

EXACT_FIRST_ORDER_TOL = 1e-12
EXACT_TABLE_TOL = 1e-10
ROW_IDENTITY_TOL = 1e-9


class InputError(Exception):
    pass


def normalize_sizes(x: Sequence[float], target_n: int) -> np.ndarray:
    """Inclusion probabilities proportional to ``x`` summing to ``target_n``.

    Values that would exceed 1 are capped and the remaining mass is spread
    over the other units until nothing exceeds 1.
    """
    x = np.asarray(x, dtype=float)
    N = len(x)
    if target_n > N:
        raise SamplingError(f"target n = {target_n} exceeds population size {N}")
    if target_n < 0:
        raise SamplingError("target n must be nonnegative")
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise SamplingError("size variable must be positive")
    pi = np.zeros(N)
    capped = np.zeros(N, dtype=bool)
    while True:
        free = ~capped
        rest = target_n - capped.sum()
        pi[free] = rest * x[free] / x[free].sum() if free.any() else 0.0
        over = free & (pi >= 1.0)
        if not over.any():
            break
        capped |= over
        pi[capped] = 1.0
    return pi


def _resolve_seed(args) -> int:
    seed = args.seed
    if seed is None:
        env = os.environ.get(SEED_ENV)
        if env is None:
            raise InputError(f"--seed is required (or set {SEED_ENV})")
        log.warning("no --seed given; using %s=%s", SEED_ENV, env)
        seed = env
    try:
        value = int(seed)
    except (TypeError, ValueError):
        raise InputError(f"seed must be an integer, got {seed!r}") from None
    if not 0 <= value < 2**64:
        raise InputError("seed must be a 64-bit unsigned integer")
    return value


@contextlib.contextmanager
def _open_in(path: Optional[str]) -> Iterator[IO[str]]:
    if path in (None, "-"):
        yield sys.stdin
    else:
        try:
            fh = open(path, newline="", encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc.strerror}") from None
        with fh:
            yield fh


@contextlib.contextmanager
def _open_out(path: Optional[str]) -> Iterator[IO[str]]:
    if path in (None, "-"):
        yield sys.stdout
        sys.stdout.flush()
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


def _load_frame(args) -> Frame:
    with _open_in(args.input) as fh:
        return read_frame(fh, args.format)


def _dump(obj, out: IO[str]) -> None:
    out.write(json.dumps(obj, sort_keys=True) + "\n")


def cmd_sample(args) -> int:
    seed = _resolve_seed(args)
    mode = ids.EmitMode.SELECTED if args.selected_only else ids.EmitMode.DECISIONS
    with _open_out(args.output) as out:
        if args.algorithm == "ids":
            with _open_in(args.input) as fh:
                records = iter_records(fh, args.format)
                for d in ids.run_stream(records, seed, mode):
                    out.write(json.dumps(d.as_record()) + "\n")
                    out.flush()
            return EXIT_OK
        frame = _load_frame(args)
        chosen = deville.deville_sample(frame, seed, phantom=args.phantom)
        layout = build_window_layout(frame)
        for k, u in enumerate(frame.units):
            selected = u.id in chosen
            if mode is ids.EmitMode.SELECTED and not selected:
                continue
            rec = {
                "id": u.id,
                "selected": selected,
                "threshold": None,
                "window": layout.unit_window[k],
                "cross_border": layout.cross_border[k],
            }
            out.write(json.dumps(rec) + "\n")
    return EXIT_OK


def cmd_normalize(args) -> int:
    if args.target_n is None:
        raise InputError("--target-n is required")
    with _open_in(args.input) as fh:
        rows = list(iter_sizes(fh, args.format))
    pi = normalize_sizes([x for _, x, _ in rows], args.target_n)
    frame = Frame(tuple(UnitRecord(uid, p, y) for (uid, _, y), p in zip(rows, pi)))
    with _open_out(args.output) as out:
        if args.format == "csv":
            write_frame_csv(frame, out)
        else:
            for u in frame.units:
                rec = {"id": u.id, "pi": u.pi}
                if u.y is not None:
                    rec["y"] = u.y
                out.write(json.dumps(rec) + "\n")
    return EXIT_OK


def _design(frame: Frame, args, algorithm: str) -> oracle.DesignTable:
    phantom = frame.sample_size is None
    if args.exact:
        if algorithm == "ids":
            return oracle.enumerate_ids_design(frame)
        return oracle.enumerate_deville_design(frame, phantom=phantom)
    if not args.replications:
        raise InputError("Monte Carlo mode needs --replications (or pass --exact)")
    seed = _resolve_seed(args)
    return oracle.monte_carlo_design(frame, algorithm, args.replications, seed, phantom=phantom)


def cmd_design(args) -> int:
    frame = _load_frame(args)
    table = _design(frame, args, args.algorithm)
    with _open_out(args.output) as out:
        out.write(table.to_json() + "\n")
    return EXIT_OK


def cmd_joint(args) -> int:
    frame = _load_frame(args)
    matrix = joint.joint_matrix(frame)
    with _open_out(args.output) as out:
        out.write(matrix.to_csv())
    return EXIT_OK


def cmd_estimate(args) -> int:
    frame = _load_frame(args)
    if args.decisions:
        selected = []
        with _open_in(args.decisions) as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    raise RecordError(line_no, "invalid JSON in decisions") from None
                if rec.get("selected"):
                    selected.append(str(rec["id"]))
    else:
        seed = _resolve_seed(args)
        if args.algorithm == "ids":
            selected = ids.sample_ids(frame, seed)
        else:
            selected = sorted(deville.deville_sample(frame, seed, phantom=args.phantom))
    report = ht_estimate(selected, frame)
    with _open_out(args.output) as out:
        _dump(report.as_dict(), out)
    return EXIT_OK


def verification_report(frame: Frame, exact: bool, replications: int = 0, seed: int = 0) -> dict:
    """Run every design check on ``frame``; returns a JSON-ready report."""
    phantom = frame.sample_size is None
    checks: dict[str, dict] = {}
    matrix = joint.joint_matrix(frame)
    if exact:
        t_ids = oracle.enumerate_ids_design(frame)
        t_dev = oracle.enumerate_deville_design(frame, phantom=phantom)
        t_four = oracle.enumerate_ids_design(frame, rule="four_case")
        checks["first_order_ids"] = oracle.check_first_order(t_ids, frame, EXACT_FIRST_ORDER_TOL).as_dict()
        checks["first_order_deville"] = oracle.check_first_order(t_dev, frame, EXACT_FIRST_ORDER_TOL).as_dict()
        checks["joint"] = oracle.check_joint(t_ids, matrix.values, frame.ids, EXACT_TABLE_TOL).as_dict()
        checks["ids_vs_deville"] = oracle.compare_tables(t_ids, t_dev, EXACT_TABLE_TOL).as_dict()
        checks["single_vs_four_case"] = oracle.compare_tables(t_ids, t_four, 0.0).as_dict()
        bad = oracle.window_violations(frame)
        checks["window_conservation"] = {"violations": len(bad), "passed": not bad}
        checks["table_sums"] = {
            "ids": t_ids.total,
            "deville": t_dev.total,
            "passed": abs(t_ids.total - 1) <= EXACT_TABLE_TOL and abs(t_dev.total - 1) <= EXACT_TABLE_TOL,
        }
    else:
        t_ids = oracle.monte_carlo_design(frame, "ids", replications, seed, phantom)
        t_dev = oracle.monte_carlo_design(frame, "deville", replications, (seed + 1) % 2**64, phantom)
        checks["first_order_ids"] = oracle.check_first_order(t_ids, frame).as_dict()
        checks["first_order_deville"] = oracle.check_first_order(t_dev, frame).as_dict()
        checks["joint"] = oracle.check_joint(t_ids, matrix.values, frame.ids).as_dict()
        checks["ids_vs_deville"] = oracle.compare_tables(t_ids, t_dev).as_dict()
    if frame.sample_size is not None:
        gap = joint.row_identity_gap(matrix, frame)
        checks["row_identity"] = {"max_deviation": gap, "tolerance": ROW_IDENTITY_TOL, "passed": gap <= ROW_IDENTITY_TOL}
    return {
        "mode": "exact" if exact else "monte_carlo",
        "replications": 0 if exact else replications,
        "n_units": len(frame),
        "total": frame.total,
        "checks": checks,
        "passed": all(c["passed"] for c in checks.values()),
    }


def cmd_verify(args) -> int:
    frame = _load_frame(args)
    if args.exact:
        report = verification_report(frame, exact=True)
    else:
        if not args.replications:
            raise InputError("Monte Carlo mode needs --replications (or pass --exact)")
        report = verification_report(frame, False, args.replications, _resolve_seed(args))
    with _open_out(args.output) as out:
        _dump(report, out)
    return EXIT_OK if report["passed"] else EXIT_FAILED


COMMANDS = {
    "sample": cmd_sample,
    "verify": cmd_verify,
    "design": cmd_design,
    "joint": cmd_joint,
    "estimate": cmd_estimate,
    "normalize": cmd_normalize,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="streamsamp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--input", "-i", help="input path (default: stdin)")
        p.add_argument("--format", "-f", choices=("csv", "jsonl"), default="csv")
        p.add_argument("--output", "-o", help="output path (default: stdout)")
        p.add_argument("--seed", help="64-bit unsigned seed")
        p.add_argument("--algorithm", "-a", choices=("ids", "deville"), default="ids")
        p.add_argument("--replications", "-r", type=int, default=0)
        p.add_argument("--target-n", type=int)
        p.add_argument("--exact", action="store_true", help="exact enumeration instead of Monte Carlo")
        p.add_argument("--phantom", action="store_true", help="complete a non-integer total (deville)")
        p.add_argument("--selected-only", action="store_true", help="emit selected units only")
        p.add_argument("--decisions", help="decisions JSONL for estimate")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InputError, SamplingError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except NumericDriftError as exc:
        log.error("numeric drift: %s", exc)
        return EXIT_INPUT
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
