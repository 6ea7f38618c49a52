"""Command-line front end: solve, check, verify, sweep.

Exit codes (also in the README):

    0  success (solve converged / criterion PASS / residual within tolerance)
    1  configuration or input-file error
    2  iteration failure (Picard or impulse fixed point did not converge)
    3  existence criterion FAIL (conservative verdict)
    4  residual above the configured tolerance

All numeric output uses 17 significant digits so a written trajectory
round-trips through verify bit-faithfully.  Identical config files produce
byte-identical outputs; nothing here consults wall time or unseeded
randomness.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import dataclasses
import json
import logging
import os
import sys

import numpy as np

from .config import LoadedProblem, load_problem
from .errors import ConfigError, ContractionError, DomainError, IterationError
from .fracops import PiecewiseTrajectory, SampledFn
from .solver import mild_solve
from .verifier import integral_residual

log = logging.getLogger("hilfersolve")

_FMT = "%.17g"


def _weighted_norms(seg, origin, gamma):
    w = (seg.grid - origin) ** (1.0 - gamma)
    return w * np.linalg.norm(seg.values, axis=1)


def write_trajectory_csv(path, traj):
    """One row per grid point: segment,t,side,u_1..u_d,weighted_norm."""
    dim = traj.segments[0].values.shape[1]
    header = ["segment", "t", "side"]
    header += [f"u_{j + 1}" for j in range(dim)]
    header += ["weighted_norm"]
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(header)
        for i, seg in enumerate(traj.segments):
            origin = traj.origin(i)
            wn = _weighted_norms(seg, origin, traj.gamma)
            for j, t in enumerate(seg.grid):
                # a segment's final node sits on the partition breakpoint it
                # runs up to (its one-sided limit from the left); a first
                # node exactly on the origin is the limit from the right
                if j == seg.grid.size - 1:
                    side = "left"
                elif j == 0 and t == origin:
                    side = "right"
                else:
                    side = "interior"
                row = [str(i), _FMT % t, side]
                row += [_FMT % v for v in seg.values[j]]
                row += [_FMT % wn[j]]
                out.writerow(row)


def read_trajectory_csv(path, gamma, partition):
    """Rebuild the trajectory written by ``write_trajectory_csv``."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    if not rows or not rows[0] or rows[0][0] != "segment":
        raise ConfigError(f"{path}: missing trajectory header")
    dim = len(rows[0]) - 4
    if dim < 1:
        raise ConfigError(f"{path}: header has no state columns")
    per_seg = {}
    for n, row in enumerate(rows[1:], start=2):
        if len(row) != dim + 4:
            raise ConfigError(f"{path}:{n}: expected {dim + 4} columns")
        try:
            idx = int(row[0])
            t = float(row[1])
            vals = [float(x) for x in row[3 : 3 + dim]]
        except ValueError as exc:
            raise ConfigError(f"{path}:{n}: {exc}") from None
        if row[2] not in ("interior", "left", "right"):
            raise ConfigError(f"{path}:{n}: bad side {row[2]!r}")
        per_seg.setdefault(idx, []).append((t, vals))
    n_seg = len(partition) - 1
    if sorted(per_seg) != list(range(n_seg)):
        raise ConfigError(
            f"{path}: expected segments 0..{n_seg - 1}, got {sorted(per_seg)}"
        )
    kinds = tuple(
        "impulse" if i % 2 == 1 else "evolution" for i in range(n_seg)
    )
    segments = []
    for i in range(n_seg):
        pts = per_seg[i]
        grid = np.array([p[0] for p in pts])
        vals = np.array([p[1] for p in pts])
        try:
            segments.append(SampledFn(grid, vals))
        except DomainError as exc:
            raise ConfigError(f"{path}: segment {i}: {exc}") from None
    return PiecewiseTrajectory(tuple(segments), gamma, partition, kinds)


def _report_path(out_path, suffix):
    base, _ = os.path.splitext(out_path)
    return base + suffix


def _solve_once(loaded: LoadedProblem, out_path):
    report = mild_solve(loaded.problem, loaded.solver)
    write_trajectory_csv(out_path, report.trajectory)
    doc = {
        "iterations": report.iterations,
        "final_diff": report.final_diff,
        "contraction_ratios": [
            [float(r) for r in seg] for seg in report.contraction_ratios
        ],
        "warnings": list(report.warnings),
        "segments": len(report.trajectory.segments),
        "gamma": loaded.problem.gamma,
        "kernel_exponent": str(loaded.solver.kernel_exponent),
    }
    with open(_report_path(out_path, ".report.json"), "w") as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=True))
    return report


def cmd_solve(args):
    loaded = load_problem(args.config)
    try:
        report = _solve_once(loaded, args.out)
    except (IterationError, ContractionError) as exc:
        history = getattr(exc, "history", None)
        log.error("iteration failure: %s", exc)
        if history:
            print(
                "diff history: " + ", ".join(_FMT % h for h in history),
                file=sys.stderr,
            )
        return 2
    log.info(
        "solved: %d segments, final diff %.3g",
        len(report.trajectory.segments),
        report.final_diff,
    )
    return 0


def cmd_check(args):
    from .existence import check_existence, compute_constants

    loaded = load_problem(args.config)
    constants = compute_constants(loaded.problem, loaded.sampling)
    cert = check_existence(constants, loaded.sampling)
    text = cert.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    print(text)
    return 0 if cert.verdict == "PASS" else 3


def cmd_verify(args):
    loaded = load_problem(args.config)
    p = loaded.problem
    traj = read_trajectory_csv(args.traj, p.gamma, p.partition())
    report = integral_residual(
        p,
        traj,
        tolerance=loaded.residual_tolerance,
        kernel_exponent=loaded.solver.kernel_exponent,
    )
    with open(_report_path(args.traj, ".residual.json"), "w") as fh:
        fh.write(report.to_json())
    print(
        f"max residual {report.max_residual:.6g} "
        f"(tolerance {report.tolerance:.6g}), "
        f"initial defect {report.initial_defect:.6g}"
    )
    return 0 if report.passed() else 4


def _sweep_member(loaded, param, value, out_dir):
    problem = dataclasses.replace(loaded.problem, **{param: value})
    member = dataclasses.replace(loaded, problem=problem)
    name = f"{param}_{_FMT % value}.csv"
    out_path = os.path.join(out_dir, name)
    try:
        report = _solve_once(member, out_path)
        res = integral_residual(
            problem,
            report.trajectory,
            tolerance=loaded.residual_tolerance,
            kernel_exponent=loaded.solver.kernel_exponent,
        )
    except (ConfigError, DomainError) as exc:
        return value, 1, str(exc), None, None
    except (IterationError, ContractionError) as exc:
        return value, 2, str(exc), None, None
    terminal = report.trajectory.segments[-1].values[-1]
    return value, 0, "", terminal, res.max_residual


def cmd_sweep(args):
    loaded = load_problem(args.config)
    if args.param not in ("alpha", "beta"):
        raise ConfigError(f"sweep parameter must be alpha or beta, got {args.param}")
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --values list: {exc}") from None
    if not values:
        raise ConfigError("--values produced an empty list")
    os.makedirs(args.out, exist_ok=True)
    workers = min(len(values), os.cpu_count() or 1)
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(
            pool.map(
                lambda v: _sweep_member(loaded, args.param, v, args.out),
                values,
            )
        )
    results.sort(key=lambda r: r[0])
    dim = loaded.problem.dim
    summary = os.path.join(args.out, "summary.csv")
    with open(summary, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(
            [args.param, "status", "error"]
            + [f"terminal_u_{j + 1}" for j in range(dim)]
            + ["max_residual"]
        )
        for value, code, msg, terminal, resid in results:
            row = [_FMT % value, str(code), msg]
            if terminal is None:
                row += [""] * dim + [""]
            else:
                row += [_FMT % v for v in terminal] + [_FMT % resid]
            out.writerow(row)
    failures = [r for r in results if r[1] != 0]
    for value, code, msg, _, _ in failures:
        log.error("%s=%g failed (exit %d): %s", args.param, value, code, msg)
    return 0 if not failures else failures[0][1]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hilfersolve",
        description=(
            "Numerical solver and existence checker for semilinear "
            "fractional evolution problems with non-instantaneous impulses"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="integrate and write trajectory CSV")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_solve)

    s = sub.add_parser("check", help="evaluate the existence criterion")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_check)

    s = sub.add_parser("verify", help="residual-check a written trajectory")
    s.add_argument("--config", required=True)
    s.add_argument("--traj", required=True)
    s.set_defaults(fn=cmd_verify)

    s = sub.add_parser("sweep", help="solve over a parameter grid")
    s.add_argument("--config", required=True)
    s.add_argument("--param", required=True, choices=("alpha", "beta"))
    s.add_argument("--values", required=True, help="comma-separated list")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(fn=cmd_sweep)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr,
        level=os.environ.get("HILFERSOLVE_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
