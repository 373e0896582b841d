"""Command-line entry point: solve, emulate, oracle, birkhoff.

File formats (all JSON, each tagged with a leading ``format`` field):

problem   {"format": "tspvqa-problem/1", "n": 4, "D": [[...], ...],
           "diag_penalty": 100, "a_sub": 50}      (last two optional)
matrix    {"format": "tspvqa-matrix/1", "X": [[...], ...]}
trace     JSON lines. First line {"format": "tspvqa-trace/1", "type": "header",
          "config": {...}}, then one {"type": "iteration", ...} per step of the
          returned run, then one {"type": "final", ...}.

Numbers in input files are parsed as exact decimals before conversion to
float, so "0.1" maps to the nearest double regardless of locale or tooling.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict
from decimal import Decimal
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .cost import DEFAULT_A_SUB, DEFAULT_DIAG_PENALTY, CostConfig, DistanceMatrix
from .errors import CapacityError
from .measurement import DEFAULT_SHOTS, assert_doubly_stochastic, sampling_tolerance
from .optimizer import OptimizerConfig, RunTrace, active_cities, optimize
from .oracle import RoutePermutation, birkhoff_decompose, brute_force_tsp, held_karp, matrix_to_route

PROBLEM_FORMAT = "tspvqa-problem/1"
MATRIX_FORMAT = "tspvqa-matrix/1"
TRACE_FORMAT = "tspvqa-trace/1"
SEED_ENV = "TSPVQA_SEED"

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED = 0, 1, 2


class InputError(Exception):
    pass


def _load(path: str, fmt: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text, parse_float=Decimal, parse_int=Decimal)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"{path}: top level must be an object")
    if doc.get("format") != fmt:
        raise InputError(f"{path}: field 'format' must be {fmt!r}, got {doc.get('format')!r}")
    return doc


def _square(path: str, doc: dict, key: str) -> np.ndarray:
    rows = doc.get(key)
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise InputError(f"{path}: field {key!r} must be a list of rows")
    n = len(rows)
    for i, r in enumerate(rows):
        if len(r) != n:
            raise InputError(f"{path}: field {key!r} row {i + 1} has {len(r)} entries, expected {n}")
        for j, v in enumerate(r):
            if not isinstance(v, Decimal) or not v.is_finite():
                raise InputError(f"{path}: field {key!r} entry ({i + 1},{j + 1}) is not a finite number")
    return np.array([[float(v) for v in r] for r in rows], dtype=float).reshape(n, n)


def load_problem(path: str) -> tuple[np.ndarray, dict]:
    """Distance matrix and any penalty overrides from a problem file."""
    doc = _load(path, PROBLEM_FORMAT)
    d = _square(path, doc, "D")
    n = doc.get("n")
    if n is None or int(n) != d.shape[0] or n != int(n):
        raise InputError(f"{path}: field 'n' must equal the size of D ({d.shape[0]}), got {n}")
    if np.any(d < 0):
        raise InputError(f"{path}: field 'D' has negative entries")
    overrides = {}
    for key in ("diag_penalty", "a_sub"):
        if key in doc:
            v = doc[key]
            if not isinstance(v, Decimal) or not v.is_finite() or v < 0:
                raise InputError(f"{path}: field {key!r} must be a finite number >= 0")
            overrides[key] = float(v)
    return d, overrides


def load_matrix(path: str) -> np.ndarray:
    return _square(path, _load(path, MATRIX_FORMAT), "X")


def dump_problem(d, path: str, **overrides) -> None:
    d = np.asarray(d, dtype=float)
    doc = {"format": PROBLEM_FORMAT, "n": d.shape[0], "D": d.tolist(), **overrides}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def read_trace(path: str) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        records = [json.loads(line) for line in fh if line.strip()]
    if not records or records[0].get("format") != TRACE_FORMAT:
        raise ValueError(f"{path} is not a {TRACE_FORMAT} file")
    return records


def _resolve_seed(seed: Optional[int]) -> int:
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise InputError(f"environment variable {SEED_ENV}={env!r} is not an integer") from None


def _config_echo(cfg: OptimizerConfig, problem: DistanceMatrix) -> dict:
    out = asdict(cfg)
    out["cost"] = {"a_sub": cfg.cost.a_sub, "subtour_mode": cfg.cost.subtour_mode}
    out["diag_penalty"] = problem.diag_penalty
    out["n_cities"] = problem.n_cities
    return out


def trace_records(trace: RunTrace, problem: DistanceMatrix, cfg: OptimizerConfig) -> list[dict]:
    n = problem.n_cities
    x = trace.final_x.values
    route = trace.route
    head = route.sigma[:n]
    tour = all(k < n for k in head) and route.n >= n
    city_route = RoutePermutation(head) if tour else None
    valid = city_route is not None and city_route.valid_tour
    out: list[dict] = [{"format": TRACE_FORMAT, "type": "header", "version": __version__,
                        "config": _config_echo(cfg, problem)}]
    for r in trace.records:
        gn = None if not np.isfinite(r.grad_norm) else r.grad_norm
        out.append({"type": "iteration", "iteration": r.iteration, "cost": r.cost,
                    "grad_norm": gn, "alpha": r.alpha.tolist()})
    out.append({
        "type": "final",
        "x": x.tolist(),
        "route": matrix_to_route(city_route) if valid else None,
        "permutation": [k + 1 for k in route.sigma],
        "length": city_route.length(problem.d) if valid else None,
        "overlap": trace.overlap,
        "converged": trace.converged,
        "valid_tour": valid,
        "seed": cfg.seed,
        "start": trace.start,
        "round": trace.round,
        "active_subsets": active_cities(trace.active_history),
    })
    return out


def _emit(records: Sequence[dict], out_path: Optional[str]) -> None:
    text = "".join(json.dumps(r, allow_nan=False) + "\n" for r in records)
    if out_path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _optimizer_config(args, overrides: dict, protocol: str) -> OptimizerConfig:
    cost = CostConfig(a_sub=args.asub if args.asub is not None else overrides.get("a_sub", DEFAULT_A_SUB),
                      subtour_mode=args.subtour)
    defaults = OptimizerConfig()
    return OptimizerConfig(
        learning_rate=args.lr if args.lr is not None else defaults.learning_rate,
        fd_step=args.fd_step if args.fd_step is not None else defaults.fd_step,
        max_iters=args.max_iters if args.max_iters is not None else defaults.max_iters,
        n_starts=args.starts if args.starts is not None else defaults.n_starts,
        shots=None if args.exact else args.shots,
        seed=_resolve_seed(args.seed),
        protocol=protocol,
        cost=cost,
    )


def _run_solver(args, protocol: str) -> int:
    d, overrides = load_problem(args.problem)
    diag = args.dii if args.dii is not None else overrides.get("diag_penalty", DEFAULT_DIAG_PENALTY)
    try:
        problem = DistanceMatrix(d, diag)
        cfg = _optimizer_config(args, overrides, protocol)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if protocol == "projectors" and problem.n_cities != 4:
        raise InputError(f"the 16-projector protocol needs exactly 4 cities, got {problem.n_cities}")
    trace = optimize(problem, cfg)
    records = trace_records(trace, problem, cfg)
    _emit(records, args.out)
    final = records[-1]
    tol = 1e-10 if cfg.exact else sampling_tolerance(trace.final_x.dim, cfg.shots)
    if not assert_doubly_stochastic(trace.final_x, tol):
        print("warning: final X is not doubly stochastic", file=sys.stderr)
    if final["valid_tour"] and trace.converged:
        return EXIT_OK
    reason = "did not converge" if not trace.converged else "rounded result is not a single tour"
    print(f"{reason} (overlap {trace.overlap:.3f})", file=sys.stderr)
    return EXIT_NOT_CONVERGED


def cmd_solve(args) -> int:
    return _run_solver(args, "universal")


def cmd_emulate(args) -> int:
    return _run_solver(args, args.protocol)


def cmd_oracle(args) -> int:
    d, _ = load_problem(args.problem)
    records = []
    try:
        route, length = brute_force_tsp(d)
        records.append({"method": "brute_force", "route": matrix_to_route(route), "length": length})
    except CapacityError as exc:
        print(f"brute force skipped: {exc}", file=sys.stderr)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    try:
        records.append({"method": "held_karp", "length": held_karp(d)})
    except CapacityError as exc:
        print(f"held-karp skipped: {exc}", file=sys.stderr)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if not records:
        return EXIT_INPUT
    _emit(records, args.out)
    return EXIT_OK


def cmd_birkhoff(args) -> int:
    x = load_matrix(args.matrix)
    try:
        dec = birkhoff_decompose(x)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    records = []
    for w, p in dec.terms:
        rec = {"type": "term", "weight": w, "permutation": [k + 1 for k in p.sigma]}
        if p.valid_tour:
            rec["route"] = matrix_to_route(p)
        records.append(rec)
    records.append({"type": "summary", "terms": len(dec.terms), "weight_sum": float(dec.weights.sum()),
                    "residual": dec.residual})
    _emit(records, args.out)
    return EXIT_OK


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("problem", help="problem file")
    stats = p.add_mutually_exclusive_group()
    stats.add_argument("--exact", action="store_true", help="use the exact correlation matrix")
    stats.add_argument("--shots", type=int, default=DEFAULT_SHOTS, help="coincidences per cost evaluation")
    p.add_argument("--seed", type=int, default=None, help=f"master seed (fallback: ${SEED_ENV}, then 0)")
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--fd-step", type=float, default=None)
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--starts", type=int, default=None)
    p.add_argument("--asub", type=float, default=None)
    p.add_argument("--dii", type=float, default=None)
    p.add_argument("--subtour", choices=("full", "lazy", "off"), default="lazy")
    p.add_argument("--out", default=None, help="write the trace here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tspvqa", description="Variational TSP solver on two entangled registers.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the VQA with the universal register measurement")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("emulate", help="run the VQA through an emulated measurement protocol")
    _add_solver_flags(p)
    p.add_argument("--protocol", choices=("projectors", "universal"), default="projectors")
    p.set_defaults(func=cmd_emulate)

    p = sub.add_parser("oracle", help="exact classical optimum")
    p.add_argument("problem")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("birkhoff", help="decompose a doubly stochastic matrix into permutations")
    p.add_argument("matrix")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_birkhoff)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
