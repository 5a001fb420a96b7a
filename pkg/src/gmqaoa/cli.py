"""Command-line front end: ``gmqaoa prepare | run | verify``.

Exit codes: 0 success, 1 input error, 2 resource cap, 3 verification failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import fullsim, optimizer, problems, stateprep, verify
from .substate import AngleSchedule

EXIT_OK, EXIT_INPUT, EXIT_CAP, EXIT_VERIFY = 0, 1, 2, 3
PREP_METHODS = ("auto",) + tuple(m.value for m in stateprep.PrepMethod)


class InputError(Exception):
    pass


def _load(args) -> object:
    path = Path(args.problem)
    if not path.is_file():
        raise InputError(f"problem file not found: {path}")
    try:
        inst = problems.load_instance(path, getattr(args, "k", None))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    except problems.InstanceError as exc:
        raise InputError(f"{path}: {exc}") from exc
    problems.check_caps(inst)
    return inst


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _prep_spec(inst, method: str) -> stateprep.PrepSpec:
    if method == "auto":
        return stateprep.prep_for(inst)
    m = stateprep.PrepMethod(method)
    if m is stateprep.PrepMethod.ALTERNATING_CIRCUIT:
        if not isinstance(inst, problems.TspInstance) or inst.n not in (3, 4):
            raise InputError("the alternating circuit needs a TSP instance with n = 3 or 4")
        return stateprep.PrepSpec(stateprep.alternating_feasible(inst.n), m, stateprep.alternating_circuit(inst.n))
    spec = stateprep.prep_for(inst)
    if spec.method is not m:
        allowed = "w or dicke" if isinstance(inst, problems.KvcInstance) else spec.method.value
        if not (isinstance(inst, problems.KvcInstance) and m in (stateprep.PrepMethod.DICKE_FORMULA,
                                                                  stateprep.PrepMethod.W_CIRCUIT)):
            raise InputError(f"method {method!r} does not fit this instance; use {allowed}")
        if m is stateprep.PrepMethod.W_CIRCUIT and inst.k != 1:
            raise InputError("the W circuit prepares k = 1 only")
        circ = (stateprep.w_state_circuit(range(inst.n)) if m is stateprep.PrepMethod.W_CIRCUIT
                else stateprep.dicke_prep_circuit(inst.n, inst.k))
        spec = stateprep.PrepSpec(spec.target, m, circ)
    return spec


def cmd_prepare(args) -> int:
    inst = _load(args)
    spec = _prep_spec(inst, args.method)
    print(f"|F|={len(spec.target)} qubits={spec.num_qubits} gates={len(spec.circuit)} "
          f"method={spec.method.value}")
    text = spec.circuit.to_text()
    if args.out:
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _optimize(args, fset, costs, sense) -> optimizer.OptimizationReport:
    p = args.p
    if p == 0 or args.optimizer == "grid":
        return optimizer.grid_search(fset, costs, p, args.resolution, sense, args.budget)
    if args.optimizer == "grid+simplex":
        return optimizer.grid_then_simplex(fset, costs, p, args.resolution, sense, args.budget)
    start = AngleSchedule.random(p, np.random.default_rng(args.seed))
    return optimizer.simplex_refine(fset, costs, start, sense)


def cmd_run(args) -> int:
    if args.p < 0:
        raise InputError("--p must be >= 0")
    inst = _load(args)
    fset = problems.feasible_set(inst)
    costs = problems.cost_table(inst, fset)
    sense = problems.sense_of(inst)
    rep = _optimize(args, fset, costs, sense)
    result = rep.to_dict()
    result["feasible_size"] = len(fset)
    result["brute_force_optimum"] = verify.brute_force_optimum(fset, costs, sense)[0]
    if args.engine in ("full", "both"):
        prep = stateprep.prep_for(inst, fset)
        if prep.num_qubits > verify.FULL_MAX_QUBITS:
            raise fullsim.CapExceededError(
                f"full engine limited to {verify.FULL_MAX_QUBITS} qubits, instance needs {prep.num_qubits}")
        enc = problems.encoding(inst)
        diag = verify.encoding_diagonal(enc, prep.num_qubits)
        full = verify.full_pipeline(prep, diag, rep.best)
        probs = np.abs(full.amp) ** 2
        result["full_engine"] = {
            "expectation": float(probs[fset.members] @ costs.value),
            "leaked": verify.support_check(full, fset),
        }
        if args.engine == "both":
            result["cross_check_deviation"] = verify.cross_check_engines(prep, enc, rep.best, costs)
    # all computation done; write outputs
    out = Path(args.out)
    _write(out / "report.json", json.dumps(result, indent=2, sort_keys=True) + "\n")
    _write(out / "trace.csv", rep.trace_csv())
    print(f"best={rep.best_value:.12g} ratio={rep.ratio:.12g} p={rep.p} evals={rep.evaluations}")
    return EXIT_OK


def cmd_verify(args) -> int:
    names = verify.DEFAULT_SUITES if args.suite in ("default", "all") else (args.suite,)
    for name in names:
        if name not in verify.SUITES:
            available = ", ".join(("default",) + tuple(verify.SUITES))
            raise InputError(f"unknown suite {name!r}; available: {available}")
    report = verify.run_suites(names, args.trials, args.seed)
    text = verify.report_json(report)
    if args.out:
        _write(Path(args.out), text)
    for name, suite in report["suites"].items():
        failed = [c["name"] for c in suite["checks"] if not c["passed"]]
        status = "PASS" if suite["passed"] else "FAIL " + ", ".join(failed)
        print(f"{name}: {len(suite['checks'])} checks {status}")
    return EXIT_OK if report["passed"] else EXIT_VERIFY


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gmqaoa", description="Grover-mixer QAOA simulation lab")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    prep = sub.add_parser("prepare", help="report |F| and dump the preparation circuit")
    prep.add_argument("--problem", required=True, help="instance JSON or edge-list file")
    prep.add_argument("--k", type=int, help="cover size for plain edge-list input")
    prep.add_argument("--method", choices=PREP_METHODS, default="auto")
    prep.add_argument("--out", help="circuit text file (default: stdout)")
    prep.set_defaults(func=cmd_prepare)

    run = sub.add_parser("run", help="optimize angles and write report.json and trace.csv")
    run.add_argument("--problem", required=True, help="instance JSON or edge-list file")
    run.add_argument("--k", type=int, help="cover size for plain edge-list input")
    run.add_argument("--p", type=int, default=1, help="number of rounds")
    run.add_argument("--optimizer", choices=("grid", "simplex", "grid+simplex"), default="grid+simplex")
    run.add_argument("--resolution", type=int, default=16, help="grid points per angle")
    run.add_argument("--budget", type=int, default=optimizer.DEFAULT_BUDGET, help="max objective evaluations")
    run.add_argument("--seed", type=_seed, default=0, help="seeds the simplex start when no grid runs")
    run.add_argument("--engine", choices=("subspace", "full", "both"), default="subspace")
    run.add_argument("--out", default="gmqaoa-out", help="output directory")
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="run verification suites")
    ver.add_argument("--suite", default="default", help="suite name or 'default' for all")
    ver.add_argument("--trials", type=int, help="random schedules per p for sampled suites")
    ver.add_argument("--seed", type=_seed, default=0)
    ver.add_argument("--out", help="JSON report path")
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (problems.CapExceeded, fullsim.CapExceededError, optimizer.BudgetExceeded) as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (problems.InstanceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
