"""Command-line front end.

Subcommands: validate, query, exact, ground, bif2dcs, bench.  Query and
exact print a JSON result on stdout; bench prints CSV; errors print a
JSON diagnostic {"error": ...} and exit with status 1.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from typing import List, Optional

from . import bench as bench_mod
from .analysis import ProgramAnalysis
from .bifio import import_bif
from .engine import ALGORITHMS, run_query
from .oracle import exact_query, ground_program
from .parser import (parse_evidence, parse_program, parse_query,
                     program_to_text, validate)


def _positive_int(s: str) -> int:
    n = int(s)
    if n <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def _int_list(s: str) -> List[int]:
    out = [int(x) for x in s.split(",") if x]
    if not out or any(n <= 0 for n in out):
        raise argparse.ArgumentTypeError("expected a comma-separated list "
                                         "of positive integers")
    return out


def _add_program_flags(sp, query=False, evidence=False):
    sp.add_argument("-p", "--program", required=True,
                    help="program file (.dcs)")
    sp.add_argument("--combining", choices=("mean", "noisyor"),
                    default="mean", help="combining rule (default: mean)")
    if query:
        sp.add_argument("-q", "--query", required=True,
                        help="query conjunction, e.g. \"e ~= 1\"")
    if evidence:
        sp.add_argument("-e", "--evidence", default=None,
                        help="evidence file, one `term ~= value.` per line")


def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dcsharp",
                                 description="Hybrid probabilistic logic "
                                             "program inference")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("validate", help="static well-formedness checks")
    _add_program_flags(sp)

    sp = sub.add_parser("query", help="sampling inference")
    _add_program_flags(sp, query=True, evidence=True)
    sp.add_argument("--algorithm", choices=ALGORITHMS, default="cslw")
    sp.add_argument("--samples", type=_positive_int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--strict", action="store_true",
                    help="treat non-exhaustive clause sets as errors")
    sp.add_argument("--jobs", type=_positive_int, default=1,
                    help="worker processes for row generation")

    sp = sub.add_parser("exact", help="exact probability by enumeration")
    _add_program_flags(sp, query=True, evidence=True)

    sp = sub.add_parser("ground", help="ground the program against a "
                                       "closed assignment")
    _add_program_flags(sp, evidence=True)

    sp = sub.add_parser("bif2dcs", help="convert a BIF network to a program")
    sp.add_argument("-p", "--program", required=True, help="BIF file")
    sp.add_argument("--mode", choices=("tabular", "tree"), default="tabular")

    sp = sub.add_parser("bench", help="benchmark CSV on stdout")
    sp.add_argument("--study", choices=("pairs", "scaling"), required=True,
                    help="pairs: tree CS-LW vs tabular LW; "
                         "scaling: relational program over growing domains")
    sp.add_argument("--reps", type=_positive_int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--pairs", type=_positive_int, default=20,
                    help="number of generated network pairs (pairs study)")
    sp.add_argument("--sizes", type=_int_list, default=[1000],
                    help="sample sizes, comma-separated (pairs study)")
    sp.add_argument("--samples", type=_positive_int, default=10000,
                    help="samples per estimate (scaling study)")
    sp.add_argument("--domains", type=_int_list, default=[1, 2, 5, 10, 20],
                    help="domain sizes, comma-separated (scaling study)")
    return ap


# ---------------------------------------------------------------------------

def _load_program(args):
    with open(args.program) as fh:
        text = fh.read()
    program = parse_program(text, combining_rule=args.combining)
    diagnostics = validate(program)
    if diagnostics:
        raise CliError("; ".join(repr(d) for d in diagnostics))
    return program


def _load_evidence(args):
    if not getattr(args, "evidence", None):
        return {}
    with open(args.evidence) as fh:
        return parse_evidence(fh.read())


class CliError(Exception):
    pass


def cmd_validate(args) -> int:
    with open(args.program) as fh:
        program = parse_program(fh.read(), combining_rule=args.combining)
    diagnostics = validate(program)
    print(json.dumps({"diagnostics": [
        {"clause": d.clause_index, "rule": d.rule, "message": d.message}
        for d in diagnostics]}, indent=2))
    return 0 if not diagnostics else 1


def cmd_query(args) -> int:
    program = _load_program(args)
    query = parse_query(args.query)
    evidence = _load_evidence(args)
    result = run_query(program, query, evidence, algorithm=args.algorithm,
                       samples=args.samples, seed=args.seed,
                       strict=args.strict, jobs=args.jobs)
    print(json.dumps(result.as_dict()))
    return 0


def cmd_exact(args) -> int:
    program = _load_program(args)
    query = parse_query(args.query)
    evidence = _load_evidence(args)
    start = time.perf_counter()
    value = exact_query(program, query, evidence)
    elapsed_ms = (time.perf_counter() - start) * 1000.0
    print(json.dumps({"estimate": value, "std_error": None, "samples": None,
                      "algorithm": "exact", "seed": None,
                      "elapsed_ms": elapsed_ms}))
    return 0


def cmd_ground(args) -> int:
    program = _load_program(args)
    assignment = _load_evidence(args)
    clauses = ground_program(program, assignment)
    for clause in clauses:
        print(repr(clause))
    return 0


def cmd_bif2dcs(args) -> int:
    with open(args.program) as fh:
        program = import_bif(fh.read(), mode=args.mode)
    sys.stdout.write(program_to_text(program))
    return 0


def cmd_bench(args) -> int:
    if args.study == "pairs":
        rows = bench_mod.bench_tree_vs_tabular(
            n_pairs=args.pairs, repetitions=args.reps,
            sample_sizes=args.sizes, seed=args.seed)
        bench_mod.write_csv(rows, sys.stdout, size_label="n_samples")
    else:
        rows = bench_mod.bench_scaling(
            domains=args.domains, repetitions=args.reps,
            n_samples=args.samples, seed=args.seed)
        bench_mod.write_csv(rows, sys.stdout, size_label="domain_size")
    return 0


_COMMANDS = {"validate": cmd_validate, "query": cmd_query,
             "exact": cmd_exact, "ground": cmd_ground,
             "bif2dcs": cmd_bif2dcs, "bench": cmd_bench}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except Exception as exc:  # noqa: BLE001 - every failure becomes JSON
        print(json.dumps({"error": str(exc)}))
        return 1


if __name__ == "__main__":
    sys.exit(main())
