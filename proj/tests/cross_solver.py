#!/usr/bin/env python3
"""Re-solve every exported DIMACS query with an external solver and compare
its answer with the status the tool logged for that iteration
(fails <-> satisfiable, holds <-> unsatisfiable).

usage: cross_solver.py <upec_ssc> <source dir> <scratch dir>
Exits 77 (skipped) when python-sat is not installed.
"""

import json
import shutil
import subprocess
import sys
from pathlib import Path

try:
    from pysat.formula import CNF
    from pysat.solvers import Solver
except ImportError:
    print("python-sat not installed; skipping")
    sys.exit(77)

RUNS = [
    ("vulnerable", []),
    ("vulnerable", ["--unrolled"]),
    ("hwpe", []),
    ("hwpe", ["--unrolled"]),
    ("fixed", []),
    ("fixed", ["--unrolled"]),
]


def main():
    tool, src, work = sys.argv[1], Path(sys.argv[2]), Path(sys.argv[3])
    shutil.rmtree(work, ignore_errors=True)
    work.mkdir(parents=True)
    mismatches = 0
    total = 0
    for model, flags in RUNS:
        out = work / (model + "".join(flags).replace("-", "_"))
        proc = subprocess.run(
            [tool, "check", *flags, "--dimacs-dir", str(out), "--json", str(src / "models" / model)],
            capture_output=True, text=True,
        )
        if proc.returncode not in (0, 2):
            print(f"{model} {flags}: unexpected exit {proc.returncode}\n{proc.stderr}")
            return 1
        report = json.loads(proc.stdout)
        files = report["files"]["dimacs"]
        iterations = report["iterations"]
        if len(files) != len(iterations):
            print(f"{model} {flags}: {len(files)} CNF files for {len(iterations)} iterations")
            return 1
        before = mismatches
        for path, it in zip(files, iterations):
            with Solver(name="cadical153", bootstrap_with=CNF(from_file=path).clauses) as s:
                sat = s.solve()
            expected = it["status"] == "fails"
            total += 1
            if sat != expected:
                mismatches += 1
                print(f"MISMATCH {path}: external {'sat' if sat else 'unsat'}, tool {it['status']}")
        label = " ".join(flags) or "fixpoint"
        print(f"{model} {label}: {len(files) - (mismatches - before)}/{len(files)} queries agree")
    print(f"{total - mismatches}/{total} queries agree")
    return 1 if mismatches else 0


if __name__ == "__main__":
    sys.exit(main())
