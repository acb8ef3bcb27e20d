#!/usr/bin/env python3
"""Solve a DIMACS CNF file with PySAT (CaDiCaL) and print a competition-style verdict.

Exit code 10 for SAT, 20 for UNSAT, 1 on error.
"""
import sys

from pysat.formula import CNF
from pysat.solvers import Solver


def main(argv):
    if len(argv) != 2:
        print("usage: pysat_dimacs.py FILE.cnf", file=sys.stderr)
        return 1
    cnf = CNF(from_file=argv[1])
    with Solver(name="cadical153", bootstrap_with=cnf.clauses) as s:
        sat = s.solve()
        if sat:
            print("s SATISFIABLE")
            model = s.get_model() or []
            print("v " + " ".join(str(l) for l in model) + " 0")
            return 10
        print("s UNSATISFIABLE")
        return 20


if __name__ == "__main__":
    sys.exit(main(sys.argv))
