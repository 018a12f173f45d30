#!/usr/bin/env python3
"""Run the shipped convergence and locking studies and print order tables.

Reproduces the cantilever experiments: straight beam (full integration) and
quarter arc (reduced integration) at t = 0.1 and t = 0.001, plus the
full-vs-reduced locking comparison on the thin arc.
"""
import argparse
import os

from cartbeam.benchmarks import StudySpec, run_convergence, run_locking_study


def print_report(report):
    for key, cell in sorted(report.cells.items(), key=lambda kv: repr(kv[0])):
        order = "n/a" if cell.order is None else f"{cell.order:.2f}"
        print(f"\n{cell.benchmark} / {cell.formulation} / {cell.policy} / t={cell.t:g}  "
              f"(fitted pre-plateau order {order})")
        print(f"  {'n':>4}  {'qoi':>22}  {'rel_error':>12}  {'pair order':>10}")
        for i, n in enumerate(cell.elements):
            pair = "" if i == 0 else f"{cell.pair_orders[i - 1]:10.2f}"
            print(f"  {n:>4}  {cell.qoi[i]:22.15g}  {cell.rel_errors[i]:12.3e}  {pair}")


def write_csv(report, path):
    with open(path, "w", newline="\n") as fh:
        fh.write("benchmark,formulation,quadrature,t,n_elem,qoi,error,rel_error,order\n")
        for row in report.rows():
            cells = [str(v) if not isinstance(v, float) else f"{v:.17g}" for v in row[:5]]
            cells += [f"{v:.17g}" for v in row[5:8]]
            cells.append("" if row[8] == "" else f"{row[8]:.17g}")
            fh.write(",".join(cells) + "\n")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/studies")
    args = parser.parse_args()
    os.makedirs(args.out, exist_ok=True)

    straight = StudySpec("straight", ["timoshenko_p2p1", "timoshenko_h3p2"], ["full"],
                         [1, 2, 4, 8, 16, 32], [0.1, 0.001])
    arc = StudySpec("quarter_arc", ["timoshenko_p2p1", "timoshenko_h3p2"],
                    ["reduced"], [1, 2, 4, 8, 16, 32], [0.1, 0.001])

    for study, name in ((straight, "straight"), (arc, "quarter_arc")):
        report = run_convergence(study)
        print_report(report)
        write_csv(report, os.path.join(args.out, f"convergence_{name}.csv"))

    print("\nlocking comparison: quarter arc, 8 elements, t = 0.001")
    lock = run_locking_study(StudySpec("quarter_arc",
                                       ["timoshenko_p2p1", "timoshenko_h3p2"],
                                       ["full", "reduced"], [8], [0.001]))
    for form in ("timoshenko_p2p1", "timoshenko_h3p2"):
        full = lock.rel_error(form, "full", 0.001, 8)
        red = lock.rel_error(form, "reduced", 0.001, 8)
        print(f"  {form}: rel error full {full:.3e}, reduced {red:.3e} "
              f"(ratio {full / red:.0f}x)")
    print(f"\nCSV written to {args.out}/")


if __name__ == "__main__":
    main()
