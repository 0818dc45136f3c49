#!/usr/bin/env python3
"""Solve a CPLEX LP file with HiGHS.

Usage: highs_lp.py MODEL.lp SOLUTION.out

Writes a status line (optimal, infeasible or unbounded) followed by one
`<column> <value>` line per column.
"""
import sys

import highspy


def main():
    if len(sys.argv) != 3:
        sys.exit("usage: highs_lp.py MODEL.lp SOLUTION.out")
    model_path, out_path = sys.argv[1], sys.argv[2]
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", 1)
    if h.readModel(model_path) != highspy.HighsStatus.kOk:
        sys.exit(f"cannot read {model_path}")
    h.run()
    status = h.getModelStatus()
    if status == highspy.HighsModelStatus.kOptimal:
        word = "optimal"
    elif status == highspy.HighsModelStatus.kInfeasible:
        word = "infeasible"
    elif status in (highspy.HighsModelStatus.kUnbounded, highspy.HighsModelStatus.kUnboundedOrInfeasible):
        word = "unbounded" if status == highspy.HighsModelStatus.kUnbounded else "infeasible"
    else:
        sys.exit(f"solver finished with status {h.modelStatusToString(status)}")
    with open(out_path, "w") as f:
        f.write(word + "\n")
        if word == "optimal":
            values = h.getSolution().col_value
            lp = h.getLp()
            for name, value in zip(lp.col_names_, values):
                f.write(f"{name} {value:.12g}\n")


if __name__ == "__main__":
    main()
