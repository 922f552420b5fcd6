#!/usr/bin/env python3
"""External MILP backend for vnfrep using HiGHS (highspy).

Usage: highs_solve.py MODEL.lp SOLUTION.txt [TIME_LIMIT_S|none] [GAP_ABS]
"""
import sys

import highspy


def main():
    if len(sys.argv) < 3:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    lp_path, sol_path = sys.argv[1], sys.argv[2]
    limit = sys.argv[3] if len(sys.argv) > 3 else "none"
    gap = float(sys.argv[4]) if len(sys.argv) > 4 else 1e-6

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("random_seed", 0)
    h.setOptionValue("mip_abs_gap", gap)
    h.setOptionValue("mip_rel_gap", 0.0)
    if limit != "none":
        h.setOptionValue("time_limit", float(limit))
    if h.readModel(lp_path) != highspy.HighsStatus.kOk:
        print("cannot read " + lp_path, file=sys.stderr)
        return 1
    h.run()
    ms = h.getModelStatus()
    S = highspy.HighsModelStatus
    info = h.getInfo()
    has_values = info.primal_solution_status == 2
    if ms == S.kOptimal:
        status = "optimal"
    elif ms == S.kInfeasible:
        status = "infeasible"
    elif ms in (S.kUnbounded, S.kUnboundedOrInfeasible):
        status = "unbounded"
    elif ms in (S.kTimeLimit, S.kIterationLimit, S.kSolutionLimit, S.kInterrupt):
        status = "time_limit"
    else:
        status = "error"

    lines = ["status " + status]
    if has_values and status in ("optimal", "time_limit"):
        lines.append("objective %r" % info.objective_function_value)
        bound = getattr(info, "mip_dual_bound", None)
        if bound is not None and abs(bound) < 1e300:
            lines.append("bound %r" % bound)
        nodes = getattr(info, "mip_node_count", -1)
        if nodes >= 0:
            lines.append("nodes %d" % nodes)
        lp = h.getLp()
        values = h.getSolution().col_value
        for name, value in zip(lp.col_names_, values):
            lines.append("%s %r" % (name, value))
    with open(sol_path, "w") as f:
        f.write("\n".join(lines) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
