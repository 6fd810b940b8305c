"""Seeded random histories all land on the equilibrium line.

Every constant history drawn from [-1, 1]^2 converges, each to its own
limit (the equilibria form a line, so nearby starts settle on nearby but
different constants), and each limit matches the value the conservation
law computes from that history alone. The excursion ratio stays at 1:
no trajectory ever leaves the box spanned by its start and its limit.
"""

from delaylab import builtin_scenario, max_bound, semistability_sweep


def main() -> None:
    scenario = builtin_scenario("two_node_linear_limit")
    system = scenario.build_system()
    report = semistability_sweep(system, scenario.profiles,
                                 scenario.integration, count=12,
                                 amplitude=1.0, seed=7,
                                 window=max_bound(scenario.profiles),
                                 tol=scenario.convergence_tol)
    print(f"{'start':>20} {'limit':>10} {'predicted':>10} {'gap':>9}")
    for run in report.runs:
        start = "(%+.3f, %+.3f)" % tuple(run.history_value)
        print(f"{start:>20} {run.alpha:>10.6f} {run.predicted:>10.6f} "
              f"{abs(run.alpha - run.predicted):>9.2e}")
    print(f"converged {report.converged_count}/{report.count}, "
          f"{report.distinct_limits()} distinct limits, "
          f"max excursion ratio = {report.max_excursion_ratio:.6f}")


if __name__ == "__main__":
    main()
