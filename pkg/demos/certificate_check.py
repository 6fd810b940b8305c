"""Diagonal-weight semistability conditions checked by sampling.

The channel-indicator weights P_1 = diag(1, 0), P_2 = diag(0, 1) make all
four conditions hold identically for the cubic pair: each coupling map
lands in the image of its weight, the coupling and drift quadratic forms
match f.Pf exactly, and the mass balance is the zero-column-sum structure
of the coupling matrices. Inflating P_1 breaks the coupling bound, and the
certificate names the condition and the first sample where it fails.
"""

import numpy as np

from delaylab import (ConsensusNetwork, Link, SystemRHS,
                      build_system_matrices, semistability_conditions)


def main() -> None:
    net = ConsensusNetwork(n=2, links=(Link(0, 1, 1.0, 0), Link(1, 0, 1.0, 1)),
                           m=2)
    system = SystemRHS.cubic(build_system_matrices(net))
    rng = np.random.default_rng(20260814)
    samples = rng.uniform(-2.0, 2.0, size=(1000, 2))

    clean = semistability_conditions(
        system, (np.diag([1.0, 0.0]), np.diag([0.0, 1.0])), samples)
    print(f"indicator weights: passed = {clean.passed} "
          f"({clean.sample_count} samples)")

    flagged = semistability_conditions(
        system, (np.diag([2.0, 0.0]), np.diag([0.0, 1.0])), samples)
    name, index = flagged.first_violation
    print(f"inflated weights:  passed = {flagged.passed}, first violation = "
          f"{name} at sample {index} x = {samples[index]}")
    counts = flagged.results.sum(axis=0)
    print(f"per-condition pass counts (image, coupling, drift, mass): "
          f"{counts.tolist()}")


if __name__ == "__main__":
    main()
