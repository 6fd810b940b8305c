import math

import numpy as np
import pytest

from delaylab import (ConsensusNetwork, DelayProfile, DenseTrajectory,
                      HistoryFunction, IntegrationConfig, Link, ResidualSeries,
                      SystemMatrices, SystemRHS, analyze_run,
                      build_system_matrices, conserved_quantity,
                      convergence_check, drazin_inverse_diagonal, integrate,
                      limiting_residual, predicted_consensus_linear,
                      predicted_consensus_nonlinear, razumikhin_certificate,
                      residual_decay_factor, semistability_conditions,
                      semistability_sweep)


def scalar_system() -> SystemRHS:
    return SystemRHS.neutral(1)


def two_node_system(kind: str = "linear") -> SystemRHS:
    net = ConsensusNetwork(n=2, links=(Link(0, 1, 1.0, 0), Link(1, 0, 1.0, 1)),
                           m=2)
    mats = build_system_matrices(net)
    return SystemRHS.linear(mats) if kind == "linear" else SystemRHS.cubic(mats)


def synthetic_trajectory(times: np.ndarray, states: np.ndarray,
                         derivs: np.ndarray, history: HistoryFunction
                         ) -> DenseTrajectory:
    return DenseTrajectory.from_arrays(history, times, states, derivs)


# -- predicted consensus, linear coupling ----------------------------------------


def test_predicted_linear_affine_history():
    # phi(theta) = 1 + theta on [-1, 0]:
    # numerator 1 + integral_{-1}^{0} (1 + theta) = 1.5, denominator 1 + 1.
    value = predicted_consensus_linear(scalar_system().matrices, [1.0],
                                       HistoryFunction.affine([1.0], [1.0], 1.0))
    assert value == pytest.approx(0.75, abs=1e-15)


def test_predicted_linear_constant_history_is_identity():
    for c in (-2.0, 0.0, 0.3, 5.0):
        hist = HistoryFunction.constant([c], 1.0)
        value = predicted_consensus_linear(scalar_system().matrices, [1.0], hist)
        assert value == pytest.approx(c, abs=1e-14)
    hist2 = HistoryFunction.constant([0.7, 0.7], 1.0)
    value = predicted_consensus_linear(two_node_system().matrices, [1.0, 1.0],
                                       hist2)
    assert value == pytest.approx(0.7, abs=1e-14)


def test_predicted_linear_two_node_mismatched_start():
    # phi = (1, 0): numerator 1 + 0 + 1, denominator 2 + 1 + 1.
    hist = HistoryFunction.constant([1.0, 0.0], 1.0)
    value = predicted_consensus_linear(two_node_system().matrices, [1.0, 1.0],
                                       hist)
    assert value == pytest.approx(0.5, abs=1e-15)


def test_predicted_linear_sampled_zigzag():
    # Piecewise-linear history (-1, 1) -> (-0.5, 0) -> (0, 0.5):
    # trapezoid areas 0.25 + 0.125, numerator 0.5 + 0.375, denominator 2.
    hist = HistoryFunction.sampled([-1.0, -0.5, 0.0], [[1.0], [0.0], [0.5]])
    value = predicted_consensus_linear(scalar_system().matrices, [1.0], hist)
    assert value == pytest.approx(0.4375, abs=1e-12)


def test_predicted_linear_scaling_equivariance(rng):
    """The functional is linear in the history, so alpha(l phi) = l alpha(phi)."""
    mats = two_node_system().matrices
    base_a = np.array([1.0, -0.5])
    base_b = np.array([0.3, 0.8])
    ref = predicted_consensus_linear(
        mats, [1.0, 1.0], HistoryFunction.affine(base_a, base_b, 1.0))
    doubled = predicted_consensus_linear(
        mats, [1.0, 1.0], HistoryFunction.affine(2.0 * base_a, 2.0 * base_b, 1.0))
    assert doubled == 2.0 * ref
    for _ in range(25):
        lam = float(rng.uniform(-3.0, 3.0))
        scaled = predicted_consensus_linear(
            mats, [1.0, 1.0],
            HistoryFunction.affine(lam * base_a, lam * base_b, 1.0))
        assert scaled == pytest.approx(lam * ref, abs=1e-14 * (1.0 + abs(lam)))


def test_predicted_linear_validation():
    hist = HistoryFunction.constant([1.0], 1.0)
    with pytest.raises(ValueError, match="delays"):
        predicted_consensus_linear(scalar_system().matrices, [1.0, 1.0], hist)
    short = HistoryFunction.constant([1.0], 0.25)
    with pytest.raises(ValueError, match="horizon"):
        predicted_consensus_linear(scalar_system().matrices, [1.0], short)


# -- predicted consensus, odd-power coupling -------------------------------------


def bisect_cubic_level(target: float) -> float:
    # Independent oracle for 2a + 2a^3 = target, no shared code path.
    def f(a: float) -> float:
        return 2.0 * a + 2.0 * a ** 3 - target

    lo, hi = -10.0, 10.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_predicted_cubic_root_against_bisection():
    # phi = (1, 0) constant: the level equation is a^3 + a = 1.
    hist = HistoryFunction.constant([1.0, 0.0], 1.0)
    value = predicted_consensus_nonlinear(two_node_system("cubic"), [1.0, 1.0],
                                          hist)
    assert value == pytest.approx(bisect_cubic_level(2.0), abs=1e-13)
    assert value == pytest.approx(0.6823278038280193, abs=1e-12)


def test_predicted_cubic_constant_history_is_identity():
    for c in (-1.3, 0.0, 0.4, 2.0):
        hist = HistoryFunction.constant([c, c], 1.0)
        value = predicted_consensus_nonlinear(two_node_system("cubic"),
                                              [1.0, 1.0], hist)
        assert value == pytest.approx(c, abs=1e-12 * (1.0 + abs(c)))


def test_predicted_cubic_bracket_failure_raises():
    hist = HistoryFunction.constant([1e7, 1e7], 1.0)
    with pytest.raises(RuntimeError, match="bracket"):
        predicted_consensus_nonlinear(two_node_system("cubic"), [1.0, 1.0], hist)


# -- residual against the limiting system ----------------------------------------


def test_limiting_residual_zero_for_constant_profiles():
    profiles = (DelayProfile.constant(1.0),)
    history = HistoryFunction.affine([1.0], [1.0], 1.0)
    result = integrate(scalar_system(), profiles, history,
                       IntegrationConfig(step=1e-2, t_end=10.0))
    series = limiting_residual(scalar_system(), profiles, result.trajectory)
    assert float(np.max(series.norms)) == 0.0


def test_limiting_residual_zero_on_equilibria():
    # Every component sits at the same constant, so both delayed reads agree.
    profiles = (DelayProfile.builtin("sin_shift", 1.0),)
    history = HistoryFunction.constant([0.8], 1.0)
    result = integrate(scalar_system(), profiles, history,
                       IntegrationConfig(step=1e-2, t_end=10.0))
    series = limiting_residual(scalar_system(), profiles, result.trajectory)
    assert float(np.max(series.norms)) <= 1e-13


def test_limiting_residual_decays_on_converging_run():
    profiles = (DelayProfile.builtin("sin_shift", 1.0),)
    history = HistoryFunction.affine([1.0], [1.0], 1.0)
    result = integrate(scalar_system(), profiles, history,
                       IntegrationConfig(step=1e-2, t_end=60.0))
    series = limiting_residual(scalar_system(), profiles, result.trajectory)
    tail = series.norms[series.times >= 54.0]
    assert float(tail.max()) <= 1e-6
    assert residual_decay_factor(series) >= 10.0


def test_limiting_residual_profile_count_mismatch():
    history = HistoryFunction.constant([1.0], 1.0)
    result = integrate(scalar_system(), (DelayProfile.constant(1.0),), history,
                       IntegrationConfig(step=0.1, t_end=2.0))
    with pytest.raises(ValueError, match="profiles"):
        limiting_residual(scalar_system(),
                          (DelayProfile.constant(1.0),) * 2, result.trajectory)


def test_residual_decay_factor_piecewise_oracle():
    # First tenth flat at 4, final tenth flat at 0.5: ratio exactly 8.
    times = np.linspace(0.0, 100.0, 1001)
    norms = np.full(times.size, 2.0)
    norms[times <= 10.0] = 4.0
    norms[times >= 90.0] = 0.5
    assert residual_decay_factor(ResidualSeries(times, norms)) == 8.0


def test_residual_decay_factor_zero_and_dust_tails():
    times = np.linspace(0.0, 100.0, 1001)
    norms = np.where(times < 50.0, 1.0, 0.0)
    assert math.isinf(residual_decay_factor(ResidualSeries(times, norms)))
    # Tail at 1e-16 of the peak is roundoff dust, treated as vanished.
    dust = np.where(times < 50.0, 1.0, 1e-16)
    assert math.isinf(residual_decay_factor(ResidualSeries(times, dust)))
    # Tail at 1e-10 of the peak is a real level and produces a finite ratio.
    real = np.where(times < 50.0, 1.0, 1e-10)
    assert residual_decay_factor(ResidualSeries(times, real)) == pytest.approx(
        1e10, rel=1e-6)


# -- windowed extremum certificate -----------------------------------------------


def test_razumikhin_constant_trajectory_is_clean():
    times = np.linspace(0.0, 10.0, 101)
    states = np.full((101, 1), 0.7)
    derivs = np.zeros((101, 1))
    traj = synthetic_trajectory(times, states, derivs,
                                HistoryFunction.constant([0.7], 1.0))
    report = razumikhin_certificate(traj, window=1.0)
    assert report.violation_count == 0
    assert float(np.max(report.upper)) == pytest.approx(0.7)
    assert float(np.min(report.lower)) == pytest.approx(0.7)


def test_razumikhin_single_spike_is_one_violation():
    times = np.linspace(0.0, 10.0, 101)
    states = np.zeros((101, 1))
    states[50, 0] = 1.0
    derivs = np.zeros((101, 1))
    traj = synthetic_trajectory(times, states, derivs,
                                HistoryFunction.constant([0.0], 1.0))
    report = razumikhin_certificate(traj, window=1.0)
    # The windowed max jumps 0 -> 1 at exactly one node pair; the later
    # drop back to 0 is allowed, and the windowed min never moves.
    assert report.violation_count == 1
    when, size = report.violations[0]
    assert when == pytest.approx(5.0)
    assert size == pytest.approx(1.0)
    relaxed = razumikhin_certificate(traj, window=1.0, slack=2.0)
    assert relaxed.violation_count == 0


def test_razumikhin_validation():
    times = np.linspace(0.0, 2.0, 21)
    states = np.zeros((21, 1))
    traj = synthetic_trajectory(times, states, states,
                                HistoryFunction.constant([0.0], 1.0))
    with pytest.raises(ValueError, match="positive"):
        razumikhin_certificate(traj, window=0.0)
    with pytest.raises(ValueError, match="longer"):
        razumikhin_certificate(traj, window=2.5)


# -- convergence detection --------------------------------------------------------


def test_convergence_check_constant_trajectory():
    times = np.linspace(0.0, 10.0, 101)
    states = np.full((101, 2), 1.25)
    derivs = np.zeros((101, 2))
    traj = synthetic_trajectory(times, states, derivs,
                                HistoryFunction.constant([1.25, 1.25], 2.0))
    verdict = convergence_check(traj, tol=1e-3, window=1.0)
    assert verdict.converged
    assert verdict.alpha == pytest.approx(1.25, abs=1e-14)
    assert verdict.time == pytest.approx(0.0)


def test_convergence_check_rejects_steady_drift():
    # x(t) = t keeps a unit spread over any unit window and a moving mean.
    times = np.linspace(0.0, 10.0, 101)
    states = times.reshape(-1, 1)
    derivs = np.ones((101, 1))
    traj = synthetic_trajectory(times, states, derivs,
                                HistoryFunction.affine([0.0], [1.0], 2.0))
    verdict = convergence_check(traj, tol=1e-3, window=1.0)
    assert verdict == (False, None, None)


def test_convergence_check_validation():
    times = np.linspace(0.0, 2.0, 21)
    states = np.zeros((21, 1))
    traj = synthetic_trajectory(times, states, states,
                                HistoryFunction.constant([0.0], 1.0))
    with pytest.raises(ValueError, match="window"):
        convergence_check(traj, tol=1e-3, window=-1.0)
    with pytest.raises(ValueError, match="tol"):
        convergence_check(traj, tol=0.0, window=1.0)
    with pytest.raises(ValueError, match="longer"):
        convergence_check(traj, tol=1e-3, window=3.0)


# -- conserved first integral ------------------------------------------------------


def test_conserved_quantity_on_equilibrium():
    # Q = alpha (n + sum_k h_k 1.F_k 1) = 2 alpha for the scalar paradigm.
    times = np.linspace(0.0, 10.0, 101)
    states = np.full((101, 1), 0.6)
    derivs = np.zeros((101, 1))
    traj = synthetic_trajectory(times, states, derivs,
                                HistoryFunction.constant([0.6], 1.0))
    series = conserved_quantity(scalar_system(), [1.0], traj)
    assert series.values[0] == pytest.approx(1.2, abs=1e-13)
    assert series.drift <= 1e-13


def test_conserved_quantity_scalar_run():
    history = HistoryFunction.affine([1.0], [1.0], 1.0)
    result = integrate(scalar_system(), (DelayProfile.constant(1.0),), history,
                       IntegrationConfig(step=1e-2, t_end=50.0))
    series = conserved_quantity(scalar_system(), [1.0], result.trajectory)
    assert series.values[0] == pytest.approx(1.5, abs=1e-12)
    assert series.drift <= 1e-8


def test_conserved_quantity_two_node_run():
    system = two_node_system()
    history = HistoryFunction.constant([1.0, 0.0], 1.0)
    result = integrate(system,
                       (DelayProfile.constant(1.0), DelayProfile.constant(1.0)),
                       history, IntegrationConfig(step=1e-2, t_end=40.0))
    series = conserved_quantity(system, [1.0, 1.0], result.trajectory)
    assert series.values[0] == pytest.approx(2.0, abs=1e-12)
    assert series.drift <= 1e-8


def test_conserved_quantity_validation():
    times = np.linspace(0.0, 2.0, 21)
    states = np.zeros((21, 1))
    traj = synthetic_trajectory(times, states, states,
                                HistoryFunction.constant([0.0], 0.5))
    with pytest.raises(ValueError, match="delays"):
        conserved_quantity(scalar_system(), [1.0, 1.0], traj)
    with pytest.raises(ValueError, match="nonnegative"):
        conserved_quantity(scalar_system(), [-1.0], traj)
    with pytest.raises(ValueError, match="history"):
        conserved_quantity(scalar_system(), [1.0], traj)


# -- diagonal Drazin inverse -------------------------------------------------------


def test_drazin_inverse_diagonal_cases():
    out = drazin_inverse_diagonal(np.diag([2.0, 0.0]))
    assert np.array_equal(out, np.diag([0.5, 0.0]))
    assert np.array_equal(drazin_inverse_diagonal(np.eye(3)), np.eye(3))
    assert np.array_equal(drazin_inverse_diagonal(np.zeros((2, 2))),
                          np.zeros((2, 2)))
    with pytest.raises(ValueError, match="diagonal"):
        drazin_inverse_diagonal(np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(ValueError, match="square"):
        drazin_inverse_diagonal(np.ones((2, 3)))


# -- semistability conditions ------------------------------------------------------


def test_conditions_pass_for_split_weights(rng):
    """Channel-indicator weights satisfy all four conditions everywhere.

    P_1 = diag(1, 0) projects onto the component fed by channel one and
    P_2 = diag(0, 1) onto the other, so the image condition is exact, the
    coupling and drift quadratic forms coincide with f.Pf, and mass balance
    is the zero-column-sum structure.
    """
    system = two_node_system()
    weights = (np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    samples = rng.uniform(-2.0, 2.0, size=(1000, 2))
    cert = semistability_conditions(system, weights, samples)
    assert cert.passed
    assert cert.first_violation is None
    assert cert.sample_count == 1000
    assert cert.results.shape == (1000, 4)
    assert cert.results.all()


def test_conditions_flag_inflated_weight():
    # Doubling P_1 breaks the coupling bound at x = (0, 1):
    # g_1 = (1, 0) gives g.P_1 g = 2 while f = (0, -1) gives f.Pf = 1.
    system = two_node_system()
    weights = (np.diag([2.0, 0.0]), np.diag([0.0, 1.0]))
    samples = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
    cert = semistability_conditions(system, weights, samples)
    assert not cert.passed
    assert cert.first_violation == ("coupling_bound", 1)
    assert not cert.coupling_bound
    assert cert.image_condition and cert.drift_bound and cert.mass_balance
    expected = np.array([[True, True, True, True],
                         [True, False, True, True],
                         [True, True, True, True]])
    assert np.array_equal(cert.results, expected)


def test_conditions_trivial_at_origin():
    system = two_node_system()
    weights = (np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    cert = semistability_conditions(system, weights, np.zeros((1, 2)))
    assert cert.passed


def test_conditions_validation():
    system = two_node_system()
    good = (np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    with pytest.raises(ValueError, match="weight"):
        semistability_conditions(system, good[:1], np.zeros((1, 2)))
    with pytest.raises(ValueError, match="nonnegative"):
        semistability_conditions(system, (np.diag([-1.0, 0.0]), good[1]),
                                 np.zeros((1, 2)))
    with pytest.raises(ValueError, match="positive definite"):
        semistability_conditions(system, (np.diag([1.0, 0.0]),) * 2,
                                 np.zeros((1, 2)))
    with pytest.raises(ValueError, match="diagonal"):
        semistability_conditions(system, (np.ones((2, 2)), good[1]),
                                 np.zeros((1, 2)))
    with pytest.raises(ValueError, match="dimension"):
        semistability_conditions(system, good, np.zeros((1, 3)))


# -- seeded sweep ------------------------------------------------------------------


def test_sweep_linear_constant_delays():
    system = two_node_system()
    profiles = (DelayProfile.constant(1.0), DelayProfile.constant(1.0))
    config = IntegrationConfig(step=1e-2, t_end=40.0)
    report = semistability_sweep(system, profiles, config, count=6,
                                 amplitude=1.0, seed=42)
    assert report.converged_count == 6
    assert report.distinct_limits() >= 2
    assert report.max_excursion_ratio <= 1.0 + 1e-6
    for run in report.runs:
        assert run.error is None
        assert abs(run.alpha - run.predicted) <= 1e-9


def test_sweep_cubic_constant_delays():
    system = two_node_system("cubic")
    profiles = (DelayProfile.constant(1.0), DelayProfile.constant(1.0))
    config = IntegrationConfig(step=1e-2, t_end=120.0)
    report = semistability_sweep(system, profiles, config, count=4,
                                 amplitude=2.0, seed=5)
    assert report.converged_count == 4
    assert report.max_excursion_ratio <= 1.0 + 1e-6
    for run in report.runs:
        assert abs(run.alpha - run.predicted) <= 1e-3


def test_sweep_is_deterministic():
    system = two_node_system()
    profiles = (DelayProfile.constant(1.0), DelayProfile.constant(1.0))
    config = IntegrationConfig(step=5e-2, t_end=30.0)
    first = semistability_sweep(system, profiles, config, count=3,
                                amplitude=1.5, seed=9)
    second = semistability_sweep(system, profiles, config, count=3,
                                 amplitude=1.5, seed=9)
    for a, b in zip(first.runs, second.runs):
        assert np.array_equal(a.history_value, b.history_value)
        assert a.alpha == b.alpha
        assert a.excursion_ratio == b.excursion_ratio


def test_sweep_records_per_run_failures():
    # One fixed-point pass cannot converge when a channel reads inside the
    # current step, so every run must fail and be recorded, not raised.
    system = two_node_system()
    profiles = (DelayProfile.constant(1.0),
                DelayProfile.builtin("exp_approach", 1.0))
    config = IntegrationConfig(step=0.5, t_end=10.0, max_fixed_point_iters=1)
    report = semistability_sweep(system, profiles, config, count=2,
                                 amplitude=1.0, seed=3)
    assert report.converged_count == 0
    assert all(run.error is not None for run in report.runs)
    assert math.isnan(report.max_excursion_ratio)
    assert report.distinct_limits() == 0


def test_sweep_validation():
    system = two_node_system()
    profiles = (DelayProfile.constant(1.0), DelayProfile.constant(1.0))
    config = IntegrationConfig(step=0.1, t_end=5.0)
    with pytest.raises(ValueError, match="count"):
        semistability_sweep(system, profiles, config, count=1, amplitude=1.0,
                            seed=0)
    with pytest.raises(ValueError, match="amplitude"):
        semistability_sweep(system, profiles, config, count=2, amplitude=0.0,
                            seed=0)
    with pytest.raises(ValueError, match="profiles"):
        semistability_sweep(system, profiles[:1], config, count=2,
                            amplitude=1.0, seed=0)


# -- aggregated report -------------------------------------------------------------


def test_analyze_run_scalar_time_varying():
    system = scalar_system()
    profiles = (DelayProfile.builtin("sin_shift", 1.0),)
    history = HistoryFunction.affine([1.0], [1.0], 1.0)
    result = integrate(system, profiles, history,
                       IntegrationConfig(step=1e-2, t_end=60.0))
    report = analyze_run(system, profiles, history, result, name="scalar_tv")
    assert report.name == "scalar_tv"
    assert report.dimension == 1 and report.channels == 1
    assert report.alpha_predicted == pytest.approx(0.75, abs=1e-14)
    assert report.converged
    assert report.alpha_observed is not None
    assert report.alpha_gap == abs(report.alpha_observed - 0.75)
    assert report.razumikhin.violation_count == 0
    assert report.conserved is not None
    assert any("time-varying" in note for note in report.notes)


def test_analyze_run_unbalanced_coupling_has_no_integral():
    net = ConsensusNetwork(n=2, links=(Link(0, 1, 2.0, 0), Link(1, 0, 1.0, 1)),
                           m=2)
    system = SystemRHS.linear(build_system_matrices(net))
    profiles = (DelayProfile.constant(1.0), DelayProfile.constant(1.0))
    history = HistoryFunction.constant([1.0, 0.0], 1.0)
    result = integrate(system, profiles, history,
                       IntegrationConfig(step=1e-2, t_end=30.0))
    report = analyze_run(system, profiles, history, result)
    assert report.conserved is None
    assert any("column sums" in note for note in report.notes)


def test_report_text_layout():
    system = scalar_system()
    profiles = (DelayProfile.constant(1.0),)
    history = HistoryFunction.constant([1.0], 1.0)
    result = integrate(system, profiles, history,
                       IntegrationConfig(step=0.05, t_end=5.0))
    report = analyze_run(system, profiles, history, result, name="hold")
    text = report.to_text()
    lines = [line for line in text.splitlines() if not line.startswith("note")]
    keys = [line.split(" = ")[0] for line in lines]
    assert keys == ["name", "dimension", "channels", "converged",
                    "alpha_predicted", "alpha_observed", "alpha_gap",
                    "convergence_time", "residual_first_decade_mean",
                    "residual_final_decade_mean", "residual_decay_factor",
                    "razumikhin_window", "razumikhin_slack",
                    "razumikhin_violations", "conservation_q0",
                    "conservation_drift"]
    assert "name = hold" in text
    assert "converged = true" in text
    assert text.endswith("\n")


def test_report_write_outputs(tmp_path):
    system = scalar_system()
    profiles = (DelayProfile.constant(1.0),)
    history = HistoryFunction.constant([1.0], 1.0)
    result = integrate(system, profiles, history,
                       IntegrationConfig(step=0.05, t_end=5.0))
    report = analyze_run(system, profiles, history, result, name="hold")
    report.write(tmp_path, every=5)
    for name in ("report.txt", "residual.csv", "extrema.csv", "conserved.csv"):
        assert (tmp_path / name).is_file()
    residual = (tmp_path / "residual.csv").read_bytes()
    assert residual.startswith(b"t,residual_norm\n")
    assert b"\r" not in residual
    # Thinning must still keep the final node.
    last = residual.decode().strip().splitlines()[-1]
    assert float(last.split(",")[0]) == 5.0
