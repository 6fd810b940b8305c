import numpy as np
import pytest

from delaylab import (ConsensusNetwork, Link, SystemMatrices,
                      build_system_matrices, rank_deficiency,
                      validate_laplacian_structure)


def two_node(w12: float = 1.0, w21: float = 1.0) -> ConsensusNetwork:
    return ConsensusNetwork(n=2, links=(Link(0, 1, w12, 0), Link(1, 0, w21, 1)),
                            m=2)


def test_two_node_matrices():
    mats = build_system_matrices(two_node())
    assert np.array_equal(mats.E, np.diag([-1.0, -1.0]))
    assert np.array_equal(mats.F[0], [[0.0, 1.0], [0.0, 0.0]])
    assert np.array_equal(mats.F[1], [[0.0, 0.0], [1.0, 0.0]])
    # The drift cancels the coupling row sums by construction.
    assert np.array_equal(mats.total_coupling().sum(axis=1), [0.0, 0.0])


def test_link_validation():
    with pytest.raises(ValueError):
        ConsensusNetwork(n=2, links=(Link(0, 0, 1.0, 0),), m=1)
    with pytest.raises(ValueError):
        ConsensusNetwork(n=2, links=(Link(0, 2, 1.0, 0),), m=1)
    with pytest.raises(ValueError):
        ConsensusNetwork(n=2, links=(Link(0, 1, 1.0, 1),), m=1)
    with pytest.raises(ValueError):
        ConsensusNetwork(n=2, links=(Link(0, 1, -1.0, 0),), m=1)
    with pytest.raises(ValueError):
        ConsensusNetwork(n=2, links=(Link(0, 1, 1.0, 0), Link(0, 1, 2.0, 0)),
                         m=1)
    with pytest.raises(ValueError):
        ConsensusNetwork(n=2, links=(), m=1)


def test_balanced_network_passes_all_checks():
    report = validate_laplacian_structure(build_system_matrices(two_node()))
    assert report.all_pass()
    assert report.rank == 1


def test_unbalanced_weights_fail_column_sums():
    report = validate_laplacian_structure(
        build_system_matrices(two_node(w12=1.0, w21=2.0)))
    assert report.row_sums_zero
    assert not report.col_sums_zero
    assert not report.all_pass()


def test_disconnected_network_fails_rank():
    links = (Link(0, 1, 1.0, 0), Link(1, 0, 1.0, 0),
             Link(2, 3, 1.0, 0), Link(3, 2, 1.0, 0))
    net = ConsensusNetwork(n=4, links=links, m=1)
    report = validate_laplacian_structure(build_system_matrices(net))
    assert report.row_sums_zero and report.col_sums_zero
    assert not report.rank_is_n_minus_1
    assert report.rank == 2


def test_rank_deficiency_reference_cases():
    assert rank_deficiency(np.zeros((3, 3))) == 3
    assert rank_deficiency(np.eye(4)) == 0
    # Complete-graph Laplacian on 3 nodes.
    lap = 3.0 * np.eye(3) - np.ones((3, 3))
    assert rank_deficiency(lap) == 1
    # Path graph on 4 nodes.
    path = np.array([[1.0, -1.0, 0.0, 0.0], [-1.0, 2.0, -1.0, 0.0],
                     [0.0, -1.0, 2.0, -1.0], [0.0, 0.0, -1.0, 1.0]])
    assert rank_deficiency(path) == 1


def test_zero_channel_matrices_allowed():
    mats = SystemMatrices(E=np.array([[-1.0]]), F=np.zeros((0, 1, 1)))
    assert mats.n == 1
    assert mats.m == 0
    assert np.array_equal(mats.total_coupling(), [[-1.0]])
