import numpy as np
import pytest

from delaylab import (DelayProfile, HistoryFunction, IntegrationConfig,
                      SystemRHS, analyze_run, integrate,
                      integrate_euler_reference)


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # Compile the jit kernels once up front so tests with runtime budgets
    # measure numerics, not compilation.
    system = SystemRHS.neutral(1)
    profiles = (DelayProfile.builtin("sin_shift", 0.5),)
    history = HistoryFunction.affine([1.0], [1.0], 0.5)
    config = IntegrationConfig(step=0.05, t_end=1.5)
    result = integrate(system, profiles, history, config)
    analyze_run(system, profiles, history, result)
    integrate_euler_reference(system, profiles, history, step=0.05, t_end=0.5)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260814)
