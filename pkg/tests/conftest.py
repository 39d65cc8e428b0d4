import numpy as np
import pytest

from wmsurface.domain import StimulusParams, TrialOutcome
from wmsurface.gp import GPConfig


@pytest.fixture(scope="session")
def fast_config():
    """Reduced iteration budget for tests that exercise plumbing rather
    than fit quality."""
    return GPConfig(iterations=250, online_iterations=100)


def make_outcomes(points, start_index=0):
    """[(L, K, passed), ...] -> [TrialOutcome, ...]"""
    return [
        TrialOutcome(StimulusParams(l, k), bool(p), False, start_index + i)
        for i, (l, k, p) in enumerate(points)
    ]


def logistic_session(theta, n_trials, seed, k=3, sigma=1.0):
    """Random-L trials labeled by a logistic generator at fixed K."""
    rng = np.random.default_rng(seed)
    outs = []
    for i in range(n_trials):
        l = int(rng.integers(1, 17))
        p = 1.0 / (1.0 + np.exp((l - theta) / sigma))
        outs.append(TrialOutcome(StimulusParams(l, k), bool(rng.random() < p), False, i))
    return outs
