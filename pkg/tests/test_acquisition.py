import numpy as np
import pytest

from wmsurface.acquisition import cap_history, primer_sequence, propose_next
from wmsurface.domain import (
    ConfigurationError,
    FeasibilityConstraints,
    StimulusParams,
    TrialOutcome,
    scale_k,
    scale_l,
)
from wmsurface.gp import PosteriorGrid, binary_entropy


def make_grid(p_fn):
    l_axis = np.linspace(1, 16, 121)
    k_axis = np.linspace(1, 8, 61)
    ll, kk = np.meshgrid(l_axis, k_axis, indexing="ij")
    p = p_fn(ll, kk)
    return PosteriorGrid(l_axis=l_axis, k_axis=k_axis, p=p, entropy=binary_entropy(p))


def primer_history():
    return [
        TrialOutcome(StimulusParams(1, 1), True, False, 0),
        TrialOutcome(StimulusParams(3, 3), True, False, 1),
    ]


class TestPrimerSequence:
    def test_fixed_pair(self):
        assert [(p.L, p.K) for p in primer_sequence()] == [(1, 1), (3, 3)]

    def test_feasible(self):
        assert all(p.is_feasible for p in primer_sequence())

    def test_replay_identical(self):
        assert primer_sequence() == primer_sequence()


class TestCapHistory:
    def test_real_trials_count(self):
        pts = cap_history(primer_history())
        assert StimulusParams(3, 3) in pts

    def test_feasible_phantoms_count_infeasible_do_not(self):
        hist = primer_history() + [
            TrialOutcome(StimulusParams(4, 4), True, True, -1),  # primer-encoding
            TrialOutcome(StimulusParams(2, 5), True, True, -2),  # off-task coords
        ]
        pts = cap_history(hist)
        assert StimulusParams(4, 4) in pts
        assert StimulusParams(2, 5) not in pts


class TestProposeNext:
    def test_uniform_grid_prefers_far_point_under_cap(self):
        # all entropies tie; tie-break favors the point farthest from the
        # primers, whose snap under the +2 cap is (5, 5)
        grid = make_grid(lambda ll, kk: np.full_like(ll, 0.5))
        got = propose_next(grid, primer_history(), FeasibilityConstraints())
        assert got == StimulusParams(5, 5)

    def test_unique_peak_within_cap(self):
        grid = make_grid(
            lambda ll, kk: 0.5 + 0.4 * np.tanh(0.8 * (np.abs(ll - 6.0) + np.abs(kk - 2.0)))
        )
        hist = [
            TrialOutcome(StimulusParams(5, 3), True, False, 0),
            TrialOutcome(StimulusParams(1, 1), True, False, 1),
        ]
        assert propose_next(grid, hist, FeasibilityConstraints()) == StimulusParams(6, 2)

    def test_peak_beyond_cap_snaps_back(self):
        grid = make_grid(
            lambda ll, kk: 0.5 + 0.4 * np.tanh(0.8 * (np.abs(ll - 12.0) + np.abs(kk - 2.0)))
        )
        hist = [
            TrialOutcome(StimulusParams(5, 3), True, False, 0),
            TrialOutcome(StimulusParams(1, 1), True, False, 1),
        ]
        assert propose_next(grid, hist, FeasibilityConstraints()) == StimulusParams(7, 2)

    def test_feasibility_always_holds(self):
        grid = make_grid(lambda ll, kk: 1.0 / (1.0 + np.exp(ll - 4.0)))
        c = FeasibilityConstraints()
        got = propose_next(grid, primer_history(), c)
        assert c.contains(got.L, got.K)
        assert got.L <= 5 and got.K <= 5

    def test_anti_repeat_passes_over_previous_trial(self):
        # uniform entropy: every feasible point ties, so the proposal must
        # not repeat the immediately preceding trial
        grid = make_grid(lambda ll, kk: np.full_like(ll, 0.5))
        c = FeasibilityConstraints()
        hist = primer_history()
        last = propose_next(grid, hist, c)  # (5, 5) per the uniform case
        hist = hist + [TrialOutcome(last, True, False, 2)]
        got = propose_next(grid, hist, c)
        assert got != last

    def test_empty_feasible_grid_rejected(self):
        grid = make_grid(lambda ll, kk: np.full_like(ll, 0.5))
        c = FeasibilityConstraints(polygon_mask=[(0.1, 0.1), (0.3, 0.1), (0.3, 0.3)])
        with pytest.raises(ConfigurationError):
            propose_next(grid, primer_history(), c)

    def test_decreases_never_blocked(self):
        # peak far below history maxima: proposal follows it freely
        grid = make_grid(
            lambda ll, kk: 0.5 + 0.4 * np.tanh(0.8 * (np.abs(ll - 2.0) + np.abs(kk - 1.0)))
        )
        hist = [
            TrialOutcome(StimulusParams(12, 6), True, False, 0),
            TrialOutcome(StimulusParams(11, 5), True, False, 1),
        ]
        assert propose_next(grid, hist, FeasibilityConstraints()) == StimulusParams(2, 1)
