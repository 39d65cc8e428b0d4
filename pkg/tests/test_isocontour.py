import json

import numpy as np
import pytest

from wmsurface.domain import DomainError, FeasibilityConstraints, StimulusParams, TrialOutcome
from wmsurface.gp import PosteriorGrid, binary_entropy, predict_grid
from wmsurface.isocontour import (
    CurveSource,
    ThresholdCurve,
    adaptive_threshold_at_k,
    band_curves,
    default_boundary_phantoms,
    extract_isocontour,
    monotonicity_phantoms,
    standardize_posterior,
)

from conftest import make_outcomes


def unit_grid(p_of_lk):
    l_axis = np.arange(1.0, 17.0)
    k_axis = np.arange(1.0, 9.0)
    ll, kk = np.meshgrid(l_axis, k_axis, indexing="ij")
    p = p_of_lk(ll, kk)
    return PosteriorGrid(l_axis=l_axis, k_axis=k_axis, p=p, entropy=binary_entropy(p))


class TestExtraction:
    def test_linear_interpolation_arithmetic(self):
        # p = 1.0 at L = 3, 0.4 at L = 4 on a unit grid -> 3 + 0.5/0.6
        def p_fn(ll, kk):
            return np.where(ll <= 3, 1.0, np.where(ll == 4, 0.4, 0.1))

        curve = extract_isocontour(unit_grid(p_fn))
        for k in (1, 2, 3):
            assert curve.psi_by_k[k] == pytest.approx(3 + 0.5 / 0.6, abs=1e-12)

    def test_never_crossing_is_absent(self):
        curve = extract_isocontour(unit_grid(lambda ll, kk: np.full_like(ll, 0.9)))
        assert curve.psi_by_k == {}

    def test_below_level_at_start_is_absent(self):
        # p < 0.5 from the lowest feasible L (= K) upward at high K
        def p_fn(ll, kk):
            return 1.0 / (1.0 + np.exp(ll - 4.0))

        curve = extract_isocontour(unit_grid(p_fn))
        assert 8 not in curve.psi_by_k and 1 in curve.psi_by_k

    def test_analytic_logistic_oracle(self):
        l_axis = np.linspace(1, 16, 121)
        k_axis = np.linspace(1, 8, 61)
        ll, kk = np.meshgrid(l_axis, k_axis, indexing="ij")
        p = 1.0 / (1.0 + np.exp(ll - 6.0))
        grid = PosteriorGrid(l_axis=l_axis, k_axis=k_axis, p=p, entropy=binary_entropy(p))
        curve = extract_isocontour(grid)
        for k in (1, 2, 3, 4, 5):
            assert abs(curve.psi_by_k[k] - 6.0) <= 0.125  # one grid cell

    def test_affine_exactness(self):
        # p affine in L: extracted crossing equals the analytic crossing
        def p_fn(ll, kk):
            return np.clip(1.0 - (ll - 1.0) / 10.0, 0.0, 1.0)  # crosses 0.5 at L = 6

        curve = extract_isocontour(unit_grid(p_fn))
        assert curve.psi_by_k[1] == pytest.approx(6.0, abs=1e-12)

    def test_first_crossing_on_nonmonotone_profile(self):
        def p_fn(ll, kk):
            return np.where(ll <= 4, 0.8, np.where(ll <= 8, 0.3, 0.7))

        curve = extract_isocontour(unit_grid(p_fn))
        assert 4.0 <= curve.psi_by_k[1] <= 5.0


class TestThresholdCurve:
    def test_lookup_and_bounds(self):
        curve = ThresholdCurve(psi_by_k={3: 7.5})
        assert adaptive_threshold_at_k(curve, 3) == 7.5
        assert adaptive_threshold_at_k(curve, 4) is None
        with pytest.raises(DomainError):
            adaptive_threshold_at_k(curve, 9)

    def test_json_round_trip(self):
        curve = ThresholdCurve(psi_by_k={1: 9.0, 3: 7.5}, source=CurveSource.CLASSIC_LOGISTIC)
        d = curve.to_dict()
        assert {p["K"] for p in d["points"]} == set(range(1, 9))
        back = ThresholdCurve.from_dict(d)
        assert back.psi_by_k == curve.psi_by_k and back.source == curve.source


class TestPhantoms:
    def test_boundary_set(self):
        phs = default_boundary_phantoms()
        assert [(p.params.L, p.params.K, p.passed) for p in phs] == [
            (1, 1, True),
            (16, 8, False),
        ]
        assert all(p.phantom for p in phs)

    def test_monotonicity_inserted_when_passes_exceed_fails(self):
        outs = make_outcomes([(3, 2, 1), (4, 2, 1), (5, 2, 1), (6, 2, 0)])
        phs = monotonicity_phantoms(outs)
        assert [(p.params.L, p.params.K) for p in phs] == [(2, 2)]
        assert all(p.passed and p.phantom for p in phs)

    def test_no_phantoms_on_balance(self):
        outs = make_outcomes([(3, 2, 1), (5, 2, 0)])
        assert monotonicity_phantoms(outs) == []

    def test_alternative_column_reading(self):
        outs = make_outcomes([(4, 3, 1), (5, 3, 1), (6, 3, 0)])
        phs = monotonicity_phantoms(outs, reading="low_k")
        assert [(p.params.L, p.params.K) for p in phs] == [(3, 1), (3, 2), (3, 3)]


class TestStandardize:
    def test_refit_deterministic(self, fast_config):
        outs = make_outcomes([(1, 1, 1), (3, 3, 1), (7, 3, 0), (5, 2, 1), (6, 3, 0)])
        c = FeasibilityConstraints()
        g1 = predict_grid(standardize_posterior(outs, c, fast_config))
        g2 = predict_grid(standardize_posterior(outs, c, fast_config))
        assert json.dumps(g1.to_dict()) == json.dumps(g2.to_dict())

    def test_no_duplicate_coordinate_label_pairs(self, fast_config):
        # a real pass at (1, 1) already exists; the boundary phantom there
        # must not be double-inserted
        outs = make_outcomes([(1, 1, 1), (7, 3, 0), (6, 3, 1)])
        state = standardize_posterior(outs, FeasibilityConstraints(), fast_config)
        keys = [(o.params.L, o.params.K, o.passed) for o in state.outcomes]
        assert len(keys) == len(set(keys))

    def test_observed_labels_preserved(self, fast_config):
        outs = make_outcomes([(1, 1, 1), (7, 3, 0), (6, 3, 1)])
        state = standardize_posterior(outs, FeasibilityConstraints(), fast_config)
        real = [(o.params.L, o.params.K, o.passed) for o in state.outcomes if not o.phantom]
        assert set(real) == {(1, 1, True), (7, 3, False), (6, 3, True)}

    def test_empty_rejected(self, fast_config):
        with pytest.raises(DomainError):
            standardize_posterior([], FeasibilityConstraints(), fast_config)

    def test_phantom_inputs_ignored_as_observations(self, fast_config):
        outs = make_outcomes([(1, 1, 1), (7, 3, 0)]) + [
            TrialOutcome(StimulusParams(5, 5), True, True, -7)
        ]
        state = standardize_posterior(outs, FeasibilityConstraints(), fast_config)
        real = [o for o in state.outcomes if not o.phantom]
        assert len(real) == 2


class TestBands:
    def test_band_ordering_on_monotone_posterior(self):
        def p_fn(ll, kk):
            return 1.0 / (1.0 + np.exp((ll - 8.0) / 1.5))

        lo, hi = band_curves(unit_grid(p_fn))
        mid = extract_isocontour(unit_grid(p_fn))
        for k in mid.psi_by_k:
            if k in lo.psi_by_k and k in hi.psi_by_k:
                assert lo.psi_by_k[k] >= mid.psi_by_k[k] >= hi.psi_by_k[k]

    def test_sharp_posterior_band_width_shrinks(self):
        def sharp(ll, kk):
            return 1.0 / (1.0 + np.exp((ll - 8.0) / 0.05))

        def soft(ll, kk):
            return 1.0 / (1.0 + np.exp((ll - 8.0) / 2.0))

        lo_s, hi_s = band_curves(unit_grid(sharp))
        lo_w, hi_w = band_curves(unit_grid(soft))
        assert (lo_s.psi_by_k[1] - hi_s.psi_by_k[1]) < (lo_w.psi_by_k[1] - hi_w.psi_by_k[1])

    def test_invalid_levels_rejected(self):
        with pytest.raises(DomainError):
            band_curves(unit_grid(lambda ll, kk: np.full_like(ll, 0.5)), (0.7, 0.3))
