import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from wmsurface.domain import (
    ConfigurationError,
    DomainError,
    FeasibilityConstraints,
    Mode,
    SessionRecord,
    StimulusParams,
    TrialOutcome,
    classic_constraints,
    scale_k,
    scale_l,
    snap_to_feasible,
    unscale_k,
    unscale_l,
)


def brute_force_snap(point, constraints, history):
    """Independent oracle: exhaustive scan of the capped feasible lattice
    minimizing scaled Euclidean distance, ties by smaller L then K."""
    if history:
        cap_l = max(p.L for p in history) + constraints.step_cap
        cap_k = max(p.K for p in history) + constraints.step_cap
    else:
        cap_l, cap_k = 16, 8
    sl, sk = scale_l(point[0]), scale_k(point[1])
    best = None
    for l in range(1, 17):
        for k in range(1, 9):
            if l > cap_l or k > cap_k or not constraints.contains(l, k):
                continue
            d = (scale_l(l) - sl) ** 2 + (scale_k(k) - sk) ** 2
            key = (d, l, k)
            if best is None or key < best:
                best = key
    return StimulusParams(best[1], best[2])


class TestScaling:
    def test_endpoints(self):
        assert scale_l(1) == 0.0 and scale_l(16) == 1.0
        assert scale_k(1) == 0.0 and scale_k(8) == 1.0

    @given(st.integers(1, 16), st.integers(1, 8))
    def test_round_trip(self, l, k):
        assert math.isclose(unscale_l(scale_l(l)), l, abs_tol=1e-12)
        assert math.isclose(unscale_k(scale_k(k)), k, abs_tol=1e-12)


class TestStimulusParams:
    def test_bounds_enforced(self):
        with pytest.raises(DomainError):
            StimulusParams(0, 1)
        with pytest.raises(DomainError):
            StimulusParams(17, 1)
        with pytest.raises(DomainError):
            StimulusParams(5, 9)

    def test_feasibility_flag(self):
        assert StimulusParams(5, 3).is_feasible
        assert not StimulusParams(2, 4).is_feasible
        # the classic-mode start point violates K <= L but is constructible
        assert not StimulusParams(1, 3).is_feasible

    def test_round_trip(self):
        p = StimulusParams(7, 4)
        assert StimulusParams.from_dict(p.to_dict()) == p


class TestConstraints:
    def test_default_mask_encodes_k_le_l(self):
        c = FeasibilityConstraints()
        assert c.contains(5, 5) and c.contains(16, 8) and c.contains(1, 1)
        assert not c.contains(3, 4)

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            FeasibilityConstraints(step_cap=-1)
        with pytest.raises(ConfigurationError):
            FeasibilityConstraints(polygon_mask=[(1, 1), (2, 2)])

    def test_classic_band(self):
        c = classic_constraints()
        assert c.contains(1, 3) and c.contains(16, 3)
        assert not c.contains(5, 2) and not c.contains(5, 4)

    def test_round_trip(self):
        c = FeasibilityConstraints(step_cap=3)
        assert FeasibilityConstraints.from_dict(c.to_dict()).step_cap == 3


class TestSnapToFeasible:
    def test_cap_binds_high_proposal(self):
        # history max L = 5, K = 3, cap 2: (9.4, 3.2) pulls back to (7, 3)
        c = FeasibilityConstraints()
        hist = [StimulusParams(5, 3), StimulusParams(1, 1)]
        assert snap_to_feasible((9.4, 3.2), c, hist) == StimulusParams(7, 3)

    def test_already_feasible_passes_through(self):
        c = FeasibilityConstraints()
        hist = [StimulusParams(5, 5)]
        assert snap_to_feasible((3.0, 3.0), c, hist) == StimulusParams(3, 3)

    def test_mask_violation_matches_brute_force(self):
        c = FeasibilityConstraints()
        hist = [StimulusParams(5, 5)]
        got = snap_to_feasible((2.0, 4.0), c, hist)
        assert got == brute_force_snap((2.0, 4.0), c, hist)

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(-2, 20, allow_nan=False),
        st.floats(-2, 12, allow_nan=False),
        st.integers(1, 16),
        st.integers(1, 8),
    )
    def test_oracle_and_invariants(self, l, k, hl, hk):
        c = FeasibilityConstraints()
        hist = [StimulusParams(hl, max(1, min(hk, hl))), StimulusParams(1, 1)]
        got = snap_to_feasible((l, k), c, hist)
        assert got == brute_force_snap((l, k), c, hist)
        # integrality, mask, bounds, cap
        assert c.contains(got.L, got.K)
        assert got.L <= max(p.L for p in hist) + c.step_cap
        assert got.K <= max(p.K for p in hist) + c.step_cap
        # idempotence
        assert snap_to_feasible((got.L, got.K), c, hist) == got

    def test_non_finite_rejected(self):
        with pytest.raises(DomainError):
            snap_to_feasible((float("nan"), 3.0), FeasibilityConstraints(), [StimulusParams(3, 3)])

    def test_empty_lattice_rejected(self):
        c = FeasibilityConstraints(polygon_mask=[(0.1, 0.1), (0.2, 0.1), (0.2, 0.2)])
        with pytest.raises(ConfigurationError):
            snap_to_feasible((5, 5), c, [StimulusParams(5, 5)])


class TestSessionRecord:
    def test_json_field_names(self):
        rec = SessionRecord(
            session_id="abc",
            mode=Mode.ADAPTIVE,
            seed=7,
            constraints=FeasibilityConstraints(),
            outcomes=[TrialOutcome(StimulusParams(1, 1), True, False, 0)],
        )
        d = json.loads(rec.to_json())
        assert set(d) == {
            "session_id",
            "mode",
            "seed",
            "constraints",
            "outcomes",
            "posterior_snapshots",
            "hyperparameters",
        }

    def test_round_trip(self):
        rec = SessionRecord(
            session_id="abc",
            mode=Mode.CLASSIC,
            seed=7,
            constraints=classic_constraints(),
            outcomes=[
                TrialOutcome(StimulusParams(1, 3), True, False, 0),
                TrialOutcome(StimulusParams(2, 3), False, True, -1),
            ],
        )
        back = SessionRecord.from_json(rec.to_json())
        assert back.to_dict() == rec.to_dict()
