import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import (
    ALIGNED,
    BASE,
    MIRRORED,
    Q8,
    informative_signals,
    interior_beliefs,
    preferences,
    random_preferences,
    random_signal,
)
from modules.delegation import exante_delegation_payoff, optimal_payoff
from modules.design import (
    DesignRegime,
    H,
    best_binary_split,
    breakpoints,
    convexifiable,
    exante_pieces,
    h_piecewise,
    intermediate_slope,
    optimal_design,
    rho,
)
from modules.errors import AlignedPreferences, UnsortedPoints
from modules.model_core import BinarySignal, BlackwellConstraint, Scenario, expected_over_split


class TestRho:
    def test_base_prefs(self):
        assert rho(Q8, BASE) == pytest.approx(3 / 7, abs=1e-12)
        assert breakpoints(Q8, BASE) == pytest.approx((3 / 7, 12 / 13), abs=1e-12)

    def test_mirrored(self):
        assert rho(Q8, MIRRORED) == pytest.approx(0.8, abs=1e-12)
        assert breakpoints(Q8, MIRRORED) == pytest.approx((0.2, 0.8), abs=1e-12)

    def test_accurate_agent(self):
        assert rho(BinarySignal.symmetric(0.99), BASE) == pytest.approx(0.0075 / 0.255, abs=1e-12)

    def test_aligned(self):
        with pytest.raises(AlignedPreferences):
            rho(Q8, ALIGNED)

    def test_symmetric_breakpoints(self):
        low, high = breakpoints(Q8, MIRRORED)
        assert low + high == pytest.approx(1.0)


class TestSlope:
    def test_symmetric_is_flat(self):
        assert intermediate_slope(Q8, BASE) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("q0, q1, expected", [(0.9, 0.7, -0.2), (0.7, 0.9, 0.2)])
    def test_asymmetric(self, q0, q1, expected):
        assert intermediate_slope(BinarySignal(q0, q1), BASE) == pytest.approx(expected, abs=1e-12)

    @given(preferences(), informative_signals(), interior_beliefs)
    @settings(max_examples=300)
    def test_matches_finite_differences(self, prefs, signal, t):
        assume(not prefs.aligned)
        low, high = breakpoints(signal, prefs)
        assume(high - low > 1e-3)
        x = low + (high - low) * (0.1 + 0.8 * t)
        dx = 1e-6 * (high - low)
        slope = (exante_delegation_payoff(x + dx, signal, prefs)
                 - exante_delegation_payoff(x - dx, signal, prefs)) / (2 * dx)
        assert slope == pytest.approx(intermediate_slope(signal, prefs), abs=1e-6)


class TestH:
    @pytest.mark.parametrize("x, expected", [(0.5, 0.8), (0.9, 0.9), (3 / 7, 0.8), (0.1, 0.9)])
    def test_values(self, x, expected):
        h = h_piecewise(Q8, BASE)
        assert h(x) == pytest.approx(expected, abs=1e-12)
        assert H(x, Q8, BASE) == pytest.approx(expected, abs=1e-12)

    def test_base_geometry(self):
        h = h_piecewise(Q8, BASE)
        assert h.rho == pytest.approx(3 / 7)
        assert h.discontinuity.side == "left"
        assert h.discontinuity.limit == pytest.approx(4 / 7)
        assert h.jump_at_rho == pytest.approx(0.8 - 4 / 7)
        assert h.kinks() == pytest.approx([0.8])
        xs = np.linspace(3 / 7 + 1e-6, 0.8, 50)
        assert np.allclose(h.values(xs), 0.8)

    def test_mirrored_geometry(self):
        h = h_piecewise(Q8, MIRRORED)
        assert h.discontinuity.location == pytest.approx(0.8)
        assert h.discontinuity.side == "right"
        assert h.discontinuity.value == pytest.approx(0.71)
        assert h.discontinuity.limit == pytest.approx(0.55)
        assert h(0.3) == pytest.approx(0.95)
        assert h(0.6) == pytest.approx(0.77)

    def test_asymmetric_agent_slope(self):
        pieces = exante_pieces(BinarySignal(0.9, 0.7), BASE)
        low, high = breakpoints(BinarySignal(0.9, 0.7), BASE)
        mid = [p for p in pieces.pieces if p.lo == pytest.approx(low)][0]
        assert mid.hi == pytest.approx(high)
        assert mid.slope == pytest.approx(-0.2)

    def test_aligned_has_no_jump(self):
        h = h_piecewise(Q8, ALIGNED)
        assert h.discontinuity is None
        assert h.rho is None
        # an aligned informed agent is worth delegating to
        assert h(0.5) == pytest.approx(0.8)

    @given(preferences(), informative_signals(), interior_beliefs)
    @settings(max_examples=500)
    def test_closed_form_matches_pointwise(self, prefs, signal, x):
        h = h_piecewise(signal, prefs)
        assert h(x) == pytest.approx(optimal_payoff(x, signal, prefs), abs=1e-9)

    @given(preferences(), informative_signals())
    @settings(max_examples=200)
    def test_single_upward_jump(self, prefs, signal):
        assume(not prefs.aligned)
        h = h_piecewise(signal, prefs)
        for x in h.breakpoints:
            if x in (0.0, 1.0):
                continue
            left, right, value = h.limit(x, "left"), h.limit(x, "right"), h(x)
            assert value >= max(left, right) - 1e-9
            if abs(x - h.rho) > 1e-12:
                assert left == pytest.approx(right, abs=1e-9)


class TestConvexifiable:
    def test_examples(self):
        assert convexifiable((0.1, 0.9), (3 / 7, 0.8), (0.9, 0.9))
        assert not convexifiable((0.35, 0.65), (3 / 7, 0.8), (0.55, 0.8))
        assert convexifiable((0.5, 0.8), (3 / 7, 0.8), (0.55, 0.8))

    def test_unsorted(self):
        with pytest.raises(UnsortedPoints):
            convexifiable((0.9, 0.9), (3 / 7, 0.8), (0.1, 0.9))


class TestOptimalDesign:
    def test_maximal(self, scenario_b):
        design = optimal_design(scenario_b)
        assert design.regime is DesignRegime.MAXIMAL
        assert design.expected_payoff == pytest.approx(0.9, abs=1e-12)
        assert (design.low_posterior, design.high_posterior) == (0.1, 0.9)

    def test_one_sided_high(self, scenario_a):
        design = optimal_design(scenario_a)
        assert design.regime is DesignRegime.ONE_SIDED_HIGH
        assert design.low_posterior == pytest.approx(3 / 7, abs=1e-12)
        assert design.high_posterior == 0.55
        assert design.expected_payoff == pytest.approx(0.8, abs=1e-12)
        assert design.signal.t0 == pytest.approx(0.470588, abs=1e-6)
        assert design.signal.t1 == pytest.approx(0.647059, abs=1e-6)
        assert design.h_values["rho"] == pytest.approx(0.8)
        assert not design.convexifiable

    def test_uninformative_at_rho(self, scenario_a):
        design = optimal_design(scenario_a.with_prior(3 / 7))
        assert design.regime is DesignRegime.UNINFORMATIVE
        assert design.expected_payoff == pytest.approx(0.8, abs=1e-12)

    def test_one_sided_low_when_rho_above_principal_cutoff(self, scenario_mirrored):
        design = optimal_design(scenario_mirrored)
        assert design.regime is DesignRegime.ONE_SIDED_LOW
        assert (design.low_posterior, design.high_posterior) == pytest.approx((0.3, 0.8))
        assert design.expected_payoff == pytest.approx(0.854, abs=1e-12)

    def test_mirrored_maximal(self):
        design = optimal_design(Scenario(0.5, MIRRORED, Q8, BlackwellConstraint(0.1, 0.9)))
        assert design.regime is DesignRegime.MAXIMAL
        assert design.expected_payoff == pytest.approx(0.9, abs=1e-12)

    def test_aligned(self):
        design = optimal_design(Scenario(0.5, ALIGNED, Q8, BlackwellConstraint(0.35, 0.55)))
        assert design.regime is DesignRegime.ALIGNED_TRIVIAL
        assert design.expected_payoff == pytest.approx(0.8)

    def test_degenerate_prior(self):
        design = optimal_design(Scenario(1.0, BASE, Q8, BlackwellConstraint(0.5, 1.0)))
        assert design.regime is DesignRegime.UNINFORMATIVE
        assert design.expected_payoff == pytest.approx(1.0)

    @given(preferences(), informative_signals(), interior_beliefs, interior_beliefs, interior_beliefs)
    @settings(max_examples=200)
    def test_beats_every_candidate_split(self, prefs, signal, prior, a, b):
        lo, hi = prior * a, prior + (1 - prior) * b
        scenario = Scenario(prior, prefs, signal, BlackwellConstraint(lo, hi))
        design = optimal_design(scenario)
        h = h_piecewise(signal, prefs)
        points = [lo, hi, prior] + [x for x in h.breakpoints if lo <= x <= hi]
        _, _, best = best_binary_split(h, prior, points)
        assert design.expected_payoff >= best - 1e-12

    @given(preferences(), informative_signals(), interior_beliefs, interior_beliefs, interior_beliefs)
    @settings(max_examples=300)
    def test_one_sided_strictly_beats_maximal(self, prefs, signal, prior, a, b):
        lo, hi = prior * a, prior + (1 - prior) * b
        h = h_piecewise(signal, prefs)
        r = h.rho
        assume(lo + 1e-6 < r < hi - 1e-6 and abs(prior - r) > 1e-6)
        maximal = expected_over_split(h, prior, lo, hi)
        one_sided = expected_over_split(h, prior, r, hi) if prior > r else expected_over_split(h, prior, lo, r)
        design = optimal_design(Scenario(prior, prefs, signal, BlackwellConstraint(lo, hi)))

        # height of (rho, H(rho)) over the chord of the maximal posteriors
        lift = h(r) - expected_over_split(h, r, lo, hi)
        if design.convexifiable:
            assert design.regime is DesignRegime.MAXIMAL
            assert maximal >= one_sided - 1e-12
        elif lift > 1e-6:
            assert design.expected_payoff == pytest.approx(one_sided, abs=1e-12)
            assert design.expected_payoff > maximal

    def test_one_sided_gain_in_base_scenario(self, scenario_a):
        design = optimal_design(scenario_a)
        h = h_piecewise(Q8, BASE)
        assert design.expected_payoff - expected_over_split(h, 0.5, 0.35, 0.55) == pytest.approx(0.0375)

    @given(preferences(), informative_signals(), st.lists(st.floats(0.0, 1.0), min_size=5, max_size=5),
           st.booleans())
    @settings(max_examples=300)
    def test_blackwell_monotone_on_one_side(self, prefs, signal, draws, right):
        h = h_piecewise(signal, prefs)
        r = h.rho
        start, stop = (r + 1e-6, 0.99) if right else (0.01, r - 1e-6)
        assume(stop - start > 1e-3)
        low, inner_low, prior, inner_high, high = sorted(start + (stop - start) * u for u in draws)
        wide = expected_over_split(h, prior, low, high)
        narrow = expected_over_split(h, prior, inner_low, inner_high)
        assert wide >= narrow - 1e-12


class TestBestSplit:
    def test_prefers_wider_on_ties(self):
        low, high, value = best_binary_split(lambda x: 1.0, 0.5, [0.2, 0.4, 0.6, 0.9])
        assert (low, high) == (0.2, 0.9)
        assert value == pytest.approx(1.0)

    def test_concave_keeps_prior(self):
        low, high, _ = best_binary_split(lambda x: -(x - 0.5) ** 2, 0.5, [0.1, 0.9])
        assert low == high == 0.5


@pytest.mark.slow
def test_intermediate_slope_at_scale():
    rng = np.random.default_rng(6)
    checked = 0
    while checked < 1_000:
        prefs, signal = random_preferences(rng), random_signal(rng)
        low, high = breakpoints(signal, prefs)
        if high - low <= 1e-2:
            continue
        # the section is affine, so a wide secant is exact up to rounding
        a, b = low + 0.1 * (high - low), low + 0.9 * (high - low)
        secant = (exante_delegation_payoff(b, signal, prefs) - exante_delegation_payoff(a, signal, prefs)) / (b - a)
        assert secant == pytest.approx(intermediate_slope(signal, prefs), abs=1e-9)
        checked += 1
