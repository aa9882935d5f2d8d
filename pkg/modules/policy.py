# modules/policy.py

"""
Policy regimes and welfare-loss witnesses.

A regime fixes which tools the principal may use: the public signal
(optimised, forced to the maximal one, or absent) and the delegation rule
(optimal, always delegate, never delegate).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from modules.delegation import exante_delegation_payoff
from modules.design import best_binary_split, exante_pieces, h_piecewise, optimal_design
from modules.model_core import (
    EPS,
    Belief,
    BinarySignal,
    BlackwellConstraint,
    Preferences,
    Scenario,
    expected_over_split,
    non_delegation_envelope,
    principal_preferred_action,
    require_valid,
    signal_from_posteriors,
)

logger = logging.getLogger(__name__)


class PolicyRegime(str, Enum):
    OPTIMAL_JOINT = "OptimalJoint"
    MANDATED_DELEGATION = "MandatedDelegation"
    MANDATED_MAXIMAL_SIGNAL = "MandatedMaximalSignal"
    NO_ALGORITHM = "NoAlgorithm"
    NO_HUMAN = "NoHuman"

    @classmethod
    def parse(cls, tag: str) -> "PolicyRegime":
        for regime in cls:
            if regime.value.lower() == tag.strip().lower():
                return regime
        raise ValueError(f"unknown regime '{tag}'")


class DelegationRule(str, Enum):
    OPTIMAL = "optimal"
    ALWAYS = "always"
    NEVER = "never"


@dataclass(frozen=True)
class RegimePlan:
    """Public split and delegation rule a regime plays, with its expected payoff."""

    regime: PolicyRegime
    low: Belief
    high: Belief
    signal: BinarySignal
    rule: DelegationRule
    payoff: float
    design_regime: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "regime": self.regime.value,
            "low": self.low,
            "high": self.high,
            "signal": {"p0": self.signal.t0, "p1": self.signal.t1},
            "rule": self.rule.value,
            "payoff": self.payoff,
            "design_regime": self.design_regime,
        }


# -----------------------------
# Regime evaluation
# -----------------------------
def regime_plan(scenario: Scenario, regime: PolicyRegime) -> RegimePlan:
    require_valid(scenario)
    prior = scenario.prior
    lo, hi = scenario.constraint.max_low, scenario.constraint.max_high
    prefs, agent_signal = scenario.prefs, scenario.agent_signal

    if regime is PolicyRegime.OPTIMAL_JOINT:
        design = optimal_design(scenario)
        return RegimePlan(regime, design.low_posterior, design.high_posterior, design.signal,
                          DelegationRule.OPTIMAL, design.expected_payoff, design.regime.value)

    if regime is PolicyRegime.MANDATED_DELEGATION:
        delegation = exante_pieces(agent_signal, prefs)
        candidates = [x for x in [lo, hi] + delegation.breakpoints if lo - EPS <= x <= hi + EPS]
        low, high, payoff = best_binary_split(delegation, prior, candidates)
        return RegimePlan(regime, low, high, signal_from_posteriors(prior, low, high),
                          DelegationRule.ALWAYS, payoff)

    if regime is PolicyRegime.MANDATED_MAXIMAL_SIGNAL:
        h = h_piecewise(agent_signal, prefs)
        return RegimePlan(regime, lo, hi, signal_from_posteriors(prior, lo, hi),
                          DelegationRule.OPTIMAL, expected_over_split(h, prior, lo, hi))

    if regime is PolicyRegime.NO_ALGORITHM:
        h = h_piecewise(agent_signal, prefs)
        return RegimePlan(regime, prior, prior, BinarySignal.uninformative(),
                          DelegationRule.OPTIMAL, h(prior))

    if regime is PolicyRegime.NO_HUMAN:
        payoff = expected_over_split(lambda x: non_delegation_envelope(prefs, x), prior, lo, hi)
        return RegimePlan(regime, lo, hi, signal_from_posteriors(prior, lo, hi),
                          DelegationRule.NEVER, payoff)

    raise ValueError(f"unknown regime {regime!r}")


def evaluate_regime(scenario: Scenario, regime: PolicyRegime) -> float:
    return regime_plan(scenario, regime).payoff


@dataclass(frozen=True)
class RegimeRow:
    regime: PolicyRegime
    payoff: float
    rank: int


@dataclass
class RegimeReport:
    rows: List[RegimeRow] = field(default_factory=list)

    @property
    def dominance_ok(self) -> bool:
        best = self.payoff(PolicyRegime.OPTIMAL_JOINT)
        return all(row.payoff <= best + EPS for row in self.rows)

    def payoff(self, regime: PolicyRegime) -> float:
        for row in self.rows:
            if row.regime is regime:
                return row.payoff
        raise KeyError(regime)

    def to_dict(self) -> dict:
        return {
            "rows": [{"regime": r.regime.value, "payoff": r.payoff, "rank": r.rank} for r in self.rows],
            "dominance_ok": self.dominance_ok,
        }


def regime_report(scenario: Scenario) -> RegimeReport:
    payoffs = [(regime, evaluate_regime(scenario, regime)) for regime in PolicyRegime]

    # dense ranking, ties within EPS share a rank
    levels: List[float] = []
    for _, value in sorted(payoffs, key=lambda item: -item[1]):
        if not levels or levels[-1] - value > EPS:
            levels.append(value)

    def rank(value: float) -> int:
        return 1 + next(i for i, level in enumerate(levels) if level - value <= EPS)

    report = RegimeReport([RegimeRow(regime, value, rank(value)) for regime, value in payoffs])
    if not report.dominance_ok:
        logger.error("[!] OptimalJoint is beaten by another regime: %s", report.to_dict())
    return report


# -----------------------------
# Witness searches
# -----------------------------
@dataclass(frozen=True)
class SearchGrid:
    levels: Tuple[int, ...] = (10, 20, 50, 100, 200)
    refinements: int = 8
    random_samples: int = 2000
    min_gap: float = 1e-6


@dataclass(frozen=True)
class Witness:
    scenario: Scenario
    interim_or_prior: Belief
    payoff_gap: float

    def to_dict(self) -> dict:
        return {
            "interim_or_prior": self.interim_or_prior,
            "constraint": self.scenario.constraint.to_dict(),
            "payoff_gap": self.payoff_gap,
        }


@dataclass(frozen=True)
class WitnessOutcome:
    witness: Optional[Witness]
    reason: Optional[str] = None
    stage: Optional[str] = None

    @property
    def found(self) -> bool:
        return self.witness is not None

    @property
    def precondition_failed(self) -> bool:
        return self.reason not in (None, "NotFound")

    def to_dict(self) -> dict:
        return {
            "found": self.found,
            "reason": self.reason,
            "stage": self.stage,
            "witness": self.witness.to_dict() if self.witness else None,
        }


def _precondition(prefs: Preferences, agent_signal: BinarySignal) -> Optional[str]:
    if principal_preferred_action(prefs) is None:
        return "AlignedPreferences"
    if not agent_signal.is_informative:
        return "UninformativeSignal"
    if agent_signal.is_state_revealing:
        return "StateRevealingSignal"
    return None


def _interior(n: int) -> np.ndarray:
    return np.arange(1, n) / n


def delegation_gap(interim: Belief, agent_signal: BinarySignal, prefs: Preferences) -> float:
    """How much direct action beats delegation at this interim."""
    return non_delegation_envelope(prefs, interim) - exante_delegation_payoff(interim, agent_signal, prefs)


def find_witness_prop6(prefs: Preferences, agent_signal: BinarySignal,
                       grid: SearchGrid = SearchGrid(), seed: int = 0) -> WitnessOutcome:
    """Interim posterior at which delegating is strictly worse than acting directly."""
    reason = _precondition(prefs, agent_signal)
    if reason:
        return WitnessOutcome(None, reason)

    def outcome(x: float, gap: float, stage: str) -> WitnessOutcome:
        scenario = Scenario(x, prefs, agent_signal, BlackwellConstraint(x, x))
        logger.info("[+] delegation witness at interim %.6f (gap %.6g, %s)", x, gap, stage)
        return WitnessOutcome(Witness(scenario, x, gap), stage=stage)

    def best_of(xs) -> Tuple[float, float]:
        gaps = [delegation_gap(float(x), agent_signal, prefs) for x in xs]
        i = int(np.argmax(gaps))
        return float(xs[i]), gaps[i]

    for n in grid.levels:
        x, gap = best_of(_interior(n))
        if gap > grid.min_gap:
            return outcome(x, gap, f"grid-{n}")

    # the gap is largest just inside the section end that is not rho
    h = h_piecewise(agent_signal, prefs)
    width = h.rho_high - h.rho_low
    if principal_preferred_action(prefs) == 1:
        near_end = [h.rho_high - 10.0 ** -k * width for k in range(1, grid.refinements + 1)]
    else:
        near_end = [h.rho_low + 10.0 ** -k * width for k in range(1, grid.refinements + 1)]
    near_end = [p for p in near_end if 0.0 < p < 1.0]
    if near_end:
        x, gap = best_of(near_end)
        if gap > grid.min_gap:
            return outcome(x, gap, "near-end")

    rng = np.random.default_rng(seed)
    x, gap = best_of(rng.uniform(0.0, 1.0, grid.random_samples))
    if gap > grid.min_gap:
        return outcome(x, gap, "random")

    logger.warning("[!] no delegation witness found although the precondition holds")
    return WitnessOutcome(None, "NotFound")


def maximal_signal_gap(scenario: Scenario) -> float:
    """H(prior) minus the expected H under the maximal signal (positive: no algorithm wins)."""
    h = h_piecewise(scenario.agent_signal, scenario.prefs)
    c = scenario.constraint
    return h(scenario.prior) - expected_over_split(h, scenario.prior, c.max_low, c.max_high)


def _split_gaps(hx: np.ndarray, xs: np.ndarray, i: int, lows: np.ndarray, highs: np.ndarray) -> np.ndarray:
    prior = xs[i]
    low, high = xs[lows][:, None], xs[highs][None, :]
    w = (prior - low) / (high - low)
    chord = w * hx[highs][None, :] + (1.0 - w) * hx[lows][:, None]
    return hx[i] - chord


def find_witness_prop7(prefs: Preferences, agent_signal: BinarySignal,
                       grid: SearchGrid = SearchGrid(), seed: int = 0,
                       low_range: Tuple[float, float] = (0.0, 1.0),
                       high_range: Tuple[float, float] = (0.0, 1.0)) -> WitnessOutcome:
    """
    Prior and maximal-signal constraint for which providing no algorithm beats
    providing the maximal one. `low_range`/`high_range` restrict the constraint
    posteriors to a sub-grid.
    """
    reason = _precondition(prefs, agent_signal)
    if reason:
        return WitnessOutcome(None, reason)

    h = h_piecewise(agent_signal, prefs)
    if h.discontinuity is None:
        # H is convex without a jump at rho, so the maximal signal is always optimal
        return WitnessOutcome(None, "ContinuousH")

    def in_range(x, bounds) -> bool:
        return bounds[0] - EPS <= x <= bounds[1] + EPS

    if (low_range[1] <= 0.0 or high_range[0] >= 1.0 or low_range[0] >= high_range[1]
            or low_range[0] > low_range[1] or high_range[0] > high_range[1]):
        return WitnessOutcome(None, "EmptyGrid")

    def outcome(prior: float, low: float, high: float, stage: str) -> Optional[WitnessOutcome]:
        scenario = Scenario(prior, prefs, agent_signal, BlackwellConstraint(low, high))
        gap = maximal_signal_gap(scenario)
        if gap <= grid.min_gap:
            return None
        logger.info("[+] no-algorithm witness: prior %.6f, constraint [%.6f, %.6f], gap %.6g (%s)",
                    prior, low, high, gap, stage)
        return WitnessOutcome(Witness(scenario, prior, gap), stage=stage)

    # prior in the affine piece that owns rho, constraint straddling rho
    r = h.rho
    owner = 1.0 if h.discontinuity.side == "left" else -1.0
    for k in range(1, grid.refinements + 1):
        delta = 10.0 ** -k
        low, high = r - delta, r + delta
        if 0.0 < low and high < 1.0 and in_range(low, low_range) and in_range(high, high_range):
            found = outcome(r + owner * delta / 2, low, high, "flat-region")
            if found:
                return found

    for n in grid.levels:
        xs = _interior(n)
        hx = h.values(xs)
        low_ok = np.array([in_range(x, low_range) for x in xs])
        high_ok = np.array([in_range(x, high_range) for x in xs])
        best = (grid.min_gap, None)
        for i in range(len(xs)):
            lows = np.nonzero(low_ok[:i])[0]
            highs = i + 1 + np.nonzero(high_ok[i + 1:])[0]
            if lows.size == 0 or highs.size == 0:
                continue
            gaps = _split_gaps(hx, xs, i, lows, highs)
            j, k = np.unravel_index(int(np.argmax(gaps)), gaps.shape)
            if gaps[j, k] > best[0]:
                best = (float(gaps[j, k]), (i, int(lows[j]), int(highs[k])))
        if best[1] is not None:
            i, j, k = best[1]
            found = outcome(float(xs[i]), float(xs[j]), float(xs[k]), f"grid-{n}")
            if found:
                return found

    rng = np.random.default_rng(seed)
    for triple in np.sort(rng.uniform(0.0, 1.0, (grid.random_samples, 3)), axis=1):
        low, prior, high = (float(v) for v in triple)
        if in_range(low, low_range) and in_range(high, high_range):
            found = outcome(prior, low, high, "random")
            if found:
                return found

    logger.info("[!] no no-algorithm witness on the requested grid")
    return WitnessOutcome(None, "NotFound")
