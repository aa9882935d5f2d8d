# modules/delegation.py

"""
Delegation-stage decision.

After the public signal has moved the principal to an interim posterior,
the principal either acts directly (payoff V_N at the interim) or hands the decision
to the agent, who sees one more private signal and acts on its own cutoff
(expected payoff of V_D over the agent's final posteriors).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from modules.errors import AlignedPreferences, CaseMismatch, NotBlackwellOrdered, NotMoreMisaligned
from modules.model_core import (
    EPS,
    Belief,
    BinarySignal,
    PayoffMatrix,
    PosteriorPair,
    Preferences,
    blackwell_leq,
    delegation_envelope,
    disagreement_interval,
    non_delegation_envelope,
    posteriors_of_signal,
    principal_preferred_action,
)

logger = logging.getLogger(__name__)


# -----------------------------
# Records
# -----------------------------
@dataclass(frozen=True)
class DelegationDecision:
    delegate: bool
    strict: bool
    delegation_payoff: float
    direct_payoff: float

    @property
    def payoff(self) -> float:
        """H at this interim: the payoff of the better option."""
        return max(self.delegation_payoff, self.direct_payoff)

    def to_dict(self) -> dict:
        return {
            "delegate": self.delegate,
            "strict": self.strict,
            "delegation_payoff": self.delegation_payoff,
            "direct_payoff": self.direct_payoff,
            "H": self.payoff,
        }


@dataclass(frozen=True)
class AgentComparison:
    interim: Belief
    weak: BinarySignal
    strong: BinarySignal
    weak_delegation: float
    strong_delegation: float
    weak_H: float
    strong_H: float

    @property
    def delegation_drop(self) -> bool:
        return self.strong_delegation < self.weak_delegation - EPS

    @property
    def prop2_phenomenon(self) -> bool:
        """Delegation payoff strictly drops while H stays put."""
        return self.delegation_drop and abs(self.strong_H - self.weak_H) <= EPS

    def to_dict(self) -> dict:
        return {
            "interim": self.interim,
            "weak": self.weak.to_dict(),
            "strong": self.strong.to_dict(),
            "weak_delegation": self.weak_delegation,
            "strong_delegation": self.strong_delegation,
            "weak_H": self.weak_H,
            "strong_H": self.strong_H,
            "delegation_drop": self.delegation_drop,
            "prop2_phenomenon": self.prop2_phenomenon,
        }


@dataclass(frozen=True)
class PayoffShift:
    """Delegation payoff and H before and after a change of preferences."""

    interim: Belief
    delegation_before: float
    delegation_after: float
    H_before: float
    H_after: float
    direction: int  # -1: both must weakly fall, +1: both must weakly rise

    @property
    def consistent(self) -> bool:
        if self.direction < 0:
            return (self.delegation_after <= self.delegation_before + EPS
                    and self.H_after <= self.H_before + EPS)
        return (self.delegation_after >= self.delegation_before - EPS
                and self.H_after >= self.H_before - EPS)

    @property
    def unchanged(self) -> bool:
        return (abs(self.delegation_after - self.delegation_before) <= EPS
                and abs(self.H_after - self.H_before) <= EPS)

    def to_dict(self) -> dict:
        return {
            "interim": self.interim,
            "delegation_before": self.delegation_before,
            "delegation_after": self.delegation_after,
            "H_before": self.H_before,
            "H_after": self.H_after,
            "direction": self.direction,
            "consistent": self.consistent,
        }


# -----------------------------
# Core delegation quantities
# -----------------------------
def final_posteriors(interim: Belief, agent_signal: BinarySignal) -> PosteriorPair:
    return posteriors_of_signal(interim, agent_signal)


def exante_delegation_payoff(interim: Belief, agent_signal: BinarySignal, prefs: Preferences) -> float:
    finals = final_posteriors(interim, agent_signal)
    p = finals.prob_high
    return (1.0 - p) * delegation_envelope(prefs, finals.low) + p * delegation_envelope(prefs, finals.high)


def strict_delegation(interim: Belief, agent_signal: BinarySignal, prefs: Preferences) -> bool:
    """
    Final posteriors on opposite sides of the disagreement interval.

    A final posterior sitting exactly on the agent's cutoff counts as outside
    the interval: the agent then takes the principal-preferred action.
    """
    preferred = principal_preferred_action(prefs)
    if preferred is None:
        return False

    finals = final_posteriors(interim, agent_signal)
    lo, hi = disagreement_interval(prefs)
    mu_a = prefs.agent_cutoff

    low_ok = finals.low < lo - EPS or (preferred == 0 and abs(finals.low - mu_a) <= EPS)
    high_ok = finals.high > hi + EPS or (preferred == 1 and abs(finals.high - mu_a) <= EPS)
    return low_ok and high_ok


def necessary_condition(agent_signal: BinarySignal, interim: Belief, prefs: Preferences) -> bool:
    """Agent's posterior spread exceeds the length of the disagreement interval."""
    finals = final_posteriors(interim, agent_signal)
    lo, hi = disagreement_interval(prefs)
    return finals.spread > hi - lo


def optimal_delegation(interim: Belief, agent_signal: BinarySignal, prefs: Preferences) -> DelegationDecision:
    delegation = exante_delegation_payoff(interim, agent_signal, prefs)
    direct = non_delegation_envelope(prefs, interim)

    delegate = delegation > direct + EPS
    if not delegate and abs(delegation - direct) <= EPS:
        logger.debug("principal indifferent at interim %.6f; acting directly", interim)

    return DelegationDecision(
        delegate=delegate,
        strict=delegate and strict_delegation(interim, agent_signal, prefs),
        delegation_payoff=delegation,
        direct_payoff=direct,
    )


def optimal_payoff(interim: Belief, agent_signal: BinarySignal, prefs: Preferences) -> float:
    return max(
        exante_delegation_payoff(interim, agent_signal, prefs),
        non_delegation_envelope(prefs, interim),
    )


# -----------------------------
# Comparative statics
# -----------------------------
def compare_agent_informativeness(interim: Belief, weak: BinarySignal, strong: BinarySignal,
                                  prefs: Preferences) -> AgentComparison:
    if not blackwell_leq(weak, strong, interim):
        raise NotBlackwellOrdered(
            f"signal {weak.to_dict()} is not Blackwell below {strong.to_dict()} at {interim}"
        )

    result = AgentComparison(
        interim=interim,
        weak=weak,
        strong=strong,
        weak_delegation=exante_delegation_payoff(interim, weak, prefs),
        strong_delegation=exante_delegation_payoff(interim, strong, prefs),
        weak_H=optimal_payoff(interim, weak, prefs),
        strong_H=optimal_payoff(interim, strong, prefs),
    )
    if result.strong_H < result.weak_H - EPS:
        logger.error("[!] H fell with a more informative agent at interim %.6f", interim)
    return result


def find_witness_prop2(interim: Belief, prefs: Preferences,
                       accuracies: Optional[Sequence[float]] = None) -> Optional[AgentComparison]:
    """
    Scan symmetric agent accuracies (weak < strong) for a pair whose delegation
    payoff strictly drops while H is unchanged.
    """
    if accuracies is None:
        accuracies = np.round(np.arange(0.51, 1.0, 0.01), 10)

    qs = sorted(float(q) for q in accuracies)
    for i, weak_q in enumerate(qs):
        for strong_q in qs[i + 1:]:
            comparison = compare_agent_informativeness(
                interim, BinarySignal.symmetric(weak_q), BinarySignal.symmetric(strong_q), prefs
            )
            if comparison.prop2_phenomenon:
                logger.info("[+] delegation payoff drops from q=%.2f to q=%.2f at interim %.4f",
                            weak_q, strong_q, interim)
                return comparison
    return None


def agent_cutoff_misalignment(prefs: Preferences, new_cutoff: Belief) -> Preferences:
    """Agent with the requested cutoff, keeping v00 and the state-1 gap v11 - v10."""
    if not 0.0 < new_cutoff < 1.0:
        raise ValueError(f"agent cutoff must lie strictly inside (0, 1), got {new_cutoff}")
    agent = prefs.agent
    gap0 = new_cutoff * agent.gap1 / (1.0 - new_cutoff)
    return Preferences(prefs.principal, PayoffMatrix(agent.u00, agent.u00 - gap0, agent.u10, agent.u11))


def _contains(outer, inner) -> bool:
    return outer[0] <= inner[0] + EPS and outer[1] >= inner[1] - EPS


def compare_misalignment(interim: Belief, agent_signal: BinarySignal, prefs: Preferences,
                         prefs_more_misaligned: Preferences) -> PayoffShift:
    if prefs.principal != prefs_more_misaligned.principal:
        raise NotMoreMisaligned("the principal's payoffs must stay fixed")

    old, new = disagreement_interval(prefs), disagreement_interval(prefs_more_misaligned)
    if not _contains(new, old):
        raise NotMoreMisaligned(f"disagreement interval {new} does not contain {old}")

    shift = PayoffShift(
        interim=interim,
        delegation_before=exante_delegation_payoff(interim, agent_signal, prefs),
        delegation_after=exante_delegation_payoff(interim, agent_signal, prefs_more_misaligned),
        H_before=optimal_payoff(interim, agent_signal, prefs),
        H_after=optimal_payoff(interim, agent_signal, prefs_more_misaligned),
        direction=-1,
    )
    if not shift.consistent:
        logger.error("[!] payoff rose with a more misaligned agent at interim %.6f", interim)
    return shift


def _edited_actions(before: PayoffMatrix, after: PayoffMatrix, action: int) -> Iterable[float]:
    return (after.payoff(s, action) - before.payoff(s, action) for s in (0, 1))


def principal_shift_comparison(interim: Belief, agent_signal: BinarySignal, prefs: Preferences,
                               shifted: Preferences, case: int) -> PayoffShift:
    """
    Disagreement interval expanded by the principal's own payoffs.

    case 1: payoffs of the agent-preferred action lowered (both payoffs weakly fall)
    case 2: payoffs of the agent's less preferred action raised (both weakly rise)
    """
    if case not in (1, 2):
        raise CaseMismatch(f"case must be 1 or 2, got {case!r}")
    if prefs.agent != shifted.agent:
        raise CaseMismatch("the agent's payoffs must stay fixed")

    preferred = principal_preferred_action(prefs)
    if preferred is None:
        raise AlignedPreferences("no agent-preferred action when cutoffs coincide")
    agent_preferred = 1 - preferred

    before, after = prefs.principal, shifted.principal
    edited, untouched = (agent_preferred, preferred) if case == 1 else (preferred, agent_preferred)
    deltas = list(_edited_actions(before, after, edited))

    if any(abs(d) > EPS for d in _edited_actions(before, after, untouched)):
        raise CaseMismatch(f"case {case} may only edit the payoffs of action {edited}")
    if case == 1 and any(d > EPS for d in deltas):
        raise CaseMismatch("case 1 lowers the agent-preferred action's payoffs")
    if case == 2 and any(d < -EPS for d in deltas):
        raise CaseMismatch("case 2 raises the agent's less preferred action's payoffs")
    if not _contains(disagreement_interval(shifted), disagreement_interval(prefs)):
        raise CaseMismatch("the edit does not expand the disagreement interval")

    shift = PayoffShift(
        interim=interim,
        delegation_before=exante_delegation_payoff(interim, agent_signal, prefs),
        delegation_after=exante_delegation_payoff(interim, agent_signal, shifted),
        H_before=optimal_payoff(interim, agent_signal, prefs),
        H_after=optimal_payoff(interim, agent_signal, shifted),
        direction=-1 if case == 1 else 1,
    )
    if not shift.consistent:
        logger.error("[!] case %d payoff moved the wrong way at interim %.6f", case, interim)
    return shift
