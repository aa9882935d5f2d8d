# modules/model_core.py

"""
Belief arithmetic for the binary-state delegation model.

Covers Bayes updates of binary signals, the posterior <-> signal
conversions, payoff lines and their envelopes, the action cutoffs,
Blackwell comparisons and scenario validation.

Conventions:
- a belief is the probability of state 1, a plain float in [0, 1]
- payoff matrices are indexed [state][action]
- the agent's private signal is conditionally independent of the
  public signal given the state (the final-posterior formulas need it)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

from modules.errors import (
    AssumptionViolated,
    DegeneratePrior,
    InvalidBracket,
    InvalidProbability,
    ScenarioValidationError,
    ZeroProbabilityRealization,
)

logger = logging.getLogger(__name__)

Belief = float

# absolute tolerance for every belief comparison (ties, brackets, cutoffs)
EPS = 1e-12
# samples this close to an indifference point are redrawn by searches
BOUNDARY_EPS = 1e-9


# -----------------------------
# Helpers
# -----------------------------
def _check_probability(value: float, name: str) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidProbability(f"{name} must be a number, got {value!r}")
    if not (-EPS <= value <= 1.0 + EPS):
        raise InvalidProbability(f"{name} must lie in [0, 1], got {value}")
    return min(1.0, max(0.0, value))


def clamp_belief(value: float) -> Belief:
    return min(1.0, max(0.0, value))


# -----------------------------
# Domain types
# -----------------------------
@dataclass(frozen=True)
class PayoffMatrix:
    """A player's payoffs, first index = state, second = action."""

    u00: float
    u01: float
    u10: float
    u11: float

    def payoff(self, state: int, action: int) -> float:
        return (self.u00, self.u01, self.u10, self.u11)[2 * state + action]

    @property
    def gap0(self) -> float:
        """Gain from matching state 0 (u00 - u01)."""
        return self.u00 - self.u01

    @property
    def gap1(self) -> float:
        """Gain from matching state 1 (u11 - u10)."""
        return self.u11 - self.u10

    def satisfies_assumption(self) -> bool:
        return self.gap0 > 0 and self.gap1 > 0

    def spread(self) -> float:
        values = (self.u00, self.u01, self.u10, self.u11)
        return max(values) - min(values)

    def to_dict(self) -> dict:
        return {"u00": self.u00, "u01": self.u01, "u10": self.u10, "u11": self.u11}


@dataclass(frozen=True)
class BinarySignal:
    """
    Conditional accuracies of a binary signal: t0 = Pr(s=0 | state 0),
    t1 = Pr(s=1 | state 1). Any t0 + t1 = 1 pair carries no information and
    is stored as the canonical (0.5, 0.5).
    """

    t0: float
    t1: float

    def __post_init__(self):
        t0 = _check_probability(self.t0, "t0")
        t1 = _check_probability(self.t1, "t1")
        if abs(t0 + t1 - 1.0) <= EPS:
            t0, t1 = 0.5, 0.5
        object.__setattr__(self, "t0", t0)
        object.__setattr__(self, "t1", t1)

    @classmethod
    def symmetric(cls, q: float) -> "BinarySignal":
        return cls(q, q)

    @classmethod
    def uninformative(cls) -> "BinarySignal":
        return cls(0.5, 0.5)

    @property
    def is_admissible(self) -> bool:
        """Good news is good news: t0 + t1 >= 1."""
        return self.t0 + self.t1 >= 1.0 - EPS

    @property
    def is_informative(self) -> bool:
        return self.t0 + self.t1 > 1.0 + EPS

    @property
    def is_state_revealing(self) -> bool:
        """One of the realizations rules a state out."""
        return self.t0 >= 1.0 or self.t1 >= 1.0

    def to_dict(self) -> dict:
        return {"t0": self.t0, "t1": self.t1}


@dataclass(frozen=True)
class PosteriorPair:
    low: Belief
    high: Belief
    prob_high: float

    @property
    def spread(self) -> float:
        return self.high - self.low

    def mean(self) -> float:
        return self.prob_high * self.high + (1.0 - self.prob_high) * self.low

    def to_dict(self) -> dict:
        return {"low": self.low, "high": self.high, "prob_high": self.prob_high}


@dataclass(frozen=True)
class Preferences:
    principal: PayoffMatrix
    agent: PayoffMatrix

    @property
    def principal_cutoff(self) -> Belief:
        return cutoff(self.principal)

    @property
    def agent_cutoff(self) -> Belief:
        return cutoff(self.agent)

    @property
    def aligned(self) -> bool:
        return abs(self.principal_cutoff - self.agent_cutoff) <= EPS

    def to_dict(self) -> dict:
        return {"principal": self.principal.to_dict(), "agent": self.agent.to_dict()}


@dataclass(frozen=True)
class BlackwellConstraint:
    """Posteriors of the maximal public signal at the scenario prior."""

    max_low: Belief
    max_high: Belief

    def to_dict(self) -> dict:
        return {"max_low": self.max_low, "max_high": self.max_high}


@dataclass(frozen=True)
class Scenario:
    prior: Belief
    prefs: Preferences
    agent_signal: BinarySignal
    constraint: BlackwellConstraint

    def with_prior(self, prior: Belief) -> "Scenario":
        return replace(self, prior=prior)

    def with_constraint(self, max_low: Belief, max_high: Belief) -> "Scenario":
        return replace(self, constraint=BlackwellConstraint(max_low, max_high))

    def to_dict(self) -> dict:
        return {
            "prior": self.prior,
            "prefs": self.prefs.to_dict(),
            "agent_signal": self.agent_signal.to_dict(),
            "constraint": self.constraint.to_dict(),
        }


# -----------------------------
# Bayes updates
# -----------------------------
def realization_probability(prior: Belief, signal: BinarySignal, realization: int) -> float:
    if realization == 1:
        return signal.t1 * prior + (1.0 - signal.t0) * (1.0 - prior)
    return (1.0 - signal.t1) * prior + signal.t0 * (1.0 - prior)


def update_belief(prior: Belief, signal: BinarySignal, realization: int) -> Belief:
    """Bayes posterior of state 1 after observing one realization of the signal."""
    prior = _check_probability(prior, "prior")
    if realization not in (0, 1):
        raise ValueError(f"realization must be 0 or 1, got {realization!r}")

    denom = realization_probability(prior, signal, realization)
    if denom <= 0.0:
        raise ZeroProbabilityRealization(
            f"realization {realization} has probability 0 at prior {prior} "
            f"under signal (t0={signal.t0}, t1={signal.t1})"
        )

    numer = signal.t1 * prior if realization == 1 else (1.0 - signal.t1) * prior
    return clamp_belief(numer / denom)


def posteriors_of_signal(prior: Belief, signal: BinarySignal) -> PosteriorPair:
    prior = _check_probability(prior, "prior")
    prob_high = realization_probability(prior, signal, 1)

    # a degenerate prior is never moved; a zero-probability side collapses onto the prior
    if prior in (0.0, 1.0) or prob_high <= 0.0 or prob_high >= 1.0:
        return PosteriorPair(prior, prior, prob_high)

    return PosteriorPair(
        low=update_belief(prior, signal, 0),
        high=update_belief(prior, signal, 1),
        prob_high=prob_high,
    )


def bayes_weight(prior: Belief, low: Belief, high: Belief) -> float:
    """Probability of the high posterior in a Bayes-plausible split of the prior."""
    if high - low <= EPS:
        return 1.0
    return min(1.0, max(0.0, (prior - low) / (high - low)))


def expected_over_split(f: Callable[[float], float], prior: Belief, low: Belief, high: Belief) -> float:
    if high - low <= EPS:
        return f(prior)
    w = bayes_weight(prior, low, high)
    return w * f(high) + (1.0 - w) * f(low)


def signal_from_posteriors(prior: Belief, low: Belief, high: Belief) -> BinarySignal:
    """Signal table that splits the prior into the given posteriors."""
    prior = _check_probability(prior, "prior")
    low = _check_probability(low, "low")
    high = _check_probability(high, "high")

    if not (low - EPS <= prior <= high + EPS):
        raise InvalidBracket(f"prior {prior} is not inside [{low}, {high}]")

    if high - low <= EPS:
        if abs(low - prior) > EPS:
            raise InvalidBracket(f"coincident posteriors {low} must equal the prior {prior}")
        return BinarySignal.uninformative()

    if prior in (0.0, 1.0):
        raise DegeneratePrior(f"prior {prior} cannot be split into [{low}, {high}]")

    w = bayes_weight(prior, low, high)
    t1 = w * high / prior
    t0 = (1.0 - w) * (1.0 - low) / (1.0 - prior)
    return BinarySignal(min(1.0, max(0.0, t0)), min(1.0, max(0.0, t1)))


def constraint_from_signal(prior: Belief, p0: float, p1: float) -> BlackwellConstraint:
    """Posterior bracket of a maximal public signal given as a (p0, p1) table."""
    pair = posteriors_of_signal(prior, BinarySignal(p0, p1))
    return BlackwellConstraint(pair.low, pair.high)


def constraint_signal(scenario: Scenario) -> BinarySignal:
    c = scenario.constraint
    return signal_from_posteriors(scenario.prior, c.max_low, c.max_high)


# -----------------------------
# Payoffs, cutoffs and envelopes
# -----------------------------
def cutoff(matrix: PayoffMatrix) -> Belief:
    """Belief at which the player switches from action 0 to action 1."""
    d0, d1 = matrix.gap0, matrix.gap1
    if d0 <= 0 or d1 <= 0:
        raise AssumptionViolated(
            f"payoffs {matrix.to_dict()} need u00 > u01 and u11 > u10"
        )
    return d0 / (d0 + d1)


def action_payoff(matrix: PayoffMatrix, action: int, belief: Belief) -> float:
    return (1.0 - belief) * matrix.payoff(0, action) + belief * matrix.payoff(1, action)


def non_delegation_envelope(prefs: Preferences, belief: Belief) -> float:
    return max(
        action_payoff(prefs.principal, 0, belief),
        action_payoff(prefs.principal, 1, belief),
    )


def principal_preferred_action(prefs: Preferences) -> Optional[int]:
    """Action the principal takes over a wider belief range than the agent; None if aligned."""
    mu_p, mu_a = prefs.principal_cutoff, prefs.agent_cutoff
    if abs(mu_p - mu_a) <= EPS:
        return None
    return 1 if mu_p < mu_a else 0


def agent_action(prefs: Preferences, belief: Belief) -> int:
    """The agent's choice; exactly at the agent cutoff it is the principal-preferred action."""
    mu_a = prefs.agent_cutoff
    if belief < mu_a - EPS:
        return 0
    if belief > mu_a + EPS:
        return 1
    preferred = principal_preferred_action(prefs)
    if preferred is None:
        # aligned: both actions are optimal for the principal too
        return 1 if action_payoff(prefs.principal, 1, belief) >= action_payoff(prefs.principal, 0, belief) else 0
    return preferred


def principal_action(prefs: Preferences, belief: Belief) -> int:
    p = prefs.principal
    return 1 if action_payoff(p, 1, belief) >= action_payoff(p, 0, belief) else 0


def delegation_envelope(prefs: Preferences, belief: Belief) -> float:
    """Principal's payoff when the agent picks the action at this belief."""
    return action_payoff(prefs.principal, agent_action(prefs, belief), belief)


def disagreement_interval(prefs: Preferences) -> Tuple[Belief, Belief]:
    mu_p, mu_a = prefs.principal_cutoff, prefs.agent_cutoff
    return min(mu_p, mu_a), max(mu_p, mu_a)


def relabel_actions(prefs: Preferences) -> Preferences:
    """Swap action labels for both players (turns state-mismatching into state-matching)."""

    def swap(m: PayoffMatrix) -> PayoffMatrix:
        return PayoffMatrix(m.u01, m.u00, m.u11, m.u10)

    return Preferences(swap(prefs.principal), swap(prefs.agent))


# -----------------------------
# Blackwell order
# -----------------------------
def blackwell_leq(a: BinarySignal, b: BinarySignal, prior: Belief) -> bool:
    """True iff the posterior interval of `a` sits inside that of `b` at this prior."""
    pa = posteriors_of_signal(prior, a)
    pb = posteriors_of_signal(prior, b)
    return pb.low <= pa.low + EPS and pa.high <= pb.high + EPS


# -----------------------------
# Validation
# -----------------------------
@dataclass(frozen=True)
class ValidationIssue:
    field: str
    kind: str
    message: str


@dataclass
class ValidationReport:
    issues: List[ValidationIssue] = field(default_factory=list)
    relabelable: bool = False

    @property
    def ok(self) -> bool:
        return not self.issues

    def add(self, field_name: str, kind: str, message: str):
        self.issues.append(ValidationIssue(field_name, kind, message))

    def kinds(self) -> List[str]:
        return [i.kind for i in self.issues]

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "relabelable": self.relabelable,
            "issues": [{"field": i.field, "kind": i.kind, "message": i.message} for i in self.issues],
        }


def _classify_matrix(matrix: PayoffMatrix) -> Optional[Tuple[str, str]]:
    d0, d1 = matrix.gap0, matrix.gap1
    if d0 > 0 and d1 > 0:
        return None
    if d0 <= 0 and d1 <= 0:
        return "state_mismatching", "both u00 <= u01 and u11 <= u10: preferences mismatch the state"
    if d1 <= 0:
        return "dominant_action", "u11 <= u10: action 0 is dominant"
    return "dominant_action", "u00 <= u01: action 1 is dominant"


def _check_signal(report: ValidationReport, name: str, signal: BinarySignal, strict: bool):
    if strict and not signal.is_informative:
        report.add(name, "uninformative_signal", f"t0 + t1 = {signal.t0 + signal.t1} must exceed 1")
    elif not signal.is_admissible:
        report.add(name, "uninformative_signal", f"t0 + t1 = {signal.t0 + signal.t1} must be at least 1")


def validate_scenario(s: Scenario) -> ValidationReport:
    """Structured diagnostics; never raises."""
    report = ValidationReport()

    mismatching = []
    for name, matrix in (("principal", s.prefs.principal), ("agent", s.prefs.agent)):
        verdict = _classify_matrix(matrix)
        if verdict is not None:
            kind, message = verdict
            report.add(name, kind, message)
            mismatching.append(kind == "state_mismatching")
    report.relabelable = len(mismatching) == 2 and all(mismatching)

    _check_signal(report, "agent_signal", s.agent_signal, strict=True)

    try:
        prior = _check_probability(s.prior, "prior")
    except InvalidProbability as e:
        report.add("prior", "invalid_probability", str(e))
        return report

    c = s.constraint
    for name, value in (("constraint.max_low", c.max_low), ("constraint.max_high", c.max_high)):
        try:
            _check_probability(value, name)
        except InvalidProbability as e:
            report.add(name, "invalid_probability", str(e))
            return report

    if not (c.max_low - EPS <= prior <= c.max_high + EPS):
        report.add("constraint", "bracket", f"[{c.max_low}, {c.max_high}] does not contain the prior {prior}")

    if report.issues:
        logger.debug("[!] scenario rejected: %s", report.kinds())
    return report


def require_valid(s: Scenario) -> Scenario:
    report = validate_scenario(s)
    if not report.ok:
        raise ScenarioValidationError(report)
    return s
