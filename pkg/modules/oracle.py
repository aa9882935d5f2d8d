# modules/oracle.py

"""
Independent checks of the closed forms.

Nothing here reads the piecewise-affine H: the grid oracle evaluates H from
the final posteriors directly, and the Monte Carlo oracle plays the whole
timeline (state, public realization, delegation choice, private
realization, action) with a seeded PCG64 generator.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np
from scipy.stats import norm

from modules.delegation import optimal_delegation, strict_delegation
from modules.design import DesignSolution, h_piecewise, optimal_design
from modules.errors import InvalidSampleCount
from modules.model_core import (
    EPS,
    Belief,
    BinarySignal,
    Preferences,
    Scenario,
    agent_action,
    non_delegation_envelope,
    posteriors_of_signal,
    principal_action,
    principal_preferred_action,
    realization_probability,
    require_valid,
)
from modules.policy import DelegationRule, PolicyRegime, RegimePlan, regime_plan

logger = logging.getLogger(__name__)

MIN_MC_SAMPLES = 1000
MC_CONFIDENCE = 0.99
MC_ABS_TOLERANCE = 0.003
GRID_TOLERANCE = 1e-9

_RULES = {
    PolicyRegime.OPTIMAL_JOINT: DelegationRule.OPTIMAL,
    PolicyRegime.MANDATED_MAXIMAL_SIGNAL: DelegationRule.OPTIMAL,
    PolicyRegime.NO_ALGORITHM: DelegationRule.OPTIMAL,
    PolicyRegime.MANDATED_DELEGATION: DelegationRule.ALWAYS,
    PolicyRegime.NO_HUMAN: DelegationRule.NEVER,
}


@dataclass(frozen=True)
class GridResult:
    best_low: Belief
    best_high: Belief
    best_payoff: float
    grid_step: float

    def to_dict(self) -> dict:
        return {"best_low": self.best_low, "best_high": self.best_high,
                "best_payoff": self.best_payoff, "grid_step": self.grid_step}


@dataclass(frozen=True)
class McEstimate:
    mean: float
    half_width: float
    samples: int
    seed: int

    def to_dict(self) -> dict:
        return {"mean": self.mean, "half_width": self.half_width,
                "samples": self.samples, "seed": self.seed}


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    observed: float
    tolerance: float

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed,
                "observed": self.observed, "tolerance": self.tolerance}


# -----------------------------
# Brute-force H
# -----------------------------
def _principal_table(prefs: Preferences) -> np.ndarray:
    r = prefs.principal
    return np.array([[r.u00, r.u01], [r.u10, r.u11]])


def _agent_actions(prefs: Preferences, beliefs: np.ndarray) -> np.ndarray:
    mu_a = prefs.agent_cutoff
    preferred = principal_preferred_action(prefs)
    table = _principal_table(prefs)
    if preferred is None:
        # aligned: at the shared cutoff the principal is indifferent, pick the weakly better action
        tie = np.where((1 - beliefs) * table[0, 1] + beliefs * table[1, 1]
                       >= (1 - beliefs) * table[0, 0] + beliefs * table[1, 0], 1, 0)
    else:
        tie = np.full(beliefs.shape, preferred)
    return np.where(beliefs < mu_a - EPS, 0, np.where(beliefs > mu_a + EPS, 1, tie))


def _principal_payoff(prefs: Preferences, beliefs: np.ndarray, actions: np.ndarray) -> np.ndarray:
    table = _principal_table(prefs)
    return (1 - beliefs) * table[0, actions] + beliefs * table[1, actions]


def pointwise_H(interim, agent_signal: BinarySignal, prefs: Preferences):
    """H from the agent's final posteriors; accepts a float or an array of interims."""
    xs = np.asarray(interim, dtype=float)
    q0, q1 = agent_signal.t0, agent_signal.t1

    p_high = q1 * xs + (1 - q0) * (1 - xs)
    p_low = 1 - p_high
    with np.errstate(divide="ignore", invalid="ignore"):
        high = np.where(p_high > 0, q1 * xs / np.where(p_high > 0, p_high, 1), xs)
        low = np.where(p_low > 0, (1 - q1) * xs / np.where(p_low > 0, p_low, 1), xs)

    delegated = (p_high * _principal_payoff(prefs, high, _agent_actions(prefs, high))
                 + p_low * _principal_payoff(prefs, low, _agent_actions(prefs, low)))
    table = _principal_table(prefs)
    direct = np.maximum((1 - xs) * table[0, 0] + xs * table[1, 0],
                        (1 - xs) * table[0, 1] + xs * table[1, 1])
    out = np.maximum(delegated, direct)
    return float(out) if out.ndim == 0 else out


# -----------------------------
# Grid oracle
# -----------------------------
def _axis(start: float, stop: float, n: int, extra: List[float]) -> np.ndarray:
    points = np.linspace(start, stop, n)
    injected = [x for x in extra if start - EPS <= x <= stop + EPS]
    return np.unique(np.concatenate([points, np.array(injected, dtype=float)]))


def grid_optimal_design(scenario: Scenario, grid_n: int) -> GridResult:
    """
    Best Bayes-plausible split on a uniform grid over [max_low, prior] x [prior, max_high],
    with rho and the prior injected as exact grid points.
    """
    if grid_n < 3:
        raise ValueError(f"grid_n must be at least 3, got {grid_n}")
    require_valid(scenario)

    prior = scenario.prior
    lo, hi = scenario.constraint.max_low, scenario.constraint.max_high
    h = h_piecewise(scenario.agent_signal, scenario.prefs)
    extra = [prior] + ([h.rho] if h.rho is not None else [])

    lows = _axis(lo, prior, grid_n, extra)
    highs = _axis(prior, hi, grid_n, extra)
    h_low = pointwise_H(lows, scenario.agent_signal, scenario.prefs)
    h_high = pointwise_H(highs, scenario.agent_signal, scenario.prefs)
    h_prior = pointwise_H(prior, scenario.agent_signal, scenario.prefs)

    low, high = lows[:, None], highs[None, :]
    degenerate = (low >= prior - EPS) | (high <= prior + EPS)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(degenerate, 0.0, (prior - low) / np.where(degenerate, 1.0, high - low))
    payoff = np.where(degenerate, h_prior, w * h_high[None, :] + (1 - w) * h_low[:, None])

    # ties go to the widest genuine split
    best = payoff.max()
    width = np.where(degenerate, 0.0, high - low)
    width = np.where(payoff >= best - EPS, width, -1.0)
    i, j = np.unravel_index(int(np.argmax(width)), width.shape)

    if degenerate[i, j]:
        best_low, best_high = prior, prior
    else:
        best_low, best_high = float(lows[i]), float(highs[j])

    step = max(prior - lo, hi - prior) / (grid_n - 1)
    logger.debug("grid oracle: %d x %d cells, best (%.6f, %.6f) -> %.12f",
                 len(lows), len(highs), best_low, best_high, best)
    return GridResult(best_low, best_high, float(payoff[i, j]), step)


# -----------------------------
# Monte Carlo oracle
# -----------------------------
def _rule(regime: PolicyRegime, design) -> DelegationRule:
    if isinstance(design, RegimePlan):
        return design.rule
    return _RULES[regime]


def mc_pipeline_payoff(scenario: Scenario, design: Union[DesignSolution, RegimePlan],
                       regime: PolicyRegime, samples: int, seed: int) -> McEstimate:
    """
    Simulate the decision pipeline and average the principal's realized payoff.

    Draw order per sample block: state, public realization, private realization.
    The half-width is the 99% normal-approximation interval of the mean.
    """
    if samples < MIN_MC_SAMPLES:
        raise InvalidSampleCount(f"need at least {MIN_MC_SAMPLES} samples, got {samples}")
    require_valid(scenario)

    prefs, agent_signal, prior = scenario.prefs, scenario.agent_signal, scenario.prior
    public = design.signal
    rule = _rule(regime, design)
    rng = np.random.default_rng(seed)

    state = (rng.random(samples) < prior).astype(int)
    u_public = rng.random(samples)
    u_private = rng.random(samples)
    s = np.where(state == 1, u_public < public.t1, u_public >= public.t0).astype(int)
    a = np.where(state == 1, u_private < agent_signal.t1, u_private >= agent_signal.t0).astype(int)

    # two interims, each with two finals: small lookup tables
    interims = posteriors_of_signal(prior, public)
    interim_of = (interims.low, interims.high)
    delegate = np.zeros(2, dtype=bool)
    direct_action = np.zeros(2, dtype=int)
    agent_choice = np.zeros((2, 2), dtype=int)
    for realization, x in enumerate(interim_of):
        if rule is DelegationRule.ALWAYS:
            delegate[realization] = True
        elif rule is DelegationRule.OPTIMAL:
            delegate[realization] = optimal_delegation(x, agent_signal, prefs).delegate
        direct_action[realization] = principal_action(prefs, x)
        finals = posteriors_of_signal(x, agent_signal)
        agent_choice[realization] = (agent_action(prefs, finals.low), agent_action(prefs, finals.high))

    action = np.where(delegate[s], agent_choice[s, a], direct_action[s])
    payoffs = _principal_table(prefs)[state, action]

    mean = float(payoffs.mean())
    sd = float(payoffs.std(ddof=1))
    half_width = float(norm.ppf(0.5 + MC_CONFIDENCE / 2) * sd / math.sqrt(samples))
    logger.debug("mc %s: mean %.6f +/- %.6f over %d samples (seed %d)",
                 regime.value, mean, half_width, samples, seed)
    return McEstimate(mean, half_width, samples, seed)


# -----------------------------
# Delegation equivalence
# -----------------------------
def brute_check_prop1(interim: Belief, agent_signal: BinarySignal, prefs: Preferences) -> bool:
    """Delegation strictly beats direct action, by summing over states and realizations."""
    r = prefs.principal
    expected = 0.0
    for state, p_state in ((0, 1.0 - interim), (1, interim)):
        if p_state <= 0.0:
            continue
        for realization in (0, 1):
            p_real = agent_signal.t1 if state == 1 else 1.0 - agent_signal.t0
            if realization == 0:
                p_real = 1.0 - p_real
            if p_real <= 0.0:
                continue
            denom = realization_probability(interim, agent_signal, realization)
            like1 = agent_signal.t1 if realization == 1 else 1.0 - agent_signal.t1
            final = like1 * interim / denom
            expected += p_state * p_real * r.payoff(state, agent_action(prefs, final))
    return expected - non_delegation_envelope(prefs, interim) > EPS


# -----------------------------
# Combined report
# -----------------------------
def oracle_check(scenario: Scenario, grid_n: int = 2001, mc_samples: int = 1_000_000,
                 seed: int = 0, regimes: Optional[List[PolicyRegime]] = None) -> List[CheckResult]:
    if mc_samples < MIN_MC_SAMPLES:
        raise InvalidSampleCount(f"need at least {MIN_MC_SAMPLES} samples, got {mc_samples}")
    if regimes is None:
        regimes = [PolicyRegime.OPTIMAL_JOINT, PolicyRegime.NO_HUMAN, PolicyRegime.MANDATED_DELEGATION]

    results: List[CheckResult] = []
    design = optimal_design(scenario)
    grid = grid_optimal_design(scenario, grid_n)
    delta = abs(grid.best_payoff - design.expected_payoff)
    results.append(CheckResult("grid_vs_closed_form", delta <= GRID_TOLERANCE, delta, GRID_TOLERANCE))

    for regime in regimes:
        plan = regime_plan(scenario, regime)
        estimate = mc_pipeline_payoff(scenario, plan, regime, mc_samples, seed)
        delta = abs(estimate.mean - plan.payoff)
        tolerance = max(3.0 * estimate.half_width, MC_ABS_TOLERANCE)
        results.append(CheckResult(f"mc_{regime.value}", delta <= tolerance, delta, tolerance))

    agrees = strict_delegation(scenario.prior, scenario.agent_signal, scenario.prefs) == \
        brute_check_prop1(scenario.prior, scenario.agent_signal, scenario.prefs)
    results.append(CheckResult("delegation_equivalence_at_prior", agrees, 0.0 if agrees else 1.0, 0.0))

    failed = [r.name for r in results if not r.passed]
    if failed:
        logger.warning("[!] oracle checks failed: %s", ", ".join(failed))
    else:
        logger.info("✓ %d oracle checks passed", len(results))
    return results
