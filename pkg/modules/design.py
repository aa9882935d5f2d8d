# modules/design.py

"""
Information-design stage.

The principal picks a public signal (a Bayes-plausible split of the prior
inside the Blackwell constraint) knowing that at every interim posterior it
will make the optimal delegation decision, worth

    H(x) = max(E[V_D(final posteriors)], V_N(x)).

The ex-ante delegation payoff is piecewise affine with three sections and
jumps at the two interims where one final posterior hits the agent's cutoff.
H overlays V_N on it, keeps a single upward jump at rho and is convex on
each side of rho, so the optimal split is decided by three points:
the two maximal posteriors and (rho, H(rho)).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from modules.delegation import optimal_payoff
from modules.errors import AlignedPreferences, UninformativeSignal, UnsortedPoints
from modules.model_core import (
    EPS,
    Belief,
    BinarySignal,
    Preferences,
    Scenario,
    expected_over_split,
    principal_preferred_action,
    require_valid,
    signal_from_posteriors,
)

logger = logging.getLogger(__name__)

Point = Tuple[float, float]


# -----------------------------
# Piecewise affine functions
# -----------------------------
@dataclass(frozen=True)
class AffinePiece:
    """intercept + slope * x on the open interval (lo, hi)."""

    lo: float
    hi: float
    intercept: float
    slope: float

    def at(self, x):
        return self.intercept + self.slope * x

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "intercept": self.intercept, "slope": self.slope}


@dataclass(frozen=True)
class PiecewiseAffine:
    """
    Affine pieces on open intervals plus explicit values at every breakpoint,
    so endpoint ownership (and any jump) is exact.
    """

    pieces: Tuple[AffinePiece, ...]
    points: Tuple[Point, ...]

    @property
    def breakpoints(self) -> List[float]:
        return [x for x, _ in self.points]

    def __call__(self, x: float) -> float:
        for bx, value in self.points:
            if abs(x - bx) <= EPS:
                return value
        for piece in self.pieces:
            if piece.lo < x < piece.hi:
                return piece.at(x)
        raise ValueError(f"belief {x} is outside [0, 1]")

    def values(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        out = np.full(xs.shape, np.nan)
        for piece in self.pieces:
            mask = (xs > piece.lo) & (xs < piece.hi)
            out[mask] = piece.at(xs[mask])
        for bx, value in self.points:
            out[np.abs(xs - bx) <= EPS] = value
        return out

    def limit(self, x: float, side: str) -> Optional[float]:
        """One-sided limit at a breakpoint ('left' or 'right'); None at the domain edge."""
        for piece in self.pieces:
            if side == "left" and abs(piece.hi - x) <= EPS:
                return piece.at(x)
            if side == "right" and abs(piece.lo - x) <= EPS:
                return piece.at(x)
        return None

    def kinks(self) -> List[float]:
        """Interior breakpoints where H is continuous but changes slope."""
        out = []
        for left, right in zip(self.pieces, self.pieces[1:]):
            x = left.hi
            continuous = abs(left.at(x) - right.at(x)) <= 1e-10
            if continuous and abs(left.slope - right.slope) > 1e-12:
                out.append(x)
        return out


@dataclass(frozen=True)
class Discontinuity:
    location: float
    limit: float      # limit from the side that does not own the point
    value: float      # value at the point (the upper one)
    side: str         # side of the limit: 'left' or 'right'

    @property
    def jump(self) -> float:
        return self.value - self.limit

    def to_dict(self) -> dict:
        return {"location": self.location, "limit": self.limit, "value": self.value,
                "side": self.side, "jump": self.jump}


@dataclass(frozen=True)
class PiecewiseH(PiecewiseAffine):
    rho: Optional[float] = None
    rho_low: float = 0.0
    rho_high: float = 1.0
    principal_cutoff: float = 0.5
    agent_cutoff: float = 0.5
    discontinuity: Optional[Discontinuity] = None

    @property
    def jump_at_rho(self) -> float:
        return self.discontinuity.jump if self.discontinuity else 0.0

    def annotations(self) -> dict:
        return {
            "rho": self.rho,
            "rho_low": self.rho_low,
            "rho_high": self.rho_high,
            "principal_cutoff": self.principal_cutoff,
            "agent_cutoff": self.agent_cutoff,
            "breakpoints": self.breakpoints,
            "kinks": self.kinks(),
            "discontinuity": self.discontinuity.to_dict() if self.discontinuity else None,
            "segments": [p.to_dict() for p in self.pieces],
        }


# -----------------------------
# rho and the section endpoints
# -----------------------------
def _section_endpoints(agent_signal: BinarySignal, mu_a: float) -> Tuple[float, float]:
    q0, q1 = agent_signal.t0, agent_signal.t1
    # interim whose high final posterior equals mu_a
    rho_low = (1 - q0) * mu_a / ((1 - q0) * mu_a + q1 * (1 - mu_a))
    # interim whose low final posterior equals mu_a
    rho_high = q0 * mu_a / (q0 * mu_a + (1 - q1) * (1 - mu_a))
    return rho_low, rho_high


def _require_disagreement(agent_signal: BinarySignal, prefs: Preferences) -> int:
    preferred = principal_preferred_action(prefs)
    if preferred is None:
        raise AlignedPreferences("principal and agent cutoffs coincide")
    if not agent_signal.is_informative:
        raise UninformativeSignal("rho needs a strictly informative agent signal")
    return preferred


def breakpoints(agent_signal: BinarySignal, prefs: Preferences) -> Tuple[float, float]:
    _require_disagreement(agent_signal, prefs)
    return _section_endpoints(agent_signal, prefs.agent_cutoff)


def rho(agent_signal: BinarySignal, prefs: Preferences) -> Belief:
    """Interim at which one more principal-preferred realization leaves the agent indifferent."""
    preferred = _require_disagreement(agent_signal, prefs)
    rho_low, rho_high = _section_endpoints(agent_signal, prefs.agent_cutoff)
    return rho_low if preferred == 1 else rho_high


def intermediate_slope(agent_signal: BinarySignal, prefs: Preferences) -> float:
    r = prefs.principal
    q0, q1 = agent_signal.t0, agent_signal.t1
    return r.u10 - r.u01 + (r.u01 - r.u00) * q0 + (r.u11 - r.u10) * q1


def _intermediate_intercept(agent_signal: BinarySignal, prefs: Preferences) -> float:
    r = prefs.principal
    q0 = agent_signal.t0
    return r.u00 * q0 + r.u01 * (1 - q0)


# -----------------------------
# Ex-ante delegation payoff in closed form
# -----------------------------
def _action_line(prefs: Preferences, action: int) -> Tuple[float, float]:
    r = prefs.principal
    if action == 0:
        return r.u00, r.u10 - r.u00
    return r.u01, r.u11 - r.u01


def _dedupe(xs: Iterable[float]) -> List[float]:
    out: List[float] = []
    for x in sorted(xs):
        if not out or x - out[-1] > EPS:
            out.append(x)
    return out


class _ExanteSections:
    """Left/intermediate/right sections with tie ownership at their endpoints."""

    def __init__(self, agent_signal: BinarySignal, prefs: Preferences):
        self.prefs = prefs
        self.preferred = principal_preferred_action(prefs)
        self.rho_low, self.rho_high = _section_endpoints(agent_signal, prefs.agent_cutoff)
        self.lines = {
            "left": _action_line(prefs, 0),
            "mid": (_intermediate_intercept(agent_signal, prefs), intermediate_slope(agent_signal, prefs)),
            "right": _action_line(prefs, 1),
        }

    def section(self, x: float) -> str:
        if self.preferred == 0:
            if x <= self.rho_low + EPS:
                return "left"
            return "mid" if x <= self.rho_high + EPS else "right"
        if x < self.rho_low - EPS:
            return "left"
        return "mid" if x < self.rho_high - EPS else "right"

    def line(self, x: float) -> Tuple[float, float]:
        return self.lines[self.section(x)]

    def __call__(self, x: float) -> float:
        a, b = self.line(x)
        return a + b * x


def exante_pieces(agent_signal: BinarySignal, prefs: Preferences) -> PiecewiseAffine:
    sections = _ExanteSections(agent_signal, prefs)
    cuts = _dedupe([0.0, sections.rho_low, sections.rho_high, 1.0])

    pieces = []
    for lo, hi in zip(cuts, cuts[1:]):
        a, b = sections.line(0.5 * (lo + hi))
        pieces.append(AffinePiece(lo, hi, a, b))
    points = tuple((x, sections(x)) for x in cuts)
    return PiecewiseAffine(tuple(pieces), points)


def h_piecewise(agent_signal: BinarySignal, prefs: Preferences) -> PiecewiseH:
    """
    Closed-form H: the ex-ante sections overlaid with V_N.

    Works for either ordering of rho and the principal's cutoff. With aligned
    preferences there is no jump and H is the (convex) ex-ante payoff.
    """
    sections = _ExanteSections(agent_signal, prefs)
    mu_p, mu_a = prefs.principal_cutoff, prefs.agent_cutoff

    def vn_line(x: float) -> Tuple[float, float]:
        return _action_line(prefs, 1 if x > mu_p else 0)

    def value(x: float) -> float:
        a, b = vn_line(x)
        return max(sections(x), a + b * x)

    cuts = _dedupe([0.0, sections.rho_low, sections.rho_high, mu_p, 1.0])
    pieces: List[AffinePiece] = []
    points: List[float] = list(cuts)

    for lo, hi in zip(cuts, cuts[1:]):
        mid = 0.5 * (lo + hi)
        e, n = sections.line(mid), vn_line(mid)
        inner = [lo, hi]
        if abs(e[1] - n[1]) > 1e-15:
            cross = (n[0] - e[0]) / (e[1] - n[1])
            if lo + EPS < cross < hi - EPS:
                inner = [lo, cross, hi]
                points.append(cross)
        for a, b in zip(inner, inner[1:]):
            m = 0.5 * (a + b)
            best = max((e, n), key=lambda line: line[0] + line[1] * m)
            pieces.append(AffinePiece(a, b, best[0], best[1]))

    points = sorted(points)
    h = PiecewiseAffine(tuple(pieces), tuple((x, value(x)) for x in points))

    rho_value = None
    discontinuity = None
    if sections.preferred is not None:
        rho_value = sections.rho_low if sections.preferred == 1 else sections.rho_high
        side = "left" if sections.preferred == 1 else "right"
        limit = h.limit(rho_value, side)
        at_rho = h(rho_value)
        if limit is not None and at_rho - limit > EPS:
            discontinuity = Discontinuity(rho_value, limit, at_rho, side)

    return PiecewiseH(
        pieces=h.pieces,
        points=h.points,
        rho=rho_value,
        rho_low=sections.rho_low,
        rho_high=sections.rho_high,
        principal_cutoff=mu_p,
        agent_cutoff=mu_a,
        discontinuity=discontinuity,
    )


def H(interim: Belief, agent_signal: BinarySignal, prefs: Preferences) -> float:
    """Optimal delegation-stage payoff, evaluated pointwise."""
    return optimal_payoff(interim, agent_signal, prefs)


# -----------------------------
# Convexification and the optimal split
# -----------------------------
def convexifiable(p0: Point, p_rho: Point, p1: Point) -> bool:
    """True iff the three points lie on the graph of a weakly convex continuous function."""
    (x0, y0), (xr, yr), (x1, y1) = p0, p_rho, p1
    if x1 < x0:
        raise UnsortedPoints(f"endpoints out of order: {x0} > {x1}")
    if not (x0 + EPS < xr < x1 - EPS):
        return True
    chord = y0 + (y1 - y0) * (xr - x0) / (x1 - x0)
    return yr <= chord + EPS


class DesignRegime(str, Enum):
    MAXIMAL = "Maximal"
    ONE_SIDED_HIGH = "OneSidedHigh"
    ONE_SIDED_LOW = "OneSidedLow"
    UNINFORMATIVE = "Uninformative"
    ALIGNED_TRIVIAL = "AlignedTrivial"


@dataclass(frozen=True)
class DesignSolution:
    low_posterior: Belief
    high_posterior: Belief
    signal: BinarySignal
    expected_payoff: float
    regime: DesignRegime
    rho: Optional[float] = None
    convexifiable: Optional[bool] = None
    h_values: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "regime": self.regime.value,
            "low_posterior": self.low_posterior,
            "high_posterior": self.high_posterior,
            "signal": {"p0": self.signal.t0, "p1": self.signal.t1},
            "expected_payoff": self.expected_payoff,
            "rho": self.rho,
            "convexifiable": self.convexifiable,
            "h_values": dict(self.h_values),
        }


def _solution(scenario: Scenario, h: Callable[[float], float], low: float, high: float,
              regime: DesignRegime, **extra) -> DesignSolution:
    prior = scenario.prior
    return DesignSolution(
        low_posterior=low,
        high_posterior=high,
        signal=signal_from_posteriors(prior, low, high),
        expected_payoff=expected_over_split(h, prior, low, high),
        regime=regime,
        **extra,
    )


def optimal_design(scenario: Scenario) -> DesignSolution:
    require_valid(scenario)
    prior = scenario.prior
    lo, hi = scenario.constraint.max_low, scenario.constraint.max_high
    prefs, agent_signal = scenario.prefs, scenario.agent_signal
    h = h_piecewise(agent_signal, prefs)

    if prior in (0.0, 1.0):
        return _solution(scenario, h, prior, prior, DesignRegime.UNINFORMATIVE)

    if h.rho is None:
        return _solution(scenario, h, lo, hi, DesignRegime.ALIGNED_TRIVIAL)

    r = h.rho
    h_values = {"low": h(lo), "rho": h(r), "high": h(hi)}
    convex = convexifiable((lo, h_values["low"]), (r, h_values["rho"]), (hi, h_values["high"]))
    extra = {"rho": r, "convexifiable": convex, "h_values": h_values}

    if convex:
        straddles = lo + EPS < r < hi - EPS
        if straddles and abs(h_values["rho"] - expected_over_split(h, r, lo, hi)) <= EPS:
            logger.debug("maximal signal ties a one-sided split; keeping the maximal one")
        return _solution(scenario, h, lo, hi, DesignRegime.MAXIMAL, **extra)

    if abs(prior - r) <= EPS:
        return _solution(scenario, h, prior, prior, DesignRegime.UNINFORMATIVE, **extra)
    if prior > r:
        return _solution(scenario, h, r, hi, DesignRegime.ONE_SIDED_HIGH, **extra)
    return _solution(scenario, h, lo, r, DesignRegime.ONE_SIDED_LOW, **extra)


def best_binary_split(f: Callable[[float], float], prior: Belief,
                      candidates: Sequence[float]) -> Tuple[float, float, float]:
    """
    Best Bayes-plausible split of the prior over a finite candidate set.

    Exact for upper semicontinuous piecewise-affine objectives whose section
    endpoints are all candidates. Ties go to the wider split.
    """
    cands = _dedupe(list(candidates) + [prior])
    lows = [c for c in cands if c <= prior + EPS]
    highs = [c for c in cands if c >= prior - EPS]

    best = (prior, prior, f(prior))
    for low in lows:
        for high in highs:
            # an endpoint on the prior carries all the mass: no split
            if low >= prior - EPS or high <= prior + EPS:
                continue
            payoff = expected_over_split(f, prior, low, high)
            wider = (high - low) > (best[1] - best[0])
            if payoff > best[2] + EPS or (abs(payoff - best[2]) <= EPS and wider):
                best = (low, high, payoff)
    return best
