import textwrap

import pytest
from hypothesis import settings
from hypothesis import strategies as st

from modules.model_core import (
    BinarySignal,
    BlackwellConstraint,
    PayoffMatrix,
    Preferences,
    Scenario,
)

settings.register_profile("delegatix", deadline=None)
settings.load_profile("delegatix")

PRINCIPAL = PayoffMatrix(1.0, 0.0, 0.0, 1.0)
AGENT = PayoffMatrix(1.25, -0.25, 0.25, 0.75)
BASE = Preferences(PRINCIPAL, AGENT)
MIRRORED = Preferences(AGENT, PRINCIPAL)
ALIGNED = Preferences(PRINCIPAL, PRINCIPAL)
Q8 = BinarySignal.symmetric(0.8)

BASE_TEXT = """
[prior]
mu = 0.5
[principal]
r00 = 1
r01 = 0
r10 = 0
r11 = 1
[agent]
v00 = 1.25
v01 = -0.25
v10 = 0.25
v11 = 0.75
[agent_signal]
q0 = 0.8
q1 = 0.8
[constraint]
posteriors = [0.35, 0.55]
"""


@pytest.fixture
def base_prefs():
    return BASE


@pytest.fixture
def mirrored():
    return MIRRORED


@pytest.fixture
def aligned():
    return ALIGNED


@pytest.fixture
def q8():
    return Q8


@pytest.fixture
def scenario_a():
    """Reference preferences, prior 0.5, maximal posteriors straddling rho tightly."""
    return Scenario(0.5, BASE, Q8, BlackwellConstraint(0.35, 0.55))


@pytest.fixture
def scenario_b():
    return Scenario(0.5, BASE, Q8, BlackwellConstraint(0.1, 0.9))


@pytest.fixture
def scenario_mirrored():
    """rho = 0.8 lies above the principal's cutoff 0.75."""
    return Scenario(0.5, MIRRORED, Q8, BlackwellConstraint(0.3, 0.85))


@pytest.fixture
def regression_scenarios(scenario_a, scenario_b, scenario_mirrored):
    return [scenario_a, scenario_b, scenario_mirrored]


@pytest.fixture
def scenario_file(tmp_path):
    def write(text=BASE_TEXT, name="base.txt"):
        path = tmp_path / name
        path.write_text(textwrap.dedent(text), encoding="utf-8")
        return str(path)
    return write


# -----------------------------
# hypothesis strategies
# -----------------------------
@st.composite
def payoff_matrices(draw):
    """State-matching matrices with a gap of at least 0.05 in each state."""
    u01 = draw(st.floats(-2.0, 2.0))
    u10 = draw(st.floats(-2.0, 2.0))
    d0 = draw(st.floats(0.05, 3.0))
    d1 = draw(st.floats(0.05, 3.0))
    return PayoffMatrix(u01 + d0, u01, u10, u10 + d1)


@st.composite
def informative_signals(draw, max_accuracy=0.99):
    t0 = draw(st.floats(max(0.05, 1.06 - max_accuracy), max_accuracy))
    t1 = draw(st.floats(max(0.05, 1.05 - t0), max_accuracy))
    return BinarySignal(t0, t1)


@st.composite
def preferences(draw, min_gap=0.01):
    principal = draw(payoff_matrices())
    agent = draw(payoff_matrices())
    prefs = Preferences(principal, agent)
    # keep the cutoffs apart so rho and the interval are well defined
    if abs(prefs.principal_cutoff - prefs.agent_cutoff) < min_gap:
        prefs = Preferences(principal, PayoffMatrix(agent.u00, agent.u01, agent.u10 - 1.0, agent.u11))
    return prefs


interior_beliefs = st.floats(0.01, 0.99)


# -----------------------------
# seeded draws for the acceptance-size runs
# -----------------------------
def random_matrix(rng) -> PayoffMatrix:
    u01, u10 = rng.uniform(-2.0, 2.0, 2)
    d0, d1 = rng.uniform(0.05, 3.0, 2)
    return PayoffMatrix(float(u01 + d0), float(u01), float(u10), float(u10 + d1))


def random_preferences(rng, min_gap=0.01) -> Preferences:
    while True:
        prefs = Preferences(random_matrix(rng), random_matrix(rng))
        if abs(prefs.principal_cutoff - prefs.agent_cutoff) >= min_gap:
            return prefs


def random_signal(rng, max_accuracy=0.99) -> BinarySignal:
    t0 = float(rng.uniform(max(0.05, 1.06 - max_accuracy), max_accuracy))
    return BinarySignal(t0, float(rng.uniform(max(0.05, 1.05 - t0), max_accuracy)))


def random_scenario(rng) -> Scenario:
    prior, a, b = (float(v) for v in rng.uniform(0.01, 0.99, 3))
    constraint = BlackwellConstraint(prior * a, prior + (1 - prior) * b)
    return Scenario(prior, random_preferences(rng), random_signal(rng), constraint)
