# modules/errors.py

"""
Exception hierarchy shared by every delegatix module.

Library code raises one of these; the CLI turns them into exit codes.
"""

from __future__ import annotations

from typing import Optional


class DelegatixError(Exception):
    """Base class for every error raised by the toolkit."""


class InvalidProbability(DelegatixError):
    pass


class ZeroProbabilityRealization(DelegatixError):
    """A signal realization with probability zero was conditioned on."""


class InvalidBracket(DelegatixError):
    """The prior is not bracketed by the requested posteriors."""


class DegeneratePrior(DelegatixError):
    """A prior of exactly 0 or 1 cannot be split into distinct posteriors."""


class AssumptionViolated(DelegatixError):
    """A payoff matrix has a dominant action or state-mismatching preferences."""


class AlignedPreferences(DelegatixError):
    """The principal and agent cutoffs coincide; there is no disagreement interval."""


class UninformativeSignal(DelegatixError):
    """The operation needs a strictly informative signal (t0 + t1 > 1)."""


class NotBlackwellOrdered(DelegatixError):
    pass


class NotMoreMisaligned(DelegatixError):
    pass


class CaseMismatch(DelegatixError):
    """A principal payoff edit does not match the declared expansion case."""


class UnsortedPoints(DelegatixError):
    pass


class InvalidSampleCount(DelegatixError):
    pass


class ScenarioValidationError(DelegatixError):
    """Raised by consumers that require a valid scenario; carries the report."""

    def __init__(self, report):
        self.report = report
        lines = [f"{issue.field}: {issue.message}" for issue in report.issues]
        super().__init__("invalid scenario\n" + "\n".join(lines))


class ScenarioFileError(DelegatixError):
    """Scenario file could not be parsed; addressed by line and field."""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
