import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from modules.errors import DelegatixError, ScenarioFileError
from modules.model_core import (
    BinarySignal,
    BlackwellConstraint,
    PayoffMatrix,
    Preferences,
    Scenario,
    constraint_from_signal,
)

SECTION_RE = re.compile(r'^\[\s*(?P<name>[A-Za-z_]+)\s*\]$')
KEY_VALUE_RE = re.compile(r'^(?P<key>[A-Za-z_][A-Za-z0-9_]*)\s*=\s*(?P<value>.*?)$')
_NUM = r'[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?'
NUMBER_RE = re.compile(rf'^(?P<num>{_NUM})(?:\s*/\s*(?P<den>{_NUM}))?$')
PAIR_RE = re.compile(r'^\[\s*(?P<a>[^,\]]+?)\s*,\s*(?P<b>[^,\]]+?)\s*\]$')

SECTION_KEYS = {
    "prior": ("mu",),
    "principal": ("r00", "r01", "r10", "r11"),
    "agent": ("v00", "v01", "v10", "v11"),
    "agent_signal": ("q0", "q1"),
    "constraint": ("posteriors", "signal"),
}


def safe_strip(value):
    """Safely strip a value that might be None"""
    if value is None:
        return ""
    return str(value).strip()


def safe_group(match, group_name, default=""):
    """Safely extract a regex group that might not exist"""
    try:
        val = match.group(group_name)
        return safe_strip(val) if val is not None else default
    except (AttributeError, IndexError):
        return default


def strip_comment(line):
    return line.split("#", 1)[0].strip()


def parse_number(text, line=None, field=None):
    """Decimal or fraction ('3/7')."""
    match = NUMBER_RE.match(safe_strip(text))
    if not match:
        raise ScenarioFileError(f"'{safe_strip(text)}' is not a number", line, field)
    value = float(safe_group(match, "num"))
    den = safe_group(match, "den")
    if den:
        if float(den) == 0.0:
            raise ScenarioFileError("division by zero", line, field)
        value /= float(den)
    return value


def parse_pair(text, line=None, field=None) -> Tuple[float, float]:
    match = PAIR_RE.match(safe_strip(text))
    if not match:
        raise ScenarioFileError(f"expected '[a, b]', got '{safe_strip(text)}'", line, field)
    return (parse_number(safe_group(match, "a"), line, field),
            parse_number(safe_group(match, "b"), line, field))


# -----------------------------
# Scenario files
# -----------------------------
@dataclass(frozen=True)
class _Entry:
    value: str
    line: int


@dataclass(frozen=True)
class ScenarioDocument:
    """Parsed scenario file; prior and constraint may be absent."""

    prefs: Preferences
    agent_signal: BinarySignal
    prior: Optional[float] = None
    constraint: Optional[BlackwellConstraint] = None
    source: str = "<text>"

    def scenario(self) -> Scenario:
        if self.prior is None:
            raise ScenarioFileError("missing prior ([prior] mu = ... or prior = ...)", field="prior")
        if self.constraint is None:
            raise ScenarioFileError("missing [constraint] section", field="constraint")
        return Scenario(self.prior, self.prefs, self.agent_signal, self.constraint)


def _collect(text: str) -> Dict[str, Dict[str, _Entry]]:
    sections: Dict[str, Dict[str, _Entry]] = {}
    current = None

    for number, raw in enumerate(text.splitlines(), start=1):
        line = strip_comment(raw)
        if not line:
            continue

        header = SECTION_RE.match(line)
        if header:
            current = safe_group(header, "name").lower()
            if current not in SECTION_KEYS:
                raise ScenarioFileError(f"unknown section [{current}]", number)
            if current in sections:
                raise ScenarioFileError(f"duplicate section [{current}]", number)
            sections[current] = {}
            continue

        kv = KEY_VALUE_RE.match(line)
        if not kv:
            raise ScenarioFileError(f"cannot parse '{line}'", number)
        key, value = safe_group(kv, "key").lower(), safe_group(kv, "value")

        # top-level shorthand: prior = 0.5
        if current is None:
            if key != "prior":
                raise ScenarioFileError("only 'prior' may appear before the first section", number, key)
            if "prior" in sections:
                raise ScenarioFileError("prior given twice", number, "prior")
            sections["prior"] = {"mu": _Entry(value, number)}
            continue

        if key not in SECTION_KEYS[current]:
            raise ScenarioFileError(f"unknown key in [{current}]", number, f"{current}.{key}")
        if key in sections[current]:
            raise ScenarioFileError("duplicate key", number, f"{current}.{key}")
        sections[current][key] = _Entry(value, number)

    return sections


def _numbers(sections, name: str) -> List[float]:
    if name not in sections:
        raise ScenarioFileError(f"missing [{name}] section", field=name)
    entries = sections[name]
    out = []
    for key in SECTION_KEYS[name]:
        if key not in entries:
            raise ScenarioFileError("missing value", field=f"{name}.{key}")
        out.append(parse_number(entries[key].value, entries[key].line, f"{name}.{key}"))
    return out


def parse_scenario_text(text: str, source: str = "<text>") -> ScenarioDocument:
    sections = _collect(text)

    principal = PayoffMatrix(*_numbers(sections, "principal"))
    agent = PayoffMatrix(*_numbers(sections, "agent"))

    q0, q1 = _numbers(sections, "agent_signal")
    try:
        agent_signal = BinarySignal(q0, q1)
    except DelegatixError as e:
        entry = sections["agent_signal"]["q0"]
        raise ScenarioFileError(str(e), entry.line, "agent_signal")

    prior = None
    if "prior" in sections:
        entry = sections["prior"].get("mu")
        if entry is None:
            raise ScenarioFileError("missing value", field="prior.mu")
        prior = parse_number(entry.value, entry.line, "prior")

    constraint = None
    if "constraint" in sections:
        entries = sections["constraint"]
        if len(entries) != 1:
            raise ScenarioFileError("give exactly one of 'posteriors' or 'signal'", field="constraint")
        key, entry = next(iter(entries.items()))
        a, b = parse_pair(entry.value, entry.line, f"constraint.{key}")
        if key == "posteriors":
            constraint = BlackwellConstraint(a, b)
        else:
            if prior is None:
                raise ScenarioFileError("a signal-table constraint needs a prior", entry.line, "constraint.signal")
            try:
                constraint = constraint_from_signal(prior, a, b)
            except DelegatixError as e:
                raise ScenarioFileError(str(e), entry.line, "constraint.signal")

    return ScenarioDocument(Preferences(principal, agent), agent_signal, prior, constraint, source)


def load_scenario_file(path) -> ScenarioDocument:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioFileError(f"cannot read {path}: {e.strerror or e}")
    return parse_scenario_text(text, source=str(path))


def format_scenario(scenario: Scenario) -> str:
    """Scenario file text for a scenario (constraint written as posteriors)."""
    p, a, s, c = scenario.prefs.principal, scenario.prefs.agent, scenario.agent_signal, scenario.constraint
    return "\n".join([
        "[prior]", f"mu = {scenario.prior!r}",
        "[principal]", f"r00 = {p.u00!r}", f"r01 = {p.u01!r}", f"r10 = {p.u10!r}", f"r11 = {p.u11!r}",
        "[agent]", f"v00 = {a.u00!r}", f"v01 = {a.u01!r}", f"v10 = {a.u10!r}", f"v11 = {a.u11!r}",
        "[agent_signal]", f"q0 = {s.t0!r}", f"q1 = {s.t1!r}",
        "[constraint]", f"posteriors = [{c.max_low!r}, {c.max_high!r}]",
        "",
    ])
