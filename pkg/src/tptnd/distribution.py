"""Contexts as probability distributions: construction and validation.

A distribution assigns annotations to (random variable, output) pairs. Per
variable, the theoretical probabilities must sum to at most 1; equality makes
the distribution *complete*. An unknown distribution assigns the whole
interval [0, 1] to every output of interest.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from tptnd.errors import TptndError
from tptnd.syntax import nodes as n


class DistributionError(TptndError):
    pass


class AdditivityViolation(DistributionError):
    pass


class DuplicateEntry(DistributionError):
    pass


class EmptyOutputs(DistributionError):
    pass


@dataclass(frozen=True)
class Distribution:
    name: str
    entries: tuple[n.TypedStatement, ...] = ()


def empty(name: str = "") -> Distribution:
    return Distribution(name)


def _variable_sums(entries: Iterable[n.TypedStatement]) -> dict[n.VariableRef, Fraction]:
    sums: dict[n.VariableRef, Fraction] = {}
    for entry in entries:
        if isinstance(entry.annotation, n.Theoretical):
            var = entry.subject
            sums[var] = sums.get(var, Fraction(0)) + entry.annotation.value
    return sums


def extend(dist: Distribution, entry: n.TypedStatement) -> Distribution:
    """Add one entry, re-validating per-variable additivity."""
    if not isinstance(entry.subject, n.VariableRef):
        raise DistributionError("distribution entries must be random variables")
    if not isinstance(entry.annotation, (n.Theoretical, n.Interval, n.Deterministic)):
        raise DistributionError(
            f"distribution entries take theoretical, interval or deterministic "
            f"annotations, not {type(entry.annotation).__name__}")
    for existing in dist.entries:
        if existing.subject == entry.subject and existing.output == entry.output:
            raise DuplicateEntry(
                f"{dist.name or 'distribution'} already assigns a value to "
                f"this variable and output")
    entries = dist.entries + (entry,)
    if isinstance(entry.annotation, n.Theoretical):
        total = _variable_sums(entries)[entry.subject]
        if total > 1:
            raise AdditivityViolation(
                f"probabilities for one variable sum to {total} > 1")
    return Distribution(dist.name, entries)


def build_distribution(name: str, entries: Sequence[n.TypedStatement]) -> Distribution:
    dist = Distribution(name)
    for entry in entries:
        dist = extend(dist, entry)
    return dist


def make_unknown(outputs: Sequence[n.OutputType], variable: n.VariableRef,
                 name: str = "") -> Distribution:
    """The unknown distribution: one [0, 1] entry per output of interest."""
    if not outputs:
        raise EmptyOutputs("an unknown distribution needs at least one output")
    if len(set(outputs)) != len(outputs):
        raise DuplicateEntry("duplicate output in unknown distribution")
    full = n.Interval(Fraction(0), Fraction(1))
    entries = tuple(n.TypedStatement(variable, o, full) for o in outputs)
    return Distribution(name, entries)


def is_complete(dist: Distribution) -> bool:
    """True when every variable's theoretical probabilities sum to exactly 1."""
    sums = _variable_sums(dist.entries)
    return bool(sums) and all(total == 1 for total in sums.values())


def is_unknown(dist: Distribution) -> bool:
    full = n.Interval(Fraction(0), Fraction(1))
    return bool(dist.entries) and all(e.annotation == full for e in dist.entries)


# ---------------------------------------------------------------------------
# Independence

def _arrow_linked(e1: n.TypedStatement, e2: n.TypedStatement) -> bool:
    o = e2.output
    return isinstance(o, n.Arrow) and (o.antecedent == e1.output or o.consequent == e1.output)


def independent_entries(first: Iterable[n.TypedStatement],
                        second: Iterable[n.TypedStatement]) -> bool:
    """Syntactic independence of two entry sets.

    Two contexts are independent unless some pair of *distinct* entries is
    linked by a dependency: one entry's output is an arrow whose antecedent
    or consequent is the other entry's output. Identical entries shared by
    both contexts are always permitted.
    """
    second = tuple(second)
    for e1 in first:
        for e2 in second:
            if e1 == e2:
                continue
            if _arrow_linked(e1, e2) or _arrow_linked(e2, e1):
                return False
    return True


def independent(d1: Distribution, d2: Distribution) -> bool:
    return independent_entries(d1.entries, d2.entries)


# ---------------------------------------------------------------------------
# Serialization

def print_distribution(dist: Distribution) -> str:
    from tptnd.syntax.printer import _context_entry

    body = ";\n  ".join(_context_entry(e) for e in dist.entries)
    if body:
        return f"dist {dist.name} {{\n  {body}\n}}"
    return f"dist {dist.name} {{ }}"


def _annotation_json(ann: n.Annotation) -> tuple[str, object]:
    if isinstance(ann, n.Theoretical):
        return "theoretical", str(ann.value)
    if isinstance(ann, n.Expected):
        return "expected", str(ann.value)
    if isinstance(ann, n.Frequency):
        return "frequency", {"successes": ann.successes, "trials": ann.trials}
    if isinstance(ann, n.Interval):
        return "interval", [str(ann.lo), str(ann.hi)]
    if isinstance(ann, n.IntervalComplement):
        return "interval_complement", [str(ann.lo), str(ann.hi)]
    if isinstance(ann, n.ArrowTagged):
        kind, value = _annotation_json(ann.body)
        return "arrow_tagged", {"tag": str(ann.tag), "kind": kind, "value": value}
    return "deterministic", None


def to_json(dist: Distribution) -> dict:
    from tptnd.syntax.printer import pretty_print

    entries = []
    for e in dist.entries:
        kind, value = _annotation_json(e.annotation)
        var = e.subject
        text = var.name if var.indexed_process is None else f"{var.name}_{var.indexed_process}"
        entries.append({
            "var": text,
            "output": pretty_print(e.output),
            "kind": kind,
            "value": value,
        })
    return {"name": dist.name, "entries": entries}
