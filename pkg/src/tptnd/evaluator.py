"""Seeded reduction machine over lists of typed terms.

A state holds an ordered list of typed statements plus a deterministic RNG.
Event steps draw one execution of a process, sampling collapses executions
into a frequency record, update pools two records, and the logical steps
combine records by the sum/product/dependency arithmetic. Every step is
recorded in a replayable trace.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from tptnd.errors import TptndError
from tptnd.syntax import nodes as n

GENERATOR_ID = "splitmix64"

_MASK64 = (1 << 64) - 1


class EvalError(TptndError):
    pass


class ShapeError(EvalError):
    pass


class MixedProcess(EvalError):
    pass


class ProcessMismatch(EvalError):
    pass


class TypeMismatch(EvalError):
    pass


class NegativeFrequency(EvalError):
    pass


class DivisionByZero(EvalError):
    pass


class SplitMix64:
    """Deterministic 64-bit generator; cheap to seed, split and replay."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def split(self) -> "SplitMix64":
        return SplitMix64(self.next_u64())


@dataclass(frozen=True)
class ProcessSpec:
    """A named atomic process with exact outcome probabilities summing to 1."""

    name: str
    outcomes: tuple[tuple[n.OutputType, Fraction], ...]

    def __post_init__(self):
        if not self.outcomes:
            raise ShapeError(f"process {self.name!r} has no outcomes")
        outputs = [o for o, _ in self.outcomes]
        if len(set(outputs)) != len(outputs):
            raise ShapeError(f"process {self.name!r} repeats an outcome")
        total = sum((p for _, p in self.outcomes), Fraction(0))
        if total != 1:
            raise ShapeError(f"outcome probabilities of {self.name!r} sum to {total}, not 1")

    def cumulative(self) -> list[Fraction]:
        acc, out = Fraction(0), []
        for _, p in self.outcomes:
            acc += p
            out.append(acc)
        return out


@dataclass(frozen=True)
class TraceStep:
    index: int
    rule: str
    consumed: tuple[int, ...]
    produced: n.TypedStatement
    rng_before: int
    rng_after: int


@dataclass
class EvalState:
    """Mutable, linearly owned machine state. Steps mutate and return it."""

    seed: int
    items: list[n.TypedStatement] = field(default_factory=list)
    trace: list[TraceStep] = field(default_factory=list)
    rng: SplitMix64 = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.rng is None:
            self.rng = SplitMix64(self.seed)

    @classmethod
    def fresh(cls, seed: int) -> "EvalState":
        return cls(seed)

    def _record(self, rule: str, consumed: tuple[int, ...],
                produced: n.TypedStatement, rng_before: int) -> None:
        self.trace.append(TraceStep(len(self.trace), rule, consumed, produced,
                                    rng_before, self.rng.state))

    def _take(self, indices: Sequence[int]) -> list[n.TypedStatement]:
        taken = []
        for i in indices:
            if not (0 <= i < len(self.items)):
                raise IndexError(f"no item at index {i}")
            taken.append(self.items[i])
        if len(set(indices)) != len(indices):
            raise IndexError("repeated operand index")
        return taken

    def _replace(self, indices: Sequence[int], produced: n.TypedStatement) -> None:
        drop = set(indices)
        self.items = [it for i, it in enumerate(self.items) if i not in drop]
        self.items.append(produced)


def _frequency_of(item: n.TypedStatement, what: str) -> n.Frequency:
    if not isinstance(item.annotation, n.Frequency):
        raise ShapeError(f"{what} must carry a frequency, got {item.annotation!r}")
    return item.annotation


def _fraction_frequency(value: Fraction) -> n.Frequency:
    if value < 0:
        raise NegativeFrequency(f"frequency {value} below 0")
    return n.Frequency(value.numerator, value.denominator)


def _single_atom(item: n.TypedStatement, process: str) -> n.TermAtom:
    subject = item.subject
    if not isinstance(subject, n.TermAtom) or subject.sample is not None:
        raise ShapeError(f"{subject!r} is not a single execution")
    if subject.name != process:
        raise MixedProcess(f"expected a run of {process!r}, got {subject.name!r}")
    return subject


def _sampled_atom(item: n.TypedStatement, what: str) -> n.TermAtom:
    subject = item.subject
    if not isinstance(subject, n.TermAtom) or subject.sample is None:
        raise ShapeError(f"{what} must be a sampled process, got {subject!r}")
    return subject


# ---------------------------------------------------------------------------
# Atomic steps

def step_event(state: EvalState, spec: ProcessSpec) -> EvalState:
    """Execute the process once; the outcome is drawn by exact-rational
    thresholds against a uniform 64-bit draw."""
    before = state.rng.state
    draw = Fraction(state.rng.next_u64(), 1 << 64)
    outcome = spec.outcomes[-1][0]
    for (output, _), bound in zip(spec.outcomes, spec.cumulative()):
        if draw < bound:
            outcome = output
            break
    produced = n.TypedStatement(n.TermAtom(spec.name), outcome, n.DETERMINISTIC)
    state.items.append(produced)
    state._record("event", (), produced, before)
    return state


def step_sampling(state: EvalState, process: str, indices: Sequence[int],
                  target: n.OutputType) -> EvalState:
    """Collapse single executions into one frequency record for the target."""
    if len(indices) < 1:
        raise IndexError("sampling needs at least one execution")
    taken = state._take(indices)
    for item in taken:
        _single_atom(item, process)
    hits = sum(1 for item in taken if n.output_matches(item.output, target))
    count = len(taken)
    produced = n.TypedStatement(n.TermAtom(process, count), target,
                                n.Frequency(hits, count))
    before = state.rng.state
    state._replace(indices, produced)
    state._record("sampling", tuple(indices), produced, before)
    return state


def step_update(state: EvalState, i: int, j: int) -> EvalState:
    """Pool two frequency records of the same process and output."""
    first, second = state._take([i, j])
    a1, a2 = _sampled_atom(first, "update operand"), _sampled_atom(second, "update operand")
    if a1.name != a2.name:
        raise ProcessMismatch(f"cannot pool {a1.name!r} with {a2.name!r}")
    if first.output != second.output:
        raise TypeMismatch("cannot pool records of different outputs")
    f1, f2 = _frequency_of(first, "update operand"), _frequency_of(second, "update operand")
    pooled = n.Frequency(f1.successes + f2.successes, f1.trials + f2.trials)
    produced = n.TypedStatement(n.TermAtom(a1.name, pooled.trials), first.output, pooled)
    before = state.rng.state
    state._replace([i, j], produced)
    state._record("update", (i, j), produced, before)
    return state


# ---------------------------------------------------------------------------
# Logical steps

LOGICAL_RULES = ("I+", "E+L", "E+R", "I*", "E*L", "E*R", "I->", "E->")


def _logical_sum_intro(first, second):
    a1, a2 = _sampled_atom(first, "operand"), _sampled_atom(second, "operand")
    if a1 != a2:
        raise ProcessMismatch("sum introduction needs the same sampled process")
    f1, f2 = _frequency_of(first, "operand"), _frequency_of(second, "operand")
    if f1.trials != f2.trials:
        raise ShapeError("operand sample sizes differ")
    return n.TypedStatement(a1, n.Sum(first.output, second.output),
                            n.Frequency(f1.successes + f2.successes, f1.trials))


def _logical_sum_elim(operand, side, left: bool):
    atom = _sampled_atom(operand, "operand")
    if not isinstance(operand.output, n.Sum):
        raise ShapeError("sum elimination needs a sum-typed operand")
    if side is None:
        raise ShapeError("sum elimination needs its premise statement")
    if side.subject != atom:
        raise ProcessMismatch("premise statement addresses a different record")
    kept = operand.output.left if left else operand.output.right
    dropped = operand.output.right if left else operand.output.left
    if kept == dropped:
        raise ShapeError("sum elimination requires distinct summand types")
    if side.output != dropped:
        raise TypeMismatch(f"premise must type the {'right' if left else 'left'} summand")
    f, g = _frequency_of(operand, "operand"), _frequency_of(side, "premise")
    if g.trials != f.trials:
        raise ShapeError("premise sample size differs")
    if g.successes > f.successes:
        raise NegativeFrequency("premise frequency exceeds the sum's")
    return n.TypedStatement(atom, kept, n.Frequency(f.successes - g.successes, f.trials))


def _logical_prod_intro(first, second):
    a1, a2 = _sampled_atom(first, "operand"), _sampled_atom(second, "operand")
    if a1.name == a2.name:
        raise ProcessMismatch("product introduction needs distinct processes")
    f1, f2 = _frequency_of(first, "operand"), _frequency_of(second, "operand")
    if f1.trials != f2.trials:
        raise ShapeError("operand sample sizes differ")
    return n.TypedStatement(n.Pair(a1, a2), n.Product(first.output, second.output),
                            n.Frequency(f1.successes * f2.successes, f1.trials * f2.trials))


def _logical_prod_elim(operand, side, left: bool):
    subject = operand.subject
    if n.subject_sample(subject) is None:
        raise ShapeError("product elimination needs a sampled record")
    if not isinstance(operand.output, n.Product):
        raise ShapeError("product elimination needs a product-typed operand")
    if side is None:
        raise ShapeError("product elimination needs its premise statement")
    kept = operand.output.left if left else operand.output.right
    dropped = operand.output.right if left else operand.output.left
    if kept == dropped:
        raise ShapeError("product elimination requires distinct component types")
    if side.subject != subject:
        raise ProcessMismatch("premise statement addresses a different record")
    if side.output != dropped:
        raise TypeMismatch(f"premise must type the {'second' if left else 'first'} component")
    f, g = _frequency_of(operand, "operand"), _frequency_of(side, "premise")
    if g.value == 0:
        raise DivisionByZero("premise frequency is zero")
    ctor = n.Fst if left else n.Snd
    return n.TypedStatement(ctor(subject), kept, _fraction_frequency(f.value / g.value))


def _logical_arrow_intro(operand, side):
    if side is None or not isinstance(side.subject, n.VariableRef):
        raise ShapeError("dependency introduction needs a variable premise")
    if not isinstance(side.annotation, n.Theoretical):
        raise ShapeError("dependency premise must carry a theoretical probability")
    freq = _frequency_of(operand, "operand")
    subject = n.Abstraction(side.subject, operand.subject)
    output = n.Arrow(side.output, operand.output)
    return n.TypedStatement(subject, output, n.ArrowTagged(side.annotation.value, freq))


def _logical_arrow_elim(first, second, side):
    if not isinstance(first.subject, n.Abstraction):
        raise ShapeError("dependency elimination needs an abstraction operand")
    if not isinstance(first.output, n.Arrow) or not isinstance(first.annotation, n.ArrowTagged):
        raise ShapeError("dependency operand must be arrow-typed and tagged")
    if side is None or side.subject != first.subject.var:
        raise ShapeError("dependency elimination needs the premise for its variable")
    if not isinstance(side.annotation, n.Theoretical) or side.annotation.value != first.annotation.tag:
        raise ShapeError("premise probability must match the arrow tag")
    if side.output != first.output.antecedent:
        raise TypeMismatch("premise output must match the arrow antecedent")
    if second.output != first.output.antecedent:
        raise TypeMismatch("argument output must match the arrow antecedent")
    g = _frequency_of(second, "argument")
    body_freq = n.strip_tag(first.annotation)
    if not isinstance(body_freq, n.Frequency):
        raise ShapeError("arrow body must carry a frequency")
    n1 = n.subject_sample(first.subject.body)
    n2 = n.subject_sample(second.subject)
    if n1 != n2:
        raise ShapeError("operand sample sizes differ")
    arg = n.TypedStatement(second.subject, second.output, n.DETERMINISTIC)
    subject = n.Application(first.subject.body, arg)
    # The tag is bookkeeping only: multiply the bare frequencies.
    return n.TypedStatement(subject, first.output.consequent,
                            _fraction_frequency(g.value * body_freq.value))


def step_logical(state: EvalState, rule: str, operands: Sequence[int],
                 side: Optional[n.TypedStatement] = None) -> EvalState:
    """Apply one of the sum/product/dependency rules to the indexed items."""
    if rule not in LOGICAL_RULES:
        raise ShapeError(f"unknown logical rule {rule!r}")
    taken = state._take(operands)

    def unary():
        if len(taken) != 1:
            raise ShapeError(f"{rule} takes one operand")
        return taken[0]

    def binary():
        if len(taken) != 2:
            raise ShapeError(f"{rule} takes two operands")
        return taken

    if rule == "I+":
        produced = _logical_sum_intro(*binary())
    elif rule == "E+L":
        produced = _logical_sum_elim(unary(), side, left=True)
    elif rule == "E+R":
        produced = _logical_sum_elim(unary(), side, left=False)
    elif rule == "I*":
        produced = _logical_prod_intro(*binary())
    elif rule == "E*L":
        produced = _logical_prod_elim(unary(), side, left=True)
    elif rule == "E*R":
        produced = _logical_prod_elim(unary(), side, left=False)
    elif rule == "I->":
        produced = _logical_arrow_intro(unary(), side)
    else:
        first, second = binary()
        produced = _logical_arrow_elim(first, second, side)
    before = state.rng.state
    state._replace(operands, produced)
    state._record(rule, tuple(operands), produced, before)
    return state


# ---------------------------------------------------------------------------
# Whole experiments and trace export

def run_experiment(spec: ProcessSpec, trials: int, target: n.OutputType,
                   seed: int) -> n.Frequency:
    """Run the process `trials` times under the seed, then sample the target.

    Deterministic in (spec, trials, target, seed).
    """
    if trials < 1:
        raise ShapeError(f"trial count {trials} must be >= 1")
    state = EvalState.fresh(seed)
    for _ in range(trials):
        step_event(state, spec)
    step_sampling(state, spec.name, range(trials), target)
    annotation = state.items[-1].annotation
    assert isinstance(annotation, n.Frequency)
    return annotation


def trace_jsonl(state: EvalState) -> str:
    """One JSON object per step; RNG states as hex strings for replay."""
    from tptnd.syntax.printer import pretty_print

    lines = []
    for step in state.trace:
        lines.append(json.dumps({
            "step": step.index,
            "rule": step.rule,
            "consumed": list(step.consumed),
            "produced": pretty_print(step.produced),
            "rng_before": f"{step.rng_before:#018x}",
            "rng_after": f"{step.rng_after:#018x}",
        }))
    return "\n".join(lines)
