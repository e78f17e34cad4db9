"""Abstract syntax for outputs, annotations, terms, judgements and derivations.

All nodes are immutable; equality is structural. Probabilities are exact
`fractions.Fraction` values and frequencies keep their raw (successes, trials)
counts, so annotation arithmetic downstream never rounds.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from tptnd.errors import RangeError, TptndError


class InvalidNode(TptndError):
    """A node violates a structural invariant."""


def _check_prob(value: Fraction, what: str) -> None:
    if not (0 <= value <= 1):
        raise RangeError(f"{what} {value} outside [0, 1]")


# ---------------------------------------------------------------------------
# Output types

@dataclass(frozen=True)
class Atom:
    name: str

    def __post_init__(self):
        if not self.name:
            raise InvalidNode("empty output name")


@dataclass(frozen=True)
class Complement:
    inner: OutputType


@dataclass(frozen=True)
class Product:
    left: OutputType
    right: OutputType


@dataclass(frozen=True)
class Sum:
    left: OutputType
    right: OutputType


@dataclass(frozen=True)
class Arrow:
    antecedent: OutputType
    consequent: OutputType


OutputType = Union[Atom, Complement, Product, Sum, Arrow]


# ---------------------------------------------------------------------------
# Annotations

@dataclass(frozen=True)
class Theoretical:
    value: Fraction

    def __post_init__(self):
        _check_prob(self.value, "theoretical probability")


@dataclass(frozen=True)
class Expected:
    value: Fraction

    def __post_init__(self):
        _check_prob(self.value, "expected probability")


@dataclass(frozen=True)
class Frequency:
    successes: int
    trials: int

    def __post_init__(self):
        if self.trials < 1:
            raise RangeError(f"frequency needs at least one trial, got {self.trials}")
        if not (0 <= self.successes <= self.trials):
            raise RangeError(
                f"success count {self.successes} outside 0..{self.trials}")

    @property
    def value(self) -> Fraction:
        return Fraction(self.successes, self.trials)


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        _check_prob(self.lo, "interval endpoint")
        _check_prob(self.hi, "interval endpoint")
        if self.lo > self.hi:
            raise RangeError(f"interval [{self.lo}, {self.hi}] is empty")

    def contains(self, p: Fraction) -> bool:
        return self.lo <= p <= self.hi


@dataclass(frozen=True)
class IntervalComplement:
    """The set [0,1] minus a closed interval; produced by negative-trust elimination."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        _check_prob(self.lo, "interval endpoint")
        _check_prob(self.hi, "interval endpoint")
        if self.lo > self.hi:
            raise RangeError(f"interval [{self.lo}, {self.hi}] is empty")

    def contains(self, p: Fraction) -> bool:
        return p < self.lo or p > self.hi


@dataclass(frozen=True)
class ArrowTagged:
    """Annotation of a dependency output: a bracketed antecedent probability
    tag around the consequent's own annotation."""

    tag: Fraction
    body: Annotation

    def __post_init__(self):
        _check_prob(self.tag, "arrow tag")


@dataclass(frozen=True)
class Deterministic:
    """No number attached: a single execution with its stated output."""


Annotation = Union[Theoretical, Expected, Frequency, Interval,
                   IntervalComplement, ArrowTagged, Deterministic]

DETERMINISTIC = Deterministic()


def strip_tag(ann: Annotation) -> Annotation:
    """Drop arrow tags; they are bookkeeping, not part of the value."""
    while isinstance(ann, ArrowTagged):
        ann = ann.body
    return ann


def ann_value(ann: Annotation) -> Fraction:
    """Numeric value of a point annotation (tags stripped)."""
    ann = strip_tag(ann)
    if isinstance(ann, (Theoretical, Expected)):
        return ann.value
    if isinstance(ann, Frequency):
        return ann.value
    if isinstance(ann, Deterministic):
        return Fraction(1)
    raise InvalidNode(f"annotation {ann!r} has no point value")


# ---------------------------------------------------------------------------
# Terms and random-variable references

@dataclass(frozen=True)
class VariableRef:
    name: str
    indexed_process: Optional[str] = None

    def __post_init__(self):
        if not self.name:
            raise InvalidNode("empty variable name")


@dataclass(frozen=True)
class TermAtom:
    name: str
    sample: Optional[int] = None
    run: Optional[int] = None

    def __post_init__(self):
        if not self.name:
            raise InvalidNode("empty process name")
        if self.sample is not None and self.sample < 1:
            raise RangeError(f"sample size {self.sample} must be >= 1")
        if self.run is not None and self.run < 1:
            raise RangeError(f"run index {self.run} must be >= 1")


@dataclass(frozen=True)
class Pair:
    left: Subject
    right: Subject


@dataclass(frozen=True)
class Fst:
    inner: Subject


@dataclass(frozen=True)
class Snd:
    inner: Subject


@dataclass(frozen=True)
class Abstraction:
    var: VariableRef
    body: Subject


@dataclass(frozen=True)
class Application:
    fun: Subject
    arg: TypedStatement


@dataclass(frozen=True)
class TrustWrap:
    inner: TypedStatement


@dataclass(frozen=True)
class UTrustWrap:
    inner: TypedStatement


Term = Union[TermAtom, Pair, Fst, Snd, Abstraction, Application,
             TrustWrap, UTrustWrap]
Subject = Union[Term, VariableRef]


# ---------------------------------------------------------------------------
# Statements, contexts, judgements

@dataclass(frozen=True)
class TypedStatement:
    subject: Subject
    output: OutputType
    annotation: Annotation = DETERMINISTIC

    def __post_init__(self):
        # A frequency over n executions must agree with the subject's sample size.
        if (isinstance(self.subject, TermAtom) and self.subject.sample is not None
                and isinstance(self.annotation, Frequency)
                and self.annotation.trials != self.subject.sample):
            raise InvalidNode(
                f"frequency over {self.annotation.trials} trials on a term "
                f"sampled {self.subject.sample} times")
        # Trust wrappers mirror the wrapped statement.
        if isinstance(self.subject, (TrustWrap, UTrustWrap)):
            inner = self.subject.inner
            if self.output != inner.output or self.annotation != inner.annotation:
                raise InvalidNode("trust wrapper must mirror its inner statement")


def trust_statement(inner: TypedStatement, negative: bool = False) -> TypedStatement:
    wrap = UTrustWrap(inner) if negative else TrustWrap(inner)
    return TypedStatement(wrap, inner.output, inner.annotation)


@dataclass(frozen=True)
class NamedContextRef:
    name: str


ContextItem = Union[NamedContextRef, TypedStatement]


@dataclass(frozen=True)
class Context:
    items: tuple[ContextItem, ...] = ()

    def __post_init__(self):
        seen = set()
        for item in self.items:
            if isinstance(item, TypedStatement):
                if not isinstance(item.subject, VariableRef):
                    raise InvalidNode("context entries must be random variables")
                if item in seen:
                    raise InvalidNode("duplicate context entry")
                seen.add(item)


EMPTY_CONTEXT = Context()


@dataclass(frozen=True)
class Judgement:
    """A sequent: context entails one typed statement."""

    context: Context
    conclusion: TypedStatement


@dataclass(frozen=True)
class DistributionJudgement:
    """An assertion that a context is a well-formed distribution."""

    context: Context


JudgementLike = Union[Judgement, DistributionJudgement]


# ---------------------------------------------------------------------------
# Side conditions and derivations

@dataclass(frozen=True)
class IndependentSC:
    pass


@dataclass(frozen=True)
class ThresholdHoldsSC:
    pass


@dataclass(frozen=True)
class ThresholdFailsSC:
    pass


@dataclass(frozen=True)
class NormalizedPriorsSC:
    pass


@dataclass(frozen=True)
class AdditivitySC:
    pass


@dataclass(frozen=True)
class ContractionFunSC:
    kind: str  # "ml" or "choose"
    value: Optional[Fraction] = None

    def __post_init__(self):
        if self.kind not in ("ml", "choose"):
            raise InvalidNode(f"unknown contraction function {self.kind!r}")
        if self.kind == "choose" and self.value is None:
            raise InvalidNode("choose needs a value")


SideCondition = Union[IndependentSC, ThresholdHoldsSC, ThresholdFailsSC,
                      NormalizedPriorsSC, AdditivitySC, ContractionFunSC]


@dataclass(frozen=True)
class Derivation:
    rule: str
    premises: tuple[Derivation, ...]
    side_conditions: tuple[SideCondition, ...]
    conclusion: JudgementLike


# ---------------------------------------------------------------------------
# Top-level declarations as they appear in a source file

@dataclass(frozen=True)
class DeclaredJudgement:
    name: Optional[str]
    judgement: JudgementLike


@dataclass(frozen=True)
class DeclaredDerivation:
    name: Optional[str]
    derivation: Derivation


# ---------------------------------------------------------------------------
# Subject helpers shared by the evaluator and the checker

def strip_run(subject: Subject) -> Subject:
    """Remove run superscripts everywhere in a subject."""
    if isinstance(subject, TermAtom):
        return TermAtom(subject.name, subject.sample, None) if subject.run else subject
    if isinstance(subject, Pair):
        return Pair(strip_run(subject.left), strip_run(subject.right))
    if isinstance(subject, Fst):
        return Fst(strip_run(subject.inner))
    if isinstance(subject, Snd):
        return Snd(strip_run(subject.inner))
    return subject


def run_index(subject: Subject) -> Optional[int]:
    """The run superscript shared by every atom of a subject, if coherent."""
    if isinstance(subject, TermAtom):
        return subject.run
    if isinstance(subject, Pair):
        l, r = run_index(subject.left), run_index(subject.right)
        return l if l == r else None
    if isinstance(subject, (Fst, Snd)):
        return run_index(subject.inner)
    return None


def strip_sample(subject: Subject) -> Subject:
    """Remove sample sizes everywhere in a subject."""
    if isinstance(subject, TermAtom):
        return TermAtom(subject.name, None, subject.run) if subject.sample else subject
    if isinstance(subject, Pair):
        return Pair(strip_sample(subject.left), strip_sample(subject.right))
    if isinstance(subject, Fst):
        return Fst(strip_sample(subject.inner))
    if isinstance(subject, Snd):
        return Snd(strip_sample(subject.inner))
    return subject


def with_sample(subject: Subject, n: int) -> Subject:
    """Stamp a sample size onto every atom of a subject."""
    if isinstance(subject, TermAtom):
        return TermAtom(subject.name, n, subject.run)
    if isinstance(subject, Pair):
        return Pair(with_sample(subject.left, n), with_sample(subject.right, n))
    if isinstance(subject, Fst):
        return Fst(with_sample(subject.inner, n))
    if isinstance(subject, Snd):
        return Snd(with_sample(subject.inner, n))
    return subject


def subject_sample(subject: Subject) -> Optional[int]:
    """The sample size shared by the atoms of a subject, if coherent."""
    if isinstance(subject, TermAtom):
        return subject.sample
    if isinstance(subject, Pair):
        l, r = subject_sample(subject.left), subject_sample(subject.right)
        return l if l == r else None
    if isinstance(subject, (Fst, Snd)):
        return subject_sample(subject.inner)
    if isinstance(subject, Abstraction):
        return subject_sample(subject.body)
    if isinstance(subject, Application):
        return subject_sample(subject.fun)
    return None


def process_names(subject: Subject) -> frozenset[str]:
    """Names of the processes a subject executes."""
    if isinstance(subject, TermAtom):
        return frozenset([subject.name])
    if isinstance(subject, Pair):
        return process_names(subject.left) | process_names(subject.right)
    if isinstance(subject, (Fst, Snd)):
        return process_names(subject.inner)
    if isinstance(subject, Abstraction):
        return process_names(subject.body)
    if isinstance(subject, Application):
        return process_names(subject.fun)
    return frozenset()


def output_matches(observed: OutputType, target: OutputType) -> bool:
    """Counting rule for sampling: exact match, or membership in a sum target."""
    if observed == target:
        return True
    if isinstance(target, Sum):
        return output_matches(observed, target.left) or output_matches(observed, target.right)
    return False
