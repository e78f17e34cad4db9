"""The trusted kernel: validates derivation trees node by node.

Every rule application is checked against its printed shape, its side
conditions and its annotation arithmetic. Arithmetic over theoretical,
expected and frequency values is exact rational equality; only the Bayes
posterior and confidence-interval endpoints allow a 1e-9 numeric tolerance.
The kernel never searches for derivations, it only validates them.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

from tptnd import stats
from tptnd.distribution import Distribution, independent_entries
from tptnd.syntax import nodes as n
from tptnd.syntax.rules import RULES

NUMERIC_TOLERANCE = 1e-9


@dataclass(frozen=True)
class CheckFailure:
    path: str
    rule: str
    reason: str

    def to_json(self) -> dict:
        return {"path": self.path, "rule": self.rule, "reason": self.reason}


@dataclass
class CheckReport:
    failures: list[CheckFailure] = field(default_factory=list)
    stats: Counter = field(default_factory=Counter)

    @property
    def accepted(self) -> bool:
        return not self.failures

    @property
    def verdict(self) -> str:
        return "accepted" if self.accepted else "rejected"

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "failures": [f.to_json() for f in self.failures],
            "stats": dict(sorted(self.stats.items())),
        }


class _Unresolved(Exception):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name


Entries = tuple[n.TypedStatement, ...]


def _point_kind(ann: n.Annotation) -> Optional[str]:
    if isinstance(ann, n.Expected):
        return "expected"
    if isinstance(ann, n.Frequency):
        return "frequency"
    return None


def _rebuild_point(kind: str, value: Fraction) -> n.Annotation:
    if value < 0 or value > 1:
        raise n.InvalidNode(f"value {value} outside [0, 1]")
    if kind == "expected":
        return n.Expected(value)
    return n.Frequency(value.numerator, value.denominator)


def _theoretical(ann: n.Annotation) -> Optional[Fraction]:
    return ann.value if isinstance(ann, n.Theoretical) else None


class _Checker:
    def __init__(self, env: Mapping[str, Distribution],
                 strategy: stats.ThresholdStrategy):
        self.env = env
        self.strategy = strategy
        self.report = CheckReport()

    # -- context plumbing ---------------------------------------------------

    def entries(self, ctx: n.Context) -> Entries:
        out: list[n.TypedStatement] = []
        for item in ctx.items:
            if isinstance(item, n.NamedContextRef):
                if item.name not in self.env:
                    raise _Unresolved(item.name)
                out.extend(self.env[item.name].entries)
            else:
                out.append(item)
        # Contexts are sets of assumptions; keep first occurrences in order.
        seen, unique = set(), []
        for e in out:
            if e not in seen:
                seen.add(e)
                unique.append(e)
        return tuple(unique)

    @staticmethod
    def same(e1: Entries, e2: Entries) -> bool:
        return frozenset(e1) == frozenset(e2)

    @staticmethod
    def union(*many: Entries) -> frozenset:
        out: set = set()
        for e in many:
            out.update(e)
        return frozenset(out)

    # -- shape helpers ------------------------------------------------------

    @staticmethod
    def sequent(j: n.JudgementLike, errs: list[str], what: str) -> Optional[n.TypedStatement]:
        if isinstance(j, n.Judgement):
            return j.conclusion
        errs.append(f"ShapeError: {what} must be a sequent, not a distribution assertion")
        return None

    def check(self, node: n.Derivation) -> CheckReport:
        self._walk(node, "/")
        return self.report

    def _walk(self, node: n.Derivation, path: str) -> None:
        for i, premise in enumerate(node.premises):
            child = path.rstrip("/") + f"/{i}"
            self._walk(premise, child)
        self.report.stats[node.rule] += 1
        validator = getattr(self, f"_rule_{node.rule}", None)
        if validator is None:
            self._fail(path, node.rule, f"UnknownRule: {node.rule!r}")
            return
        errs: list[str] = []
        try:
            validator(node, errs)
        except _Unresolved as exc:
            errs.append(f"UnresolvedContext: no distribution named {exc.name!r}")
        except n.InvalidNode as exc:
            errs.append(f"ShapeError: {exc}")
        except (stats.StatsError, n.TptndError) as exc:
            errs.append(f"{type(exc).__name__}: {exc}")
        for reason in errs:
            self._fail(path, node.rule, reason)

    def _fail(self, path: str, rule: str, reason: str) -> None:
        self.report.failures.append(CheckFailure(path, rule, reason))

    # ------------------------------------------------------------------
    # Leaves

    def _rule_assumption(self, node, errs):
        pass  # Modelling assumptions are accepted as stated.

    def _rule_base(self, node, errs):
        if not isinstance(node.conclusion, n.DistributionJudgement):
            errs.append("ShapeError: base must conclude a distribution assertion")
            return
        if self.entries(node.conclusion.context):
            errs.append("ShapeError: base concludes the empty distribution")

    def _rule_unknown(self, node, errs):
        if not isinstance(node.conclusion, n.DistributionJudgement):
            errs.append("ShapeError: unknown must conclude a distribution assertion")
            return
        entries = self.entries(node.conclusion.context)
        if not entries:
            errs.append("ShapeError: unknown distribution needs at least one output")
            return
        full = n.Interval(Fraction(0), Fraction(1))
        if any(e.annotation != full for e in entries):
            errs.append("ShapeError: unknown distribution entries must all be [0, 1]")
        if len({e.subject for e in entries}) != 1:
            errs.append("ShapeError: unknown distribution describes one variable")
        outputs = [e.output for e in entries]
        if len(set(outputs)) != len(outputs):
            errs.append("ShapeError: duplicate output in unknown distribution")

    def _rule_identity1(self, node, errs):
        stmt = self.sequent(node.conclusion, errs, "identity conclusion")
        if stmt is None:
            return
        if not isinstance(stmt.subject, n.VariableRef):
            errs.append("ShapeError: identity concerns a random variable")
            return
        if stmt.annotation != n.Theoretical(Fraction(1)):
            errs.append("ArithmeticMismatch: identity1 assigns probability 1")
        wanted = n.TypedStatement(stmt.subject, stmt.output, n.DETERMINISTIC)
        if wanted not in self.entries(node.conclusion.context):
            errs.append("ShapeError: context lacks the deterministic assumption")

    def _rule_identity2(self, node, errs):
        stmt = self.sequent(node.conclusion, errs, "identity conclusion")
        if stmt is None:
            return
        if not isinstance(stmt.subject, n.VariableRef):
            errs.append("ShapeError: identity concerns a random variable")
            return
        if _theoretical(stmt.annotation) is None:
            errs.append("ShapeError: identity2 restates a theoretical probability")
            return
        if stmt not in self.entries(node.conclusion.context):
            errs.append("ArithmeticMismatch: context does not assign this probability")

    # ------------------------------------------------------------------
    # Distribution construction

    def _extend_common(self, node, errs) -> Optional[n.TypedStatement]:
        if not isinstance(node.conclusion, n.DistributionJudgement):
            errs.append("ShapeError: extension concludes a distribution assertion")
            return None
        premise = node.premises[0].conclusion
        if not isinstance(premise, n.DistributionJudgement):
            errs.append("ShapeError: extension starts from a distribution assertion")
            return None
        before = self.entries(premise.context)
        after = self.entries(node.conclusion.context)
        removed = set(before) - set(after)
        added = set(after) - set(before)
        if removed or len(added) != 1:
            errs.append("ShapeError: extension adds exactly one entry")
            return None
        entry = added.pop()
        if any(e.subject == entry.subject and e.output == entry.output for e in before):
            errs.append("DuplicateEntry: the variable already assigns this output a value")
            return None
        return entry

    def _rule_extend(self, node, errs):
        entry = self._extend_common(node, errs)
        if entry is None:
            return
        if _theoretical(entry.annotation) is None:
            errs.append("ShapeError: extend adds a theoretical probability")
            return
        totals: dict[n.VariableRef, Fraction] = {}
        for e in self.entries(node.conclusion.context):
            value = _theoretical(e.annotation)
            if value is not None:
                totals[e.subject] = totals.get(e.subject, Fraction(0)) + value
        total = totals.get(entry.subject, Fraction(0))
        if total > 1:
            errs.append(f"AdditivityViolation: probabilities sum to {total} > 1")

    def _rule_extend_det(self, node, errs):
        entry = self._extend_common(node, errs)
        if entry is not None and not isinstance(entry.annotation, n.Deterministic):
            errs.append("ShapeError: extend_det adds a deterministic entry")

    # ------------------------------------------------------------------
    # Random-variable rules

    def _rule_bot(self, node, errs):
        premise = self.sequent(node.premises[0].conclusion, errs, "complement premise")
        stmt = self.sequent(node.conclusion, errs, "complement conclusion")
        if premise is None or stmt is None:
            return
        if isinstance(premise.annotation, (n.Interval, n.IntervalComplement)):
            errs.append("ComplementOfInterval: cannot complement an interval annotation")
            return
        a = _theoretical(premise.annotation)
        if a is None:
            errs.append("ShapeError: complement needs a theoretical premise")
            return
        if not self.same(self.entries(node.premises[0].conclusion.context),
                         self.entries(node.conclusion.context)):
            errs.append("ContextMismatch: complement keeps the context")
        if stmt.subject != premise.subject:
            errs.append("ShapeError: complement keeps the subject")
        if stmt.output != n.Complement(premise.output):
            errs.append("ShapeError: conclusion must negate the premise output")
        if stmt.annotation != n.Theoretical(1 - a):
            errs.append(f"ArithmeticMismatch: expected probability {1 - a}")

    def _two_var_premises(self, node, errs):
        p1 = self.sequent(node.premises[0].conclusion, errs, "first premise")
        p2 = self.sequent(node.premises[1].conclusion, errs, "second premise")
        stmt = self.sequent(node.conclusion, errs, "conclusion")
        if p1 is None or p2 is None or stmt is None:
            return None
        return p1, p2, stmt

    def _require_independence(self, node, errs, left: Entries, right: Entries):
        if not any(isinstance(sc, n.IndependentSC) for sc in node.side_conditions):
            errs.append("IndependenceUnverified: side condition not declared")
            return
        if not independent_entries(left, right):
            errs.append("IndependenceUnverified: the contexts share a dependency")

    def _rule_var_i_prod(self, node, errs):
        got = self._two_var_premises(node, errs)
        if got is None:
            return
        p1, p2, stmt = got
        a, b = _theoretical(p1.annotation), _theoretical(p2.annotation)
        if a is None or b is None:
            errs.append("ShapeError: product introduction needs theoretical premises")
            return
        e1 = self.entries(node.premises[0].conclusion.context)
        e2 = self.entries(node.premises[1].conclusion.context)
        self._require_independence(node, errs, e1, e2)
        if not self.same(self.entries(node.conclusion.context), tuple(self.union(e1, e2))):
            errs.append("ContextMismatch: conclusion joins both contexts")
        if stmt.subject != n.Pair(p1.subject, p2.subject):
            errs.append("ShapeError: conclusion subject pairs the premises")
        if stmt.output != n.Product(p1.output, p2.output):
            errs.append("ShapeError: conclusion output is the product type")
        if stmt.annotation != n.Theoretical(a * b):
            errs.append(f"ArithmeticMismatch: expected probability {a * b}")

    def _var_prod_elim(self, node, errs, left: bool):
        got = self._two_var_premises(node, errs)
        if got is None:
            return
        p1, p2, stmt = got
        if not isinstance(p1.output, n.Product):
            errs.append("ShapeError: elimination needs a product-typed premise")
            return
        if p1.output.left == p1.output.right:
            errs.append("ShapeError: elimination requires distinct component types")
        c = _theoretical(p1.annotation)
        minor = _theoretical(p2.annotation)
        if c is None or minor is None:
            errs.append("ShapeError: elimination needs theoretical premises")
            return
        wanted_minor = n.Fst(p1.subject) if left else n.Snd(p1.subject)
        wanted_subject = n.Snd(p1.subject) if left else n.Fst(p1.subject)
        wanted_output = p1.output.right if left else p1.output.left
        minor_output = p1.output.left if left else p1.output.right
        if p2.subject != wanted_minor or p2.output != minor_output:
            errs.append("ShapeError: minor premise projects the other component")
            return
        ctx = self.entries(node.premises[0].conclusion.context)
        if not self.same(ctx, self.entries(node.premises[1].conclusion.context)) \
                or not self.same(ctx, self.entries(node.conclusion.context)):
            errs.append("ContextMismatch: elimination keeps one context")
        if minor == 0:
            errs.append("DivisionByZero: minor premise has probability 0")
            return
        value = c / minor
        if value > 1:
            errs.append(f"RangeError: quotient {value} exceeds 1")
            return
        if stmt.subject != wanted_subject or stmt.output != wanted_output:
            errs.append("ShapeError: conclusion projects the remaining component")
        if stmt.annotation != n.Theoretical(value):
            errs.append(f"ArithmeticMismatch: expected probability {value}")

    def _rule_var_e_prod_l(self, node, errs):
        self._var_prod_elim(node, errs, left=True)

    def _rule_var_e_prod_r(self, node, errs):
        self._var_prod_elim(node, errs, left=False)

    def _rule_var_i_sum(self, node, errs):
        got = self._two_var_premises(node, errs)
        if got is None:
            return
        p1, p2, stmt = got
        a, b = _theoretical(p1.annotation), _theoretical(p2.annotation)
        if a is None or b is None:
            errs.append("ShapeError: sum introduction needs theoretical premises")
            return
        if p1.subject != p2.subject:
            errs.append("ShapeError: sum introduction needs one subject")
        ctx = self.entries(node.premises[0].conclusion.context)
        if not self.same(ctx, self.entries(node.premises[1].conclusion.context)) \
                or not self.same(ctx, self.entries(node.conclusion.context)):
            errs.append("ContextMismatch: sum introduction keeps one context")
        if a + b > 1:
            errs.append(f"RangeError: probabilities sum to {a + b} > 1")
            return
        if stmt.subject != p1.subject:
            errs.append("ShapeError: conclusion keeps the subject")
        if stmt.output != n.Sum(p1.output, p2.output):
            errs.append("ShapeError: conclusion output is the sum type")
        if stmt.annotation != n.Theoretical(a + b):
            errs.append(f"ArithmeticMismatch: expected probability {a + b}")

    def _var_sum_elim(self, node, errs, keep_left: bool):
        got = self._two_var_premises(node, errs)
        if got is None:
            return
        p1, p2, stmt = got
        if not isinstance(p1.output, n.Sum):
            errs.append("ShapeError: elimination needs a sum-typed premise")
            return
        if p1.output.left == p1.output.right:
            errs.append("ShapeError: elimination requires distinct summand types")
        total = _theoretical(p1.annotation)
        minor = _theoretical(p2.annotation)
        if total is None or minor is None:
            errs.append("ShapeError: elimination needs theoretical premises")
            return
        minor_output = p1.output.right if keep_left else p1.output.left
        kept_output = p1.output.left if keep_left else p1.output.right
        if p2.subject != p1.subject or p2.output != minor_output:
            errs.append("ShapeError: minor premise types the other summand")
            return
        ctx = self.entries(node.premises[0].conclusion.context)
        if not self.same(ctx, self.entries(node.premises[1].conclusion.context)) \
                or not self.same(ctx, self.entries(node.conclusion.context)):
            errs.append("ContextMismatch: elimination keeps one context")
        if minor > total:
            errs.append(f"RangeError: subtrahend {minor} exceeds {total}")
            return
        if stmt.subject != p1.subject or stmt.output != kept_output:
            errs.append("ShapeError: conclusion keeps the subject at the remaining summand")
        if stmt.annotation != n.Theoretical(total - minor):
            errs.append(f"ArithmeticMismatch: expected probability {total - minor}")

    def _rule_var_e_sum_l(self, node, errs):
        self._var_sum_elim(node, errs, keep_left=True)

    def _rule_var_e_sum_r(self, node, errs):
        self._var_sum_elim(node, errs, keep_left=False)

    def _rule_var_i_arrow(self, node, errs):
        premise = self.sequent(node.premises[0].conclusion, errs, "premise")
        stmt = self.sequent(node.conclusion, errs, "conclusion")
        if premise is None or stmt is None:
            return
        if not isinstance(stmt.subject, n.Abstraction) or not isinstance(stmt.output, n.Arrow):
            errs.append("ShapeError: conclusion abstracts over an arrow type")
            return
        binder = stmt.subject.var
        discharged = n.TypedStatement(binder, stmt.output.antecedent, n.DETERMINISTIC)
        before = self.entries(node.premises[0].conclusion.context)
        if discharged not in before:
            errs.append("DischargeError: the premise context lacks the discharged assumption")
            return
        after = frozenset(before) - {discharged}
        if frozenset(self.entries(node.conclusion.context)) != after:
            errs.append("ContextMismatch: conclusion drops only the discharged assumption")
        if premise.subject != stmt.subject.body:
            errs.append("ShapeError: the abstraction body is the premise subject")
        if premise.output != stmt.output.consequent:
            errs.append("ShapeError: the arrow consequent is the premise output")
        if _theoretical(premise.annotation) is None:
            errs.append("ShapeError: dependency introduction needs a theoretical premise")
            return
        if stmt.annotation != premise.annotation:
            errs.append("ArithmeticMismatch: introduction keeps the premise probability")

    def _rule_var_e_arrow(self, node, errs):
        got = self._two_var_premises(node, errs)
        if got is None:
            return
        p1, p2, stmt = got
        if not isinstance(p1.subject, n.Abstraction) or not isinstance(p1.output, n.Arrow):
            errs.append("ShapeError: major premise must be an arrow abstraction")
            return
        b = _theoretical(p1.annotation)
        a = _theoretical(p2.annotation)
        if b is None or a is None:
            errs.append("ShapeError: elimination needs theoretical premises")
            return
        if p2.subject != p1.subject.var:
            errs.append("ShapeError: minor premise concerns the abstracted variable")
        if p2.output != p1.output.antecedent:
            errs.append("ShapeError: minor premise types the arrow antecedent")
        e1 = self.entries(node.premises[0].conclusion.context)
        e2 = self.entries(node.premises[1].conclusion.context)
        if not self.same(self.entries(node.conclusion.context), tuple(self.union(e1, e2))):
            errs.append("ContextMismatch: conclusion joins the premise contexts")
        arg = n.TypedStatement(p1.subject.var, p1.output.antecedent, n.DETERMINISTIC)
        if stmt.subject != n.Application(p1.subject.body, arg):
            errs.append("ShapeError: conclusion applies the body to the variable")
        if stmt.output != p1.output.consequent:
            errs.append("ShapeError: conclusion output is the arrow consequent")
        if stmt.annotation != n.Theoretical(a * b):
            errs.append(f"ArithmeticMismatch: expected probability {a * b}")

    # ------------------------------------------------------------------
    # Single-experiment rules

    def _rule_experiment(self, node, errs):
        stmt = self.sequent(node.conclusion, errs, "experiment conclusion")
        if stmt is None:
            return
        subject = stmt.subject
        if not isinstance(subject, n.TermAtom) or subject.sample is not None:
            errs.append("ShapeError: an experiment is one execution of an atomic process")
            return
        if not isinstance(stmt.annotation, n.Deterministic):
            errs.append("ShapeError: an experiment declares its output deterministically")
        for entry in self.entries(node.conclusion.context):
            if (isinstance(entry.subject, n.VariableRef)
                    and entry.subject.indexed_process == subject.name
                    and entry.output == stmt.output
                    and isinstance(entry.annotation, (n.Theoretical, n.Interval))):
                return
        errs.append(f"MissingDesignatedVariable: no variable for process "
                    f"{subject.name!r} with output {stmt.output!r}")

    def _rule_exp_i_prod(self, node, errs):
        got = self._two_var_premises(node, errs)
        if got is None:
            return
        p1, p2, stmt = got
        if not isinstance(p1.annotation, n.Deterministic) \
                or not isinstance(p2.annotation, n.Deterministic):
            errs.append("ShapeError: product introduction combines deterministic outputs")
            return
        if n.process_names(p1.subject) & n.process_names(p2.subject):
            errs.append("ShapeError: the paired processes must be distinct")
        e1 = self.entries(node.premises[0].conclusion.context)
        e2 = self.entries(node.premises[1].conclusion.context)
        self._require_independence(node, errs, e1, e2)
        if not self.same(self.entries(node.conclusion.context), tuple(self.union(e1, e2))):
            errs.append("ContextMismatch: conclusion joins both contexts")
        if stmt.subject != n.Pair(p1.subject, p2.subject):
            errs.append("ShapeError: conclusion subject pairs the premises")
        if stmt.output != n.Product(p1.output, p2.output):
            errs.append("ShapeError: conclusion output is the product type")
        if not isinstance(stmt.annotation, n.Deterministic):
            errs.append("ShapeError: conclusion stays deterministic")

    def _exp_prod_elim(self, node, errs, left: bool):
        premise = self.sequent(node.premises[0].conclusion, errs, "premise")
        stmt = self.sequent(node.conclusion, errs, "conclusion")
        if premise is None or stmt is None:
            return
        if not isinstance(premise.output, n.Product) \
                or not isinstance(premise.annotation, n.Deterministic):
            errs.append("ShapeError: elimination needs a deterministic product premise")
            return
        if not self.same(self.entries(node.premises[0].conclusion.context),
                         self.entries(node.conclusion.context)):
            errs.append("ContextMismatch: projection keeps the context")
        wanted = n.Fst(premise.subject) if left else n.Snd(premise.subject)
        output = premise.output.left if left else premise.output.right
        if stmt.subject != wanted or stmt.output != output \
                or not isinstance(stmt.annotation, n.Deterministic):
            errs.append("ShapeError: conclusion projects the chosen component")

    def _rule_exp_e_prod_l(self, node, errs):
        self._exp_prod_elim(node, errs, left=True)

    def _rule_exp_e_prod_r(self, node, errs):
        self._exp_prod_elim(node, errs, left=False)

    def _rule_exp_i_sum(self, node, errs):
        premise = self.sequent(node.premises[0].conclusion, errs, "premise")
        stmt = self.sequent(node.conclusion, errs, "conclusion")
        if premise is None or stmt is None:
            return
        if not isinstance(stmt.output, n.Sum):
            errs.append("ShapeError: conclusion output is a sum type")
            return
        if not isinstance(premise.annotation, n.Deterministic) \
                or not isinstance(stmt.annotation, n.Deterministic):
            errs.append("ShapeError: sum introduction stays deterministic")
        if premise.subject != stmt.subject or not isinstance(stmt.subject, n.TermAtom):
            errs.append("ShapeError: sum introduction keeps the atomic subject")
            return
        if premise.output != stmt.output.left:
            errs.append("ShapeError: the premise types the left summand")
        before = self.entries(node.premises[0].conclusion.context)
        name = stmt.subject.name
        discharged = []
        for output in (stmt.output.left, stmt.output.right):
            entry = next(
                (e for e in before
                 if isinstance(e.subject, n.VariableRef)
                 and e.subject.indexed_process == name and e.output == output
                 and isinstance(e.annotation, n.Theoretical)), None)
            if entry is None:
                errs.append("MissingDesignatedVariable: both summands need a "
                            "designated-variable assumption")
                return
            discharged.append(entry)
        if discharged[0] == discharged[1]:
            errs.append("ShapeError: the summands share one assumption")
        after = frozenset(before) - set(discharged)
        if frozenset(self.entries(node.conclusion.context)) != after:
            errs.append("ContextMismatch: conclusion drops the two assumptions")

    def _exp_sum_elim(self, node, errs, keep_left: bool):
        got = self._two_var_premises(node, errs)
        if got is None:
            return
        p1, p2, stmt = got
        if not isinstance(p1.output, n.Sum):
            errs.append("ShapeError: elimination needs a sum-typed premise")
            return
        if p1.output.left == p1.output.right:
            errs.append("ShapeError: elimination requires distinct summand types")
        dropped = p1.output.right if keep_left else p1.output.left
        kept = p1.output.left if keep_left else p1.output.right
        if not isinstance(p1.annotation, n.Deterministic) \
                or not isinstance(p2.annotation, n.Deterministic):
            errs.append("ShapeError: elimination combines deterministic statements")
        if p2.subject != p1.subject or p2.output != n.Complement(dropped):
            errs.append("ShapeError: minor premise excludes the other summand")
        ctx = self.entries(node.premises[0].conclusion.context)
        if not self.same(ctx, self.entries(node.premises[1].conclusion.context)) \
                or not self.same(ctx, self.entries(node.conclusion.context)):
            errs.append("ContextMismatch: elimination keeps one context")
        if stmt.subject != p1.subject or stmt.output != kept \
                or not isinstance(stmt.annotation, n.Deterministic):
            errs.append("ShapeError: conclusion keeps the subject at the remaining summand")

    def _rule_exp_e_sum_l(self, node, errs):
        self._exp_sum_elim(node, errs, keep_left=True)

    def _rule_exp_e_sum_r(self, node, errs):
        self._exp_sum_elim(node, errs, keep_left=False)

    def _rule_exp_i_arrow(self, node, errs):
        premise = self.sequent(node.premises[0].conclusion, errs, "premise")
        stmt = self.sequent(node.conclusion, errs, "conclusion")
        if premise is None or stmt is None:
            return
        if not isinstance(stmt.subject, n.Abstraction) or not isinstance(stmt.output, n.Arrow):
            errs.append("ShapeError: conclusion abstracts over an arrow type")
            return
        if not isinstance(premise.annotation, n.Deterministic):
            errs.append("ShapeError: the premise declares a deterministic output")
        binder = stmt.subject.var
        before = self.entries(node.premises[0].conclusion.context)
        entry = next((e for e in before
                      if e.subject == binder and e.output == stmt.output.antecedent
                      and isinstance(e.annotation, n.Theoretical)), None)
        if entry is None:
            errs.append("DischargeError: the premise context lacks the discharged assumption")
            return
        if frozenset(self.entries(node.conclusion.context)) != frozenset(before) - {entry}:
            errs.append("ContextMismatch: conclusion drops only the discharged assumption")
        if premise.subject != stmt.subject.body:
            errs.append("ShapeError: the abstraction body is the premise subject")
        if premise.output != stmt.output.consequent:
            errs.append("ShapeError: the arrow consequent is the premise output")
        if stmt.annotation != entry.annotation:
            errs.append("ArithmeticMismatch: the arrow carries the discharged probability")

    def _rule_exp_e_arrow(self, node, errs):
        got = self._two_var_premises(node, errs)
        if got is None:
            return
        p1, p2, stmt = got
        if not isinstance(p1.subject, n.Abstraction) or not isinstance(p1.output, n.Arrow):
            errs.append("ShapeError: major premise must be an arrow abstraction")
            return
        if _theoretical(p1.annotation) is None:
            errs.append("ShapeError: the arrow carries a theoretical probability")
        if not isinstance(p2.annotation, n.Deterministic):
            errs.append("ShapeError: the argument is a deterministic execution")
        if self.entries(node.premises[1].conclusion.context):
            errs.append("ShapeError: the argument holds under no assumptions")
        if p2.output != p1.output.antecedent:
            errs.append("ShapeError: the argument types the arrow antecedent")
        if not self.same(self.entries(node.conclusion.context),
                         self.entries(node.premises[0].conclusion.context)):
            errs.append("ContextMismatch: elimination keeps the major context")
        arg = n.TypedStatement(p2.subject, p2.output, n.DETERMINISTIC)
        if stmt.subject != n.Application(p1.subject.body, arg):
            errs.append("ShapeError: conclusion applies the body to the argument")
        if stmt.output != p1.output.consequent \
                or not isinstance(stmt.annotation, n.Deterministic):
            errs.append("ShapeError: conclusion is the deterministic consequent")

    # ------------------------------------------------------------------
    # Expectation, sampling and their logical rules

    def _rule_expectation(self, node, errs):
        stmt = self.sequent(node.conclusion, errs, "expectation conclusion")
        if stmt is None:
            return
        subject = stmt.subject
        if not isinstance(subject, n.TermAtom) or subject.sample is None:
            errs.append("ShapeError: expectation concerns a sampled atomic process")
            return
        if not isinstance(stmt.annotation, n.Expected):
            errs.append("ShapeError: expectation concludes an expected probability")
            return
        for entry in self.entries(node.conclusion.context):
            if (isinstance(entry.subject, n.VariableRef)
                    and entry.subject.indexed_process == subject.name
                    and entry.output == stmt.output
                    and isinstance(entry.annotation, n.Theoretical)):
                if entry.annotation.value == stmt.annotation.value:
                    return
                errs.append(
                    f"ArithmeticMismatch: the context assigns {entry.annotation.value}")
                return
        errs.append(f"MissingDesignatedVariable: no variable for process "
                    f"{subject.name!r} with output {stmt.output!r}")

    def _rule_sampling(self, node, errs):
        stmt = self.sequent(node.conclusion, errs, "sampling conclusion")
        if stmt is None:
            return
        count = len(node.premises)
        ctx = self.entries(node.conclusion.context)
        base = None
        runs = []
        hits = 0
        for premise in node.premises:
            ps = self.sequent(premise.conclusion, errs, "sampling premise")
            if ps is None:
                return
            if not isinstance(ps.annotation, n.Deterministic):
                errs.append("ShapeError: sampling collects deterministic executions")
                return
            if not self.same(ctx, self.entries(premise.conclusion.context)):
                errs.append("ContextMismatch: every execution shares the conclusion context")
                return
            stripped = n.strip_run(ps.subject)
            if base is None:
                base = stripped
            elif stripped != base:
                errs.append("MixedProcess: the executions come from one process")
                return
            run = n.run_index(ps.subject)
            if run is None:
                errs.append("ShapeError: each execution carries a run index")
                return
            runs.append(run)
            if n.output_matches(ps.output, stmt.output):
                hits += 1
        if len(set(runs)) != len(runs):
            errs.append("ShapeError: run indices must be distinct executions")
        if stmt.subject != n.with_sample(base, count):
            errs.append("ShapeError: conclusion subject samples the process")
        if not isinstance(stmt.annotation, n.Frequency):
            errs.append("ShapeError: sampling concludes a frequency")
            return
        if stmt.annotation.trials != count:
            errs.append(f"SampleSizeMismatch: {count} executions, "
                        f"{stmt.annotation.trials} trials declared")
        elif stmt.annotation.successes != hits:
            errs.append(f"FrequencyMismatch: counted {hits}/{count}, "
                        f"declared {stmt.annotation.successes}/{count}")

    def _rule_update(self, node, errs):
        got = self._two_var_premises(node, errs)
        if got is None:
            return
        p1, p2, stmt = got
        f1, f2 = p1.annotation, p2.annotation
        if not isinstance(f1, n.Frequency) or not isinstance(f2, n.Frequency):
            errs.append("ShapeError: update pools two frequency records")
            return
        if n.strip_sample(p1.subject) != n.strip_sample(p2.subject):
            errs.append("ProcessMismatch: update pools records of one process")
        if p1.output != p2.output or stmt.output != p1.output:
            errs.append("TypeMismatch: update pools records of one output")
        ctx = self.entries(node.premises[0].conclusion.context)
        if not self.same(ctx, self.entries(node.premises[1].conclusion.context)) \
                or not self.same(ctx, self.entries(node.conclusion.context)):
            errs.append("ContextMismatch: update keeps one context")
        total = f1.trials + f2.trials
        if stmt.subject != n.with_sample(n.strip_sample(p1.subject), total):
            errs.append("ShapeError: conclusion subject pools the sample sizes")
        pooled = Fraction(f1.successes + f2.successes, total)
        if not isinstance(stmt.annotation, n.Frequency) \
                or stmt.annotation.value != pooled:
            errs.append(f"ArithmeticMismatch: pooled frequency is {pooled}")

    def _samp_points(self, p1, p2, errs) -> Optional[tuple[str, Fraction, Fraction]]:
        k1, k2 = _point_kind(p1.annotation), _point_kind(p2.annotation)
        if k1 is None or k2 is None or k1 != k2:
            errs.append("ShapeError: operands must both be expected or both observed")
            return None
        return k1, n.ann_value(p1.annotation), n.ann_value(p2.annotation)

    def _check_point_conclusion(self, stmt, kind: str, value: Fraction, errs):
        if value < 0 or value > 1:
            errs.append(f"RangeError: value {value} outside [0, 1]")
            return
        if _point_kind(stmt.annotation) != kind:
            errs.append(f"ShapeError: conclusion must carry an {kind} annotation")
            return
        if n.ann_value(stmt.annotation) != value:
            errs.append(f"ArithmeticMismatch: expected value {value}")

    def _rule_samp_i_sum(self, node, errs):
        got = self._two_var_premises(node, errs)
        if got is None:
            return
        p1, p2, stmt = got
        points = self._samp_points(p1, p2, errs)
        if points is None:
            return
        kind, a, b = points
        if p1.subject != p2.subject or n.subject_sample(p1.subject) is None:
            errs.append("ShapeError: sum introduction needs one sampled subject")
        ctx = self.entries(node.premises[0].conclusion.context)
        if not self.same(ctx, self.entries(node.premises[1].conclusion.context)) \
                or not self.same(ctx, self.entries(node.conclusion.context)):
            errs.append("ContextMismatch: sum introduction keeps one context")
        if isinstance(p1.annotation, n.Frequency) and isinstance(p2.annotation, n.Frequency) \
                and p1.annotation.trials != p2.annotation.trials:
            errs.append("SampleSizeMismatch: operand trial counts differ")
        if stmt.subject != p1.subject:
            errs.append("ShapeError: conclusion keeps the subject")
        if stmt.output != n.Sum(p1.output, p2.output):
            errs.append("ShapeError: conclusion output is the sum type")
            return
        self._check_point_conclusion(stmt, kind, a + b, errs)

    def _samp_sum_elim(self, node, errs, keep_left: bool):
        got = self._two_var_premises(node, errs)
        if got is None:
            return
        p1, p2, stmt = got
        if not isinstance(p1.output, n.Sum):
            errs.append("ShapeError: elimination needs a sum-typed operand")
            return
        if p1.output.left == p1.output.right:
            errs.append("ShapeError: elimination requires distinct summand types")
        points = self._samp_points(p1, p2, errs)
        if points is None:
            return
        kind, total, minor = points
        minor_output = p1.output.right if keep_left else p1.output.left
        kept_output = p1.output.left if keep_left else p1.output.right
        if p2.subject != p1.subject or p2.output != minor_output:
            errs.append("ShapeError: minor premise types the other summand")
            return
        ctx = self.entries(node.premises[0].conclusion.context)
        if not self.same(ctx, self.entries(node.premises[1].conclusion.context)) \
                or not self.same(ctx, self.entries(node.conclusion.context)):
            errs.append("ContextMismatch: elimination keeps one context")
        if minor > total:
            errs.append(f"RangeError: subtrahend {minor} exceeds {total}")
            return
        if stmt.subject != p1.subject or stmt.output != kept_output:
            errs.append("ShapeError: conclusion keeps the subject at the remaining summand")
            return
        self._check_point_conclusion(stmt, kind, total - minor, errs)

    def _rule_samp_e_sum_l(self, node, errs):
        # Fig-6 orientation: the minor premise types the left summand.
        self._samp_sum_elim(node, errs, keep_left=False)

    def _rule_samp_e_sum_r(self, node, errs):
        self._samp_sum_elim(node, errs, keep_left=True)

    def _rule_samp_i_prod(self, node, errs):
        got = self._two_var_premises(node, errs)
        if got is None:
            return
        p1, p2, stmt = got
        points = self._samp_points(p1, p2, errs)
        if points is None:
            return
        kind, a, b = points
        n1, n2 = n.subject_sample(p1.subject), n.subject_sample(p2.subject)
        if n1 is None or n2 is None:
            errs.append("ShapeError: product introduction needs sampled operands")
        elif n1 != n2:
            errs.append("SampleSizeMismatch: operand sample sizes differ")
        if n.process_names(p1.subject) & n.process_names(p2.subject):
            errs.append("ShapeError: the paired processes must be distinct")
        e1 = self.entries(node.premises[0].conclusion.context)
        e2 = self.entries(node.premises[1].conclusion.context)
        self._require_independence(node, errs, e1, e2)
        if not self.same(self.entries(node.conclusion.context), tuple(self.union(e1, e2))):
            errs.append("ContextMismatch: conclusion joins both contexts")
        if stmt.subject != n.Pair(p1.subject, p2.subject):
            errs.append("ShapeError: conclusion subject pairs the operands")
        if stmt.output != n.Product(p1.output, p2.output):
            errs.append("ShapeError: conclusion output is the product type")
            return
        self._check_point_conclusion(stmt, kind, a * b, errs)

    def _samp_prod_elim(self, node, errs, left: bool):
        got = self._two_var_premises(node, errs)
        if got is None:
            return
        p1, p2, stmt = got
        if not isinstance(p1.output, n.Product):
            errs.append("ShapeError: elimination needs a product-typed operand")
            return
        if p1.output.left == p1.output.right:
            errs.append("ShapeError: elimination requires distinct component types")
        points = self._samp_points(p1, p2, errs)
        if points is None:
            return
        kind, total, minor = points
        wanted_minor = n.Fst(p1.subject) if left else n.Snd(p1.subject)
        minor_output = p1.output.left if left else p1.output.right
        wanted_subject = n.Snd(p1.subject) if left else n.Fst(p1.subject)
        kept_output = p1.output.right if left else p1.output.left
        if p2.subject != wanted_minor or p2.output != minor_output:
            errs.append("ShapeError: minor premise projects the other component")
            return
        ctx = self.entries(node.premises[0].conclusion.context)
        if not self.same(ctx, self.entries(node.premises[1].conclusion.context)) \
                or not self.same(ctx, self.entries(node.conclusion.context)):
            errs.append("ContextMismatch: elimination keeps one context")
        if minor == 0:
            errs.append("DivisionByZero: minor premise has value 0")
            return
        value = total / minor
        if value > 1:
            errs.append(f"RangeError: quotient {value} exceeds 1")
            return
        if stmt.subject != wanted_subject or stmt.output != kept_output:
            errs.append("ShapeError: conclusion projects the remaining component")
            return
        self._check_point_conclusion(stmt, kind, value, errs)

    def _rule_samp_e_prod_l(self, node, errs):
        self._samp_prod_elim(node, errs, left=True)

    def _rule_samp_e_prod_r(self, node, errs):
        self._samp_prod_elim(node, errs, left=False)

    def _rule_samp_i_arrow(self, node, errs):
        premise = self.sequent(node.premises[0].conclusion, errs, "premise")
        stmt = self.sequent(node.conclusion, errs, "conclusion")
        if premise is None or stmt is None:
            return
        if not isinstance(stmt.subject, n.Abstraction) or not isinstance(stmt.output, n.Arrow):
            errs.append("ShapeError: conclusion abstracts over an arrow type")
            return
        if not isinstance(stmt.annotation, n.ArrowTagged):
            errs.append("ShapeError: the conclusion annotation carries the dependency tag")
            return
        binder = stmt.subject.var
        wanted = n.TypedStatement(binder, stmt.output.antecedent,
                                  n.Theoretical(stmt.annotation.tag))
        before = self.entries(node.premises[0].conclusion.context)
        if wanted not in before:
            errs.append("DischargeError: the premise context lacks the tagged assumption")
            return
        if frozenset(self.entries(node.conclusion.context)) != frozenset(before) - {wanted}:
            errs.append("ContextMismatch: conclusion drops only the discharged assumption")
        if premise.subject != stmt.subject.body:
            errs.append("ShapeError: the abstraction body is the premise subject")
        if premise.output != stmt.output.consequent:
            errs.append("ShapeError: the arrow consequent is the premise output")
        if _point_kind(premise.annotation) is None:
            errs.append("ShapeError: the premise carries an expected or observed value")
            return
        if stmt.annotation.body != premise.annotation:
            errs.append("ArithmeticMismatch: the tag wraps the premise annotation unchanged")

    def _rule_samp_e_arrow(self, node, errs):
        got = self._two_var_premises(node, errs)
        if got is None:
            return
        p1, p2, stmt = got
        if not isinstance(p1.subject, n.Abstraction) or not isinstance(p1.output, n.Arrow) \
                or not isinstance(p1.annotation, n.ArrowTagged):
            errs.append("ShapeError: major premise must be a tagged arrow abstraction")
            return
        body_kind = _point_kind(p1.annotation.body)
        if body_kind is None:
            errs.append("ShapeError: the arrow body carries an expected or observed value")
            return
        tag = p1.annotation.tag
        b = n.ann_value(p1.annotation.body)
        if p2.output != p1.output.antecedent:
            errs.append("ShapeError: minor premise types the arrow antecedent")
        minor_entries = self.entries(node.premises[1].conclusion.context)
        if not any(e.output == p1.output.antecedent
                   and isinstance(e.annotation, n.Theoretical)
                   and e.annotation.value == tag
                   for e in minor_entries):
            errs.append("ShapeError: the minor premise holds under a variable "
                        "carrying the tagged probability")
        e1 = self.entries(node.premises[0].conclusion.context)
        concl = frozenset(self.entries(node.conclusion.context))
        if concl != frozenset(e1) and concl != self.union(e1, minor_entries):
            errs.append("ContextMismatch: conclusion keeps the major context, "
                        "optionally joined with the minor one")
        if isinstance(p2.annotation, n.Deterministic):
            # Substituting a deterministic execution keeps the expectation.
            if n.subject_sample(p2.subject) is not None:
                errs.append("ShapeError: a deterministic argument is a single execution")
            expected_ann = p1.annotation.body
            if stmt.annotation != expected_ann:
                errs.append("ArithmeticMismatch: deterministic substitution keeps the value")
        else:
            minor_kind = _point_kind(p2.annotation)
            if minor_kind != body_kind:
                errs.append("ShapeError: argument and arrow body disagree in kind")
                return
            if n.subject_sample(p2.subject) != n.subject_sample(p1.subject.body):
                errs.append("SampleSizeMismatch: operand sample sizes differ")
            value = n.ann_value(p2.annotation) * b
            self._check_point_conclusion(stmt, body_kind, value, errs)
        arg = n.TypedStatement(p2.subject, p2.output, n.DETERMINISTIC)
        if stmt.subject != n.Application(p1.subject.body, arg):
            errs.append("ShapeError: conclusion applies the body to the argument")
        if stmt.output != p1.output.consequent:
            errs.append("ShapeError: conclusion output is the arrow consequent")

    # ------------------------------------------------------------------
    # Prior update

    def _bayes_family(self, node, errs):
        family = []
        binder = None
        antecedent = None
        subject = None
        consequent = None
        for premise in node.premises:
            ps = self.sequent(premise.conclusion, errs, "hypothesis")
            if ps is None:
                return None
            entries = self.entries(premise.conclusion.context)
            if len(entries) != 1:
                errs.append("ShapeError: each hypothesis assumes exactly one entry")
                return None
            entry = entries[0]
            a = _theoretical(entry.annotation)
            b = _theoretical(ps.annotation)
            if a is None or b is None:
                errs.append("ShapeError: hypotheses pair theoretical probabilities")
                return None
            if binder is None:
                binder, antecedent = entry.subject, entry.output
                subject, consequent = ps.subject, ps.output
            elif (entry.subject, entry.output, ps.subject, ps.output) != \
                    (binder, antecedent, subject, consequent):
                errs.append("ShapeError: hypotheses must share variable and outputs")
                return None
            family.append((a, b))
        return family, binder, antecedent, subject, consequent

    def _rule_bayes_i(self, node, errs):
        got = self._bayes_family(node, errs)
        if got is None:
            return
        family, binder, antecedent, subject, consequent = got
        total = sum((b for _, b in family), Fraction(0))
        if total != 1:
            errs.append(f"PriorsNotNormalized: priors sum to {total}, not 1")
        stmt = self.sequent(node.conclusion, errs, "conclusion")
        if stmt is None:
            return
        if self.entries(node.conclusion.context):
            errs.append("ShapeError: the implication family holds under no assumptions")
        if stmt.subject != n.Abstraction(binder, subject):
            errs.append("ShapeError: conclusion abstracts the hypothesis variable")
        if stmt.output != n.Arrow(antecedent, consequent):
            errs.append("ShapeError: conclusion output links condition to outcome")
        ann = stmt.annotation
        if not (isinstance(ann, n.ArrowTagged) and isinstance(ann.body, n.Theoretical)
                and (ann.tag, ann.body.value) in family):
            errs.append("ShapeError: conclusion must restate one hypothesis of the family")

    def _rule_bayes_e(self, node, errs):
        intro = node.premises[0]
        if intro.rule != "bayes_i":
            errs.append("ShapeError: the first premise introduces the prior family")
            return
        got = self._bayes_family(intro, [])
        if got is None:
            errs.append("ShapeError: the prior family is malformed")
            return
        family, binder, antecedent, subject, consequent = got
        intro_stmt = self.sequent(intro.conclusion, errs, "family conclusion")
        data = self.sequent(node.premises[1].conclusion, errs, "data premise")
        stmt = self.sequent(node.conclusion, errs, "conclusion")
        if intro_stmt is None or data is None or stmt is None:
            return
        ann = intro_stmt.annotation
        if not (isinstance(ann, n.ArrowTagged) and isinstance(ann.body, n.Theoretical)
                and (ann.tag, ann.body.value) in family):
            errs.append("ShapeError: the family conclusion selects no hypothesis")
            return
        selected = (ann.tag, ann.body.value)
        index = family.index(selected)
        if not isinstance(data.annotation, n.Frequency):
            errs.append("NonIntegerSuccessCount: the data premise carries a "
                        "frequency of integer counts")
            return
        if data.output != antecedent:
            errs.append("TypeMismatch: the data premise observes the condition output")
        hypothesis = n.TypedStatement(binder, antecedent, n.Theoretical(selected[0]))
        data_entries = self.entries(node.premises[1].conclusion.context)
        if hypothesis not in data_entries:
            errs.append("ShapeError: the data context assumes the selected hypothesis")
        if not self.same(self.entries(node.conclusion.context), data_entries):
            errs.append("ContextMismatch: conclusion keeps the data context")
        posterior = stats.bayes_posterior(
            family, index, data.annotation.successes, data.annotation.trials)
        if stmt.subject != n.Application(subject, data):
            errs.append("ShapeError: conclusion updates the variable with the data")
        if stmt.output != consequent:
            errs.append("ShapeError: conclusion output is the updated outcome")
        declared = _theoretical(stmt.annotation)
        if declared is None:
            errs.append("ShapeError: the posterior is a theoretical probability")
            return
        if abs(float(declared) - posterior) > NUMERIC_TOLERANCE:
            errs.append(f"ArithmeticMismatch: posterior is {posterior:.12f}, "
                        f"declared {float(declared):.12f}")

    # ------------------------------------------------------------------
    # Trust fragment

    def _trust_first_premise(self, premise, output, errs) -> Optional[Fraction]:
        """Extract the theoretical probability for `output` from the first
        premise, which may be a sequent or a distribution assertion."""
        j = premise.conclusion
        if isinstance(j, n.Judgement):
            stmt = j.conclusion
            if not isinstance(stmt.subject, n.VariableRef):
                errs.append("ShapeError: the model premise concerns a random variable")
                return None
            a = _theoretical(stmt.annotation)
            if a is None or stmt.output != output:
                errs.append("ShapeError: the model premise assigns the observed "
                            "output a theoretical probability")
                return None
            return a
        matches = [e for e in self.entries(j.context)
                   if e.output == output and isinstance(e.annotation, n.Theoretical)]
        if len(matches) != 1:
            errs.append("ShapeError: the model distribution must assign the observed "
                        "output exactly one theoretical probability")
            return None
        return matches[0].annotation.value

    def _trust_entries(self, premise) -> Entries:
        return self.entries(premise.conclusion.context)

    def _trust_intro(self, node, errs, negative: bool):
        data = self.sequent(node.premises[1].conclusion, errs, "observation premise")
        stmt = self.sequent(node.conclusion, errs, "conclusion")
        if data is None or stmt is None:
            return
        if not isinstance(data.annotation, n.Frequency):
            errs.append("ShapeError: the observation carries a frequency")
            return
        a = self._trust_first_premise(node.premises[0], data.output, errs)
        if a is None:
            return
        wanted_side = n.ThresholdFailsSC if negative else n.ThresholdHoldsSC
        if not any(isinstance(sc, wanted_side) for sc in node.side_conditions):
            errs.append("ShapeError: missing threshold side condition")
        k, trials = data.annotation.successes, data.annotation.trials
        holds = stats.accepts(self.strategy, a, k, trials)
        if negative and holds:
            errs.append(f"SideConditionFails: {a} lies within the acceptance "
                        f"region for {k}/{trials}")
        if not negative and not holds:
            errs.append(f"SideConditionFails: {a} lies outside the acceptance "
                        f"region for {k}/{trials}")
        wanted = n.trust_statement(data, negative)
        if stmt != wanted:
            errs.append("ShapeError: conclusion wraps the observed statement")
        joined = self.union(self._trust_entries(node.premises[0]),
                            self.entries(node.premises[1].conclusion.context))
        if frozenset(self.entries(node.conclusion.context)) != joined:
            errs.append("ContextMismatch: conclusion joins both premise contexts")

    def _rule_trust_i(self, node, errs):
        self._trust_intro(node, errs, negative=False)

    def _rule_utrust_i(self, node, errs):
        self._trust_intro(node, errs, negative=True)

    def _trust_elim(self, node, errs, negative: bool):
        premise = self.sequent(node.premises[0].conclusion, errs, "trust premise")
        stmt = self.sequent(node.conclusion, errs, "conclusion")
        if premise is None or stmt is None:
            return
        wrap_type = n.UTrustWrap if negative else n.TrustWrap
        if not isinstance(premise.subject, wrap_type):
            errs.append("ShapeError: the premise is a trust verdict")
            return
        inner = premise.subject.inner
        if stmt != inner:
            errs.append("ShapeError: conclusion restates the trusted statement")
        if not isinstance(inner.annotation, n.Frequency):
            errs.append("ShapeError: the trusted statement carries a frequency")
            return
        if not isinstance(inner.subject, n.TermAtom):
            errs.append("ShapeError: the trusted statement samples an atomic process")
            return
        before = frozenset(self.entries(node.premises[0].conclusion.context))
        after = frozenset(self.entries(node.conclusion.context))
        added = after - before
        if before - after or len(added) != 1:
            errs.append("ContextMismatch: elimination adds exactly one entry")
            return
        entry = added.pop()
        if not (isinstance(entry.subject, n.VariableRef)
                and entry.subject.indexed_process == inner.subject.name
                and entry.output == inner.output):
            errs.append("ShapeError: the new entry indexes the trusted process")
            return
        wanted_ann = n.IntervalComplement if negative else n.Interval
        if not isinstance(entry.annotation, wanted_ann):
            errs.append("ShapeError: the new entry ranges over the "
                        + ("rejected" if negative else "accepted") + " values")
            return
        interval = stats.acceptance_interval(
            self.strategy, inner.annotation.successes, inner.annotation.trials)
        if abs(float(entry.annotation.lo) - interval.lo) > NUMERIC_TOLERANCE \
                or abs(float(entry.annotation.hi) - interval.hi) > NUMERIC_TOLERANCE:
            errs.append(f"ArithmeticMismatch: acceptance interval is "
                        f"[{interval.lo:.9f}, {interval.hi:.9f}]")

    def _rule_trust_e(self, node, errs):
        self._trust_elim(node, errs, negative=False)

    def _rule_utrust_e(self, node, errs):
        self._trust_elim(node, errs, negative=True)

    # ------------------------------------------------------------------
    # Structural rules

    def _rule_weakening(self, node, errs):
        main = self.sequent(node.premises[0].conclusion, errs, "weakened premise")
        extra = self.sequent(node.premises[1].conclusion, errs, "extension premise")
        stmt = self.sequent(node.conclusion, errs, "conclusion")
        if main is None or extra is None or stmt is None:
            return
        e1 = self.entries(node.premises[0].conclusion.context)
        e2 = self.entries(node.premises[1].conclusion.context)
        self._require_independence(node, errs, e1, e2)
        if stmt != main:
            errs.append("ShapeError: weakening keeps the conclusion unchanged")
        if frozenset(self.entries(node.conclusion.context)) != self.union(e1, e2):
            errs.append("ContextMismatch: weakening joins both contexts")

    def _rule_contraction(self, node, errs):
        premise = self.sequent(node.premises[0].conclusion, errs, "premise")
        stmt = self.sequent(node.conclusion, errs, "conclusion")
        if premise is None or stmt is None:
            return
        if stmt != premise:
            errs.append("ShapeError: contraction keeps the conclusion unchanged")
        if not isinstance(premise.annotation, n.Frequency):
            errs.append("ShapeError: contraction weighs hypotheses against a frequency")
            return
        k, trials = premise.annotation.successes, premise.annotation.trials
        before = self.entries(node.premises[0].conclusion.context)
        after = self.entries(node.conclusion.context)
        removed = [e for e in before if e not in set(after)]
        added = [e for e in after if e not in set(before)]
        if len(added) != 1 or not removed:
            errs.append("ShapeError: contraction replaces hypotheses with one value")
            return
        new = added[0]
        chosen = _theoretical(new.annotation)
        if chosen is None:
            errs.append("ShapeError: the contracted entry is a theoretical probability")
            return
        if any(e.subject != new.subject or e.output != new.output for e in removed):
            errs.append("ShapeError: contraction collapses one variable and output")
            return
        fun = next((sc for sc in node.side_conditions
                    if isinstance(sc, n.ContractionFunSC)), n.ContractionFunSC("ml"))
        if len(removed) == 1 and isinstance(removed[0].annotation, n.Interval):
            interval = removed[0].annotation
            if fun.kind == "ml":
                wanted = stats.ml_contract_interval(interval.lo, interval.hi, k, trials)
                if chosen != wanted:
                    errs.append(f"ContractionValueMismatch: most plausible value is {wanted}")
            elif not interval.contains(chosen):
                errs.append(f"ContractionValueMismatch: {chosen} lies outside the "
                            f"hypothesis range")
            return
        candidates = [_theoretical(e.annotation) for e in removed]
        if any(c is None for c in candidates):
            errs.append("ShapeError: hypotheses must be theoretical values or one interval")
            return
        if fun.kind == "ml":
            wanted = stats.ml_contract(candidates, k, trials)
            if chosen != wanted:
                errs.append(f"ContractionValueMismatch: most plausible value is {wanted}")
        else:
            if fun.value != chosen or chosen not in candidates:
                errs.append(f"ContractionValueMismatch: {chosen} is not the chosen hypothesis")

    def _rule_cut(self, node, errs):
        major = self.sequent(node.premises[0].conclusion, errs, "major premise")
        minor = self.sequent(node.premises[1].conclusion, errs, "minor premise")
        stmt = self.sequent(node.conclusion, errs, "conclusion")
        if major is None or minor is None or stmt is None:
            return
        if not isinstance(stmt.subject, n.Application):
            errs.append("ShapeError: a cut concludes an application")
            return
        if not isinstance(major.annotation, n.Expected) \
                or not isinstance(minor.annotation, n.Expected):
            errs.append("ShapeError: both premises carry expected probabilities")
            return
        antecedent = stmt.subject.arg.output
        a = minor.annotation.value
        e1 = self.entries(node.premises[0].conclusion.context)
        entry = next((e for e in e1 if e.output == antecedent
                      and isinstance(e.annotation, n.Theoretical)
                      and e.annotation.value == a), None)
        if entry is None:
            errs.append("ShapeError: the major context assumes the substituted "
                        "output at the minor's probability")
            return
        if minor.output != antecedent:
            errs.append("ShapeError: the minor premise types the substituted output")
        if n.subject_sample(major.subject) != n.subject_sample(minor.subject):
            errs.append("SampleSizeMismatch: premise sample sizes differ")
        e2 = self.entries(node.premises[1].conclusion.context)
        wanted_ctx = self.union(tuple(frozenset(e1) - {entry}), e2)
        if frozenset(self.entries(node.conclusion.context)) != wanted_ctx:
            errs.append("ContextMismatch: conclusion joins the contexts minus "
                        "the substituted assumption")
        arg = n.TypedStatement(n.strip_sample(minor.subject), antecedent, n.DETERMINISTIC)
        if stmt.subject != n.Application(major.subject, arg):
            errs.append("ShapeError: conclusion applies the major subject to the minor")
        if stmt.output != major.output:
            errs.append("ShapeError: conclusion keeps the major output")
        value = a * major.annotation.value
        if stmt.annotation != n.Expected(value):
            errs.append(f"ArithmeticMismatch: expected value {value}")


def check_derivation(derivation: n.Derivation,
                     env: Union[Mapping[str, Distribution],
                                Iterable[Distribution], None] = None,
                     strategy: stats.ThresholdStrategy = stats.DEFAULT_STRATEGY,
                     ) -> CheckReport:
    """Validate a derivation tree against named distributions and a threshold
    strategy; returns an accept/reject report with per-node failures."""
    if env is None:
        env = {}
    elif not isinstance(env, Mapping):
        env = {d.name: d for d in env}
    return _Checker(env, strategy).check(derivation)


def check_declarations(items: Sequence, strategy: stats.ThresholdStrategy
                       = stats.DEFAULT_STRATEGY) -> list[tuple[Optional[str], CheckReport]]:
    """Check every derivation declared in a parsed file, resolving context
    names against the file's own distributions."""
    env = {item.name: item for item in items if isinstance(item, Distribution)}
    out = []
    for i, item in enumerate(items):
        if isinstance(item, n.DeclaredDerivation):
            name = item.name or f"derivation-{i}"
            out.append((name, check_derivation(item.derivation, env, strategy)))
    return out
