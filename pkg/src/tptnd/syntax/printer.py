"""Canonical text rendering for every AST node.

The printer and parser are inverse: parsing printed text yields a
structurally identical node. Compound output types are always fully
parenthesised, probabilities print as exact fractions and frequencies keep
their raw counts.
"""
from __future__ import annotations

from fractions import Fraction
from functools import singledispatch

from tptnd.syntax import nodes as n


def _frac(value: Fraction) -> str:
    return str(value)


# -- output types ------------------------------------------------------------

def _output(o: n.OutputType) -> str:
    if isinstance(o, n.Atom):
        return o.name
    if isinstance(o, n.Complement):
        inner = _output(o.inner)
        return f"!{inner}"
    if isinstance(o, n.Product):
        return f"({_output(o.left)} * {_output(o.right)})"
    if isinstance(o, n.Sum):
        return f"({_output(o.left)} + {_output(o.right)})"
    if isinstance(o, n.Arrow):
        return f"({_output(o.antecedent)} -> {_output(o.consequent)})"
    raise TypeError(f"not an output type: {o!r}")


# -- annotations ---------------------------------------------------------------

def _annotation(a: n.Annotation) -> str:
    if isinstance(a, n.Theoretical):
        return f"@ {_frac(a.value)}"
    if isinstance(a, n.Expected):
        return f"~ {_frac(a.value)}"
    if isinstance(a, n.Frequency):
        return f"# {a.successes}/{a.trials}"
    if isinstance(a, n.Interval):
        return f"in [{_frac(a.lo)}, {_frac(a.hi)}]"
    if isinstance(a, n.IntervalComplement):
        return f"notin [{_frac(a.lo)}, {_frac(a.hi)}]"
    if isinstance(a, n.ArrowTagged):
        return f"[{_frac(a.tag)}] {_annotation(a.body)}"
    if isinstance(a, n.Deterministic):
        return ""
    raise TypeError(f"not an annotation: {a!r}")


# -- subjects ----------------------------------------------------------------

def _var(v: n.VariableRef) -> str:
    return v.name if v.indexed_process is None else f"{v.name}_{v.indexed_process}"


def _subject(s: n.Subject) -> str:
    if isinstance(s, n.VariableRef):
        return f"${_var(s)}"
    if isinstance(s, n.TermAtom):
        text = s.name
        if s.sample is not None:
            text += f"[{s.sample}]"
        if s.run is not None:
            text += f"^{s.run}"
        return text
    if isinstance(s, n.Pair):
        return f"<{_subject(s.left)}, {_subject(s.right)}>"
    if isinstance(s, n.Fst):
        return f"fst({_subject(s.inner)})"
    if isinstance(s, n.Snd):
        return f"snd({_subject(s.inner)})"
    if isinstance(s, n.Abstraction):
        body = _subject(s.body)
        if isinstance(s.body, n.Application):
            body = f"({body})"
        return f"[{_var(s.var)}]{body}"
    if isinstance(s, n.Application):
        return f"{_subject(s.fun)}.({_statement(s.arg)})"
    if isinstance(s, n.TrustWrap):
        return f"Trust({_statement(s.inner)})"
    if isinstance(s, n.UTrustWrap):
        return f"UTrust({_statement(s.inner)})"
    raise TypeError(f"not a subject: {s!r}")


# -- statements, contexts, judgements ------------------------------------------

def _statement(st: n.TypedStatement) -> str:
    if isinstance(st.subject, (n.TrustWrap, n.UTrustWrap)):
        return _subject(st.subject)
    ann = _annotation(st.annotation)
    head = f"{_subject(st.subject)} : {_output(st.output)}"
    return f"{head} {ann}" if ann else head


def _context_entry(st: n.TypedStatement) -> str:
    assert isinstance(st.subject, n.VariableRef)
    ann = _annotation(st.annotation)
    head = f"{_var(st.subject)} : {_output(st.output)}"
    return f"{head} {ann}" if ann else head


def _context(ctx: n.Context) -> str:
    parts = []
    for item in ctx.items:
        if isinstance(item, n.NamedContextRef):
            parts.append(item.name)
        else:
            parts.append(_context_entry(item))
    return ", ".join(parts)


def _judgement(j: n.JudgementLike) -> str:
    if isinstance(j, n.DistributionJudgement):
        ctx = _context(j.context) or "{}"
        return f"{ctx} :: distribution"
    ctx = _context(j.context)
    lhs = f"{ctx} " if ctx else ""
    return f"{lhs}|- {_statement(j.conclusion)}"


# -- side conditions and derivations --------------------------------------------

def _side(sc: n.SideCondition) -> str:
    if isinstance(sc, n.IndependentSC):
        return "independent"
    if isinstance(sc, n.ThresholdHoldsSC):
        return "threshold_holds"
    if isinstance(sc, n.ThresholdFailsSC):
        return "threshold_fails"
    if isinstance(sc, n.NormalizedPriorsSC):
        return "priors_normalized"
    if isinstance(sc, n.AdditivitySC):
        return "additivity"
    if isinstance(sc, n.ContractionFunSC):
        return f"fun {sc.kind} {_frac(sc.value)}" if sc.value is not None else f"fun {sc.kind}"
    raise TypeError(f"not a side condition: {sc!r}")


def _derivation(d: n.Derivation, indent: int = 0) -> str:
    pad = "  " * indent
    lines = [f"{pad}(rule {d.rule}"]
    for premise in d.premises:
        lines.append(f"{pad}  (premise")
        lines.append(_derivation(premise, indent + 2))
        lines[-1] += ")"
    for sc in d.side_conditions:
        lines.append(f"{pad}  (side {_side(sc)})")
    lines.append(f"{pad}  (conclude {_judgement(d.conclusion)}))")
    return "\n".join(lines)


# -- public dispatch -------------------------------------------------------------

@singledispatch
def pretty_print(node) -> str:
    """Render any AST node back to its canonical concrete syntax."""
    raise TypeError(f"cannot print {node!r}")


for _cls in (n.Atom, n.Complement, n.Product, n.Sum, n.Arrow):
    pretty_print.register(_cls, _output)
for _cls in (n.Theoretical, n.Expected, n.Frequency, n.Interval,
             n.IntervalComplement, n.ArrowTagged, n.Deterministic):
    pretty_print.register(_cls, _annotation)
for _cls in (n.TermAtom, n.Pair, n.Fst, n.Snd, n.Abstraction, n.Application,
             n.TrustWrap, n.UTrustWrap):
    pretty_print.register(_cls, _subject)
pretty_print.register(n.VariableRef, _subject)
pretty_print.register(n.TypedStatement, _statement)
pretty_print.register(n.Context, _context)
pretty_print.register(n.Judgement, _judgement)
pretty_print.register(n.DistributionJudgement, _judgement)
pretty_print.register(n.Derivation, _derivation)
for _cls in (n.IndependentSC, n.ThresholdHoldsSC, n.ThresholdFailsSC,
             n.NormalizedPriorsSC, n.AdditivitySC, n.ContractionFunSC):
    pretty_print.register(_cls, _side)


@pretty_print.register
def _(decl: n.DeclaredJudgement) -> str:
    head = f"judgement {decl.name} " if decl.name else ""
    return f"{head}{_judgement(decl.judgement)}"


@pretty_print.register
def _(decl: n.DeclaredDerivation) -> str:
    head = f"derivation {decl.name}\n" if decl.name else ""
    return f"{head}{_derivation(decl.derivation)}"


def print_file(items) -> str:
    """Render a parsed file back to source form."""
    from tptnd.distribution import Distribution, print_distribution

    chunks = []
    for item in items:
        if isinstance(item, Distribution):
            chunks.append(print_distribution(item))
        else:
            chunks.append(pretty_print(item))
    return "\n\n".join(chunks) + "\n"
