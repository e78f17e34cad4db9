"""Recursive-descent parser for the judgement/derivation DSL.

Concrete syntax, in brief::

    dist G { x_d : 1 @ 1/6; x_d : 2 @ 1/6 }      -- named distribution
    G |- d[8] : 1 # 3/8                           -- sequent judgement
    G, x : female @ 0.52 :: distribution          -- distribution judgement
    derivation name (rule update (premise ...) (conclude ...))

Annotations: ``@ r`` theoretical, ``~ r`` expected, ``# k/n`` frequency,
``in [lo,hi]`` interval, ``notin [lo,hi]`` its complement, ``[r] ann`` a
dependency tag. Subjects: ``t[n]`` sampled process, ``t^i`` run index,
``<t,u>``, ``fst(t)``, ``snd(t)``, ``[x]t``, ``t.(u : alpha)``,
``Trust(...)``/``UTrust(...)``; random variables in subject position carry a
``$`` sigil (``$x_d``), context entries never do. Comments run from ``--`` to
end of line; files are newline-insensitive UTF-8.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from tptnd.errors import RangeError, TptndError
from tptnd.syntax import nodes as n
from tptnd.syntax.rules import RULES


class ParseError(TptndError):
    def __init__(self, message: str, line: int, col: int, expected: str = ""):
        tail = f" (expected {expected})" if expected else ""
        super().__init__(f"{line}:{col}: {message}{tail}")
        self.line = line
        self.col = col
        self.expected = expected


class ArityError(ParseError):
    pass


KEYWORDS = frozenset({
    "dist", "judgement", "derivation", "rule", "premise", "side", "conclude",
    "distribution", "in", "notin", "fst", "snd", "Trust", "UTrust",
})

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<comment>--[^\n]*)"
    r"|(?P<ident>[A-Za-z][A-Za-z0-9]*)"
    r"|(?P<number>\d+(?:\.\d+)?)"
    r"|(?P<punct>\|-|::|->|[{}()\[\]<>,;:@~#*+!.^_$/])"
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident | number | punct | eof
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        lexeme = m.group(0)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, lexeme, line, col))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    # -- token plumbing ----------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at_punct(self, text: str, ahead: int = 0) -> bool:
        tok = self.peek(ahead)
        return tok.kind == "punct" and tok.text == text

    def at_keyword(self, word: str, ahead: int = 0) -> bool:
        tok = self.peek(ahead)
        return tok.kind == "ident" and tok.text == word

    def fail(self, expected: str) -> ParseError:
        tok = self.peek()
        shown = tok.text or "end of input"
        return ParseError(f"unexpected {shown!r}", tok.line, tok.col, expected)

    def expect_punct(self, text: str) -> Token:
        if not self.at_punct(text):
            raise self.fail(f"'{text}'")
        return self.advance()

    def expect_keyword(self, word: str) -> Token:
        if not self.at_keyword(word):
            raise self.fail(f"'{word}'")
        return self.advance()

    def expect_name(self, what: str) -> Token:
        tok = self.peek()
        if tok.kind != "ident" or tok.text in KEYWORDS:
            raise self.fail(what)
        return self.advance()

    def expect_nat(self, what: str) -> int:
        tok = self.peek()
        if tok.kind != "number" or "." in tok.text:
            raise self.fail(what)
        self.advance()
        return int(tok.text)

    def located(self, make, *args):
        """Build an AST node, attaching a location to any range violation."""
        tok = self.peek()
        try:
            return make(*args)
        except RangeError as exc:
            raise RangeError(f"{tok.line}:{tok.col}: {exc}") from None
        except n.InvalidNode as exc:
            raise ParseError(str(exc), tok.line, tok.col) from None

    # -- numbers -----------------------------------------------------------

    def rational(self) -> Fraction:
        tok = self.peek()
        if tok.kind != "number":
            raise self.fail("a probability")
        self.advance()
        if "." not in tok.text and self.at_punct("/"):
            self.advance()
            denom = self.expect_nat("a denominator")
            if denom == 0:
                raise ParseError("zero denominator", tok.line, tok.col)
            return Fraction(int(tok.text), denom)
        return Fraction(tok.text)

    def probability(self) -> Fraction:
        tok = self.peek()
        value = self.rational()
        if not (0 <= value <= 1):
            raise RangeError(f"{tok.line}:{tok.col}: probability {value} outside [0, 1]")
        return value

    # -- variables and subjects --------------------------------------------

    def varref(self) -> n.VariableRef:
        name = self.expect_name("a variable name").text
        indexed = None
        if self.at_punct("_"):
            self.advance()
            indexed = self.expect_name("a process name").text
        return n.VariableRef(name, indexed)

    def subject(self) -> n.Subject:
        node = self.primary()
        while self.at_punct("."):
            self.advance()
            self.expect_punct("(")
            arg = self.statement()
            self.expect_punct(")")
            node = n.Application(node, arg)
        return node

    def primary(self) -> n.Subject:
        if self.at_punct("$"):
            self.advance()
            return self.varref()
        if self.at_punct("<"):
            self.advance()
            left = self.subject()
            self.expect_punct(",")
            right = self.subject()
            self.expect_punct(">")
            return n.Pair(left, right)
        if self.at_punct("["):
            self.advance()
            var = self.varref()
            self.expect_punct("]")
            return n.Abstraction(var, self.primary())
        if self.at_punct("("):
            self.advance()
            node = self.subject()
            self.expect_punct(")")
            return node
        if self.at_keyword("fst") or self.at_keyword("snd"):
            ctor = n.Fst if self.advance().text == "fst" else n.Snd
            self.expect_punct("(")
            inner = self.subject()
            self.expect_punct(")")
            return ctor(inner)
        if self.at_keyword("Trust") or self.at_keyword("UTrust"):
            negative = self.advance().text == "UTrust"
            self.expect_punct("(")
            inner = self.statement()
            self.expect_punct(")")
            return (n.UTrustWrap if negative else n.TrustWrap)(inner)
        name = self.expect_name("a process").text
        sample = run = None
        if self.at_punct("["):
            self.advance()
            sample = self.expect_nat("a sample size")
            self.expect_punct("]")
        if self.at_punct("^"):
            self.advance()
            run = self.expect_nat("a run index")
        return self.located(n.TermAtom, name, sample, run)

    # -- output types --------------------------------------------------------

    def output(self) -> n.OutputType:
        left = self.output_sum()
        if self.at_punct("->"):
            self.advance()
            return n.Arrow(left, self.output())
        return left

    def output_sum(self) -> n.OutputType:
        node = self.output_prod()
        while self.at_punct("+"):
            self.advance()
            node = n.Sum(node, self.output_prod())
        return node

    def output_prod(self) -> n.OutputType:
        node = self.output_atom()
        while self.at_punct("*"):
            self.advance()
            node = n.Product(node, self.output_atom())
        return node

    def output_atom(self) -> n.OutputType:
        if self.at_punct("!"):
            self.advance()
            return n.Complement(self.output_atom())
        if self.at_punct("("):
            self.advance()
            node = self.output()
            self.expect_punct(")")
            return node
        tok = self.peek()
        if tok.kind == "number" and "." not in tok.text:
            self.advance()
            return n.Atom(tok.text)
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            self.advance()
            return n.Atom(tok.text)
        raise self.fail("an output")

    # -- annotations ---------------------------------------------------------

    def annotation(self) -> n.Annotation:
        if self.at_punct("@"):
            self.advance()
            return n.Theoretical(self.probability())
        if self.at_punct("~"):
            self.advance()
            return n.Expected(self.probability())
        if self.at_punct("#"):
            tok = self.advance()
            successes = self.expect_nat("a success count")
            self.expect_punct("/")
            trials = self.expect_nat("a trial count")
            return self.located(n.Frequency, successes, trials)
        if self.at_keyword("in") or self.at_keyword("notin"):
            ctor = n.Interval if self.advance().text == "in" else n.IntervalComplement
            self.expect_punct("[")
            lo = self.probability()
            self.expect_punct(",")
            hi = self.probability()
            self.expect_punct("]")
            return self.located(ctor, lo, hi)
        if self.at_punct("["):
            self.advance()
            tag = self.probability()
            self.expect_punct("]")
            return n.ArrowTagged(tag, self.annotation())
        return n.DETERMINISTIC

    def _at_annotation(self) -> bool:
        return (self.at_punct("@") or self.at_punct("~") or self.at_punct("#")
                or self.at_punct("[") or self.at_keyword("in") or self.at_keyword("notin"))

    # -- statements, contexts, judgements ------------------------------------

    def statement(self) -> n.TypedStatement:
        subject = self.subject()
        if isinstance(subject, (n.TrustWrap, n.UTrustWrap)) and not self.at_punct(":"):
            inner = subject.inner
            return self.located(n.TypedStatement, subject, inner.output, inner.annotation)
        self.expect_punct(":")
        output = self.output()
        annotation = self.annotation()
        return self.located(n.TypedStatement, subject, output, annotation)

    def context_entry(self) -> n.TypedStatement:
        if self.at_punct("$"):
            self.advance()
        var = self.varref()
        self.expect_punct(":")
        output = self.output()
        annotation = self.annotation()
        return self.located(n.TypedStatement, var, output, annotation)

    def context_item(self) -> n.ContextItem:
        tok = self.peek()
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            nxt = self.peek(1)
            if not (nxt.kind == "punct" and nxt.text in (":", "_")):
                self.advance()
                return n.NamedContextRef(tok.text)
        return self.context_entry()

    def judgement(self) -> n.JudgementLike:
        items: list[n.ContextItem] = []
        if self.at_punct("{"):
            self.advance()
            self.expect_punct("}")
        elif not self.at_punct("|-"):
            items.append(self.context_item())
            while self.at_punct(","):
                self.advance()
                items.append(self.context_item())
        context = self.located(n.Context, tuple(items))
        if self.at_punct("::"):
            self.advance()
            self.expect_keyword("distribution")
            return n.DistributionJudgement(context)
        self.expect_punct("|-")
        return n.Judgement(context, self.statement())

    # -- derivations -----------------------------------------------------------

    def compound_name(self, what: str) -> str:
        parts = [self.expect_name(what).text]
        while self.at_punct("_"):
            self.advance()
            tok = self.peek()
            if tok.kind not in ("ident", "number"):
                raise self.fail(what)
            self.advance()
            parts.append(tok.text)
        return "_".join(parts)

    def side_condition(self) -> n.SideCondition:
        tok = self.peek()
        name = self.compound_name("a side condition")
        simple = {
            "independent": n.IndependentSC,
            "threshold_holds": n.ThresholdHoldsSC,
            "threshold_fails": n.ThresholdFailsSC,
            "priors_normalized": n.NormalizedPriorsSC,
            "additivity": n.AdditivitySC,
        }
        if name in simple:
            return simple[name]()
        if name == "fun":
            kind = self.expect_name("'ml' or 'choose'").text
            value = self.probability() if kind == "choose" else None
            return self.located(n.ContractionFunSC, kind, value)
        raise ParseError(f"unknown side condition {name!r}", tok.line, tok.col)

    def derivation(self) -> n.Derivation:
        open_tok = self.expect_punct("(")
        self.expect_keyword("rule")
        name_tok = self.peek()
        rule = self.compound_name("a rule identifier")
        if rule not in RULES:
            raise ParseError(f"unknown rule {rule!r}", name_tok.line, name_tok.col,
                             "a rule identifier")
        premises: list[n.Derivation] = []
        sides: list[n.SideCondition] = []
        conclusion: Optional[n.JudgementLike] = None
        while self.at_punct("("):
            self.advance()
            if self.at_keyword("premise"):
                self.advance()
                premises.append(self.derivation())
            elif self.at_keyword("side"):
                self.advance()
                sides.append(self.side_condition())
            elif self.at_keyword("conclude"):
                self.advance()
                if conclusion is not None:
                    raise ParseError("duplicate conclusion", self.peek().line, self.peek().col)
                conclusion = self.judgement()
            else:
                raise self.fail("'premise', 'side' or 'conclude'")
            self.expect_punct(")")
        self.expect_punct(")")
        if conclusion is None:
            raise ParseError(f"rule {rule!r} has no conclusion", open_tok.line, open_tok.col)
        lo, hi = RULES[rule]
        if len(premises) < lo or (hi is not None and len(premises) > hi):
            bound = f"{lo}" if hi == lo else f"{lo}..{'*' if hi is None else hi}"
            raise ArityError(
                f"rule {rule!r} takes {bound} premises, got {len(premises)}",
                open_tok.line, open_tok.col)
        return n.Derivation(rule, tuple(premises), tuple(sides), conclusion)

    # -- top level ---------------------------------------------------------------

    def dist_declaration(self):
        from tptnd.distribution import build_distribution

        self.expect_keyword("dist")
        name_tok = self.peek()
        name = self.expect_name("a distribution name").text
        self.expect_punct("{")
        entries: list[n.TypedStatement] = []
        while not self.at_punct("}"):
            entries.append(self.context_entry())
            if self.at_punct(";"):
                self.advance()
            elif not self.at_punct("}"):
                raise self.fail("';' or '}'")
        self.expect_punct("}")
        try:
            return build_distribution(name, entries)
        except TptndError as exc:
            raise type(exc)(f"{name_tok.line}:{name_tok.col}: {exc}") from None

    def file(self) -> list:
        items: list = []
        while self.peek().kind != "eof":
            if self.at_keyword("dist"):
                items.append(self.dist_declaration())
            elif self.at_keyword("derivation"):
                self.advance()
                name = None
                if self.peek().kind == "ident" and self.peek().text not in KEYWORDS:
                    name = self.advance().text
                items.append(n.DeclaredDerivation(name, self.derivation()))
            elif self.at_keyword("judgement"):
                self.advance()
                name = None
                if self.peek().kind == "ident" and self.peek().text not in KEYWORDS:
                    name = self.advance().text
                items.append(n.DeclaredJudgement(name, self.judgement()))
            elif self.at_punct("("):
                items.append(n.DeclaredDerivation(None, self.derivation()))
            else:
                items.append(n.DeclaredJudgement(None, self.judgement()))
        return items

    def expect_eof(self):
        if self.peek().kind != "eof":
            raise self.fail("end of input")


def _entry(text: str, production: str):
    parser = _Parser(text)
    node = getattr(parser, production)()
    parser.expect_eof()
    return node


def parse_file(text: str) -> list:
    """Parse a source file into its declarations (distributions, judgements,
    derivations), in order of appearance."""
    return _Parser(text).file()


def parse_judgement(text: str) -> n.JudgementLike:
    return _entry(text, "judgement")


def parse_statement(text: str) -> n.TypedStatement:
    return _entry(text, "statement")


def parse_subject(text: str) -> n.Subject:
    return _entry(text, "subject")


def parse_output(text: str) -> n.OutputType:
    return _entry(text, "output")


def parse_annotation(text: str) -> n.Annotation:
    return _entry(text, "annotation")


def parse_derivation(text: str) -> n.Derivation:
    return _entry(text, "derivation")
