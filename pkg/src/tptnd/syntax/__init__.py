"""Abstract syntax, parser and printer for the judgement DSL."""

from tptnd.syntax.nodes import (  # noqa: F401
    Abstraction, AdditivitySC, Annotation, Application, Arrow, ArrowTagged,
    Atom, Complement, Context, ContextItem, ContractionFunSC, Deterministic,
    DETERMINISTIC, DeclaredDerivation, DeclaredJudgement, Derivation,
    DistributionJudgement, EMPTY_CONTEXT, Expected, Frequency, Fst,
    IndependentSC, Interval, IntervalComplement, InvalidNode, Judgement,
    JudgementLike, NamedContextRef, NormalizedPriorsSC, OutputType, Pair,
    Product, SideCondition, Snd, Subject, Sum, Term, TermAtom, Theoretical,
    ThresholdFailsSC, ThresholdHoldsSC, TrustWrap, TypedStatement, UTrustWrap,
    VariableRef, ann_value, output_matches, process_names, run_index,
    strip_run, strip_tag, subject_sample, trust_statement, with_sample,
)
from tptnd.syntax.parser import (  # noqa: F401
    ArityError, ParseError, parse_annotation, parse_derivation, parse_file,
    parse_judgement, parse_output, parse_statement, parse_subject,
)
from tptnd.syntax.printer import pretty_print, print_file  # noqa: F401
from tptnd.syntax.rules import RULES  # noqa: F401
