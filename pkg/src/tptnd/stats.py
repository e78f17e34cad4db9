"""Exact and approximate statistics backing trust side conditions.

Binomial mass and tails, Clopper-Pearson intervals by bisection on the exact
tails (rational arithmetic up to n = 64, log-space floats above), Wald
intervals, fixed-epsilon thresholds, discrete Bayesian posterior update with
the binomial coefficient cancelled analytically, and maximum-likelihood
contraction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from statistics import NormalDist
from typing import Sequence, Union

from tptnd.errors import RangeError, TptndError

Prob = Union[Fraction, float]

_EXACT_TAIL_MAX_N = 64
_LOG_PMF_MIN_N = 51
_BISECT_ITERATIONS = 34  # 2**-34 < 1e-9 absolute tolerance


class StatsError(TptndError):
    pass


class PriorsNotNormalized(StatsError):
    pass


class ZeroMarginal(StatsError):
    pass


class EmptyCandidates(StatsError):
    pass


class StrategyError(StatsError):
    pass


# ---------------------------------------------------------------------------
# Threshold strategies

@dataclass(frozen=True)
class ExactBinomial:
    level: Fraction = Fraction(95, 100)


@dataclass(frozen=True)
class NormalApprox:
    level: Fraction = Fraction(95, 100)


@dataclass(frozen=True)
class FixedEpsilon:
    epsilon: Fraction = Fraction(5, 100)


ThresholdStrategy = Union[ExactBinomial, NormalApprox, FixedEpsilon]

DEFAULT_STRATEGY = ExactBinomial()


@dataclass(frozen=True)
class ProbInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (0.0 <= self.lo <= self.hi <= 1.0):
            raise RangeError(f"bad interval [{self.lo}, {self.hi}]")

    def contains(self, p: float) -> bool:
        return self.lo <= p <= self.hi


def _check_level(level: Fraction) -> None:
    if not (0 < level < 1):
        raise RangeError(f"confidence level {level} outside (0, 1)")


def _check_counts(k: int, n: int) -> None:
    if n < 1:
        raise RangeError(f"trial count {n} must be >= 1")
    if not (0 <= k <= n):
        raise RangeError(f"success count {k} outside 0..{n}")


def _as_fraction(value: Prob) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(str(value))


# ---------------------------------------------------------------------------
# Binomial mass and tails

def binom_pmf(k: int, n: int, p: Prob) -> float:
    """P[X = k] for X ~ Binomial(n, p); log space above n = 50."""
    _check_counts(k, n)
    pf = float(p)
    if not (0.0 <= pf <= 1.0):
        raise RangeError(f"probability {p} outside [0, 1]")
    if pf == 0.0:
        return 1.0 if k == 0 else 0.0
    if pf == 1.0:
        return 1.0 if k == n else 0.0
    if n < _LOG_PMF_MIN_N:
        return math.comb(n, k) * pf**k * (1.0 - pf) ** (n - k)
    log_mass = (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
                + k * math.log(pf) + (n - k) * math.log1p(-pf))
    return math.exp(log_mass)


def _tail_le_exact(k: int, n: int, p: Fraction) -> Fraction:
    """P[X <= k] with exact rational arithmetic."""
    if p == 0:
        return Fraction(1)
    if p == 1:
        return Fraction(1) if k == n else Fraction(0)
    q = 1 - p
    term = q**n
    total = term
    for j in range(1, k + 1):
        term = term * (n - j + 1) * p / (j * q)
        total += term
    return total


def _tail_le_float(k: int, n: int, p: float) -> float:
    return math.fsum(binom_pmf(j, n, p) for j in range(0, k + 1))


def binom_cdf(k: int, n: int, p: Prob) -> Prob:
    """Lower tail P[X <= k]; exact when p is a Fraction and n <= 64."""
    _check_counts(k, n)
    if isinstance(p, Fraction) and n <= _EXACT_TAIL_MAX_N:
        return _tail_le_exact(k, n, p)
    return _tail_le_float(k, n, float(p))


def binom_sf(k: int, n: int, p: Prob) -> Prob:
    """Upper tail P[X >= k]."""
    if k <= 0:
        return Fraction(1) if isinstance(p, Fraction) else 1.0
    return 1 - binom_cdf(k - 1, n, p)


# ---------------------------------------------------------------------------
# Clopper-Pearson by bisection

def _bisect(past_root, exact: bool) -> float:
    """Find the root of a monotone predicate on [0, 1] to ~6e-11."""
    if exact:
        lo, hi = Fraction(0), Fraction(1)
    else:
        lo, hi = 0.0, 1.0
    for _ in range(_BISECT_ITERATIONS):
        mid = (lo + hi) / 2
        if past_root(mid):
            hi = mid
        else:
            lo = mid
    return float((lo + hi) / 2)


@lru_cache(maxsize=None)
def _clopper_pearson_cached(k: int, n: int, level: Fraction) -> ProbInterval:
    half_alpha = (1 - level) / 2
    exact = n <= _EXACT_TAIL_MAX_N
    half = half_alpha if exact else float(half_alpha)

    if k == 0:
        lo = 0.0
    else:
        # P[X >= k | p] grows with p; the lower bound is where it reaches alpha/2.
        lo = _bisect(lambda p: binom_sf(k, n, p) >= half, exact)
    if k == n:
        hi = 1.0
    else:
        # P[X <= k | p] falls with p; the upper bound is where it drops to alpha/2.
        hi = _bisect(lambda p: binom_cdf(k, n, p) <= half, exact)
    return ProbInterval(lo, hi)


def clopper_pearson(k: int, n: int, level: Prob = Fraction(95, 100)) -> ProbInterval:
    """Exact binomial confidence interval for k successes in n trials."""
    _check_counts(k, n)
    level = _as_fraction(level)
    _check_level(level)
    return _clopper_pearson_cached(k, n, level)


# ---------------------------------------------------------------------------
# Threshold evaluation

def _z_value(level: Fraction) -> float:
    return NormalDist().inv_cdf((1 + float(level)) / 2)


def acceptance_interval(strategy: ThresholdStrategy, k: int, n: int) -> ProbInterval:
    """The set of theoretical values the strategy accepts for (k, n)."""
    _check_counts(k, n)
    if isinstance(strategy, ExactBinomial):
        return clopper_pearson(k, n, strategy.level)
    f = k / n
    if isinstance(strategy, NormalApprox):
        _check_level(strategy.level)
        half = _z_value(strategy.level) * math.sqrt(f * (1.0 - f) / n)
    elif isinstance(strategy, FixedEpsilon):
        if not (0 <= strategy.epsilon <= 1):
            raise RangeError(f"epsilon {strategy.epsilon} outside [0, 1]")
        half = float(strategy.epsilon)
    else:
        raise StrategyError(f"unknown strategy {strategy!r}")
    return ProbInterval(max(0.0, f - half), min(1.0, f + half))


def accepts(strategy: ThresholdStrategy, a: Prob, k: int, n: int) -> bool:
    """Is the frequency k/n acceptably close to the theoretical value a?

    Boundaries are inclusive, matching the non-strict threshold condition.
    """
    _check_counts(k, n)
    af = float(a)
    if not (0.0 <= af <= 1.0):
        raise RangeError(f"probability {a} outside [0, 1]")
    if isinstance(strategy, ExactBinomial):
        return clopper_pearson(k, n, strategy.level).contains(af)
    if isinstance(strategy, FixedEpsilon):
        # Exact comparison when both sides are rational.
        if isinstance(a, Fraction):
            return abs(a - Fraction(k, n)) <= strategy.epsilon
    return acceptance_interval(strategy, k, n).contains(af)


# ---------------------------------------------------------------------------
# Bayesian update of a discrete prior

def _log_likelihood(a: float, k: int, n: int) -> float:
    # Binomial likelihood with the coefficient cancelled; 0^0 counts as 1.
    if a == 0.0:
        return 0.0 if k == 0 else -math.inf
    if a == 1.0:
        return 0.0 if k == n else -math.inf
    return k * math.log(a) + (n - k) * math.log1p(-a)


def bayes_posteriors(hypotheses: Sequence[tuple[Prob, Prob]], k: int, n: int) -> list[float]:
    """Posterior probability of each hypothesis (a_i, prior b_i) given k
    successes in n trials."""
    if not hypotheses:
        raise EmptyCandidates("no hypotheses")
    if n < 0 or not (0 <= k <= max(n, 0)):
        raise RangeError(f"success count {k} outside 0..{n}")
    priors = [float(b) for _, b in hypotheses]
    if any(b < 0 for b in priors):
        raise PriorsNotNormalized("negative prior")
    if abs(math.fsum(priors) - 1.0) > 1e-9:
        raise PriorsNotNormalized(f"priors sum to {math.fsum(priors)}, not 1")
    logs = [_log_likelihood(float(a), k, n) for a, _ in hypotheses]
    finite = [lg for lg, b in zip(logs, priors) if b > 0 and lg > -math.inf]
    if not finite:
        raise ZeroMarginal("every hypothesis assigns the data probability 0")
    peak = max(finite)
    weights = [b * math.exp(lg - peak) if lg > -math.inf else 0.0
               for lg, b in zip(logs, priors)]
    marginal = math.fsum(weights)
    if marginal == 0.0:
        raise ZeroMarginal("every hypothesis assigns the data probability 0")
    return [w / marginal for w in weights]


def bayes_posterior(hypotheses: Sequence[tuple[Prob, Prob]], i: int, k: int, n: int) -> float:
    if not (0 <= i < len(hypotheses)):
        raise RangeError(f"hypothesis index {i} outside 0..{len(hypotheses) - 1}")
    return bayes_posteriors(hypotheses, k, n)[i]


# ---------------------------------------------------------------------------
# Maximum-likelihood contraction

def ml_contract(candidates: Sequence[Prob], k: int, n: int,
                mode: str = "count-exponent") -> Prob:
    """Pick the candidate that makes k successes in n trials most plausible.

    ``count-exponent`` scores x^k (1-x)^(n-k); ``as-printed`` scores
    x^((k/n)/n) (1-x)^(1-(k/n)/n) literally. Ties keep the first-listed
    candidate.
    """
    if not candidates:
        raise EmptyCandidates("no candidate values")
    _check_counts(k, n)
    if mode == "count-exponent":
        exact = all(isinstance(c, Fraction) for c in candidates)

        def score(x):
            x = x if exact else float(x)
            return x**k * (1 - x) ** (n - k)
    elif mode == "as-printed":
        e1 = k / n / n
        e2 = 1.0 - e1

        def score(x):
            return float(x) ** e1 * (1.0 - float(x)) ** e2
    else:
        raise StrategyError(f"unknown contraction mode {mode!r}")
    for c in candidates:
        if not (0 <= c <= 1):
            raise RangeError(f"candidate {c} outside [0, 1]")
    best = candidates[0]
    best_score = score(best)
    for c in candidates[1:]:
        s = score(c)
        if s > best_score:
            best, best_score = c, s
    return best


def ml_contract_interval(lo: Fraction, hi: Fraction, k: int, n: int) -> Fraction:
    """Maximum-likelihood value over a whole interval of candidates.

    The count-exponent likelihood is unimodal with mode k/n, so the argmax
    over [lo, hi] is k/n clamped into the interval.
    """
    _check_counts(k, n)
    return min(max(Fraction(k, n), lo), hi)


# ---------------------------------------------------------------------------
# Strategy parsing for the CLI and environment

def parse_strategy(spec: str) -> ThresholdStrategy:
    """Parse ``exact:0.95``, ``wald:0.95`` or ``eps:0.05``."""
    kind, _, raw = spec.partition(":")
    try:
        value = Fraction(raw)
    except (ValueError, ZeroDivisionError):
        raise StrategyError(f"bad strategy value {raw!r} in {spec!r}") from None
    try:
        if kind == "exact":
            _check_level(value)
            return ExactBinomial(value)
        if kind == "wald":
            _check_level(value)
            return NormalApprox(value)
        if kind == "eps":
            if not (0 <= value <= 1):
                raise RangeError(f"epsilon {value} outside [0, 1]")
            return FixedEpsilon(value)
    except RangeError as exc:
        raise StrategyError(str(exc)) from None
    raise StrategyError(f"unknown strategy kind {kind!r} in {spec!r}")


def strategy_json(strategy: ThresholdStrategy) -> dict:
    if isinstance(strategy, ExactBinomial):
        return {"kind": "exact", "value": str(strategy.level)}
    if isinstance(strategy, NormalApprox):
        return {"kind": "wald", "value": str(strategy.level)}
    if isinstance(strategy, FixedEpsilon):
        return {"kind": "eps", "value": str(strategy.epsilon)}
    raise StrategyError(f"unknown strategy {strategy!r}")
