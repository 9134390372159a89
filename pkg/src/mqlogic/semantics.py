"""Continuum-valued evaluation of sentences and sequents.

Values are exact rationals in [0, 1].  The existential quantifier comes in
two modes: ``sup`` takes the supremum over the closed-term instances and
``sum`` the clamped infinite series over them.  The instance family over
the (countably infinite) closed-term enumeration is represented exactly as
a finite explicit part plus a constant tail, so series either reduce to a
finite sum or diverge and clamp to 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Optional

from .multiset import OMEGA, OmegaMultiset, Sequent
from .syntax import (
    Atom,
    Cond,
    Const,
    Exists,
    Formula,
    Neg,
    Signature,
    Term,
    free_vars,
    normalize_formula,
    render_formula,
    render_term,
    subterms,
    substitute,
    term_is_closed,
)

ZERO = Fraction(0)
ONE = Fraction(1)


class SemanticsError(Exception):
    """Base class for evaluation failures."""


class OpenFormulaError(SemanticsError):
    pass


class UngroundedError(SemanticsError):
    """Transparent unfolding exhausted its budget: a liar-like cycle."""


def unit(q: Fraction) -> Fraction:
    if not (ZERO <= q <= ONE):
        raise ValueError(f"value out of [0,1]: {q}")
    return q


# ---------------------------------------------------------------------------
# Extended sums: exact nonnegative rationals plus an infinite point


@dataclass(frozen=True, slots=True)
class ExtendedSum:
    """A nonnegative rational or the absorbing infinite sum."""

    finite: Optional[Fraction]  # None means infinite

    @staticmethod
    def of(value: Fraction) -> "ExtendedSum":
        if value < 0:
            raise ValueError("extended sums are nonnegative")
        return ExtendedSum(value)

    @property
    def is_infinite(self) -> bool:
        return self.finite is None

    def plus(self, other: "ExtendedSum") -> "ExtendedSum":
        if self.is_infinite or other.is_infinite:
            return INFINITE
        return ExtendedSum(self.finite + other.finite)

    def plus_copies(self, value: Fraction, mult) -> "ExtendedSum":
        """Add ``value`` once per copy; omega-many positive copies diverge."""
        if value < 0:
            raise ValueError("extended sums are nonnegative")
        if value == 0:
            return self
        if mult is OMEGA:
            return INFINITE
        if self.is_infinite:
            return INFINITE
        return ExtendedSum(self.finite + value * mult)

    def clamp1(self) -> Fraction:
        """min(1, sum); the infinite sum clamps to 1."""
        if self.is_infinite or self.finite >= 1:
            return ONE
        return self.finite


SUM_ZERO = ExtendedSum(ZERO)
INFINITE = ExtendedSum(None)


def extended_sum(values: Iterable[Fraction]) -> ExtendedSum:
    acc = SUM_ZERO
    for v in values:
        acc = acc.plus(ExtendedSum.of(v))
    return acc


# ---------------------------------------------------------------------------
# Strong/weak connective value tables (helper evaluators; the language has
# no connective syntax for them)


def strong_disjunction(a: Fraction, b: Fraction) -> Fraction:
    return min(ONE, a + b)


def strong_conjunction(a: Fraction, b: Fraction) -> Fraction:
    return max(ZERO, a + b - 1)


def weak_disjunction(a: Fraction, b: Fraction) -> Fraction:
    return max(a, b)


def weak_conjunction(a: Fraction, b: Fraction) -> Fraction:
    return min(a, b)


# ---------------------------------------------------------------------------
# Valuations


SUP = "sup"
SUM = "sum"

_TAIL_CONST = Const("$tail")


@dataclass
class Valuation:
    """Finite description of a valuation on the closed atoms.

    ``atom_values`` fixes finitely many closed atoms; every other atom
    takes its predicate's default (0 unless configured).  ``mode`` selects
    the quantifier clause.  With ``transparent`` on, truth atoms over
    canonical names evaluate as the named sentence, unfolding at most
    ``unfold_budget`` times.  ``unknown`` designates one atom whose value
    is left symbolic for parametric evaluation.
    """

    sig: Signature
    mode: str = SUM
    atom_values: dict[Formula, Fraction] = field(default_factory=dict)
    predicate_defaults: dict[str, Fraction] = field(default_factory=dict)
    transparent: bool = False
    unfold_budget: int = 64
    unknown: Optional[Formula] = None

    def __post_init__(self) -> None:
        if self.mode not in (SUP, SUM):
            raise ValueError(f"mode must be '{SUP}' or '{SUM}'")
        normalized: dict[Formula, Fraction] = {}
        for atom, v in self.atom_values.items():
            if not isinstance(atom, Atom) or free_vars(atom):
                raise ValueError(f"atom map keys must be closed atoms: {atom!r}")
            normalized[normalize_formula(atom, self.sig)] = unit(Fraction(v))
        self.atom_values = normalized
        self.predicate_defaults = {
            p: unit(Fraction(v)) for p, v in self.predicate_defaults.items()
        }
        if self.unknown is not None:
            self.unknown = normalize_formula(self.unknown, self.sig)

    def default_of(self, pred: str) -> Fraction:
        return self.predicate_defaults.get(pred, ZERO)

    def with_unknown_assigned(self, value: Fraction) -> "Valuation":
        """Resolve the designated unknown atom to a concrete value."""
        if self.unknown is None:
            raise ValueError("no unknown atom designated")
        atoms = dict(self.atom_values)
        atoms[self.unknown] = unit(value)
        return replace(self, atom_values=atoms, unknown=None)


class _EvalState:
    __slots__ = ("unfolds_left",)

    def __init__(self, budget: int) -> None:
        self.unfolds_left = budget


def _relevant_terms(valuation: Valuation, body: Formula) -> list[Term]:
    """Closed terms that can distinguish an instance from the tail:
    subterms of atom-map keys and of the formula, deduplicated by normal
    form."""
    sig = valuation.sig
    seen: set[Term] = set()
    out: list[Term] = []

    def visit(t: Term) -> None:
        for sub in subterms(t):
            if not term_is_closed(sub):
                continue
            nf = sig.normalize_term(sub)
            if nf not in seen:
                seen.add(nf)
                out.append(sub)

    for atom in valuation.atom_values:
        for arg in atom.args:
            visit(arg)
    if valuation.unknown is not None:
        for arg in valuation.unknown.args:
            visit(arg)

    def walk(f: Formula) -> None:
        if isinstance(f, Atom):
            for arg in f.args:
                visit(arg)
        elif isinstance(f, Neg):
            walk(f.body)
        elif isinstance(f, Cond):
            walk(f.lhs)
            walk(f.rhs)
        elif isinstance(f, Exists):
            walk(f.body)

    walk(body)
    out.sort(key=render_term)
    return out


def _eval(valuation: Valuation, f: Formula, state: _EvalState) -> Fraction:
    sig = valuation.sig
    if isinstance(f, Atom):
        key = normalize_formula(f, sig)
        if valuation.unknown is not None and key == valuation.unknown:
            raise SemanticsError(
                "atom has a symbolic value; use parametric evaluation"
            )
        if valuation.transparent and f.pred == "T" and f.args:
            named = sig.named_formula(f.args[0])
            if named is not None:
                if state.unfolds_left <= 0:
                    raise UngroundedError(
                        f"transparent unfolding exhausted at {render_formula(f)}"
                    )
                state.unfolds_left -= 1
                return _eval(valuation, named, state)
        if key in valuation.atom_values:
            return valuation.atom_values[key]
        return valuation.default_of(f.pred)
    if isinstance(f, Neg):
        return ONE - _eval(valuation, f.body, state)
    if isinstance(f, Cond):
        a = _eval(valuation, f.lhs, state)
        b = _eval(valuation, f.rhs, state)
        return min(ONE, ONE - a + b)
    if isinstance(f, Exists):
        explicit, tail = _instance_values(valuation, f.body, f.var, state)
        values = [v for _, v in explicit]
        if valuation.mode == SUP:
            return max(values + [tail]) if values else tail
        total = extended_sum(values)
        if tail > 0:
            total = INFINITE
        return total.clamp1()
    raise TypeError(f"not a formula: {f!r}")


def _instance_values(
    valuation: Valuation, body: Formula, var: str, state: _EvalState
) -> tuple[list[tuple[Term, Fraction]], Fraction]:
    if free_vars(body) - {var}:
        raise OpenFormulaError(
            f"instance family needs at most one free variable: {render_formula(body)}"
        )
    explicit: list[tuple[Term, Fraction]] = []
    for t in _relevant_terms(valuation, body):
        inst = substitute(body, var, t) if var in free_vars(body) else body
        explicit.append((t, _eval(valuation, inst, state)))
    tail_inst = (
        substitute(body, var, _TAIL_CONST) if var in free_vars(body) else body
    )
    tail = _eval(valuation, tail_inst, state)
    return explicit, tail


def eval_formula(valuation: Valuation, f: Formula) -> Fraction:
    """Exact value of a sentence under the valuation.

    Raises OpenFormulaError on free variables and UngroundedError when
    transparent unfolding cycles past its budget.
    """
    if free_vars(f):
        raise OpenFormulaError(f"not a sentence: {render_formula(f)}")
    return unit(_eval(valuation, f, _EvalState(valuation.unfold_budget)))


def instance_values(
    valuation: Valuation, f: Formula, var: str
) -> tuple[list[tuple[Term, Fraction]], Fraction]:
    """Instance values of ``f`` over the closed-term enumeration.

    Returns the explicit part (one entry per relevant term, deduplicated
    by normal form) and the common value of every other instance.
    """
    return _instance_values(valuation, f, var, _EvalState(valuation.unfold_budget))


# ---------------------------------------------------------------------------
# Sequent evaluation


def _side_sum(valuation: Valuation, ms: OmegaMultiset, negate: bool) -> ExtendedSum:
    acc = SUM_ZERO
    for f, m in ms.items():
        v = eval_formula(valuation, f)
        contrib = ONE - v if negate else v
        acc = acc.plus_copies(contrib, m)
    return acc


def eval_antecedent(valuation: Valuation, gamma: OmegaMultiset) -> Fraction:
    """1 - min(1, sum of (1 - value) over the antecedent, copies counted).

    An omega-multiplicity formula below value 1 makes the inner series
    diverge (result 0); at value exactly 1 it contributes nothing.
    """
    return ONE - _side_sum(valuation, gamma, negate=True).clamp1()


def eval_succedent(valuation: Valuation, delta: OmegaMultiset) -> Fraction:
    """min(1, sum of values over the succedent, copies counted)."""
    return _side_sum(valuation, delta, negate=False).clamp1()


def sequent_sound(valuation: Valuation, s: Sequent) -> bool:
    """Whether antecedent value <= succedent value under the valuation."""
    return eval_antecedent(valuation, s.antecedent) <= eval_succedent(
        valuation, s.succedent
    )


# ---------------------------------------------------------------------------
# The series inequality behind the omega-premise left rule


@dataclass(frozen=True)
class TailSeq:
    """An omega-sequence of unit values: explicit prefix + constant tail."""

    explicit: tuple[Fraction, ...]
    tail: Fraction

    def __post_init__(self) -> None:
        for v in self.explicit:
            unit(v)
        unit(self.tail)

    def at(self, i: int) -> Fraction:
        return self.explicit[i] if i < len(self.explicit) else self.tail

    def series(self, transform=lambda v: v) -> ExtendedSum:
        """Sum of transform(v_i) over all omega indices."""
        acc = extended_sum(transform(v) for v in self.explicit)
        t = transform(self.tail)
        if t < 0:
            raise ValueError("series terms must be nonnegative")
        if t > 0:
            return INFINITE
        return acc


def _index_hypothesis(g: Fraction, c: Fraction, d: Fraction) -> bool:
    return ONE - min(ONE, (ONE - g) + (ONE - c)) <= d


@dataclass(frozen=True)
class SeriesCheck:
    hypothesis_explicit: tuple[bool, ...]
    hypothesis_tail: bool
    conclusion_holds: bool
    lhs: Fraction
    rhs: Fraction

    @property
    def hypothesis_all(self) -> bool:
        return all(self.hypothesis_explicit) and self.hypothesis_tail


def check_lemma1_instance(gamma: TailSeq, chi: TailSeq, delta: TailSeq) -> SeriesCheck:
    """Check one instance of the series inequality used by the omega-premise
    left rule.

    Hypothesis at index i: 1 - min(1, (1-g_i) + (1-c_i)) <= d_i.
    Conclusion: 1 - min(1, sum(1-g_i) + (1 - min(1, sum c_i))) <= min(1, sum d_i),
    with the three series evaluated exactly as extended sums.
    """
    n = max(len(gamma.explicit), len(chi.explicit), len(delta.explicit))
    hyp = tuple(
        _index_hypothesis(gamma.at(i), chi.at(i), delta.at(i)) for i in range(n)
    )
    hyp_tail = _index_hypothesis(gamma.tail, chi.tail, delta.tail)
    s_gaps = gamma.series(lambda v: ONE - v)
    s_chi = chi.series()
    s_delta = delta.series()
    lhs = ONE - s_gaps.plus(ExtendedSum.of(ONE - s_chi.clamp1())).clamp1()
    rhs = s_delta.clamp1()
    return SeriesCheck(hyp, hyp_tail, lhs <= rhs, lhs, rhs)


def load_valuation(text: str, sig: Optional[Signature] = None) -> Valuation:
    """Load a valuation from its text format.

    Lines: ``mode sum|sup``, ``default P = p/q``, ``atom P(a) = p/q``,
    ``transparent on|off``, ``unknown T(l)``.  Blank lines and ``#``
    comments are ignored.  Without an explicit signature, symbols are
    inferred from use (atoms declare predicates, bare identifiers become
    constants).
    """
    from .syntax import parse_formula  # local import to avoid cycle noise

    lenient = sig is None
    if sig is None:
        sig = Signature()
    mode = SUM
    atom_values: dict[Formula, Fraction] = {}
    defaults: dict[str, Fraction] = {}
    transparent = False
    unknown: Optional[Formula] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        try:
            if head == "mode":
                if rest not in (SUP, SUM):
                    raise ValueError(f"mode must be '{SUP}' or '{SUM}'")
                mode = rest
            elif head == "default":
                pred, _, value = rest.partition("=")
                defaults[pred.strip()] = Fraction(value.strip())
            elif head == "atom":
                atom_text, _, value = rest.partition("=")
                atom = parse_formula(atom_text.strip(), sig, lenient=lenient)
                if not isinstance(atom, Atom):
                    raise ValueError("atom lines take a single atom")
                atom_values[atom] = Fraction(value.strip())
            elif head == "transparent":
                if rest not in ("on", "off"):
                    raise ValueError("transparent takes on|off")
                transparent = rest == "on"
            elif head == "unknown":
                unknown = parse_formula(rest, sig, lenient=lenient)
                if not isinstance(unknown, Atom):
                    raise ValueError("unknown takes a single atom")
            else:
                raise ValueError(f"unknown directive '{head}'")
        except (ValueError, ZeroDivisionError) as e:
            raise SemanticsError(f"valuation line {lineno}: {e}") from e
    return Valuation(
        sig,
        mode=mode,
        atom_values=atom_values,
        predicate_defaults=defaults,
        transparent=transparent,
        unknown=unknown,
    )


def value_to_json(value: Fraction) -> dict:
    return {"value": str(value)}


def lemma1_conclusion_finite_oracle(
    gamma: TailSeq, chi: TailSeq, delta: TailSeq
) -> Optional[bool]:
    """Naive finite-sum recomputation of the conclusion inequality.

    Only defined when all three series converge (every tail contribution
    vanishes); returns None otherwise.  Independent of the ExtendedSum
    path: plain rational sums and comparisons.
    """
    if gamma.tail != 1 or chi.tail != 0 or delta.tail != 0:
        return None
    s_gaps = sum((1 - v for v in gamma.explicit), Fraction(0))
    s_chi = sum(chi.explicit, Fraction(0))
    s_delta = sum(delta.explicit, Fraction(0))
    lhs = 1 - min(Fraction(1), s_gaps + (1 - min(Fraction(1), s_chi)))
    rhs = min(Fraction(1), s_delta)
    return lhs <= rhs
