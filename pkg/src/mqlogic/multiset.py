"""Multisets with multiplicities in omega+1, and sequents built from them.

Multiplicities are positive integers or the absorbing value OMEGA; absent
formulas have multiplicity zero.  Formulas are stored and compared in
normalised form (coding equations applied to all maximal closed subterms),
so provably-equal instances collapse to one entry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Union

from .syntax import (
    Formula,
    ParseError,
    Signature,
    free_vars,
    normalize_formula,
    parse_formula,
    render_formula,
)


class OmegaType:
    """Singleton countably-infinite multiplicity."""

    _instance: Optional["OmegaType"] = None

    def __new__(cls) -> "OmegaType":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "OMEGA"


OMEGA = OmegaType()

Multiplicity = Union[int, OmegaType]


def mult_add(a: Multiplicity, b: Multiplicity) -> Multiplicity:
    if a is OMEGA or b is OMEGA:
        return OMEGA
    return a + b


def mult_sub(a: Multiplicity, b: Multiplicity) -> Multiplicity:
    """Saturating difference used when peeling context off a sequent.

    OMEGA - n = OMEGA for finite n; OMEGA - OMEGA = 0 (context absorbs).
    Finite a - OMEGA or finite underflow raises.
    """
    if b is OMEGA:
        if a is OMEGA:
            return 0
        raise ValueError("cannot remove omega copies from a finite multiplicity")
    if a is OMEGA:
        return OMEGA
    if a < b:
        raise ValueError("multiplicity underflow")
    return a - b


def _validate_mult(m: Multiplicity) -> None:
    if m is OMEGA:
        return
    if not isinstance(m, int) or isinstance(m, bool) or m < 1:
        raise ValueError(f"multiplicity must be a positive integer or OMEGA: {m!r}")


class OmegaMultiset:
    """Finite-support map from sentences to multiplicities in omega+1."""

    __slots__ = ("sig", "_entries")

    def __init__(
        self,
        sig: Signature,
        entries: Iterable[tuple[Formula, Multiplicity]] = (),
        allow_open: bool = False,
    ) -> None:
        self.sig = sig
        self._entries: dict[Formula, Multiplicity] = {}
        for f, m in entries:
            self.add(f, m, allow_open=allow_open)

    def add(self, f: Formula, m: Multiplicity = 1, allow_open: bool = False) -> None:
        """Add ``m`` copies.  Members must be sentences; ``allow_open`` is a
        calculus-internal escape hatch for rule templates that mention the
        family index variable."""
        _validate_mult(m)
        if free_vars(f) and not allow_open:
            raise ValueError(f"multiset members must be sentences: {render_formula(f)}")
        key = normalize_formula(f, self.sig)
        old = self._entries.get(key, 0)
        self._entries[key] = mult_add(old, m) if old else m

    def multiplicity_of(self, f: Formula) -> Multiplicity:
        """Stored multiplicity of a formula (zero when absent); matching is
        normalisation-aware."""
        return self._entries.get(normalize_formula(f, self.sig), 0)

    def __contains__(self, f: Formula) -> bool:
        return self.multiplicity_of(f) != 0

    def items(self) -> Iterator[tuple[Formula, Multiplicity]]:
        return iter(sorted(self._entries.items(), key=lambda kv: render_formula(kv[0])))

    def support(self) -> list[Formula]:
        return [f for f, _ in self.items()]

    def is_empty(self) -> bool:
        return not self._entries

    def total_finite(self) -> int:
        """Sum of the finite multiplicities (omega entries excluded)."""
        return sum(m for m in self._entries.values() if m is not OMEGA)

    def copy(self) -> "OmegaMultiset":
        out = OmegaMultiset(self.sig)
        out._entries = dict(self._entries)
        return out

    def union(self, other: "OmegaMultiset") -> "OmegaMultiset":
        out = self.copy()
        for f, m in other._entries.items():
            old = out._entries.get(f, 0)
            out._entries[f] = mult_add(old, m) if old else m
        return out

    def minus(self, other: "OmegaMultiset") -> "OmegaMultiset":
        """Pointwise mult_sub; raises on underflow."""
        out = self.copy()
        for f, m in other._entries.items():
            old = out._entries.get(f, 0)
            if old == 0:
                raise ValueError(f"formula not present: {render_formula(f)}")
            new = mult_sub(old, m)
            if new == 0:
                del out._entries[f]
            else:
                out._entries[f] = new
        return out

    def remove_one(self, f: Formula) -> "OmegaMultiset":
        key = normalize_formula(f, self.sig)
        old = self._entries.get(key, 0)
        if old == 0:
            raise ValueError(f"formula not present: {render_formula(f)}")
        out = self.copy()
        if old is OMEGA:
            return out
        if old == 1:
            del out._entries[key]
        else:
            out._entries[key] = old - 1
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OmegaMultiset):
            return NotImplemented
        return self._entries == other._entries

    def __hash__(self) -> int:  # pragma: no cover - not used as dict key
        return hash(frozenset(self._entries.items()))

    def __repr__(self) -> str:
        inner = ", ".join(
            f"{render_formula(f)}:{'w' if m is OMEGA else m}" for f, m in self.items()
        )
        return "{" + inner + "}"


def union(a: OmegaMultiset, b: OmegaMultiset) -> OmegaMultiset:
    """Pointwise multiplicity addition; omega absorbs."""
    return a.union(b)


@dataclass(frozen=True)
class IndexedFamily:
    """Eventually-uniform omega-indexed family of multisets: explicit
    members for the first indices, one tail multiset for all the rest."""

    explicit: tuple[OmegaMultiset, ...]
    tail: OmegaMultiset


def omega_union(family: IndexedFamily) -> OmegaMultiset:
    """Union over all omega indices of an eventually-uniform family.

    Explicit members contribute finite sums; any formula in the tail with
    positive multiplicity recurs at omega-many indices and so lands at OMEGA.
    """
    sig = family.tail.sig
    out = OmegaMultiset(sig)
    for m in family.explicit:
        out = out.union(m)
    for f, _ in family.tail.items():
        out = out.union(OmegaMultiset(sig, [(f, OMEGA)]))
    return out


class Sequent:
    """A pair of omega-multisets of sentences."""

    __slots__ = ("antecedent", "succedent")

    def __init__(self, antecedent: OmegaMultiset, succedent: OmegaMultiset) -> None:
        self.antecedent = antecedent
        self.succedent = succedent

    @staticmethod
    def make(
        sig: Signature,
        ant: Iterable[tuple[Formula, Multiplicity]] = (),
        suc: Iterable[tuple[Formula, Multiplicity]] = (),
    ) -> "Sequent":
        return Sequent(OmegaMultiset(sig, ant), OmegaMultiset(sig, suc))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Sequent):
            return NotImplemented
        return self.antecedent == other.antecedent and self.succedent == other.succedent

    def __repr__(self) -> str:
        return f"{self.antecedent!r} |- {self.succedent!r}"


# ---------------------------------------------------------------------------
# Text and JSON forms


def _render_side(ms: OmegaMultiset) -> str:
    parts: list[str] = []
    for f, m in ms.items():
        text = render_formula(f)
        if m is OMEGA:
            parts.append(f"{text}^w")
        else:
            parts.extend([text] * m)
    return ", ".join(parts)


def render_sequent(s: Sequent) -> str:
    return f"{_render_side(s.antecedent)} |- {_render_side(s.succedent)}".strip()


def _split_top_level(text: str) -> list[str]:
    parts: list[str] = []
    depth = 0
    cur: list[str] = []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    last = "".join(cur).strip()
    if last:
        parts.append(last)
    return [p for p in parts if p]


def _parse_side(text: str, sig: Signature, lenient: bool = False) -> OmegaMultiset:
    ms = OmegaMultiset(sig)
    for part in _split_top_level(text):
        mult: Multiplicity = 1
        if "^" in part:
            body, _, suffix = part.rpartition("^")
            suffix = suffix.strip()
            if suffix == "w":
                mult = OMEGA
            elif suffix.isdigit():
                mult = int(suffix)
            else:
                raise ParseError(f"bad multiplicity suffix '^{suffix}'", 0)
            part = body.strip()
        ms.add(parse_formula(part, sig, lenient=lenient), mult)
    return ms


def parse_sequent(text: str, sig: Signature, lenient: bool = False) -> Sequent:
    """Parse ``A, B, B |- C`` with ``^w`` / ``^n`` multiplicity suffixes."""
    if "|-" not in text:
        raise ParseError("sequent needs '|-'", 0)
    ant_text, _, suc_text = text.partition("|-")
    return Sequent(
        _parse_side(ant_text, sig, lenient), _parse_side(suc_text, sig, lenient)
    )


def _side_json(ms: OmegaMultiset) -> list[list]:
    return [
        [render_formula(f), "w" if m is OMEGA else m] for f, m in ms.items()
    ]


def sequent_to_json(s: Sequent) -> dict:
    return {"ant": _side_json(s.antecedent), "suc": _side_json(s.succedent)}


def _side_from_json(data: list, sig: Signature) -> OmegaMultiset:
    ms = OmegaMultiset(sig)
    for formula_text, m in data:
        ms.add(parse_formula(formula_text, sig), OMEGA if m == "w" else int(m))
    return ms


def sequent_from_json(data: dict, sig: Signature) -> Sequent:
    return Sequent(
        _side_from_json(data.get("ant", []), sig),
        _side_from_json(data.get("suc", []), sig),
    )


def dumps_sequent(s: Sequent) -> str:
    return json.dumps(sequent_to_json(s))
