"""Toolkit for an infinitary affine sequent calculus with continuum-valued
semantics: exact evaluation under sup- and clamped-sum quantifier clauses,
omega-multiset sequents, derivation checking with omega-premise families,
self-reference fixed-point analysis, and seeded soundness fuzzing."""

__version__ = "0.1.0"
