"""Canned experiments: one-command reproduction of each headline result.

Experiment ids:

* ``thm1``            right-quantifier rule unsound under the sup clause
* ``lemma1``          the series inequality holds on sampled instances
* ``thm2-fuzz``       all seven core rules sound under the sum clause
* ``prop1``           iterated-truth-coding refutations plus the closing
                      empty-antecedent sequent all check
* ``prop2``           the self-referential truth value has no fixed point
* ``prop3``           the omega-copies refutation checks multiplicatively
                      and fails additively at the right-quantifier node
* ``vacuous-compare`` side-by-side policy comparison on the vacuous steps
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .calculus import (
    ADDITIVE,
    MULTIPLICATIVE,
    ProofSequent,
    SequentFamily,
    check_derivation,
    check_instance,
)
from .derivations import liar_signature, prop1_derivation, prop3_derivation
from .fuzz import (
    FuzzConfig,
    RULE_CHOICES,
    existsr_value_instance,
    fuzz_rule,
    sample_unit,
)
from .multiset import OMEGA
from .piecewise import fixed_points, eval_parametric, piecewise_to_json
from .semantics import (
    ONE,
    SUM,
    SUP,
    TailSeq,
    Valuation,
    ZERO,
    check_lemma1_instance,
    eval_formula,
    lemma1_conclusion_finite_oracle,
)
from .syntax import App, Atom, Const, Exists, Neg, Signature, Var

EXPERIMENT_IDS = (
    "thm1",
    "lemma1",
    "thm2-fuzz",
    "prop1",
    "prop2",
    "prop3",
    "vacuous-compare",
)


@dataclass
class ExperimentResult:
    id: str
    status: str  # "pass" | "fail"
    evidence: dict
    seed: int
    runtime_ms: int

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "status": self.status,
            "seed": self.seed,
            "runtimeMs": self.runtime_ms,
            "evidence": self.evidence,
        }


def _finish(exp_id: str, ok: bool, evidence: dict, seed: int, t0: float) -> ExperimentResult:
    ms = int((time.monotonic() - t0) * 1000)
    return ExperimentResult(exp_id, "pass" if ok else "fail", evidence, seed, ms)


# ---------------------------------------------------------------------------


def repro_thm1(seed: int = 0, samples: int = 10_000) -> ExperimentResult:
    """The right-quantifier rule breaks under the sup clause: with empty
    contexts and every instance at 1/2, the premise is sound but the
    conclusion is not; random search must also find some violation."""
    t0 = time.monotonic()
    half = Fraction(1, 2)
    prem_sound, concl_sound = existsr_value_instance([], [], [], half, SUP)
    canned = prem_sound and not concl_sound
    prem_sum, concl_sum = existsr_value_instance([], [], [], half, SUM)

    sig = Signature()
    sig.add_predicate("P", 1)
    sig.add_constant("a")
    formula = Exists("x", Atom("P", (Var("x"),)))
    sup_value = eval_formula(
        Valuation(sig, mode=SUP, predicate_defaults={"P": half}), formula
    )
    sum_value = eval_formula(
        Valuation(sig, mode=SUM, predicate_defaults={"P": half}), formula
    )
    search = fuzz_rule(
        FuzzConfig(samples=samples, seed=seed, mode=SUP, rule="ExistsRw")
    )
    ok = (
        canned
        and prem_sum
        and concl_sum
        and sup_value == half
        and sum_value == ONE
        and search.found_violation
    )
    evidence = {
        "counterexample": {
            "antecedentValue": "1",
            "succedentContextValue": "0",
            "instanceValue": "1/2",
            "premiseSound": prem_sound,
            "conclusionSound": concl_sound,
        },
        "sumModeControl": {"premiseSound": prem_sum, "conclusionSound": concl_sum},
        "quantifierValues": {"sup": str(sup_value), "sum": str(sum_value)},
        "randomSearch": search.to_json(),
    }
    return _finish("thm1", ok, evidence, seed, t0)


# ---------------------------------------------------------------------------


def _positive_unit(rng: random.Random, max_den: int) -> Fraction:
    den = rng.randint(1, max_den)
    return Fraction(rng.randint(1, den), den)


def _lemma1_sample(
    rng: random.Random, combo: int, max_len: int, max_den: int
) -> tuple[TailSeq, TailSeq, TailSeq]:
    """One hypothesis-satisfying triple.  ``combo`` picks the tail's
    zero/positive pattern for the instance and succedent series."""
    chi_zero = combo in (0, 1)
    delta_zero = combo in (0, 2)

    def delta_low(g: Fraction, c: Fraction) -> Fraction:
        return ONE - min(ONE, (ONE - g) + (ONE - c))

    n = rng.randint(0, max_len)
    gammas, chis, deltas = [], [], []
    for _ in range(n):
        g = ONE if rng.random() < 0.15 else sample_unit(rng, max_den)
        c = sample_unit(rng, max_den)
        low = delta_low(g, c)
        d = low + (ONE - low) * sample_unit(rng, max_den)
        gammas.append(g)
        chis.append(c)
        deltas.append(d)
    g_tail = ONE if rng.random() < 0.25 else sample_unit(rng, max_den)
    if chi_zero:
        c_tail = ZERO
    else:
        c_tail = _positive_unit(rng, max_den)
    low = delta_low(g_tail, c_tail)
    if delta_zero:
        # force the tail hypothesis bound to zero, then take exactly zero
        if low > 0:
            g_tail = min(g_tail, ONE - c_tail)
            low = delta_low(g_tail, c_tail)
        d_tail = ZERO
    else:
        d_tail = max(low, Fraction(1, max_den))
        d_tail = low + (ONE - low) * _positive_unit(rng, max_den) if low < ONE else ONE
        if d_tail == 0:
            d_tail = Fraction(1, max_den)
    return (
        TailSeq(tuple(gammas), g_tail),
        TailSeq(tuple(chis), c_tail),
        TailSeq(tuple(deltas), d_tail),
    )


def repro_lemma1(
    seed: int = 0,
    samples: int = 10_000,
    max_len: int = 50,
    max_den: int = 60,
) -> ExperimentResult:
    """Sampled instances of the series inequality: whenever the
    index-wise hypothesis holds, the conclusion inequality holds; the
    naive finite-sum oracle agrees on every convergent sample."""
    t0 = time.monotonic()
    rng = random.Random(seed)
    combos = [0, 0, 0, 0]
    convergent = 0
    failures: list[dict] = []
    for i in range(samples):
        combo = i % 4
        gamma, chi, delta = _lemma1_sample(rng, combo, max_len, max_den)
        result = check_lemma1_instance(gamma, chi, delta)
        if not result.hypothesis_all:
            failures.append({"index": i, "kind": "sampler produced bad hypothesis"})
            continue
        combos[combo] += 1
        if not result.conclusion_holds:
            failures.append(
                {
                    "index": i,
                    "kind": "conclusion violated",
                    "lhs": str(result.lhs),
                    "rhs": str(result.rhs),
                }
            )
        oracle = lemma1_conclusion_finite_oracle(gamma, chi, delta)
        if oracle is not None:
            convergent += 1
            if oracle != result.conclusion_holds:
                failures.append({"index": i, "kind": "oracle disagreement"})
    ok = not failures and convergent > 0 and min(combos) > 0
    evidence = {
        "samples": samples,
        "tailCombos": {
            "chiZeroDeltaZero": combos[0],
            "chiZeroDeltaPositive": combos[1],
            "chiPositiveDeltaZero": combos[2],
            "chiPositiveDeltaPositive": combos[3],
        },
        "convergentOracleChecks": convergent,
        "failures": failures[:5],
    }
    return _finish("lemma1", ok, evidence, seed, t0)


# ---------------------------------------------------------------------------


def repro_thm2_fuzz(seed: int = 0, samples: int = 10_000) -> ExperimentResult:
    """All seven core rules: sum-mode fuzzing finds no soundness
    violation."""
    t0 = time.monotonic()
    per_rule = {}
    ok = True
    for i, rule in enumerate(RULE_CHOICES):
        outcome = fuzz_rule(
            FuzzConfig(samples=samples, seed=seed + i, mode=SUM, rule=rule)
        )
        per_rule[rule] = outcome.to_json()
        if outcome.found_violation:
            ok = False
    evidence = {"samplesPerRule": samples, "rules": per_rule}
    return _finish("thm2-fuzz", ok, evidence, seed, t0)


# ---------------------------------------------------------------------------


def repro_prop1(seed: int = 0, depth: int = 8) -> ExperimentResult:
    """Build and check the iterated-truth-coding derivation; certify the
    per-numeral refutations and the final sequent."""
    t0 = time.monotonic()
    built = prop1_derivation(k=depth)
    report = check_derivation(built.derivation, built.sig, MULTIPLICATIVE, depth)
    checked = set(report.checked_sequents())
    witnesses_certified = [w.render() in checked for w in built.witnesses]
    expected_final = ProofSequent.make(
        built.sig,
        suc=[
            (Neg(Exists("x", Atom("T", (App("fm", (Var("x"), Const("mu"))),)))), 1)
        ],
    )
    final_ok = built.derivation.conclusion == expected_final
    ok = report.ok and all(witnesses_certified) and final_ok
    evidence = {
        "checkerOk": report.ok,
        "finalSequent": built.final.render(),
        "finalMatches": final_ok,
        "witnesses": [w.render() for w in built.witnesses],
        "witnessesCertified": witnesses_certified,
        "nodesChecked": len(report.per_node),
        "familySpotChecks": len(report.family_spot_checks),
    }
    return _finish("prop1", ok, evidence, seed, t0)


# ---------------------------------------------------------------------------


def repro_prop2(seed: int = 0) -> ExperimentResult:
    """Parametric profile of the negated vacuous existential over its own
    truth value: 1 at zero, 0 elsewhere, and no fixed point."""
    t0 = time.monotonic()
    sig = liar_signature()
    tl = Atom("T", (Const("l"),))
    sentence = Neg(Exists("x", tl))
    valuation = Valuation(sig, mode=SUM, unknown=tl)
    profile = eval_parametric(valuation, sentence)
    pieces = piecewise_to_json(profile)["pieces"]
    expected = [
        {"lo": "0", "hi": "0", "closedLo": True, "closedHi": True, "a": "0", "b": "1"},
        {"lo": "0", "hi": "1", "closedLo": False, "closedHi": True, "a": "0", "b": "0"},
    ]
    solutions = fixed_points(profile)
    ok = pieces == expected and solutions.is_empty
    evidence = {
        "pieces": pieces,
        "piecesMatch": pieces == expected,
        "fixedPoints": {
            "points": [str(p) for p in solutions.points],
            "intervals": [str(iv) for iv in solutions.intervals],
        },
    }
    return _finish("prop2", ok, evidence, seed, t0)


# ---------------------------------------------------------------------------


def _prop3_policy_runs(depth: int):
    built = prop3_derivation()
    rep_mult = check_derivation(built.derivation, built.sig, MULTIPLICATIVE, depth)
    rep_add = check_derivation(built.derivation, built.sig, ADDITIVE, depth)
    add_fail_rule: Optional[str] = None
    for node in rep_add.per_node:
        if not node.ok:
            add_fail_rule = node.rule
            break
    return built, rep_mult, rep_add, add_fail_rule


def _vacuous_left_instance(policy: str) -> bool:
    sig = liar_signature()
    tl = Atom("T", (Const("l"),))
    ex = Exists("x", tl)
    prem = ProofSequent.make(sig, ant=[(tl, 1)], suc=[(tl, 1)])
    concl = ProofSequent.make(sig, ant=[(ex, 1)], suc=[(tl, 1)])
    return check_instance(sig, "ExistsLw", [prem], concl, policy).ok


def repro_prop3(seed: int = 0, depth: int = 4) -> ExperimentResult:
    """The omega-copies refutation checks under the multiplicative policy
    with the expected final sequent, fails under the additive policy at
    the right-quantifier node, and the additive single-instance left rule
    checks on its own."""
    t0 = time.monotonic()
    built, rep_mult, rep_add, add_fail_rule = _prop3_policy_runs(depth)
    sig = built.sig
    expected_final = ProofSequent.make(
        sig, suc=[(Neg(Exists("x", Atom("T", (Const("l"),)))), 1)]
    )
    final_ok = built.derivation.conclusion == expected_final
    add_instance = _vacuous_left_instance(ADDITIVE)
    ok = (
        rep_mult.ok
        and final_ok
        and not rep_add.ok
        and add_fail_rule == "ExistsRw"
        and add_instance
    )
    evidence = {
        "multiplicativeOk": rep_mult.ok,
        "finalSequent": built.final.render(),
        "finalMatches": final_ok,
        "additiveOk": rep_add.ok,
        "additiveFailsAt": add_fail_rule,
        "additiveSingleInstanceLeftRule": add_instance,
    }
    return _finish("prop3", ok, evidence, seed, t0)


# ---------------------------------------------------------------------------


def repro_vacuous_compare(seed: int = 0, depth: int = 4) -> ExperimentResult:
    """Side-by-side comparison of the two vacuous-quantification policies
    on the omega-copies derivation and on the one-step instances."""
    t0 = time.monotonic()
    built, rep_mult, rep_add, add_fail_rule = _prop3_policy_runs(depth)
    sig = liar_signature()
    tl = Atom("T", (Const("l"),))
    ex = Exists("x", tl)
    prem_w = ProofSequent.make(sig, suc=[(tl, OMEGA)])
    prem_1 = ProofSequent.make(sig, suc=[(tl, 1)])
    concl = ProofSequent.make(sig, suc=[(ex, 1)])
    right_matrix = {
        "omegaCopiesMultiplicative": check_instance(
            sig, "ExistsRw", [prem_w], concl, MULTIPLICATIVE
        ).ok,
        "omegaCopiesAdditive": check_instance(
            sig, "ExistsRw", [prem_w], concl, ADDITIVE
        ).ok,
        "oneCopyMultiplicative": check_instance(
            sig, "ExistsRw", [prem_1], concl, MULTIPLICATIVE
        ).ok,
        "oneCopyAdditive": check_instance(
            sig, "ExistsRw", [prem_1], concl, ADDITIVE
        ).ok,
    }
    left_instance = {
        "additive": _vacuous_left_instance(ADDITIVE),
        "multiplicative": _vacuous_left_instance(MULTIPLICATIVE),
    }
    ok = (
        rep_mult.ok
        and not rep_add.ok
        and add_fail_rule == "ExistsRw"
        and right_matrix["omegaCopiesMultiplicative"]
        and not right_matrix["omegaCopiesAdditive"]
        and not right_matrix["oneCopyMultiplicative"]
        and right_matrix["oneCopyAdditive"]
        and left_instance["additive"]
        and not left_instance["multiplicative"]
    )
    evidence = {
        "derivation": {
            "multiplicativeOk": rep_mult.ok,
            "additiveOk": rep_add.ok,
            "additiveFailsAt": add_fail_rule,
        },
        "rightRuleInstances": right_matrix,
        "leftRuleSingleInstance": left_instance,
    }
    return _finish("vacuous-compare", ok, evidence, seed, t0)


# ---------------------------------------------------------------------------


def run_experiment(
    exp_id: str,
    seed: int = 0,
    samples: Optional[int] = None,
    depth: Optional[int] = None,
) -> ExperimentResult:
    if exp_id == "thm1":
        return repro_thm1(seed, samples or 10_000)
    if exp_id == "lemma1":
        return repro_lemma1(seed, samples or 10_000)
    if exp_id == "thm2-fuzz":
        return repro_thm2_fuzz(seed, samples or 10_000)
    if exp_id == "prop1":
        return repro_prop1(seed, depth or 8)
    if exp_id == "prop2":
        return repro_prop2(seed)
    if exp_id == "prop3":
        return repro_prop3(seed, depth or 4)
    if exp_id == "vacuous-compare":
        return repro_vacuous_compare(seed, depth or 4)
    raise ValueError(f"unknown experiment id '{exp_id}' (choose from {EXPERIMENT_IDS})")
