import dataclasses

import pytest

from isomorph.defiso import (
    DefisoError,
    IsoRecord,
    defiso,
    injectivity_obligations,
    iso_rules_for,
    resolve_designator,
)
from isomorph.evaluator import EnumConfig, IntVal, check_obligation, eval_term
from isomorph.rewrite import rewrite_term
from isomorph.sexpr import read_one
from isomorph.syntax import Designator, parse_program, parse_term
from isomorph.terms import App, IntConst, Lam, T, Var
from isomorph.world import World


def pt(text):
    return parse_term(read_one(text))


SMALL = EnumConfig(depth=1, int_lo=0, int_hi=10, pool=("t", "nil"))


def build_world(src, config=SMALL):
    w = World()
    for ev in parse_program(src):
        if ev.kind == "defun":
            w = w.define_function(ev.payload)
        elif ev.kind == "defthm":
            w = w.add_theorem(ev.payload)
        else:
            raise AssertionError(f"unexpected {ev.kind}")
    return dataclasses.replace(w, check_config=config)


NAT10_SRC = (
    "(defun nat10p (n) (and (natp n) (<= n 10)))"
    "(defun dec10 (n) (- 10 n))"
)


def register_nat10(extra_src="", call_src="(defiso nat10 nat10p nat10p dec10 dec10)"):
    w = build_world(NAT10_SRC + extra_src)
    (ev,) = parse_program(call_src)
    return defiso(w, ev.payload), w


# ---------------------------------------------------------------------------
# designator resolution
# ---------------------------------------------------------------------------


def test_resolve_designator_passthrough():
    w = build_world(NAT10_SRC)
    d = resolve_designator(w, Designator(name="nat10p"))
    assert d.name == "nat10p"
    d2 = resolve_designator(w, Designator(name="natp"))  # builtin
    assert d2.name == "natp"


def test_resolve_designator_sugar_eta_expands():
    lam = pt("(lambda (n) (and (natp n) (<= n 10)))")
    w = World().register_sugar("n10", lam)
    d = resolve_designator(w, Designator(name="n10"))
    assert d.lam == lam


def test_resolve_designator_unknown_symbol():
    with pytest.raises(DefisoError):
        resolve_designator(World(), Designator(name="no-such-fn"))


def test_resolve_designator_rejects_multi_argument_functions():
    w = build_world("(defun two (a b) (cons a b))")
    with pytest.raises(DefisoError) as exc:
        resolve_designator(w, Designator(name="two"))
    assert "pair" in str(exc.value)
    with pytest.raises(DefisoError):
        resolve_designator(w, Designator(lam=pt("(lambda (a b) (cons a b))")))


# ---------------------------------------------------------------------------
# the registration path
# ---------------------------------------------------------------------------


def test_defiso_registers_self_iso_with_eleven_cases_each():
    w2, w = register_nat10()
    rec = w2.isos["nat10"]
    assert isinstance(rec, IsoRecord)
    results = dict(rec.condition_results)
    for cond in ("forth-image", "back-image", "back-of-forth", "forth-of-back"):
        assert results[cond].status == "passed"
        assert results[cond].cases_checked == 11
    # guard obligations are trivially true here
    assert rec.guarded
    assert results["old-guard"].status == "passed"
    assert results["forth-guard"].status == "passed"
    # world bookkeeping
    assert w2.events[: len(w.events)] == w.events  # append-only
    assert w2.obligations["nat10-forth-image"].provenance == "defiso-condition"
    assert w2.obligations["nat10-forth-image"].status == "passed"


def test_defiso_installs_six_rules():
    w2, _ = register_nat10()
    by_name = {r.name: r for r in w2.rules}
    assert by_name["nat10-back-of-forth"].ruleset == "general"
    assert by_name["nat10-forth-of-back"].ruleset == "general"
    assert by_name["nat10-forth-image"].ruleset == "general"
    assert by_name["nat10-back-image"].ruleset == "general"
    assert by_name["nat10-forth-image-o2n"].ruleset == "old-to-new"
    assert by_name["nat10-back-image-n2o"].ruleset == "new-to-old"
    assert len(by_name) == 6
    cancel = by_name["nat10-back-of-forth"]
    assert cancel.lhs == pt("(dec10 (dec10 x))")
    assert cancel.rhs == Var("x")
    assert cancel.condition == pt("(nat10p x)")
    closure = by_name["nat10-forth-image"]
    assert closure.lhs == pt("(nat10p (dec10 x))")
    assert closure.rhs == T


def test_iso_rules_for_lists_the_four_general_rules():
    w2, _ = register_nat10()
    rules = iso_rules_for(w2.isos["nat10"])
    assert [r.name for r in rules] == [
        "nat10-back-of-forth",
        "nat10-forth-of-back",
        "nat10-forth-image",
        "nat10-back-image",
    ]
    assert all(r.ruleset == "general" for r in rules)


def test_defiso_rules_cancel_under_typed_context():
    w2, _ = register_nat10()
    rules = list(w2.rules)
    out = rewrite_term(pt("(dec10 (dec10 q))"), w2, rules, (pt("(nat10p q)"),))
    assert out.term == Var("q")
    out2 = rewrite_term(pt("(nat10p (dec10 q))"), w2, rules, (pt("(nat10p q)"),))
    assert out2.term == T
    # without the typing assumption nothing fires
    out3 = rewrite_term(pt("(dec10 (dec10 q))"), w2, rules, ())
    assert out3.term == pt("(dec10 (dec10 q))")


def test_defiso_rule_soundness_on_carrier():
    w2, _ = register_nat10()
    rules = list(w2.rules)
    for v in range(11):
        t = pt(f"(dec10 (dec10 {v}))")
        res = rewrite_term(t, w2, rules, ())
        assert res.term == IntConst(v)
        assert eval_term(t, {}, w2, 10000) == IntVal(v)


def test_defiso_injectivity_obligations():
    w2, _ = register_nat10()
    rec = w2.isos["nat10"]
    fwd, bwd = injectivity_obligations(rec)
    assert fwd.name == "nat10-forth-injective"
    assert fwd.hyp == pt("(and (nat10p o1) (nat10p o2))")
    assert fwd.concl == pt("(equal (equal (dec10 o1) (dec10 o2)) (equal o1 o2))")
    ob = w2.obligations["nat10-forth-injective"]
    assert ob.provenance == "defiso-derived"
    assert ob.status == "proven-by-derivation"
    assert ob.check.status == "passed"
    assert ob.check.cases_checked == 121
    assert w2.obligations["nat10-back-injective"].check.status == "passed"


def test_defiso_meta_property_exhaustive_conditions_imply_injectivity():
    # whenever conditions 3 and 4 passed over the whole carrier, rechecking
    # injectivity independently must pass over the same carrier
    w2, _ = register_nat10()
    for rec in w2.isos.values():
        results = dict(rec.condition_results)
        if results["back-of-forth"].status != "passed":
            continue
        for ob in injectivity_obligations(rec):
            res = check_obligation(ob, w2, w2.check_config)
            assert res.status == "passed"


def test_defiso_with_inline_lambdas():
    w = build_world("")
    (ev,) = parse_program(
        "(defiso swapz (lambda (n) (natp n)) (lambda (n) (natp n)) "
        "(lambda (n) (+ n 0)) (lambda (n) (+ n 0)))"
    )
    w2 = defiso(w, ev.payload)
    rec = w2.isos["swapz"]
    assert dict(rec.condition_results)["forth-image"].status == "passed"


def test_defiso_identity_builtin_iso():
    w = build_world("")
    (ev,) = parse_program("(defiso idn natp natp identity identity)")
    w2 = defiso(w, ev.payload)
    by_name = {r.name: r for r in w2.rules}
    assert by_name["idn-back-of-forth"].lhs == pt("(identity (identity x))")
    assert by_name["idn-back-of-forth"].rhs == Var("x")


def test_defiso_lambda_identity_skips_degenerate_cancellations():
    # (lambda (x) x) composed with itself normalizes to a bare variable,
    # which cannot be a rule head; registration still succeeds
    w = build_world("")
    (ev,) = parse_program("(defiso idl natp natp (lambda (x) x) (lambda (x) x))")
    w2 = defiso(w, ev.payload)
    assert "idl" in w2.isos
    names = {r.name for r in w2.rules}
    assert "idl-back-of-forth" not in names


def test_defiso_broken_iso_aborts_with_witness():
    w = build_world(NAT10_SRC + "(defun dec9 (n) (- 9 n))")
    (ev,) = parse_program("(defiso bad nat10p nat10p dec9 dec9)")
    with pytest.raises(DefisoError) as exc:
        defiso(w, ev.payload)
    msg = str(exc.value)
    assert "forth-image" in msg
    assert "o = 10" in msg


def test_defiso_inverse_failure_reports_back_of_forth():
    # n+1 maps the carrier into natp fine but has no left inverse n+2
    w = build_world(
        "(defun bump (n) (+ n 1))"
        "(defun bump2 (n) (+ n 2))"
    )
    (ev,) = parse_program("(defiso b12 natp natp bump bump2)")
    with pytest.raises(DefisoError) as exc:
        defiso(w, ev.payload)
    assert "back-of-forth" in str(exc.value)


def test_defiso_guard_conditions_checked():
    src = (
        "(defun gp (n) (declare (xargs :guard (natp n))) (and (natp n) (<= n 10)))"
        "(defun dec10 (n) (- 10 n))"
    )
    w = build_world(src)
    (ev,) = parse_program("(defiso g gp gp dec10 dec10)")
    with pytest.raises(DefisoError) as exc:
        defiso(w, ev.payload)
    assert "old-guard" in str(exc.value)
    (ev2,) = parse_program("(defiso g gp gp dec10 dec10 :guard-conditions nil)")
    w2 = defiso(w, ev2.payload)
    assert not w2.isos["g"].guarded
    results = dict(w2.isos["g"].condition_results)
    assert "old-guard" not in results


def test_defiso_converter_guard_must_be_implied():
    src = NAT10_SRC + (
        "(defun dec5 (n) (declare (xargs :guard (and (natp n) (<= n 5)))) (- 10 n))"
    )
    w = build_world(src)
    (ev,) = parse_program("(defiso tight nat10p nat10p dec5 dec5)")
    with pytest.raises(DefisoError) as exc:
        defiso(w, ev.payload)
    msg = str(exc.value)
    assert "forth-guard" in msg
    assert "o = 6" in msg


def test_defiso_converter_guard_implied_passes():
    src = NAT10_SRC + (
        "(defun decg (n) (declare (xargs :guard (and (natp n) (<= n 10)))) (- 10 n))"
    )
    w = build_world(src)
    (ev,) = parse_program("(defiso ok nat10p nat10p decg decg)")
    w2 = defiso(w, ev.payload)
    results = dict(w2.isos["ok"].condition_results)
    assert results["forth-guard"].status == "passed"
    assert results["back-guard"].status == "passed"


def test_defiso_name_clash():
    w = build_world(NAT10_SRC)
    (ev,) = parse_program("(defiso nat10p dec10 dec10 dec10 dec10)")
    with pytest.raises(DefisoError):
        defiso(w, ev.payload)


def test_defiso_rerun_is_noop():
    w2, _ = register_nat10()
    (ev,) = parse_program("(defiso nat10 nat10p nat10p dec10 dec10)")
    w3 = defiso(w2, ev.payload)
    assert w3 is w2


def test_defiso_undecidable_condition_aborts():
    w2, w = register_nat10()  # w is the pre-registration world
    (ev,) = parse_program(
        "(defiso tiny nat10p nat10p dec10 dec10 :hints ((:forth-image :case-cap 3)))"
    )
    with pytest.raises(DefisoError) as exc:
        defiso(w, ev.payload)
    msg = str(exc.value)
    assert "forth-image" in msg
    assert "decided" in msg


def test_defiso_obligation_vars_cover_free_vars():
    from isomorph.terms import free_vars

    w2, _ = register_nat10()
    for rec in w2.obligations.values():
        ob = rec.obligation
        assert free_vars(ob.hyp) | free_vars(ob.concl) <= set(ob.vars)
