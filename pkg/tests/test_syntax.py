import pytest

from isomorph.sexpr import read_one, write_sexpr
from isomorph.syntax import (
    ParseError,
    expand_defrecord,
    parse_defthm,
    parse_defun,
    parse_program,
    parse_term,
    pp_sexpr,
    print_event,
    print_term,
    term_to_sexpr,
)
from isomorph.terms import (
    App,
    If,
    IntConst,
    Lam,
    Let,
    NIL,
    SymConst,
    T,
    Var,
    free_vars,
)


def pt(text):
    return parse_term(read_one(text))


# ---------------------------------------------------------------------------
# desugaring: each case checked against the hand-built core term
# ---------------------------------------------------------------------------


def test_and_desugars_to_nested_if():
    assert pt("(and a b)") == If(Var("a"), Var("b"), NIL)
    assert pt("(and a b c)") == If(Var("a"), If(Var("b"), Var("c"), NIL), NIL)
    assert pt("(and)") == T
    assert pt("(and a)") == Var("a")


def test_or_desugars_to_if_with_repeated_test():
    assert pt("(or a b)") == If(Var("a"), Var("a"), Var("b"))
    assert pt("(or)") == NIL


def test_comparison_sugar():
    lt = App("<", (Var("a"), Var("b")))
    assert pt("(< a b)") == lt
    assert pt("(<= a b)") == App("not", (App("<", (Var("b"), Var("a"))),))
    assert pt("(> a b)") == App("<", (Var("b"), Var("a")))
    assert pt("(>= a b)") == App("not", (App("<", (Var("a"), Var("b"))),))


def test_symbols_vs_variables():
    assert pt("t") == SymConst("t")
    assert pt("nil") == SymConst("nil")
    assert pt(":result") == SymConst(":result")
    assert pt("x") == Var("x")


def test_quote_forms():
    assert pt("'a") == SymConst("a")
    assert pt("'5") == IntConst(5)
    assert pt("'(a 1)") == App(
        "cons", (SymConst("a"), App("cons", (IntConst(1), NIL)))
    )


def test_let_and_lambda():
    t = pt("(let ((x 1)) (+ x y))")
    assert t == Let((("x", IntConst(1)),), App("+", (Var("x"), Var("y"))))
    t2 = pt("((lambda (n) (+ n 1)) 5)")
    assert isinstance(t2, App) and isinstance(t2.fn, Lam)
    assert t2.fn.params == ("n",)


def test_parse_errors():
    with pytest.raises(ParseError):
        pt("(cons 1)")  # arity
    with pytest.raises(ParseError):
        pt("(car x y)")
    with pytest.raises(ParseError):
        pt("()")
    with pytest.raises(ParseError):
        pt("(if a b)")
    with pytest.raises(ParseError):
        pt("lambda")  # reserved word as variable
    with pytest.raises(ParseError):
        pt("((lambda (x) x) 1 2)")  # lambda arity


# ---------------------------------------------------------------------------
# printing: parse(print(t)) must reproduce t exactly
# ---------------------------------------------------------------------------

ROUNDTRIP = [
    "(if (zp (- 10 n)) x (applyn (h x) (+ n 1)))",
    "(and (natp n) (<= n 10))",
    "(or a (and b c) 'sym)",
    "(let ((u (car x)) (w (cdr x))) (cons w u))",
    "((lambda (n) (- 10 n)) k)",
    "(equal (f x) 'some-tag)",
    "(and a nil)",
    "(+ -3 x)",
    "(not (< a b))",
    "(if p q nil)",
    ":result",
]


@pytest.mark.parametrize("text", ROUNDTRIP)
def test_print_parse_roundtrip(text):
    t = pt(text)
    assert pt(print_term(t)) == t


def test_resugar_on_print():
    assert print_term(pt("(<= n 10)")) == "(<= n 10)"
    assert print_term(pt("(>= a b)")) == "(<= b a)"
    assert print_term(pt("(and a b c)")) == "(and a b c)"
    assert print_term(pt("(or a b)")) == "(or a b)"
    assert print_term(pt("(if a b nil)")) == "(and a b)"
    assert print_term(pt("'foo")) == "'foo"
    assert print_term(pt("(if a b c)")) == "(if a b c)"


def test_pp_sexpr_breaks_long_forms_deterministically():
    form = read_one(
        "(defun long-name (a b c) (if (consp a) (cons (car a) (long-name (cdr a) "
        "(append b b) (append c c))) (append b c)))"
    )
    out1 = pp_sexpr(form)
    out2 = pp_sexpr(form)
    assert out1 == out2
    assert "\n" in out1
    assert read_one(out1) == form


# ---------------------------------------------------------------------------
# defun / defthm
# ---------------------------------------------------------------------------


def test_parse_defun_with_guard_and_measure():
    fd = parse_defun(
        read_one(
            "(defun applyn (x n) (declare (xargs :guard (and (natp n) (<= n 10)) "
            ":measure (- 10 n))) (if (zp (- 10 n)) x (applyn (cons x x) (+ n 1))))"
        )
    )
    assert fd.name == "applyn"
    assert fd.params == ("x", "n")
    assert fd.guard == pt("(and (natp n) (<= n 10))")
    assert fd.measure == pt("(- 10 n)")
    assert fd.recursive


def test_parse_defun_measure_inference():
    fd = parse_defun(read_one("(defun down (n) (if (zp n) 0 (down (1- n))))"))
    assert fd.measure == App("acl2-count", (Var("n"),))
    fd2 = parse_defun(read_one("(defun my-len (l) (if (consp l) (+ 1 (my-len (cdr l))) 0))"))
    assert fd2.measure == App("acl2-count", (Var("l"),))


def test_parse_defun_rejects_nondecreasing_recursion_without_measure():
    with pytest.raises(ParseError):
        parse_defun(read_one("(defun up (n) (if (equal n 10) n (up (+ n 1))))"))


def test_parse_defun_rejects_free_variables():
    with pytest.raises(ParseError) as exc:
        parse_defun(read_one("(defun f (x) (cons x y))"))
    assert "free variable y" in str(exc.value)


def test_parse_defun_nonrecursive_needs_no_measure():
    fd = parse_defun(read_one("(defun sq (n) (* n n))"))
    assert fd.measure is None
    assert not fd.recursive


def test_parse_defthm_implies_split():
    td = parse_defthm(
        read_one("(defthm up-bound (implies (and (natp n) (< n 10)) (natp (+ n 1))))")
    )
    assert td.vars == ("n",)
    assert td.hyp == pt("(and (natp n) (< n 10))")
    assert td.concl == pt("(natp (+ n 1))")
    assert td.rule_classes == ":rewrite"
    assert td.ruleset == "general"


def test_parse_defthm_unconditional_and_options():
    td = parse_defthm(read_one("(defthm triv (equal (car (cons a b)) a) :rule-classes nil)"))
    assert td.hyp == T
    assert td.rule_classes == "nil"
    td2 = parse_defthm(read_one("(defthm dirn (equal (f x) (g x)) :ruleset old-to-new)"))
    assert td2.ruleset == "old-to-new"
    with pytest.raises(ParseError):
        parse_defthm(read_one("(defthm bad (equal a a) :ruleset sideways)"))


def test_defthm_vars_sorted():
    td = parse_defthm(read_one("(defthm v (equal (cons z a) (cons z a)))"))
    assert td.vars == ("a", "z")


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------


def test_defrecord_expansion_structure():
    forms = expand_defrecord(read_one("(defrecord pt (px integerp) (py integerp))"))
    names = [f[1] for f in forms]
    assert names == [
        "pt",
        "pt-p",
        "pt->px",
        "pt->py",
        "pt->px-of-pt",
        "pt->py-of-pt",
        "pt-p-of-pt",
    ]
    # constructor builds the tagged proper list
    assert forms[0] == read_one("(defun pt (px py) (cons 'pt (cons px (cons py nil))))")
    # accessors walk the spine
    assert forms[2] == read_one("(defun pt->px (x) (car (cdr x)))")
    assert forms[3] == read_one("(defun pt->py (x) (car (cdr (cdr x))))")


def test_defrecord_in_program_parses():
    evs = parse_program("(defrecord one (val natp))")
    kinds = [(e.kind, e.name) for e in evs]
    assert ("defun", "one") in kinds
    assert ("defun", "one-p") in kinds
    assert ("defun", "one->val") in kinds
    assert ("defthm", "one->val-of-one") in kinds
    assert ("defthm", "one-p-of-one") in kinds


# ---------------------------------------------------------------------------
# transformation call forms
# ---------------------------------------------------------------------------


def test_parse_defiso_call():
    evs = parse_program(
        "(defiso nat10 (lambda (n) (and (natp n) (<= n 10))) "
        "(lambda (n) (and (natp n) (<= n 10))) (lambda (n) (- 10 n)) (lambda (n) (- 10 n)) "
        ":guard-conditions t)"
    )
    call = evs[0].payload
    assert call.name == "nat10"
    assert call.guard_conditions
    assert call.iso.lam is not None
    assert call.old.lam.params == ("n",)
    # guard obligations are on unless explicitly switched off
    (dflt,) = parse_program("(defiso g2 oldp newp fwd bwd)")
    assert dflt.payload.guard_conditions
    (off,) = parse_program("(defiso g3 oldp newp fwd bwd :guard-conditions nil)")
    assert not off.payload.guard_conditions


def test_parse_defiso_hints_overrides():
    evs = parse_program(
        "(defiso z9 oldp newp fwd bwd :hints ((:back-of-forth :case-cap 500)))"
    )
    call = evs[0].payload
    assert call.check_overrides == (("back-of-forth", ((":case-cap", 500),)),)


def test_parse_isodata_call():
    evs = parse_program(
        "(isodata applyn (((n :result) nat10)) :new-name applyn1 :wrapper t)"
    )
    call = evs[0].payload
    assert call.fn == "applyn"
    assert call.specs[0].targets == ("n", ":result")
    assert call.specs[0].isomap == "nat10"
    assert call.new_name == "applyn1"
    assert call.wrapper
    assert call.verify_guards


def test_parse_isodata_inline_isomap():
    evs = parse_program(
        "(isodata f ((x ((lambda (n) (natp n)) (lambda (n) (natp n)) "
        "(lambda (n) n) (lambda (n) n)))))"
    )
    spec = evs[0].payload.specs[0]
    assert spec.targets == ("x",)
    assert spec.isomap.name is None
    assert spec.isomap.iso.lam.body == Var("n")


def test_parse_simplify_call():
    evs = parse_program(
        "(simplify f :assumptions ((natp x)) :enable (g h) :rulesets (old-to-new general))"
    )
    call = evs[0].payload
    assert call.assumptions == (pt("(natp x)"),)
    assert call.enable == ("g", "h")
    assert call.rulesets == ("old-to-new", "general")


def test_parse_propagate_call():
    text = (
        "(propagate-iso (dr-state-iso) "
        "((dr-state dr-state-ext dr-state-to-ext ext-to-dr-state (* * * *) => (dr-state-p))) "
        ":first-event fns-start :last-event fns-end :suffix ext "
        ":overrides ((lemma-x :skip) (lemma-y :depth 2)))"
    )
    call = parse_program(text)[0].payload
    assert call.iso_names == ("dr-state-iso",)
    spec = call.interface[0]
    assert spec.old_fn == "dr-state"
    assert spec.arg_types == ("*", "*", "*", "*")
    assert spec.result_type == "dr-state-p"
    assert call.first_event == "fns-start"
    assert call.suffix == "ext"
    assert dict(call.overrides)["lemma-x"] == ":skip"
    assert dict(call.overrides)["lemma-y"] == ((":depth", 2),)


def test_parse_config_call():
    call = parse_program(
        "(set-check-config :depth 2 :int-range (-5 5) :symbol-pool (t nil a))"
    )[0].payload
    settings = dict(call.settings)
    assert settings[":depth"] == 2
    assert settings[":int-range"] == (-5, 5)
    assert settings[":symbol-pool"] == ("t", "nil", "a")
    with pytest.raises(ParseError):
        parse_program("(set-check-config :depth (1 2))")


def test_unknown_top_level_form_rejected():
    with pytest.raises(ParseError):
        parse_program("(defmacro m (x) x)")
    with pytest.raises(ParseError):
        parse_program("42")


def test_duplicate_names_rejected():
    with pytest.raises(ParseError):
        parse_program("(defun f (x) x) (defun f (y) y)")


# ---------------------------------------------------------------------------
# printing events reproduces parseable source
# ---------------------------------------------------------------------------


def test_print_event_defun_roundtrip():
    src = (
        "(defun applyn (x n) (declare (xargs :guard (and (natp n) (<= n 10)) "
        ":measure (- 10 n))) (if (zp (- 10 n)) x (applyn (cons x x) (+ n 1))))"
    )
    fd = parse_defun(read_one(src))
    printed = print_event("defun", fd)
    fd2 = parse_defun(read_one(printed))
    assert fd2 == fd


def test_print_event_defthm_roundtrip():
    td = parse_defthm(
        read_one("(defthm b (implies (natp n) (natp (+ n 1))) :ruleset new-to-old)")
    )
    printed = print_event("defthm", td)
    assert parse_defthm(read_one(printed)) == td


def test_print_event_calls_roundtrip():
    for src in [
        "(isodata applyn (((n :result) nat10)) :new-name applyn1)",
        "(simplify f :assumptions ((natp x)) :new-name g)",
        "(set-check-config :depth 1 :int-range (0 10))",
        "(defiso i (lambda (n) (natp n)) (lambda (n) (natp n)) "
        "(lambda (n) n) (lambda (n) n))",
    ]:
        ev = parse_program(src)[0]
        printed = print_event(ev.kind, ev.payload)
        ev2 = parse_program(printed)[0]
        assert ev2.payload == ev.payload
