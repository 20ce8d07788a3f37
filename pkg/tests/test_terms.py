import pytest

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
    alpha_eq,
    called_names,
    conjuncts,
    free_vars,
    fresh_name,
    make_and,
    make_or,
    negate,
    substitute,
    term_size,
)


def v(n):
    return Var(n)


def test_free_vars_basic():
    t = App("f", (v("x"), App("g", (v("y"),))))
    assert free_vars(t) == frozenset({"x", "y"})
    assert free_vars(IntConst(3)) == frozenset()
    assert free_vars(SymConst("t")) == frozenset()


def test_free_vars_lambda_shadowing():
    t = App(Lam(("x",), App("f", (v("x"), v("y")))), (v("z"),))
    assert free_vars(t) == frozenset({"y", "z"})


def test_free_vars_let_parallel():
    # binding values are evaluated in the outer scope, so x in the second
    # binding value refers to the outer x, not the first binding
    t = Let((("x", IntConst(1)), ("y", v("x"))), App("+", (v("x"), v("y"))))
    assert free_vars(t) == frozenset({"x"})


def test_substitute_simple():
    t = App("f", (v("x"), v("y")))
    out = substitute(t, {"x": IntConst(5)})
    assert out == App("f", (IntConst(5), v("y")))


def test_substitute_shadowed_binder_untouched():
    t = Lam(("x",), App("f", (v("x"),)))
    assert substitute(t, {"x": IntConst(1)}) == t


def test_substitute_capture_avoidance():
    # substituting y for x under (lambda (y) ...) must rename the binder
    t = Lam(("y",), App("f", (v("x"), v("y"))))
    out = substitute(t, {"x": v("y")})
    assert isinstance(out, Lam)
    assert out.params != ("y",)
    inner = out.body
    assert isinstance(inner, App)
    # the free y we substituted in stays free; the bound one follows the rename
    assert inner.args[0] == v("y")
    assert inner.args[1] == Var(out.params[0])
    assert free_vars(out) == frozenset({"y"})


def test_substitute_capture_avoidance_let():
    t = Let((("y", v("x")),), App("cons", (v("x"), v("y"))))
    out = substitute(t, {"x": v("y")})
    assert free_vars(out) == frozenset({"y"})
    # semantics preserved: binding value got the substitution
    assert out.bindings[0][1] == v("y")


def test_substitute_composition_with_fresh_intermediate():
    # renaming through a fresh variable equals the direct substitution
    corpus = [
        App("f", (v("x"), v("z"))),
        If(v("x"), App("g", (v("x"),)), v("z")),
        Let((("w", v("x")),), App("+", (v("w"), v("x")))),
        Lam(("a",), App("h", (v("x"), v("a")))),
    ]
    target = App("cons", (IntConst(1), v("z")))
    for t in corpus:
        assert "q" not in free_vars(t)
        via = substitute(substitute(t, {"x": v("q")}), {"q": target})
        direct = substitute(t, {"x": target})
        assert alpha_eq(via, direct)


def test_alpha_eq():
    assert alpha_eq(Lam(("a",), v("a")), Lam(("b",), v("b")))
    assert alpha_eq(
        Let((("a", IntConst(1)),), v("a")),
        Let((("b", IntConst(1)),), v("b")),
    )
    assert not alpha_eq(Lam(("a",), v("a")), Lam(("b",), v("a")))
    assert not alpha_eq(v("x"), v("y"))
    assert alpha_eq(v("x"), v("x"))
    # free variables must match exactly
    assert not alpha_eq(Lam(("a",), v("x")), Lam(("a",), v("y")))


def test_fresh_name():
    assert fresh_name("x", set()) == "x$1"
    assert fresh_name("x", {"x$1"}) == "x$2"
    assert fresh_name("x", {"x$1", "x$2", "x$4"}) == "x$3"


def test_make_and_conjuncts_inverse():
    parts = [v("a"), v("b"), v("c")]
    t = make_and(parts)
    assert t == If(v("a"), If(v("b"), v("c"), NIL), NIL)
    assert conjuncts(t) == parts
    assert make_and([]) == T
    assert conjuncts(T) == []
    assert make_and([v("a")]) == v("a")
    assert conjuncts(v("a")) == [v("a")]


def test_make_or_shape():
    t = make_or([v("a"), v("b")])
    assert t == If(v("a"), v("a"), v("b"))
    assert make_or([]) == NIL


def test_negate_collapses_double_not():
    t = App("not", (v("a"),))
    assert negate(t) == v("a")
    assert negate(v("a")) == App("not", (v("a"),))


def test_called_names():
    t = If(App("zp", (v("n"),)), v("x"), App("f", (App("h", (v("x"),)),)))
    assert called_names(t) == frozenset({"zp", "f", "h"})
    lam_app = App(Lam(("y",), App("g", (v("y"),))), (v("x"),))
    assert called_names(lam_app) == frozenset({"g"})


def test_term_size():
    assert term_size(v("x")) == 1
    assert term_size(App("f", (v("x"), IntConst(1)))) == 3


def test_terms_hashable_and_immutable():
    t = App("f", (v("x"),))
    assert hash(t) == hash(App("f", (v("x"),)))
    with pytest.raises(Exception):
        t.fn = "g"
