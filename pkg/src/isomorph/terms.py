"""Core term representation.

Terms form a small first-order functional language: integer and symbol
constants, variables, applications (of named functions or literal lambdas),
conditionals, and lexical let bindings. Applications of `and`/`or` and the
comparison macros never appear here; the parser desugars them to If and <.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True)
class IntConst:
    value: int


@dataclass(frozen=True)
class SymConst:
    name: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class App:
    fn: Union[str, "Lam"]
    args: tuple["Term", ...]


@dataclass(frozen=True)
class Lam:
    params: tuple[str, ...]
    body: "Term"


@dataclass(frozen=True)
class If:
    test: "Term"
    then: "Term"
    els: "Term"


@dataclass(frozen=True)
class Let:
    bindings: tuple[tuple[str, "Term"], ...]
    body: "Term"


Term = Union[IntConst, SymConst, Var, App, Lam, If, Let]

NIL = SymConst("nil")
T = SymConst("t")


# arity: (min, max); max None means variadic.
BUILTIN_ARITIES: dict[str, tuple[int, int | None]] = {
    "cons": (2, 2),
    "car": (1, 1),
    "cdr": (1, 1),
    "consp": (1, 1),
    "atom": (1, 1),
    "null": (1, 1),
    "equal": (2, 2),
    "<": (2, 2),
    "+": (0, None),
    "-": (1, None),
    "*": (0, None),
    "not": (1, 1),
    "natp": (1, 1),
    "integerp": (1, 1),
    "booleanp": (1, 1),
    "len": (1, 1),
    "append": (2, 2),
    "member-equal": (2, 2),
    "union-equal": (2, 2),
    "set-difference-equal": (2, 2),
    "last": (1, 1),
    "zp": (1, 1),
    "1-": (1, 1),
    "1+": (1, 1),
    "acl2-count": (1, 1),
    "identity": (1, 1),
    "mbt$": (1, 1),
}

# Builtins that act uniformly on every representation, so deriving an
# isomorphic version never needs to replace them.
POLYMORPHIC_BUILTINS = frozenset(
    ["equal", "if", "cons", "car", "cdr", "consp", "atom", "null", "not"]
)


def is_builtin(name: str) -> bool:
    return name in BUILTIN_ARITIES


def free_vars(term: Term) -> frozenset[str]:
    if isinstance(term, Var):
        return frozenset([term.name])
    if isinstance(term, (IntConst, SymConst)):
        return frozenset()
    if isinstance(term, App):
        out = frozenset().union(*[free_vars(a) for a in term.args]) if term.args else frozenset()
        if isinstance(term.fn, Lam):
            out = out | free_vars(term.fn)
        return out
    if isinstance(term, Lam):
        return free_vars(term.body) - frozenset(term.params)
    if isinstance(term, If):
        return free_vars(term.test) | free_vars(term.then) | free_vars(term.els)
    if isinstance(term, Let):
        bound: set[str] = set()
        out: set[str] = set()
        for name, value in term.bindings:
            # bindings are parallel: values see the outer scope only
            out |= free_vars(value)
            bound.add(name)
        out |= free_vars(term.body) - bound
        return frozenset(out)
    raise TypeError(f"not a term: {term!r}")


def fresh_name(base: str, taken: set[str] | frozenset[str]) -> str:
    """Smallest base$k not in taken (k from 1)."""
    k = 1
    while f"{base}${k}" in taken:
        k += 1
    return f"{base}${k}"


def substitute(term: Term, subst: dict[str, Term]) -> Term:
    """Capture-avoiding parallel substitution of variables."""
    if not subst:
        return term
    if isinstance(term, Var):
        return subst.get(term.name, term)
    if isinstance(term, (IntConst, SymConst)):
        return term
    if isinstance(term, App):
        fn = term.fn
        if isinstance(fn, Lam):
            fn = _subst_binder(fn.params, fn.body, subst, lambda ps, b: Lam(ps, b))
        return App(fn, tuple(substitute(a, subst) for a in term.args))
    if isinstance(term, If):
        return If(
            substitute(term.test, subst),
            substitute(term.then, subst),
            substitute(term.els, subst),
        )
    if isinstance(term, Lam):
        return _subst_binder(term.params, term.body, subst, lambda ps, b: Lam(ps, b))
    if isinstance(term, Let):
        new_bindings = tuple((n, substitute(v, subst)) for n, v in term.bindings)
        names = tuple(n for n, _ in new_bindings)

        def rebuild(ps: tuple[str, ...], b: Term) -> Term:
            return Let(tuple(zip(ps, (v for _, v in new_bindings))), b)

        return _subst_binder(names, term.body, subst, rebuild)
    raise TypeError(f"not a term: {term!r}")


def _subst_binder(params, body, subst, rebuild):
    live = {k: v for k, v in subst.items() if k not in params}
    live = {k: v for k, v in live.items() if k in free_vars(body)}
    if not live:
        return rebuild(tuple(params), body)
    # rename any bound name captured by an incoming term
    incoming = frozenset().union(*[free_vars(v) for v in live.values()])
    taken = set(incoming) | set(free_vars(body)) | set(params)
    new_params = []
    renames: dict[str, Term] = {}
    for p in params:
        if p in incoming:
            p2 = fresh_name(p, taken)
            taken.add(p2)
            renames[p] = Var(p2)
            new_params.append(p2)
        else:
            new_params.append(p)
    if renames:
        body = substitute(body, renames)
    return rebuild(tuple(new_params), substitute(body, live))


def alpha_eq(a: Term, b: Term) -> bool:
    return _alpha(a, b, {}, {})


def _alpha(a: Term, b: Term, env_a: dict[str, int], env_b: dict[str, int]) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, IntConst):
        return a.value == b.value
    if isinstance(a, SymConst):
        return a.name == b.name
    if isinstance(a, Var):
        ia, ib = env_a.get(a.name), env_b.get(b.name)
        if ia is None and ib is None:
            return a.name == b.name
        return ia == ib
    if isinstance(a, App):
        if len(a.args) != len(b.args):
            return False
        if isinstance(a.fn, Lam) != isinstance(b.fn, Lam):
            return False
        if isinstance(a.fn, Lam):
            if not _alpha_binder(a.fn.params, a.fn.body, b.fn.params, b.fn.body, env_a, env_b):
                return False
        elif a.fn != b.fn:
            return False
        return all(_alpha(x, y, env_a, env_b) for x, y in zip(a.args, b.args))
    if isinstance(a, If):
        return (
            _alpha(a.test, b.test, env_a, env_b)
            and _alpha(a.then, b.then, env_a, env_b)
            and _alpha(a.els, b.els, env_a, env_b)
        )
    if isinstance(a, Lam):
        return _alpha_binder(a.params, a.body, b.params, b.body, env_a, env_b)
    if isinstance(a, Let):
        if len(a.bindings) != len(b.bindings):
            return False
        for (_, va), (_, vb) in zip(a.bindings, b.bindings):
            if not _alpha(va, vb, env_a, env_b):
                return False
        return _alpha_binder(
            tuple(n for n, _ in a.bindings),
            a.body,
            tuple(n for n, _ in b.bindings),
            b.body,
            env_a,
            env_b,
        )
    raise TypeError(f"not a term: {a!r}")


def _alpha_binder(params_a, body_a, params_b, body_b, env_a, env_b) -> bool:
    if len(params_a) != len(params_b):
        return False
    depth = max(list(env_a.values()) + list(env_b.values()) + [-1]) + 1
    ea, eb = dict(env_a), dict(env_b)
    for i, (pa, pb) in enumerate(zip(params_a, params_b)):
        ea[pa] = depth + i
        eb[pb] = depth + i
    return _alpha(body_a, body_b, ea, eb)


def term_size(term: Term) -> int:
    if isinstance(term, (IntConst, SymConst, Var)):
        return 1
    if isinstance(term, App):
        base = term_size(term.fn.body) + 1 if isinstance(term.fn, Lam) else 1
        return base + sum(term_size(a) for a in term.args)
    if isinstance(term, If):
        return 1 + term_size(term.test) + term_size(term.then) + term_size(term.els)
    if isinstance(term, Lam):
        return 1 + term_size(term.body)
    if isinstance(term, Let):
        return 1 + sum(term_size(v) for _, v in term.bindings) + term_size(term.body)
    raise TypeError(f"not a term: {term!r}")


def called_names(term: Term) -> frozenset[str]:
    """Every function name applied anywhere inside term (builtins included)."""
    out: set[str] = set()

    def walk(t: Term) -> None:
        if isinstance(t, App):
            if isinstance(t.fn, Lam):
                walk(t.fn.body)
            else:
                out.add(t.fn)
            for a in t.args:
                walk(a)
        elif isinstance(t, If):
            walk(t.test)
            walk(t.then)
            walk(t.els)
        elif isinstance(t, Lam):
            walk(t.body)
        elif isinstance(t, Let):
            for _, v in t.bindings:
                walk(v)
            walk(t.body)

    walk(term)
    return frozenset(out)


def make_and(parts: list[Term]) -> Term:
    """Conjunction as nested If, the shape `and` desugars to."""
    if not parts:
        return T
    if len(parts) == 1:
        return parts[0]
    return If(parts[0], make_and(parts[1:]), NIL)


def make_or(parts: list[Term]) -> Term:
    if not parts:
        return NIL
    if len(parts) == 1:
        return parts[0]
    return If(parts[0], parts[0], make_or(parts[1:]))


def conjuncts(term: Term) -> list[Term]:
    """Flatten the nested-If conjunction pattern; inverse of make_and."""
    if term == T:
        return []
    if isinstance(term, If) and term.els == NIL:
        return [term.test] + conjuncts(term.then)
    return [term]


def negate(term: Term) -> Term:
    if isinstance(term, App) and term.fn == "not" and len(term.args) == 1:
        return term.args[0]
    return App("not", (term,))
