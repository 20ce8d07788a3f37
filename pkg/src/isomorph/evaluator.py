"""Evaluation, value enumeration, and bounded-exhaustive obligation checking.

Values are integers, symbols, and pairs. Every builtin is total: accessors
return nil off-domain and arithmetic coerces non-integers to 0, so evaluation
can only fail by running out of fuel or hitting an unbound name. Obligations
(universally quantified implications) are checked by enumerating a finite
value universe; the checker reports resource exhaustion rather than claiming
a pass it did not earn.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, replace
from itertools import product
from operator import itemgetter
from typing import Any, Iterator, Optional, Union

from .terms import (
    App,
    If,
    IntConst,
    Lam,
    Let,
    SymConst,
    Term,
    Var,
    conjuncts,
    free_vars,
    is_builtin,
)
from .world import World

if sys.getrecursionlimit() < 20000:
    sys.setrecursionlimit(20000)


class EvalError(Exception):
    pass


class Divergence(Exception):
    """Fuel ran out (or the host stack did) before evaluation finished."""

    def __init__(self, steps: int):
        super().__init__(f"evaluation did not finish within {steps} calls")
        self.steps = steps


# ---------------------------------------------------------------------------
# values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntVal:
    value: int


@dataclass(frozen=True)
class SymVal:
    name: str


@dataclass(frozen=True)
class PairVal:
    car: "Value"
    cdr: "Value"


Value = Union[IntVal, SymVal, PairVal]

NIL_V = SymVal("nil")
T_V = SymVal("t")


def truthy(v: Value) -> bool:
    return not (type(v) is SymVal and v.name == "nil")


def _bool(b: bool) -> Value:
    return T_V if b else NIL_V


_INT_CACHE = {i: IntVal(i) for i in range(-2048, 2049)}
_SYM_CACHE = {"t": T_V, "nil": NIL_V}


def _mk_int(n: int) -> Value:
    c = _INT_CACHE.get(n)
    return c if c is not None else IntVal(n)


def _as_int(v: Value) -> int:
    return v.value if type(v) is IntVal else 0


def value_to_term(v: Value) -> Term:
    if isinstance(v, IntVal):
        return IntConst(v.value)
    if isinstance(v, SymVal):
        return SymConst(v.name)
    return App("cons", (value_to_term(v.car), value_to_term(v.cdr)))


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _acl2_count(v: Value) -> int:
    if isinstance(v, IntVal):
        return abs(v.value)
    if isinstance(v, PairVal):
        return 1 + _acl2_count(v.car) + _acl2_count(v.cdr)
    return 0


def _walk_list(v: Value) -> tuple[list[Value], Value]:
    """Split a value into its cons spine and final tail."""
    items = []
    while isinstance(v, PairVal):
        items.append(v.car)
        v = v.cdr
    return items, v


def _from_list(items: list[Value], tail: Value = NIL_V) -> Value:
    out = tail
    for x in reversed(items):
        out = PairVal(x, out)
    return out


def _member(x: Value, l: Value) -> Value:
    while isinstance(l, PairVal):
        if l.car == x:
            return l
        l = l.cdr
    return NIL_V


# Positional forms first; the list-taking builtin table delegates to these so
# the compiler's fixed-arity fast paths share one implementation with the
# generic path.


def _f_cons(a, b):
    return PairVal(a, b)


def _f_car(a):
    return a.car if type(a) is PairVal else NIL_V


def _f_cdr(a):
    return a.cdr if type(a) is PairVal else NIL_V


def _f_consp(a):
    return T_V if type(a) is PairVal else NIL_V


def _f_atom(a):
    return NIL_V if type(a) is PairVal else T_V


def _f_null(a):
    return T_V if type(a) is SymVal and a.name == "nil" else NIL_V


def _f_equal(a, b):
    return T_V if a == b else NIL_V


def _f_lt(a, b):
    av = a.value if type(a) is IntVal else 0
    bv = b.value if type(b) is IntVal else 0
    return T_V if av < bv else NIL_V


def _f_not(a):
    return T_V if type(a) is SymVal and a.name == "nil" else NIL_V


def _f_natp(a):
    return T_V if type(a) is IntVal and a.value >= 0 else NIL_V


def _f_integerp(a):
    return T_V if type(a) is IntVal else NIL_V


def _f_zp(a):
    return NIL_V if type(a) is IntVal and a.value > 0 else T_V


def _f_dec(a):
    return _mk_int((a.value if type(a) is IntVal else 0) - 1)


def _f_inc(a):
    return _mk_int((a.value if type(a) is IntVal else 0) + 1)


def _f_mbt(a):
    return NIL_V if type(a) is SymVal and a.name == "nil" else T_V


def _f_identity(a):
    return a


def _bi_cons(args):
    return _f_cons(args[0], args[1])


def _bi_car(args):
    return _f_car(args[0])


def _bi_cdr(args):
    return _f_cdr(args[0])


def _bi_consp(args):
    return _f_consp(args[0])


def _bi_atom(args):
    return _f_atom(args[0])


def _bi_null(args):
    return _f_null(args[0])


def _bi_equal(args):
    return _f_equal(args[0], args[1])


def _bi_lt(args):
    return _f_lt(args[0], args[1])


def _bi_plus(args):
    acc = 0
    for a in args:
        if type(a) is IntVal:
            acc += a.value
    return _mk_int(acc)


def _bi_minus(args):
    a = args[0]
    acc = a.value if type(a) is IntVal else 0
    if len(args) == 1:
        return _mk_int(-acc)
    for a in args[1:]:
        if type(a) is IntVal:
            acc -= a.value
    return _mk_int(acc)


def _bi_times(args):
    acc = 1
    for a in args:
        acc *= a.value if type(a) is IntVal else 0
    return _mk_int(acc)


def _bi_not(args):
    return _f_not(args[0])


def _bi_natp(args):
    return _f_natp(args[0])


def _bi_integerp(args):
    return _f_integerp(args[0])


def _bi_booleanp(args):
    a = args[0]
    return _bool(type(a) is SymVal and (a.name == "t" or a.name == "nil"))


def _bi_zp(args):
    return _f_zp(args[0])


def _bi_dec(args):
    return _f_dec(args[0])


def _bi_inc(args):
    return _f_inc(args[0])


def _bi_len(args):
    n = 0
    v = args[0]
    while type(v) is PairVal:
        n += 1
        v = v.cdr
    return _mk_int(n)


def _bi_append(args):
    items, _ = _walk_list(args[0])
    return _from_list(items, args[1])


def _bi_member(args):
    return _member(args[0], args[1])


def _bi_union(args):
    items, _ = _walk_list(args[0])
    kept = [x for x in items if _member(x, args[1]) == NIL_V]
    return _from_list(kept, args[1])


def _bi_setdiff(args):
    items, _ = _walk_list(args[0])
    kept = [x for x in items if _member(x, args[1]) == NIL_V]
    return _from_list(kept)


def _bi_last(args):
    v = args[0]
    while type(v) is PairVal and type(v.cdr) is PairVal:
        v = v.cdr
    return v


def _bi_count(args):
    return _mk_int(_acl2_count(args[0]))


def _bi_identity(args):
    return args[0]


def _bi_mbt(args):
    return _f_mbt(args[0])


_BUILTINS = {
    "cons": _bi_cons,
    "car": _bi_car,
    "cdr": _bi_cdr,
    "consp": _bi_consp,
    "atom": _bi_atom,
    "null": _bi_null,
    "equal": _bi_equal,
    "<": _bi_lt,
    "+": _bi_plus,
    "-": _bi_minus,
    "*": _bi_times,
    "not": _bi_not,
    "natp": _bi_natp,
    "integerp": _bi_integerp,
    "booleanp": _bi_booleanp,
    "zp": _bi_zp,
    "1-": _bi_dec,
    "1+": _bi_inc,
    "len": _bi_len,
    "append": _bi_append,
    "member-equal": _bi_member,
    "union-equal": _bi_union,
    "set-difference-equal": _bi_setdiff,
    "last": _bi_last,
    "acl2-count": _bi_count,
    "identity": _bi_identity,
    "mbt$": _bi_mbt,
}


def apply_builtin(name: str, args: list[Value]) -> Value:
    f = _BUILTINS.get(name)
    if f is None:
        raise EvalError(f"unknown builtin {name}")
    return f(args)


class Evaluator:
    """Call-by-value evaluator. Each application of a defined function
    costs one unit of fuel; builtins and lambda applications are free.

    Terms compile once into nested closures, cached per instance, so a sweep
    that evaluates one term over many environments pays the dispatch on term
    structure a single time. Every eval call starts with a full fuel budget.

    The hottest builtins are open-coded in the compiled closures rather than
    routed through the table above; the positional _f_ forms stay the
    reference semantics and the test suite exercises both paths."""

    def __init__(self, world: World, fuel: int):
        self.world = world
        self.fuel = fuel
        self.steps = 0
        self._entry_cache: dict[int, tuple[Term, Any]] = {}
        self._fn_cache: dict[str, tuple[bool, tuple[str, ...], Any]] = {}

    def eval(self, term: Term, env: dict[str, Value]) -> Value:
        self.steps = 0
        key = id(term)
        hit = self._entry_cache.get(key)
        if hit is None or hit[0] is not term:
            hit = (term, self._compile(term))
            self._entry_cache[key] = hit
        try:
            return hit[1](env)
        except RecursionError:
            raise Divergence(self.steps) from None
        except KeyError as e:
            raise EvalError(f"unbound variable {e.args[0]}") from None

    def _resolve(self, name: str) -> tuple[bool, tuple[str, ...], Any]:
        """Compile a named function's body on first use. The flag in the
        entry records whether applying it consumes fuel. Resolution happens
        at call time rather than compile time, so a name reachable only
        through dead code never has to exist."""
        fd = self.world.functions.get(name)
        if fd is not None:
            entry = (True, fd.params, self._compile(fd.body))
        else:
            lam = self.world.sugar.get(name)
            if lam is None:
                raise EvalError(f"undefined function {name}")
            entry = (False, lam.params, self._compile(lam.body))
        self._fn_cache[name] = entry
        return entry

    def _compile(self, term: Term):
        tt = type(term)
        if tt is Var:
            # A bare dict lookup with no wrapper frame. A miss surfaces as
            # KeyError and is turned into EvalError at the eval boundary.
            return itemgetter(term.name)
        if tt is IntConst:
            v = _mk_int(term.value)
            return lambda env, _v=v: _v
        if tt is SymConst:
            n = term.name
            c = _SYM_CACHE.get(n)
            if c is None:
                c = _SYM_CACHE[n] = SymVal(n)
            return lambda env, _c=c: _c
        if tt is If:
            tc = self._compile(term.test)
            ac = self._compile(term.then)
            bc = self._compile(term.els)

            def c_if(env, _NIL=NIL_V, _T=T_V, _S=SymVal):
                v = tc(env)
                if v is _NIL:
                    return bc(env)
                if v is _T:
                    return ac(env)
                if type(v) is _S and v.name == "nil":
                    return bc(env)
                return ac(env)

            return c_if
        if tt is App:
            return self._compile_app(term)
        if tt is Let:
            bcs = [(name, self._compile(val)) for name, val in term.bindings]
            bodyc = self._compile(term.body)

            def c_let(env):
                new_env = dict(env)
                for nm, vc in bcs:
                    new_env[nm] = vc(env)
                return bodyc(new_env)

            return c_let
        if tt is Lam:

            def c_bare_lam(env):
                raise EvalError("a lambda is not a value in this language")

            return c_bare_lam

        def c_opaque(env):
            raise EvalError(f"cannot evaluate {term!r}")

        return c_opaque

    def _compile_app(self, term: App):
        fn = term.fn
        argcs = [self._compile(a) for a in term.args]
        na = len(argcs)
        if type(fn) is not str:
            lam_params = fn.params
            lam_bodyc = self._compile(fn.body)

            def c_lam_app(env):
                return lam_bodyc(dict(zip(lam_params, [a(env) for a in argcs])))

            return c_lam_app
        b = _BUILTINS.get(fn)
        if b is not None:
            code = self._open_code(fn, argcs, na)
            if code is not None:
                return code

            def c_builtin(env):
                return b([a(env) for a in argcs])

            return c_builtin
        return self._compile_named_call(fn, argcs, na)

    def _open_code(self, fn: str, argcs, na: int):
        """Dedicated closures for the frequent fixed-arity builtins."""
        if na == 1:
            a0 = argcs[0]
            if fn == "identity":
                return a0
            if fn == "car":

                def c_car(env, _P=PairVal, _NIL=NIL_V):
                    v = a0(env)
                    return v.car if type(v) is _P else _NIL

                return c_car
            if fn == "cdr":

                def c_cdr(env, _P=PairVal, _NIL=NIL_V):
                    v = a0(env)
                    return v.cdr if type(v) is _P else _NIL

                return c_cdr
            if fn == "consp":

                def c_consp(env, _P=PairVal, _T=T_V, _NIL=NIL_V):
                    return _T if type(a0(env)) is _P else _NIL

                return c_consp
            if fn == "atom":

                def c_atom(env, _P=PairVal, _T=T_V, _NIL=NIL_V):
                    return _NIL if type(a0(env)) is _P else _T

                return c_atom
            if fn == "not" or fn == "null":

                def c_not(env, _S=SymVal, _T=T_V, _NIL=NIL_V):
                    v = a0(env)
                    return _T if type(v) is _S and v.name == "nil" else _NIL

                return c_not
            if fn == "mbt$":

                def c_mbt(env, _S=SymVal, _T=T_V, _NIL=NIL_V):
                    v = a0(env)
                    return _NIL if type(v) is _S and v.name == "nil" else _T

                return c_mbt
            if fn == "zp":

                def c_zp(env, _I=IntVal, _T=T_V, _NIL=NIL_V):
                    v = a0(env)
                    return _NIL if type(v) is _I and v.value > 0 else _T

                return c_zp
            if fn == "natp":

                def c_natp(env, _I=IntVal, _T=T_V, _NIL=NIL_V):
                    v = a0(env)
                    return _T if type(v) is _I and v.value >= 0 else _NIL

                return c_natp
            if fn == "integerp":

                def c_integerp(env, _I=IntVal, _T=T_V, _NIL=NIL_V):
                    return _T if type(a0(env)) is _I else _NIL

                return c_integerp
            if fn == "1-":

                def c_dec(env, _I=IntVal, _mk=_mk_int):
                    v = a0(env)
                    return _mk((v.value if type(v) is _I else 0) - 1)

                return c_dec
            if fn == "1+":

                def c_inc(env, _I=IntVal, _mk=_mk_int):
                    v = a0(env)
                    return _mk((v.value if type(v) is _I else 0) + 1)

                return c_inc
            if fn == "-":

                def c_neg(env, _I=IntVal, _mk=_mk_int):
                    v = a0(env)
                    return _mk(-(v.value if type(v) is _I else 0))

                return c_neg
            return None
        if na == 2:
            a0, a1 = argcs
            if fn == "cons":

                def c_cons(env, _P=PairVal):
                    return _P(a0(env), a1(env))

                return c_cons
            if fn == "equal":

                def c_equal(env, _T=T_V, _NIL=NIL_V):
                    return _T if a0(env) == a1(env) else _NIL

                return c_equal
            if fn == "<":

                def c_lt(env, _I=IntVal, _T=T_V, _NIL=NIL_V):
                    u = a0(env)
                    v = a1(env)
                    uv = u.value if type(u) is _I else 0
                    vv = v.value if type(v) is _I else 0
                    return _T if uv < vv else _NIL

                return c_lt
            if fn == "+":

                def c_add(env, _I=IntVal, _mk=_mk_int):
                    u = a0(env)
                    v = a1(env)
                    return _mk(
                        (u.value if type(u) is _I else 0)
                        + (v.value if type(v) is _I else 0)
                    )

                return c_add
            if fn == "-":

                def c_sub(env, _I=IntVal, _mk=_mk_int):
                    u = a0(env)
                    v = a1(env)
                    return _mk(
                        (u.value if type(u) is _I else 0)
                        - (v.value if type(v) is _I else 0)
                    )

                return c_sub
            if fn == "*":

                def c_mul(env, _I=IntVal, _mk=_mk_int):
                    u = a0(env)
                    v = a1(env)
                    return _mk(
                        (u.value if type(u) is _I else 0)
                        * (v.value if type(v) is _I else 0)
                    )

                return c_mul
            return None
        return None

    def _compile_named_call(self, fn: str, argcs, na: int):
        """A defined function or a named abbreviation. The entry resolves
        lazily on first invocation and is then pinned in a call-site cell;
        argument evaluation precedes the fuel charge, mirroring call-by-value
        order. Sites of arity one and two bind parameters with a dict
        display; the pin falls back to zip when the definition's arity
        disagrees with the call's."""
        cell: list = []
        if na == 1:
            a0c = argcs[0]

            def c_call1(env, _self=self):
                if cell:
                    counts, p0, params, bodyc = cell[0]
                else:
                    entry = _self._fn_cache.get(fn)
                    if entry is None:
                        entry = _self._resolve(fn)
                    counts, params, bodyc = entry
                    p0 = params[0] if len(params) == 1 else None
                    cell.append((counts, p0, params, bodyc))
                v0 = a0c(env)
                if counts:
                    steps = _self.steps + 1
                    _self.steps = steps
                    if steps > _self.fuel:
                        raise Divergence(steps)
                if p0 is not None:
                    return bodyc({p0: v0})
                return bodyc(dict(zip(params, (v0,))))

            return c_call1
        if na == 2:
            a0c, a1c = argcs

            def c_call2(env, _self=self):
                if cell:
                    counts, p0, p1, params, bodyc = cell[0]
                else:
                    entry = _self._fn_cache.get(fn)
                    if entry is None:
                        entry = _self._resolve(fn)
                    counts, params, bodyc = entry
                    p0, p1 = params if len(params) == 2 else (None, None)
                    cell.append((counts, p0, p1, params, bodyc))
                v0 = a0c(env)
                v1 = a1c(env)
                if counts:
                    steps = _self.steps + 1
                    _self.steps = steps
                    if steps > _self.fuel:
                        raise Divergence(steps)
                if p0 is not None:
                    return bodyc({p0: v0, p1: v1})
                return bodyc(dict(zip(params, (v0, v1))))

            return c_call2

        def c_call(env, _self=self):
            if cell:
                counts, params, bodyc = cell[0]
            else:
                entry = _self._fn_cache.get(fn)
                if entry is None:
                    entry = _self._resolve(fn)
                cell.append(entry)
                counts, params, bodyc = entry
            args = [a(env) for a in argcs]
            if counts:
                steps = _self.steps + 1
                _self.steps = steps
                if steps > _self.fuel:
                    raise Divergence(steps)
            return bodyc(dict(zip(params, args)))

        return c_call


def eval_term(term: Term, env: dict[str, Value], world: World, fuel: int) -> Value:
    return Evaluator(world, fuel).eval(term, env)


# ---------------------------------------------------------------------------
# the value universe
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnumConfig:
    depth: int = 3
    int_lo: int = -17
    int_hi: int = 17
    pool: tuple[str, ...] = ("t", "nil", "a", "b")
    case_cap: int = 200000
    fuel: int = 100000


def apply_settings(cfg: EnumConfig, settings) -> EnumConfig:
    for key, val in settings:
        if key == ":depth":
            cfg = replace(cfg, depth=val)
        elif key == ":int-range":
            cfg = replace(cfg, int_lo=val[0], int_hi=val[1])
        elif key == ":case-cap":
            cfg = replace(cfg, case_cap=val)
        elif key == ":fuel":
            cfg = replace(cfg, fuel=val)
        elif key == ":symbol-pool":
            cfg = replace(cfg, pool=tuple(val))
        else:
            raise ValueError(f"unknown check-config key {key}")
    return cfg


def value_stream(cfg: EnumConfig) -> Iterator[Value]:
    """All values of pair depth at most cfg.depth, each exactly once.

    Order: integers ascending, pool symbols in pool order, then pairs level
    by level. Level d contributes the pairs whose deeper component sits at
    depth d-1, ordered by (car position, cdr position) in this same stream.
    """
    atoms: list[Value] = [IntVal(i) for i in range(cfg.int_lo, cfg.int_hi + 1)]
    atoms += [SymVal(s) for s in cfg.pool]
    yield from atoms
    cum: list[Value] = list(atoms)
    prev_start = 0
    for _level in range(1, cfg.depth + 1):
        n = len(cum)
        fresh: list[Value] = []
        for i in range(n):
            for j in range(n):
                if i >= prev_start or j >= prev_start:
                    v = PairVal(cum[i], cum[j])
                    yield v
                    fresh.append(v)
        prev_start = n
        cum.extend(fresh)


def _designator_term(designator) -> tuple[Term, str]:
    """Build an application of the designator to a probe variable."""
    probe = "enum-probe"
    if isinstance(designator, str):
        return App(designator, (Var(probe),)), probe
    if isinstance(designator, Lam):
        return App(designator, (Var(probe),)), probe
    raise EvalError(f"not a unary function designator: {designator!r}")


def satisfying_values(designator, world: World, cfg: EnumConfig) -> Iterator[Value]:
    """Lazily yield the universe members the unary predicate accepts.
    A Divergence raised by the predicate propagates to the consumer."""
    call, probe = _designator_term(designator)
    ev = Evaluator(world, cfg.fuel)
    for v in value_stream(cfg):
        if truthy(ev.eval(call, {probe: v})):
            yield v


# ---------------------------------------------------------------------------
# obligations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Obligation:
    name: str
    vars: tuple[str, ...]
    hyp: Term
    concl: Term
    hints: tuple[tuple[str, Any], ...] = ()  # (var, unary designator)


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str  # passed | failed | resource-exhausted
    cases_checked: int
    vacuous: int = 0
    counterexample: Optional[tuple[tuple[str, Value], ...]] = None
    reason: Optional[str] = None


@dataclass(frozen=True)
class ObligationRecord:
    """An obligation together with how it was discharged.

    status holds the check outcome (passed, failed, resource-exhausted) when
    evaluation was the sole evidence, or proven-by-derivation /
    proven-by-rewriting when the construction itself justifies the claim.
    In the latter case the check field still carries the spot-check run
    against the constructed statement.
    """

    obligation: Obligation
    provenance: str
    status: str
    check: Optional[CheckResult] = None


def format_value(v: Value) -> str:
    if isinstance(v, IntVal):
        return str(v.value)
    if isinstance(v, SymVal):
        return v.name
    parts = [format_value(v.car)]
    rest = v.cdr
    while isinstance(rest, PairVal):
        parts.append(format_value(rest.car))
        rest = rest.cdr
    if rest == NIL_V:
        return "(" + " ".join(parts) + ")"
    return "(" + " ".join(parts) + " . " + format_value(rest) + ")"


def format_counterexample(cex: tuple[tuple[str, Value], ...]) -> str:
    return ", ".join(f"{name} = {format_value(v)}" for name, v in cex)


def _unary_callable(name: str, world: World) -> bool:
    if is_builtin(name):
        from .terms import BUILTIN_ARITIES

        lo, hi = BUILTIN_ARITIES[name]
        return lo <= 1 and (hi is None or hi >= 1)
    fd = world.functions.get(name)
    if fd is not None:
        return len(fd.params) == 1
    lam = world.sugar.get(name)
    return lam is not None and len(lam.params) == 1


def _auto_hints(ob: Obligation, use_vars: list[str], world: World) -> dict[str, Any]:
    hints: dict[str, Any] = {}
    for var, d in ob.hints:
        hints.setdefault(var, d)
    for c in conjuncts(ob.hyp):
        if (
            isinstance(c, App)
            and isinstance(c.fn, str)
            and len(c.args) == 1
            and isinstance(c.args[0], Var)
            and c.args[0].name in use_vars
            and c.args[0].name not in hints
            and _unary_callable(c.fn, world)
        ):
            hints[c.args[0].name] = c.fn
    return hints


def _candidates(
    hint, world: World, cfg: EnumConfig, cache: Optional[dict]
) -> tuple[list[Value], bool, Optional[str]]:
    """Materialize the candidate list for one variable.

    Returns (values, complete, note). complete means the whole bounded
    universe was scanned, so a pass over these candidates is exhaustive."""
    key = (cfg, hint)
    if cache is not None and key in cache:
        return cache[key]
    call = probe = None
    if hint is not None:
        call, probe = _designator_term(hint)
    ev = Evaluator(world, cfg.fuel)
    out: list[Value] = []
    scanned = 0
    complete = True
    note = None
    for v in value_stream(cfg):
        if scanned >= cfg.case_cap:
            complete = False
            note = "candidate scan hit the case cap"
            break
        scanned += 1
        if call is None:
            out.append(v)
        else:
            try:
                if truthy(ev.eval(call, {probe: v})):
                    out.append(v)
            except Divergence:
                complete = False
                note = "candidate predicate diverged"
                break
    result = (out, complete, note)
    if cache is not None:
        cache[key] = result
    return result


def check_obligation(
    ob: Obligation, world: World, cfg: EnumConfig, cache: Optional[dict] = None
) -> CheckResult:
    free = free_vars(ob.hyp) | free_vars(ob.concl)
    missing = free - set(ob.vars)
    if missing:
        raise EvalError(
            f"obligation {ob.name} has unquantified variables: {sorted(missing)}"
        )
    use_vars = [v for v in ob.vars if v in free]
    hints = _auto_hints(ob, use_vars, world)

    domains: list[list[Value]] = []
    all_complete = True
    notes: list[str] = []
    for var in use_vars:
        vals, complete, note = _candidates(hints.get(var), world, cfg, cache)
        domains.append(vals)
        if not complete:
            all_complete = False
            notes.append(f"{var}: {note}")

    cases = 0
    vacuous = 0
    budget = 0
    over_cap = False
    ev = Evaluator(world, cfg.fuel)
    for combo in product(*domains) if domains else iter([()]):
        if budget >= cfg.case_cap:
            over_cap = True
            break
        budget += 1
        env = dict(zip(use_vars, combo))
        try:
            hyp_val = ev.eval(ob.hyp, env)
        except Divergence:
            cases += 1
            vacuous += 1
            continue
        if not truthy(hyp_val):
            continue
        try:
            concl_val = ev.eval(ob.concl, env)
        except Divergence:
            cases += 1
            return CheckResult(
                ob.name,
                "resource-exhausted",
                cases,
                vacuous,
                None,
                "conclusion evaluation diverged",
            )
        cases += 1
        if not truthy(concl_val):
            cex = tuple(zip(use_vars, combo))
            return CheckResult(ob.name, "failed", cases, vacuous, cex, None)

    if over_cap:
        return CheckResult(
            ob.name,
            "resource-exhausted",
            cases,
            vacuous,
            None,
            f"stopped after {cfg.case_cap} cases",
        )
    if not all_complete:
        return CheckResult(
            ob.name, "resource-exhausted", cases, vacuous, None, "; ".join(notes)
        )
    return CheckResult(ob.name, "passed", cases, vacuous, None, None)
