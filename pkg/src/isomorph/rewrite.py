"""Directed conditional rewriting and the simplify operation.

Terms are kept in a normal form maintained by a fixed set of built-in
steps (branch pruning, beta reduction, let inlining, ground folding, and
linear arithmetic normalization).  Named rules fire on top of that normal
form; each rule carries a condition that must be discharged from the
assumption context or by recursive rewriting before the rule applies.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass
from typing import Optional

from .evaluator import (
    Divergence,
    EnumConfig,
    EvalError,
    Evaluator,
    Obligation,
    ObligationRecord,
    check_obligation,
    format_counterexample,
    value_to_term,
)
from .terms import (
    NIL,
    App,
    If,
    IntConst,
    Lam,
    Let,
    SymConst,
    T,
    Term,
    Var,
    alpha_eq,
    called_names,
    conjuncts,
    free_vars,
    is_builtin,
    make_and,
    substitute,
)
from .world import FunDef, TheoremDef, TransformRecord, World


class RewriteError(Exception):
    pass


@dataclass(frozen=True)
class Rule:
    name: str
    vars: tuple[str, ...]
    condition: Term
    lhs: Term
    rhs: Term
    ruleset: str  # general | old-to-new | new-to-old | definition
    enabled: bool = True
    budget: Optional[int] = None  # max firings per pass; None is unlimited


@dataclass(frozen=True)
class RewriteResult:
    term: Term
    steps: int
    fuel_exhausted: bool


_ARITH = {"+", "-", "*", "1+", "1-"}
_INT_CERTAIN = _ARITH | {"len", "acl2-count"}
_COND_DEPTH_CAP = 5
_DEFAULT_STEP_FUEL = 50000


def _term_key(t: Term) -> str:
    return repr(t)


# ---------------------------------------------------------------------------
# linear arithmetic normalization
# ---------------------------------------------------------------------------
#
# A +/-/*/1+/1- node flattens into a constant plus a coefficient per
# monomial.  The rebuilt sum lists the constant first, then coefficient-one
# monomials, then the rest, each group ordered by a deterministic term key,
# so syntactically different spellings of the same linear form converge.


def _collect_sum(t: Term, sign: int, out: list) -> None:
    if isinstance(t, IntConst):
        out.append((sign * t.value, None))
    elif isinstance(t, App) and t.fn == "+":
        for a in t.args:
            _collect_sum(a, sign, out)
    elif isinstance(t, App) and t.fn == "-":
        if len(t.args) == 1:
            _collect_sum(t.args[0], -sign, out)
        else:
            _collect_sum(t.args[0], sign, out)
            for a in t.args[1:]:
                _collect_sum(a, -sign, out)
    elif isinstance(t, App) and t.fn == "1+":
        _collect_sum(t.args[0], sign, out)
        out.append((sign, None))
    elif isinstance(t, App) and t.fn == "1-":
        _collect_sum(t.args[0], sign, out)
        out.append((-sign, None))
    elif isinstance(t, App) and t.fn == "*":
        _collect_product(t, sign, out)
    else:
        out.append((sign, t))


def _collect_product(t: Term, sign: int, out: list) -> None:
    factors: list[Term] = []

    def flat(x: Term) -> None:
        if isinstance(x, App) and x.fn == "*":
            for a in x.args:
                flat(a)
        else:
            factors.append(x)

    flat(t)
    coeff = 1
    others: list[Term] = []
    for f in factors:
        if isinstance(f, IntConst):
            coeff *= f.value
        else:
            others.append(f)
    if coeff == 0 or not others:
        out.append((sign * coeff, None))
        return
    if len(others) == 1 and isinstance(others[0], App) and others[0].fn in (
        "+",
        "-",
        "1+",
        "1-",
    ):
        sub: list = []
        _collect_sum(others[0], sign, sub)
        out.extend((coeff * c, m) for c, m in sub)
        return
    if len(others) == 1:
        mono: Term = others[0]
    else:
        mono = App("*", tuple(sorted(others, key=_term_key)))
    out.append((sign * coeff, mono))


def sum_normalize(t: Term) -> Term:
    out: list = []
    _collect_sum(t, 1, out)
    const = sum(c for c, m in out if m is None)
    acc: dict[str, list] = {}
    for c, m in out:
        if m is None:
            continue
        k = _term_key(m)
        if k in acc:
            acc[k][0] += c
        else:
            acc[k] = [c, m]
    monos = [(c, m) for c, m in acc.values() if c != 0]
    units = sorted((cm for cm in monos if abs(cm[0]) == 1), key=lambda cm: _term_key(cm[1]))
    rest = sorted((cm for cm in monos if abs(cm[0]) != 1), key=lambda cm: _term_key(cm[1]))
    addends: list[Term] = []
    if const != 0 or not monos:
        addends.append(IntConst(const))
    for c, m in units:
        addends.append(m if c == 1 else App("-", (m,)))
    for c, m in rest:
        prod = App("*", (IntConst(abs(c)), m))
        addends.append(prod if c > 0 else App("-", (prod,)))
    if len(addends) == 1:
        a = addends[0]
        if isinstance(a, IntConst):
            return a
        if isinstance(a, App) and a.fn in _INT_CERTAIN:
            return a
        # a bare monomial needs the coercion wrapper to stay value-equal
        return App("+", (a,))
    return App("+", tuple(addends))


# ---------------------------------------------------------------------------
# pattern matching
# ---------------------------------------------------------------------------


def _match(pattern: Term, term: Term, pvars: set, binds: dict) -> bool:
    if isinstance(pattern, Var):
        if pattern.name in pvars:
            if pattern.name in binds:
                return alpha_eq(binds[pattern.name], term)
            binds[pattern.name] = term
            return True
        return term == pattern
    if isinstance(pattern, (IntConst, SymConst)):
        return term == pattern
    if isinstance(pattern, App):
        if not isinstance(term, App) or len(pattern.args) != len(term.args):
            return False
        if isinstance(pattern.fn, str):
            if pattern.fn != term.fn:
                return False
        else:
            if not isinstance(term.fn, Lam) or not alpha_eq(pattern.fn, term.fn):
                return False
        return all(
            _match(p, a, pvars, binds) for p, a in zip(pattern.args, term.args)
        )
    if isinstance(pattern, If):
        return (
            isinstance(term, If)
            and _match(pattern.test, term.test, pvars, binds)
            and _match(pattern.then, term.then, pvars, binds)
            and _match(pattern.els, term.els, pvars, binds)
        )
    # binder patterns match only up to renaming, with no bindings extracted
    return alpha_eq(pattern, term)


def _decide(test: Term) -> Optional[bool]:
    """Truth value of a test term when it is statically settled."""
    if test == NIL:
        return False
    if isinstance(test, (IntConst, SymConst)):
        return True
    if isinstance(test, App) and test.fn == "cons":
        return True
    return None


def _is_value_term(t: Term) -> bool:
    if isinstance(t, (IntConst, SymConst)):
        return True
    return (
        isinstance(t, App)
        and t.fn == "cons"
        and len(t.args) == 2
        and all(_is_value_term(a) for a in t.args)
    )


def _count_calls(t: Term, name: str) -> int:
    if isinstance(t, App):
        own = 1 if t.fn == name else 0
        inner = _count_calls(t.fn.body, name) if isinstance(t.fn, Lam) else 0
        return own + inner + sum(_count_calls(a, name) for a in t.args)
    if isinstance(t, If):
        return sum(_count_calls(x, name) for x in (t.test, t.then, t.els))
    if isinstance(t, Let):
        return sum(_count_calls(v, name) for _, v in t.bindings) + _count_calls(
            t.body, name
        )
    if isinstance(t, Lam):
        return _count_calls(t.body, name)
    return 0


def _count_free_var(t: Term, name: str) -> int:
    if isinstance(t, Var):
        return 1 if t.name == name else 0
    if isinstance(t, (IntConst, SymConst)):
        return 0
    if isinstance(t, App):
        inner = 0
        if isinstance(t.fn, Lam) and name not in t.fn.params:
            inner = _count_free_var(t.fn.body, name)
        return inner + sum(_count_free_var(a, name) for a in t.args)
    if isinstance(t, If):
        return sum(_count_free_var(x, name) for x in (t.test, t.then, t.els))
    if isinstance(t, Let):
        n = sum(_count_free_var(v, name) for _, v in t.bindings)
        if name not in [b for b, _ in t.bindings]:
            n += _count_free_var(t.body, name)
        return n
    if isinstance(t, Lam):
        return 0 if name in t.params else _count_free_var(t.body, name)
    return 0


def rename_calls(t: Term, old: str, new: str) -> Term:
    if isinstance(t, App):
        fn = t.fn
        if isinstance(fn, Lam):
            fn = Lam(fn.params, rename_calls(fn.body, old, new))
        elif fn == old:
            fn = new
        return App(fn, tuple(rename_calls(a, old, new) for a in t.args))
    if isinstance(t, If):
        return If(
            rename_calls(t.test, old, new),
            rename_calls(t.then, old, new),
            rename_calls(t.els, old, new),
        )
    if isinstance(t, Let):
        return Let(
            tuple((n, rename_calls(v, old, new)) for n, v in t.bindings),
            rename_calls(t.body, old, new),
        )
    if isinstance(t, Lam):
        return Lam(t.params, rename_calls(t.body, old, new))
    return t


# ---------------------------------------------------------------------------
# the rewriting session
# ---------------------------------------------------------------------------


class _Session:
    def __init__(self, world, rules, ctx, step_fuel, eval_fuel):
        self.world = world
        self.rules = list(rules)
        self.ctx = list(ctx)
        self.step_fuel = step_fuel
        self.eval_fuel = eval_fuel
        self.steps = 0
        self.exhausted = False
        self.budgets = {r.name: r.budget for r in self.rules if r.budget is not None}

    def _use(self) -> bool:
        if self.exhausted:
            return False
        if self.steps >= self.step_fuel:
            self.exhausted = True
            return False
        self.steps += 1
        return True

    def norm(self, t: Term, ctx: list, depth: int) -> Term:
        if self.exhausted:
            return t
        if isinstance(t, (Var, IntConst, SymConst)):
            return t
        if isinstance(t, If):
            return self._norm_if(t, ctx, depth)
        if isinstance(t, Let):
            return self._norm_let(t, ctx, depth)
        if isinstance(t, Lam):
            inner = [a for a in ctx if not (free_vars(a) & set(t.params))]
            return Lam(t.params, self.norm(t.body, inner, depth))
        return self._norm_app(t, ctx, depth)

    def _norm_if(self, t: If, ctx: list, depth: int) -> Term:
        test = self.norm(t.test, ctx, depth)
        settled = _decide(test)
        if settled is not None:
            if self._use():
                return self.norm(t.then if settled else t.els, ctx, depth)
            return If(test, t.then, t.els)
        if isinstance(test, App) and test.fn == "not" and len(test.args) == 1:
            if self._use():
                return self.norm(If(test.args[0], t.els, t.then), ctx, depth)
            return If(test, t.then, t.els)
        if isinstance(test, App) and test.fn == "mbt$" and len(test.args) == 1:
            if self._use():
                return self.norm(If(test.args[0], t.then, t.els), ctx, depth)
            return If(test, t.then, t.els)
        then = self.norm(t.then, ctx, depth)
        els = self.norm(t.els, ctx, depth)
        cand = If(test, then, els)
        hit = self._try_rules(cand, ctx, depth)
        if hit is not None:
            return self.norm(hit, ctx, depth)
        return cand

    def _norm_let(self, t: Let, ctx: list, depth: int) -> Term:
        vals = [self.norm(v, ctx, depth) for _, v in t.bindings]
        names = [n for n, _ in t.bindings]
        inline: dict[str, Term] = {}
        keep: list[tuple[str, Term]] = []
        for (n, _), v in zip(t.bindings, vals):
            uses = _count_free_var(t.body, n)
            if isinstance(v, (Var, IntConst, SymConst)) or uses <= 1:
                inline[n] = v
            else:
                keep.append((n, v))
        # inlining a value whose free variables collide with a surviving
        # sibling binding would change what those variables refer to
        changed = True
        while changed:
            changed = False
            kept_names = {n for n, _ in keep}
            for n in list(inline):
                if free_vars(inline[n]) & kept_names:
                    keep.append((n, inline.pop(n)))
                    changed = True
        if inline and self._use():
            body = substitute(t.body, inline)
            keep.sort(key=lambda kv: names.index(kv[0]))
            new: Term = Let(tuple(keep), body) if keep else body
            return self.norm(new, ctx, depth)
        inner = [a for a in ctx if not (free_vars(a) & set(names))]
        body = self.norm(t.body, inner, depth)
        return Let(tuple(zip(names, vals)), body)

    def _norm_app(self, t: App, ctx: list, depth: int) -> Term:
        fn = t.fn
        if isinstance(fn, Lam):
            if len(t.args) == len(fn.params) and self._use():
                return self.norm(
                    substitute(fn.body, dict(zip(fn.params, t.args))), ctx, depth
                )
            return App(fn, tuple(self.norm(a, ctx, depth) for a in t.args))
        if fn in self.world.sugar:
            lam = self.world.sugar[fn]
            if len(t.args) == len(lam.params) and self._use():
                return self.norm(
                    substitute(lam.body, dict(zip(lam.params, t.args))), ctx, depth
                )
            return t
        args = tuple(self.norm(a, ctx, depth) for a in t.args)
        t2 = App(fn, args)
        if fn == "equal" and len(args) == 2 and alpha_eq(args[0], args[1]):
            if self._use():
                return T
            return t2
        if fn in _ARITH:
            s = sum_normalize(t2)
            if s != t2:
                if self._use():
                    return self.norm(s, ctx, depth)
                return t2
        folded = self._fold(t2)
        if folded is not None and folded != t2:
            if self._use():
                return self.norm(folded, ctx, depth)
            return t2
        hit = self._try_rules(t2, ctx, depth)
        if hit is not None:
            return self.norm(hit, ctx, depth)
        return t2

    def _fold(self, t: App) -> Optional[Term]:
        fn = t.fn
        if not isinstance(fn, str) or fn == "cons":
            return None
        if not (is_builtin(fn) or fn in self.world.functions):
            return None
        if not all(_is_value_term(a) for a in t.args):
            return None
        try:
            v = Evaluator(self.world, self.eval_fuel).eval(t, {})
        except (Divergence, EvalError):
            return None
        return value_to_term(v)

    def _try_rules(self, t: Term, ctx: list, depth: int) -> Optional[Term]:
        if not isinstance(t, (App, If)):
            return None
        for rule in self.rules:
            b = self.budgets.get(rule.name)
            if b is not None and b <= 0:
                continue
            binds: dict[str, Term] = {}
            if not _match(rule.lhs, t, set(rule.vars), binds):
                continue
            needed = (free_vars(rule.rhs) | free_vars(rule.condition)) & set(rule.vars)
            if not needed <= set(binds):
                continue
            if not self._discharge(substitute(rule.condition, binds), ctx, depth):
                continue
            if not self._use():
                return None
            if b is not None:
                self.budgets[rule.name] = b - 1
            return substitute(rule.rhs, binds)
        return None

    def _discharge(self, cond: Term, ctx: list, depth: int) -> bool:
        for cj in conjuncts(cond):
            if cj == T:
                continue
            if any(alpha_eq(cj, a) for a in ctx):
                continue
            if depth + 1 > _COND_DEPTH_CAP:
                return False
            r = self.norm(cj, ctx, depth + 1)
            if isinstance(r, IntConst):
                continue
            if isinstance(r, SymConst) and r != NIL:
                continue
            if isinstance(r, App) and r.fn == "cons":
                continue
            return False
        return True


def rewrite_term(
    term: Term,
    world: World,
    rules=(),
    assumptions=(),
    step_fuel: int = _DEFAULT_STEP_FUEL,
    eval_fuel: int = 100000,
) -> RewriteResult:
    ctx = [c for a in assumptions for c in conjuncts(a) if c != T]
    sess = _Session(world, rules, ctx, step_fuel, eval_fuel)
    out = sess.norm(term, sess.ctx, 0)
    return RewriteResult(out, sess.steps, sess.exhausted)


# ---------------------------------------------------------------------------
# rule construction
# ---------------------------------------------------------------------------


def make_rule(
    world: World,
    name: str,
    vars: tuple,
    condition: Term,
    lhs: Term,
    rhs: Term,
    ruleset: str,
    enabled: bool = True,
    budget: Optional[int] = None,
) -> Rule:
    """Build a rule with its parts pre-normalized.

    Matching happens against normal forms, so the left-hand side must be
    stored in the same shape the rewriter would give it.
    """

    def n(t: Term) -> Term:
        return rewrite_term(t, world).term

    lhs_n = n(lhs)
    if not isinstance(lhs_n, (App, If)):
        raise RewriteError(
            f"rule {name}: left-hand side normalizes to a variable or constant"
        )
    return Rule(name, tuple(vars), n(condition), lhs_n, n(rhs), ruleset, enabled, budget)


def rule_of_theorem(td: TheoremDef, world: World) -> Optional[Rule]:
    if td.rule_classes != ":rewrite":
        return None
    concl = td.concl
    if isinstance(concl, App) and concl.fn == "equal" and len(concl.args) == 2:
        lhs, rhs = concl.args
    elif isinstance(concl, App) and concl.fn == "not" and len(concl.args) == 1:
        lhs, rhs = concl.args[0], NIL
    else:
        lhs, rhs = concl, T
    return make_rule(world, td.name, td.vars, td.hyp, lhs, rhs, td.ruleset)


def active_rules(
    world: World,
    rulesets: tuple,
    enable: tuple,
    disable: tuple,
    start_term: Optional[Term],
) -> list[Rule]:
    off = set(disable)
    chosen = [
        r
        for r in world.rules
        if r.ruleset in rulesets and r.enabled and r.name not in off
    ]
    names = {r.name for r in chosen}
    by_name = {r.name: r for r in world.rules}
    for e in enable:
        if e in names:
            continue
        if e in by_name:
            chosen.append(by_name[e])
            names.add(e)
        elif e in world.functions:
            fd = world.functions[e]
            budget = None
            if fd.recursive:
                budget = _count_calls(start_term, e) if start_term is not None else 0
            chosen.append(
                make_rule(
                    world,
                    f"{e}-definition",
                    fd.params,
                    T,
                    App(e, tuple(Var(p) for p in fd.params)),
                    fd.body,
                    "definition",
                    budget=budget,
                )
            )
            names.add(e + "-definition")
        else:
            raise RewriteError(f"unknown rule or function in enable: {e}")
    for a, b in world.exclusive_pairs:
        if a in names and b in names:
            raise RewriteError(
                f"rules {a} and {b} rewrite in opposite directions and"
                f" cannot be active together"
            )
    return chosen


# ---------------------------------------------------------------------------
# the simplify operation
# ---------------------------------------------------------------------------


def next_chain_name(world: World, base: str) -> str:
    m = re.fullmatch(r"(.*)\$(\d+)", base)
    root, k = (m.group(1), int(m.group(2))) if m else (base, 0)
    j = k + 1
    while world.has_name(f"{root}${j}"):
        j += 1
    return f"{root}${j}"


def _dedup_conjuncts(parts: list) -> list:
    out: list[Term] = []
    for p in parts:
        if p == T:
            continue
        if any(alpha_eq(p, q) for q in out):
            continue
        out.append(p)
    return out


def simplify_function(world: World, call, config: Optional[EnumConfig] = None) -> World:
    for tr in world.transforms:
        if tr.kind == "simplify" and tr.call == call:
            return world
    fd = world.functions.get(call.fn)
    if fd is None:
        raise RewriteError(f"simplify: unknown function {call.fn}")
    for a in call.assumptions:
        extra = free_vars(a) - set(fd.params)
        if extra:
            raise RewriteError(
                f"simplify {call.fn}: assumption mentions {sorted(extra)}"
                f" outside the parameters"
            )
    new_name = call.new_name or next_chain_name(world, call.fn)
    if world.has_name(new_name):
        raise RewriteError(f"simplify {call.fn}: name {new_name} is already taken")
    cfg = config or world.check_config or EnumConfig()
    rulesets = call.rulesets or ("general",)
    rules = active_rules(world, tuple(rulesets), call.enable, call.disable, fd.body)
    body_res = rewrite_term(
        fd.body, world, rules, call.assumptions, eval_fuel=cfg.fuel
    )
    if body_res.fuel_exhausted:
        raise RewriteError(f"simplify {call.fn}: rewrite step budget exhausted")
    guard_res = rewrite_term(
        fd.guard, world, rules, call.assumptions, eval_fuel=cfg.fuel
    )
    if guard_res.fuel_exhausted:
        raise RewriteError(f"simplify {call.fn}: rewrite step budget exhausted")
    new_body = rename_calls(body_res.term, call.fn, new_name)
    new_fd = FunDef(
        new_name,
        fd.params,
        new_body,
        guard=guard_res.term,
        measure=fd.measure,
        recursive=new_name in called_names(new_body),
    )

    thm_name = f"{call.fn}-~>-{new_name}"
    if world.has_name(thm_name):
        raise RewriteError(f"simplify {call.fn}: name {thm_name} is already taken")
    hyp = make_and(_dedup_conjuncts(conjuncts(fd.guard) + list(call.assumptions)))
    args = tuple(Var(p) for p in fd.params)
    concl = App("equal", (App(call.fn, args), App(new_name, args)))
    ob_vars = tuple(sorted(free_vars(hyp) | free_vars(concl)))

    record = TransformRecord("simplify", call, call.fn, new_name)
    w = world.add_record_event(
        "simplify", new_name, call, transforms=world.transforms + (record,)
    )
    w = w.define_function(new_fd)

    ob = Obligation(thm_name, ob_vars, hyp, concl)
    result = check_obligation(ob, w, cfg, w.enum_cache)
    if result.status == "failed":
        raise RewriteError(
            f"simplify {call.fn}: the rewritten body disagrees with the"
            f" original, counterexample"
            f" {format_counterexample(result.counterexample)}"
        )
    status = "checked" if result.status == "passed" else "asserted"
    w = w.add_theorem(
        TheoremDef(thm_name, ob_vars, hyp, concl, status, ":rewrite", "old-to-new")
    )
    fwd = make_rule(w, thm_name, ob_vars, hyp, App(call.fn, args), App(new_name, args), "old-to-new")
    bwd = make_rule(
        w, thm_name + "-n2o", ob_vars, hyp, App(new_name, args), App(call.fn, args), "new-to-old"
    )
    obligations = dict(w.obligations)
    obligations[thm_name] = ObligationRecord(ob, "simplify-theorem", "proven-by-rewriting", result)
    return dataclasses.replace(w, rules=w.rules + (fwd, bwd), obligations=obligations)
