"""Derive an isomorphic version of a defined function.

Given a function and a mapping of some of its parameters (and possibly
its result) through registered or inline isomorphisms, this builds a new
function over the image representation, checks the applicability
conditions by exhaustive evaluation over the bounded universe, and
installs the theorems relating old and new together with their rewrite
rules.

The construction is purely mechanical.  The new body is the old body
with mapped parameters pre-converted back to the old representation,
recursive calls renamed and re-converted at mapped argument positions,
and, when the result is mapped, the forward converter pushed into If
branches and Let bodies so that recursive leaves collapse to direct
calls.  A run-time check of the new domain predicates is wrapped around
the whole body, mirroring the guard obligation it replaces.
"""

from __future__ import annotations

import dataclasses
from typing import Optional

from .defiso import defiso
from .evaluator import (
    EnumConfig,
    Obligation,
    ObligationRecord,
    check_obligation,
    format_counterexample,
)
from .rewrite import make_rule, next_chain_name
from .syntax import DefisoCall, Designator, InlineIso
from .terms import (
    NIL,
    App,
    If,
    Lam,
    Let,
    T,
    Term,
    Var,
    called_names,
    conjuncts,
    free_vars,
    make_and,
    negate,
    substitute,
)
from .world import FunDef, TheoremDef, TransformRecord, World


class IsodataError(Exception):
    pass


def _apply_des(d: Designator, arg: Term) -> Term:
    """Apply a designator, beta-reducing literal lambdas on the spot so
    generated bodies read as plain terms."""
    if d.lam is not None:
        return substitute(d.lam.body, {d.lam.params[0]: arg})
    return App(d.name, (arg,))


def _hint_of(d: Designator):
    return d.name if d.name is not None else d.lam


def _dedup(parts) -> list[Term]:
    out: list[Term] = []
    for p in parts:
        if p != T and p not in out:
            out.append(p)
    return out


def _flat(applied: list[Term]) -> list[Term]:
    out: list[Term] = []
    for t in applied:
        out.extend(conjuncts(t))
    return out


def _expand(t: Term) -> Term:
    """Inline Lets and literal-lambda applications for analysis only."""
    if isinstance(t, App):
        if isinstance(t.fn, Lam) and len(t.fn.params) == len(t.args):
            sub = dict(zip(t.fn.params, [_expand(a) for a in t.args]))
            return _expand(substitute(t.fn.body, sub))
        fn = t.fn if not isinstance(t.fn, Lam) else Lam(t.fn.params, _expand(t.fn.body))
        return App(fn, tuple(_expand(a) for a in t.args))
    if isinstance(t, If):
        return If(_expand(t.test), _expand(t.then), _expand(t.els))
    if isinstance(t, Let):
        sub = {n: _expand(v) for n, v in t.bindings}
        return _expand(substitute(t.body, sub))
    if isinstance(t, Lam):
        return Lam(t.params, _expand(t.body))
    return t


def _rec_sites(body: Term, fn: str) -> list[tuple[tuple[Term, ...], tuple[Term, ...]]]:
    """Recursive call sites with the If path conditions guarding them."""
    sites: list[tuple[tuple[Term, ...], tuple[Term, ...]]] = []

    def walk(node: Term, path: list[Term]) -> None:
        if isinstance(node, If):
            walk(node.test, path)
            walk(node.then, path + [node.test])
            walk(node.els, path + [negate(node.test)])
        elif isinstance(node, App):
            if node.fn == fn:
                sites.append((tuple(path), node.args))
            if isinstance(node.fn, Lam):
                walk(node.fn.body, path)
            for a in node.args:
                walk(a, path)
        elif isinstance(node, Lam):
            walk(node.body, path)
        elif isinstance(node, Let):
            for _, v in node.bindings:
                walk(v, path)
            walk(node.body, path)

    walk(body, [])
    return sites


def isodata(world: World, call, config: Optional[EnumConfig] = None) -> World:
    for tr in world.transforms:
        if tr.kind == "isodata" and tr.call == call:
            return world

    fd = world.functions.get(call.fn)
    if fd is None:
        raise IsodataError(f"isodata: unknown function {call.fn}")
    params = fd.params
    new_name = call.new_name or next_chain_name(world, call.fn)
    if world.has_name(new_name):
        raise IsodataError(f"isodata: name {new_name} is already taken")

    # resolve the mappings, registering inline ones as ordinary isomorphisms
    w = world
    resolved = []
    for i, spec in enumerate(call.specs):
        if isinstance(spec.isomap, str):
            rec = w.isos.get(spec.isomap)
            if rec is None:
                raise IsodataError(f"isodata: unknown isomap {spec.isomap}")
        else:
            inline: InlineIso = spec.isomap
            iname = inline.name or f"{call.fn}-isomap{i + 1}"
            w = defiso(
                w,
                DefisoCall(iname, inline.old, inline.new, inline.iso, inline.osi),
                config,
            )
            rec = w.isos[iname]
        resolved.append((spec.targets, rec))

    param_map: dict[str, object] = {}
    result_rec = None
    for targets, rec in resolved:
        if not targets:
            raise IsodataError("isodata: a mapping with no targets")
        for t in targets:
            if t == ":result":
                if call.predicate:
                    raise IsodataError(
                        "isodata: a predicate keeps its boolean result;"
                        " :result cannot be mapped in predicate mode"
                    )
                if result_rec is not None:
                    raise IsodataError("isodata: :result mapped twice")
                result_rec = rec
            elif t.startswith(":result"):
                raise IsodataError(
                    "isodata: functions here are single-valued;"
                    f" {t} is not a mappable position"
                )
            elif t in param_map:
                raise IsodataError(f"isodata: parameter {t} mapped twice")
            elif t not in params:
                raise IsodataError(f"isodata: {t} is not a parameter of {call.fn}")
            else:
                param_map[t] = rec

    mapped = [p for p in params if p in param_map]
    cfg = config or w.check_config or EnumConfig()
    guard_conj = conjuncts(fd.guard)
    old_typing = _flat([_apply_des(param_map[p].old, Var(p)) for p in mapped])
    hints_old = tuple((p, _hint_of(param_map[p].old)) for p in mapped)
    args_old = tuple(Var(p) for p in params)

    def restrict(*ts: Term) -> tuple[str, ...]:
        fv = frozenset().union(*(free_vars(t) for t in ts))
        return tuple(p for p in params if p in fv)

    # applicability conditions, checked before anything is constructed
    conditions: list[Obligation] = []
    if result_rec is not None:
        conditions.append(
            Obligation(
                f"{new_name}-result-closure",
                params,
                make_and(_dedup(old_typing + guard_conj)),
                _apply_des(result_rec.old, App(call.fn, args_old)),
                hints_old,
            )
        )
    analysis = _expand(fd.body)
    for k, (path, site_args) in enumerate(_rec_sites(analysis, call.fn), start=1):
        concl_parts = [
            _apply_des(param_map[params[i]].old, site_args[i])
            for i in range(len(params))
            if params[i] in param_map
        ]
        if not concl_parts:
            continue
        hyp = make_and(_dedup(old_typing + guard_conj + list(path)))
        concl = make_and(concl_parts)
        conditions.append(
            Obligation(
                f"{new_name}-rec-preservation-{k}",
                restrict(hyp, concl),
                hyp,
                concl,
                hints_old,
            )
        )
    if call.verify_guards and mapped:
        hyp = make_and(_dedup(guard_conj))
        concl = make_and(old_typing)
        conditions.append(
            Obligation(f"{new_name}-guard-domain", restrict(hyp, concl), hyp, concl)
        )

    ob_records: dict[str, ObligationRecord] = {}
    for ob in conditions:
        res = check_obligation(ob, w, cfg, w.enum_cache)
        if res.status == "failed":
            raise IsodataError(
                f"isodata {call.fn}: condition {ob.name} fails, counterexample"
                f" {format_counterexample(res.counterexample)}"
            )
        if res.status != "passed":
            raise IsodataError(
                f"isodata {call.fn}: condition {ob.name} could not be decided"
                f" at the current check configuration ({res.reason})"
            )
        ob_records[ob.name] = ObligationRecord(ob, "isodata-condition", res.status, res)

    # body construction
    osi_subst = {p: _apply_des(param_map[p].osi, Var(p)) for p in mapped}
    body1 = substitute(fd.body, osi_subst)

    def convert_call(node: App) -> Term:
        new_args = []
        for i, a in enumerate(node.args):
            a2 = replace_rec(a)
            if params[i] in param_map:
                a2 = _apply_des(param_map[params[i]].iso, a2)
            new_args.append(a2)
        return App(new_name, tuple(new_args))

    def replace_rec(node: Term) -> Term:
        if isinstance(node, App):
            if node.fn == call.fn:
                c = convert_call(node)
                return _apply_des(result_rec.osi, c) if result_rec else c
            fn = node.fn
            if isinstance(fn, Lam):
                fn = Lam(fn.params, replace_rec(fn.body))
            return App(fn, tuple(replace_rec(a) for a in node.args))
        if isinstance(node, If):
            return If(
                replace_rec(node.test), replace_rec(node.then), replace_rec(node.els)
            )
        if isinstance(node, Let):
            return Let(
                tuple((n, replace_rec(v)) for n, v in node.bindings),
                replace_rec(node.body),
            )
        if isinstance(node, Lam):
            return Lam(node.params, replace_rec(node.body))
        return node

    def push(node: Term) -> Term:
        # forward converter goes into branches and let bodies, never into
        # tests or bound values; a recursive leaf loses both converters
        # because they cancel there
        if isinstance(node, If):
            return If(replace_rec(node.test), push(node.then), push(node.els))
        if isinstance(node, Let):
            return Let(
                tuple((n, replace_rec(v)) for n, v in node.bindings), push(node.body)
            )
        if isinstance(node, App) and node.fn == call.fn:
            return convert_call(node)
        return _apply_des(result_rec.iso, replace_rec(node))

    body_core = push(body1) if result_rec is not None else replace_rec(body1)
    domain = make_and([_apply_des(param_map[p].new, Var(p)) for p in mapped])
    full_body = If(App("mbt$", (domain,)), body_core, NIL)

    new_typing = _flat([_apply_des(param_map[p].new, Var(p)) for p in mapped])
    g_osi = substitute(fd.guard, osi_subst)
    new_guard = make_and(_dedup(new_typing + conjuncts(g_osi)))
    measure = substitute(fd.measure, osi_subst) if fd.measure is not None else None
    new_fd = FunDef(
        new_name,
        params,
        full_body,
        guard=new_guard,
        measure=measure,
        recursive=new_name in called_names(full_body),
    )

    t1_name = f"{call.fn}-~>-{new_name}"
    t2_name = f"{new_name}-~>-{call.fn}"
    t3_name = f"{new_name}-closure"
    wrapper_name = f"{call.fn}-wrapper"
    for nm in (t1_name, t2_name):
        if w.has_name(nm):
            raise IsodataError(f"isodata: name {nm} is already taken")
    if result_rec is not None and w.has_name(t3_name):
        raise IsodataError(f"isodata: name {t3_name} is already taken")
    if call.wrapper and w.has_name(wrapper_name):
        raise IsodataError(f"isodata: name {wrapper_name} is already taken")

    record = TransformRecord("isodata", call, call.fn, new_name)
    w = w.add_record_event(
        "isodata", new_name, call, transforms=w.transforms + (record,)
    )
    w = w.define_function(new_fd)

    iso_args = tuple(
        _apply_des(param_map[p].iso, Var(p)) if p in param_map else Var(p)
        for p in params
    )
    osi_args = tuple(
        _apply_des(param_map[p].osi, Var(p)) if p in param_map else Var(p)
        for p in params
    )
    t1_hyp = make_and(_dedup(old_typing + guard_conj))
    t1_rhs = App(new_name, iso_args)
    if result_rec is not None:
        t1_rhs = _apply_des(result_rec.osi, t1_rhs)
    t2_rhs = App(call.fn, osi_args)
    if result_rec is not None:
        t2_rhs = _apply_des(result_rec.iso, t2_rhs)
    hints_new = tuple((p, _hint_of(param_map[p].new)) for p in mapped)

    relating = [
        (t1_name, t1_hyp, App("equal", (App(call.fn, args_old), t1_rhs)), hints_old, "old-to-new"),
        (t2_name, new_guard, App("equal", (App(new_name, args_old), t2_rhs)), hints_new, "new-to-old"),
    ]
    if result_rec is not None:
        relating.append(
            (
                t3_name,
                new_guard,
                _apply_des(result_rec.new, App(new_name, args_old)),
                hints_new,
                "general",
            )
        )

    for name, hyp, concl, hints, ruleset in relating:
        ob = Obligation(name, params, hyp, concl, hints)
        res = check_obligation(ob, w, cfg, w.enum_cache)
        if res.status == "failed":
            raise IsodataError(
                f"isodata {call.fn}: relating theorem {name} fails, counterexample"
                f" {format_counterexample(res.counterexample)}"
            )
        ob_records[name] = ObligationRecord(ob, "isodata-theorem", res.status, res)
        status = "checked" if res.status == "passed" else "asserted"
        w = w.add_theorem(
            TheoremDef(name, params, hyp, concl, status=status, ruleset=ruleset)
        )

    new_rules = [
        make_rule(w, t1_name, params, t1_hyp, App(call.fn, args_old), t1_rhs, "old-to-new"),
        make_rule(w, t2_name, params, new_guard, App(new_name, args_old), t2_rhs, "new-to-old"),
    ]
    if result_rec is not None:
        new_rules.append(
            make_rule(
                w,
                t3_name,
                params,
                new_guard,
                _apply_des(result_rec.new, App(new_name, args_old)),
                T,
                "general",
            )
        )

    if call.wrapper:
        wfd = FunDef(wrapper_name, params, t1_rhs, guard=fd.guard)
        w = w.define_function(wfd)
        wob = Obligation(
            f"{wrapper_name}-equals-{call.fn}",
            params,
            t1_hyp,
            App("equal", (App(wrapper_name, args_old), App(call.fn, args_old))),
            hints_old,
        )
        res = check_obligation(wob, w, cfg, w.enum_cache)
        if res.status == "failed":
            raise IsodataError(
                f"isodata {call.fn}: wrapper equality fails, counterexample"
                f" {format_counterexample(res.counterexample)}"
            )
        ob_records[wob.name] = ObligationRecord(wob, "isodata-theorem", res.status, res)

    return dataclasses.replace(
        w,
        rules=w.rules + tuple(new_rules),
        obligations={**w.obligations, **ob_records},
        exclusive_pairs=w.exclusive_pairs + ((t1_name, t2_name),),
    )
