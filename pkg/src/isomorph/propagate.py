"""Propagate an isomorphic refinement through a range of events.

Given one or more registered isomorphisms between named predicates, plus
an interface table naming the hand-written image of each primitive that
touches the representation, this walks the event range in order and
builds the image world: functions that merely pass mapped values around
are re-derived by renaming, predicates that embed a mapped component
have a fresh isomorphism synthesized for them, and theorems are restated
over the image names and discharged.

Every derived function comes with a pair of checked theorems relating it
to the original (one per direction), so the output is only accepted when
the bounded evaluator agrees with it.  Restated theorems go through a
three-stage cascade:

  S1  rewrite the new statement under the active new-to-old and general
      rules and see whether it closes, either to true or back to the
      converter-instantiated original;
  S2  same, after turning the instantiated original into a temporary
      rewrite rule (this is what makes equalities usable, since context
      assumptions never rewrite anything on their own);
  S3  hand the statement to the exhaustive checker.

A statement that survives none of the stages aborts the whole call with
the counterexample, unless the caller skipped it by override.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Any, Optional

from .defiso import DefisoError, defiso
from .evaluator import (
    EnumConfig,
    Obligation,
    ObligationRecord,
    apply_settings,
    check_obligation,
    format_counterexample,
)
from .rewrite import RewriteError, active_rules, make_rule, rewrite_term, rule_of_theorem
from .syntax import DefisoCall, Designator, InterfaceSpec, PropagateCall
from .terms import (
    T,
    App,
    If,
    Lam,
    Let,
    Term,
    Var,
    alpha_eq,
    called_names,
    conjuncts,
    make_and,
    substitute,
)
from .world import (
    FunDef,
    TheoremDef,
    TransformRecord,
    World,
    WorldError,
    events_in_range,
)


class PropagateError(Exception):
    pass


@dataclass(frozen=True)
class Report:
    """What one propagate-iso call did, in event order."""

    lifted_functions: tuple[str, ...] = ()
    synthesized_isos: tuple[str, ...] = ()
    converter_functions: tuple[str, ...] = ()
    lifted_theorems: tuple[str, ...] = ()
    skipped: tuple[str, ...] = ()
    stages: tuple[tuple[str, str], ...] = ()
    table_listing: str = ""


@dataclass
class _Env:
    relevant: dict  # old predicate name -> IsoRecord
    renaming: dict  # old name -> image name, grows as the walk proceeds
    new_side: set  # names that belong to the image world
    table: dict  # old fn name -> InterfaceSpec
    suffix: str


def _suffixed(name: str, suffix: str) -> str:
    if name.endswith("-p"):
        return f"{name[:-2]}-{suffix}-p"
    return f"{name}-{suffix}"


def _apply(d: Designator, arg: Term) -> Term:
    if d.lam is not None:
        return substitute(d.lam.body, {d.lam.params[0]: arg})
    return App(d.name, (arg,))


def _rename(t: Term, mapping: dict) -> Term:
    if isinstance(t, App):
        fn = t.fn
        if isinstance(fn, Lam):
            fn = Lam(fn.params, _rename(fn.body, mapping))
        else:
            fn = mapping.get(fn, fn)
        return App(fn, tuple(_rename(a, mapping) for a in t.args))
    if isinstance(t, If):
        return If(
            _rename(t.test, mapping), _rename(t.then, mapping), _rename(t.els, mapping)
        )
    if isinstance(t, Let):
        return Let(
            tuple((n, _rename(v, mapping)) for n, v in t.bindings),
            _rename(t.body, mapping),
        )
    if isinstance(t, Lam):
        return Lam(t.params, _rename(t.body, mapping))
    return t


def _pred_apps(t: Term, relevant: dict):
    """Applications of a mapped predicate anywhere inside t."""
    if isinstance(t, App):
        if isinstance(t.fn, str) and t.fn in relevant and len(t.args) == 1:
            yield t.fn, t.args[0]
        if isinstance(t.fn, Lam):
            yield from _pred_apps(t.fn.body, relevant)
        for a in t.args:
            yield from _pred_apps(a, relevant)
    elif isinstance(t, If):
        for part in (t.test, t.then, t.els):
            yield from _pred_apps(part, relevant)
    elif isinstance(t, Let):
        for _, v in t.bindings:
            yield from _pred_apps(v, relevant)
        yield from _pred_apps(t.body, relevant)
    elif isinstance(t, Lam):
        yield from _pred_apps(t.body, relevant)


def _path_of(t: Term, params: tuple[str, ...]) -> Optional[tuple[str, ...]]:
    """Read t as a car/cdr chain over a parameter; steps run root outward."""
    steps: list[str] = []
    while isinstance(t, App) and t.fn in ("car", "cdr") and len(t.args) == 1:
        steps.append("a" if t.fn == "car" else "d")
        t = t.args[0]
    if isinstance(t, Var) and t.name in params:
        return tuple(reversed(steps))
    return None


def _path_expr(v: str, path: tuple[str, ...]) -> Term:
    out: Term = Var(v)
    for step in path:
        out = App("car" if step == "a" else "cdr", (out,))
    return out


def _unsupported(fd: FunDef) -> PropagateError:
    return PropagateError(
        f"propagate-iso: {fd.name} applies a mapped predicate to a subcomponent"
        " in a form outside the supported shapes: a conjunction of predicate"
        " tests over car/cdr paths, or the standard element-wise list recursion"
    )


def _infer_arg_types(fd: FunDef, env: _Env) -> tuple[str, ...]:
    out = []
    gc = conjuncts(fd.guard)
    for p in fd.params:
        cands = sorted(
            {
                c.fn
                for c in gc
                if isinstance(c, App)
                and isinstance(c.fn, str)
                and c.fn in env.relevant
                and c.args == (Var(p),)
            }
        )
        if len(cands) > 1:
            raise PropagateError(
                f"propagate-iso: ambiguous type for parameter {p} of {fd.name}:"
                f" {' vs '.join(cands)}"
            )
        out.append(cands[0] if cands else "*")
    return tuple(out)


def _leaves(t: Term):
    if isinstance(t, If):
        yield from _leaves(t.then)
        yield from _leaves(t.els)
    elif isinstance(t, Let):
        yield from _leaves(t.body)
    else:
        yield t


def _infer_result_type(w: World, fd: FunDef, env: _Env) -> str:
    # a theorem of the form (P (f ...)) with P mapped settles it outright
    found = set()
    for td in w.theorems.values():
        c = td.concl
        if (
            isinstance(c, App)
            and isinstance(c.fn, str)
            and c.fn in env.relevant
            and len(c.args) == 1
            and isinstance(c.args[0], App)
            and c.args[0].fn == fd.name
        ):
            found.add(c.fn)
    if len(found) > 1:
        raise PropagateError(
            f"propagate-iso: conflicting result types for {fd.name}:"
            f" {' vs '.join(sorted(found))}"
        )
    if found:
        return next(iter(found))
    # otherwise agree across the branch leaves, treating unknown as "*"
    types: set[str] = set()
    star = False
    for leaf in _leaves(fd.body):
        if isinstance(leaf, App) and leaf.fn == fd.name:
            continue
        entry = None
        if isinstance(leaf, App) and isinstance(leaf.fn, str):
            entry = env.table.get(leaf.fn)
        if entry is not None and entry.result_type != "*":
            types.add(entry.result_type)
        else:
            star = True
    if not star and len(types) == 1:
        return next(iter(types))
    return "*"


def _function_plan(w: World, fd: FunDef, env: _Env):
    arg_types = _infer_arg_types(fd, env)
    result_type = _infer_result_type(w, fd, env)
    image = _suffixed(fd.name, env.suffix)
    ren = dict(env.renaming)
    ren[fd.name] = image
    body = _rename(fd.body, ren)
    new_fd = FunDef(
        image,
        fd.params,
        body,
        guard=_rename(fd.guard, ren),
        measure=None if fd.measure is None else _rename(fd.measure, ren),
        recursive=image in called_names(body),
    )
    return arg_types, result_type, new_fd


def _lift_function(w: World, fd: FunDef, env: _Env, cfg, records: dict):
    arg_types, result_type, new_fd = _function_plan(w, fd, env)
    image = new_fd.name
    o2n_name = f"{fd.name}-~>-{image}"
    n2o_name = f"{image}-~>-{fd.name}"
    entry = InterfaceSpec(fd.name, image, o2n_name, n2o_name, arg_types, result_type)

    if image in w.functions:
        if w.functions[image] != new_fd:
            raise PropagateError(
                f"propagate-iso: {image} is already defined differently;"
                " choose another :suffix"
            )
        return w, entry, False
    if w.has_name(image):
        raise PropagateError(f"propagate-iso: name {image} is already taken")

    w = w.define_function(new_fd)

    pvars = tuple(Var(p) for p in fd.params)
    iso_args = []
    osi_args = []
    old_typing = []
    new_typing = []
    hints_old = []
    hints_new = []
    for p, tp in zip(fd.params, arg_types):
        if tp == "*":
            iso_args.append(Var(p))
            osi_args.append(Var(p))
            continue
        rec = env.relevant[tp]
        iso_args.append(_apply(rec.iso, Var(p)))
        osi_args.append(_apply(rec.osi, Var(p)))
        old_typing.append(App(tp, (Var(p),)))
        new_typing.append(App(env.renaming[tp], (Var(p),)))
        hints_old.append((p, tp))
        hints_new.append((p, env.renaming[tp]))

    o2n_rhs: Term = App(image, tuple(iso_args))
    n2o_rhs: Term = App(fd.name, tuple(osi_args))
    if result_type != "*":
        res_rec = env.relevant[result_type]
        o2n_rhs = _apply(res_rec.osi, o2n_rhs)
        n2o_rhs = _apply(res_rec.iso, n2o_rhs)

    o2n_hyp = make_and(old_typing)
    n2o_hyp = make_and(new_typing)
    relating = [
        (o2n_name, o2n_hyp, App(fd.name, pvars), o2n_rhs, tuple(hints_old), "old-to-new"),
        (n2o_name, n2o_hyp, App(image, pvars), n2o_rhs, tuple(hints_new), "new-to-old"),
    ]
    for name, hyp, lhs, rhs, hints, ruleset in relating:
        ob = Obligation(name, fd.params, hyp, App("equal", (lhs, rhs)), hints)
        res = check_obligation(ob, w, cfg, w.enum_cache)
        if res.status == "failed":
            raise PropagateError(
                f"propagate-iso: lifting {fd.name}: obligation {name} fails,"
                f" counterexample {format_counterexample(res.counterexample)}"
            )
        if res.status != "passed":
            raise PropagateError(
                f"propagate-iso: lifting {fd.name}: obligation {name} could not"
                f" be decided at the current check configuration ({res.reason})"
            )
        records[name] = ObligationRecord(ob, "propagate-lifted", res.status, res)
        w = w.add_theorem(
            TheoremDef(name, fd.params, hyp, ob.concl, status="checked", ruleset=ruleset)
        )
    new_rules = (
        make_rule(w, o2n_name, fd.params, o2n_hyp, App(fd.name, pvars), o2n_rhs, "old-to-new"),
        make_rule(w, n2o_name, fd.params, n2o_hyp, App(image, pvars), n2o_rhs, "new-to-old"),
    )
    w = dataclasses.replace(
        w,
        rules=w.rules + new_rules,
        exclusive_pairs=w.exclusive_pairs + ((o2n_name, n2o_name),),
    )
    return w, entry, True


def _pair_components(body: Term, v: str, relevant: dict):
    comps = []
    for c in conjuncts(body):
        if not (isinstance(c, App) and isinstance(c.fn, str) and len(c.args) == 1):
            return None
        path = _path_of(c.args[0], (v,))
        if path is None:
            return None
        comps.append((path, c.fn))
    return comps or None


def _list_element(body: Term, v: str, selfname: str, relevant: dict) -> Optional[str]:
    if not isinstance(body, If):
        return None
    if body.test != App("atom", (Var(v),)) or body.then != App("null", (Var(v),)):
        return None
    cs = conjuncts(body.els)
    if len(cs) != 2:
        return None
    head, tail = cs
    if not (
        isinstance(head, App)
        and isinstance(head.fn, str)
        and head.args == (App("car", (Var(v),)),)
    ):
        return None
    if tail != App(selfname, (App("cdr", (Var(v),)),)):
        return None
    return head.fn if head.fn in relevant else None


def _synthesize_iso(w: World, fd: FunDef, env: _Env, cfg, report_isos, report_convs):
    if len(fd.params) != 1:
        raise _unsupported(fd)
    v = fd.params[0]
    new_pred = _suffixed(fd.name, env.suffix)
    fwd_name = f"{fd.name}-->-{new_pred}"
    bwd_name = f"{new_pred}-->-{fd.name}"
    iso_name = f"{fd.name}-iso-{new_pred}"

    comps = _pair_components(fd.body, v, env.relevant)
    if comps is not None and any(fn in env.relevant for _, fn in comps):
        typed = {path: env.relevant[fn] for path, fn in comps if fn in env.relevant}
        for a in typed:
            for b in typed:
                if a != b and b[: len(a)] == a:
                    raise _unsupported(fd)

        def rebuild(prefix: tuple, field: str) -> Term:
            if prefix in typed:
                return _apply(getattr(typed[prefix], field), _path_expr(v, prefix))
            if any(p[: len(prefix)] == prefix and p != prefix for p in typed):
                return App(
                    "cons",
                    (rebuild(prefix + ("a",), field), rebuild(prefix + ("d",), field)),
                )
            return _path_expr(v, prefix)

        fwd_body = rebuild((), "iso")
        bwd_body = rebuild((), "osi")
        fwd = FunDef(fwd_name, (v,), fwd_body, guard=App(fd.name, (Var(v),)))
        bwd = FunDef(bwd_name, (v,), bwd_body, guard=App(new_pred, (Var(v),)))
    else:
        elt = _list_element(fd.body, v, fd.name, env.relevant)
        if elt is None:
            raise _unsupported(fd)
        rec = env.relevant[elt]

        def list_conv(name: str, field: str, guard_pred: str) -> FunDef:
            body = If(
                App("atom", (Var(v),)),
                Var(v),
                App(
                    "cons",
                    (
                        _apply(getattr(rec, field), App("car", (Var(v),))),
                        App(name, (App("cdr", (Var(v),)),)),
                    ),
                ),
            )
            return FunDef(
                name,
                (v,),
                body,
                guard=App(guard_pred, (Var(v),)),
                measure=App("acl2-count", (Var(v),)),
                recursive=True,
            )

        fwd = list_conv(fwd_name, "iso", fd.name)
        bwd = list_conv(bwd_name, "osi", new_pred)

    pred_fd = FunDef(
        new_pred,
        (v,),
        _rename(fd.body, {**env.renaming, fd.name: new_pred}),
        guard=_rename(fd.guard, env.renaming),
        measure=None if fd.measure is None else _rename(fd.measure, env.renaming),
        recursive=fd.recursive,
    )
    for nm in (new_pred, fwd_name, bwd_name, iso_name):
        if w.has_name(nm):
            raise PropagateError(f"propagate-iso: name {nm} is already taken")
    w = w.define_function(pred_fd)
    w = w.define_function(fwd)
    w = w.define_function(bwd)
    dcall = DefisoCall(
        iso_name,
        Designator(name=fd.name),
        Designator(name=new_pred),
        Designator(name=fwd_name),
        Designator(name=bwd_name),
    )
    try:
        w = defiso(w, dcall, cfg)
    except DefisoError as exc:
        raise PropagateError(
            f"propagate-iso: synthesized isomorphism for {fd.name} fails: {exc}"
        ) from exc
    env.relevant[fd.name] = w.isos[iso_name]
    env.renaming[fd.name] = new_pred
    env.new_side.update((new_pred, fwd_name, bwd_name))
    report_isos.append(iso_name)
    report_convs.extend((fwd_name, bwd_name))
    return w


def _lift_theorem(w: World, td: TheoremDef, env: _Env, cfg, settings, records: dict):
    image = _suffixed(td.name, env.suffix)
    new_hyp = _rename(td.hyp, env.renaming)
    new_concl = _rename(td.concl, env.renaming)
    expected = TheoremDef(
        image,
        td.vars,
        new_hyp,
        new_concl,
        status="checked",
        rule_classes=td.rule_classes,
        ruleset="old-to-new",
    )
    if image in w.theorems:
        existing = w.theorems[image]
        if dataclasses.replace(existing, status="checked") != expected:
            raise PropagateError(
                f"propagate-iso: {image} is already a different theorem;"
                " choose another :suffix"
            )
        return w, image, None, True
    if w.has_name(image):
        raise PropagateError(f"propagate-iso: name {image} is already taken")

    # instantiate the original over back-converted variables
    subst = {}
    for x in td.vars:
        preds = sorted(
            {
                c.fn
                for c in conjuncts(td.hyp)
                if isinstance(c, App)
                and isinstance(c.fn, str)
                and c.fn in env.relevant
                and c.args == (Var(x),)
            }
        )
        if len(preds) > 1:
            raise PropagateError(
                f"propagate-iso: ambiguous type for variable {x} of {td.name}:"
                f" {' vs '.join(preds)}"
            )
        if preds:
            subst[x] = _apply(env.relevant[preds[0]].osi, Var(x))
    inst_hyp = substitute(td.hyp, subst)
    inst_concl = substitute(td.concl, subst)

    base_rules = tuple(active_rules(w, ("new-to-old", "general"), (), (), None))
    ctx_terms = conjuncts(new_hyp)

    def attempt(extra: tuple) -> bool:
        rr = base_rules + extra
        a = rewrite_term(new_concl, w, rr, (new_hyp,)).term
        if a == T:
            return True
        for c in conjuncts(inst_hyp):
            if c == T or any(alpha_eq(c, h) for h in ctx_terms):
                continue
            if rewrite_term(c, w, rr, (new_hyp,)).term != T:
                return False
        b = rewrite_term(inst_concl, w, rr, (new_hyp,)).term
        return alpha_eq(a, b)

    stage = None
    if attempt(()):
        stage = "S1"
    else:
        tmp_td = TheoremDef(image + "-tmp", td.vars, inst_hyp, inst_concl)
        try:
            tmp_rule = rule_of_theorem(tmp_td, w)
        except RewriteError:
            tmp_rule = None
        if tmp_rule is not None and attempt((tmp_rule,)):
            stage = "S2"

    ob = Obligation(image, td.vars, new_hyp, new_concl)
    check = None
    if stage is not None:
        status = "proven-by-rewriting"
    else:
        stage = "S3"
        cfg2 = apply_settings(cfg, settings) if settings else cfg
        check = check_obligation(ob, w, cfg2, w.enum_cache)
        if check.status == "failed":
            raise PropagateError(
                f"propagate-iso: lifted theorem {image} fails, counterexample"
                f" {format_counterexample(check.counterexample)};"
                f" override with ({td.name} :skip) to leave it behind"
            )
        if check.status != "passed":
            raise PropagateError(
                f"propagate-iso: lifted theorem {image} could not be decided at"
                f" the current check configuration ({check.reason});"
                f" override with ({td.name} :skip) to leave it behind"
            )
        status = check.status
    records[image] = ObligationRecord(ob, "propagate-lifted", status, check)
    w = w.add_theorem(expected)
    try:
        rule = rule_of_theorem(expected, w)
    except RewriteError:
        rule = None
    if rule is not None:
        w = dataclasses.replace(w, rules=w.rules + (rule,))
    return w, image, stage, False


def propagate_iso(world: World, call: PropagateCall, config=None):
    """Run one propagate-iso call; returns the extended world and a Report."""
    for tr in world.transforms:
        if tr.kind == "propagate-iso" and tr.call == call:
            return world, Report()
    cfg = config or world.check_config or EnumConfig()

    relevant: dict = {}
    renaming: dict = {}
    new_side: set = set()
    for iso_name in call.iso_names:
        rec = world.isos.get(iso_name)
        if rec is None:
            raise PropagateError(f"propagate-iso: unknown isomorphism {iso_name}")
        if rec.old.name is None or rec.new.name is None:
            raise PropagateError(
                f"propagate-iso: {iso_name} must relate named predicates"
            )
        relevant[rec.old.name] = rec
        renaming[rec.old.name] = rec.new.name
        new_side.add(rec.new.name)
        for d in (rec.iso, rec.osi):
            if d.name is not None:
                new_side.add(d.name)

    table: dict = {}
    bridge_thms: set = set()
    for e in call.interface:
        for fn in (e.old_fn, e.new_fn):
            if fn not in world.functions:
                raise PropagateError(
                    f"propagate-iso: interface function {fn} is not defined"
                )
        for tn in (e.old_to_new_thm, e.new_to_old_thm):
            if tn not in world.theorems:
                raise PropagateError(
                    f"propagate-iso: interface theorem {tn} is not in the world"
                )
        table[e.old_fn] = e
        renaming[e.old_fn] = e.new_fn
        new_side.add(e.new_fn)
        bridge_thms.update((e.old_to_new_thm, e.new_to_old_thm))

    env = _Env(relevant, renaming, new_side, table, call.suffix)
    overrides = dict(call.overrides)
    try:
        evs = events_in_range(world, call.first_event, call.last_event)
    except WorldError as exc:
        raise PropagateError(f"propagate-iso: {exc}") from exc

    w = world
    records: dict = {}
    images_new: dict = {}
    lifted_f: list = []
    synth: list = []
    convs: list = []
    lifted_t: list = []
    skipped: list = []
    stages: list = []

    for ev in evs:
        if ev.kind == "defun":
            name = ev.name
            if name in env.relevant or name in env.table or name in env.new_side:
                continue
            fd = w.functions[name]
            # a rerun finds the dependent isomorphism already on record
            prior = next(
                (r for r in w.isos.values() if r.old.name == name), None
            )
            if prior is not None and prior.new.name is not None:
                env.relevant[name] = prior
                env.renaming[name] = prior.new.name
                env.new_side.add(prior.new.name)
                skipped.append(name)
                continue
            dependent = False
            for _, arg in _pred_apps(fd.body, env.relevant):
                if isinstance(arg, Var) and arg.name in fd.params:
                    continue
                if not _path_of(arg, fd.params):
                    raise _unsupported(fd)
                dependent = True
            if dependent:
                if overrides.get(name) == ":skip":
                    raise PropagateError(
                        f"propagate-iso: cannot skip the function {name};"
                        " only theorem lifts may be skipped"
                    )
                w = _synthesize_iso(w, fd, env, cfg, synth, convs)
                images_new[name] = env.renaming[name]
                continue
            mentioned = called_names(fd.body) | called_names(fd.guard)
            if fd.measure is not None:
                mentioned |= called_names(fd.measure)
            if not (mentioned & set(env.renaming)):
                continue
            if overrides.get(name) == ":skip":
                raise PropagateError(
                    f"propagate-iso: cannot skip the function {name};"
                    " only theorem lifts may be skipped"
                )
            w, entry, fresh = _lift_function(w, fd, env, cfg, records)
            env.table[name] = entry
            env.renaming[name] = entry.new_fn
            env.new_side.add(entry.new_fn)
            images_new[name] = entry.new_fn
            if fresh:
                lifted_f.append(entry.new_fn)
            else:
                skipped.append(name)
        elif ev.kind == "defthm":
            name = ev.name
            if name in bridge_thms:
                continue
            td = w.theorems[name]
            mentioned = called_names(td.hyp) | called_names(td.concl)
            if mentioned & env.new_side:
                continue  # already speaks about the image world
            if not (mentioned & set(env.renaming)):
                continue
            ov = overrides.get(name)
            if ov == ":skip":
                skipped.append(name)
                continue
            settings = ov if ov is not None else ()
            w, image, stage, redundant = _lift_theorem(
                w, td, env, cfg, settings, records
            )
            if redundant:
                skipped.append(name)
                continue
            images_new[name] = image
            lifted_t.append(image)
            stages.append((image, stage))

    listing = ""
    if call.print_tables:
        lines = []
        for e in env.table.values():
            args = " ".join(e.arg_types)
            res = e.result_type if e.result_type == "*" else f"({e.result_type})"
            lines.append(
                f"({e.old_fn} {e.new_fn} {e.old_to_new_thm} {e.new_to_old_thm}"
                f" ({args}) => {res})"
            )
        listing = "\n".join(lines)

    record = TransformRecord("propagate-iso", call, call.first_event, call.last_event)
    w = w.add_record_event(
        "propagate-iso",
        f"propagate-iso-{len(w.events)}",
        call,
        transforms=w.transforms + (record,),
        obligations={**w.obligations, **records},
        images={**w.images, **images_new},
    )
    report = Report(
        tuple(lifted_f),
        tuple(synth),
        tuple(convs),
        tuple(lifted_t),
        tuple(skipped),
        tuple(stages),
        listing,
    )
    return w, report
