"""Registration of isomorphic mappings between predicate-denoted types.

A mapping consists of two unary predicates (old and new) and two unary
converters (iso and osi) that are mutually inverse on the values the
predicates accept.  Registration checks the required conditions by
bounded-exhaustive evaluation, derives the injectivity facts, and turns
the conditions into rewrite rules for later transformations.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

from .evaluator import (
    CheckResult,
    EnumConfig,
    Obligation,
    ObligationRecord,
    apply_settings,
    check_obligation,
    format_counterexample,
)
from .rewrite import RewriteError, Rule, make_rule
from .syntax import Designator
from .terms import (
    BUILTIN_ARITIES,
    App,
    T,
    Term,
    Var,
    free_vars,
    is_builtin,
    make_and,
    substitute,
)
from .world import TransformRecord, World


class DefisoError(Exception):
    pass


@dataclass(frozen=True)
class IsoRecord:
    name: str
    old: Designator
    new: Designator
    iso: Designator
    osi: Designator
    guarded: bool
    condition_results: tuple[tuple[str, CheckResult], ...]
    injectivity: tuple[Obligation, Obligation]


def resolve_designator(world: World, d: Designator) -> Designator:
    """Resolve a raw designator to a unary callable form.

    Defined functions and builtins pass through by name, sugar names
    expand to the lambda they abbreviate, and literal lambdas are taken
    as written.  Anything of the wrong arity is rejected.
    """
    if d.lam is not None:
        _require_unary(len(d.lam.params), f"(lambda ({' '.join(d.lam.params)}) ...)")
        stray = free_vars(d.lam.body) - set(d.lam.params)
        if stray:
            raise DefisoError(
                f"designator lambda mentions unbound {sorted(stray)}"
            )
        try:
            world._check_refs(d.lam.body, None, "designator")
        except Exception as e:
            raise DefisoError(str(e)) from None
        return d
    name = d.name
    fd = world.functions.get(name)
    if fd is not None:
        _require_unary(len(fd.params), name)
        return d
    if name in world.sugar:
        lam = world.sugar[name]
        _require_unary(len(lam.params), name)
        return Designator(lam=lam)
    if is_builtin(name):
        lo, hi = BUILTIN_ARITIES[name]
        if lo > 1 or (hi is not None and hi < 1):
            _require_unary(lo, name)
        return d
    raise DefisoError(f"unknown function designator {name}")


def _require_unary(arity: int, what: str) -> None:
    if arity != 1:
        raise DefisoError(
            f"designator {what} takes {arity} arguments, but mappings"
            f" relate single values; encode tuples as nested pairs"
        )


def _apply(d: Designator, arg: Term) -> Term:
    return App(d.name if d.name is not None else d.lam, (arg,))


def _hint(d: Designator):
    return d.name if d.name is not None else d.lam


def _guard_info(world: World, d: Designator):
    """Guard term and parameter list; lambdas and builtins are unguarded."""
    if d.name is not None:
        fd = world.functions.get(d.name)
        if fd is not None:
            return fd.guard, fd.params
    return T, ("x",)


def injectivity_obligations(rec: IsoRecord) -> tuple[Obligation, Obligation]:
    """The two derived facts: each converter is injective on its domain.

    Justified by the inverse conditions (a function with a left inverse
    is injective), so their status is proven-by-derivation; they are
    still spot-checked so a derivation bug cannot pass silently.
    """

    def build(suffix, pred, conv, a, b):
        return Obligation(
            f"{rec.name}-{suffix}",
            (a, b),
            make_and([_apply(pred, Var(a)), _apply(pred, Var(b))]),
            App(
                "equal",
                (
                    App("equal", (_apply(conv, Var(a)), _apply(conv, Var(b)))),
                    App("equal", (Var(a), Var(b))),
                ),
            ),
            ((a, _hint(pred)), (b, _hint(pred))),
        )

    return (
        build("forth-injective", rec.old, rec.iso, "o1", "o2"),
        build("back-injective", rec.new, rec.osi, "n1", "n2"),
    )


def iso_rules_for(rec: IsoRecord) -> list[Rule]:
    """The four rules a registered mapping contributes to `general`.

    Cancellation of the two converter compositions, plus the closure of
    each predicate under the converter pointing into it.  A rule whose
    head collapses to a bare variable under normalization is dropped;
    the normalizer already performs that reduction unconditionally.
    """
    x = Var("x")
    specs = [
        (
            f"{rec.name}-back-of-forth",
            _apply(rec.old, x),
            _apply(rec.osi, _apply(rec.iso, x)),
            x,
        ),
        (
            f"{rec.name}-forth-of-back",
            _apply(rec.new, x),
            _apply(rec.iso, _apply(rec.osi, x)),
            x,
        ),
        (
            f"{rec.name}-forth-image",
            _apply(rec.old, x),
            _apply(rec.new, _apply(rec.iso, x)),
            T,
        ),
        (
            f"{rec.name}-back-image",
            _apply(rec.new, x),
            _apply(rec.old, _apply(rec.osi, x)),
            T,
        ),
    ]
    out: list[Rule] = []
    for name, cond, lhs, rhs in specs:
        try:
            out.append(make_rule(World(), name, ("x",), cond, lhs, rhs, "general"))
        except RewriteError:
            continue
    return out


def defiso(world: World, call, config: Optional[EnumConfig] = None) -> World:
    for tr in world.transforms:
        if tr.kind == "defiso" and tr.call == call:
            return world

    old = resolve_designator(world, call.old)
    new = resolve_designator(world, call.new)
    iso = resolve_designator(world, call.iso)
    osi = resolve_designator(world, call.osi)
    if world.has_name(call.name):
        raise DefisoError(f"defiso: name {call.name} is already taken")

    base = config or world.check_config or EnumConfig()
    overrides = dict(call.check_overrides)

    def cfg_for(label: str) -> EnumConfig:
        s = overrides.get(label)
        return apply_settings(base, s) if s else base

    o, n = Var("o"), Var("n")
    name = call.name
    entries: list[tuple[str, Optional[Obligation]]] = [
        (
            "forth-image",
            Obligation(
                f"{name}-forth-image",
                ("o",),
                _apply(old, o),
                _apply(new, _apply(iso, o)),
                (("o", _hint(old)),),
            ),
        ),
        (
            "back-image",
            Obligation(
                f"{name}-back-image",
                ("n",),
                _apply(new, n),
                _apply(old, _apply(osi, n)),
                (("n", _hint(new)),),
            ),
        ),
        (
            "back-of-forth",
            Obligation(
                f"{name}-back-of-forth",
                ("o",),
                _apply(old, o),
                App("equal", (_apply(osi, _apply(iso, o)), o)),
                (("o", _hint(old)),),
            ),
        ),
        (
            "forth-of-back",
            Obligation(
                f"{name}-forth-of-back",
                ("n",),
                _apply(new, n),
                App("equal", (_apply(iso, _apply(osi, n)), n)),
                (("n", _hint(new)),),
            ),
        ),
    ]
    if call.guard_conditions:
        for label, d in (("old-guard", old), ("new-guard", new)):
            g, params = _guard_info(world, d)
            if g == T:
                entries.append((label, None))
            else:
                entries.append(
                    (label, Obligation(f"{name}-{label}", tuple(params), T, g))
                )
        for label, d, pred, pv in (
            ("forth-guard", iso, old, "o"),
            ("back-guard", osi, new, "n"),
        ):
            g, params = _guard_info(world, d)
            if g == T:
                entries.append((label, None))
            else:
                entries.append(
                    (
                        label,
                        Obligation(
                            f"{name}-{label}",
                            (pv,),
                            _apply(pred, Var(pv)),
                            substitute(g, {params[0]: Var(pv)}),
                            ((pv, _hint(pred)),),
                        ),
                    )
                )

    results: list[tuple[str, CheckResult]] = []
    ob_records: dict[str, ObligationRecord] = {}
    for label, ob in entries:
        if ob is None:
            res = CheckResult(
                f"{name}-{label}", "passed", 0, reason="guard is syntactically true"
            )
        else:
            res = check_obligation(ob, world, cfg_for(label), world.enum_cache)
        if res.status == "failed":
            raise DefisoError(
                f"defiso {name}: condition {label} fails, counterexample"
                f" {format_counterexample(res.counterexample)}"
            )
        if res.status != "passed":
            raise DefisoError(
                f"defiso {name}: condition {label} could not be decided at"
                f" the current check configuration ({res.reason})"
            )
        results.append((label, res))
        if ob is not None:
            ob_records[ob.name] = ObligationRecord(
                ob, "defiso-condition", res.status, res
            )

    rec = IsoRecord(
        name,
        old,
        new,
        iso,
        osi,
        call.guard_conditions,
        tuple(results),
        (),
    )
    inj = injectivity_obligations(rec)
    rec = dataclasses.replace(rec, injectivity=inj)
    for label, ob in zip(("forth-injective", "back-injective"), inj):
        res = check_obligation(ob, world, cfg_for(label), world.enum_cache)
        if res.status == "failed":
            raise DefisoError(
                f"defiso {name}: derived fact {label} fails, counterexample"
                f" {format_counterexample(res.counterexample)}"
            )
        ob_records[ob.name] = ObligationRecord(
            ob, "defiso-derived", "proven-by-derivation", res
        )

    general = iso_rules_for(rec)
    mirrors = []
    for r in general:
        if r.name.endswith("-forth-image"):
            mirrors.append(
                dataclasses.replace(r, name=r.name + "-o2n", ruleset="old-to-new")
            )
        elif r.name.endswith("-back-image"):
            mirrors.append(
                dataclasses.replace(r, name=r.name + "-n2o", ruleset="new-to-old")
            )

    record = TransformRecord("defiso", call, name, name)
    isos = dict(world.isos)
    isos[name] = rec
    w = world.add_record_event(
        "defiso", name, call, isos=isos, transforms=world.transforms + (record,)
    )
    return dataclasses.replace(
        w,
        rules=w.rules + tuple(general) + tuple(mirrors),
        obligations={**w.obligations, **ob_records},
    )
