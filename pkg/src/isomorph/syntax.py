"""Surface syntax: parsing programs and printing events.

One grammar serves both object programs and derivation scripts; a script is a
program with transformation calls interleaved. `and`/`or` desugar to nested
If here, `<=`/`>`/`>=` desugar over `<`, and both are re-sugared on printing
when the shape matches exactly. Round-tripping is structural: parsing what we
print yields equal terms, not necessarily the original spelling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

from .sexpr import Sexpr, read_all, write_sexpr
from .terms import (
    App,
    BUILTIN_ARITIES,
    If,
    IntConst,
    Lam,
    Let,
    NIL,
    SymConst,
    T,
    Term,
    Var,
    called_names,
    conjuncts,
    free_vars,
    make_and,
    make_or,
)
from .world import FunDef, TheoremDef, infer_measure


class ParseError(Exception):
    pass


_SPECIAL = {"quote", "lambda", "if", "let", "and", "or", "declare", "implies"}


# ---------------------------------------------------------------------------
# terms
# ---------------------------------------------------------------------------


def parse_term(form: Sexpr) -> Term:
    if isinstance(form, bool):
        raise ParseError(f"not a term: {form!r}")
    if isinstance(form, int):
        return IntConst(form)
    if isinstance(form, str):
        if form in ("t", "nil") or form.startswith(":"):
            return SymConst(form)
        if form in _SPECIAL:
            raise ParseError(f"{form} is reserved and cannot be a variable")
        return Var(form)
    if not form:
        raise ParseError("empty application ()")
    head = form[0]
    if head == "quote":
        if len(form) != 2:
            raise ParseError("quote takes exactly one form")
        return _quoted(form[1])
    if head == "lambda":
        return _parse_lambda(form)
    if head == "if":
        if len(form) != 4:
            raise ParseError(f"if takes 3 arguments, got {len(form) - 1}")
        return If(parse_term(form[1]), parse_term(form[2]), parse_term(form[3]))
    if head == "let":
        return _parse_let(form)
    if head == "and":
        return make_and([parse_term(x) for x in form[1:]])
    if head == "or":
        return make_or([parse_term(x) for x in form[1:]])
    if head == "<=":
        a, b = _two(form)
        return App("not", (App("<", (b, a)),))
    if head == ">":
        a, b = _two(form)
        return App("<", (b, a))
    if head == ">=":
        a, b = _two(form)
        return App("not", (App("<", (a, b)),))
    if head == "implies":
        raise ParseError("implies is only allowed at the top of a theorem statement")
    if isinstance(head, list):
        lam = _parse_lambda(head)
        args = tuple(parse_term(x) for x in form[1:])
        if len(lam.params) != len(args):
            raise ParseError(
                f"lambda of {len(lam.params)} parameters applied to {len(args)} arguments"
            )
        return App(lam, args)
    if not isinstance(head, str):
        raise ParseError(f"cannot apply {head!r}")
    args = tuple(parse_term(x) for x in form[1:])
    if head in BUILTIN_ARITIES:
        lo, hi = BUILTIN_ARITIES[head]
        if len(args) < lo or (hi is not None and len(args) > hi):
            raise ParseError(f"arity mismatch: {head} applied to {len(args)} arguments")
    return App(head, args)


def _two(form: list) -> tuple[Term, Term]:
    if len(form) != 3:
        raise ParseError(f"{form[0]} takes 2 arguments")
    return parse_term(form[1]), parse_term(form[2])


def _quoted(form: Sexpr) -> Term:
    if isinstance(form, int):
        return IntConst(form)
    if isinstance(form, str):
        return SymConst(form)
    if isinstance(form, list):
        out: Term = NIL
        for item in reversed(form):
            out = App("cons", (_quoted(item), out))
        return out
    raise ParseError(f"cannot quote {form!r}")


def _parse_lambda(form: Sexpr) -> Lam:
    if not (isinstance(form, list) and len(form) == 3 and form[0] == "lambda"):
        raise ParseError(f"malformed lambda: {write_sexpr(form)}")
    params = _parse_params(form[1], "lambda")
    return Lam(params, parse_term(form[2]))


def _parse_let(form: Sexpr) -> Term:
    if len(form) != 3 or not isinstance(form[1], list):
        raise ParseError("malformed let")
    bindings = []
    for b in form[1]:
        if not (isinstance(b, list) and len(b) == 2 and isinstance(b[0], str)):
            raise ParseError(f"malformed let binding: {write_sexpr(b)}")
        _check_name(b[0], "let-bound variable")
        bindings.append((b[0], parse_term(b[1])))
    return Let(tuple(bindings), parse_term(form[2]))


def _parse_params(form: Sexpr, what: str) -> tuple[str, ...]:
    if not isinstance(form, list):
        raise ParseError(f"{what} parameter list must be a list")
    seen = set()
    for p in form:
        if not isinstance(p, str):
            raise ParseError(f"{what} parameter must be a symbol, got {p!r}")
        _check_name(p, f"{what} parameter")
        if p in seen:
            raise ParseError(f"duplicate {what} parameter {p}")
        seen.add(p)
    return tuple(form)


def _check_name(name: str, what: str) -> None:
    if name in ("t", "nil") or name.startswith(":") or name in _SPECIAL:
        raise ParseError(f"{name} cannot be used as a {what}")


# ---------------------------------------------------------------------------
# printing terms
# ---------------------------------------------------------------------------


def term_to_sexpr(t: Term) -> Sexpr:
    if isinstance(t, IntConst):
        return t.value
    if isinstance(t, SymConst):
        if t.name in ("t", "nil") or t.name.startswith(":"):
            return t.name
        return ["quote", t.name]
    if isinstance(t, Var):
        return t.name
    if isinstance(t, App):
        if (
            t.fn == "not"
            and len(t.args) == 1
            and isinstance(t.args[0], App)
            and t.args[0].fn == "<"
        ):
            y, x = t.args[0].args
            return ["<=", term_to_sexpr(x), term_to_sexpr(y)]
        head = lam_to_sexpr(t.fn) if isinstance(t.fn, Lam) else t.fn
        return [head] + [term_to_sexpr(a) for a in t.args]
    if isinstance(t, If):
        if t.els == NIL and not _is_or_shape(t):
            parts = conjuncts(t)
            if len(parts) >= 2:
                return ["and"] + [term_to_sexpr(p) for p in parts]
        if _is_or_shape(t):
            parts = _or_parts(t)
            return ["or"] + [term_to_sexpr(p) for p in parts]
        return ["if", term_to_sexpr(t.test), term_to_sexpr(t.then), term_to_sexpr(t.els)]
    if isinstance(t, Lam):
        return lam_to_sexpr(t)
    if isinstance(t, Let):
        return [
            "let",
            [[n, term_to_sexpr(v)] for n, v in t.bindings],
            term_to_sexpr(t.body),
        ]
    raise TypeError(f"not a term: {t!r}")


def _is_or_shape(t: Term) -> bool:
    return isinstance(t, If) and t.then == t.test


def _or_parts(t: Term) -> list[Term]:
    if _is_or_shape(t):
        return [t.test] + _or_parts(t.els)
    return [t]


def lam_to_sexpr(lam: Lam) -> Sexpr:
    return ["lambda", list(lam.params), term_to_sexpr(lam.body)]


def print_term(t: Term) -> str:
    return write_sexpr(term_to_sexpr(t))


# ---------------------------------------------------------------------------
# pretty printer (deterministic layout)
# ---------------------------------------------------------------------------

_WIDTH = 79


def pp_sexpr(form: Sexpr, indent: int = 0) -> str:
    flat = write_sexpr(form)
    if indent + len(flat) <= _WIDTH or not isinstance(form, list) or not form:
        return flat
    head = form[0]
    pad = " " * (indent + 2)
    if head == "defun" and len(form) >= 4:
        lead = f"(defun {write_sexpr(form[1])} {write_sexpr(form[2])}"
        rest = [pp_sexpr(x, indent + 2) for x in form[3:]]
        return lead + "\n" + "\n".join(pad + r for r in rest) + ")"
    if head in ("defthm", "defiso", "isodata", "simplify", "propagate-iso", "defabbrev"):
        lead = f"({head} {write_sexpr(form[1])}" if len(form) > 1 else f"({head}"
        rest = [pp_sexpr(x, indent + 2) for x in form[2:]]
        return lead + "\n" + "\n".join(pad + r for r in rest) + ")"
    if head in ("if", "and", "or", "implies", "equal", "let", "lambda") or isinstance(head, list):
        first = pp_sexpr(head, indent + 1) if isinstance(head, list) else str(head)
        rest = [pp_sexpr(x, indent + 2) for x in form[1:]]
        return "(" + first + "\n" + "\n".join(pad + r for r in rest) + ")"
    first = write_sexpr(head)
    rest = [pp_sexpr(x, indent + 2) for x in form[1:]]
    return "(" + first + "\n" + "\n".join(pad + r for r in rest) + ")"


# ---------------------------------------------------------------------------
# top-level forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Designator:
    """A function designator as written: a name or a literal lambda."""

    name: Optional[str] = None
    lam: Optional[Lam] = None

    def __post_init__(self):
        assert (self.name is None) != (self.lam is None)


@dataclass(frozen=True)
class DefisoCall:
    name: str
    old: Designator
    new: Designator
    iso: Designator
    osi: Designator
    guard_conditions: bool = True
    hints: tuple = ()
    check_overrides: tuple[tuple[str, tuple[tuple[str, Any], ...]], ...] = ()


@dataclass(frozen=True)
class ArgResSpec:
    targets: tuple[str, ...]  # parameter names, possibly ":result"
    isomap: Any  # str (registered name) | InlineIso


@dataclass(frozen=True)
class InlineIso:
    name: Optional[str]
    old: Designator
    new: Designator
    iso: Designator
    osi: Designator


@dataclass(frozen=True)
class IsodataCall:
    fn: str
    specs: tuple[ArgResSpec, ...]
    new_name: Optional[str] = None
    predicate: bool = False
    verify_guards: bool = True
    wrapper: bool = False


@dataclass(frozen=True)
class SimplifyCall:
    fn: str
    assumptions: tuple[Term, ...] = ()
    enable: tuple[str, ...] = ()
    disable: tuple[str, ...] = ()
    rulesets: tuple[str, ...] = ()
    new_name: Optional[str] = None


@dataclass(frozen=True)
class InterfaceSpec:
    old_fn: str
    new_fn: str
    old_to_new_thm: str
    new_to_old_thm: str
    arg_types: tuple[str, ...]  # predicate names or "*"
    result_type: str  # predicate name or "*"


@dataclass(frozen=True)
class PropagateCall:
    iso_names: tuple[str, ...]
    interface: tuple[InterfaceSpec, ...]
    first_event: str
    last_event: str
    suffix: str = "new"
    print_tables: bool = False
    overrides: tuple[tuple[str, Any], ...] = ()


@dataclass(frozen=True)
class ConfigCall:
    settings: tuple[tuple[str, Any], ...]


@dataclass(frozen=True)
class AbbrevCall:
    name: str
    expansion: Lam


@dataclass(frozen=True)
class SourceEvent:
    kind: str
    name: str
    payload: Any


def parse_program(text: str) -> list[SourceEvent]:
    """Parse a program/script into source events, in order."""
    events: list[SourceEvent] = []
    names: set[str] = set()
    for form in read_all(text):
        for ev in _parse_form(form):
            if ev.kind in ("defun", "defthm", "defabbrev"):
                if ev.name in names:
                    raise ParseError(f"duplicate name {ev.name}")
                names.add(ev.name)
            events.append(ev)
    return events


def _parse_form(form: Sexpr) -> list[SourceEvent]:
    if not isinstance(form, list) or not form or not isinstance(form[0], str):
        raise ParseError(f"unknown top-level form: {write_sexpr(form)}")
    head = form[0]
    if head == "defun":
        fd = parse_defun(form)
        return [SourceEvent("defun", fd.name, fd)]
    if head == "defthm":
        td = parse_defthm(form)
        return [SourceEvent("defthm", td.name, td)]
    if head == "defrecord":
        return [ev for sub in expand_defrecord(form) for ev in _parse_form(sub)]
    if head == "defabbrev":
        if len(form) != 3 or not isinstance(form[1], str):
            raise ParseError("defabbrev takes a name and a lambda")
        lam = _parse_lambda(form[2])
        _require_closed(lam.body, set(lam.params), f"abbreviation {form[1]}")
        return [SourceEvent("defabbrev", form[1], AbbrevCall(form[1], lam))]
    if head == "defiso":
        call = parse_defiso(form)
        return [SourceEvent("defiso", call.name, call)]
    if head == "isodata":
        call = parse_isodata(form)
        return [SourceEvent("isodata", call.fn, call)]
    if head == "simplify":
        call = parse_simplify(form)
        return [SourceEvent("simplify", call.fn, call)]
    if head == "propagate-iso":
        call = parse_propagate(form)
        return [SourceEvent("propagate-iso", "propagate-iso", call)]
    if head == "set-check-config":
        call = parse_config(form)
        return [SourceEvent("set-check-config", "set-check-config", call)]
    raise ParseError(f"unknown top-level form: {head}")


def _require_closed(term: Term, params: set[str], what: str) -> None:
    extra = sorted(free_vars(term) - params)
    if extra:
        raise ParseError(f"free variable {extra[0]} in {what}")


def parse_defun(form: Sexpr) -> FunDef:
    if len(form) < 4 or not isinstance(form[1], str) or not isinstance(form[2], list):
        raise ParseError(f"malformed defun: {write_sexpr(form)}")
    name = form[1]
    _check_name(name, "function name")
    params = _parse_params(form[2], "function")
    guard: Term = T
    measure: Optional[Term] = None
    body_forms = form[3:]
    while len(body_forms) > 1 and isinstance(body_forms[0], list) and body_forms[0][:1] == ["declare"]:
        for xargs in body_forms[0][1:]:
            if not (isinstance(xargs, list) and xargs[:1] == ["xargs"]):
                raise ParseError(f"unsupported declare form in {name}")
            kv = xargs[1:]
            if len(kv) % 2 != 0:
                raise ParseError(f"odd xargs list in {name}")
            for key, val in zip(kv[::2], kv[1::2]):
                if key == ":guard":
                    guard = parse_term(val)
                elif key == ":measure":
                    measure = parse_term(val)
                else:
                    raise ParseError(f"unsupported xargs key {key} in {name}")
        body_forms = body_forms[1:]
    if len(body_forms) != 1:
        raise ParseError(f"defun {name} must have exactly one body form")
    body = parse_term(body_forms[0])
    pset = set(params)
    _require_closed(body, pset, f"body of {name}")
    _require_closed(guard, pset, f"guard of {name}")
    if measure is not None:
        _require_closed(measure, pset, f"measure of {name}")
    recursive = name in called_names(body)
    if recursive and measure is None:
        measure = infer_measure(name, params, body)
        if measure is None:
            raise ParseError(
                f"recursive function {name} needs a measure: no parameter decreases syntactically"
            )
    return FunDef(name, params, body, guard, measure, recursive)


def parse_defthm(form: Sexpr) -> TheoremDef:
    if len(form) < 3 or not isinstance(form[1], str):
        raise ParseError(f"malformed defthm: {write_sexpr(form)}")
    name = form[1]
    _check_name(name, "theorem name")
    stmt = form[2]
    rule_classes = ":rewrite"
    ruleset = "general"
    opts = form[3:]
    if len(opts) % 2 != 0:
        raise ParseError(f"odd option list in defthm {name}")
    for key, val in zip(opts[::2], opts[1::2]):
        if key == ":rule-classes":
            if val == ":rewrite":
                rule_classes = ":rewrite"
            elif val == "nil":
                rule_classes = "nil"
            else:
                raise ParseError(f"unsupported :rule-classes {val} in {name}")
        elif key == ":ruleset":
            if val not in ("general", "old-to-new", "new-to-old"):
                raise ParseError(f"unknown ruleset {val} in {name}")
            ruleset = val
        else:
            raise ParseError(f"unknown defthm option {key}")
    if isinstance(stmt, list) and stmt[:1] == ["implies"]:
        if len(stmt) != 3:
            raise ParseError(f"implies takes 2 arguments in {name}")
        hyp = parse_term(stmt[1])
        concl = parse_term(stmt[2])
    else:
        hyp, concl = T, parse_term(stmt)
    vars_ = tuple(sorted(free_vars(hyp) | free_vars(concl)))
    return TheoremDef(name, vars_, hyp, concl, "asserted", rule_classes, ruleset)


def parse_designator(form: Sexpr) -> Designator:
    if isinstance(form, str):
        return Designator(name=form)
    if isinstance(form, list) and form[:1] == ["lambda"]:
        lam = _parse_lambda(form)
        _require_closed(lam.body, set(lam.params), "lambda designator")
        return Designator(lam=lam)
    raise ParseError(f"not a function designator: {write_sexpr(form)}")


_CONDITION_KEYS = {
    ":forth-image",
    ":back-image",
    ":back-of-forth",
    ":forth-of-back",
    ":old-guard",
    ":new-guard",
    ":forth-guard",
    ":back-guard",
    ":forth-injective",
    ":back-injective",
}


def parse_defiso(form: Sexpr) -> DefisoCall:
    if len(form) < 6 or not isinstance(form[1], str):
        raise ParseError(f"malformed defiso: {write_sexpr(form)}")
    name = form[1]
    _check_name(name, "isomorphism name")
    old, new, iso, osi = (parse_designator(x) for x in form[2:6])
    guard_conditions = True
    hints: tuple = ()
    overrides: list[tuple[str, tuple[tuple[str, Any], ...]]] = []
    opts = form[6:]
    if len(opts) % 2 != 0:
        raise ParseError(f"odd option list in defiso {name}")
    for key, val in zip(opts[::2], opts[1::2]):
        if key == ":guard-conditions":
            guard_conditions = _parse_bool(val, key)
        elif key == ":hints":
            if not isinstance(val, list):
                raise ParseError(f"malformed :hints in defiso {name}")
            hints = _freeze(val)
            for hint in val:
                if (
                    isinstance(hint, list)
                    and hint
                    and isinstance(hint[0], str)
                    and hint[0] in _CONDITION_KEYS
                ):
                    overrides.append((hint[0][1:], _parse_config_pairs(hint[1:])))
        else:
            raise ParseError(f"unknown defiso option {key}")
    return DefisoCall(name, old, new, iso, osi, guard_conditions, hints, tuple(overrides))


def _freeze(x: Sexpr):
    if isinstance(x, list):
        return tuple(_freeze(i) for i in x)
    return x


def _parse_bool(val: Sexpr, key: str) -> bool:
    if val == "t":
        return True
    if val == "nil":
        return False
    raise ParseError(f"{key} expects t or nil, got {write_sexpr(val)}")


def parse_isodata(form: Sexpr) -> IsodataCall:
    if len(form) < 3 or not isinstance(form[1], str) or not isinstance(form[2], list):
        raise ParseError(f"malformed isodata: {write_sexpr(form)}")
    fn = form[1]
    specs: list[ArgResSpec] = []
    for i, doublet in enumerate(form[2]):
        if not (isinstance(doublet, list) and len(doublet) == 2):
            raise ParseError(f"isodata doublet must be (targets isomap): {write_sexpr(doublet)}")
        raw_targets, raw_map = doublet
        if isinstance(raw_targets, str):
            targets: tuple[str, ...] = (raw_targets,)
        elif isinstance(raw_targets, list) and all(isinstance(x, str) for x in raw_targets):
            targets = tuple(raw_targets)
        else:
            raise ParseError(f"malformed isodata targets: {write_sexpr(raw_targets)}")
        if isinstance(raw_map, str):
            isomap: Any = raw_map
        elif isinstance(raw_map, list) and len(raw_map) in (4, 5):
            if len(raw_map) == 5 and isinstance(raw_map[0], str):
                iname: Optional[str] = raw_map[0]
                parts = raw_map[1:]
            else:
                iname = None
                parts = raw_map if len(raw_map) == 4 else None
            if parts is None:
                raise ParseError(f"malformed inline isomorphism: {write_sexpr(raw_map)}")
            o, n, i_, s = (parse_designator(x) for x in parts)
            isomap = InlineIso(iname, o, n, i_, s)
        else:
            raise ParseError(f"malformed isomap: {write_sexpr(raw_map)}")
        specs.append(ArgResSpec(targets, isomap))
    if not specs:
        raise ParseError(f"isodata on {fn} needs at least one doublet")
    new_name = None
    predicate = False
    verify_guards = True
    wrapper = False
    opts = form[3:]
    if len(opts) % 2 != 0:
        raise ParseError(f"odd option list in isodata {fn}")
    for key, val in zip(opts[::2], opts[1::2]):
        if key == ":new-name":
            if not isinstance(val, str):
                raise ParseError(":new-name expects a symbol")
            new_name = val
        elif key == ":predicate":
            predicate = _parse_bool(val, key)
        elif key == ":verify-guards":
            verify_guards = _parse_bool(val, key)
        elif key == ":wrapper":
            wrapper = _parse_bool(val, key)
        else:
            raise ParseError(f"unknown isodata option {key}")
    return IsodataCall(fn, tuple(specs), new_name, predicate, verify_guards, wrapper)


def parse_simplify(form: Sexpr) -> SimplifyCall:
    if len(form) < 2 or not isinstance(form[1], str):
        raise ParseError(f"malformed simplify: {write_sexpr(form)}")
    fn = form[1]
    assumptions: tuple[Term, ...] = ()
    enable: tuple[str, ...] = ()
    disable: tuple[str, ...] = ()
    rulesets: tuple[str, ...] = ()
    new_name = None
    opts = form[2:]
    if len(opts) % 2 != 0:
        raise ParseError(f"odd option list in simplify {fn}")
    for key, val in zip(opts[::2], opts[1::2]):
        if key == ":assumptions":
            if not isinstance(val, list):
                raise ParseError(":assumptions expects a list of terms")
            assumptions = tuple(parse_term(x) for x in val)
        elif key in (":enable", ":disable", ":rulesets"):
            if not (isinstance(val, list) and all(isinstance(x, str) for x in val)):
                raise ParseError(f"{key} expects a list of symbols")
            if key == ":enable":
                enable = tuple(val)
            elif key == ":disable":
                disable = tuple(val)
            else:
                for rs in val:
                    if rs not in ("general", "old-to-new", "new-to-old"):
                        raise ParseError(f"unknown ruleset {rs}")
                rulesets = tuple(val)
        elif key == ":new-name":
            if not isinstance(val, str):
                raise ParseError(":new-name expects a symbol")
            new_name = val
        else:
            raise ParseError(f"unknown simplify option {key}")
    return SimplifyCall(fn, assumptions, enable, disable, rulesets, new_name)


def parse_propagate(form: Sexpr) -> PropagateCall:
    if len(form) < 3 or not isinstance(form[1], list) or not isinstance(form[2], list):
        raise ParseError(f"malformed propagate-iso: {write_sexpr(form)}")
    iso_names = tuple(form[1])
    if not iso_names or not all(isinstance(x, str) for x in iso_names):
        raise ParseError("propagate-iso needs a non-empty list of isomorphism names")
    interface: list[InterfaceSpec] = []
    for entry in form[2]:
        if not (isinstance(entry, list) and len(entry) == 7 and entry[5] == "=>"):
            raise ParseError(f"malformed interface entry: {write_sexpr(entry)}")
        old_fn, new_fn, o2n, n2o, raw_args, _, raw_res = entry
        for s in (old_fn, new_fn, o2n, n2o):
            if not isinstance(s, str):
                raise ParseError(f"malformed interface entry: {write_sexpr(entry)}")
        if not isinstance(raw_args, list) or not all(isinstance(x, str) for x in raw_args):
            raise ParseError(f"malformed argument types: {write_sexpr(raw_args)}")
        if isinstance(raw_res, list):
            if len(raw_res) != 1 or not isinstance(raw_res[0], str):
                raise ParseError(f"malformed result type: {write_sexpr(raw_res)}")
            res = raw_res[0]
        elif isinstance(raw_res, str):
            res = raw_res
        else:
            raise ParseError(f"malformed result type: {write_sexpr(raw_res)}")
        interface.append(InterfaceSpec(old_fn, new_fn, o2n, n2o, tuple(raw_args), res))
    first = last = None
    suffix = "new"
    print_tables = False
    overrides: list[tuple[str, Any]] = []
    opts = form[3:]
    if len(opts) % 2 != 0:
        raise ParseError("odd option list in propagate-iso")
    for key, val in zip(opts[::2], opts[1::2]):
        if key == ":first-event":
            first = val
        elif key == ":last-event":
            last = val
        elif key == ":suffix":
            if not isinstance(val, str):
                raise ParseError(":suffix expects a symbol")
            suffix = val.lstrip("-")
        elif key == ":print-tables":
            print_tables = _parse_bool(val, key)
        elif key == ":overrides":
            if not isinstance(val, list):
                raise ParseError(":overrides expects a list")
            for ov in val:
                if not (isinstance(ov, list) and len(ov) >= 2 and isinstance(ov[0], str)):
                    raise ParseError(f"malformed override: {write_sexpr(ov)}")
                if ov[1] == ":skip":
                    overrides.append((ov[0], ":skip"))
                else:
                    overrides.append((ov[0], _parse_config_pairs(ov[1:])))
        else:
            raise ParseError(f"unknown propagate-iso option {key}")
    if not isinstance(first, str) or not isinstance(last, str):
        raise ParseError("propagate-iso needs :first-event and :last-event symbols")
    return PropagateCall(
        iso_names, tuple(interface), first, last, suffix, print_tables, tuple(overrides)
    )


_CONFIG_KEYS = {":depth", ":int-range", ":case-cap", ":fuel", ":symbol-pool"}


def _parse_config_pairs(items: list) -> tuple[tuple[str, Any], ...]:
    if len(items) % 2 != 0:
        raise ParseError("odd settings list")
    out: list[tuple[str, Any]] = []
    for key, val in zip(items[::2], items[1::2]):
        if key not in _CONFIG_KEYS:
            raise ParseError(f"unknown check-config key {key}")
        if key == ":int-range":
            if not (
                isinstance(val, list)
                and len(val) == 2
                and all(isinstance(x, int) and not isinstance(x, bool) for x in val)
            ):
                raise ParseError(":int-range expects (lo hi)")
            out.append((key, (val[0], val[1])))
        elif key == ":symbol-pool":
            if not (isinstance(val, list) and all(isinstance(x, str) for x in val)):
                raise ParseError(":symbol-pool expects a list of symbols")
            out.append((key, tuple(val)))
        else:
            if not isinstance(val, int) or isinstance(val, bool) or val < 0:
                raise ParseError(f"{key} expects a natural number")
            out.append((key, val))
    return tuple(out)


def parse_config(form: Sexpr) -> ConfigCall:
    return ConfigCall(_parse_config_pairs(form[1:]))


# ---------------------------------------------------------------------------
# printing events back to surface syntax
# ---------------------------------------------------------------------------


def designator_to_sexpr(d: Designator) -> Sexpr:
    return d.name if d.name is not None else lam_to_sexpr(d.lam)


def fundef_to_sexpr(fd: FunDef) -> Sexpr:
    form: list = ["defun", fd.name, list(fd.params)]
    xargs: list = []
    if fd.guard != T:
        xargs += [":guard", term_to_sexpr(fd.guard)]
    if fd.measure is not None:
        xargs += [":measure", term_to_sexpr(fd.measure)]
    if xargs:
        form.append(["declare", ["xargs"] + xargs])
    form.append(term_to_sexpr(fd.body))
    return form


def theorem_to_sexpr(td: TheoremDef) -> Sexpr:
    if td.hyp == T:
        stmt = term_to_sexpr(td.concl)
    else:
        stmt = ["implies", term_to_sexpr(td.hyp), term_to_sexpr(td.concl)]
    form: list = ["defthm", td.name, stmt]
    if td.rule_classes != ":rewrite":
        form += [":rule-classes", td.rule_classes]
    if td.ruleset != "general":
        form += [":ruleset", td.ruleset]
    return form


def _settings_to_sexpr(settings) -> list:
    out: list = []
    for key, val in settings:
        if key == ":int-range":
            out += [key, [val[0], val[1]]]
        elif key == ":symbol-pool":
            out += [key, list(val)]
        else:
            out += [key, val]
    return out


def call_to_sexpr(call: Any) -> Sexpr:
    if isinstance(call, DefisoCall):
        form: list = ["defiso", call.name] + [
            designator_to_sexpr(d) for d in (call.old, call.new, call.iso, call.osi)
        ]
        if not call.guard_conditions:
            form += [":guard-conditions", "nil"]
        if call.hints:
            form += [":hints", _thaw(call.hints)]
        return form
    if isinstance(call, IsodataCall):
        doublets: list = []
        for spec in call.specs:
            tgt: Sexpr = spec.targets[0] if len(spec.targets) == 1 else list(spec.targets)
            if isinstance(spec.isomap, str):
                m: Sexpr = spec.isomap
            else:
                inner = [
                    designator_to_sexpr(d)
                    for d in (spec.isomap.old, spec.isomap.new, spec.isomap.iso, spec.isomap.osi)
                ]
                m = ([spec.isomap.name] if spec.isomap.name else []) + inner
            doublets.append([tgt, m])
        form = ["isodata", call.fn, doublets]
        if call.new_name:
            form += [":new-name", call.new_name]
        if call.predicate:
            form += [":predicate", "t"]
        if not call.verify_guards:
            form += [":verify-guards", "nil"]
        if call.wrapper:
            form += [":wrapper", "t"]
        return form
    if isinstance(call, SimplifyCall):
        form = ["simplify", call.fn]
        if call.assumptions:
            form += [":assumptions", [term_to_sexpr(a) for a in call.assumptions]]
        if call.enable:
            form += [":enable", list(call.enable)]
        if call.disable:
            form += [":disable", list(call.disable)]
        if call.rulesets:
            form += [":rulesets", list(call.rulesets)]
        if call.new_name:
            form += [":new-name", call.new_name]
        return form
    if isinstance(call, PropagateCall):
        entries: list = []
        for sp in call.interface:
            res: Sexpr = sp.result_type if sp.result_type == "*" else [sp.result_type]
            entries.append(
                [sp.old_fn, sp.new_fn, sp.old_to_new_thm, sp.new_to_old_thm,
                 list(sp.arg_types), "=>", res]
            )
        form = ["propagate-iso", list(call.iso_names), entries,
                ":first-event", call.first_event, ":last-event", call.last_event]
        if call.suffix != "new":
            form += [":suffix", call.suffix]
        if call.print_tables:
            form += [":print-tables", "t"]
        if call.overrides:
            ovs: list = []
            for name, val in call.overrides:
                if val == ":skip":
                    ovs.append([name, ":skip"])
                else:
                    ovs.append([name] + _settings_to_sexpr(val))
            form += [":overrides", ovs]
        return form
    if isinstance(call, ConfigCall):
        return ["set-check-config"] + _settings_to_sexpr(call.settings)
    if isinstance(call, AbbrevCall):
        return ["defabbrev", call.name, lam_to_sexpr(call.expansion)]
    raise TypeError(f"cannot print {call!r}")


def _thaw(x):
    if isinstance(x, tuple):
        return [_thaw(i) for i in x]
    return x


def print_event(kind: str, payload: Any) -> str:
    if kind == "defun":
        return pp_sexpr(fundef_to_sexpr(payload))
    if kind == "defthm":
        return pp_sexpr(theorem_to_sexpr(payload))
    return pp_sexpr(call_to_sexpr(payload))


# ---------------------------------------------------------------------------
# defrecord expansion: tagged nested pairs with generated accessors
# ---------------------------------------------------------------------------


def expand_defrecord(form: Sexpr) -> list[Sexpr]:
    if len(form) < 3 or not isinstance(form[1], str):
        raise ParseError(f"malformed defrecord: {write_sexpr(form)}")
    name = form[1]
    fields: list[tuple[str, str]] = []
    for f in form[2:]:
        if not (
            isinstance(f, list)
            and len(f) == 2
            and isinstance(f[0], str)
            and isinstance(f[1], str)
        ):
            raise ParseError(f"defrecord field must be (name predicate): {write_sexpr(f)}")
        fields.append((f[0], f[1]))
    k = len(fields)

    def nth_cdr(n: int) -> Sexpr:
        out: Sexpr = "x"
        for _ in range(n):
            out = ["cdr", out]
        return out

    # constructor: proper list (tag f1 ... fk)
    cons_body: Sexpr = "nil"
    for fname, _ in reversed(fields):
        cons_body = ["cons", fname, cons_body]
    cons_body = ["cons", ["quote", name], cons_body]
    constructor = ["defun", name, [f for f, _ in fields], cons_body]

    # recognizer
    conj: list[Sexpr] = [["consp", "x"], ["equal", ["car", "x"], ["quote", name]]]
    for i, (_, pred) in enumerate(fields, start=1):
        conj.append(["consp", nth_cdr(i)])
        conj.append([pred, ["car", nth_cdr(i)]])
    conj.append(["null", nth_cdr(k + 1)])
    recognizer = ["defun", f"{name}-p", ["x"], ["and"] + conj]

    out: list[Sexpr] = [constructor, recognizer]
    for i, (fname, _) in enumerate(fields, start=1):
        out.append(["defun", f"{name}->{fname}", ["x"], ["car", nth_cdr(i)]])
    # accessor-of-constructor theorems
    args = [f for f, _ in fields]
    for i, (fname, _) in enumerate(fields, start=1):
        out.append(
            [
                "defthm",
                f"{name}->{fname}-of-{name}",
                ["equal", [f"{name}->{fname}", [name] + args], fname],
            ]
        )
    # constructor typing theorem
    hyp = ["and"] + [[pred, fname] for fname, pred in fields]
    out.append(
        [
            "defthm",
            f"{name}-p-of-{name}",
            ["implies", hyp, [f"{name}-p", [name] + args]],
        ]
    )
    return out
