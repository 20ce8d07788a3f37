"""Definitions, events, and the append-only world.

A World is an immutable ordered collection of events (function definitions,
theorems, isomorphism registrations, transformation records) plus derived
lookup tables. Transformations never mutate a world; they return an extended
copy. Name references must resolve to strictly earlier events, except a
recursive function's reference to itself.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Optional

from .terms import (
    BUILTIN_ARITIES,
    App,
    If,
    Lam,
    Let,
    SymConst,
    T,
    Term,
    Var,
    called_names,
    free_vars,
    is_builtin,
)


class WorldError(Exception):
    pass


@dataclass(frozen=True)
class FunDef:
    name: str
    params: tuple[str, ...]
    body: Term
    guard: Term = T
    measure: Optional[Term] = None
    recursive: bool = False


@dataclass(frozen=True)
class TheoremDef:
    name: str
    vars: tuple[str, ...]
    hyp: Term  # t when unconditional
    concl: Term
    status: str = "asserted"  # asserted | checked | failed
    rule_classes: str = ":rewrite"  # :rewrite | nil
    ruleset: str = "general"  # which ruleset its rewrite rule joins


@dataclass(frozen=True)
class Event:
    index: int
    name: str
    kind: str
    payload: Any


@dataclass(frozen=True)
class TransformRecord:
    """One executed program transformation, kept for replay detection.

    Re-running a structurally identical call against a world that already
    holds its record is a silent no-op, so a generated program file can be
    loaded on top of the session that produced it.
    """

    kind: str  # isodata | simplify | propagate-iso
    call: Any
    old_name: str
    new_name: str


@dataclass(frozen=True)
class World:
    events: tuple[Event, ...] = ()
    functions: dict[str, FunDef] = field(default_factory=dict)
    theorems: dict[str, TheoremDef] = field(default_factory=dict)
    isos: dict[str, Any] = field(default_factory=dict)  # name -> IsoRecord
    rules: tuple[Any, ...] = ()  # Rule, in installation order
    transforms: tuple[Any, ...] = ()  # TransformRecord, in order
    obligations: dict[str, Any] = field(default_factory=dict)  # name -> Obligation
    exclusive_pairs: tuple[tuple[str, str], ...] = ()
    images: dict[str, str] = field(default_factory=dict)  # old name -> image name
    sugar: dict[str, Lam] = field(default_factory=dict)
    check_config: Any = None  # EnumConfig; None means library default
    # Shared memo for candidate-value scans.  Safe to carry across the
    # functional updates of one lineage because definitions are append-only,
    # so a named predicate never changes meaning.  Excluded from equality.
    enum_cache: dict = field(default_factory=dict, compare=False, repr=False)

    # -- construction helpers ------------------------------------------------

    def _append(self, kind: str, name: str, payload: Any, **updates) -> "World":
        event = Event(len(self.events), name, kind, payload)
        return dataclasses.replace(self, events=self.events + (event,), **updates)

    def has_name(self, name: str) -> bool:
        return (
            name in self.functions
            or name in self.theorems
            or name in self.isos
            or is_builtin(name)
            or name in self.sugar
        )

    def define_function(self, fd: FunDef) -> "World":
        existing = self.functions.get(fd.name)
        if existing is not None:
            if existing == fd:
                return self  # redundant redefinition is a no-op
            raise WorldError(f"duplicate definition of {fd.name}")
        if self.has_name(fd.name):
            raise WorldError(f"name {fd.name} is already taken")
        for term, what in ((fd.body, "body"), (fd.guard, "guard")):
            self._check_refs(term, fd, what)
        if fd.measure is not None:
            self._check_refs(fd.measure, fd, "measure")
        functions = dict(self.functions)
        functions[fd.name] = fd
        return self._append("defun", fd.name, fd, functions=functions)

    def add_theorem(self, td: TheoremDef) -> "World":
        existing = self.theorems.get(td.name)
        if existing is not None:
            if dataclasses.replace(existing, status=td.status) == td or existing == td:
                return self
            raise WorldError(f"duplicate theorem {td.name}")
        if self.has_name(td.name):
            raise WorldError(f"name {td.name} is already taken")
        for term in (td.hyp, td.concl):
            self._check_refs(term, None, "theorem " + td.name)
        theorems = dict(self.theorems)
        theorems[td.name] = td
        return self._append("defthm", td.name, td, theorems=theorems)

    def register_sugar(self, name: str, expansion: Lam) -> "World":
        if name in self.sugar:
            if self.sugar[name] == expansion:
                return self
            raise WorldError(f"duplicate abbreviation {name}")
        if self.has_name(name):
            raise WorldError(f"name {name} is already taken")
        self._check_refs(expansion, None, "abbreviation " + name)
        sugar = dict(self.sugar)
        sugar[name] = expansion
        return self._append("defabbrev", name, expansion, sugar=sugar)

    def add_record_event(self, kind: str, name: str, payload: Any, **updates) -> "World":
        """Append a transformation/config record event (payload already built)."""
        return self._append(kind, name, payload, **updates)

    # -- reference and arity checking ---------------------------------------

    def _check_refs(self, term: Term, self_def: Optional[FunDef], what: str) -> None:
        selfname = self_def.name if self_def is not None else None
        for name in called_names(term):
            if is_builtin(name) or name in self.functions or name == selfname or name in self.sugar:
                continue
            raise WorldError(f"unknown function {name} in {what}")
        self._check_arities(term, self_def)

    def _check_arities(self, term: Term, self_def: Optional[FunDef]) -> None:
        if isinstance(term, App):
            if isinstance(term.fn, Lam):
                if len(term.fn.params) != len(term.args):
                    raise WorldError(
                        f"lambda of {len(term.fn.params)} parameters applied to {len(term.args)} arguments"
                    )
                self._check_arities(term.fn.body, self_def)
            else:
                self._check_arity_of(term.fn, len(term.args), self_def)
            for a in term.args:
                self._check_arities(a, self_def)
        elif isinstance(term, If):
            for t in (term.test, term.then, term.els):
                self._check_arities(t, self_def)
        elif isinstance(term, Lam):
            self._check_arities(term.body, self_def)
        elif isinstance(term, Let):
            for _, v in term.bindings:
                self._check_arities(v, self_def)
            self._check_arities(term.body, self_def)

    def _check_arity_of(self, name: str, nargs: int, self_def: Optional[FunDef]) -> None:
        if name in BUILTIN_ARITIES:
            lo, hi = BUILTIN_ARITIES[name]
            if nargs < lo or (hi is not None and nargs > hi):
                raise WorldError(f"arity mismatch: {name} applied to {nargs} arguments")
            return
        fd = self.functions.get(name)
        if fd is None and self_def is not None and name == self_def.name:
            fd = self_def
        if fd is not None and len(fd.params) != nargs:
            raise WorldError(
                f"arity mismatch: {name} takes {len(fd.params)} arguments, got {nargs}"
            )
        if fd is None and name in self.sugar:
            if len(self.sugar[name].params) != nargs:
                raise WorldError(f"arity mismatch: abbreviation {name} applied to {nargs} arguments")

    # -- queries -------------------------------------------------------------

    def event_index(self, name: str) -> int:
        for ev in self.events:
            if ev.name == name:
                return ev.index
        raise WorldError(f"no event named {name}")


def call_graph(world: World) -> dict[str, frozenset[str]]:
    """Adjacency over defined functions only (builtins excluded)."""
    out: dict[str, frozenset[str]] = {}
    for name, fd in world.functions.items():
        callees = called_names(fd.body) | called_names(fd.guard)
        out[name] = frozenset(c for c in callees if c in world.functions)
    return out


def events_in_range(world: World, first: str, last: str) -> tuple[Event, ...]:
    lo = world.event_index(first)
    hi = world.event_index(last)
    if lo > hi:
        raise WorldError(f"event range inverted: {first} comes after {last}")
    return tuple(ev for ev in world.events if lo <= ev.index <= hi)


def infer_measure(name: str, params: tuple[str, ...], body: Term) -> Optional[Term]:
    """Default measure: acl2-count of the first parameter that syntactically
    decreases (a `1-` or `cdr` of the parameter) in some recursive call."""
    calls: list[App] = []

    def walk(t: Term) -> None:
        if isinstance(t, App):
            if t.fn == name:
                calls.append(t)
            if isinstance(t.fn, Lam):
                walk(t.fn.body)
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

    walk(body)
    for i, p in enumerate(params):
        for call in calls:
            if i < len(call.args):
                arg = call.args[i]
                if (
                    isinstance(arg, App)
                    and arg.fn in ("1-", "cdr")
                    and arg.args == (Var(p),)
                ):
                    return App("acl2-count", (Var(p),))
    return None
