"""Sequential execution of whole programs.

A parsed program is a list of source events.  The runner feeds each one
to the world or to the matching transformation engine, collects an
outcome row per event, and totals the result.  A failing check carries
its counterexample in the row detail, so even the report of a failed
run shows the witness.

Hard failures stop the run; later events appear in the report as
skipped rows.  With ``keep_going`` the runner instead records the error
and presses on, skipping only events that mention a name introduced by
an event that did not complete.  A check that merely runs out of budget
never stops the run either way.
"""

from __future__ import annotations

import dataclasses
import json
import os
import re
import time
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional

from .defiso import DefisoError, defiso
from .evaluator import (
    Divergence,
    EnumConfig,
    EvalError,
    Obligation,
    ObligationRecord,
    apply_settings,
    check_obligation,
    format_counterexample,
)
from .isodata import IsodataError, isodata
from .propagate import PropagateError, propagate_iso
from .rewrite import RewriteError, rule_of_theorem, simplify_function
from .syntax import AbbrevCall, SourceEvent, parse_program, print_event
from .world import World, WorldError

EngineError = (
    DefisoError,
    IsodataError,
    RewriteError,
    PropagateError,
    WorldError,
    EvalError,
)


@dataclass(frozen=True)
class EventOutcome:
    """One report row: what happened when one source event ran."""

    name: str
    kind: str
    status: str  # ok | failed | resource-exhausted | error | skipped
    cases_checked: int = 0
    stage: str = ""
    wall_time: float = 0.0
    detail: str = ""


@dataclass(frozen=True)
class RunReport:
    events: tuple[EventOutcome, ...] = ()
    totals: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    exit_code: int = 0
    # proof-stage labels per generated theorem, for the obligation ledger
    stages: tuple[tuple[str, str], ...] = ()


def _classify(message: str) -> str:
    if "counterexample" in message:
        return "failed"
    if "could not be decided" in message or "exhausted" in message:
        return "resource-exhausted"
    return "error"


_TOKEN_RE = re.compile(r"[^\s()]+")


def _tokens(ev: SourceEvent) -> set[str]:
    """Every symbol the event's printed form mentions."""
    try:
        text = print_event(ev.kind, _printable(ev.kind, ev.name, ev.payload))
    except Exception:
        return {ev.name}
    return set(_TOKEN_RE.findall(text))


def _printable(kind: str, name: str, payload: Any) -> Any:
    # the world stores a bare lambda for abbreviation events
    if kind == "defabbrev" and not isinstance(payload, AbbrevCall):
        return AbbrevCall(name, payload)
    return payload


def _try_rule(td, world):
    try:
        return rule_of_theorem(td, world)
    except RewriteError:
        return None


def _run_theorem(world: World, td) -> tuple[World, str, str]:
    """Admit a claim: check it over the enumerated universe, then keep it.

    A refuted claim raises and leaves the world untouched.  One that the
    budget cannot settle is kept in asserted status and reported, since
    later events may rely on its rewrite rule at their own risk.
    """
    w = world.add_theorem(td)
    if w is world:
        return world, "ok", "redundant"
    cfg = w.check_config or EnumConfig()
    ob = Obligation(td.name, td.vars, td.hyp, td.concl)
    res = check_obligation(ob, w, cfg, w.enum_cache)
    if res.status == "failed":
        raise RewriteError(
            f"defthm {td.name}: counterexample"
            f" {format_counterexample(res.counterexample)}"
        )
    status, detail = "ok", ""
    final = td
    if res.status == "passed":
        final = dataclasses.replace(td, status="checked")
        theorems = dict(w.theorems)
        theorems[td.name] = final
        w = dataclasses.replace(w, theorems=theorems)
    else:
        status, detail = "resource-exhausted", res.reason or ""
    obligations = dict(w.obligations)
    obligations[td.name] = ObligationRecord(ob, "user", res.status, res)
    w = dataclasses.replace(w, obligations=obligations)
    rule = _try_rule(final, w)
    if rule is not None:
        w = dataclasses.replace(w, rules=w.rules + (rule,))
    return w, status, detail


def _apply_config(world: World, call, base_config) -> World:
    base = world.check_config or base_config or EnumConfig()
    new = apply_settings(base, call.settings)
    if world.check_config == new:
        return world
    return world.add_record_event(
        "set-check-config", "set-check-config", call, check_config=new
    )


def run_events(
    events: Iterable[SourceEvent],
    world: Optional[World] = None,
    config: Optional[EnumConfig] = None,
    keep_going: bool = False,
) -> tuple[World, RunReport]:
    w = world if world is not None else World()
    if config is not None and w.check_config is None:
        w = dataclasses.replace(w, check_config=config)

    rows: list[EventOutcome] = []
    stage_of: dict[str, str] = {}
    counts = {
        "functions-lifted": 0,
        "isos-registered": 0,
        "converter-functions": 0,
        "theorems-lifted": 0,
    }
    poisoned: set[str] = set()
    halted_at: Optional[str] = None

    for ev in events:
        if halted_at is not None:
            rows.append(
                EventOutcome(
                    ev.name,
                    ev.kind,
                    "skipped",
                    detail=f"not reached, the run stopped at {halted_at}",
                )
            )
            continue
        if poisoned:
            hit = poisoned & _tokens(ev)
            if hit:
                poisoned.add(ev.name)
                rows.append(
                    EventOutcome(
                        ev.name,
                        ev.kind,
                        "skipped",
                        detail=(
                            f"depends on {sorted(hit)[0]},"
                            " which did not complete"
                        ),
                    )
                )
                continue

        t0 = time.perf_counter()
        status, detail = "ok", ""
        before_obs = w.obligations
        before_events = len(w.events)
        try:
            if ev.kind == "defun":
                w2 = w.define_function(ev.payload)
            elif ev.kind == "defthm":
                w2, status, detail = _run_theorem(w, ev.payload)
            elif ev.kind == "defabbrev":
                w2 = w.register_sugar(ev.payload.name, ev.payload.expansion)
            elif ev.kind == "set-check-config":
                w2 = _apply_config(w, ev.payload, config)
            elif ev.kind == "defiso":
                w2 = defiso(w, ev.payload)
                if w2 is not w:
                    counts["isos-registered"] += 1
            elif ev.kind == "isodata":
                w2 = isodata(w, ev.payload)
                if w2 is not w:
                    counts["functions-lifted"] += 1
            elif ev.kind == "simplify":
                w2 = simplify_function(w, ev.payload)
                if w2 is not w:
                    counts["functions-lifted"] += 1
            elif ev.kind == "propagate-iso":
                w2, rep = propagate_iso(w, ev.payload)
                stage_of.update(dict(rep.stages))
                counts["functions-lifted"] += len(rep.lifted_functions)
                counts["isos-registered"] += len(rep.synthesized_isos)
                counts["converter-functions"] += len(rep.converter_functions)
                counts["theorems-lifted"] += len(rep.lifted_theorems)
                if rep.table_listing:
                    detail = rep.table_listing
            else:
                raise WorldError(f"cannot execute a {ev.kind} event")
        except Divergence as e:
            w2 = w
            status = "resource-exhausted"
            detail = f"evaluation diverged: {e}"
        except EngineError as e:
            w2 = w
            status = _classify(str(e))
            detail = str(e)
            poisoned.add(ev.name)
            if not keep_going:
                halted_at = ev.name

        wall = time.perf_counter() - t0
        cases = sum(
            rec.check.cases_checked
            for name, rec in w2.obligations.items()
            if name not in before_obs and rec.check is not None
        )
        name = ev.name
        if w2 is not w:
            for added in w2.events[before_events:]:
                if added.kind == ev.kind:
                    name = added.name
                    break
        elif status == "ok" and not detail:
            detail = "redundant"
        rows.append(
            EventOutcome(name, ev.kind, status, cases, "", wall, detail)
        )
        w = w2

    statuses = {r.status for r in rows}
    if "error" in statuses:
        code = 3
    elif "failed" in statuses:
        code = 1
    elif "resource-exhausted" in statuses:
        code = 2
    else:
        code = 0

    by_status: dict[str, int] = {}
    for rec in w.obligations.values():
        by_status[rec.status] = by_status.get(rec.status, 0) + 1
    totals = {"events": len(rows), **counts, "obligations": by_status}

    eff = w.check_config or config or EnumConfig()
    cfg_dict = {
        "depth": eff.depth,
        "int-range": [eff.int_lo, eff.int_hi],
        "case-cap": eff.case_cap,
        "fuel": eff.fuel,
        "symbol-pool": list(eff.pool),
    }
    report = RunReport(
        tuple(rows), totals, cfg_dict, code, tuple(sorted(stage_of.items()))
    )
    return w, report


def run_files(
    paths: Iterable[str],
    out_dir: Optional[str] = None,
    config: Optional[EnumConfig] = None,
    keep_going: bool = False,
) -> tuple[World, RunReport]:
    """Parse each file on its own, run the combined event stream in order.

    Per-file parsing means a program emitted by an earlier run can be
    loaded together with the script that produced it; the duplicated
    definitions resolve as redundant no-ops instead of parse failures.
    """
    events: list[SourceEvent] = []
    for path in paths:
        with open(path, "r", encoding="utf-8") as fh:
            events.extend(parse_program(fh.read()))
    world, report = run_events(events, config=config, keep_going=keep_going)
    if out_dir is not None:
        write_outputs(world, report, out_dir)
    return world, report


def world_program_text(world: World) -> str:
    parts = [
        print_event(e.kind, _printable(e.kind, e.name, e.payload))
        for e in world.events
    ]
    return "\n\n".join(parts) + "\n" if parts else ""


def obligation_rows(world: World, stages: dict[str, str]) -> list[dict]:
    rows = []
    for name, rec in world.obligations.items():
        check = rec.check
        witness = None
        if check is not None and check.counterexample:
            witness = format_counterexample(check.counterexample)
        rows.append(
            {
                "name": name,
                "provenance": rec.provenance,
                "status": rec.status,
                "stage": stages.get(name, ""),
                "cases-checked": check.cases_checked if check else 0,
                "vacuous": check.vacuous if check else 0,
                "witness": witness,
            }
        )
    return rows


def write_outputs(world: World, report: RunReport, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(
        os.path.join(out_dir, "program.lisp"), "w", encoding="utf-8"
    ) as fh:
        fh.write(world_program_text(world))
    with open(
        os.path.join(out_dir, "obligations.json"), "w", encoding="utf-8"
    ) as fh:
        json.dump(obligation_rows(world, dict(report.stages)), fh, indent=2)
        fh.write("\n")
    with open(
        os.path.join(out_dir, "report.json"), "w", encoding="utf-8"
    ) as fh:
        fh.write(emit_report(report, "json"))


def report_to_dict(report: RunReport) -> dict:
    return {
        "events": [
            {
                "name": r.name,
                "kind": r.kind,
                "status": r.status,
                "cases-checked": r.cases_checked,
                "stage": r.stage,
                "wall-time": round(r.wall_time, 6),
                "detail": r.detail,
            }
            for r in report.events
        ],
        "totals": report.totals,
        "config": report.config,
        "exit-code": report.exit_code,
    }


_STATUS_ORDER = (
    "passed",
    "proven-by-derivation",
    "proven-by-rewriting",
    "failed",
    "resource-exhausted",
)


def emit_report(report: RunReport, form: str = "text") -> str:
    if form == "json":
        return json.dumps(report_to_dict(report), indent=2) + "\n"
    lines = [f"{len(report.events)} events"]
    for r in report.events:
        row = (
            f"  {r.name:<32} {r.kind:<16} {r.status:<18}"
            f" {r.cases_checked:>9} {r.wall_time:9.3f}s"
        )
        if r.detail:
            row += f"  {r.detail}"
        lines.append(row)
    if report.events:
        t = report.totals
        lines.append(
            "totals: functions lifted {0}, isos registered {1},"
            " converters {2}, theorems lifted {3}".format(
                t.get("functions-lifted", 0),
                t.get("isos-registered", 0),
                t.get("converter-functions", 0),
                t.get("theorems-lifted", 0),
            )
        )
        obs = t.get("obligations") or {}
        if obs:
            keys = [k for k in _STATUS_ORDER if k in obs]
            keys += sorted(k for k in obs if k not in _STATUS_ORDER)
            lines.append(
                "obligations: " + ", ".join(f"{obs[k]} {k}" for k in keys)
            )
    lines.append(f"exit {report.exit_code}")
    return "\n".join(lines) + "\n"
