"""Oracle tests for the script executor and the command line driver.

Expected values were worked out by hand from the enumeration order
(integers ascending, then pool symbols, then pairs level by level).
At depth 1 with integers 0..3 and pool (t nil) the predicate
(and (natp n) (<= n 1)) first fails at n = 2, a closed claim counts
exactly one case, and a two variable claim over the 20 value universe
of depth 1 with integers 0..1 counts 400 cases.
"""

import json
from importlib import resources

import pytest

from isomorph.cli import main
from isomorph.evaluator import EnumConfig
from isomorph.script import emit_report, run_events, run_files
from isomorph.syntax import ParseError, parse_program

jsonschema = pytest.importorskip("jsonschema")


CFG_LINE = "(set-check-config :depth 1 :int-range (0 3) :symbol-pool (t nil))"

BASE_DEFS = """
(defun small-p (n) (and (natp n) (<= n 1)))
(defun big-p (n) (and (natp n) (<= 2 n) (<= n 3)))
(defun shift2 (n) (declare (xargs :guard (small-p n))) (+ n 2))
(defun unshift2 (n) (declare (xargs :guard (big-p n))) (- n 2))
"""

HAPPY = (
    CFG_LINE
    + "\n(defabbrev dbl (lambda (n) (+ n n)))\n"
    + BASE_DEFS
    + "(defiso small-big small-p big-p shift2 unshift2)\n"
    + "(defthm small-p-0 (small-p 0))\n"
)

FAILING_THM = (
    CFG_LINE
    + "\n(defun small-p (n) (and (natp n) (<= n 1)))\n"
    + "(defthm small-p-everywhere (small-p n))\n"
    + "(defun after-p (x) x)\n"
)

CAPPED = (
    "(set-check-config :depth 1 :int-range (0 3) :symbol-pool (t nil)"
    " :case-cap 2)\n"
    + "(defthm car-over-cons (equal (car (cons x y)) x))\n"
    + "(defun after-p (x) x)\n"
)

BAD_CALLEE = "(defun callee-less (x) (mystery x))\n"

CHAIN = (
    CFG_LINE
    + "\n(defun good-1 (x) x)\n"
    + "(defun bad-idea (x) (mystery x))\n"
    + "(defun uses-bad (x) (bad-idea x))\n"
    + "(defun good-2 (x) x)\n"
)

ENGINES = (
    CFG_LINE
    + "\n"
    + BASE_DEFS
    + "(defiso small-big small-p big-p shift2 unshift2)\n"
    + "(defun incsmall (n)"
    + " (declare (xargs :guard (and (small-p n) (small-p (+ n 1)))))"
    + " (+ n 1))\n"
    + "(isodata incsmall ((n small-big)))\n"
    + "(simplify incsmall$1 :assumptions ((big-p n)))\n"
)

BROKEN_ISO = (
    CFG_LINE
    + "\n(defun small-p (n) (and (natp n) (<= n 1)))\n"
    + "(defun big-p (n) (and (natp n) (<= 2 n) (<= n 3)))\n"
    + "(defun shift1 (n) (declare (xargs :guard (small-p n))) (+ n 1))\n"
    + "(defun unshift1 (n) (declare (xargs :guard (big-p n))) (- n 1))\n"
    + "(defiso small-big small-p big-p shift1 unshift1)\n"
    + "(defun never-reached (x) x)\n"
)

LIFT = (
    CFG_LINE
    + "\n"
    + BASE_DEFS
    + "(defiso small-big small-p big-p shift2 unshift2)\n"
    + "(defun twirlish (n) (declare (xargs :guard (small-p n))) (- 1 n))\n"
    + "(defun twirlish2 (n) (declare (xargs :guard (big-p n))) (- 5 n))\n"
    + "(defthm twirlish-to-twirlish2"
    + " (implies (small-p n)"
    + "          (equal (twirlish n) (unshift2 (twirlish2 (shift2 n)))))"
    + " :ruleset old-to-new)\n"
    + "(defthm twirlish2-to-twirlish"
    + " (implies (big-p n)"
    + "          (equal (twirlish2 n) (shift2 (twirlish (unshift2 n)))))"
    + " :ruleset new-to-old)\n"
    + "(defun spin (n) (declare (xargs :guard (small-p n))) (twirlish n))\n"
    + "(defthm small-p-of-spin (implies (small-p n) (small-p (spin n))))\n"
    + "(propagate-iso (small-big)"
    + " ((twirlish twirlish2 twirlish-to-twirlish2 twirlish2-to-twirlish"
    + "   (small-p) => (small-p)))"
    + " :first-event spin :last-event small-p-of-spin)\n"
)


def run_src(src, **kw):
    return run_events(parse_program(src), **kw)


def test_empty_program():
    world, report = run_src("")
    assert report.exit_code == 0
    assert report.totals["events"] == 0
    assert "0 events" in emit_report(report, "text")


def test_happy_path_rows():
    world, report = run_src(HAPPY)
    assert report.exit_code == 0
    assert [r.status for r in report.events] == ["ok"] * 8
    kinds = [r.kind for r in report.events]
    assert kinds[0] == "set-check-config"
    assert kinds[1] == "defabbrev"
    assert kinds[6] == "defiso"
    assert kinds[7] == "defthm"
    # a closed claim is one case
    assert report.events[7].cases_checked == 1
    assert world.theorems["small-p-0"].status == "checked"


def test_defiso_row_sums_its_obligations():
    world, report = run_src(HAPPY)
    defiso_row = report.events[6]
    from_records = sum(
        rec.check.cases_checked
        for rec in world.obligations.values()
        if rec.provenance.startswith("defiso") and rec.check is not None
    )
    assert defiso_row.cases_checked == from_records
    assert from_records > 0
    statuses = {r.status for r in world.obligations.values()}
    assert statuses <= {"passed", "proven-by-derivation"}


def test_user_theorem_rule_installed():
    src = HAPPY + (
        "(defthm shift2-val (implies (small-p n)"
        " (equal (shift2 n) (+ n 2))))\n"
    )
    world, report = run_src(src)
    assert report.exit_code == 0
    assert any(r.name == "shift2-val" for r in world.rules)
    rec = world.obligations["shift2-val"]
    assert rec.provenance == "user"
    assert rec.status == "passed"
    assert rec.check.cases_checked == 2


def test_counterexample_halts_run():
    world, report = run_src(FAILING_THM)
    assert report.exit_code == 1
    statuses = [r.status for r in report.events]
    assert statuses == ["ok", "ok", "failed", "skipped"]
    failed = report.events[2]
    assert "counterexample" in failed.detail
    assert "n = 2" in failed.detail
    assert "small-p-everywhere" not in world.theorems
    assert "after-p" not in world.functions
    assert "not reached" in report.events[3].detail


def test_case_cap_is_reported_not_fatal():
    world, report = run_src(CAPPED)
    assert report.exit_code == 2
    statuses = [r.status for r in report.events]
    assert statuses == ["ok", "resource-exhausted", "ok"]
    row = report.events[1]
    assert "stopped after 2 cases" in row.detail
    assert row.cases_checked == 2
    assert world.theorems["car-over-cons"].status == "asserted"
    assert "after-p" in world.functions


def test_unknown_callee_is_a_usage_error():
    world, report = run_src(BAD_CALLEE)
    assert report.exit_code == 3
    assert report.events[0].status == "error"
    assert "mystery" in report.events[0].detail


def test_halt_skips_the_rest():
    world, report = run_src(CHAIN)
    statuses = [r.status for r in report.events]
    assert statuses == ["ok", "ok", "error", "skipped", "skipped"]
    assert "good-2" not in world.functions


def test_keep_going_skips_only_dependents():
    world, report = run_src(CHAIN, keep_going=True)
    statuses = [r.status for r in report.events]
    assert statuses == ["ok", "ok", "error", "skipped", "ok"]
    assert "bad-idea" in report.events[3].detail
    assert "good-2" in world.functions
    assert "uses-bad" not in world.functions
    assert report.exit_code == 3


def test_exit_code_precedence():
    src = (
        "(set-check-config :depth 1 :int-range (0 3) :symbol-pool (t nil)"
        " :case-cap 100)\n"
        + "(defthm car-over-cons (equal (car (cons x y)) x))\n"
        + "(defun small-p (n) (and (natp n) (<= n 1)))\n"
        + "(defthm small-p-everywhere (small-p n))\n"
    )
    world, report = run_src(src, keep_going=True)
    assert [r.status for r in report.events] == [
        "ok",
        "resource-exhausted",
        "ok",
        "failed",
    ]
    assert report.exit_code == 1


def test_engine_dispatch_and_totals():
    world, report = run_src(ENGINES)
    assert report.exit_code == 0
    assert all(r.status == "ok" for r in report.events)
    assert "incsmall$1" in world.functions
    assert "incsmall$2" in world.functions
    t = report.totals
    assert t["functions-lifted"] == 2
    assert t["isos-registered"] == 1
    assert t["converter-functions"] == 0
    assert t["theorems-lifted"] == 0
    names = [r.name for r in report.events]
    assert "incsmall$1" in names
    assert "incsmall$2" in names
    statuses = {r.status for r in world.obligations.values()}
    assert statuses <= {"passed", "proven-by-derivation", "proven-by-rewriting"}
    assert sum(t["obligations"].values()) == len(world.obligations)


def test_broken_iso_reports_least_witness():
    world, report = run_src(BROKEN_ISO)
    assert report.exit_code == 1
    row = next(r for r in report.events if r.kind == "defiso")
    assert row.status == "failed"
    assert "counterexample" in row.detail
    assert "o = 0" in row.detail
    assert "never-reached" not in world.functions


def test_propagate_through_the_driver():
    world, report = run_src(LIFT)
    assert report.exit_code == 0
    row = report.events[-1]
    assert row.kind == "propagate-iso"
    assert row.name.startswith("propagate-iso")
    t = report.totals
    assert t["functions-lifted"] == 1
    assert t["theorems-lifted"] == 1
    assert t["isos-registered"] == 1
    assert "spin-new" in world.functions
    assert world.theorems["small-p-of-spin-new"].status == "checked"
    # claim row for the direct check of small-p-of-spin, two relevant cases
    user_row = report.events[-2]
    assert user_row.kind == "defthm"
    assert user_row.cases_checked == 2


def test_output_files(tmp_path):
    script = tmp_path / "happy.lisp"
    script.write_text(HAPPY)
    out = tmp_path / "out"
    world, report = run_files([str(script)], out_dir=str(out))
    assert (out / "program.lisp").exists()
    assert (out / "obligations.json").exists()
    assert (out / "report.json").exists()
    text = (out / "program.lisp").read_text()
    assert "(defiso small-big" in text
    reparsed = parse_program(text)
    assert len(reparsed) == len(world.events)
    rows = json.loads((out / "obligations.json").read_text())
    assert rows
    for row in rows:
        assert set(row) == {
            "name",
            "provenance",
            "status",
            "stage",
            "cases-checked",
            "vacuous",
            "witness",
        }
    data = json.loads((out / "report.json").read_text())
    assert data["exit-code"] == 0


def test_report_matches_shipped_schema(tmp_path):
    script = tmp_path / "engines.lisp"
    script.write_text(ENGINES)
    out = tmp_path / "out"
    run_files([str(script)], out_dir=str(out))
    data = json.loads((out / "report.json").read_text())
    schema = json.loads(
        resources.files("isomorph").joinpath("report_schema.json").read_text()
    )
    jsonschema.validate(data, schema)


def test_failed_run_still_writes_witness(tmp_path):
    script = tmp_path / "broken.lisp"
    script.write_text(BROKEN_ISO)
    out = tmp_path / "out"
    world, report = run_files([str(script)], out_dir=str(out))
    assert report.exit_code == 1
    data = json.loads((out / "report.json").read_text())
    details = " ".join(e["detail"] for e in data["events"])
    assert "counterexample" in details
    assert "o = 0" in details


def test_stage_lands_in_obligation_ledger(tmp_path):
    script = tmp_path / "lift.lisp"
    script.write_text(LIFT)
    out = tmp_path / "out"
    run_files([str(script)], out_dir=str(out))
    rows = json.loads((out / "obligations.json").read_text())
    by_name = {row["name"]: row for row in rows}
    lifted = by_name["small-p-of-spin-new"]
    assert lifted["stage"] == "S1"
    assert lifted["status"] == "proven-by-rewriting"
    assert by_name["small-p-0" if "small-p-0" in by_name else "small-p-of-spin"]


def test_determinism(tmp_path):
    script = tmp_path / "engines.lisp"
    script.write_text(ENGINES)
    outs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        run_files([str(script)], out_dir=str(out))
        outs.append(out)
    p1 = (outs[0] / "program.lisp").read_bytes()
    p2 = (outs[1] / "program.lisp").read_bytes()
    assert p1 == p2
    r1 = json.loads((outs[0] / "report.json").read_text())
    r2 = json.loads((outs[1] / "report.json").read_text())
    for r in (r1, r2):
        for e in r["events"]:
            e["wall-time"] = 0
    assert r1 == r2


def test_rerun_on_emitted_program_is_idempotent(tmp_path):
    script = tmp_path / "engines.lisp"
    script.write_text(ENGINES)
    out1 = tmp_path / "one"
    world1, _ = run_files([str(script)], out_dir=str(out1))
    out2 = tmp_path / "two"
    world2, report2 = run_files(
        [str(out1 / "program.lisp"), str(script)], out_dir=str(out2)
    )
    assert report2.exit_code == 0
    assert len(world2.events) == len(world1.events)
    assert (out1 / "program.lisp").read_bytes() == (
        out2 / "program.lisp"
    ).read_bytes()


def test_config_flags_reach_the_checker(tmp_path):
    script = tmp_path / "claim.lisp"
    script.write_text("(defthm car-over-cons (equal (car (cons x y)) x))\n")
    cfg = EnumConfig(depth=1, int_lo=0, int_hi=1, pool=("t", "nil"))
    world, report = run_files([str(script)], config=cfg)
    assert report.events[0].cases_checked == 400
    assert report.exit_code == 0


def test_text_report_content():
    world, report = run_src(ENGINES)
    text = emit_report(report, "text")
    assert "9 events" in text
    assert "functions lifted 2" in text
    assert "isos registered 1" in text
    assert "exit 0" in text
    assert "incsmall$2" in text


def test_json_report_round_trips():
    world, report = run_src(HAPPY)
    data = json.loads(emit_report(report, "json"))
    assert data["exit-code"] == 0
    assert data["totals"]["events"] == 8
    assert len(data["events"]) == 8
    assert set(data["config"]) == {
        "depth",
        "int-range",
        "case-cap",
        "fuel",
        "symbol-pool",
    }
    assert data["config"]["depth"] == 1
    assert data["config"]["int-range"] == [0, 3]


def test_main_json_stdout_matches_file(tmp_path, capsys):
    script = tmp_path / "happy.lisp"
    script.write_text(HAPPY)
    out = tmp_path / "out"
    code = main([str(script), "--out", str(out), "--format", "json"])
    assert code == 0
    printed = json.loads(capsys.readouterr().out)
    on_disk = json.loads((out / "report.json").read_text())
    assert printed == on_disk


def test_main_text_default(tmp_path, capsys):
    script = tmp_path / "happy.lisp"
    script.write_text(HAPPY)
    assert main([str(script)]) == 0
    out = capsys.readouterr().out
    assert "exit 0" in out


def test_main_empty_file(tmp_path, capsys):
    script = tmp_path / "empty.lisp"
    script.write_text("")
    assert main([str(script)]) == 0
    assert "0 events" in capsys.readouterr().out


def test_main_exit_codes(tmp_path, capsys):
    b = tmp_path / "b.lisp"
    b.write_text(FAILING_THM)
    assert main([str(b)]) == 1
    c = tmp_path / "c.lisp"
    c.write_text(CAPPED)
    assert main([str(c)]) == 2
    d = tmp_path / "d.lisp"
    d.write_text(BAD_CALLEE)
    assert main([str(d)]) == 3
    capsys.readouterr()


def test_main_missing_file(tmp_path, capsys):
    assert main([str(tmp_path / "nope.lisp")]) == 3
    assert capsys.readouterr().err


def test_main_parse_error(tmp_path, capsys):
    script = tmp_path / "broken.lisp"
    script.write_text("(defun oops (")
    assert main([str(script)]) == 3
    assert capsys.readouterr().err


def test_main_bad_int_range(tmp_path, capsys):
    script = tmp_path / "happy.lisp"
    script.write_text(HAPPY)
    assert main(["--int-range", "7", str(script)]) == 3
    capsys.readouterr()


def test_main_unknown_flag(tmp_path, capsys):
    script = tmp_path / "happy.lisp"
    script.write_text(HAPPY)
    assert main(["--wat", str(script)]) == 3
    capsys.readouterr()


def test_main_depth_flag(tmp_path, capsys):
    script = tmp_path / "claim.lisp"
    script.write_text("(defthm car-over-cons (equal (car (cons x y)) x))\n")
    out = tmp_path / "out"
    code = main(
        [str(script), "--depth", "1", "--int-range", "0:1", "--out", str(out)]
    )
    assert code == 0
    data = json.loads((out / "report.json").read_text())
    # 2 integers and the default 4 symbols give 6 atoms, 42 values, 1764 pairs
    assert data["events"][0]["cases-checked"] == 1764
    capsys.readouterr()
