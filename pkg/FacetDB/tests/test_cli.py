import io
from os.path import join

import pytest

from FacetDB.core import EMPTY, Address, FileHandle, table
from FacetDB.evaluator import (
    Apply, Const, Deref, FacetExpr, LabelDecl, Lambda, Print, Var,
)
from FacetDB.cli import ParseError, main, parse, render, run, unparse

stdout = FileHandle("stdout")


def output(source, **options):
    out = io.StringIO()
    status = run(source, out=out, **options)
    return status, out.getvalue()


def test_parse_print():
    assert parse("(print stdout 1)") == (Print(Const(stdout), Const(1)),)
    assert parse("(print 1)") == parse("(print stdout 1)")
    assert parse("(print stdout 1)", viewer="alice") == \
        (Print(Const(FileHandle("stdout", "alice")), Const(1)),)


def test_parse_label_statement():
    assert parse("(label k (print (facet k 1 2)))") == (LabelDecl("k",
        Print(Const(stdout), FacetExpr("k", Const(1), Const(2)))),)


def test_parse_expressions():
    (stmt,) = parse("(print ((lambda (x y) x) @3 \"a\\n\"))")
    assert stmt.content == Apply(Apply(Lambda("x", Lambda("y", Var("x"))),
        Const(Address(3))), Const("a\n"))
    (stmt,) = parse("; comment\n(print (table-ref T))", {"T": Address(2)})
    assert stmt.content == Deref(Const(Address(2)))


def test_parse_errors():
    with pytest.raises(ParseError) as exception:
        parse("(print")
    assert exception.value.offset == 6
    with pytest.raises(ParseError) as exception:
        parse("(print 1)\n  (print 1 2 3)")
    assert (exception.value.line, exception.value.column) == (2, 3)
    for source in ("(print 1))", '(print "open', "(print let)", "(+ 1 2)",
        "(print (table-ref Nope))", "(print (select a 1 x))", '(print "\\q")'):
        with pytest.raises(ParseError):
            parse(source)


def test_label_names_fit_the_table_format():
    "Label names cannot hold the separators of a row's label list"
    for source in ("(label a,b (print 1))", "(label a=b (print 1))",
        "(print (facet k=True 1 2))"):
        with pytest.raises(ParseError):
            parse(source)


def test_unparse_round_trip(calendar):
    source, _ = calendar
    tables = {"Event": Address(1), "EventGuest": Address(2)}
    program = parse(source, tables, "alice")
    assert parse(" ".join(unparse(stmt) for stmt in program), tables,
        "alice") == program


def test_render():
    assert render("text") == "text"
    assert render(True) == "true"
    assert render(table((EMPTY, ("a", "b")))) == "1\t-\ta\tb"
    assert unparse(Const('say "hi"')) == '"say \\"hi\\""'


def test_run_prints_events():
    assert output("(print 1) (print stderr \"x\")") == \
        (0, "stdout: 1\nstderr: x\n")
    assert output("(label k (print (facet k \"hi\" \"lo\")))") == \
        (0, "stdout: hi\n")


def test_calendar_guest_sees_event(calendar):
    source, tables = calendar
    assert output(source, viewer="alice", tables=tables) == \
        (0, "stdout: Carol's surprise party\n")


def test_calendar_stranger_sees_placeholder(calendar):
    source, tables = calendar
    assert output(source, viewer="dave", tables=tables) == \
        (0, "stdout: Private event\n")


def test_pruning_does_not_change_output(calendar):
    source, tables = calendar
    for viewer in ("alice", "bob", "dave"):
        assert output(source, viewer=viewer, tables=tables, pruning=True) == \
            output(source, viewer=viewer, tables=tables, pruning=False)


PRUNING_PROGRAMS = {
    "restrict_after_read.fdb": {"alice": "stdout: secret\n",
        "bob": "stdout: public\n", "dave": "stdout: public\n"},
    "multi_print.fdb": {"alice": "stdout: secret\nstdout: secret\n",
        "bob": "stdout: secret\nstdout: public\n",
        "dave": "stdout: secret\nstdout: public\n"},
    "other_principal.fdb": {viewer: "carol: secret\nstdout: public\n"
        for viewer in ("alice", "bob", "dave")},
}


def test_pruning_output_matches_unpruned(data_dir):
    "Policies restricted or outputs redirected after a table read"
    tables = [join(data_dir, "Secret.tbl")]
    for program, expected_outputs in sorted(PRUNING_PROGRAMS.items()):
        with open(join(data_dir, program), encoding="utf-8") as f:
            source = f.read()
        for viewer, expected in expected_outputs.items():
            pruned = output(source, viewer=viewer, tables=tables, pruning=True)
            unpruned = output(source, viewer=viewer, tables=tables,
                pruning=False)
            assert pruned == unpruned == (0, expected), (program, viewer)


def test_dump_table(data_dir):
    filename = join(data_dir, "Event.tbl")
    with open(filename, encoding="utf-8") as f: text = f.read()
    assert output("(print 1)", tables=[filename], dump_tables=["Event"]) == \
        (0, "stdout: 1\n"+text)
    source = '(let _ (set! @1 (union (table-ref Event) (row "Picnic" "Park")))' \
        ' (print 1))'
    status, out = output(source, tables=[filename], dump_tables=["Event"])
    assert status == 0
    assert out == "stdout: 1\n"+text+"2\t-\tPicnic\tPark\n"


def test_run_errors(data_dir):
    assert output("(print (table-ref Nope))")[0] == 1
    assert output("(print (x 1))")[0] == 1
    assert output("(print 1)", tables=[join(data_dir, "missing.tbl")])[0] == 1
    assert output("(print 1)", dump_tables=["Event"])[0] == 1


def test_main(calendar, data_dir, capsys):
    source, tables = calendar
    program = join(data_dir, "calendar.fdb")
    argv = [program, "--viewer", "alice", "--pruning", "off"]
    for filename in tables: argv += ["--table", filename]
    assert main(argv) == 0
    assert capsys.readouterr().out == "stdout: Carol's surprise party\n"


def test_main_reads_standard_input(monkeypatch, capsys):
    monkeypatch.setattr("sys.stdin", io.StringIO("(print (+ 1 2))"))
    assert main(["-"]) == 0
    assert capsys.readouterr().out == "stdout: 3\n"


def test_main_missing_program(tmp_path):
    assert main([str(tmp_path / "missing.fdb")]) == 1
