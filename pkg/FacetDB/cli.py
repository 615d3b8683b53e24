"""
Command-line runner for faceted programs

Programs are s-expressions:
  (let x e stmt)  (print e)  (print channel e)  (label k stmt)
  (lambda (x y) e)  (f a b)  (ref e)  (deref e)  (set! e1 e2)
  (facet k e1 e2)  (label k e)  (restrict k policy)
  (row e ...)  (select i j t)  (project (i ...) t)  (join t1 t2)
  (union t1 t2)  (fold f init t)  (empty-table n)  (table-ref Name)
  (if c e1 e2)  (and e ...)  (or e ...)  (not e)  (== e1 e2)
  (+ e ...)  (concat e ...)  (principal channel)  (seq e1 e2 ...)
Literals: integers, true, false, "strings", @n addresses, stdout, stderr.
A ";" starts a comment running to the end of the line.

E.g.
facetdb calendar.fdb --viewer alice --table Event.tbl --table EventGuest.tbl
  stdout: Carol's surprise party

Date created: 2026-10-18
Python Version: 3.7+
"""
from __future__ import annotations

__version__ = "1.0.0"

from logging import debug,info,warning,error
import re
import sys
from dataclasses import dataclass
from os import environ

from .core import (
    Address, BranchTable, Closure, Facet, FacetError, FileHandle, Label,
    SeedInvalidated, Store, guard_text,
)
from .evaluator import (
    Apply, Assign, Const, Deref, Engine, FacetExpr, Fold, If, Join, LabelDecl,
    Lambda, Let, Prim, Print, Project, Ref, Restrict, Row, Select, Union, Var,
    subexpressions,
)
from .form import (
    dump_row, dump_table, flat_table, marshal, read_table, unmarshal,
)
from .policy import TRUE_POLICY

DEBUG = False # Generate diagnostics messages?

CHANNELS = ("stdout", "stderr")
STRING_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t"}
INTEGER = re.compile(r"-?[0-9]+")
ADDRESS = re.compile(r"@[0-9]+")


class ParseError(FacetError):
    def __init__(self, message, line, column, offset):
        FacetError.__init__(self, "line %d, column %d: %s" %
            (line, column, message))
        self.line = line
        self.column = column
        self.offset = offset


@dataclass(frozen=True)
class Token:
    kind: str # "(" ")" "atom" "string" "end"
    text: str
    line: int
    column: int
    offset: int


@dataclass(frozen=True)
class Form:
    """Parenthesised list of tokens and forms"""
    items: tuple
    start: Token


def fail(node, message):
    token = node.start if isinstance(node, Form) else node
    raise ParseError(message, token.line, token.column, token.offset)


def tokenize(source):
    """Tokens of source, ending with an "end" token"""
    tokens = []
    i, line, column = 0, 1, 1
    def step(count=1):
        nonlocal i, line, column
        for c in source[i:i+count]:
            if c == "\n": line, column = line+1, 1
            else: column += 1
        i += count
    while i < len(source):
        c = source[i]
        if c.isspace(): step(); continue
        if c == ";":
            while i < len(source) and source[i] != "\n": step()
            continue
        start = (line, column, i)
        if c in "()":
            tokens.append(Token(c, c, *start))
            step()
        elif c == '"':
            step()
            chars = []
            while True:
                if i >= len(source):
                    raise ParseError("unterminated string", *start)
                c = source[i]
                if c == '"': step(); break
                if c == "\\":
                    if source[i+1:i+2] not in STRING_ESCAPES:
                        raise ParseError("bad escape in string", line, column, i)
                    chars.append(STRING_ESCAPES[source[i+1]])
                    step(2)
                else:
                    chars.append(c)
                    step()
            tokens.append(Token("string", "".join(chars), *start))
        else:
            j = i
            while j < len(source) and not source[j].isspace() and \
                source[j] not in '();"':
                j += 1
            tokens.append(Token("atom", source[i:j], *start))
            step(j-i)
    tokens.append(Token("end", "", line, column, i))
    return tokens


def read(tokens):
    """Top-level forms of a token list"""
    stack, opened = [[]], []
    for token in tokens:
        if token.kind == "(":
            stack.append([])
            opened.append(token)
        elif token.kind == ")":
            if not opened: fail(token, "unexpected ')'")
            items = stack.pop()
            stack[-1].append(Form(tuple(items), opened.pop()))
        elif token.kind == "end":
            if opened: fail(token, "unexpected end of input, '(' at line %d "
                "column %d is not closed" % (opened[-1].line, opened[-1].column))
        else: stack[-1].append(token)
    return stack[0]


def is_atom(node, text=None):
    if not isinstance(node, Token) or node.kind != "atom": return False
    return text is None or node.text == text


class Parser(object):
    """Lowers forms to statements and expressions.
    tables: table name -> address of the reference holding it
    viewer: principal of the stdout and stderr handles"""
    def __init__(self, tables=None, viewer=None):
        self.tables = dict(tables or {})
        self.viewer = viewer or ""
        self.special = {
            "lambda": self.parse_lambda, "ref": self.unary(Ref),
            "deref": self.unary(Deref), "set!": self.binary(Assign),
            "facet": self.parse_facet, "label": self.parse_label,
            "restrict": self.parse_restrict, "row": self.parse_row,
            "select": self.parse_select, "project": self.parse_project,
            "join": self.binary(Join), "union": self.binary(Union),
            "fold": self.parse_fold, "empty-table": self.parse_empty_table,
            "if": self.parse_if, "seq": self.parse_seq,
            "table-ref": self.parse_table_ref,
        }
        for op in ("==", "and", "or", "not", "+", "concat", "principal"):
            self.special[op] = self.primitive(op)

    def program(self, forms):
        return tuple(self.statement(form) for form in forms)

    def statement(self, node):
        if isinstance(node, Form) and node.items and is_atom(node.items[0]):
            head, args = node.items[0].text, node.items[1:]
            if head == "let":
                self.count(node, args, 3)
                return Let(self.name(args[0]), self.expr(args[1]),
                    self.statement(args[2]))
            if head == "print":
                if len(args) == 1:
                    return Print(Const(FileHandle("stdout", self.viewer)),
                        self.expr(args[0]))
                self.count(node, args, 2)
                return Print(self.expr(args[0]), self.expr(args[1]))
            if head == "label":
                self.count(node, args, 2)
                return LabelDecl(self.name(args[0]), self.statement(args[1]))
        fail(node, "expecting a statement: let, print or label")

    def expr(self, node):
        if isinstance(node, Token): return self.atom(node)
        if not node.items: fail(node, "empty form")
        head, args = node.items[0], node.items[1:]
        if is_atom(head) and head.text in self.special:
            return self.special[head.text](node, args)
        if not args: fail(node, "application without arguments")
        fn = self.expr(head)
        for arg in args: fn = Apply(fn, self.expr(arg))
        return fn

    def atom(self, token):
        if token.kind == "string": return Const(token.text)
        text = token.text
        if INTEGER.fullmatch(text): return Const(int(text))
        if text in ("true", "false"): return Const(text == "true")
        if text in CHANNELS: return Const(FileHandle(text, self.viewer))
        if ADDRESS.fullmatch(text): return Const(Address(int(text[1:])))
        if text in self.special or text in ("let", "print"):
            fail(token, "%r is a keyword" % text)
        return Var(text)

    def count(self, node, args, n):
        if len(args) != n:
            fail(node, "%s expects %d arguments, got %d" %
                (node.items[0].text, n, len(args)))

    def at_least(self, node, args, n):
        if len(args) < n:
            fail(node, "%s expects at least %d arguments, got %d" %
                (node.items[0].text, n, len(args)))

    def name(self, node):
        if not is_atom(node) or node.text in self.special or \
            INTEGER.fullmatch(node.text):
            fail(node, "expecting a name")
        if "," in node.text or "=" in node.text:
            fail(node, "name %r contains ',' or '='" % node.text)
        return node.text

    def integer(self, node):
        if not is_atom(node) or not INTEGER.fullmatch(node.text):
            fail(node, "expecting an integer")
        return int(node.text)

    def unary(self, constructor):
        def parse(node, args):
            self.count(node, args, 1)
            return constructor(self.expr(args[0]))
        return parse

    def binary(self, constructor):
        def parse(node, args):
            self.count(node, args, 2)
            return constructor(self.expr(args[0]), self.expr(args[1]))
        return parse

    def primitive(self, op):
        def parse(node, args):
            if op in ("not", "principal"): self.count(node, args, 1)
            elif op == "==": self.count(node, args, 2)
            else: self.at_least(node, args, 1)
            return Prim(op, tuple(self.expr(arg) for arg in args))
        return parse

    def parse_lambda(self, node, args):
        self.count(node, args, 2)
        params = args[0]
        if not isinstance(params, Form) or not params.items:
            fail(params, "expecting a parameter list")
        body = self.expr(args[1])
        for param in reversed(params.items): body = Lambda(self.name(param), body)
        return body

    def parse_facet(self, node, args):
        self.count(node, args, 3)
        return FacetExpr(self.name(args[0]), self.expr(args[1]),
            self.expr(args[2]))

    def parse_label(self, node, args):
        self.count(node, args, 2)
        return LabelDecl(self.name(args[0]), self.expr(args[1]))

    def parse_restrict(self, node, args):
        self.count(node, args, 2)
        return Restrict(self.name(args[0]), self.expr(args[1]))

    def parse_row(self, node, args):
        return Row(tuple(self.expr(arg) for arg in args))

    def parse_select(self, node, args):
        self.count(node, args, 3)
        return Select(self.integer(args[0]), self.integer(args[1]),
            self.expr(args[2]))

    def parse_project(self, node, args):
        self.count(node, args, 2)
        if not isinstance(args[0], Form) or not args[0].items:
            fail(args[0], "expecting a list of column numbers")
        indices = tuple(self.integer(i) for i in args[0].items)
        return Project(indices, self.expr(args[1]))

    def parse_fold(self, node, args):
        self.count(node, args, 3)
        return Fold(*(self.expr(arg) for arg in args))

    def parse_empty_table(self, node, args):
        self.count(node, args, 1)
        return Const(BranchTable((), self.integer(args[0])))

    def parse_if(self, node, args):
        self.count(node, args, 3)
        return If(*(self.expr(arg) for arg in args))

    def parse_seq(self, node, args):
        self.at_least(node, args, 1)
        exprs = [self.expr(arg) for arg in args]
        result = exprs[-1]
        for expr in reversed(exprs[:-1]): result = Apply(Lambda("_", result), expr)
        return result

    def parse_table_ref(self, node, args):
        self.count(node, args, 1)
        name = self.name(args[0])
        if name not in self.tables: fail(args[0], "unknown table %r" % name)
        return Deref(Const(self.tables[name]))


def parse(source, tables=None, viewer=None):
    """Statements of a program.
    tables: table name -> address, for table-ref
    E.g. parse('(print stdout 1)')
      -> (Print(Const(FileHandle("stdout")), Const(1)),)"""
    return Parser(tables, viewer).program(read(tokenize(source)))


def quote(text):
    for c, escaped in (("\\", "\\\\"), ('"', '\\"'), ("\n", "\\n"),
        ("\t", "\\t")):
        text = text.replace(c, escaped)
    return '"%s"' % text


def label_text(label):
    return repr(label) if isinstance(label, Label) else label


KEYWORDS = {Ref: "ref", Deref: "deref", Assign: "set!", Join: "join",
    Union: "union", Fold: "fold", If: "if"}


def unparse(node):
    """Surface syntax of an expression, statement or value"""
    if isinstance(node, Var): return node.name
    if isinstance(node, Const): return unparse(node.value)
    if isinstance(node, Lambda):
        return "(lambda (%s) %s)" % (node.param, unparse(node.body))
    if isinstance(node, Apply):
        return "(%s %s)" % (unparse(node.fn), unparse(node.arg))
    if isinstance(node, FacetExpr):
        return "(facet %s %s %s)" % (label_text(node.label), unparse(node.high),
            unparse(node.low))
    if isinstance(node, LabelDecl):
        return "(label %s %s)" % (node.name, unparse(node.body))
    if isinstance(node, Restrict):
        return "(restrict %s %s)" % (label_text(node.label), unparse(node.policy))
    if isinstance(node, Row):
        return "(%s)" % " ".join(["row"]+[unparse(c) for c in node.cells])
    if isinstance(node, Select):
        return "(select %d %d %s)" % (node.i, node.j, unparse(node.table))
    if isinstance(node, Project):
        return "(project (%s) %s)" % (" ".join(str(i) for i in node.indices),
            unparse(node.table))
    if isinstance(node, Prim):
        return "(%s)" % " ".join([node.op]+[unparse(a) for a in node.args])
    if isinstance(node, Let):
        return "(let %s %s %s)" % (node.var, unparse(node.expr),
            unparse(node.body))
    if isinstance(node, Print):
        return "(print %s %s)" % (unparse(node.viewer), unparse(node.content))
    if type(node) in KEYWORDS:
        parts = [KEYWORDS[type(node)]]+[unparse(c) for c in subexpressions(node)]
        return "(%s)" % " ".join(parts)
    # values
    if isinstance(node, bool): return "true" if node else "false"
    if isinstance(node, int): return str(node)
    if isinstance(node, str): return quote(node)
    if isinstance(node, (FileHandle, Address, Label)): return repr(node)
    if isinstance(node, Closure):
        return "(lambda (%s) %s)" % (node.param, unparse(node.body))
    if isinstance(node, Facet):
        return "(facet %r %s %s)" % (node.label, unparse(node.high),
            unparse(node.low))
    if isinstance(node, BranchTable):
        rows = ["(%s)" % " ".join([guard_text(guard)]+[quote(c) for c in cells])
            for guard, cells in node.rows]
        return "(table %d%s)" % (node.arity, "".join(" "+r for r in rows))
    return repr(node)


def render(value):
    """Output text of a facet-free value. Strings print as they are, tables
    as rows in the persistence format."""
    if isinstance(value, str): return value
    if isinstance(value, BranchTable):
        return "\n".join(dump_row(row) for row in marshal(value))
    return unparse(value)


def format_event(event):
    channel = event.channel
    name = channel.name if isinstance(channel, FileHandle) else render(channel)
    return "%s: %s" % (name, render(event.payload))


def load_tables(engine, filenames, store=None):
    """Read persisted tables into references.
    Returns (store, name -> address, name -> columns)"""
    if store is None: store = Store()
    addresses, columns = {}, {}
    for filename in filenames:
        flat = read_table(filename)
        name = flat.name
        value = unmarshal(flat.rows, engine.label_env, engine.label_for,
            flat.arity)
        for guard, cells in value.rows:
            for branch in guard:
                if branch.label not in store.policies:
                    store = store.set_policy(branch.label, TRUE_POLICY)
        address = engine.new_address()
        store = store.write(address, value)
        addresses[name], columns[name] = address, flat.columns
        if DEBUG: debug("Loaded %s: %d rows at %r" %
            (name, len(flat.rows), address))
    return store, addresses, columns


def execute(engine, source, viewer, tables, dump_tables, lines):
    """Load tables, run the program and append the output lines to lines"""
    store, addresses, columns = load_tables(engine, tables)
    for name in dump_tables:
        if name not in addresses:
            raise FacetError("unknown table %r" % name)
    program = parse(source, addresses, viewer)
    for stmt in program:
        store, events = engine.exec(store, stmt)
        for event in events: lines.append(format_event(event)+"\n")
    for name in dump_tables:
        value = store.read(addresses[name])
        lines.append(dump_table(flat_table(name, columns[name], value)))


def run(source, viewer=None, pruning=None, tables=(), dump_tables=(),
    trace=None, out=None):
    """Run a program and write one line per output event to out.
    viewer: principal of stdout and stderr, also used to seed pruning
    tables: persisted table files, reachable with (table-ref Name)
    dump_tables: names of tables written to out after the run
    Return value: exit status"""
    if out is None: out = sys.stdout
    owner = FileHandle("stdout", viewer) if viewer is not None else None
    engine = Engine(pruning=pruning, trace=trace, viewer=owner)
    lines = []
    try:
        try: execute(engine, source, viewer, tables, dump_tables, lines)
        except SeedInvalidated as x:
            warning("%s: running the program again without pruning" % x)
            engine = Engine(pruning=False, trace=trace, viewer=owner)
            lines = []
            execute(engine, source, viewer, tables, dump_tables, lines)
    except (FacetError, OSError) as x:
        out.writelines(lines)
        error("%s" % x)
        return 1
    out.writelines(lines)
    if engine.trace: info("Rules fired: %r" % dict(engine.rule_counts))
    return 0


def main(argv=None):
    import argparse
    import logging
    parser = argparse.ArgumentParser(prog="facetdb",
        description="Run a faceted program and print what the viewer sees")
    parser.add_argument("program", help="program file, - for standard input")
    parser.add_argument("--viewer", help="principal reading the output")
    parser.add_argument("--pruning", choices=("on", "off"),
        default=environ.get("FACETDB_PRUNING", "on").strip().lower(),
        help="early pruning of facets the viewer cannot see (default on)")
    parser.add_argument("--table", action="append", default=[],
        metavar="FILE", help="persisted table to load (repeatable)")
    parser.add_argument("--dump-table", action="append", default=[],
        metavar="NAME", help="print a table in persistence format after the run")
    parser.add_argument("--trace", action="store_true",
        default=bool(environ.get("FACETDB_TRACE")),
        help="log every evaluation rule to standard error")
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr,
        level=logging.INFO if args.trace else logging.WARNING,
        format="%(levelname)s: %(message)s")
    try:
        if args.program == "-": source = sys.stdin.read()
        else:
            with open(args.program, encoding="utf-8") as f: source = f.read()
    except OSError as x:
        error("%s" % x)
        return 1
    return run(source, viewer=args.viewer, pruning=args.pruning == "on",
        tables=args.table, dump_tables=args.dump_table, trace=args.trace)


if __name__ == "__main__":
    sys.exit(main())
