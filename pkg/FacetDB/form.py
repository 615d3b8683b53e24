"""
Faceted object-relational mapping

A faceted table is stored as plain relational rows with two extra
meta-columns: jid, shared by all facets of one logical record, and jvars,
the label bindings under which a row exists.

E.g. the record <k ? ("Carol's surprise party","Schloss Dagstuhl") :
("Private event","Undisclosed location")> is stored as
  1  k=True   Carol's surprise party  Schloss Dagstuhl
  1  k=False  Private event           Undisclosed location

Persistence format (UTF-8):
  #table <name> <column> ...
  <jid> TAB <jvars> TAB <cell> TAB ...
Cells escape backslash, tab and newline with a backslash. Empty jvars are
written as "-".

Date created: 2026-10-18
Python Version: 3.7+
"""
from __future__ import annotations

__version__ = "1.0.0"

from logging import debug,info,warning,error
from dataclasses import dataclass, replace
from threading import Lock
from typing import Tuple

from .core import (
    EMPTY, Branch, BranchTable, ContradictoryGuard, Facet, FacetError, Label,
    contradictory, is_table, mk_facet, mk_facet_branches,
)

DEBUG = False # Generate diagnostics messages?
lock = Lock() # serializes writers of persisted tables


class FormError(FacetError):
    """Flat table error"""


class MalformedJvars(FormError):
    def __init__(self, message, offset):
        FormError.__init__(self, "%s at offset %d" % (message, offset))
        self.offset = offset


class UnknownColumn(FormError):
    def __init__(self, column):
        FormError.__init__(self, "unknown column %r" % (column,))
        self.column = column


class TableFormatError(FormError):
    def __init__(self, message, line):
        FormError.__init__(self, "line %d: %s" % (line, message))
        self.line = line


JVars = Tuple[Tuple[str, bool], ...]


@dataclass(frozen=True)
class FlatRow:
    jid: int
    jvars: JVars
    cells: Tuple[str, ...]


@dataclass(frozen=True)
class FlatTable:
    name: str
    columns: Tuple[str, ...]
    rows: Tuple[FlatRow, ...] = ()

    @property
    def arity(self): return len(self.columns)

    def column(self, name):
        """Index of column name"""
        try: return self.columns.index(name)
        except ValueError: raise UnknownColumn(name)

    def next_jid(self):
        return max((row.jid for row in self.rows), default=0)+1

    def with_rows(self, rows):
        return replace(self, rows=tuple(rows))


def parse_jvars(text):
    """"k1=True,k2=False" -> (("k1",True),("k2",False))"""
    if text == "": return ()
    bindings = {}
    offset = 0
    for item in text.split(","):
        name, sep, value = item.partition("=")
        if not sep:
            raise MalformedJvars("expecting name=True or name=False", offset)
        if not name:
            raise MalformedJvars("empty label name", offset)
        if value not in ("True", "False"):
            raise MalformedJvars("expecting True or False, got %r" % value,
                offset+len(name.encode("utf-8"))+1)
        if name in bindings:
            raise MalformedJvars("duplicate label %r" % name, offset)
        bindings[name] = value == "True"
        offset += len(item.encode("utf-8"))+1
    return tuple(sorted(bindings.items()))


def serialize_jvars(jvars):
    return ",".join("%s=%s" % (name, value) for name, value in sorted(jvars))


def jvars_of_guard(guard):
    if contradictory(guard): raise ContradictoryGuard(guard)
    return tuple(sorted((b.label.name, b.positive) for b in guard))


def jvars_contradict(jvars1, jvars2):
    values = dict(jvars1)
    return any(name in values and values[name] != value
        for name, value in jvars2)


def merge_jvars(jvars1, jvars2):
    """Union of two bindings, None if they contradict"""
    if jvars_contradict(jvars1, jvars2): return None
    return tuple(sorted(set(jvars1) | set(jvars2)))


def as_table(value):
    """BranchTable for a table, a row of strings, or a faceted tree of
    either"""
    if is_table(value): return value
    if isinstance(value, Facet):
        return mk_facet(value.label, as_table(value.high), as_table(value.low))
    if isinstance(value, tuple) and all(isinstance(c, str) for c in value):
        return BranchTable(((EMPTY, value),), len(value))
    raise FormError("cannot store %r as table rows" % (value,))


def marshal(value, next_jid=1, jid=None):
    """Flat rows for a faceted table.
    Consecutive rows whose guards pairwise contradict are facets of one
    record and share a jid. With jid given, all rows get that jid."""
    table = as_table(value)
    rows, group = [], []
    for guard, cells in table.rows:
        jvars = jvars_of_guard(guard)
        if jid is None and (not group or
            not all(jvars_contradict(jvars, other) for other in group)):
            group = []
            if rows: next_jid += 1
        group.append(jvars)
        rows.append(FlatRow(next_jid if jid is None else jid, jvars, cells))
    return rows


def unmarshal(rows, label_env, new_label=None, arity=None):
    """BranchTable for flat rows, jid erased.
    label_env maps label names to labels. Names not bound there are created
    with new_label(name) and added to label_env."""
    table_rows = []
    for row in rows:
        guard = set()
        for name, value in row.jvars:
            if name not in label_env:
                if new_label is None:
                    raise FormError("unbound label %r" % name)
                label_env[name] = new_label(name)
            guard.add(Branch(label_env[name], value))
        table_rows.append((frozenset(guard), tuple(row.cells)))
    if arity is None: arity = len(table_rows[0][1]) if table_rows else 0
    return BranchTable(tuple(table_rows), arity)


def query_select(table, column, constant):
    """Rows whose column equals constant"""
    i = table.column(column)
    return [row for row in table.rows if row.cells[i] == constant]


def query_join(left, right, left_fk):
    """Equi-join of left.left_fk with right.jid. Joined rows carry the
    cells of both sides and the union of both jvars. Rows whose jvars
    contradict are dropped."""
    i = left.column(left_fk)
    by_jid = {}
    for row in right.rows: by_jid.setdefault(str(row.jid), []).append(row)
    joined = []
    for row in left.rows:
        for other in by_jid.get(row.cells[i], []):
            jvars = merge_jvars(row.jvars, other.jvars)
            if jvars is None: continue
            joined.append(FlatRow(row.jid, jvars, row.cells+other.cells))
    return joined


def query_sort(table, column, ascending=True):
    """Rows sorted by column, stable"""
    i = table.column(column)
    return sorted(table.rows, key=lambda row: row.cells[i],
        reverse=not ascending)


def save(table, jid, cells, pc=EMPTY):
    """Write cells to record jid under program counter pc.
    Other facets of the record survive under the negation of pc."""
    pc = frozenset(pc)
    if contradictory(pc): raise ContradictoryGuard(pc)
    cells = tuple(cells)
    if len(cells) != table.arity:
        raise FormError("%d cells for %d columns" % (len(cells), table.arity))
    label_env = {b.label.name: b.label for b in pc}
    local = iter(range(-1, -10**9, -1))
    def new_label(name): return Label(next(local), name)
    old_rows = [row for row in table.rows if row.jid == jid]
    old = unmarshal(old_rows, label_env, new_label, table.arity)
    new = BranchTable(((EMPTY, cells),), table.arity)
    rows = marshal(mk_facet_branches(pc, new, old), jid=jid)
    if DEBUG: debug("save jid %d: %d rows -> %d rows" %
        (jid, len(old_rows), len(rows)))
    updated, written = [], False
    for row in table.rows:
        if row.jid != jid: updated.append(row)
        elif not written: updated.extend(rows); written = True
    if not written: updated.extend(rows)
    return table.with_rows(updated)


def prune_fetch(table, assignment):
    """Rows whose jvars do not contradict a partial label assignment.
    assignment maps labels or label names to booleans."""
    known = tuple((label.name if isinstance(label, Label) else label, value)
        for label, value in assignment.items())
    return [row for row in table.rows if not jvars_contradict(known, row.jvars)]


def flat_table(name, columns, value, next_jid=1):
    return FlatTable(name, tuple(columns), tuple(marshal(value, next_jid)))


ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n"}
UNESCAPES = {"\\": "\\", "t": "\t", "n": "\n"}


def escape(cell): return "".join(ESCAPES.get(c, c) for c in cell)


def unescape(text, line):
    chars, i = [], 0
    while i < len(text):
        c = text[i]
        if c == "\\":
            if i+1 >= len(text) or text[i+1] not in UNESCAPES:
                raise TableFormatError("bad escape in %r" % text, line)
            chars.append(UNESCAPES[text[i+1]])
            i += 2
        else:
            chars.append(c)
            i += 1
    return "".join(chars)


def dump_row(row):
    jvars = serialize_jvars(row.jvars) or "-"
    return "\t".join([str(row.jid), jvars]+[escape(c) for c in row.cells])


def dump_table(table):
    """Persistence text of table"""
    lines = [" ".join(["#table", table.name]+list(table.columns))]
    lines += [dump_row(row) for row in table.rows]
    return "\n".join(lines)+"\n"


def load_table(text):
    """FlatTable from persistence text"""
    lines = text.split("\n")
    if lines and lines[-1] == "": lines.pop()
    if not lines or not lines[0].startswith("#table "):
        raise TableFormatError("expecting '#table <name> <columns>'", 1)
    header = lines[0].split()
    if len(header) < 2: raise TableFormatError("missing table name", 1)
    name, columns = header[1], tuple(header[2:])
    rows = []
    for number, line in enumerate(lines[1:], 2):
        fields = line.split("\t")
        if len(fields) != len(columns)+2:
            raise TableFormatError("expecting %d fields, got %d" %
                (len(columns)+2, len(fields)), number)
        try: jid = int(fields[0])
        except ValueError: raise TableFormatError("bad jid %r" % fields[0],
            number)
        if jid < 1: raise TableFormatError("jid must be positive", number)
        jvars = parse_jvars("" if fields[1] == "-" else fields[1])
        cells = tuple(unescape(f, number) for f in fields[2:])
        rows.append(FlatRow(jid, jvars, cells))
    return FlatTable(name, columns, tuple(rows))


def read_table(filename):
    with open(filename, encoding="utf-8") as f: return load_table(f.read())


def write_table(filename, table):
    with lock:
        with open(filename, "w", encoding="utf-8") as f:
            f.write(dump_table(table))
