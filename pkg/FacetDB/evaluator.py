"""
Faceted evaluation

Big-step evaluator  store, expr, pc => store', value  for the core
language: functions by substitution, references, faceted expressions,
labels with policies, and relational operators over faceted tables.

A strict operator that receives a faceted operand <k ? H : L> is
distributed over both facets: S[<k ? H : L>] evaluates <k ? S[H] : S[L]>.

E.g.
Engine().eval(Store(), FacetExpr(k, Row((Const("Alice"),)), Row((Const("Bob"),))))
  -> rows ({k}, ("Alice",)), ({!k}, ("Bob",))

Date created: 2026-10-18
Python Version: 3.7+
"""
from __future__ import annotations

__version__ = "1.0.0"

from logging import debug,info,warning,error
from collections import Counter
from dataclasses import dataclass, fields, replace
from os import environ
from typing import Tuple

from .core import (
    DEFAULT_ZERO, EMPTY, Address, Branch, BranchTable, Closure, Facet,
    FacetError, FileHandle, Label, MixedFacetShape, SeedInvalidated,
    StuckExpression,
    consistent, contradictory, guard_text, is_table, mk_facet,
    mk_facet_branches, neg, pos, same_value, zero_like,
)

DEBUG = False # Generate diagnostics messages?


def default_pruning():
    """Early pruning is on unless FACETDB_PRUNING says otherwise"""
    setting = environ.get("FACETDB_PRUNING", "on")
    return setting.strip().lower() not in ("off", "0", "no", "false")


class Expr:
    """Expression"""


class Statement:
    """Statement"""


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Const(Expr):
    """Any value, including facets, tables and closures"""
    value: object


@dataclass(frozen=True)
class Lambda(Expr):
    param: str
    body: Expr


@dataclass(frozen=True)
class Apply(Expr):
    fn: Expr
    arg: Expr


@dataclass(frozen=True)
class Ref(Expr):
    init: Expr


@dataclass(frozen=True)
class Deref(Expr):
    target: Expr


@dataclass(frozen=True)
class Assign(Expr):
    target: Expr
    value: Expr


@dataclass(frozen=True)
class FacetExpr(Expr):
    label: object # Label, or the name of a label not yet resolved
    high: Expr
    low: Expr


@dataclass(frozen=True)
class LabelDecl(Expr, Statement):
    name: str
    body: object # Expr or Statement


@dataclass(frozen=True)
class Restrict(Expr):
    label: object
    policy: Expr


@dataclass(frozen=True)
class Row(Expr):
    cells: Tuple[Expr, ...]


@dataclass(frozen=True)
class Select(Expr):
    """Rows whose cells i and j are equal (1-based)"""
    i: int
    j: int
    table: Expr


@dataclass(frozen=True)
class Project(Expr):
    indices: Tuple[int, ...]
    table: Expr


@dataclass(frozen=True)
class Join(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Union(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Fold(Expr):
    fn: Expr
    init: Expr
    table: Expr


@dataclass(frozen=True)
class If(Expr):
    cond: Expr
    then: Expr
    orelse: Expr


@dataclass(frozen=True)
class Prim(Expr):
    """Strict primitive operator: == and or not + concat principal"""
    op: str
    args: Tuple[Expr, ...]


@dataclass(frozen=True)
class Let(Statement):
    var: str
    expr: Expr
    body: Statement


@dataclass(frozen=True)
class Print(Statement):
    viewer: Expr
    content: Expr


VALUE_FORMS = (Const, Lambda)
PRIM_ARITY = {"==": 2, "not": 1, "principal": 1}
PRIMITIVES = ("==", "and", "or", "not", "+", "concat", "principal")


def is_node(x): return isinstance(x, (Expr, Statement))


def is_statement(node):
    """Let and Print, or a label declaration around a statement"""
    if isinstance(node, LabelDecl): return is_statement(node.body)
    return isinstance(node, (Let, Print))


def subexpressions(node):
    """Child expressions and statements of node"""
    for f in fields(node):
        value = getattr(node, f.name)
        if is_node(value): yield value
        elif isinstance(value, tuple):
            for item in value:
                if is_node(item): yield item


def map_children(node, function):
    """node with function applied to each child expression or statement"""
    changes = {}
    for f in fields(node):
        value = getattr(node, f.name)
        if is_node(value): changes[f.name] = function(value)
        elif isinstance(value, tuple) and any(is_node(x) for x in value):
            changes[f.name] = tuple(function(x) if is_node(x) else x
                for x in value)
    return replace(node, **changes) if changes else node


def subst(node, name, value):
    """node[name := value]. Values are closed, so Const is left alone."""
    if isinstance(node, Var):
        return Const(value) if node.name == name else node
    if isinstance(node, Const): return node
    if isinstance(node, Lambda) and node.param == name: return node
    if isinstance(node, Let) and node.var == name:
        return Let(node.var, subst(node.expr, name, value), node.body)
    return map_children(node, lambda child: subst(child, name, value))


def rename_label(node, name, label):
    """Replace the free label name in node by label"""
    if isinstance(node, Const): return node
    if isinstance(node, LabelDecl) and node.name == name: return node
    if isinstance(node, (FacetExpr, Restrict)) and node.label == name:
        node = replace(node, label=label)
    return map_children(node, lambda child: rename_label(child, name, label))


def apply_prim(op, args, expr=None):
    """Apply a primitive operator to facet-free arguments"""
    def need(kind):
        for arg in args:
            if type(arg) is not kind:
                raise StuckExpression("%s expects %s arguments, got %r" %
                    (op, kind.__name__, arg), expr)
    if op == "==": return same_value(args[0], args[1])
    if op == "and": need(bool); return all(args)
    if op == "or": need(bool); return any(args)
    if op == "not": need(bool); return not args[0]
    if op == "+": need(int); return sum(args)
    if op == "concat": need(str); return "".join(args)
    if op == "principal": need(FileHandle); return args[0].principal
    raise StuckExpression("unknown operator %r" % op, expr)


def prune(table, pc):
    """Rows of table whose guard is consistent with pc, in order
    E.g. prune(rows ({k},r1), ({!k},r2), pc={k}) -> ({k},r1)"""
    rows = tuple(row for row in table.rows if consistent(row[0], pc))
    if len(rows) == len(table.rows): return table
    return BranchTable(rows, table.arity)


class Engine(object):
    """Faceted evaluator. One engine holds the allocation counters, the
    rule counts and the pruning options of one run."""
    def __init__(self, pruning=None, trace=None, viewer=None, seed=(),
        next_label=1, next_address=1):
        """pruning: drop table rows inconsistent with pc
        viewer: output context (e.g. FileHandle) used to seed pruning
        seed: branches known to hold for the eventual viewer"""
        if pruning is None: pruning = default_pruning()
        if trace is None: trace = bool(environ.get("FACETDB_TRACE"))
        self.pruning = pruning
        self.trace = trace
        self.viewer = viewer
        self.seed = frozenset(seed)
        self.next_label = next_label
        self.next_address = next_address
        self.label_env = {} # name -> Label
        self.rule_counts = Counter()
        self.facets = 0 # number of Facet nodes constructed
        self.seeding = set() # labels whose policies are being checked

    def new_label(self, name="k"):
        """Fresh label. Its name is unique within this engine."""
        label_id = self.next_label
        self.next_label += 1
        unique, suffix = name, label_id
        while unique in self.label_env:
            unique = "%s_%d" % (name, suffix)
            suffix += 1
        label = Label(label_id, unique)
        self.label_env[unique] = label
        return label

    def label_for(self, name):
        """Label bound to name, created on first use"""
        if name in self.label_env: return self.label_env[name]
        return self.new_label(name)

    def new_address(self):
        address = Address(self.next_address)
        self.next_address += 1
        return address

    def fire(self, rule, expr, pc):
        self.rule_counts[rule] += 1
        if self.trace:
            from .cli import unparse
            info("%s %s pc=%s" % (rule, unparse(expr), guard_text(pc)))

    def mk_facet(self, k, high, low):
        value = mk_facet(k, high, low)
        if isinstance(value, Facet): self.facets += 1
        return value

    def mk_facet_branches(self, B, high, low):
        return mk_facet_branches(B, high, low, mk_facet=self.mk_facet)

    def guarded(self, B, high, low, expr):
        """<<B ? high : low>>, reporting shape errors against expr"""
        try: return self.mk_facet_branches(B, high, low)
        except MixedFacetShape as x: raise StuckExpression(str(x), expr)

    def known(self, pc):
        """Branches that decide facets: pc, plus the pruning seed"""
        if self.pruning and self.seed: return pc | self.seed
        return pc

    def eval(self, store, expr, pc=EMPTY):
        """store, expr, pc => (store', value)"""
        method = getattr(self, "eval_"+type(expr).__name__, None)
        if method is None: raise StuckExpression("not an expression", expr)
        store, value = method(store, expr, pc)
        if self.pruning and is_table(value):
            pruned = prune(value, self.known(pc))
            if pruned is not value:
                self.fire("f-prune", expr, pc)
                value = pruned
        return store, value

    def operand(self, store, expr, pc):
        if not isinstance(expr, VALUE_FORMS): self.fire("f-ctxt", expr, pc)
        return self.eval(store, expr, pc)

    def split(self, store, facet, rebuild, pc, expr):
        """S[<k ? H : L>] => <k ? S[H] : S[L]>"""
        self.fire("f-strict", expr, pc)
        split = FacetExpr(facet.label, rebuild(Const(facet.high)),
            rebuild(Const(facet.low)))
        return self.eval(store, split, pc)

    def strict_sequence(self, store, exprs, pc, rebuild, expr):
        """Evaluate exprs left to right. On the first faceted value, split
        with the remaining operands unevaluated.
        Returns (store, values, None) or (store, None, result)"""
        values = []
        for index, operand in enumerate(exprs):
            store, value = self.operand(store, operand, pc)
            if isinstance(value, Facet):
                done = tuple(Const(v) for v in values)
                rest = tuple(exprs[index+1:])
                store, result = self.split(store, value,
                    lambda v: rebuild(done+(v,)+rest), pc, expr)
                return store, None, result
            values.append(value)
        return store, values, None

    def table_operand(self, value, expr):
        if not is_table(value):
            raise StuckExpression("expected a table, got %r" % (value,), expr)
        return value

    def resolve_label(self, label, expr):
        if isinstance(label, Label): return label
        if label in self.label_env: return self.label_env[label]
        raise StuckExpression("undeclared label %r" % (label,), expr)

    def eval_Const(self, store, expr, pc):
        self.fire("f-val", expr, pc)
        return store, expr.value

    def eval_Lambda(self, store, expr, pc):
        self.fire("f-val", expr, pc)
        return store, Closure(expr.param, expr.body)

    def eval_Var(self, store, expr, pc):
        raise StuckExpression("unbound variable %s" % expr.name, expr)

    def eval_Apply(self, store, expr, pc):
        store, fn = self.operand(store, expr.fn, pc)
        if isinstance(fn, Facet):
            return self.split(store, fn, lambda f: Apply(f, expr.arg), pc, expr)
        if not isinstance(fn, Closure):
            raise StuckExpression("not a function: %r" % (fn,), expr)
        store, arg = self.operand(store, expr.arg, pc)
        self.fire("f-app", expr, pc)
        return self.eval(store, subst(fn.body, fn.param, arg), pc)

    def eval_Ref(self, store, expr, pc):
        store, value = self.operand(store, expr.init, pc)
        address = self.new_address()
        self.fire("f-ref", expr, pc)
        value = self.guarded(pc, value, zero_like(value), expr)
        return store.write(address, value), address

    def eval_Deref(self, store, expr, pc):
        store, target = self.operand(store, expr.target, pc)
        if isinstance(target, Facet):
            return self.split(store, target, Deref, pc, expr)
        if not isinstance(target, Address):
            raise StuckExpression("not an address: %r" % (target,), expr)
        if target not in store.heap:
            self.fire("f-deref-null", expr, pc)
            return store, DEFAULT_ZERO
        self.fire("f-deref", expr, pc)
        value = store.heap[target]
        if self.pruning and self.viewer is not None and is_table(value):
            self.seed_from_viewer(store, value)
        return store, value

    def eval_Assign(self, store, expr, pc):
        store, target = self.operand(store, expr.target, pc)
        store, value = self.operand(store, expr.value, pc)
        if isinstance(target, Facet):
            return self.split(store, target,
                lambda t: Assign(t, Const(value)), pc, expr)
        if not isinstance(target, Address):
            raise StuckExpression("not an address: %r" % (target,), expr)
        old = store.read(target, DEFAULT_ZERO)
        if is_table(value) and same_value(old, DEFAULT_ZERO):
            old = zero_like(value)
        self.fire("f-assign", expr, pc)
        return store.write(target, self.guarded(pc, value, old, expr)), value

    def eval_FacetExpr(self, store, expr, pc):
        label = self.resolve_label(expr.label, expr)
        known = self.known(pc)
        if pos(label) in known:
            self.fire("f-left", expr, pc)
            return self.eval(store, expr.high, pc)
        if neg(label) in known:
            self.fire("f-right", expr, pc)
            return self.eval(store, expr.low, pc)
        self.fire("f-split", expr, pc)
        store, high = self.eval(store, expr.high, pc | {pos(label)})
        store, low = self.eval(store, expr.low, pc | {neg(label)})
        try: return store, self.mk_facet(label, high, low)
        except MixedFacetShape as x: raise StuckExpression(str(x), expr)

    def eval_LabelDecl(self, store, expr, pc):
        from .policy import declare_label
        return declare_label(self, store, expr.name, expr.body, pc)

    def eval_Restrict(self, store, expr, pc):
        from .policy import strengthen
        label = self.resolve_label(expr.label, expr)
        store, policy = self.operand(store, expr.policy, pc)
        store = strengthen(self, store, label, policy, pc, expr)
        self.fire("f-restrict", expr, pc)
        return store, policy

    def eval_Row(self, store, expr, pc):
        store, cells, result = self.strict_sequence(store, expr.cells, pc,
            Row, expr)
        if cells is None: return store, result
        for cell in cells:
            if not isinstance(cell, str):
                raise StuckExpression("row cells must be strings, got %r" %
                    (cell,), expr)
        self.fire("f-row", expr, pc)
        return store, BranchTable(((EMPTY, tuple(cells)),), len(cells))

    def eval_Select(self, store, expr, pc):
        store, table = self.operand(store, expr.table, pc)
        if isinstance(table, Facet):
            return self.split(store, table,
                lambda t: Select(expr.i, expr.j, t), pc, expr)
        table = self.table_operand(table, expr)
        self.check_columns((expr.i, expr.j), table, expr)
        self.fire("f-select", expr, pc)
        i, j = expr.i-1, expr.j-1
        rows = tuple(row for row in table.rows if row[1][i] == row[1][j])
        return store, BranchTable(rows, table.arity)

    def eval_Project(self, store, expr, pc):
        store, table = self.operand(store, expr.table, pc)
        if isinstance(table, Facet):
            return self.split(store, table,
                lambda t: Project(expr.indices, t), pc, expr)
        table = self.table_operand(table, expr)
        self.check_columns(expr.indices, table, expr)
        self.fire("f-project", expr, pc)
        rows = tuple((guard, tuple(cells[i-1] for i in expr.indices))
            for guard, cells in table.rows)
        return store, BranchTable(rows, len(expr.indices))

    def check_columns(self, indices, table, expr):
        for i in indices:
            if not 1 <= i <= table.arity:
                raise StuckExpression("column %d out of range 1..%d" %
                    (i, table.arity), expr)

    def table_pair(self, store, expr, pc, rebuild):
        """Both operands of a binary table operator, or the result of
        splitting on a faceted one"""
        store, left = self.operand(store, expr.left, pc)
        store, right = self.operand(store, expr.right, pc)
        if isinstance(left, Facet):
            store, result = self.split(store, left,
                lambda t: rebuild(t, Const(right)), pc, expr)
            return store, None, result
        left = self.table_operand(left, expr)
        if isinstance(right, Facet):
            store, result = self.split(store, right,
                lambda t: rebuild(Const(left), t), pc, expr)
            return store, None, result
        return store, (left, self.table_operand(right, expr)), None

    def eval_Join(self, store, expr, pc):
        store, tables, result = self.table_pair(store, expr, pc, Join)
        if tables is None: return store, result
        left, right = tables
        self.fire("f-join", expr, pc)
        rows = []
        for guard1, cells1 in left.rows:
            for guard2, cells2 in right.rows:
                guard = guard1 | guard2
                if contradictory(guard): continue # visible to no view
                rows.append((guard, cells1+cells2))
        return store, BranchTable(tuple(rows), left.arity+right.arity)

    def eval_Union(self, store, expr, pc):
        store, tables, result = self.table_pair(store, expr, pc, Union)
        if tables is None: return store, result
        left, right = tables
        if left.arity != right.arity:
            raise StuckExpression("union of tables of arity %d and %d" %
                (left.arity, right.arity), expr)
        self.fire("f-union", expr, pc)
        return store, BranchTable(left.rows+right.rows, left.arity)

    def eval_Fold(self, store, expr, pc):
        store, fn = self.operand(store, expr.fn, pc)
        store, acc = self.operand(store, expr.init, pc)
        store, table = self.operand(store, expr.table, pc)
        if isinstance(table, Facet):
            return self.split(store, table,
                lambda t: Fold(Const(fn), Const(acc), t), pc, expr)
        table = self.table_operand(table, expr)
        self.fire("f-fold-empty", expr, pc)
        known = self.known(pc)
        for guard, cells in reversed(table.rows):
            if not consistent(guard, known):
                self.fire("f-fold-inconsistent", expr, pc)
                continue
            self.fire("f-fold-consistent", expr, pc)
            call = Const(fn)
            for cell in cells: call = Apply(call, Const(cell))
            store, result = self.eval(store, Apply(call, Const(acc)), pc | guard)
            acc = self.guarded(guard, result, acc, expr)
        return store, acc

    def eval_If(self, store, expr, pc):
        store, cond = self.operand(store, expr.cond, pc)
        if isinstance(cond, Facet):
            return self.split(store, cond,
                lambda c: If(c, expr.then, expr.orelse), pc, expr)
        if type(cond) is not bool:
            raise StuckExpression("condition is not a boolean: %r" %
                (cond,), expr)
        return self.eval(store, expr.then if cond else expr.orelse, pc)

    def eval_Prim(self, store, expr, pc):
        arity = PRIM_ARITY.get(expr.op)
        if arity is not None and len(expr.args) != arity or not expr.args:
            raise StuckExpression("wrong number of arguments for %s" %
                expr.op, expr)
        store, args, result = self.strict_sequence(store, expr.args, pc,
            lambda args: Prim(expr.op, args), expr)
        if args is None: return store, result
        return store, apply_prim(expr.op, args, expr)

    def seed_from_viewer(self, store, table):
        """Decide the labels guarding the rows of table from their policies
        applied to the viewer, where that gives a plain boolean."""
        for guard, cells in table.rows:
            for branch in guard:
                label = branch.label
                if label in self.seeding: continue
                if pos(label) in self.seed or neg(label) in self.seed: continue
                allowed = self.viewer_allows(store, label)
                if allowed is not None:
                    if DEBUG: debug("Seeding %s=%s" % (label, allowed))
                    self.seed = self.seed | {Branch(label, allowed)}

    def viewer_allows(self, store, label):
        """The policy of label applied to the viewer, if that gives a plain
        boolean, else None"""
        from .policy import policy_of
        self.seeding.add(label)
        try:
            check = Apply(Const(policy_of(store, label)), Const(self.viewer))
            _, allowed = self.eval(store, check, frozenset([pos(label)]))
        except FacetError as x:
            warning("Policy of %s not evaluated for pruning: %s" % (label, x))
            return None
        finally: self.seeding.discard(label)
        return allowed if type(allowed) is bool else None

    def exec(self, store, stmt):
        """Run a statement. Returns (store', output events).
        If a pruning seed made during this statement turns out wrong, the
        statement runs again from store with pruning off. A seed made by an
        earlier statement raises SeedInvalidated."""
        seed = self.seed
        counters = self.next_label, self.next_address, dict(self.label_env)
        events = []
        try: store = self.run_statement(store, stmt, events)
        except SeedInvalidated as x:
            if seed or not self.pruning: raise
            warning("%s: running the statement again without pruning" % x)
            self.pruning, self.seed = False, EMPTY
            self.next_label, self.next_address, self.label_env = counters
            events = []
            store = self.run_statement(store, stmt, events)
        return store, events

    def run_statement(self, store, stmt, events):
        if isinstance(stmt, Let):
            store, value = self.eval(store, stmt.expr, EMPTY)
            return self.run_statement(store, subst(stmt.body, stmt.var, value),
                events)
        if isinstance(stmt, Print):
            from .policy import resolve_print
            store, event = resolve_print(self, store, stmt.viewer, stmt.content)
            self.fire("f-print", stmt, EMPTY)
            events.append(event)
            return store
        if isinstance(stmt, LabelDecl):
            from .policy import declare_label
            store, _ = declare_label(self, store, stmt.name, stmt.body,
                events=events)
            return store
        raise StuckExpression("not a statement", stmt)


def eval(store, expr, pc=EMPTY, **options):
    """Evaluate expr with a new Engine(**options)"""
    return Engine(**options).eval(store, expr, frozenset(pc))


def exec(store, stmt, **options):
    """Run stmt with a new Engine(**options)"""
    return Engine(**options).exec(store, stmt)
