"""
View projection and property checks

project_value / project_expr / project_store erase facets relative to a
view L (the set of labels a principal may see). The plain evaluator runs
projected programs without facets. The checks compare faceted evaluation
against it:

projection:       L(eval(store, e, pc)) == eval_plain(L(store), L(e))
                  for every view L that sees pc
non-interference: L-equivalent inputs give L-equivalent results

Programs for the checks come from a seeded generator of well-typed
expressions.

Date created: 2026-10-18
Python Version: 3.7+
"""
from __future__ import annotations

__version__ = "1.0.0"

from logging import debug,info,warning,error; import traceback
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from itertools import combinations

import numpy

from .core import (
    EMPTY, Address, Branch, BranchTable, Closure, Facet, FileHandle, Label,
    Store, StuckExpression, is_table, neg, pos, same_value, visible,
)
from .evaluator import (
    Apply, Assign, Const, Deref, Engine, Expr, FacetExpr, Fold, If, Join,
    LabelDecl, Lambda, Prim, Project, Ref, Restrict, Row, Select, Statement,
    Union, Var, apply_prim, map_children, rename_label, subst,
)
from .policy import TRUE_POLICY, conj_f, conjuncts, is_policy, labels_of

DEBUG = False # Generate diagnostics messages?
max_depth = 3 # depth of generated expressions


def project_value(L, value):
    """value as seen by view L
    E.g. project_value({k}, Facet(k,1,2)) -> 1"""
    if isinstance(value, Facet):
        return project_value(L, value.high if value.label in L else value.low)
    if isinstance(value, BranchTable):
        rows = tuple((EMPTY, cells) for guard, cells in value.rows
            if visible(guard, L))
        return BranchTable(rows, value.arity)
    if isinstance(value, Closure):
        return Closure(value.param, project_expr(L, value.body))
    return value


def project_expr(L, expr):
    """expr with every faceted expression and value replaced by the side
    L sees. Labels still referred to by name are left alone."""
    if isinstance(expr, FacetExpr) and isinstance(expr.label, Label):
        return project_expr(L, expr.high if expr.label in L else expr.low)
    if isinstance(expr, Const): return Const(project_value(L, expr.value))
    return map_children(expr, lambda child: project_expr(L, child))


def project_store(L, store):
    heap = {a: project_value(L, v) for a, v in store.heap.items()}
    policies = {k: project_value(L, p) for k, p in store.policies.items()}
    return Store(heap, policies)


class PlainEvaluator(object):
    """Call-by-value evaluator without facets. A faceted expression
    evaluates only the side the view sees."""
    def __init__(self, view=EMPTY, label_env=None, next_label=1,
        next_address=1):
        self.view = frozenset(view)
        self.label_env = dict(label_env or {})
        self.next_label = next_label
        self.next_address = next_address

    def eval(self, store, expr):
        method = getattr(self, "eval_"+type(expr).__name__, None)
        if method is None: raise StuckExpression("not an expression", expr)
        return method(store, expr)

    def label(self, label, expr):
        if isinstance(label, Label): return label
        if label in self.label_env: return self.label_env[label]
        raise StuckExpression("undeclared label %r" % (label,), expr)

    def table(self, value, expr):
        if not is_table(value):
            raise StuckExpression("expected a table, got %r" % (value,), expr)
        return value

    def eval_Const(self, store, expr):
        if isinstance(expr.value, Facet):
            raise StuckExpression("faceted value in plain evaluation", expr)
        return store, expr.value

    def eval_Var(self, store, expr):
        raise StuckExpression("unbound variable %s" % expr.name, expr)

    def eval_Lambda(self, store, expr):
        return store, Closure(expr.param, expr.body)

    def eval_Apply(self, store, expr):
        store, fn = self.eval(store, expr.fn)
        if not isinstance(fn, Closure):
            raise StuckExpression("not a function: %r" % (fn,), expr)
        store, arg = self.eval(store, expr.arg)
        return self.eval(store, subst(fn.body, fn.param, arg))

    def eval_Ref(self, store, expr):
        store, value = self.eval(store, expr.init)
        address = Address(self.next_address)
        self.next_address += 1
        return store.write(address, value), address

    def eval_Deref(self, store, expr):
        store, address = self.eval(store, expr.target)
        if not isinstance(address, Address):
            raise StuckExpression("not an address: %r" % (address,), expr)
        return store, store.read(address, 0)

    def eval_Assign(self, store, expr):
        store, address = self.eval(store, expr.target)
        store, value = self.eval(store, expr.value)
        if not isinstance(address, Address):
            raise StuckExpression("not an address: %r" % (address,), expr)
        return store.write(address, value), value

    def eval_FacetExpr(self, store, expr):
        label = self.label(expr.label, expr)
        return self.eval(store, expr.high if label in self.view else expr.low)

    def eval_LabelDecl(self, store, expr):
        label = Label(self.next_label, expr.name)
        self.next_label += 1
        store = store.set_policy(label, TRUE_POLICY)
        body = rename_label(expr.body, expr.name, label)
        return self.eval(store, project_expr(self.view, body))

    def eval_Restrict(self, store, expr):
        label = self.label(expr.label, expr)
        store, policy = self.eval(store, expr.policy)
        if not is_policy(policy):
            raise StuckExpression("policy must be a function", expr)
        check = policy if label in self.view else TRUE_POLICY
        old = store.policy(label, TRUE_POLICY)
        return store.set_policy(label, conj_f(old, check)), policy

    def eval_Row(self, store, expr):
        cells = []
        for cell in expr.cells:
            store, value = self.eval(store, cell)
            if not isinstance(value, str):
                raise StuckExpression("row cells must be strings", expr)
            cells.append(value)
        return store, BranchTable(((EMPTY, tuple(cells)),), len(cells))

    def eval_Select(self, store, expr):
        store, t = self.eval(store, expr.table)
        t = self.table(t, expr)
        if not (1 <= expr.i <= t.arity and 1 <= expr.j <= t.arity):
            raise StuckExpression("column out of range", expr)
        rows = tuple(r for r in t.rows if r[1][expr.i-1] == r[1][expr.j-1])
        return store, BranchTable(rows, t.arity)

    def eval_Project(self, store, expr):
        store, t = self.eval(store, expr.table)
        t = self.table(t, expr)
        if not all(1 <= i <= t.arity for i in expr.indices):
            raise StuckExpression("column out of range", expr)
        rows = tuple((g, tuple(c[i-1] for i in expr.indices)) for g, c in t.rows)
        return store, BranchTable(rows, len(expr.indices))

    def eval_Join(self, store, expr):
        store, left = self.eval(store, expr.left)
        store, right = self.eval(store, expr.right)
        left, right = self.table(left, expr), self.table(right, expr)
        rows = tuple((EMPTY, c1+c2) for _, c1 in left.rows for _, c2 in right.rows)
        return store, BranchTable(rows, left.arity+right.arity)

    def eval_Union(self, store, expr):
        store, left = self.eval(store, expr.left)
        store, right = self.eval(store, expr.right)
        left, right = self.table(left, expr), self.table(right, expr)
        if left.arity != right.arity:
            raise StuckExpression("union of different arities", expr)
        return store, BranchTable(left.rows+right.rows, left.arity)

    def eval_Fold(self, store, expr):
        store, fn = self.eval(store, expr.fn)
        store, acc = self.eval(store, expr.init)
        store, t = self.eval(store, expr.table)
        for _, cells in reversed(self.table(t, expr).rows):
            call = Const(fn)
            for cell in cells: call = Apply(call, Const(cell))
            store, acc = self.eval(store, Apply(call, Const(acc)))
        return store, acc

    def eval_If(self, store, expr):
        store, cond = self.eval(store, expr.cond)
        if type(cond) is not bool:
            raise StuckExpression("condition is not a boolean", expr)
        return self.eval(store, expr.then if cond else expr.orelse)

    def eval_Prim(self, store, expr):
        args = []
        for arg in expr.args:
            store, value = self.eval(store, arg)
            args.append(value)
        return store, apply_prim(expr.op, args, expr)


def eval_plain(store, expr, view=EMPTY, **options):
    """Evaluate a facet-free program. Returns (store, value)."""
    return PlainEvaluator(view, **options).eval(store, expr)


def canonical(store, value=None, fresh_from=1):
    """Comparable form of a projected (store, value).
    Addresses from fresh_from on are numbered in order of first appearance,
    the value first, then the heap in address order. Cells holding 0 or an
    empty table and policies equivalent to the default are left out.
    Closures are compared up to renaming of parameters."""
    names = {}
    def address(a):
        if a.id < fresh_from: return ("addr", a.id)
        if a not in names: names[a] = len(names)
        return ("fresh", names[a])
    def value_form(v):
        if isinstance(v, bool): return ("bool", v)
        if isinstance(v, int): return ("int", v)
        if isinstance(v, str): return ("str", v)
        if isinstance(v, Address): return address(v)
        if isinstance(v, FileHandle): return ("file", v.name, v.principal)
        if isinstance(v, Facet):
            return ("facet", v.label.id, value_form(v.high), value_form(v.low))
        if isinstance(v, BranchTable):
            return ("table", v.arity, tuple((guard_form(g), c) for g, c in v.rows))
        if isinstance(v, Closure):
            return ("fn", expr_form(v.body, {v.param: 0}))
        if v is None: return ("none",)
        return ("other", repr(v))
    def guard_form(guard):
        return tuple(sorted((b.label.id, b.positive) for b in guard))
    def expr_form(e, bound):
        if isinstance(e, Var):
            return ("var", bound[e.name]) if e.name in bound else ("free", e.name)
        if isinstance(e, Const): return ("const", value_form(e.value))
        if isinstance(e, Lambda):
            inner = dict(bound); inner[e.param] = len(bound)
            return ("lambda", expr_form(e.body, inner))
        parts = [type(e).__name__]
        for f in fields(e):
            x = getattr(e, f.name)
            if isinstance(x, (Expr, Statement)): parts.append(expr_form(x, bound))
            elif isinstance(x, tuple):
                parts.append(tuple(expr_form(i, bound)
                    if isinstance(i, (Expr, Statement)) else i for i in x))
            elif isinstance(x, Label): parts.append(("label", x.id))
            else: parts.append(x)
        return tuple(parts)
    true_form = value_form(TRUE_POLICY)
    def policy_form(policy):
        forms = [value_form(p) for p in conjuncts(policy)]
        forms = tuple(f for f in forms if f != true_form)
        return forms or None
    result = value_form(value)
    heap = []
    for a in sorted(store.heap):
        v = store.heap[a]
        if same_value(v, 0) or is_table(v) and not v.rows: continue
        key = address(a)
        heap.append((key, value_form(v)))
    policies = []
    for label in sorted(store.policies):
        form = policy_form(store.policies[label])
        if form is not None: policies.append((label.id, form))
    return result, tuple(sorted(heap)), tuple(policies)


def canonical_expr(expr):
    """Comparable form of an expression"""
    return canonical(Store(), Closure("_", expr))[0]


def equivalent(L, store1, value1, store2, value2, fresh_from=1):
    """Do the two results look the same to view L?"""
    return canonical(project_store(L, store1), project_value(L, value1),
        fresh_from) == canonical(project_store(L, store2),
        project_value(L, value2), fresh_from)


@dataclass
class Verdict:
    passed: bool
    exempt: bool = False
    counterexample: str = ""
    rule_counts: Counter = field(default_factory=Counter)


@dataclass(frozen=True)
class Case:
    """Generated program: evaluate expr in store under pc, observe with view"""
    store: Store
    expr: Expr
    pc: frozenset
    view: frozenset
    next_label: int = 1
    next_address: int = 1
    rule: str = ""
    seed: int = 0


def describe(case, extra=""):
    """Counterexample text: the program, store and view"""
    from .cli import unparse
    lines = ["seed %d rule %s" % (case.seed, case.rule),
        "view %s" % sorted(case.view), "pc %s" % sorted(case.pc, key=repr),
        "expr %s" % unparse(case.expr)]
    for a in sorted(case.store.heap):
        lines.append("%r = %s" % (a, unparse(Const(case.store.heap[a]))))
    if extra: lines.append(extra)
    return "\n".join(lines)


def check_projection(case, pruning=False):
    """Faceted evaluation seen through view equals plain evaluation of the
    projected program"""
    L = case.view
    if not visible(case.pc, L):
        return Verdict(False, counterexample=describe(case, "pc not visible"))
    engine = Engine(pruning=pruning, trace=False, next_label=case.next_label,
        next_address=case.next_address)
    try:
        store, value = engine.eval(case.store, case.expr, case.pc)
        faceted = canonical(project_store(L, store), project_value(L, value),
            case.next_address)
        plain_store, plain_value = eval_plain(project_store(L, case.store),
            project_expr(L, case.expr), L, next_label=case.next_label,
            next_address=case.next_address)
        plain = canonical(plain_store, plain_value, case.next_address)
    except Exception:
        return Verdict(False, counterexample=describe(case,
            traceback.format_exc()), rule_counts=engine.rule_counts)
    if faceted == plain: return Verdict(True, rule_counts=engine.rule_counts)
    return Verdict(False, counterexample=describe(case,
        "faceted %r\nplain %r" % (faceted, plain)),
        rule_counts=engine.rule_counts)


def check_store_preserved(case, pruning=False):
    """Evaluation under a pc the view cannot see leaves the view's
    projection of the store unchanged"""
    L = case.view
    engine = Engine(pruning=pruning, trace=False, next_label=case.next_label,
        next_address=case.next_address)
    try: store, value = engine.eval(case.store, case.expr, case.pc)
    except Exception:
        return Verdict(False, counterexample=describe(case,
            traceback.format_exc()))
    before = canonical(project_store(L, case.store), None, case.next_address)
    after = canonical(project_store(L, store), None, case.next_address)
    if before == after: return Verdict(True, rule_counts=engine.rule_counts)
    return Verdict(False, counterexample=describe(case,
        "before %r\nafter %r" % (before, after)))


def self_referential(store):
    """Does some label's policy depend on the label itself?"""
    def leaves(v):
        if isinstance(v, Facet): return leaves(v.high)+leaves(v.low)
        return [v]
    for label, policy in store.policies.items():
        for part in conjuncts(policy):
            for leaf in leaves(part):
                if label in labels_of(leaf): return True
    return False


def resolve_declarations(expr, next_label=1):
    """expr with the label of each declaration replaced by the Label it
    will be allocated, numbered in order of appearance from next_label"""
    counter = [next_label]
    def walk(node):
        if isinstance(node, LabelDecl):
            label = Label(counter[0], node.name)
            counter[0] += 1
            return LabelDecl(node.name, walk(rename_label(node.body,
                node.name, label)))
        return map_children(node, walk)
    return walk(expr)


def check_noninterference(store1, expr1, store2, expr2, view,
    next_label=1, next_address=1, pruning=False):
    """Runs that agree on what view sees still agree after evaluation.
    Pairs where a policy refers to its own label are exempt."""
    L = frozenset(view)
    if canonical(project_store(L, store1), None, next_address) != \
        canonical(project_store(L, store2), None, next_address) or \
        canonical_expr(project_expr(L, resolve_declarations(expr1,
        next_label))) != canonical_expr(project_expr(L,
        resolve_declarations(expr2, next_label))):
        return Verdict(False, counterexample="inputs are not L-equivalent")
    results, counts = [], Counter()
    for store, expr in ((store1, expr1), (store2, expr2)):
        engine = Engine(pruning=pruning, trace=False, next_label=next_label,
            next_address=next_address)
        try: store, value = engine.eval(store, expr, EMPTY)
        except Exception:
            return Verdict(False, counterexample=traceback.format_exc())
        counts += engine.rule_counts
        results.append((store, value))
    if any(self_referential(store) for store, value in results):
        return Verdict(True, exempt=True, rule_counts=counts)
    (s1, v1), (s2, v2) = results
    if equivalent(L, s1, v1, s2, v2, next_address):
        return Verdict(True, rule_counts=counts)
    forms = [canonical(project_store(L, s), project_value(L, v), next_address)
        for s, v in results]
    return Verdict(False, counterexample="%r\n%r" % tuple(forms),
        rule_counts=counts)


RULES = ("f-val", "f-ref", "f-deref", "f-deref-null", "f-assign", "f-ctxt",
    "f-app", "f-split", "f-left", "f-right", "f-strict", "f-row", "f-select",
    "f-project", "f-join", "f-union", "f-fold-empty", "f-fold-inconsistent",
    "f-fold-consistent", "f-prune", "f-label", "f-restrict")
STRINGS = ("a", "b", "c")
INT, STR, BOOL = ("int",), ("str",), ("bool",)
BASE_KINDS = (INT, STR, BOOL)
DECLARED = "d" # name of the label a generated program may declare
UNALLOCATED = Address(999)


def TABLE(n): return ("table", n)


class ProgramGenerator(object):
    """Seeded generator of well-typed programs, stores, pcs and views.
    The sides of facets the view cannot see are drawn from a second,
    shadow random stream, so generators that share seed but not
    shadow_seed produce L-equivalent cases."""
    def __init__(self, seed, shadow_seed=None, depth=None):
        self.seed = seed
        self.rng = numpy.random.RandomState(seed)
        if shadow_seed is None: shadow_seed = seed+1
        self.shadow = numpy.random.RandomState(shadow_seed)
        self.depth = max_depth if depth is None else depth
        self.env = [] # (variable, kind) in scope
        self.counter = 0
        n = int(self.rng.randint(1, 4))
        self.labels = [Label(i, "k%d" % i) for i in range(1, n+1)]
        self.declared_id = n+1
        self.choices = list(self.labels)
        self.view_ids = set(i for i in range(1, n+2) if self.rng.rand() < 0.5)
        self.addresses = {}

    @property
    def view(self):
        labels = {k.id: k for k in self.labels}
        return frozenset(labels.get(i, Label(i, DECLARED))
            for i in self.view_ids)

    def pick(self, items):
        return items[self.rng.randint(len(items))]

    def chance(self, p): return self.rng.rand() < p

    def label_id(self, label):
        return label.id if isinstance(label, Label) else self.declared_id

    def shadowed(self, draw):
        """draw() using the shadow stream"""
        saved, self.rng = self.rng, self.shadow
        try: return draw()
        finally: self.rng = saved

    def sides(self, label, draw):
        """(high, low), drawing the side hidden from the view from the
        shadow stream"""
        if self.label_id(label) in self.view_ids:
            return draw(), self.shadowed(draw)
        return self.shadowed(draw), draw()

    def fresh_var(self):
        self.counter += 1
        return "x%d" % self.counter

    def random_kind(self, tables=True):
        kinds = list(BASE_KINDS)
        if tables: kinds += [TABLE(1), TABLE(2)]
        return self.pick(kinds)

    def leaf_value(self, kind):
        if kind == INT: return int(self.rng.randint(0, 5))
        if kind == STR: return self.pick(STRINGS)
        if kind == BOOL: return bool(self.chance(0.5))
        return self.table_value(kind[1])

    def table_value(self, arity, rows=None, labels=None):
        """Table with random guards. Cells of rows the view cannot see come
        from the shadow stream."""
        if labels is None: labels = self.labels
        if rows is None: rows = self.rng.randint(0, 5)
        table_rows = []
        for _ in range(rows):
            guard = frozenset(Branch(k, bool(self.chance(0.5)))
                for k in labels if self.chance(0.4))
            cells = lambda: tuple(self.pick(STRINGS) for _ in range(arity))
            if visible(guard, self.view): table_rows.append((guard, cells()))
            else: table_rows.append((guard, self.shadowed(cells)))
        return BranchTable(tuple(table_rows), arity)

    def value(self, kind, used=()):
        """Random, possibly faceted value of kind"""
        free = [k for k in self.labels if k not in used]
        if free and kind[0] != "table" and self.chance(0.4):
            k = self.pick(free)
            high, low = self.sides(k, lambda: self.value(kind, set(used)|{k}))
            return Facet(k, high, low)
        return self.leaf_value(kind)

    def store(self):
        heap = {}
        for i in range(1, self.index(3)+1):
            kind = self.random_kind()
            heap[Address(i)] = self.value(kind)
            self.addresses.setdefault(kind, []).append(Address(i))
        policies = {k: TRUE_POLICY for k in self.labels}
        return Store(heap, policies)

    def pc(self):
        """Random pc the view sees"""
        return frozenset(Branch(k, k.id in self.view_ids)
            for k in self.labels if self.chance(0.3))

    def label(self):
        return self.pick(self.choices)

    def expr(self, kind, depth):
        if depth <= 0 or self.chance(0.2): return self.leaf(kind)
        productions = [self.facet, self.apply, self.conditional, self.fold,
            self.deref, self.assign, self.restricted]
        if kind == INT: productions.append(self.plus)
        if kind == STR: productions.append(self.concat)
        if kind == BOOL: productions += [self.equal, self.logic]
        if kind[0] == "table":
            productions += [self.row, self.select, self.project, self.union]
            if kind[1] >= 2: productions.append(self.join)
        return self.pick(productions)(kind, depth-1)

    def leaf(self, kind):
        variables = [name for name, k in self.env if k == kind]
        if variables and self.chance(0.5): return Var(self.pick(variables))
        if kind[0] == "table" and self.chance(0.5):
            return Row(tuple(Const(self.pick(STRINGS)) for _ in range(kind[1])))
        return Const(self.leaf_value(kind))

    def ref(self, kind, depth):
        """Expression evaluating to an address holding kind"""
        known = self.addresses.get(kind, [])
        if known and self.chance(0.5): return Const(self.pick(known))
        if depth > 0 and self.chance(0.2):
            label = self.label()
            high, low = self.sides(label, lambda: self.ref(kind, depth-1))
            return FacetExpr(label, high, low)
        return Ref(self.expr(kind, depth))

    def facet(self, kind, depth):
        label = self.label()
        high, low = self.sides(label, lambda: self.expr(kind, depth))
        return FacetExpr(label, high, low)

    def function(self, arg_kind, kind, depth):
        name = self.fresh_var()
        self.env.append((name, arg_kind))
        try: return Lambda(name, self.expr(kind, depth))
        finally: self.env.pop()

    def apply(self, kind, depth):
        arg_kind = self.random_kind()
        fn = self.function(arg_kind, kind, depth)
        if self.chance(0.3):
            label = self.label()
            high, low = self.sides(label,
                lambda: self.function(arg_kind, kind, depth))
            fn = FacetExpr(label, high, low)
        elif self.chance(0.2):
            fn = If(self.expr(BOOL, depth), fn,
                self.function(arg_kind, kind, depth))
        return Apply(fn, self.expr(arg_kind, depth))

    def conditional(self, kind, depth):
        return If(self.expr(BOOL, depth), self.expr(kind, depth),
            self.expr(kind, depth))

    def deref(self, kind, depth):
        return Deref(self.ref(kind, depth))

    def assign(self, kind, depth):
        return Assign(self.ref(kind, depth), self.expr(kind, depth))

    def policy(self, depth):
        return Lambda("ctxt", self.expr(BOOL, min(depth, 1)))

    def restricted(self, kind, depth):
        """Restrict a label, then evaluate an expression of kind"""
        restrict = Restrict(self.label(), self.policy(depth))
        return Apply(Lambda("_", self.expr(kind, depth)), restrict)

    def folder(self, arity, kind, depth):
        names = [self.fresh_var() for _ in range(arity+1)]
        self.env.extend([(name, STR) for name in names[:-1]]+[(names[-1], kind)])
        try: body = self.expr(kind, depth)
        finally: del self.env[-len(names):]
        for name in reversed(names): body = Lambda(name, body)
        return body

    def fold(self, kind, depth, table=None):
        arity = self.index(2)
        if table is None: table = self.expr(TABLE(arity), depth)
        else: arity = table.value.arity
        return Fold(self.folder(arity, kind, depth), self.expr(kind, depth),
            table)

    def plus(self, kind, depth):
        return Prim("+", (self.expr(INT, depth), self.expr(INT, depth)))

    def concat(self, kind, depth):
        return Prim("concat", (self.expr(STR, depth), self.expr(STR, depth)))

    def equal(self, kind, depth):
        operand = self.pick([INT, STR])
        return Prim("==", (self.expr(operand, depth), self.expr(operand, depth)))

    def logic(self, kind, depth):
        op = self.pick(["and", "or", "not"])
        if op == "not": return Prim(op, (self.expr(BOOL, depth),))
        return Prim(op, (self.expr(BOOL, depth), self.expr(BOOL, depth)))

    def row(self, kind, depth):
        return Row(tuple(self.expr(STR, depth) for _ in range(kind[1])))

    def index(self, n): return int(self.rng.randint(1, n+1))

    def select(self, kind, depth):
        n = kind[1]
        return Select(self.index(n), self.index(n), self.expr(kind, depth))

    def project(self, kind, depth):
        m = self.index(3)
        indices = tuple(self.index(m) for _ in range(kind[1]))
        return Project(indices, self.expr(TABLE(m), depth))

    def join(self, kind, depth):
        a = self.index(kind[1]-1)
        return Join(self.expr(TABLE(a), depth), self.expr(TABLE(kind[1]-a), depth))

    def union(self, kind, depth):
        return Union(self.expr(kind, depth), self.expr(kind, depth))

    def focus(self, rule, pc):
        """Expression that makes rule fire, and the pc to run it under"""
        d = max(self.depth-1, 0)
        kind = self.random_kind()
        if rule == "f-ref": return Ref(self.expr(kind, d)), pc
        if rule == "f-deref":
            kind = self.pick(sorted(self.addresses))
            return Deref(Const(self.pick(self.addresses[kind]))), pc
        if rule == "f-deref-null": return Deref(Const(UNALLOCATED)), pc
        if rule == "f-assign":
            kind = self.pick(sorted(self.addresses))
            address = self.pick(self.addresses[kind])
            return Assign(Const(address), self.expr(kind, d)), pc
        if rule == "f-ctxt":
            return Prim("not", (Prim("not", (self.expr(BOOL, d),)),)), pc
        if rule == "f-app":
            name = self.fresh_var()
            return Apply(Lambda(name, Var(name)), self.expr(kind, d)), pc
        if rule in ("f-split", "f-left", "f-right"):
            k = self.focus_label
            pc = frozenset(b for b in pc if b.label != k)
            if rule == "f-left": pc |= {pos(k)}
            elif rule == "f-right": pc |= {neg(k)}
            high, low = self.sides(k, lambda: self.expr(kind, d))
            return FacetExpr(k, high, low), pc
        if rule == "f-strict":
            label = self.label()
            arg_kind = self.random_kind()
            high, low = self.sides(label,
                lambda: self.function(arg_kind, kind, d))
            return Apply(FacetExpr(label, high, low), self.expr(arg_kind, d)), pc
        if rule == "f-row": return self.row(TABLE(self.index(3)), d), pc
        if rule == "f-select": return self.select(TABLE(2), d), pc
        if rule == "f-project": return self.project(TABLE(2), d), pc
        if rule == "f-join": return self.join(TABLE(2), d), pc
        if rule == "f-union": return self.union(TABLE(1), d), pc
        if rule in ("f-fold-empty", "f-fold-consistent"):
            return self.fold(kind, d, Const(self.table_value(2, rows=3,
                labels=()))), pc
        if rule in ("f-fold-inconsistent", "f-prune"):
            k = self.pick(self.labels)
            branch = Branch(k, k.id in self.view_ids)
            pc = frozenset(b for b in pc if b.label != k) | {branch}
            table = self.table_value(1, rows=2, labels=())
            rows = ((frozenset([~branch]), table.rows[0][1]),) + table.rows[1:]
            return self.fold(kind, d, Const(BranchTable(rows, 1))), pc
        if rule == "f-restrict": return self.restricted(kind, d), pc
        return Const(self.leaf_value(kind)), pc

    def case(self, rule=None, visible_pc=True):
        """Generated Case. rule: evaluation rule the program exercises"""
        if rule is None: rule = RULES[self.seed % len(RULES)]
        declare = rule == "f-label" or self.chance(0.3)
        if declare: self.choices.append(DECLARED)
        self.focus_label = self.pick(self.labels)
        if rule == "f-left": self.view_ids.add(self.focus_label.id)
        if rule == "f-right": self.view_ids.discard(self.focus_label.id)
        store = self.store()
        pc = self.pc()
        focus, pc = self.focus(rule, pc)
        if not visible_pc:
            k = self.pick(self.labels)
            pc = frozenset(b for b in pc if b.label != k) | \
                {Branch(k, k.id not in self.view_ids)}
        expr = Apply(Lambda("_", self.expr(self.random_kind(), self.depth)),
            focus)
        if declare: expr = LabelDecl(DECLARED, expr)
        return Case(store, expr, pc, self.view, len(self.labels)+1,
            len(store.heap)+1, rule, self.seed)


def generate_case(seed, rule=None, visible_pc=True):
    return ProgramGenerator(seed).case(rule, visible_pc)


def generate_pair(seed):
    """Two L-equivalent cases differing only where the view cannot see"""
    first = ProgramGenerator(seed, shadow_seed=2*seed+1).case()
    second = ProgramGenerator(seed, shadow_seed=2*seed+2).case()
    return first, second


def projection_check(seed, pruning=False):
    return check_projection(generate_case(seed), pruning)


def pruned_projection_check(seed):
    return projection_check(seed, pruning=True)


def store_preservation_check(seed):
    return check_store_preserved(generate_case(seed, visible_pc=False))


def noninterference_check(seed):
    first, second = generate_pair(seed)
    return check_noninterference(first.store, first.expr, second.store,
        second.expr, first.view, first.next_label, first.next_address)


def worker_count():
    """Physical CPU cores"""
    try:
        import psutil
        count = psutil.cpu_count(logical=False)
    except ImportError:
        from os import cpu_count
        count = cpu_count()
    return count or 1


@dataclass
class Summary:
    cases: int = 0
    passed: int = 0
    exempt: int = 0
    counterexamples: list = field(default_factory=list)
    rule_counts: Counter = field(default_factory=Counter)

    @property
    def failed(self): return self.cases-self.passed


def run_suite(check, seeds, workers=None):
    """Run check(seed) for every seed on a thread pool"""
    summary = Summary()
    with ThreadPoolExecutor(max_workers=workers or worker_count()) as pool:
        for verdict in pool.map(check, seeds):
            summary.cases += 1
            summary.rule_counts += verdict.rule_counts
            if verdict.exempt: summary.exempt += 1
            if verdict.passed: summary.passed += 1
            else:
                warning("Check failed:\n%s" % verdict.counterexample)
                summary.counterexamples.append(verdict.counterexample)
    info("%d cases, %d failed, %d exempt" %
        (summary.cases, summary.failed, summary.exempt))
    return summary


def views(labels):
    """Every subset of labels"""
    labels = sorted(labels)
    for size in range(len(labels)+1):
        for chosen in combinations(labels, size): yield frozenset(chosen)


def pruning_blowup(n, pruning):
    """Facets constructed for n nested conditionals, each testing a read
    of its own two-row faceted table. With pruning, tables are fetched
    for a viewer who sees every label."""
    from .form import flat_table, prune_fetch, unmarshal
    engine = Engine(pruning=pruning, trace=False)
    labels = [engine.new_label("k%d" % i) for i in range(1, n+1)]
    store = Store({}, {k: TRUE_POLICY for k in labels})
    addresses = []
    for k in labels:
        rows = BranchTable(((frozenset([pos(k)]), ("a",)),
            (frozenset([neg(k)]), ("b",))), 1)
        flat = flat_table("T"+k.name, ("v",), rows)
        fetched = prune_fetch(flat, {k: True}) if pruning else flat.rows
        address = engine.new_address()
        store = store.write(address, unmarshal(fetched, engine.label_env,
            arity=1))
        addresses.append(address)
    if pruning: engine.viewer = FileHandle("stdout", "viewer")
    expr = Const("done")
    first = Lambda("v", Lambda("acc", Var("v")))
    for address in reversed(addresses):
        read = Fold(first, Const(""), Deref(Const(address)))
        expr = If(Prim("==", (read, Const("a"))), expr, expr)
    engine.eval(store, expr)
    return engine.facets


def blowup_curve(ns, pruning):
    return numpy.array([pruning_blowup(int(n), pruning) for n in ns])
