"""
Labels, policies and output

Every label has a policy: a function of the output context (viewer)
returning a possibly faceted boolean. Policies only get stronger.
At a print, the labels the output depends on are assigned, preferring
to show values, so that all policies hold.

Date created: 2026-10-18
Python Version: 3.7+
"""
from __future__ import annotations

__version__ = "1.0.0"

from logging import debug,info,warning,error
from dataclasses import dataclass
from itertools import combinations

from .core import (
    EMPTY, BranchTable, Closure, Facet, FacetError, FileHandle, Label,
    SeedInvalidated, StuckExpression, UncoveredLabel, pos,
)
from .evaluator import (
    Apply, Const, Expr, Prim, Statement, Var, is_statement, rename_label,
    subexpressions,
)

DEBUG = False # Generate diagnostics messages?
max_search_labels = 20 # warn when a label assignment search gets this big

TRUE_POLICY = Closure("x", Const(True))


@dataclass(frozen=True)
class OutputEvent:
    """channel: facet-free output handle, payload: facet-free value"""
    channel: object
    payload: object


def policy_of(store, label):
    return store.policy(label, TRUE_POLICY)


def is_policy(value):
    """Closure, or faceted tree of closures"""
    if isinstance(value, Facet):
        return is_policy(value.high) and is_policy(value.low)
    return isinstance(value, Closure)


def conj_f(p1, p2):
    """Faceted conjunction of two policies: lambda x. p1(x) and p2(x)"""
    x = "x"
    return Closure(x, Prim("and", (Apply(Const(p1), Var(x)),
        Apply(Const(p2), Var(x)))))


def conjuncts(policy):
    """Policies joined by conj_f into policy, in order"""
    if isinstance(policy, Closure) and isinstance(policy.body, Prim) and \
        policy.body.op == "and" and len(policy.body.args) == 2 and \
        all(isinstance(arg, Apply) and isinstance(arg.fn, Const) and
            arg.arg == Var(policy.param) for arg in policy.body.args):
        return conjuncts(policy.body.args[0].fn.value) + \
            conjuncts(policy.body.args[1].fn.value)
    return [policy]


def labels_of(node):
    """Labels present in a value, expression or statement, including
    table row guards and closure bodies"""
    found = set()
    def walk(node):
        if isinstance(node, Facet):
            found.add(node.label)
            walk(node.high); walk(node.low)
        elif isinstance(node, BranchTable):
            for guard, cells in node.rows:
                found.update(b.label for b in guard)
        elif isinstance(node, Closure): walk(node.body)
        elif isinstance(node, Const): walk(node.value)
        elif isinstance(node, (Expr, Statement)):
            label = getattr(node, "label", None)
            if isinstance(label, Label): found.add(label)
            for child in subexpressions(node): walk(child)
    walk(node)
    return found


def close_k(labels, store):
    """Labels plus, transitively, every label mentioned by their policies
    E.g. policy of k mentions l -> close_k({k}) = {k, l}"""
    closed = set(labels)
    while True:
        found = set(closed)
        for label in closed: found |= labels_of(policy_of(store, label))
        if found == closed: return closed
        closed = found


def declare_label(engine, store, name, body, pc=EMPTY, events=None):
    """Allocate a fresh label with the default policy, rename name to it in
    body and run body.
    Return value: (store, value) for an expression body,
    (store, output events) for a statement body"""
    label = engine.new_label(name)
    engine.fire("f-label", body, pc)
    store = store.set_policy(label, TRUE_POLICY)
    body = rename_label(body, name, label)
    if is_statement(body):
        if events is None: events = []
        return engine.run_statement(store, body, events), events
    return engine.eval(store, body, pc)


def strengthen(engine, store, label, policy, pc=EMPTY, expr=None):
    """Join the policy of label with policy, checked only under pc"""
    if not is_policy(policy):
        raise StuckExpression("policy must be a function, got %r" %
            (policy,), expr)
    check = engine.mk_facet_branches(pc | {pos(label)}, policy, TRUE_POLICY)
    if DEBUG: debug("Restricting %s under %s" % (label, sorted(pc, key=repr)))
    store = store.set_policy(label, conj_f(policy_of(store, label), check))
    if engine.pruning and engine.viewer is not None and \
        pos(label) in engine.seed and label not in engine.seeding and \
        engine.viewer_allows(store, label) is not True:
        raise SeedInvalidated(label, "restricted after it was shown")
    return store


def restrict(engine, store, label, policy_expr, pc=EMPTY):
    """Evaluate policy_expr under pc and attach it to label.
    Returns the new store."""
    store, policy = engine.eval(store, policy_expr, pc)
    return strengthen(engine, store, label, policy, pc, policy_expr)


def policy_check(engine, store, labels, channel):
    """Faceted boolean: do the policies of labels allow channel?"""
    check = TRUE_POLICY
    for label in sorted(labels): check = conj_f(check, policy_of(store, label))
    _, allowed = engine.eval(store, Apply(Const(check), Const(channel)), EMPTY)
    return allowed


def assignments(labels, fixed=None):
    """All assignments of labels, most permissive first: more true labels
    first, then descending as binary numbers with the earliest label as
    the most significant bit.
    fixed: labels whose value is already decided"""
    fixed = {k: v for k, v in (fixed or {}).items() if k in labels}
    ordered = sorted(set(labels) - set(fixed))
    for size in range(len(ordered), -1, -1):
        for chosen in combinations(ordered, size):
            chosen = set(chosen)
            assignment = {label: label in chosen for label in ordered}
            assignment.update(fixed)
            yield assignment


def search_assignment(labels, check, fixed=None):
    """First assignment in most-permissive order that makes check true"""
    if len(labels) > max_search_labels:
        warning("Searching %d label assignments" % 2**len(labels))
    for assignment in assignments(labels, fixed):
        allowed = apply_assignment(assignment, check)
        if type(allowed) is not bool:
            raise StuckExpression("policy check is not a boolean",
                Const(allowed))
        if allowed: return assignment
    raise FacetError("no label assignment satisfies the policies")


def apply_assignment(assignment, value):
    """value as seen when exactly the labels assigned True are visible
    E.g. apply_assignment({k: True}, Facet(k,1,2)) -> 1"""
    missing = labels_of(value) - set(assignment)
    if missing: raise UncoveredLabel(min(missing))
    from .oracle import project_value
    view = frozenset(label for label, shown in assignment.items() if shown)
    return project_value(view, value)


def reader(channel):
    """Principal reading channel"""
    return channel.principal if isinstance(channel, FileHandle) else channel


def resolve_print(engine, store, viewer_expr, content_expr):
    """Evaluate a print statement's operands and pick the facets to output.
    Returns (store, OutputEvent)"""
    store, channel = engine.eval(store, viewer_expr, EMPTY)
    store, content = engine.eval(store, content_expr, EMPTY)
    labels = labels_of(channel) | labels_of(content)
    while True:
        labels = close_k(labels, store)
        check = policy_check(engine, store, labels, channel)
        more = labels_of(check) - labels
        if not more: break
        labels |= more
    # labels seeded for the viewer were already decided during evaluation
    fixed = {b.label: b.positive for b in engine.known(EMPTY)}
    if fixed and engine.viewer is not None and \
        reader(channel) != reader(engine.viewer):
        label = min(fixed)
        raise SeedInvalidated(label, "output goes to %r" % (channel,))
    try: assignment = search_assignment(labels, check, fixed)
    except (UncoveredLabel, StuckExpression): raise
    except FacetError as x:
        if not fixed: raise
        raise SeedInvalidated(min(fixed), x)
    if DEBUG: debug("Assignment %r" % assignment)
    event = OutputEvent(apply_assignment(assignment, channel),
        apply_assignment(assignment, content))
    return store, event
