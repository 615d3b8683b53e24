"""
Faceted values and the facet algebra

A faceted value <k ? high : low> behaves as `high` for viewers allowed to
see label k and as `low` for everybody else. Tables are not nested into
facets. Instead every row carries the set of branches (k or not-k) under
which it exists.

E.g.
mk_facet(k, table(((), ("Alice","Smith"))), table(((), ("Bob","Jones"))))
  -> rows ({k}, ("Alice","Smith")), ({!k}, ("Bob","Jones"))

Date created: 2026-10-18
Python Version: 3.7+
"""
from __future__ import annotations

__version__ = "1.0.0"

from dataclasses import dataclass, field
from difflib import SequenceMatcher
from typing import FrozenSet, Mapping, Tuple, Union

DEFAULT_ZERO = 0 # value of unallocated references


class FacetError(Exception):
    """Base class of all errors raised by FacetDB"""


class MixedFacetShape(FacetError):
    """A facet would combine a table with a non-table, or tables of
    different arity"""


class StuckExpression(FacetError):
    """Evaluation cannot proceed. Carries the offending sub-expression."""
    def __init__(self, message, expr=None):
        FacetError.__init__(self, message)
        self.message = message
        self.expr = expr

    def __str__(self):
        if self.expr is None: return self.message
        from .cli import unparse
        return "%s: %s" % (self.message, unparse(self.expr))


class UncoveredLabel(FacetError):
    """A label assignment does not decide every label of a value"""
    def __init__(self, label):
        FacetError.__init__(self, "label %s is not assigned" % (label,))
        self.label = label


class ContradictoryGuard(FacetError):
    """A guard contains a label with both polarities"""
    def __init__(self, guard):
        FacetError.__init__(self, "contradictory guard %s" % guard_text(guard))
        self.guard = guard


class SeedInvalidated(FacetError):
    """A label decided for the viewer during pruning no longer holds,
    so values already pruned may be wrong. The run is repeated without
    pruning."""
    def __init__(self, label, reason):
        FacetError.__init__(self, "pruning seed for %s invalidated: %s" %
            (label, reason))
        self.label = label


@dataclass(frozen=True, order=True)
class Label:
    """Boolean unknown guarding facets. Ordered by creation."""
    id: int
    name: str = field(default="k", compare=False)

    def __repr__(self): return self.name


@dataclass(frozen=True)
class Branch:
    label: Label
    positive: bool = True

    def __repr__(self):
        return repr(self.label) if self.positive else "!%r" % self.label

    def __invert__(self): return Branch(self.label, not self.positive)


Branches = FrozenSet[Branch]
View = FrozenSet[Label]
EMPTY = frozenset() # empty branch set, also the empty view


def pos(label): return Branch(label, True)
def neg(label): return Branch(label, False)


@dataclass(frozen=True)
class FileHandle:
    """Output channel. principal is the viewer reading it."""
    name: str
    principal: str = ""

    def __repr__(self): return self.name


@dataclass(frozen=True, order=True)
class Address:
    id: int

    def __repr__(self): return "@%d" % self.id


@dataclass(frozen=True)
class Closure:
    """Store-free function value. Arguments are substituted into body."""
    param: str
    body: object # evaluator.Expr


@dataclass(frozen=True)
class Facet:
    label: Label
    high: object
    low: object


Row = Tuple[Branches, Tuple[str, ...]]


@dataclass(frozen=True)
class BranchTable:
    """Faceted table: rows of (guard, cells)"""
    rows: Tuple[Row, ...] = ()
    arity: int = 0

    def __post_init__(self):
        for guard, cells in self.rows:
            if len(cells) != self.arity:
                raise MixedFacetShape("row %r does not have %d cells" %
                    (cells, self.arity))

    def __len__(self): return len(self.rows)

    def __iter__(self): return iter(self.rows)


RawValue = Union[bool, int, str, FileHandle, Address, Closure]
Value = Union[RawValue, Facet, BranchTable]


def table(*rows, arity=None):
    """Build a BranchTable from (guard, cells) pairs.
    E.g. table(({pos(k)}, ("a","b")), ((), ("c","d")))"""
    rows = tuple((frozenset(guard), tuple(cells)) for guard, cells in rows)
    if arity is None: arity = len(rows[0][1]) if rows else 0
    return BranchTable(rows, arity)


def is_table(value): return isinstance(value, BranchTable)


def same_value(a, b):
    """Equality that keeps True apart from 1 and False apart from 0"""
    return type(a) is type(b) and a == b


def zero_like(value):
    """Uninitialised contents of a cell that is about to hold value"""
    if is_table(value): return BranchTable((), value.arity)
    return DEFAULT_ZERO


@dataclass(frozen=True)
class Store:
    """Heap (Address -> Value) and policies (Label -> Value).
    Updates return a new store."""
    heap: Mapping = field(default_factory=dict)
    policies: Mapping = field(default_factory=dict)

    def read(self, address, default=None):
        return self.heap.get(address, default)

    def write(self, address, value):
        heap = dict(self.heap); heap[address] = value
        return Store(heap, self.policies)

    def policy(self, label, default=None):
        return self.policies.get(label, default)

    def set_policy(self, label, policy):
        policies = dict(self.policies); policies[label] = policy
        return Store(self.heap, policies)


def contradictory(B):
    """Does B contain some label with both polarities?"""
    return any(~b in B for b in B if b.positive)


def consistent(B, pc):
    """True iff B and pc together contain no label with both polarities."""
    return not contradictory(frozenset(B) | frozenset(pc))


def visible(B, L):
    """Is a value guarded by branches B visible to view L?
    E.g. visible({k,!l}, {k}) -> True"""
    return all((b.label in L) == b.positive for b in B)


def sorted_branches(B):
    """Branches in label-creation order"""
    return sorted(B, key=lambda b: (b.label, not b.positive))


def guard_text(B):
    return "{%s}" % ",".join(repr(b) for b in sorted_branches(B))


def restrict_label(value, label, positive):
    """Drop the facets of value on label that contradict label=positive"""
    if isinstance(value, Facet):
        if value.label == label:
            return restrict_label(value.high if positive else value.low,
                label, positive)
        high = restrict_label(value.high, label, positive)
        low = restrict_label(value.low, label, positive)
        if high is value.high and low is value.low: return value
        return Facet(value.label, high, low)
    return value


def mk_facet(k, high, low):
    """<<k ? high : low>>
    Non-tables: a new facet on k at the root.
    Tables: one table. Rows common to both sides keep their guard,
    high-only rows gain k, low-only rows gain !k."""
    if is_table(high) != is_table(low):
        raise MixedFacetShape("cannot facet a table with a non-table")
    if not is_table(high):
        return Facet(k, restrict_label(high, k, True),
            restrict_label(low, k, False))
    if high.arity != low.arity:
        raise MixedFacetShape("cannot facet tables of arity %d and %d" %
            (high.arity, low.arity))
    return BranchTable(tuple(merge_rows(k, high.rows, low.rows)), high.arity)


def merge_rows(k, high_rows, low_rows):
    """Interleave the rows of both sides so that each side keeps its own
    row order. Rows matched on both sides are shared."""
    k_pos, k_neg = pos(k), neg(k)
    matcher = SequenceMatcher(None, high_rows, low_rows, autojunk=False)
    i = j = 0
    for block in matcher.get_matching_blocks():
        for guard, cells in high_rows[i:block.a]:
            if k_neg not in guard: yield guard | {k_pos}, cells
        for guard, cells in low_rows[j:block.b]:
            if k_pos not in guard: yield guard | {k_neg}, cells
        for row in high_rows[block.a:block.a+block.size]: yield row
        i, j = block.a+block.size, block.b+block.size


def mk_facet_branches(B, high, low, mk_facet=mk_facet):
    """<<B ? high : low>>, peeling branches in label-creation order
    E.g. mk_facet_branches({k,!l}, 1, 2) -> Facet(k, Facet(l, 2, 1), 2)
    A contradictory B yields a value that shows low to every view."""
    def peel(branches):
        if not branches: return high
        b, rest = branches[0], branches[1:]
        if b.positive: return mk_facet(b.label, peel(rest), low)
        return mk_facet(b.label, low, peel(rest))
    return peel(sorted_branches(B))
