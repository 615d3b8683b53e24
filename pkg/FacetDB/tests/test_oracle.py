from collections import Counter

import numpy

from FacetDB.core import (
    EMPTY, Address, Closure, Facet, Label, Store, neg, pos, table,
)
from FacetDB.evaluator import (
    Apply, Const, Deref, FacetExpr, LabelDecl, Lambda, Restrict, Row, Select,
    Var, eval,
)
from FacetDB.oracle import (
    DECLARED, Case, ProgramGenerator, Verdict, blowup_curve, canonical,
    check_noninterference, check_projection, equivalent, eval_plain,
    generate_case, generate_pair, noninterference_check, project_expr,
    project_store, project_value, resolve_declarations, run_suite,
    worker_count,
)
from FacetDB.policy import TRUE_POLICY, conj_f

k = Label(1, "k")
a = Address(1)


def strings(*cells): return Row(tuple(Const(c) for c in cells))


def test_project_value():
    assert project_value({k}, Facet(k, 1, 2)) == 1
    assert project_value(EMPTY, Facet(k, 1, 2)) == 2
    rows = table(({pos(k)}, ("r1",)), ({neg(k)}, ("r2",)))
    assert project_value({k}, rows) == table((EMPTY, ("r1",)))
    assert project_value({k}, Closure("x", Const(Facet(k, 1, 2)))) == \
        Closure("x", Const(1))


def test_project_expr():
    assert project_expr({k}, FacetExpr(k, Const(1), Const(2))) == Const(1)
    plain = Apply(Lambda("x", Var("x")), Const(5))
    assert project_expr({k}, plain) == plain
    f, g = Lambda("x", Const(1)), Lambda("x", Const(2))
    assert project_expr(EMPTY, Apply(FacetExpr(k, f, g), Var("x"))) == \
        Apply(g, Var("x"))
    named = FacetExpr("d", Const(1), Const(2))
    assert project_expr({k}, named) == named


def test_project_store():
    assert project_store({k}, Store()) == Store()
    store = Store({a: Facet(k, 1, 0)})
    assert project_store({k}, store).heap == {a: 1}
    assert project_store(EMPTY, store).heap == {a: 0}


def test_eval_plain():
    assert eval_plain(Store(), Apply(Lambda("x", Var("x")), Const(5))) == \
        (Store(), 5)
    assert eval_plain(Store(), Deref(Const(a)))[1] == 0
    rows = Const(table((EMPTY, ("a", "a")), (EMPTY, ("a", "b"))))
    assert eval_plain(Store(), Select(1, 2, rows)) == \
        eval(Store(), Select(1, 2, rows))


def test_plain_evaluator_sees_one_side():
    expr = FacetExpr(k, Const(1), Const(2))
    assert eval_plain(Store(), expr, {k})[1] == 1
    assert eval_plain(Store(), expr, EMPTY)[1] == 2


def test_canonical():
    assert canonical(Store({Address(3): 1}), Address(3), 3) == \
        canonical(Store({Address(5): 1}), Address(5), 3)
    assert canonical(Store({Address(3): 1}), Address(3), 10) != \
        canonical(Store({Address(5): 1}), Address(5), 10)
    assert canonical(Store({a: 0, Address(2): table(arity=2)}), 1) == \
        canonical(Store(), 1)
    assert canonical(Store(), Closure("x", Var("x"))) == \
        canonical(Store(), Closure("y", Var("y")))
    assert canonical(Store(), True) != canonical(Store(), 1)
    assert canonical(Store({}, {k: conj_f(TRUE_POLICY, TRUE_POLICY)})) == \
        canonical(Store())


def test_equivalent():
    store1, store2 = Store({a: Facet(k, 1, 0)}), Store({a: Facet(k, 2, 0)})
    assert equivalent(EMPTY, store1, 5, store2, 5)
    assert not equivalent({k}, store1, 5, store2, 5)


def test_check_projection_of_rows():
    expr = FacetExpr(k, strings("Alice", "Smith"), strings("Bob", "Jones"))
    for view in (frozenset([k]), EMPTY):
        verdict = check_projection(Case(Store(), expr, EMPTY, view, 2))
        assert verdict.passed, verdict.counterexample
        assert verdict.rule_counts["f-split"] == 1


def test_check_projection_needs_visible_pc():
    case = Case(Store(), Const(1), frozenset([pos(k)]), EMPTY, 2)
    assert not check_projection(case).passed


def test_check_projection_of_declared_label_in_policy():
    "A declared label used inside a policy closure is projected too"
    d = Label(1, DECLARED)
    policy = Lambda("x", FacetExpr(DECLARED, Const(True), Const(False)))
    expr = LabelDecl(DECLARED, Restrict(DECLARED, policy))
    for view in (frozenset([d]), EMPTY):
        verdict = check_projection(Case(Store(), expr, EMPTY, view, 1))
        assert verdict.passed, verdict.counterexample


def test_noninterference_examples():
    assert check_noninterference(Store(), Const(1), Store(), Const(1),
        EMPTY).passed
    high1, high2 = Const(Facet(k, 1, 0)), Const(Facet(k, 7, 0))
    assert check_noninterference(Store(), high1, Store(), high2, EMPTY).passed
    verdict = check_noninterference(Store(), high1, Store(), high2, {k})
    assert not verdict.passed
    assert "not L-equivalent" in verdict.counterexample


def test_noninterference_with_declared_label():
    "Declared labels are resolved before comparing the inputs"
    expr1 = LabelDecl("d", FacetExpr("d", Const(1), Const(2)))
    expr2 = LabelDecl("d", FacetExpr("d", Const(1), Const(3)))
    verdict = check_noninterference(Store(), expr1, Store(), expr2,
        {Label(1)}, next_label=1)
    assert verdict.passed, verdict.counterexample
    verdict = check_noninterference(Store(), expr1, Store(), expr2, EMPTY,
        next_label=1)
    assert not verdict.passed
    assert "not L-equivalent" in verdict.counterexample


def test_resolve_declarations():
    expr = LabelDecl("d", LabelDecl("e", FacetExpr("d", Const(1),
        FacetExpr("e", Const(2), Const(3)))))
    inner = resolve_declarations(expr, 3).body.body
    assert inner.label == Label(3) and inner.label.name == "d"
    assert inner.low.label == Label(4) and inner.low.label.name == "e"
    shadowed = LabelDecl("d", LabelDecl("d", FacetExpr("d", Const(1),
        Const(2))))
    assert resolve_declarations(shadowed).body.body.label == Label(2)


def test_generator_is_deterministic():
    assert generate_case(7) == generate_case(7)
    first, second = generate_pair(7)
    assert first.view == second.view


def test_generator_view_uses_label_names():
    for seed in range(50):
        generator = ProgramGenerator(seed)
        names = {k.id: k.name for k in generator.labels}
        names[generator.declared_id] = DECLARED
        assert all(k.name == names[k.id] for k in generator.view)


def test_noninterference_property():
    "Runs a view cannot tell apart stay indistinguishable"
    summary = run_suite(noninterference_check, range(10000))
    assert summary.cases == 10000
    assert summary.failed == 0, summary.counterexamples[:3]


def test_run_suite_collects_failures():
    def check(seed):
        return Verdict(seed % 2 == 0, exempt=seed == 4,
            counterexample="seed %d" % seed, rule_counts=Counter(["f-val"]))
    summary = run_suite(check, range(10), workers=2)
    assert (summary.cases, summary.passed, summary.failed, summary.exempt) == \
        (10, 5, 5, 1)
    assert summary.rule_counts["f-val"] == 10
    assert summary.counterexamples == ["seed %d" % s for s in (1, 3, 5, 7, 9)]


def test_worker_count():
    assert worker_count() >= 1


def test_pruning_keeps_facet_count_linear():
    "Facets grow exponentially without pruning and linearly with it"
    ns = numpy.arange(4, 13)
    unpruned = blowup_curve(ns, pruning=False)
    pruned = blowup_curve(ns, pruning=True)
    assert (unpruned >= 2**ns).all()
    assert (pruned <= 2*ns).all()
