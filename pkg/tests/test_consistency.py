import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ecikit.consistency import (
    BindingError,
    GeneratorConfig,
    LemmaBinding,
    LemmaId,
    admissible_bindings,
    check_distributional_consistency,
    check_lemma,
    check_subset_consistency,
    decompose_dc,
    induction_check,
    run_suite,
)
from ecikit.dag import AugmentedDAG
from ecikit.eci import ECIStatement, evaluate, full
from ecikit.model import (
    ModelError,
    ModelShape,
    MultiRegimeModel,
    VariableDecl,
    generate_random_model,
    generate_structural_model,
    random_structural_spec,
)
from ecikit import lab


def structural(seed, sizes=(2, 2, 2), k=2):
    spec = random_structural_spec(ModelShape(sizes, k), seed)
    return generate_structural_model(spec), AugmentedDAG.from_spec(spec)


def test_dc_examples(m_ty, m_viol):
    assert check_distributional_consistency(m_ty, "T", 1e-12).holds
    v = check_distributional_consistency(m_viol, "T")
    assert v.fails
    assert v.witness.kind == "joint"
    assert v.witness.regime_a == {"T": 1} and v.witness.given_a == {"T": 1}
    # P(T=1, Y) is (0.2, 0.8) under F(T)=1 against (0.1, 0.4) idle
    assert v.discrepancy == pytest.approx(0.5 * (0.1 + 0.4))
    assert v.witness.replay(m_viol) == pytest.approx(v.discrepancy)
    with pytest.raises(ModelError):
        check_distributional_consistency(m_ty, "Y")


def test_dc_identical_tables():
    m = MultiRegimeModel((VariableDecl("B", (0, 1)),), ("B",), {(None,): [0.3, 0.7], (0,): [0.3, 0.7], (1,): [0.3, 0.7]})
    assert check_distributional_consistency(m, "B").holds


def test_decompose(m_ty, m_viol):
    assert [v.outcome.value for v in decompose_dc(m_ty, "T")] == ["holds"] * 3
    assert decompose_dc(m_viol, "T")[1].fails


def test_dc1_weaker_than_invariance():
    # setting B=b0 keeps P(B=b0) but moves mass between b1 and b2
    decl = (VariableDecl("B", ("b0", "b1", "b2")),)
    idle = [0.5, 0.3, 0.2]
    m = MultiRegimeModel(decl, ("B",), {(None,): idle, (0,): [0.5, 0.2, 0.3], (1,): idle, (2,): idle})
    dc2, dc1, strong = decompose_dc(m, "B")
    assert dc2.holds and dc1.holds and strong.fails
    assert strong.discrepancy == pytest.approx(0.1)
    assert check_distributional_consistency(m, "B").holds


@st.composite
def any_model(draw):
    seed = draw(st.integers(0, 2**31))
    sizes = tuple(draw(st.lists(st.integers(2, 3), min_size=1, max_size=3)))
    k = draw(st.integers(1, min(2, len(sizes))))
    if draw(st.booleans()):
        return generate_structural_model(random_structural_spec(ModelShape(sizes, k), seed))
    if draw(st.booleans()):
        # a random family that is consistent for one target only on some slices
        base = generate_structural_model(random_structural_spec(ModelShape(sizes, k), seed))
        rng = np.random.default_rng(seed)
        entries = [(key, a if rng.random() < 0.7 else a * 0 + a.mean()) for key, a in base.entries]
        return MultiRegimeModel(base.variables, base.targets, entries)
    return generate_random_model(ModelShape(sizes, k), seed)


@settings(max_examples=120, deadline=None)
@given(any_model())
def test_definition_equivalence_and_strong_form(model):
    for t in model.targets:
        dc2, dc1, strong = decompose_dc(model, t)
        assert check_distributional_consistency(model, t).holds == (dc2.holds and dc1.holds)
        if strong.holds:
            assert dc1.holds


@settings(max_examples=60, deadline=None)
@given(any_model())
def test_induction_agrees_with_direct(model):
    import itertools
    for r in range(1, len(model.targets) + 1):
        for B in itertools.combinations(model.targets, r):
            assert induction_check(model, B).outcome is check_subset_consistency(model, B).outcome


def test_subset_checks(m_ty):
    assert check_subset_consistency(m_ty, ["T"], ["Y"]).holds
    with pytest.raises(ModelError):
        check_subset_consistency(m_ty, ["T"], ["T"])
    with pytest.raises(ModelError):
        induction_check(m_ty, [])


def test_l3_on_structural_model():
    model, _ = structural(5, (2, 2, 2), 2)
    B = model.targets[0]
    Y = next(n for n in model.names if n != B)
    rep = check_lemma(model, LemmaId.L3_PROMOTE, LemmaBinding(B=(B,), W=tuple(sorted((B, Y), key=model.names.index))))
    assert rep.premise.holds and rep.conclusion.holds and rep.implication_ok and rep.variation_independent


def test_vacuous_premise_is_ok(m_viol):
    rep = check_lemma(m_viol, LemmaId.L1_SUBSET, LemmaBinding(B=("T",), Y=("Y",)))
    assert rep.premise.fails and rep.implication_ok


def test_l3_counterexample_from_search():
    found = lab.search_vi_counterexample(lab.SearchConfig(budget=1000))
    rep = found.report
    assert rep.premise.holds and rep.conclusion.fails
    assert not rep.implication_ok and not rep.variation_independent


def test_l5_first_hypothesis_is_full_invariance():
    model, dag = structural(9, (2, 2, 2), 2)
    rep = check_lemma(model, LemmaId.L5_INDUCTION, LemmaBinding(r=1, dag=dag))
    t = dag.ordered_targets()[0]
    direct = evaluate(model, ECIStatement(dag.pre(t) + (t,), group=full(*dag.ordered_targets())))
    assert rep.conclusion.outcome is direct.outcome
    assert rep.details["conclusion_statement"] == str(ECIStatement(dag.pre(t) + (t,), group=full(*dag.ordered_targets())))


def test_binding_constraints(m_ty):
    with pytest.raises(BindingError):
        check_lemma(m_ty, LemmaId.L3_PROMOTE, LemmaBinding(B=("T",), W=("Y",)))
    with pytest.raises(BindingError):
        check_lemma(m_ty, LemmaId.C1_JOINT, LemmaBinding(B=("T",), W=("T",)))
    with pytest.raises(BindingError):
        check_lemma(m_ty, LemmaId.L4_COND_PROMOTE, LemmaBinding(B=("T",), W=("T", "Y"), Y=("Y",)))
    with pytest.raises(BindingError):
        check_lemma(m_ty, LemmaId.L5_INDUCTION, LemmaBinding(r=1))
    with pytest.raises(BindingError):
        check_lemma(m_ty, LemmaId.DC_DEF, LemmaBinding(B=("Y",)))


@pytest.mark.parametrize("lemma", list(LemmaId))
def test_every_lemma_holds_on_structural_models(lemma):
    for seed in range(15):
        model, dag = structural(seed, (2, 3, 2), 1 + seed % 2)
        for b in admissible_bindings(model, lemma, dag):
            rep = check_lemma(model, lemma, b)
            assert rep.implication_ok, rep.to_dict()


def test_admissible_bindings_need_dag_for_graph_lemmas(m_ty):
    assert admissible_bindings(m_ty, LemmaId.L5_INDUCTION) == []
    assert [b.B for b in admissible_bindings(m_ty, "DC_PAIR")] == [("T",)]


def test_suite_determinism_and_errors():
    cfg = GeneratorConfig(max_vars=3)
    a = run_suite(cfg, ["L3_PROMOTE", "DC_DEF"], 5, seed=4).to_json()
    b = run_suite(cfg, ["L3_PROMOTE", "DC_DEF"], 5, seed=4).to_json()
    assert a == b
    data = json.loads(a)
    assert data["counts"]["L3_PROMOTE"]["implication_failures"] == 0
    with pytest.raises(ValueError):
        run_suite(cfg, ["L3_PROMOTE"], 0)
    with pytest.raises(ValueError):
        run_suite(cfg, [], 3)
    with pytest.raises(ValueError):
        GeneratorConfig(kind="other")


def test_suite_on_random_tables_finds_no_active_premises():
    rep = run_suite(GeneratorConfig(kind="random"), ["DC_DEF", "L3_PROMOTE"], 10)
    assert rep.total_failures == 0
    assert rep.counts[LemmaId.DC_DEF].premise_holds == 0
