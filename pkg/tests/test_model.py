import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ecikit.model import (
    ModelError,
    ModelShape,
    MultiRegimeModel,
    StructuralSpec,
    UnknownRegime,
    UnknownVariable,
    VariableDecl,
    check_ci,
    conditional,
    dump_model,
    generate_random_model,
    generate_structural_model,
    is_variation_independent,
    load_model,
    marginal,
    model_from_dict,
    model_to_dict,
    product_regimes,
    random_structural_spec,
    validate_model,
)
from conftest import BIN, m_ty_spec


def codes(model):
    return [d.code for d in validate_model(model)]


def test_m_ty_tables_by_hand(m_ty):
    # P(T=t, Y=y | regime) = 0.5 * P(y | received)
    idle = [[0.5 * 0.8, 0.5 * 0.2], [0.5 * 0.2, 0.5 * 0.8]]
    set1 = [[0.5 * 0.2, 0.5 * 0.8], [0.5 * 0.2, 0.5 * 0.8]]
    assert np.allclose(m_ty.table({}), idle)
    assert np.allclose(m_ty.table({"T": 1}), set1)
    assert codes(m_ty) == []


def test_validate_two_regime_model_is_clean():
    decls = (VariableDecl("T", BIN),)
    m = MultiRegimeModel(decls, ("T",), [((None,), [0.5, 0.5]), ((1,), [0.5, 0.5])])
    assert validate_model(m) == []


def test_validate_normalization(m_ty):
    entries = [(k, a * (0.9 if k == (1,) else 1.0)) for k, a in m_ty.entries]
    m = MultiRegimeModel(m_ty.variables, m_ty.targets, entries)
    assert codes(m) == ["normalization"]


def test_validate_idle_absent(m_ty):
    m = MultiRegimeModel(m_ty.variables, m_ty.targets, [e for e in m_ty.entries if e[0] != (None,)])
    assert codes(m) == ["idle-regime-absent"]


def test_validate_other_codes():
    decls = (VariableDecl("A", (0, 0)), VariableDecl("A", (0,)))
    m = MultiRegimeModel(decls, (), [((), [0.5, 0.6])])
    got = codes(m)
    assert "duplicate-variable" in got and "duplicate-value" in got and "normalization" in got
    neg = MultiRegimeModel((VariableDecl("A", BIN),), (), [((), [1.5, -0.5])])
    assert "negative" in codes(neg)
    dup = MultiRegimeModel((VariableDecl("A", BIN),), ("A",), [((None,), [0.5, 0.5]), ((None,), [0.5, 0.5])])
    assert "duplicate-regime" in codes(dup)


def test_marginal_values(m_ty):
    assert marginal(m_ty, {"T": 1}, ["Y"])[{"Y": 1}] == pytest.approx(0.8)
    assert marginal(m_ty, {}, "Y")[{"Y": 1}] == pytest.approx(0.5)
    whole = marginal(m_ty, {"T": 0}, ["T", "Y"])
    assert np.array_equal(whole.probs, m_ty.table({"T": 0}))


def test_marginal_axis_order_follows_request(m_ty):
    swapped = marginal(m_ty, {}, ["Y", "T"]).probs
    assert np.allclose(swapped, m_ty.table({}).T)


def test_marginal_errors(m_ty):
    with pytest.raises(UnknownVariable):
        marginal(m_ty, {}, ["Q"])
    partial = MultiRegimeModel(m_ty.variables, m_ty.targets, m_ty.entries[:1])
    with pytest.raises(UnknownRegime):
        marginal(partial, {"T": 1}, ["Y"])


def test_conditional(m_ty):
    assert conditional(m_ty, {}, ["Y"], {"T": 1})[{"Y": 1}] == pytest.approx(0.8)
    assert conditional(m_ty, {}, ["Y"], {}).close_to(marginal(m_ty, {}, ["Y"]))
    with pytest.raises(ModelError):
        conditional(m_ty, {}, ["Y"], {"Y": 1})


def test_conditional_null_event(m_viol):
    assert conditional(m_viol, {"T": 1}, ["Y"], {"T": 0}) is None


def test_check_ci(m_ty):
    v = check_ci(m_ty, {}, ["Y"], ["T"])
    assert v.fails and v.discrepancy == pytest.approx(0.6)
    assert v.witness.replay(m_ty) == pytest.approx(0.6)
    assert check_ci(m_ty, {}, [], ["T"]).holds


def test_check_ci_independent_coin(m_ty):
    decls = m_ty.variables + (VariableDecl("C", BIN),)
    coin = np.array([0.3, 0.7])
    entries = [(k, np.multiply.outer(a, coin)) for k, a in m_ty.entries]
    m = MultiRegimeModel(decls, ("T",), entries)
    assert check_ci(m, {}, ["C"], ["Y"]).holds
    with pytest.raises(ModelError):
        check_ci(m, {}, ["C"], ["C"])


def test_variation_independence(m_ty):
    assert is_variation_independent(m_ty)
    broken = MultiRegimeModel(m_ty.variables, m_ty.targets, [e for e in m_ty.entries if e[0] != (0,)])
    assert not is_variation_independent(broken)
    two = generate_random_model(ModelShape((2, 2, 2), 2), seed=3)
    assert len(two.regimes) == 9 and is_variation_independent(two)


def test_random_model_subset_and_determinism():
    shape = ModelShape((2, 3), 1)
    a, b = generate_random_model(shape, 7), generate_random_model(shape, 7)
    assert model_to_dict(a) == model_to_dict(b)
    sub = generate_random_model(shape, 7, [(None,), (1,)])
    assert not is_variation_independent(sub)
    with pytest.raises(ValueError):
        generate_random_model(shape, 7, [(1,)])


def test_structural_determinism_and_zero_targets():
    spec = random_structural_spec(ModelShape((2, 2, 2), 0), seed=11)
    m1, m2 = generate_structural_model(spec), generate_structural_model(spec)
    assert list(m1.regimes) == [()]
    assert all(np.array_equal(m1.regimes[k], m2.regimes[k]) for k in m1.regimes)


def test_structural_spec_errors():
    spec = m_ty_spec()
    bad = StructuralSpec(spec.variables, spec.targets, ("Y", "T"), spec.parents, spec.cpts)
    with pytest.raises(ModelError):
        generate_structural_model(bad)
    with pytest.raises(ModelError):
        generate_structural_model(StructuralSpec(spec.variables, spec.targets, spec.order, spec.parents))


def test_file_round_trip(tmp_path, m_ty):
    path = tmp_path / "m.json"
    dump_model(m_ty, path)
    back = load_model(path)
    assert model_to_dict(back) == model_to_dict(m_ty)
    doc = json.loads(path.read_text())
    assert doc["regimes"][0]["assignment"] == {"T": None}


def test_malformed_document():
    with pytest.raises(ModelError):
        model_from_dict({"targets": []})


def test_labels_accepted_as_keys():
    decls = (VariableDecl("T", ("lo", "hi")),)
    m = MultiRegimeModel(decls, ("T",), {(None,): [0.5, 0.5], (1,): [0.5, 0.5]})
    assert m.key({"T": "hi"}) == (1,)
    assert m.key({}) == (None,)
    assert product_regimes(m) == [(None,), (0,), (1,)]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.lists(st.integers(2, 3), min_size=1, max_size=4))
def test_marginals_are_distributions(seed, sizes):
    m = generate_random_model(ModelShape(tuple(sizes), min(1, len(sizes))), seed)
    for k in m.regimes:
        for name in m.names:
            p = marginal(m, m.labels(k), [name]).probs
            assert (p >= 0).all() and abs(p.sum() - 1.0) < 1e-12
