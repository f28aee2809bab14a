import json

import numpy as np
import pytest

from ecikit import lab
from ecikit.consistency import LemmaBinding, check_distributional_consistency, check_lemma
from ecikit.dag import AugmentedDAG, d_separated, expand_itt
from ecikit.eci import evaluate
from ecikit.model import is_variation_independent, marginal, model_from_dict
from conftest import m_ty_spec


def test_vi_search_finds_certified_counterexample():
    found = lab.search_vi_counterexample(lab.SearchConfig(budget=2000, seed=1))
    assert isinstance(found, lab.LemmaCounterexample)
    cert = found.certificate
    assert cert["premise"] == "holds" and cert["conclusion"] == "fails"
    assert cert["regimes"] < cert["product_regimes"]
    assert not is_variation_independent(found.model)
    # independent replay from the serialized document
    doc = json.loads(json.dumps(found.to_dict()))
    model = model_from_dict(doc["model"])
    rep = check_lemma(model, "L3_PROMOTE", LemmaBinding.from_dict(doc["certificate"]["binding"]))
    assert not rep.implication_ok


def test_vi_search_deterministic():
    cfg = lab.SearchConfig(budget=500, seed=7)
    a, b = lab.search_vi_counterexample(cfg), lab.search_vi_counterexample(cfg)
    assert json.dumps(a.to_dict(), sort_keys=True) == json.dumps(b.to_dict(), sort_keys=True)


def test_restricted_search_finds_nothing():
    out = lab.search_vi_counterexample(lab.SearchConfig(budget=300, restricted=True))
    assert isinstance(out, lab.NotFound) and out.trials == 300


def test_budget_precondition():
    with pytest.raises(ValueError):
        lab.SearchConfig(budget=0)
    with pytest.raises(ValueError):
        lab.search_eq13_counterexample(lab.SearchConfig(lemma="EQ13", budget=0))


def test_reduction_counterexample_certified():
    found = lab.search_eq13_counterexample(lab.SearchConfig(lemma="EQ13", budget=2000))
    assert isinstance(found, lab.ReductionCounterexample)
    assert all(p.holds and p.discrepancy <= 1e-9 for p in found.premises)
    assert found.statement.fails and found.statement.discrepancy > 1e-6
    again = evaluate(model_from_dict(found.to_dict()["model"]), found.statement.label)
    assert again.fails and again.discrepancy == pytest.approx(found.statement.discrepancy)


def test_fat_hand():
    model = lab.build_fat_hand_model()
    assert evaluate(model, "Y _||_ F(T) | T", 1e-12).holds
    assert not d_separated(lab.fat_hand_dag(), {"F_T"}, {"Y"}, {"T"})
    assert check_distributional_consistency(model, "T", 1e-12).holds
    py = [marginal(model, model.labels(k), ["Y"]).probs for k in model.regimes]
    assert all(np.allclose(p, py[0], atol=1e-12) for p in py)
    # P(Y=1) = 0.5 * 0.2 + 0.5 * 0.8
    assert py[0][1] == pytest.approx(0.5)
    with pytest.raises(ValueError):
        lab.FatHandParams(p_t=1.5)


def test_contextual_demo():
    rep = lab.contextual_demo()
    assert rep.checked.holds and rep.full.fails
    assert rep.discrepancy == pytest.approx(0.4)
    assert rep.certified and rep.itt_violations == 0


def test_contextual_on_m_ty_expansion():
    model = expand_itt(m_ty_spec())
    v = evaluate(model, "Y _||_ F(T)! | T")
    # P(Y=1 | F=f) = 0.2 + 0.6 f
    assert v.fails and v.discrepancy == pytest.approx(0.6)


def test_contextual_constant_response():
    rep = lab.contextual_demo(lab.ContextualParams(p_idle=0.4, p_set=0.4), itt_trials=1)
    assert rep.checked.holds and rep.full.holds
    with pytest.raises(ValueError):
        lab.ContextualParams(m_given_t=((0.5, 0.6), (0.5, 0.5)))
