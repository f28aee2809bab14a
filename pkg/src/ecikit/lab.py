"""Negative results and illustrative constructions.

Every finding returned here has been replayed on a fresh copy of its model
(rebuilt from the serialised form) before it is handed back.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .consistency import (
    ImplicationReport,
    LemmaBinding,
    LemmaId,
    admissible_bindings,
    check_lemma,
)
from .dag import AugmentedDAG, local_markov_statements
from .eci import ECIStatement, checked, evaluate, full
from .model import (
    ModelShape,
    MultiRegimeModel,
    StructuralSpec,
    VariableDecl,
    generate_structural_model,
    model_from_dict,
    model_to_dict,
    product_regimes,
    random_structural_spec,
)
from .verdict import Verdict

__all__ = [
    "SearchConfig",
    "NotFound",
    "LemmaCounterexample",
    "ReductionCounterexample",
    "search_vi_counterexample",
    "search_eq13_counterexample",
    "unconditioned_statement",
    "FatHandParams",
    "build_fat_hand_model",
    "fat_hand_dag",
    "ContextualParams",
    "ContextualReport",
    "contextual_demo",
]

REPLAY_MARGIN = 1e-6


@dataclass(frozen=True)
class SearchConfig:
    """Bounds and budget for a randomized search.

    ``restricted=True`` draws only complete, consistent structural families
    (variation independent by construction); otherwise a random non-empty
    set of non-idle regimes is dropped from each family.
    """

    lemma: Union[LemmaId, str] = LemmaId.L3_PROMOTE
    budget: int = 100_000
    seed: int = 0
    tol: float = 1e-9
    min_vars: int = 2
    max_vars: int = 3
    max_targets: int = 2
    max_domain: int = 2
    edge_prob: float = 0.6
    restricted: bool = False

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if not 1 <= self.min_vars <= self.max_vars:
            raise ValueError("need 1 <= min_vars <= max_vars")
        if self.max_targets < 1 or self.max_domain < 2:
            raise ValueError("need at least one target and binary domains")
        if isinstance(self.lemma, str) and self.lemma != "EQ13":
            object.__setattr__(self, "lemma", LemmaId(self.lemma))

    def draw_spec(self, rng: np.random.Generator) -> StructuralSpec:
        n = int(rng.integers(self.min_vars, self.max_vars + 1))
        k = int(rng.integers(1, min(self.max_targets, n) + 1))
        sizes = tuple(int(s) for s in rng.integers(2, self.max_domain + 1, size=n))
        return random_structural_spec(ModelShape(sizes, k), int(rng.integers(2**63)), self.edge_prob)

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["lemma"] = getattr(self.lemma, "value", self.lemma)
        return out


@dataclass(frozen=True)
class NotFound:
    trials: int
    config: SearchConfig

    def to_dict(self) -> dict:
        return {"found": False, "trials": self.trials, "config": self.config.to_dict()}


def _fresh(model: MultiRegimeModel) -> MultiRegimeModel:
    return model_from_dict(json.loads(json.dumps(model_to_dict(model))))


@dataclass(frozen=True)
class LemmaCounterexample:
    model: MultiRegimeModel
    binding: LemmaBinding
    report: ImplicationReport
    trials: int
    replayed_discrepancy: float

    @property
    def certificate(self) -> dict:
        return {
            "lemma": self.report.lemma.value,
            "binding": self.binding.to_dict(),
            "premise": self.report.premise.outcome.value,
            "conclusion": self.report.conclusion.outcome.value,
            "conclusion_statement": self.report.details.get("conclusion_statement"),
            "discrepancy": self.report.conclusion.discrepancy,
            "replayed_discrepancy": self.replayed_discrepancy,
            "variation_independent": self.report.variation_independent,
            "regimes": len(self.model.regimes),
            "product_regimes": len(product_regimes(self.model)),
            "trials": self.trials,
        }

    def to_dict(self) -> dict:
        return {"found": True, "model": model_to_dict(self.model), "certificate": self.certificate}

    def dump(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")


def _drop_regimes(model: MultiRegimeModel, rng: np.random.Generator) -> Optional[MultiRegimeModel]:
    keys = [k for k in model.regimes if k != model.idle_key]
    if not keys:
        return None
    n_drop = int(rng.integers(1, len(keys) + 1))
    drop = {keys[i] for i in rng.choice(len(keys), size=n_drop, replace=False)}
    kept = [(k, a) for k, a in model.entries if k not in drop]
    return MultiRegimeModel(model.variables, model.targets, kept)


def search_vi_counterexample(config: SearchConfig) -> Union[LemmaCounterexample, NotFound]:
    """Look for a regime family where ``config.lemma`` has a true premise and false conclusion.

    Each trial draws a structural mechanism, optionally removes regimes,
    picks one admissible binding and checks it. A hit is accepted only if
    the replay on a rebuilt model agrees.
    """
    lemma = LemmaId(config.lemma)
    for trial in range(config.budget):
        rng = np.random.default_rng([config.seed, trial])
        spec = config.draw_spec(rng)
        model = generate_structural_model(spec)
        if not config.restricted:
            model = _drop_regimes(model, rng)
            if model is None:
                continue
        dag = AugmentedDAG.from_spec(spec)
        bindings = admissible_bindings(model, lemma, dag)
        if not bindings:
            continue
        binding = bindings[int(rng.integers(len(bindings)))]
        rep = check_lemma(model, lemma, binding, config.tol)
        if rep.implication_ok:
            continue
        copy = _fresh(model)
        again = check_lemma(copy, lemma, LemmaBinding.from_dict(binding.to_dict(), dag), config.tol)
        w = again.conclusion.witness
        replayed = w.replay(copy) if w is not None else 0.0
        if again.implication_ok or replayed <= config.tol:
            continue
        return LemmaCounterexample(copy, binding, again, trial + 1, replayed)
    return NotFound(config.budget, config)


# --- parent reduction without conditioning on the past ---------------------


def unconditioned_statement(dag: AugmentedDAG, node: str) -> Optional[ECIStatement]:
    """``W _||_ F(earlier non-parent targets)! | F(parent targets)!``, later targets idle.

    ``None`` when every earlier target is a parent.
    """
    pre, pa = dag.pre(node), set(dag.pa(node))
    before = [t for t in dag.ordered_targets() if t in pre]
    group = [t for t in before if t not in pa]
    if not group:
        return None
    return ECIStatement(left=(node,), group=checked(*group), context=checked(*[t for t in before if t in pa]))


@dataclass(frozen=True)
class ReductionCounterexample:
    model: MultiRegimeModel
    dag: AugmentedDAG
    node: str
    premises: tuple[Verdict, ...]
    statement: Verdict
    trials: int

    @property
    def certificate(self) -> dict:
        return {
            "node": self.node,
            "premises": [
                {"statement": p.label, "outcome": p.outcome.value, "discrepancy": p.discrepancy}
                for p in self.premises
            ],
            "statement": self.statement.label,
            "outcome": self.statement.outcome.value,
            "discrepancy": self.statement.discrepancy,
            "trials": self.trials,
        }

    def to_dict(self) -> dict:
        return {
            "found": True,
            "model": model_to_dict(self.model),
            "dag": self.dag.to_dict(),
            "certificate": self.certificate,
        }

    def dump(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")


def search_eq13_counterexample(config: SearchConfig) -> Union[ReductionCounterexample, NotFound]:
    """Model whose local Markov statements all hold while the statement dropping pre(W) from the conditioning fails."""
    for trial in range(config.budget):
        rng = np.random.default_rng([config.seed, trial])
        spec = config.draw_spec(rng)
        dag = AugmentedDAG.from_spec(spec)
        candidates = [(n, unconditioned_statement(dag, n)) for n in dag.order if n not in dag.targets]
        candidates = [(n, s) for n, s in candidates if s is not None]
        if not candidates:
            continue
        model = generate_structural_model(spec)
        for node, stmt in candidates:
            if not evaluate(model, stmt, config.tol).fails:
                continue
            copy = _fresh(model)
            premises = tuple(evaluate(copy, s, config.tol) for s in local_markov_statements(dag))
            verdict = evaluate(copy, stmt, config.tol)
            if all(p.holds for p in premises) and verdict.fails and verdict.discrepancy > REPLAY_MARGIN:
                return ReductionCounterexample(copy, dag, node, premises, verdict, trial + 1)
    return NotFound(config.budget, config)


# --- fat hand -----------------------------------------------------------------


@dataclass(frozen=True)
class FatHandParams:
    """``p_t``: P(T=1) for the intended treatment; ``response[t]``: P(Y=1 | intended T=t)."""

    p_t: float = 0.5
    response: tuple[float, float] = (0.2, 0.8)

    def __post_init__(self):
        vals = (self.p_t,) + tuple(self.response)
        if len(self.response) != 2 or any(not 0.0 <= v <= 1.0 for v in vals):
            raise ValueError("probabilities must lie in [0, 1] and response needs two entries")


def fat_hand_spec(params: FatHandParams = FatHandParams()) -> StructuralSpec:
    variables = (VariableDecl("T", (0, 1)), VariableDecl("Y", (0, 1)))
    r = np.array(params.response, dtype=float)
    cpts = {
        "T": np.array([1.0 - params.p_t, params.p_t]),
        "Y": np.stack([1.0 - r, r], axis=-1),
    }
    return StructuralSpec(variables, ("T",), ("T", "Y"), {"Y": ("T",)}, cpts, frozenset({("T", "Y")}))


def fat_hand_dag() -> AugmentedDAG:
    """``F_T -> T -> Y`` plus the side channel ``F_T -> Y``."""
    return AugmentedDAG(("T", "Y"), ("T",), (("F_T", "T"), ("T", "Y"), ("F_T", "Y")))


def build_fat_hand_model(params: FatHandParams = FatHandParams()) -> MultiRegimeModel:
    """Response driven by the intended treatment, whatever value is imposed."""
    return generate_structural_model(fat_hand_spec(params))


# --- contextual independence -------------------------------------------------


@dataclass(frozen=True)
class ContextualParams:
    """Intervened-flag world: Y depends only on whether T was set at all."""

    p_idle: float = 0.3
    p_set: float = 0.7
    p_t: float = 0.5
    m_given_t: tuple[tuple[float, float], tuple[float, float]] = ((0.8, 0.2), (0.3, 0.7))

    def __post_init__(self):
        m = np.asarray(self.m_given_t, dtype=float)
        vals = [self.p_idle, self.p_set, self.p_t]
        if any(not 0.0 <= v <= 1.0 for v in vals) or m.shape != (2, 2) or (m < 0).any():
            raise ValueError("invalid probabilities")
        if np.abs(m.sum(axis=1) - 1.0).max() > 1e-12:
            raise ValueError("rows of m_given_t must sum to 1")


@dataclass(frozen=True)
class ContextualReport:
    model: MultiRegimeModel
    checked: Verdict
    full: Verdict
    itt_models: int
    itt_violations: int

    @property
    def discrepancy(self) -> float:
        return self.full.discrepancy

    @property
    def certified(self) -> bool:
        return self.checked.holds and self.full.fails and self.itt_violations == 0

    def to_dict(self) -> dict:
        return {
            "model": model_to_dict(self.model),
            "checked": self.checked.to_dict(),
            "full": self.full.to_dict(),
            "discrepancy": self.discrepancy,
            "itt_models": self.itt_models,
            "itt_violations": self.itt_violations,
            "certified": self.certified,
        }


def intervened_flag_model(params: ContextualParams = ContextualParams()) -> MultiRegimeModel:
    """``T`` intended, ``M`` reads the received ``T``, ``Y`` reads only the indicator."""
    variables = (VariableDecl("T", (0, 1)), VariableDecl("M", (0, 1)), VariableDecl("Y", (0, 1)))
    pt = np.array([1.0 - params.p_t, params.p_t])
    m = np.asarray(params.m_given_t, dtype=float)
    regimes = []
    for state in (None, 0, 1):
        pm = m if state is None else np.tile(m[state], (2, 1))
        py1 = params.p_idle if state is None else params.p_set
        py = np.array([1.0 - py1, py1])
        regimes.append(((state,), np.einsum("t,tm,y->tmy", pt, pm, py)))
    return MultiRegimeModel(variables, ("T",), regimes)


CHECKED_TEXT = "Y _||_ F(T)! | M"
FULL_TEXT = "Y _||_ F(T) | M"


def contextual_demo(params: ContextualParams = ContextualParams(), itt_trials: int = 50, seed: int = 0) -> ContextualReport:
    """Checked invariance without full invariance, replayed on a rebuilt model.

    Also confirms on ``itt_trials`` random mechanisms that whenever a full
    statement of this shape holds, its checked restriction holds as well.
    """
    model = _fresh(intervened_flag_model(params))
    chk = evaluate(model, CHECKED_TEXT, 1e-9)
    ful = evaluate(model, FULL_TEXT, 1e-9)
    violations = 0
    for trial in range(itt_trials):
        rng = np.random.default_rng([seed, trial])
        spec = random_structural_spec(ModelShape((2, 2, 2), 1), int(rng.integers(2**63)), 0.6,
                                      intention_prob=0.5)
        m = generate_structural_model(spec)
        t = m.targets[0]
        others = [n for n in m.names if n != t]
        stmt_full = ECIStatement(left=(others[-1],), group=full(t), given=tuple(others[:-1]))
        stmt_chk = ECIStatement(left=(others[-1],), group=checked(t), given=tuple(others[:-1]))
        if evaluate(m, stmt_full).holds and evaluate(m, stmt_chk).fails:
            violations += 1
    return ContextualReport(model, chk, ful, itt_trials, violations)
