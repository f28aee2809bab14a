"""Distributional consistency and the lemmas built on it.

Every lemma is checked as an implication on a concrete model: its premise
(distributional consistency plus any assumed independence) and its
conclusion are evaluated numerically, and the instance is a failure only
when the premise holds and the conclusion fails.
"""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Optional, Sequence

import numpy as np

from .dag import AugmentedDAG, node_markov_statement, target_markov_statements
from .eci import ECIStatement, checked, evaluate, full
from .model import (
    IDLE,
    ModelError,
    ModelShape,
    MultiRegimeModel,
    generate_random_model,
    generate_structural_model,
    is_variation_independent,
    random_structural_spec,
)
from .verdict import Outcome, Verdict, Witness, conjoin, tv_distance

__all__ = [
    "LemmaId",
    "LemmaBinding",
    "ImplicationReport",
    "BindingError",
    "GeneratorConfig",
    "SuiteReport",
    "check_distributional_consistency",
    "check_subset_consistency",
    "decompose_dc",
    "induction_check",
    "check_lemma",
    "admissible_bindings",
    "run_suite",
]


class LemmaId(str, enum.Enum):
    DC_DEF = "DC_DEF"
    DC_PAIR = "DC_PAIR"
    EQ2_STRONG = "EQ2_STRONG"
    L1_SUBSET = "L1_SUBSET"
    L2_CONDITION = "L2_CONDITION"
    L3_PROMOTE = "L3_PROMOTE"
    C1_JOINT = "C1_JOINT"
    C2_CHECKED_CONTEXT = "C2_CHECKED_CONTEXT"
    L4_COND_PROMOTE = "L4_COND_PROMOTE"
    L5_INDUCTION = "L5_INDUCTION"
    C3_INTERLEAVE = "C3_INTERLEAVE"
    L6_PARENT_REDUCE = "L6_PARENT_REDUCE"


GRAPH_LEMMAS = frozenset({LemmaId.L5_INDUCTION, LemmaId.C3_INTERLEAVE, LemmaId.L6_PARENT_REDUCE})


class BindingError(ValueError):
    pass


@dataclass(frozen=True)
class LemmaBinding:
    """Free sets of one lemma instance.

    ``B`` and ``D`` are target sets, ``K`` targets whose context indicator is
    checked, ``W`` and ``Y`` variable sets. Graph lemmas use ``dag`` with
    ``r`` (1-based position of a target in topological order) or ``node``.
    """

    B: tuple[str, ...] = ()
    D: tuple[str, ...] = ()
    K: tuple[str, ...] = ()
    W: tuple[str, ...] = ()
    Y: tuple[str, ...] = ()
    r: Optional[int] = None
    node: Optional[str] = None
    dag: Optional[AugmentedDAG] = field(default=None, compare=False)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {}
        for name in ("B", "D", "K", "W", "Y"):
            if getattr(self, name):
                out[name] = list(getattr(self, name))
        if self.r is not None:
            out["r"] = self.r
        if self.node is not None:
            out["node"] = self.node
        return out

    @classmethod
    def from_dict(cls, data: dict, dag: Optional[AugmentedDAG] = None) -> "LemmaBinding":
        return cls(
            B=tuple(data.get("B", ())),
            D=tuple(data.get("D", ())),
            K=tuple(data.get("K", ())),
            W=tuple(data.get("W", ())),
            Y=tuple(data.get("Y", ())),
            r=data.get("r"),
            node=data.get("node"),
            dag=dag,
        )


@dataclass(frozen=True)
class ImplicationReport:
    lemma: LemmaId
    binding: LemmaBinding
    premise: Verdict
    conclusion: Verdict
    variation_independent: bool
    details: dict = field(default_factory=dict)

    @property
    def implication_ok(self) -> bool:
        return not (self.premise.holds and self.conclusion.fails)

    def to_dict(self) -> dict:
        return {
            "lemma": self.lemma.value,
            "binding": self.binding.to_dict(),
            "premise": self.premise.to_dict(),
            "conclusion": self.conclusion.to_dict(),
            "implication_ok": self.implication_ok,
            "variation_independent": self.variation_independent,
            "details": self.details,
        }


# --- paired-regime comparisons -----------------------------------------------


def _pair_check(
    model: MultiRegimeModel,
    comparisons: Iterable[tuple[tuple, tuple, dict[str, int]]],
    left: Sequence[str],
    tol: float,
    label: str,
    joint: bool = True,
    cond: Sequence[str] = (),
) -> Verdict:
    """Compare two regimes at a fixed event, for each listed comparison.

    With ``joint`` the unnormalised slices ``P(left, event)`` are compared;
    otherwise ``P(left | event, cond=c)`` for every ``c`` where both sides
    are defined.
    """
    left, cond = tuple(left), tuple(cond)
    missing: list[dict] = []
    worst, witness, seen = 0.0, None, False
    for key_a, key_b, event in comparisons:
        absent = [k for k in (key_a, key_b) if k not in model.regimes]
        if absent:
            missing.extend(model.labels(k) for k in absent)
            continue
        ev_names = tuple(event)
        names = ev_names + cond + left
        idx = tuple(event[n] for n in ev_names)
        ev_labels = {n: model.decl(n).domain[i] for n, i in event.items()}
        sa = model.marginal_array(key_a, names)[idx]
        sb = model.marginal_array(key_b, names)[idx]
        if joint:
            seen = True
            pa, pb = np.ravel(sa), np.ravel(sb)
            d = tv_distance(pa, pb)
            if d > worst:
                worst = d
                witness = Witness(left, model.labels(key_a), ev_labels, tuple(pa.tolist()),
                                  model.labels(key_b), ev_labels, tuple(pb.tolist()), d, "joint")
            continue
        cshape = tuple(len(model.decl(n).domain) for n in cond)
        sa = np.reshape(sa, (int(np.prod(cshape)), -1))
        sb = np.reshape(sb, (int(np.prod(cshape)), -1))
        for c in range(sa.shape[0]):
            ma, mb = sa[c].sum(), sb[c].sum()
            if ma <= 0.0 or mb <= 0.0:
                continue
            seen = True
            pa, pb = sa[c] / ma, sb[c] / mb
            d = tv_distance(pa, pb)
            if d > worst:
                worst = d
                given = dict(ev_labels)
                if cond:
                    for n, i in zip(cond, np.unravel_index(c, cshape)):
                        given[n] = model.decl(n).domain[int(i)]
                witness = Witness(left, model.labels(key_a), given, tuple(pa.tolist()),
                                  model.labels(key_b), given, tuple(pb.tolist()), d)
    if not seen:
        return Verdict(Outcome.VACUOUS, None, 0.0, tuple(missing), label)
    if worst > tol:
        return Verdict(Outcome.FAILS, witness, worst, tuple(missing), label)
    return Verdict(Outcome.HOLDS, None, worst, tuple(missing), label)


def _require_targets(model: MultiRegimeModel, B: Iterable[str]) -> tuple[str, ...]:
    B = tuple(B)
    for b in B:
        if b not in model.targets:
            raise ModelError(f"{b!r} is not an intervention target")
    if len(set(B)) != len(B):
        raise ModelError("repeated target")
    return B


def _set_vs_idle(
    model: MultiRegimeModel, B: Sequence[str], fixed: Optional[dict[str, list]] = None
) -> Iterator[tuple[tuple, tuple, dict[str, int]]]:
    """For each value ``b`` of B and each state of the other indicators: (F_B=b, F_B=idle, {B: b}).

    ``fixed`` restricts the states of some other indicators.
    """
    fixed = fixed or {}
    pos = {t: i for i, t in enumerate(model.targets)}
    rest = [t for t in model.targets if t not in B]
    rest_states = [
        fixed.get(t, [IDLE] + list(range(len(model.decl(t).domain)))) for t in rest
    ]
    b_values = list(itertools.product(*(range(len(model.decl(b).domain)) for b in B)))
    for bval in b_values:
        for rstate in itertools.product(*rest_states):
            key_set = [IDLE] * len(model.targets)
            for t, s in zip(rest, rstate):
                key_set[pos[t]] = s
            key_idle = list(key_set)
            for t, s in zip(B, bval):
                key_set[pos[t]] = s
            yield tuple(key_set), tuple(key_idle), dict(zip(B, bval))


def check_distributional_consistency(model: MultiRegimeModel, B: str, tol: float = 1e-9) -> Verdict:
    """``Pr(Y=y, B=b | F_B=b, F_rest) = Pr(Y=y, B=b | F_B=idle, F_rest)`` with ``Y`` the other variables."""
    (B,) = _require_targets(model, (B,))
    left = tuple(n for n in model.names if n != B)
    return _pair_check(model, _set_vs_idle(model, (B,)), left, tol, f"DC[{B}]")


def check_subset_consistency(
    model: MultiRegimeModel, B: Sequence[str], Y: Optional[Sequence[str]] = None, tol: float = 1e-9
) -> Verdict:
    """The same equality for a target set ``B`` and any ``Y`` outside it (default: all of it)."""
    B = _require_targets(model, B)
    if Y is None:
        Y = tuple(n for n in model.names if n not in B)
    if set(Y) & set(B):
        raise ModelError("Y must be disjoint from B")
    return _pair_check(model, _set_vs_idle(model, B), tuple(Y), tol, f"DC[{','.join(B)}|{','.join(Y)}]")


def dc_all(model: MultiRegimeModel, tol: float = 1e-9) -> Verdict:
    """Distributional consistency for every single target (cached per model)."""
    ck = ("dc-all", tol)
    hit = model._cache.get(ck)
    if hit is None:
        hit = conjoin(
            [check_distributional_consistency(model, t, tol) for t in model.targets], "DC"
        )
        model._cache[ck] = hit
    return hit


def decompose_dc(model: MultiRegimeModel, B: str, tol: float = 1e-9) -> tuple[Verdict, Verdict, Verdict]:
    """Verdicts for the conditional half, the marginal half, and the stronger invariance of ``B``.

    The conditional half compares ``Pr(Y | B=b)`` and the marginal half
    ``Pr(B=b)`` between ``F_B=b`` and idle. The third is ``B _||_ F(B) | F(rest)``.
    """
    (B,) = _require_targets(model, (B,))
    rest = tuple(n for n in model.names if n != B)
    others = tuple(t for t in model.targets if t != B)
    pairs = list(_set_vs_idle(model, (B,)))
    conditional_half = _pair_check(model, pairs, rest, tol, f"dc2[{B}]", joint=False)
    marginal_half = _pair_check(model, pairs, (), tol, f"dc1[{B}]")
    strong = evaluate(model, ECIStatement(left=(B,), group=full(B), context=full(*others)), tol)
    return conditional_half, marginal_half, strong


def induction_check(model: MultiRegimeModel, B: Sequence[str], tol: float = 1e-9) -> Verdict:
    """Stepwise proof of the subset equality, one link at a time.

    ``B`` is split as ``D + [E]``. The first link moves ``F_E`` from ``e`` to
    idle with ``F_D = d`` held (single-target consistency); the second moves
    ``F_D`` to idle with ``F_E`` idle, checked recursively. The verdict is the
    conjunction of every link.
    """
    B = _require_targets(model, B)
    if not B:
        raise ModelError("B must be non-empty")
    links = _links(model, B, {}, tol)
    v = conjoin(links, f"induction[{','.join(B)}]")
    return v


def _links(model: MultiRegimeModel, B: tuple[str, ...], fixed: dict, tol: float) -> list[Verdict]:
    Z = tuple(n for n in model.names if n not in B)
    if len(B) == 1:
        return [_pair_check(model, _set_vs_idle(model, B, fixed), Z, tol, f"link[{B[0]}]")]
    D, E = B[:-1], B[-1]
    pos = {t: i for i, t in enumerate(model.targets)}
    comparisons = []
    for key_set, key_idle, event in _set_vs_idle(model, B, fixed):
        # hold F_D at d; move only F_E
        mid = list(key_set)
        mid[pos[E]] = IDLE
        comparisons.append((key_set, tuple(mid), event))
    step = _pair_check(model, comparisons, Z, tol, f"link[{E}|{','.join(D)}]")
    return [step] + _links(model, D, {**fixed, E: [IDLE]}, tol)


# --- lemma templates ---------------------------------------------------------


def _subsets(items: Sequence[str], min_size: int = 0) -> list[tuple[str, ...]]:
    return [
        c for k in range(min_size, len(items) + 1) for c in itertools.combinations(items, k)
    ]


def _ordered(model: MultiRegimeModel, names: Iterable[str]) -> tuple[str, ...]:
    s = set(names)
    return tuple(n for n in model.names if n in s)


def _eval(model, stmt, tol) -> Verdict:
    return evaluate(model, stmt, tol)


def _need_dag(binding: LemmaBinding) -> AugmentedDAG:
    if binding.dag is None:
        raise BindingError("this lemma needs a DAG with a topological order")
    return binding.dag


def _graph_premise(model: MultiRegimeModel, dag: AugmentedDAG, tol: float) -> Verdict:
    ck = ("graph-premise", dag, tol)
    hit = model._cache.get(ck)
    if hit is None:
        parts = [dc_all(model, tol)] + [_eval(model, s, tol) for s in target_markov_statements(dag)]
        hit = conjoin(parts, "DC + target Markov")
        model._cache[ck] = hit
    return hit


def _validate_binding(model: MultiRegimeModel, lemma: LemmaId, b: LemmaBinding) -> None:
    A, V = set(model.targets), set(model.names)

    def need(cond: bool, msg: str):
        if not cond:
            raise BindingError(f"{lemma.value}: {msg}")

    for name in ("W", "Y"):
        need(set(getattr(b, name)) <= V, f"{name} names unknown variables")
    for name in ("B", "D", "K"):
        need(set(getattr(b, name)) <= A, f"{name} must be a set of targets")
    if lemma in (LemmaId.DC_DEF, LemmaId.DC_PAIR, LemmaId.EQ2_STRONG):
        need(len(b.B) == 1, "B must be a single target")
    if lemma in (LemmaId.DC_DEF, LemmaId.L1_SUBSET):
        need(not set(b.Y) & set(b.B), "Y must avoid B")
    if lemma in (LemmaId.L1_SUBSET, LemmaId.L2_CONDITION, LemmaId.L3_PROMOTE, LemmaId.C1_JOINT,
                 LemmaId.C2_CHECKED_CONTEXT, LemmaId.L4_COND_PROMOTE):
        need(len(b.B) >= 1, "B must be non-empty")
    if lemma is LemmaId.L2_CONDITION:
        need(not set(b.W) & set(b.B), "W must avoid B")
    if lemma in (LemmaId.L3_PROMOTE, LemmaId.C1_JOINT, LemmaId.C2_CHECKED_CONTEXT, LemmaId.L4_COND_PROMOTE):
        need(set(b.B) <= set(b.W), "W must contain B")
    if lemma in (LemmaId.C1_JOINT, LemmaId.C2_CHECKED_CONTEXT):
        need(not set(b.D) & set(b.B), "D must be disjoint from B")
    if lemma is LemmaId.C1_JOINT:
        need(len(b.D) >= 1, "D must be non-empty")
    if lemma is LemmaId.C2_CHECKED_CONTEXT:
        need(len(b.K) >= 1, "K must be non-empty")
        need(not set(b.K) & (set(b.B) | set(b.D)), "K must avoid B and D")
    if lemma is LemmaId.L4_COND_PROMOTE:
        need(len(b.Y) >= 1 and not set(b.Y) & set(b.W), "Y must be non-empty and disjoint from W")
    if lemma in GRAPH_LEMMAS:
        dag = _need_dag(b)
        need(set(dag.nodes) <= V and set(dag.targets) == A, "DAG does not match the model")
    if lemma is LemmaId.L5_INDUCTION:
        need(b.r is not None and 1 <= b.r <= len(model.targets), "r must index a target")
    if lemma in (LemmaId.C3_INTERLEAVE, LemmaId.L6_PARENT_REDUCE):
        need(b.node is not None and b.node in b.dag.nodes and b.node not in A,
             "node must be a non-target DAG node")


def lemma_statements(model: MultiRegimeModel, lemma: LemmaId, b: LemmaBinding) -> dict[str, list]:
    """The ECI statements an instance evaluates, keyed ``premise`` / ``conclusion``.

    Premise lists omit distributional consistency itself, which is not an ECI
    statement; lemmas whose whole content is a table equality return empty lists.
    """
    A = model.targets
    rest = tuple(t for t in A if t not in b.B)
    if lemma is LemmaId.EQ2_STRONG:
        (t,) = b.B
        return {"premise": [ECIStatement(left=(t,), group=full(t), context=full(*rest))], "conclusion": []}
    if lemma is LemmaId.L3_PROMOTE:
        W = _ordered(model, b.W)
        return {
            "premise": [ECIStatement(left=W, group=checked(*b.B), context=full(*rest))],
            "conclusion": [ECIStatement(left=W, group=full(*b.B), context=full(*rest))],
        }
    if lemma in (LemmaId.C1_JOINT, LemmaId.C2_CHECKED_CONTEXT):
        W = _ordered(model, b.W)
        others = tuple(t for t in rest if t not in b.D)
        ctx = checked(*[t for t in others if t in b.K]) + full(*[t for t in others if t not in b.K])
        return {
            "premise": [ECIStatement(left=W, group=checked(*b.B) + full(*b.D), context=ctx)],
            "conclusion": [ECIStatement(left=W, group=full(*b.B) + full(*b.D), context=ctx)],
        }
    if lemma is LemmaId.L4_COND_PROMOTE:
        W, Y = _ordered(model, b.W), _ordered(model, b.Y)
        return {
            "premise": [ECIStatement(left=Y, group=checked(*b.B), given=W, context=full(*rest))],
            "conclusion": [ECIStatement(left=Y, group=full(*b.B), given=W, context=full(*rest))],
        }
    if lemma in GRAPH_LEMMAS:
        dag = b.dag
        premise = target_markov_statements(dag)
        ts = dag.ordered_targets()
        if lemma is LemmaId.L5_INDUCTION:
            t = ts[b.r - 1]
            z = dag.pre(t) + (t,)
            concl = ECIStatement(left=z, group=full(*ts[b.r - 1 :]), context=checked(*ts[: b.r - 1]))
        elif lemma is LemmaId.C3_INTERLEAVE:
            pre = dag.pre(b.node)
            before = [t for t in ts if t in pre]
            after = [t for t in ts if t not in pre]
            concl = ECIStatement(left=pre + (b.node,), group=full(*after), context=checked(*before))
        else:
            premise = premise + [node_markov_statement(dag, b.node)]
            pre, pa = dag.pre(b.node), set(dag.pa(b.node))
            concl = ECIStatement(
                left=(b.node,),
                group=full(*[t for t in ts if t not in pa]),
                given=pre,
                context=checked(*[t for t in ts if t in pa]),
            )
        return {"premise": premise, "conclusion": [concl]}
    return {"premise": [], "conclusion": []}


def check_lemma(
    model: MultiRegimeModel, lemma: LemmaId | str, binding: LemmaBinding, tol: float = 1e-9
) -> ImplicationReport:
    """Evaluate one lemma instance's premise and conclusion on ``model``."""
    lemma = LemmaId(lemma)
    _validate_binding(model, lemma, binding)
    b = binding
    vi = is_variation_independent(model)
    details: dict = {}
    stmts = lemma_statements(model, lemma, b)
    evals = {k: [_eval(model, s, tol) for s in v] for k, v in stmts.items()}

    if lemma is LemmaId.DC_DEF:
        (t,) = b.B
        premise = check_distributional_consistency(model, t, tol)
        conclusion = check_subset_consistency(model, b.B, b.Y, tol)
    elif lemma is LemmaId.DC_PAIR:
        (t,) = b.B
        premise = check_distributional_consistency(model, t, tol)
        half2, half1, _ = decompose_dc(model, t, tol)
        conclusion = conjoin([half2, half1], "dc2 & dc1")
    elif lemma is LemmaId.EQ2_STRONG:
        (t,) = b.B
        premise = evals["premise"][0]
        conclusion = decompose_dc(model, t, tol)[1]
    elif lemma is LemmaId.L1_SUBSET:
        premise = dc_all(model, tol)
        conclusion = check_subset_consistency(model, b.B, b.Y, tol)
        direct = check_subset_consistency(model, b.B, None, tol)
        stepwise = induction_check(model, b.B, tol)
        details = {
            "direct": direct.outcome.value,
            "stepwise": stepwise.outcome.value,
            "induction_agrees": direct.outcome is stepwise.outcome,
        }
    elif lemma is LemmaId.L2_CONDITION:
        premise = dc_all(model, tol)
        B = tuple(b.B)
        left = tuple(n for n in model.names if n not in B and n not in b.W)
        conclusion = _pair_check(model, _set_vs_idle(model, B), left, tol, "conditioned DC",
                                 joint=False, cond=_ordered(model, b.W))
    else:
        base = _graph_premise(model, b.dag, tol) if lemma in GRAPH_LEMMAS else dc_all(model, tol)
        extra = evals["premise"][len(target_markov_statements(b.dag)):] if lemma in GRAPH_LEMMAS else evals["premise"]
        premise = conjoin([base] + list(extra), "premise")
        conclusion = conjoin(evals["conclusion"], "conclusion")
        if stmts["conclusion"]:
            details["conclusion_statement"] = str(stmts["conclusion"][0])
    return ImplicationReport(lemma, b, premise, conclusion, vi, details)


def admissible_bindings(
    model: MultiRegimeModel, lemma: LemmaId | str, dag: Optional[AugmentedDAG] = None
) -> list[LemmaBinding]:
    """Every binding satisfying the lemma's set constraints, in a fixed order."""
    lemma = LemmaId(lemma)
    A, V = model.targets, model.names
    out: list[LemmaBinding] = []
    if lemma in (LemmaId.DC_PAIR, LemmaId.EQ2_STRONG):
        return [LemmaBinding(B=(t,)) for t in A]
    if lemma is LemmaId.DC_DEF:
        return [
            LemmaBinding(B=(t,), Y=y) for t in A for y in _subsets([n for n in V if n != t])
        ]
    if lemma in (LemmaId.L1_SUBSET, LemmaId.L2_CONDITION):
        for B in _subsets(A, 1):
            for s in _subsets([n for n in V if n not in B]):
                out.append(LemmaBinding(B=B, Y=s) if lemma is LemmaId.L1_SUBSET else LemmaBinding(B=B, W=s))
        return out
    if lemma is LemmaId.L3_PROMOTE:
        for B in _subsets(A, 1):
            for s in _subsets([n for n in V if n not in B]):
                out.append(LemmaBinding(B=B, W=_ordered(model, B + s)))
        return out
    if lemma in (LemmaId.C1_JOINT, LemmaId.C2_CHECKED_CONTEXT):
        for B in _subsets(A, 1):
            free = [t for t in A if t not in B]
            for D in _subsets(free, 1 if lemma is LemmaId.C1_JOINT else 0):
                Ks = [()] if lemma is LemmaId.C1_JOINT else _subsets([t for t in free if t not in D], 1)
                for K in Ks:
                    for s in _subsets([n for n in V if n not in B]):
                        out.append(LemmaBinding(B=B, D=D, K=K, W=_ordered(model, B + s)))
        return out
    if lemma is LemmaId.L4_COND_PROMOTE:
        for B in _subsets(A, 1):
            for s in _subsets([n for n in V if n not in B]):
                W = _ordered(model, B + s)
                for Y in _subsets([n for n in V if n not in W], 1):
                    out.append(LemmaBinding(B=B, W=W, Y=Y))
        return out
    if dag is None:
        return []
    ts = dag.ordered_targets()
    if lemma is LemmaId.L5_INDUCTION:
        return [LemmaBinding(r=r, dag=dag) for r in range(1, len(ts) + 1)]
    for n in dag.order:
        if n in dag.targets:
            continue
        if lemma is LemmaId.C3_INTERLEAVE:
            if any(t not in dag.pre(n) for t in ts):
                out.append(LemmaBinding(node=n, dag=dag))
        elif any(t not in dag.pa(n) for t in ts):
            out.append(LemmaBinding(node=n, dag=dag))
    return out


# --- suite -------------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorConfig:
    """Corpus of models for a suite run.

    ``kind="structural"`` expands random mechanisms (consistent and
    variation independent by construction); ``kind="random"`` draws
    unrelated tables per regime.
    """

    kind: str = "structural"
    min_vars: int = 2
    max_vars: int = 4
    min_targets: int = 1
    max_targets: int = 2
    max_domain: int = 2
    edge_prob: float = 0.5

    def __post_init__(self):
        if self.kind not in ("structural", "random"):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if not 1 <= self.min_vars <= self.max_vars:
            raise ValueError("need 1 <= min_vars <= max_vars")
        if not 0 <= self.min_targets <= self.max_targets:
            raise ValueError("need 0 <= min_targets <= max_targets")

    def sample(self, seed) -> tuple[MultiRegimeModel, AugmentedDAG]:
        rng = np.random.default_rng(seed)
        n = int(rng.integers(self.min_vars, self.max_vars + 1))
        k = int(rng.integers(min(self.min_targets, n), min(self.max_targets, n) + 1))
        sizes = tuple(int(s) for s in rng.integers(2, self.max_domain + 1, size=n))
        shape = ModelShape(sizes, k)
        spec = random_structural_spec(shape, int(rng.integers(2**63)), self.edge_prob)
        dag = AugmentedDAG.from_spec(spec)
        if self.kind == "structural":
            return generate_structural_model(spec), dag
        model = generate_random_model(shape, int(rng.integers(2**63)))
        # random tables name their targets V1..Vk; keep the DAG in step
        dag = AugmentedDAG(dag.nodes, model.targets, tuple(e for e in dag.edges if not e[0].startswith("F_")), dag.order)
        return model, dag

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class LemmaCounts:
    instances: int = 0
    premise_holds: int = 0
    vacuous: int = 0
    conclusion_holds: int = 0
    implication_failures: int = 0
    failures: list = field(default_factory=list)

    def merge(self, other: "LemmaCounts") -> None:
        self.instances += other.instances
        self.premise_holds += other.premise_holds
        self.vacuous += other.vacuous
        self.conclusion_holds += other.conclusion_holds
        self.implication_failures += other.implication_failures
        self.failures.extend(other.failures)

    def to_dict(self) -> dict:
        return {
            "instances": self.instances,
            "premise_holds": self.premise_holds,
            "vacuous": self.vacuous,
            "conclusion_holds": self.conclusion_holds,
            "implication_failures": self.implication_failures,
            "failures": self.failures,
        }


@dataclass
class SuiteReport:
    config: GeneratorConfig
    lemmas: tuple[LemmaId, ...]
    trials: int
    seed: int
    tol: float
    counts: dict[LemmaId, LemmaCounts]
    induction_disagreements: int = 0

    @property
    def total_failures(self) -> int:
        return sum(c.implication_failures for c in self.counts.values())

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "lemmas": [l.value for l in self.lemmas],
            "trials": self.trials,
            "seed": self.seed,
            "tol": self.tol,
            "induction_disagreements": self.induction_disagreements,
            "counts": {l.value: self.counts[l].to_dict() for l in self.lemmas},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def run_suite(
    config: GeneratorConfig,
    lemma_ids: Sequence[LemmaId | str],
    trials: int,
    seed: int = 0,
    tol: float = 1e-9,
) -> SuiteReport:
    """Check every admissible instance of each lemma on ``trials`` generated models.

    Trial ``i`` draws its model from the seed pair ``(seed, i)``, so reports
    are reproducible and trials are independent.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    lemmas = tuple(LemmaId(l) for l in lemma_ids)
    if not lemmas:
        raise ValueError("no lemmas given")
    counts = {l: LemmaCounts() for l in lemmas}
    disagreements = 0
    for trial in range(trials):
        model, dag = config.sample([seed, trial])
        for lemma in lemmas:
            c = counts[lemma]
            for binding in admissible_bindings(model, lemma, dag):
                rep = check_lemma(model, lemma, binding, tol)
                c.instances += 1
                if rep.premise.holds:
                    c.premise_holds += 1
                else:
                    c.vacuous += 1
                if rep.conclusion.holds:
                    c.conclusion_holds += 1
                if not rep.implication_ok:
                    c.implication_failures += 1
                    c.failures.append({"trial": trial, "report": rep.to_dict()})
                if lemma is LemmaId.L1_SUBSET and not rep.details["induction_agrees"]:
                    disagreements += 1
    return SuiteReport(config, lemmas, trials, seed, tol, counts, disagreements)
