"""Augmented DAGs: stochastic nodes plus founder intervention-indicator nodes."""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from .eci import ECIStatement, checked, evaluate, full
from .model import ModelError, MultiRegimeModel, StructuralSpec, generate_structural_model
from .verdict import Verdict

__all__ = [
    "AugmentedDAG",
    "DagError",
    "indicator_name",
    "received_name",
    "validate_dag",
    "d_separated",
    "switch_dag",
    "local_markov_statements",
    "target_markov_statements",
    "node_markov_statement",
    "verify_local_markov",
    "expand_itt",
    "implied_independencies",
    "statement_for_triple",
    "load_dag",
    "dump_dag",
]


class DagError(ValueError):
    pass


def indicator_name(target: str) -> str:
    return f"F_{target}"


def received_name(target: str) -> str:
    return f"{target}~"


@dataclass(frozen=True)
class AugmentedDAG:
    """Stochastic nodes in ``order`` plus one indicator ``F_t`` per target.

    ``edges`` may contain indicator edges; a target without one gets the
    edge ``F_t -> t``. Construction never rejects a graph, so that
    :func:`validate_dag` can report what is wrong with it.
    """

    nodes: tuple[str, ...]
    targets: tuple[str, ...] = ()
    edges: tuple[tuple[str, str], ...] = ()
    order: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "targets", tuple(self.targets))
        edges = [tuple(e) for e in self.edges]
        have = {a for a, _ in edges}
        for t in self.targets:
            if indicator_name(t) not in have:
                edges.append((indicator_name(t), t))
        object.__setattr__(self, "edges", tuple(dict.fromkeys(edges)))
        object.__setattr__(self, "order", tuple(self.order) if self.order is not None else self.nodes)
        parents: dict[str, list[str]] = {n: [] for n in self.all_nodes}
        children: dict[str, list[str]] = {n: [] for n in self.all_nodes}
        for a, b in self.edges:
            children.setdefault(a, []).append(b)
            parents.setdefault(b, []).append(a)
        object.__setattr__(self, "_parents", {k: tuple(v) for k, v in parents.items()})
        object.__setattr__(self, "_children", {k: tuple(v) for k, v in children.items()})

    @classmethod
    def from_spec(cls, spec: StructuralSpec) -> "AugmentedDAG":
        edges = [(p, v) for v in spec.order for p in spec.parents[v]]
        return cls(spec.order, spec.targets, tuple(edges), spec.order)

    @property
    def indicators(self) -> tuple[str, ...]:
        return tuple(indicator_name(t) for t in self.targets)

    @property
    def all_nodes(self) -> tuple[str, ...]:
        return self.nodes + self.indicators

    def parents(self, node: str) -> tuple[str, ...]:
        return self._parents.get(node, ())

    def children(self, node: str) -> tuple[str, ...]:
        return self._children.get(node, ())

    def pre(self, node: str) -> tuple[str, ...]:
        """Stochastic nodes strictly before ``node`` in the declared order."""
        return self.order[: self.order.index(node)]

    def pa(self, node: str) -> tuple[str, ...]:
        """Stochastic parents, in declared order."""
        ps = set(self.parents(node))
        return tuple(n for n in self.order if n in ps)

    def ordered_targets(self) -> tuple[str, ...]:
        return tuple(n for n in self.order if n in self.targets)

    def target_of(self, indicator: str) -> Optional[str]:
        for t in self.targets:
            if indicator_name(t) == indicator:
                return t
        return None

    def to_dict(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "targets": list(self.targets),
            "edges": [list(e) for e in self.edges],
            "order": list(self.order),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "AugmentedDAG":
        try:
            return cls(
                tuple(data["nodes"]),
                tuple(data.get("targets", ())),
                tuple(tuple(e) for e in data.get("edges", ())),
                tuple(data["order"]) if data.get("order") is not None else None,
            )
        except (KeyError, TypeError) as exc:
            raise DagError(f"malformed DAG document: {exc!r}") from None


def load_dag(path: Union[str, Path]) -> AugmentedDAG:
    with open(path, encoding="utf-8") as fh:
        return AugmentedDAG.from_dict(json.load(fh))


def dump_dag(dag: AugmentedDAG, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(dag.to_dict(), indent=2) + "\n", encoding="utf-8")


def _has_cycle(dag: AugmentedDAG) -> bool:
    mentioned = dict.fromkeys(list(dag.all_nodes) + [n for e in dag.edges for n in e])
    indeg = {n: len(dag.parents(n)) for n in mentioned}
    queue = deque(n for n, d in indeg.items() if d == 0)
    done = 0
    while queue:
        n = queue.popleft()
        done += 1
        for c in dag.children(n):
            indeg[c] -= 1
            if indeg[c] == 0:
                queue.append(c)
    return done < len(indeg)


def validate_dag(dag: AugmentedDAG) -> list[str]:
    """Diagnostics for every violated invariant; empty when the graph is valid."""
    diags: list[str] = []
    known = set(dag.all_nodes)
    if len(set(dag.nodes)) != len(dag.nodes):
        diags.append("duplicate: a stochastic node is listed twice")
    for t in dag.targets:
        if t not in dag.nodes:
            diags.append(f"target: {t!r} is not a stochastic node")
        if indicator_name(t) in dag.nodes:
            diags.append(f"names: indicator {indicator_name(t)!r} clashes with a stochastic node")
    for a, b in dag.edges:
        for n in (a, b):
            if n not in known:
                diags.append(f"unknown-node: edge ({a}, {b}) names unknown node {n!r}")
    for ind in dag.indicators:
        if dag.parents(ind):
            diags.append(f"in-degree: indicator {ind} has parents {list(dag.parents(ind))}")
        if len(dag.children(ind)) != 1:
            diags.append(f"out-degree: indicator {ind} has {len(dag.children(ind))} children, expected 1")
    if _has_cycle(dag):
        diags.append("acyclicity: the graph has a directed cycle")
    if sorted(dag.order) != sorted(dag.nodes):
        diags.append("order: declared order is not a permutation of the stochastic nodes")
    else:
        pos = {n: i for i, n in enumerate(dag.order)}
        for a, b in dag.edges:
            if a in pos and b in pos and pos[a] >= pos[b]:
                diags.append(f"order: edge ({a}, {b}) goes against the declared order")
    return diags


def _ancestors(dag: AugmentedDAG, nodes: Iterable[str]) -> set[str]:
    seen = set(nodes)
    stack = list(seen)
    while stack:
        for p in dag.parents(stack.pop()):
            if p not in seen:
                seen.add(p)
                stack.append(p)
    return seen


def d_separated(dag: AugmentedDAG, X: Iterable[str], Y: Iterable[str], Z: Iterable[str] = ()) -> bool:
    """Whether Z blocks every path between X and Y (reachability over trails)."""
    X, Y, Z = set(X), set(Y), set(Z)
    known = set(dag.all_nodes)
    unknown = (X | Y | Z) - known
    if unknown:
        raise DagError(f"unknown nodes: {sorted(unknown)}")
    if X & Y or X & Z or Y & Z:
        raise DagError("X, Y and Z must be disjoint")
    anc_z = _ancestors(dag, Z)
    # direction "up": reached from a child; "down": reached from a parent
    queue = deque((x, "up") for x in X)
    visited: set = set()
    while queue:
        node, direction = queue.popleft()
        if (node, direction) in visited:
            continue
        visited.add((node, direction))
        if node in Y:
            return False
        if direction == "up":
            if node not in Z:
                queue.extend((p, "up") for p in dag.parents(node))
                queue.extend((c, "down") for c in dag.children(node))
        else:
            if node not in Z:
                queue.extend((c, "down") for c in dag.children(node))
            if node in anc_z:
                queue.extend((p, "up") for p in dag.parents(node))
    return True


def switch_dag(dag: AugmentedDAG, reads_intention: Iterable[tuple[str, str]] = ()) -> AugmentedDAG:
    """Graph of the intention/received switch behind an ITT expansion.

    Each target ``t`` keeps its own node as the intention and gains a
    received node ``t~`` with parents ``t`` and ``F_t``; children of ``t``
    hang off ``t~`` unless listed in ``reads_intention``.
    """
    keep = set(map(tuple, reads_intention))
    order: list[str] = []
    for n in dag.order:
        order.append(n)
        if n in dag.targets:
            order.append(received_name(n))
    edges: list[tuple[str, str]] = []
    for a, b in dag.edges:
        if a in dag.indicators:
            continue
        if a in dag.targets and (a, b) not in keep:
            edges.append((received_name(a), b))
        else:
            edges.append((a, b))
    for t in dag.targets:
        edges.append((t, received_name(t)))
        edges.append((indicator_name(t), received_name(t)))
    return AugmentedDAG(tuple(order), dag.targets, tuple(edges), tuple(order))


def target_markov_statements(dag: AugmentedDAG) -> list[ECIStatement]:
    """``Z_r _||_ F(A_r)! | F(A_1..A_{r-1})!, F(A_{r+1}..A_k)!`` for each target in order."""
    ts = dag.ordered_targets()
    out = []
    for r, t in enumerate(ts):
        z = dag.pre(t) + (t,)
        others = ts[:r] + ts[r + 1 :]
        out.append(ECIStatement(left=z, group=checked(t), context=checked(*others)))
    return out


def node_markov_statement(dag: AugmentedDAG, node: str) -> ECIStatement:
    """Per-node statement for a non-target node ``W``::

        W _||_ F(pre-targets not parents)! | pre(W), F(parent targets)!, F(later targets)!
    """
    pre = dag.pre(node)
    pa = set(dag.pa(node))
    ts = dag.ordered_targets()
    before = [t for t in ts if t in pre]
    group = [t for t in before if t not in pa]
    ctx = [t for t in before if t in pa] + [t for t in ts if t not in pre]
    return ECIStatement(left=(node,), group=checked(*group), given=pre, context=checked(*ctx))


def local_markov_statements(dag: AugmentedDAG) -> list[ECIStatement]:
    """Target statements first (in topological order), then one per non-target node."""
    stmts = target_markov_statements(dag)
    stmts += [node_markov_statement(dag, n) for n in dag.order if n not in dag.targets]
    return stmts


def _check_names(model: MultiRegimeModel, dag: AugmentedDAG):
    extra = set(dag.nodes) - set(model.names)
    if extra:
        raise ModelError(f"DAG nodes missing from the model: {sorted(extra)}")
    if set(dag.targets) != set(model.targets):
        raise ModelError(f"DAG targets {list(dag.targets)} differ from model targets {list(model.targets)}")


def verify_local_markov(model: MultiRegimeModel, dag: AugmentedDAG, tol: float = 1e-9) -> list[Verdict]:
    _check_names(model, dag)
    return [evaluate(model, s, tol) for s in local_markov_statements(dag)]


def expand_itt(spec: StructuralSpec, seed: Optional[int] = None) -> MultiRegimeModel:
    """Multi-regime model of a mechanism, with intentions kept and received values switched."""
    return generate_structural_model(spec, seed)


def implied_independencies(dag: AugmentedDAG, max_conditioning: int) -> list[tuple[str, str, tuple[str, ...]]]:
    """All d-separations ``(x, y, Z)`` with singleton ends and ``|Z| <= max_conditioning``.

    Nodes are ranked stochastic-first in declared order, then indicators;
    each unordered pair appears once with ``x`` ranked before ``y``.
    """
    if max_conditioning < 0:
        raise ValueError("max_conditioning must be >= 0")
    nodes = list(dag.order) + list(dag.indicators)
    out = []
    for i, x in enumerate(nodes):
        for y in nodes[i + 1 :]:
            rest = [n for n in nodes if n not in (x, y)]
            for size in range(min(max_conditioning, len(rest)) + 1):
                for z in itertools.combinations(rest, size):
                    if d_separated(dag, {x}, {y}, z):
                        out.append((x, y, z))
    return out


def statement_for_triple(
    dag: AugmentedDAG, triple: tuple[str, str, Sequence[str]], variables: Iterable[str]
) -> Optional[ECIStatement]:
    """ECI reading of a d-separation, or ``None`` when it has none.

    Every indicator outside the pair is conditioned on (over all its
    states); conditioning on a founder never opens a path, so the reading is
    implied by the d-separation. Pairs of indicators and triples naming
    nodes that are not model variables have no reading.
    """
    variables = set(variables)
    x, y, z = triple
    if dag.target_of(x) is not None and dag.target_of(y) is None:
        x, y = y, x
    if x not in variables:
        return None
    stoch_z = tuple(n for n in z if dag.target_of(n) is None)
    if any(n not in variables for n in stoch_z):
        return None
    ty = dag.target_of(y)
    if ty is None:
        if y not in variables:
            return None
        return ECIStatement(left=(x,), independent=(y,), given=stoch_z, context=full(*dag.targets))
    others = tuple(t for t in dag.targets if t != ty)
    return ECIStatement(left=(x,), group=full(ty), given=stoch_z, context=full(*others))
