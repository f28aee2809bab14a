"""Discrete multi-regime probability models.

A model is a family of joint distributions over one fixed set of discrete
variables, one table per regime. A regime assigns every intervention target
either idle (``None``) or one value of its domain. Internally a regime key is
a tuple aligned with ``model.targets`` holding ``None`` or a domain *index*;
the public query functions also accept a mapping ``{target: label}`` in
which unmentioned targets are idle.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .verdict import Outcome, Verdict, Witness, tv_distance

__all__ = [
    "IDLE",
    "MAX_DOMAIN",
    "MAX_TARGETS",
    "MAX_VARIABLES",
    "ModelError",
    "UnknownRegime",
    "UnknownVariable",
    "InvalidSpec",
    "VariableDecl",
    "DistributionTable",
    "Diagnostic",
    "MultiRegimeModel",
    "ModelShape",
    "StructuralSpec",
    "validate_model",
    "marginal",
    "conditional",
    "check_ci",
    "is_variation_independent",
    "product_regimes",
    "validate_spec",
    "generate_structural_model",
    "generate_random_model",
    "random_structural_spec",
    "model_to_dict",
    "model_from_dict",
    "load_model",
    "dump_model",
]

IDLE = None

MAX_DOMAIN = 4
MAX_VARIABLES = 6
MAX_TARGETS = 3

NORMALIZATION_TOL = 1e-12

RegimeKey = tuple
RegimeLike = Union[RegimeKey, Mapping[str, Any]]


class ModelError(ValueError):
    """Malformed model or query."""


class UnknownRegime(ModelError):
    pass


class UnknownVariable(ModelError):
    pass


class InvalidSpec(ModelError):
    pass


@dataclass(frozen=True)
class VariableDecl:
    name: str
    domain: tuple

    def __post_init__(self):
        object.__setattr__(self, "domain", tuple(self.domain))

    def index(self, label) -> int:
        """Position of ``label`` in the domain; labels also match by their string form."""
        for i, v in enumerate(self.domain):
            if v == label and type(v) is type(label):
                return i
        for i, v in enumerate(self.domain):
            if str(v) == str(label):
                return i
        raise ModelError(f"value {label!r} not in domain of {self.name}: {list(self.domain)}")


@dataclass(frozen=True, eq=False)
class DistributionTable:
    """Probabilities over the joint values of ``variables`` (axes in that order)."""

    variables: tuple[str, ...]
    domains: tuple[tuple, ...]
    probs: np.ndarray

    def __getitem__(self, assignment: Mapping[str, Any]) -> float:
        idx = tuple(
            VariableDecl(v, d).index(assignment[v]) for v, d in zip(self.variables, self.domains)
        )
        return float(self.probs[idx])

    def slice(self, given: Mapping[str, Any]) -> "DistributionTable":
        """Fix some variables to values and drop their axes (no renormalisation)."""
        probs = self.probs
        keep_vars, keep_doms = [], []
        index: list = []
        for v, d in zip(self.variables, self.domains):
            if v in given:
                index.append(VariableDecl(v, d).index(given[v]))
            else:
                index.append(slice(None))
                keep_vars.append(v)
                keep_doms.append(d)
        return DistributionTable(tuple(keep_vars), tuple(keep_doms), probs[tuple(index)])

    def items(self):
        for combo in itertools.product(*(range(len(d)) for d in self.domains)):
            labels = {v: d[i] for v, d, i in zip(self.variables, self.domains, combo)}
            yield labels, float(self.probs[combo])

    def close_to(self, other: "DistributionTable", tol: float = 1e-12) -> bool:
        return (
            self.variables == other.variables
            and self.probs.shape == other.probs.shape
            and bool(np.allclose(self.probs, other.probs, rtol=0.0, atol=tol))
        )

    def to_dict(self) -> dict:
        return {
            "variables": list(self.variables),
            "domains": [list(d) for d in self.domains],
            "probs": self.probs.ravel().tolist(),
        }


@dataclass(frozen=True)
class Diagnostic:
    code: str
    location: str
    message: str

    def __str__(self):
        return f"[{self.code}] {self.location}: {self.message}"


class MultiRegimeModel:
    """Immutable family of joint tables indexed by regime.

    ``regimes`` is a sequence of ``(key, table)`` pairs, or a mapping. Keys may
    be index tuples aligned with ``targets`` or label mappings. Tables are
    reshaped to the declared domain sizes; anything else that breaks an
    invariant is left for :func:`validate_model` to report.
    """

    def __init__(
        self,
        variables: Sequence[VariableDecl],
        targets: Sequence[str],
        regimes: Union[Mapping, Iterable[tuple]],
    ):
        self.variables = tuple(variables)
        self.targets = tuple(targets)
        self.names = tuple(v.name for v in self.variables)
        self._decl = {v.name: v for v in self.variables}
        self._axis = {v.name: i for i, v in enumerate(self.variables)}
        for t in self.targets:
            if t not in self._decl:
                raise UnknownVariable(f"target {t!r} is not a declared variable")
        self.shape = tuple(len(v.domain) for v in self.variables)
        pairs = regimes.items() if isinstance(regimes, Mapping) else regimes
        entries = []
        for key, table in pairs:
            arr = np.array(table, dtype=float)
            if arr.size != int(np.prod(self.shape)):
                raise ModelError(
                    f"regime {key!r}: table has {arr.size} entries, expected {int(np.prod(self.shape))}"
                )
            arr = arr.reshape(self.shape)
            arr.setflags(write=False)
            entries.append((self.key(key), arr))
        self.entries = tuple(entries)
        self.regimes: dict[RegimeKey, np.ndarray] = {}
        for k, arr in self.entries:
            self.regimes.setdefault(k, arr)
        self._cache: dict = {}

    def __repr__(self):
        return (
            f"MultiRegimeModel(variables={list(self.names)}, targets={list(self.targets)}, "
            f"regimes={len(self.regimes)})"
        )

    def decl(self, name: str) -> VariableDecl:
        try:
            return self._decl[name]
        except KeyError:
            raise UnknownVariable(f"unknown variable {name!r}") from None

    @property
    def idle_key(self) -> RegimeKey:
        return (IDLE,) * len(self.targets)

    def key(self, regime: RegimeLike) -> RegimeKey:
        """Canonical index key for a regime given as a key tuple or label mapping."""
        if isinstance(regime, Mapping):
            unknown = set(regime) - set(self.targets)
            if unknown:
                raise UnknownVariable(f"not intervention targets: {sorted(unknown)}")
            return tuple(
                IDLE if regime.get(t) is None else self._decl[t].index(regime[t])
                for t in self.targets
            )
        key = tuple(regime)
        if len(key) != len(self.targets):
            raise ModelError(f"regime key {key!r} does not match targets {self.targets}")
        for t, s in zip(self.targets, key):
            if s is not None and not (0 <= int(s) < len(self._decl[t].domain)):
                raise ModelError(f"regime key {key!r}: index {s} out of range for {t}")
        return tuple(None if s is None else int(s) for s in key)

    def labels(self, key: RegimeKey) -> dict[str, Any]:
        """Label mapping for a key, idle targets mapped to ``None``."""
        return {
            t: None if s is None else self._decl[t].domain[s] for t, s in zip(self.targets, key)
        }

    def table(self, regime: RegimeLike) -> np.ndarray:
        k = self.key(regime)
        try:
            return self.regimes[k]
        except KeyError:
            raise UnknownRegime(f"regime {self.labels(k)} not in model") from None

    def has_regime(self, regime: RegimeLike) -> bool:
        return self.key(regime) in self.regimes

    def marginal_array(self, key: RegimeKey, names: tuple[str, ...]) -> np.ndarray:
        """Exact marginal over ``names`` (axes in that order); cached."""
        ck = (key, names)
        hit = self._cache.get(ck)
        if hit is not None:
            return hit
        table = self.regimes.get(key)
        if table is None:
            raise UnknownRegime(f"regime {self.labels(key)} not in model")
        axes = []
        for n in names:
            if n not in self._axis:
                raise UnknownVariable(f"unknown variable {n!r}")
            axes.append(self._axis[n])
        if len(set(axes)) != len(axes):
            raise ModelError(f"repeated variable in {names}")
        drop = tuple(i for i in range(len(self.variables)) if i not in axes)
        out = table.sum(axis=drop) if drop else table
        kept = sorted(axes)
        out = np.asarray(np.transpose(out, [kept.index(a) for a in axes]))
        out.setflags(write=False)
        self._cache[ck] = out
        return out

    def domains(self, names: Iterable[str]) -> tuple[tuple, ...]:
        return tuple(self.decl(n).domain for n in names)


def _as_names(vars_: Union[str, Iterable[str]]) -> tuple[str, ...]:
    if isinstance(vars_, str):
        return (vars_,)
    out: list[str] = []
    for v in vars_:
        if v not in out:
            out.append(v)
    return tuple(out)


def validate_model(model: MultiRegimeModel) -> list[Diagnostic]:
    """List every violated invariant; empty when the model is well formed."""
    diags: list[Diagnostic] = []
    seen: set[str] = set()
    for v in model.variables:
        if v.name in seen:
            diags.append(Diagnostic("duplicate-variable", v.name, "variable declared twice"))
        seen.add(v.name)
        if len(v.domain) < 2:
            diags.append(Diagnostic("domain-size", v.name, f"domain has {len(v.domain)} value(s), need >= 2"))
        if len(set(map(repr, v.domain))) != len(v.domain):
            diags.append(Diagnostic("duplicate-value", v.name, "domain values are not unique"))
    if len(set(model.targets)) != len(model.targets):
        diags.append(Diagnostic("duplicate-target", "targets", "target listed twice"))
    keys_seen: set = set()
    for key, arr in model.entries:
        where = f"regime {model.labels(key)}"
        if key in keys_seen:
            diags.append(Diagnostic("duplicate-regime", where, "regime key appears more than once"))
        keys_seen.add(key)
        if (arr < 0).any():
            diags.append(Diagnostic("negative", where, f"minimum entry {arr.min():.3g} < 0"))
        total = float(arr.sum())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            diags.append(Diagnostic("normalization", where, f"entries sum to {total!r}, not 1"))
    if model.idle_key not in model.regimes:
        diags.append(Diagnostic("idle-regime-absent", "regimes", "idle regime absent"))
    return diags


def _table(model: MultiRegimeModel, names: tuple[str, ...], probs: np.ndarray) -> DistributionTable:
    return DistributionTable(names, model.domains(names), probs)


def marginal(model: MultiRegimeModel, regime: RegimeLike, vars: Union[str, Iterable[str]]) -> DistributionTable:
    """Exact marginal of ``vars`` in one regime, renormalised."""
    names = _as_names(vars)
    key = model.key(regime)
    arr = model.marginal_array(key, names)
    total = float(arr.sum())
    probs = arr / total if total > 0 else np.array(arr)
    return _table(model, names, probs)


def conditional(
    model: MultiRegimeModel,
    regime: RegimeLike,
    target_vars: Union[str, Iterable[str]],
    given: Mapping[str, Any],
) -> Optional[DistributionTable]:
    """``P(target_vars | given)`` in one regime, or ``None`` on a null event."""
    names = _as_names(target_vars)
    overlap = set(names) & set(given)
    if overlap:
        raise ModelError(f"variables both conditioned on and queried: {sorted(overlap)}")
    gnames = tuple(given)
    key = model.key(regime)
    arr = model.marginal_array(key, names + gnames)
    idx = tuple([slice(None)] * len(names) + [model.decl(g).index(given[g]) for g in gnames])
    sub = arr[idx]
    mass = float(sub.sum())
    if mass <= 0.0:
        return None
    return _table(model, names, sub / mass)


def check_ci(
    model: MultiRegimeModel,
    regime: RegimeLike,
    X: Iterable[str],
    Y: Iterable[str],
    Z: Iterable[str] = (),
    tol: float = 1e-9,
) -> Verdict:
    """Ordinary conditional independence of X and Y given Z inside one regime.

    For every ``z`` of positive probability the conditionals ``P(X | y, z)``
    are compared pairwise over the values ``y`` of positive probability; the
    discrepancy is their total-variation distance.
    """
    X, Y, Z = _as_names(X), _as_names(Y), _as_names(Z)
    if set(X) & set(Y) or set(X) & set(Z) or set(Y) & set(Z):
        raise ModelError("X, Y and Z must be disjoint")
    key = model.key(regime)
    labels = model.labels(key)
    if not X or not Y:
        any_mass = bool(model.marginal_array(key, Z).sum() > 0) if Z else True
        return Verdict(Outcome.HOLDS if any_mass else Outcome.VACUOUS, label="ci")
    arr = model.marginal_array(key, Z + Y + X)
    zdoms = [range(s) for s in arr.shape[: len(Z)]]
    ydoms = [range(s) for s in arr.shape[len(Z) : len(Z) + len(Y)]]
    worst, witness, seen = 0.0, None, False
    for zi in itertools.product(*zdoms):
        rows = []
        for yi in itertools.product(*ydoms):
            block = arr[zi + yi]
            mass = float(block.sum())
            if mass > 0.0:
                rows.append((yi, block / mass))
        seen = seen or bool(rows)
        for (ya, pa), (yb, pb) in itertools.combinations(rows, 2):
            d = tv_distance(pa, pb)
            if d > worst:
                worst = d
                zl = {n: model.decl(n).domain[i] for n, i in zip(Z, zi)}
                witness = Witness(
                    left=X,
                    regime_a=labels,
                    given_a={**zl, **{n: model.decl(n).domain[i] for n, i in zip(Y, ya)}},
                    table_a=tuple(pa.ravel().tolist()),
                    regime_b=labels,
                    given_b={**zl, **{n: model.decl(n).domain[i] for n, i in zip(Y, yb)}},
                    table_b=tuple(pb.ravel().tolist()),
                    discrepancy=d,
                )
    if not seen:
        return Verdict(Outcome.VACUOUS, label="ci")
    if worst > tol:
        return Verdict(Outcome.FAILS, witness, worst, label="ci")
    return Verdict(Outcome.HOLDS, None, worst, label="ci")


def target_states(model: MultiRegimeModel, target: str) -> list:
    """Idle followed by every domain index of ``target``."""
    return [IDLE] + list(range(len(model.decl(target).domain)))


def product_regimes(model_or_decls, targets: Sequence[str] = None) -> list[RegimeKey]:
    """All regime keys of the full Cartesian product, idle first."""
    if isinstance(model_or_decls, MultiRegimeModel):
        decls = {v.name: v for v in model_or_decls.variables}
        targets = model_or_decls.targets
    else:
        decls = {v.name: v for v in model_or_decls}
    states = [[IDLE] + list(range(len(decls[t].domain))) for t in targets]
    return [tuple(k) for k in itertools.product(*states)]


def is_variation_independent(model: MultiRegimeModel) -> bool:
    """True iff the regime set is the full product of ``{idle} + domain`` per target."""
    return set(model.regimes) == set(product_regimes(model))


# --- generators --------------------------------------------------------------


@dataclass(frozen=True)
class ModelShape:
    """Domain sizes of variables ``V1..Vn``; the first ``n_targets`` are targets."""

    domain_sizes: tuple[int, ...]
    n_targets: int = 1

    def __post_init__(self):
        object.__setattr__(self, "domain_sizes", tuple(int(s) for s in self.domain_sizes))
        if not 1 <= len(self.domain_sizes) <= MAX_VARIABLES:
            raise ValueError(f"need 1..{MAX_VARIABLES} variables")
        if any(not 2 <= s <= MAX_DOMAIN for s in self.domain_sizes):
            raise ValueError(f"domain sizes must lie in 2..{MAX_DOMAIN}")
        if not 0 <= self.n_targets <= min(MAX_TARGETS, len(self.domain_sizes)):
            raise ValueError(f"need 0..{MAX_TARGETS} targets, at most one per variable")

    def variables(self) -> tuple[VariableDecl, ...]:
        return tuple(
            VariableDecl(f"V{i + 1}", tuple(range(s))) for i, s in enumerate(self.domain_sizes)
        )


def _random_simplex(rng: np.random.Generator, k: int, floor: float = 0.02) -> np.ndarray:
    p = rng.dirichlet(np.ones(k))
    return p * (1.0 - k * floor) + floor


def generate_random_model(
    shape: ModelShape,
    seed: int,
    regime_subset: Optional[Iterable[RegimeLike]] = None,
) -> MultiRegimeModel:
    """Independent random tables for each listed regime (full product by default).

    Nothing ties the regimes together, so distributional consistency is not
    expected to hold.
    """
    variables = shape.variables()
    targets = tuple(v.name for v in variables[: shape.n_targets])
    skeleton = MultiRegimeModel(variables, targets, [])
    if regime_subset is None:
        keys = product_regimes(variables, targets)
    else:
        keys = []
        for r in regime_subset:
            k = skeleton.key(r)
            if k not in keys:
                keys.append(k)
        if skeleton.idle_key not in keys:
            raise ValueError("regime subset must contain the idle regime")
    rng = np.random.default_rng(seed)
    cells = int(np.prod(shape.domain_sizes))
    return MultiRegimeModel(variables, targets, [(k, _random_simplex(rng, cells, 0.0)) for k in keys])


@dataclass(frozen=True)
class StructuralSpec:
    """Recursive mechanism over intention (ITT) variables.

    ``cpts[v]`` has shape ``(*parent_sizes, own_size)`` with parents in the
    order of ``parents[v]``. A child of a target reads the target's *received*
    value: its intention when the indicator is idle, the set value otherwise.
    Pairs ``(target, child)`` in ``reads_intention`` make that child read the
    intention regardless of the indicator.
    """

    variables: tuple[VariableDecl, ...]
    targets: tuple[str, ...]
    order: tuple[str, ...]
    parents: Mapping[str, tuple[str, ...]]
    cpts: Optional[Mapping[str, np.ndarray]] = None
    reads_intention: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "order", tuple(self.order))
        object.__setattr__(
            self, "parents", {v.name: tuple(self.parents.get(v.name, ())) for v in self.variables}
        )
        object.__setattr__(self, "reads_intention", frozenset(map(tuple, self.reads_intention)))
        if self.cpts is not None:
            object.__setattr__(
                self, "cpts", {k: np.asarray(v, dtype=float) for k, v in self.cpts.items()}
            )

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def with_cpts(self, cpts: Mapping[str, np.ndarray]) -> "StructuralSpec":
        return StructuralSpec(
            self.variables, self.targets, self.order, self.parents, cpts, self.reads_intention
        )

    def filled(self, seed: Optional[int]) -> "StructuralSpec":
        """Copy with every missing table drawn from ``seed``."""
        have = dict(self.cpts or {})
        missing = [v for v in self.order if v not in have]
        if not missing:
            return self
        if seed is None:
            raise InvalidSpec(f"no table for {missing} and no seed given")
        rng = np.random.default_rng(seed)
        decl = {v.name: v for v in self.variables}
        for v in self.order:
            shape = tuple(len(decl[p].domain) for p in self.parents[v]) + (len(decl[v].domain),)
            if v in have:
                continue
            rows = [_random_simplex(rng, shape[-1]) for _ in range(int(np.prod(shape[:-1])))]
            have[v] = np.array(rows).reshape(shape)
        return self.with_cpts(have)


def validate_spec(spec: StructuralSpec) -> list[str]:
    problems: list[str] = []
    names = spec.names
    decl = {v.name: v for v in spec.variables}
    if len(set(names)) != len(names):
        problems.append("duplicate variable names")
    if sorted(spec.order) != sorted(names):
        problems.append("order is not a permutation of the variables")
        return problems
    pos = {v: i for i, v in enumerate(spec.order)}
    for t in spec.targets:
        if t not in decl:
            problems.append(f"target {t!r} is not a variable")
    for v, ps in spec.parents.items():
        for p in ps:
            if p not in decl:
                problems.append(f"{v}: unknown parent {p!r}")
            elif pos[p] >= pos[v]:
                problems.append(f"{v}: parent {p} does not precede it in the order")
    for t, c in spec.reads_intention:
        if t not in spec.targets or t not in spec.parents.get(c, ()):
            problems.append(f"reads_intention pair ({t}, {c}) is not a target-to-child edge")
    for v, arr in (spec.cpts or {}).items():
        if v not in decl:
            problems.append(f"table for unknown variable {v!r}")
            continue
        shape = tuple(len(decl[p].domain) for p in spec.parents[v]) + (len(decl[v].domain),)
        if arr.shape != shape:
            problems.append(f"{v}: table shape {arr.shape}, expected {shape}")
            continue
        if (arr < 0).any():
            problems.append(f"{v}: negative entries")
        if np.abs(arr.sum(axis=-1) - 1.0).max() > NORMALIZATION_TOL:
            problems.append(f"{v}: a conditional row does not sum to 1")
    return problems


def _regime_joint(spec: StructuralSpec, key: RegimeKey) -> np.ndarray:
    names = spec.names
    label = {n: i for i, n in enumerate(names)}
    setting = dict(zip(spec.targets, key))
    operands: list = []
    for v in spec.order:
        cpt = spec.cpts[v]
        axes = list(spec.parents[v])
        # fix received values from the highest axis down so indices stay valid
        for j in reversed(range(len(axes))):
            p = axes[j]
            s = setting.get(p)
            if s is not None and (p, v) not in spec.reads_intention:
                cpt = np.take(cpt, s, axis=j)
                del axes[j]
        operands += [cpt, [label[a] for a in axes] + [label[v]]]
    return np.einsum(*operands, list(range(len(names))))


def generate_structural_model(
    spec: StructuralSpec, seed: Optional[int] = None
) -> MultiRegimeModel:
    """Expand a mechanism into one table per regime of the full product.

    Missing tables are drawn from ``seed``. Received values are substituted
    and never appear as variables of the result.
    """
    spec = spec.filled(seed)
    problems = validate_spec(spec)
    if problems:
        raise InvalidSpec("; ".join(problems))
    keys = product_regimes(spec.variables, spec.targets)
    return MultiRegimeModel(spec.variables, spec.targets, [(k, _regime_joint(spec, k)) for k in keys])


def random_structural_spec(
    shape: ModelShape,
    seed: int,
    edge_prob: float = 0.5,
    intention_prob: float = 0.0,
    targets: Optional[Sequence[str]] = None,
) -> StructuralSpec:
    """Random DAG in declaration order with random tables.

    Targets are a random subset of size ``shape.n_targets`` unless given.
    Each target-to-child edge reads the intention with ``intention_prob``.
    """
    rng = np.random.default_rng(seed)
    variables = shape.variables()
    names = [v.name for v in variables]
    parents = {
        names[j]: tuple(names[i] for i in range(j) if rng.random() < edge_prob)
        for j in range(len(names))
    }
    if targets is None:
        picked = sorted(rng.choice(len(names), size=shape.n_targets, replace=False))
        targets = tuple(names[i] for i in picked)
    reads = frozenset(
        (p, c) for c in names for p in parents[c] if p in targets and rng.random() < intention_prob
    )
    spec = StructuralSpec(variables, tuple(targets), tuple(names), parents, None, reads)
    return spec.filled(int(rng.integers(2**63)))


# --- file format -------------------------------------------------------------


def model_to_dict(model: MultiRegimeModel) -> dict:
    return {
        "variables": [{"name": v.name, "domain": list(v.domain)} for v in model.variables],
        "targets": list(model.targets),
        "regimes": [
            {"assignment": model.labels(k), "probs": arr.ravel().tolist()}
            for k, arr in model.entries
        ],
    }


def model_from_dict(data: Mapping) -> MultiRegimeModel:
    try:
        variables = [VariableDecl(str(v["name"]), tuple(v["domain"])) for v in data["variables"]]
        targets = [str(t) for t in data.get("targets", [])]
        model = MultiRegimeModel(variables, targets, [])
        regimes = []
        for r in data["regimes"]:
            assignment = dict(r.get("assignment", {}))
            regimes.append((model.key(assignment), r["probs"]))
    except (KeyError, TypeError) as exc:
        raise ModelError(f"malformed model document: {exc!r}") from None
    return MultiRegimeModel(variables, targets, regimes)


def load_model(path: Union[str, Path]) -> MultiRegimeModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


def dump_model(model: MultiRegimeModel, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n", encoding="utf-8")
