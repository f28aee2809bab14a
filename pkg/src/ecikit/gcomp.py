"""Two-stage sequential g-computation and its identification check.

With treatments ``X0`` and ``X1``, intermediate ``Z`` and response ``Y``::

    g(y) = sum_z P(z | x0) * P(y | x0, z, x1)

using idle-regime conditionals only. The result identifies the response
law under the joint intervention ``F(X0)=x0, F(X1)=x1`` when ``Y`` does not
depend on the recorded ``X0`` in that regime.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np

from .eci import ECIStatement, IndicatorTerm, Mode, evaluate
from .model import (
    ModelError,
    MultiRegimeModel,
    StructuralSpec,
    UnknownRegime,
    VariableDecl,
    generate_structural_model,
)
from .verdict import Verdict, tv_distance

__all__ = [
    "GcompError",
    "SequentialProblem",
    "IdentificationReport",
    "g_formula",
    "check_corrected_condition",
    "verify_identification",
    "sequential_spec",
    "random_sequential_spec",
]


class GcompError(ModelError):
    """A conditional needed by the formula is undefined."""


@dataclass(frozen=True)
class SequentialProblem:
    model: MultiRegimeModel
    X0: str
    Z: tuple[str, ...]
    X1: str
    Y: str
    x0: Any
    x1: Any

    def __post_init__(self):
        object.__setattr__(self, "Z", (self.Z,) if isinstance(self.Z, str) else tuple(self.Z))
        m = self.model
        for n in (self.X0, self.X1):
            if n not in m.targets:
                raise ModelError(f"{n!r} must be an intervention target")
        names = (self.X0,) + self.Z + (self.X1, self.Y)
        if len(set(names)) != len(names):
            raise ModelError("X0, Z, X1 and Y must be distinct")
        for n in names:
            m.decl(n)
        pos = [m.names.index(n) for n in names]
        if pos != sorted(pos):
            raise ModelError(f"variables {names} are not in declaration order")
        m.decl(self.X0).index(self.x0)
        m.decl(self.X1).index(self.x1)

    @classmethod
    def infer(cls, model: MultiRegimeModel, x0: Any, x1: Any) -> "SequentialProblem":
        """Read the roles off a model with two targets.

        The targets in declaration order are ``X0`` and ``X1``, the variables
        strictly between them are ``Z`` and the last variable is ``Y``.
        """
        ts = [n for n in model.names if n in model.targets]
        if len(ts) != 2:
            raise ModelError(f"expected two targets, found {len(ts)}")
        i0, i1 = model.names.index(ts[0]), model.names.index(ts[1])
        Y = model.names[-1]
        if Y in ts:
            raise ModelError("the last variable must be the response, not a target")
        return cls(model, ts[0], model.names[i0 + 1 : i1], ts[1], Y, x0, x1)

    def with_values(self, x0: Any, x1: Any) -> "SequentialProblem":
        return SequentialProblem(self.model, self.X0, self.Z, self.X1, self.Y, x0, x1)

    @property
    def regime(self) -> dict[str, Any]:
        return {self.X0: self.x0, self.X1: self.x1}


def g_formula(problem: SequentialProblem) -> np.ndarray:
    """Distribution of ``Y`` assembled from idle-regime conditionals."""
    p = problem
    m = p.model
    names = (p.X0,) + p.Z + (p.X1, p.Y)
    joint = m.marginal_array(m.idle_key, names)
    i0, i1 = m.decl(p.X0).index(p.x0), m.decl(p.X1).index(p.x1)
    at_x0 = joint[i0]  # (*Z, X1, Y)
    mass_x0 = at_x0.sum()
    if mass_x0 <= 0.0:
        raise GcompError(f"P({p.X0}={p.x0}) is zero in the idle regime")
    p_z = at_x0.sum(axis=(-2, -1)) / mass_x0
    at_x1 = at_x0[..., i1, :]  # (*Z, Y)
    out = np.zeros(len(m.decl(p.Y).domain))
    zshape = tuple(len(m.decl(z).domain) for z in p.Z)
    for zi in itertools.product(*(range(k) for k in zshape)):
        if p_z[zi] <= 0.0:
            continue
        row = at_x1[zi]
        if row.sum() <= 0.0:
            ctx = {p.X0: p.x0, **{z: m.decl(z).domain[i] for z, i in zip(p.Z, zi)}, p.X1: p.x1}
            raise GcompError(f"P({p.Y} | {ctx}) is undefined in the idle regime")
        out += p_z[zi] * row / row.sum()
    return out


def corrected_statement(problem: SequentialProblem) -> ECIStatement:
    """``Y _||_ X0 | F(X0)=x0, F(X1)=x1``."""
    p = problem
    return ECIStatement(
        left=(p.Y,),
        independent=(p.X0,),
        context=(
            IndicatorTerm(p.X0, Mode.FIXED_VALUE, p.x0),
            IndicatorTerm(p.X1, Mode.FIXED_VALUE, p.x1),
        ),
    )


def check_corrected_condition(problem: SequentialProblem, tol: float = 1e-9) -> Verdict:
    return evaluate(problem.model, corrected_statement(problem), tol)


@dataclass(frozen=True)
class IdentificationReport:
    x0: Any
    x1: Any
    g: tuple[float, ...]
    interventional: tuple[float, ...]
    distance: float
    passed: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__, g=list(self.g), interventional=list(self.interventional))


def verify_identification(problem: SequentialProblem, tol: float = 1e-9) -> IdentificationReport:
    m = problem.model
    key = m.key(problem.regime)
    if key not in m.regimes:
        raise UnknownRegime(f"regime {problem.regime} not in model")
    g = g_formula(problem)
    q = m.marginal_array(key, (problem.Y,))
    q = q / q.sum()
    d = tv_distance(g, q)
    return IdentificationReport(problem.x0, problem.x1, tuple(g.tolist()), tuple(q.tolist()), d, d <= tol)


def sequential_spec(
    cpts: Optional[dict] = None, confounded: bool = False, sizes: Sequence[int] = (2, 2, 2, 2)
) -> StructuralSpec:
    """Mechanism ``X0 -> Z -> X1 -> Y`` with ``Y`` also reading ``X0`` and ``Z``.

    With ``confounded`` the response reads the intended ``X0`` rather than
    the value actually received.
    """
    names = ("X0", "Z", "X1", "Y")
    variables = tuple(VariableDecl(n, tuple(range(k))) for n, k in zip(names, sizes))
    parents = {"X0": (), "Z": ("X0",), "X1": ("Z",), "Y": ("X0", "Z", "X1")}
    reads = frozenset({("X0", "Y")}) if confounded else frozenset()
    return StructuralSpec(variables, ("X0", "X1"), names, parents, cpts, reads)


def random_sequential_spec(seed: int, confounded: bool = False) -> StructuralSpec:
    """Binary sequential mechanism with random tables.

    Confounded variants give the response a strong dependence on ``X0`` so
    that the failure of identification is visible.
    """
    rng = np.random.default_rng(seed)
    spec = sequential_spec(confounded=confounded).filled(int(rng.integers(2**63)))
    if confounded:
        cpts = dict(spec.cpts)
        y = np.array(cpts["Y"])
        hi = rng.uniform(0.7, 0.95, size=y.shape[1:-1])
        lo = rng.uniform(0.05, 0.3, size=y.shape[1:-1])
        y[0, ..., 1], y[1, ..., 1] = lo, hi
        y[..., 0] = 1.0 - y[..., 1]
        cpts["Y"] = y
        spec = spec.with_cpts(cpts)
    return spec


def random_sequential_problem(seed: int, confounded: bool = False, x0: Any = 0, x1: Any = 0) -> SequentialProblem:
    model = generate_structural_model(random_sequential_spec(seed, confounded))
    return SequentialProblem(model, "X0", ("Z",), "X1", "Y", x0, x1)
