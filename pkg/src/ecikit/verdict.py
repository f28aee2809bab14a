"""Outcome objects shared by every check in the package."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Optional

import numpy as np

__all__ = ["Outcome", "Witness", "Verdict", "conjoin", "tv_distance"]


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Half the L1 distance between two (sub-)probability vectors."""
    return 0.5 * float(np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float)).sum())


class Outcome(str, enum.Enum):
    HOLDS = "holds"
    FAILS = "fails"
    VACUOUS = "vacuous"


@dataclass(frozen=True)
class Witness:
    """Two contexts whose tables differ.

    ``kind`` is ``"conditional"`` when the tables are ``P(left | given)`` and
    ``"joint"`` when they are the unnormalised slice ``P(left, given)``.
    Regimes map target names to domain labels, ``None`` meaning idle.
    """

    left: tuple[str, ...]
    regime_a: dict[str, Any]
    given_a: dict[str, Any]
    table_a: tuple[float, ...]
    regime_b: dict[str, Any]
    given_b: dict[str, Any]
    table_b: tuple[float, ...]
    discrepancy: float
    kind: str = "conditional"

    def replay(self, model) -> float:
        """Recompute the discrepancy from ``model`` through the public query API."""
        from .model import conditional, marginal

        tables = []
        for regime, given in ((self.regime_a, self.given_a), (self.regime_b, self.given_b)):
            if self.kind == "conditional":
                table = conditional(model, regime, self.left, given)
                if table is None:
                    raise ValueError(f"witness context {given} has probability zero")
                tables.append(table.probs.ravel())
            else:
                names = tuple(self.left) + tuple(given)
                full = marginal(model, regime, names)
                tables.append(full.slice(given).probs.ravel())
        return tv_distance(tables[0], tables[1])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "left": list(self.left),
            "a": {"regime": self.regime_a, "given": self.given_a, "table": list(self.table_a)},
            "b": {"regime": self.regime_b, "given": self.given_b, "table": list(self.table_b)},
            "discrepancy": self.discrepancy,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Witness":
        a, b = data["a"], data["b"]
        return cls(
            left=tuple(data["left"]),
            regime_a=dict(a["regime"]),
            given_a=dict(a["given"]),
            table_a=tuple(a["table"]),
            regime_b=dict(b["regime"]),
            given_b=dict(b["given"]),
            table_b=tuple(b["table"]),
            discrepancy=data["discrepancy"],
            kind=data.get("kind", "conditional"),
        )


@dataclass(frozen=True)
class Verdict:
    """Result of a numerical check.

    ``discrepancy`` is the largest difference seen over all compared
    contexts, also when the check holds. ``missing`` lists regimes that a
    context needed but the model does not contain; those contexts are
    skipped.
    """

    outcome: Outcome
    witness: Optional[Witness] = None
    discrepancy: float = 0.0
    missing: tuple[dict, ...] = ()
    label: str = ""
    parts: tuple["Verdict", ...] = field(default=(), repr=False)

    @property
    def holds(self) -> bool:
        return self.outcome is Outcome.HOLDS

    @property
    def fails(self) -> bool:
        return self.outcome is Outcome.FAILS

    @property
    def vacuous(self) -> bool:
        return self.outcome is Outcome.VACUOUS

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "outcome": self.outcome.value,
            "discrepancy": self.discrepancy,
            "label": self.label,
            "missing": [dict(m) for m in self.missing],
            "witness": self.witness.to_dict() if self.witness else None,
        }
        if self.parts:
            out["parts"] = [p.to_dict() for p in self.parts]
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "Verdict":
        witness = data.get("witness")
        return cls(
            outcome=Outcome(data["outcome"]),
            witness=Witness.from_dict(witness) if witness else None,
            discrepancy=data.get("discrepancy", 0.0),
            missing=tuple(dict(m) for m in data.get("missing", ())),
            label=data.get("label", ""),
            parts=tuple(cls.from_dict(p) for p in data.get("parts", ())),
        )


def conjoin(verdicts: Iterable[Verdict], label: str = "") -> Verdict:
    """Conjunction of several checks.

    Fails on the first failing part, is vacuous only when every part is,
    and otherwise holds. An empty conjunction holds.
    """
    parts = tuple(verdicts)
    missing = tuple(m for p in parts for m in p.missing)
    worst = max((p.discrepancy for p in parts), default=0.0)
    for p in parts:
        if p.fails:
            return Verdict(Outcome.FAILS, p.witness, worst, missing, label or p.label, parts)
    if parts and all(p.vacuous for p in parts):
        return Verdict(Outcome.VACUOUS, None, worst, missing, label, parts)
    return Verdict(Outcome.HOLDS, None, worst, missing, label, parts)
