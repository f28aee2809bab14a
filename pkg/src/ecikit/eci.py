"""Extended conditional independence statements.

Text form::

    stmt      := varlist "_||_" grouplist ["|" condlist]
    grouplist := "{}" | item ("," item)*
    item      := name | "F(" name ")" ["!"]
    condlist  := cond ("," cond)*
    cond      := name | "F(" name ")" ["!" | "=" value]

``F(T)`` is the intervention indicator of target ``T``; ``!`` restricts it to
non-idle values and ``F(T)=idle`` / ``F(T)=v`` pin it. A bare ``F(T)`` after
the bar ranges over every state, idle included. Targets not mentioned at all
are idle. ``{}`` is an explicitly empty right-hand side.

A statement ``X _||_ Y, F(B) | W, F(C)`` holds when, for every value of the
conditioning context, ``P(X | Y=y, W=w)`` under the regime picked by the
indicators is the same for every ``(y, state of F(B))`` at which it is defined.
"""

from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np

from .model import IDLE, ModelError, MultiRegimeModel, UnknownRegime, UnknownVariable
from .verdict import Outcome, Verdict, Witness

__all__ = [
    "Mode",
    "IndicatorTerm",
    "ECIStatement",
    "StatementSyntaxError",
    "StatementError",
    "parse_statement",
    "format_statement",
    "evaluate",
]

TIE_TOL = 1e-12


class Mode(str, enum.Enum):
    FULL = "full"
    CHECKED = "checked"
    FIXED_IDLE = "idle"
    FIXED_VALUE = "value"


@dataclass(frozen=True)
class IndicatorTerm:
    target: str
    mode: Mode = Mode.FULL
    value: Any = None

    def __str__(self):
        if self.mode is Mode.FULL:
            return f"F({self.target})"
        if self.mode is Mode.CHECKED:
            return f"F({self.target})!"
        if self.mode is Mode.FIXED_IDLE:
            return f"F({self.target})=idle"
        return f"F({self.target})={self.value}"


def full(*targets: str) -> tuple[IndicatorTerm, ...]:
    return tuple(IndicatorTerm(t, Mode.FULL) for t in targets)


def checked(*targets: str) -> tuple[IndicatorTerm, ...]:
    return tuple(IndicatorTerm(t, Mode.CHECKED) for t in targets)


class StatementError(ValueError):
    """Statement that is well formed text but not a valid statement."""


class StatementSyntaxError(StatementError):
    def __init__(self, message: str, text: str, position: int):
        self.text = text
        self.position = position
        pointer = " " * position + "^"
        super().__init__(f"{message} at position {position}\n  {text}\n  {pointer}")


@dataclass(frozen=True)
class ECIStatement:
    left: tuple[str, ...]
    group: tuple[IndicatorTerm, ...] = ()
    independent: tuple[str, ...] = ()
    given: tuple[str, ...] = ()
    context: tuple[IndicatorTerm, ...] = ()

    def __post_init__(self):
        for name in ("left", "group", "independent", "given", "context"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not self.left:
            raise StatementError("left-hand side is empty")
        stoch = list(self.left) + list(self.independent) + list(self.given)
        if len(set(stoch)) != len(stoch):
            raise StatementError(f"a variable appears twice: {stoch}")
        inds = [t.target for t in self.group + self.context]
        if len(set(inds)) != len(inds):
            raise StatementError(f"an indicator appears twice: {inds}")
        for t in self.group:
            if t.mode not in (Mode.FULL, Mode.CHECKED):
                raise StatementError(f"{t} cannot be pinned on the independent side")

    def __str__(self):
        return format_statement(self)


_TOKEN = re.compile(
    r"\s*(?:(?P<indep>_\|\|_)|(?P<empty>\{\})|(?P<ind>F\(\s*(?P<tname>[A-Za-z_][A-Za-z0-9_]*)\s*\))"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<val>[A-Za-z0-9_.+\-]+)|(?P<sym>[,|!=]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise StatementSyntaxError(f"unexpected character {text[start]!r}", text, start)
        start = m.start() + (len(m.group(0)) - len(m.group(0).lstrip()))
        if m.group("indep"):
            tokens.append(("indep", m.group("indep"), start))
        elif m.group("empty"):
            tokens.append(("empty", "{}", start))
        elif m.group("ind"):
            tokens.append(("ind", m.group("tname"), start))
        elif m.group("name"):
            tokens.append(("name", m.group("name"), start))
        elif m.group("val"):
            tokens.append(("val", m.group("val"), start))
        else:
            tokens.append((m.group("sym"), m.group("sym"), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind: Optional[str] = None, what: str = ""):
        tok = self.tokens[self.i]
        if kind is not None and tok[0] != kind:
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            raise StatementSyntaxError(f"expected {what or kind}, found {found}", self.text, tok[2])
        self.i += 1
        return tok

    def parse(self) -> ECIStatement:
        left = [self.take("name", "variable name")[1]]
        while self.peek()[0] == ",":
            self.take(",")
            left.append(self.take("name", "variable name")[1])
        self.take("indep", "'_||_'")
        independent: list[str] = []
        group: list[IndicatorTerm] = []
        if self.peek()[0] == "empty":
            self.take("empty")
        else:
            self._group_item(independent, group)
            while self.peek()[0] == ",":
                self.take(",")
                self._group_item(independent, group)
        given: list[str] = []
        context: list[IndicatorTerm] = []
        if self.peek()[0] == "|":
            self.take("|")
            self._cond_item(given, context)
            while self.peek()[0] == ",":
                self.take(",")
                self._cond_item(given, context)
        self.take("end", "end of statement")
        try:
            return ECIStatement(tuple(left), tuple(group), tuple(independent), tuple(given), tuple(context))
        except StatementError as exc:
            raise StatementSyntaxError(str(exc), self.text, 0) from None

    def _group_item(self, independent, group):
        tok = self.peek()
        if tok[0] == "name":
            independent.append(self.take()[1])
        elif tok[0] == "ind":
            target = self.take()[1]
            if self.peek()[0] == "!":
                self.take("!")
                group.append(IndicatorTerm(target, Mode.CHECKED))
            else:
                group.append(IndicatorTerm(target, Mode.FULL))
        else:
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            raise StatementSyntaxError(
                f"expected variable or indicator after '_||_', found {found}", self.text, tok[2]
            )

    def _cond_item(self, given, context):
        tok = self.peek()
        if tok[0] == "name":
            given.append(self.take()[1])
            return
        if tok[0] != "ind":
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            raise StatementSyntaxError(f"expected conditioning term, found {found}", self.text, tok[2])
        target = self.take()[1]
        nxt = self.peek()[0]
        if nxt == "!":
            self.take("!")
            context.append(IndicatorTerm(target, Mode.CHECKED))
        elif nxt == "=":
            self.take("=")
            vtok = self.peek()
            if vtok[0] not in ("name", "val"):
                raise StatementSyntaxError("expected a value after '='", self.text, vtok[2])
            value = self.take()[1]
            if value == "idle":
                context.append(IndicatorTerm(target, Mode.FIXED_IDLE))
            else:
                context.append(IndicatorTerm(target, Mode.FIXED_VALUE, value))
        else:
            context.append(IndicatorTerm(target, Mode.FULL))


def parse_statement(text: str) -> ECIStatement:
    """Parse the text form; raises :class:`StatementSyntaxError` with a position."""
    return _Parser(text).parse()


def format_statement(stmt: ECIStatement, model: Optional[MultiRegimeModel] = None) -> str:
    """Canonical text. With a model, every list is sorted in declaration order."""

    def order(names: Sequence[str]) -> list[str]:
        if model is None:
            return list(names)
        rank = {n: i for i, n in enumerate(model.names)}
        return sorted(names, key=lambda n: rank.get(n, len(rank)))

    def order_terms(terms: Sequence[IndicatorTerm]) -> list[IndicatorTerm]:
        if model is None:
            return list(terms)
        rank = {n: i for i, n in enumerate(model.targets)}
        return sorted(terms, key=lambda t: rank.get(t.target, len(rank)))

    rhs = order(stmt.independent) + [str(t) for t in order_terms(stmt.group)]
    text = ", ".join(order(stmt.left)) + " _||_ " + (", ".join(rhs) if rhs else "{}")
    cond = order(stmt.given) + [str(t) for t in order_terms(stmt.context)]
    if cond:
        text += " | " + ", ".join(cond)
    return text


def _states(model: MultiRegimeModel, term: IndicatorTerm) -> list:
    n = len(model.decl(term.target).domain)
    if term.mode is Mode.FULL:
        return [IDLE] + list(range(n))
    if term.mode is Mode.CHECKED:
        return list(range(n))
    if term.mode is Mode.FIXED_IDLE:
        return [IDLE]
    try:
        return [model.decl(term.target).index(term.value)]
    except ModelError as exc:
        raise StatementError(str(exc)) from None


def _resolve(model: MultiRegimeModel, stmt: ECIStatement):
    for n in stmt.left + stmt.independent + stmt.given:
        if n not in model.names:
            raise UnknownVariable(f"statement names unknown variable {n!r}")
    for t in stmt.group + stmt.context:
        if t.target not in model.targets:
            raise UnknownVariable(f"statement names {t.target!r}, which is not an intervention target")
    pos = {t: i for i, t in enumerate(model.targets)}
    group_pos = [pos[t.target] for t in stmt.group]
    ctx_pos = [pos[t.target] for t in stmt.context]
    group_states = [_states(model, t) for t in stmt.group]
    ctx_states = [_states(model, t) for t in stmt.context]
    return group_pos, group_states, ctx_pos, ctx_states


def evaluate(
    model: MultiRegimeModel,
    stmt: ECIStatement | str,
    tol: float = 1e-9,
    strict: bool = False,
) -> Verdict:
    """Numerical truth value of a statement on a model.

    Contexts whose regime is absent from the model are skipped and listed in
    ``Verdict.missing``; with ``strict=True`` they raise :class:`UnknownRegime`
    instead. Among equally large discrepancies the witness is the first pair
    of right-hand assignments in enumeration order (idle before values).
    """
    if isinstance(stmt, str):
        stmt = parse_statement(stmt)
    label = format_statement(stmt)
    group_pos, group_states, ctx_pos, ctx_states = _resolve(model, stmt)
    k = len(model.targets)
    W, Y, X = stmt.given, stmt.independent, stmt.left
    names = W + Y + X
    shape_w = tuple(len(model.decl(n).domain) for n in W)
    shape_y = tuple(len(model.decl(n).domain) for n in Y)
    nW, nY = int(np.prod(shape_w)), int(np.prod(shape_y))
    nX = int(np.prod([len(model.decl(n).domain) for n in X]))
    group_list = list(itertools.product(*group_states))

    missing: list[dict] = []
    seen = False
    per_context = []
    best = -1.0
    for ci, cstate in enumerate(itertools.product(*ctx_states)):
        base = [IDLE] * k
        for p, s in zip(ctx_pos, cstate):
            base[p] = s
        present, blocks = [], []
        for gi, gstate in enumerate(group_list):
            key = list(base)
            for p, s in zip(group_pos, gstate):
                key[p] = s
            key = tuple(key)
            if key not in model.regimes:
                if strict:
                    raise UnknownRegime(f"regime {model.labels(key)} needed by '{label}' is absent")
                missing.append(model.labels(key))
                continue
            present.append((gi, key))
            blocks.append(model.marginal_array(key, names).reshape(nW, nY, nX))
        if not blocks:
            continue
        A = np.stack(blocks)  # (m, nW, nY, nX)
        mass = A.sum(axis=-1)
        ok = mass > 0.0
        if not ok.any():
            continue
        seen = True
        cond = np.divide(A, mass[..., None], out=np.zeros_like(A), where=ok[..., None])
        m = len(blocks)
        E = cond.transpose(1, 0, 2, 3).reshape(nW, m * nY, nX)
        M = ok.transpose(1, 0, 2).reshape(nW, m * nY)
        D = 0.5 * np.abs(E[:, :, None, :] - E[:, None, :, :]).sum(axis=-1)
        valid = M[:, :, None] & M[:, None, :] & np.triu(np.ones((m * nY, m * nY), dtype=bool), 1)
        D = np.where(valid, D, -1.0)
        dmax = float(D.max()) if D.size else -1.0
        best = max(best, dmax)
        per_context.append((ci, cstate, present, E, D))

    if not seen:
        return Verdict(Outcome.VACUOUS, None, 0.0, tuple(missing), label)
    best = max(best, 0.0)
    if best <= tol:
        return Verdict(Outcome.HOLDS, None, best, tuple(missing), label)

    choice = None
    for ci, cstate, present, E, D in per_context:
        for w, i, j in zip(*np.nonzero(D >= best - TIE_TOL)):
            gi, yi = present[i // nY][0], i % nY
            gj, yj = present[j // nY][0], j % nY
            rank = (gi * nY + yi, gj * nY + yj, ci, int(w))
            if choice is None or rank < choice[0]:
                choice = (rank, cstate, present[i // nY][1], present[j // nY][1], int(w), yi, yj, E, float(D[w, i, j]), i, j)
    _, cstate, key_a, key_b, w, yi, yj, E, disc, i, j = choice

    def values(shape, names_, flat):
        if not names_:
            return {}
        idx = np.unravel_index(flat, shape)
        return {n: model.decl(n).domain[int(t)] for n, t in zip(names_, idx)}

    given_w = values(shape_w, W, w)
    witness = Witness(
        left=X,
        regime_a=model.labels(key_a),
        given_a={**given_w, **values(shape_y, Y, yi)},
        table_a=tuple(E[w, i].tolist()),
        regime_b=model.labels(key_b),
        given_b={**given_w, **values(shape_y, Y, yj)},
        table_b=tuple(E[w, j].tolist()),
        discrepancy=disc,
    )
    return Verdict(Outcome.FAILS, witness, best, tuple(missing), label)
