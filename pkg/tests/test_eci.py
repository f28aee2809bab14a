import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ecikit.eci import (
    ECIStatement,
    IndicatorTerm,
    Mode,
    StatementError,
    StatementSyntaxError,
    evaluate,
    format_statement,
    parse_statement,
)
from ecikit.model import (
    ModelShape,
    MultiRegimeModel,
    UnknownRegime,
    UnknownVariable,
    check_ci,
    conditional,
    generate_random_model,
    generate_structural_model,
    random_structural_spec,
)


def brute_force(model, stmt):
    """Largest pairwise TV over compared conditionals, or None if nothing is defined."""

    def states(term):
        n = len(model.decl(term.target).domain)
        if term.mode is Mode.FIXED_VALUE:
            return [model.decl(term.target).index(term.value)]
        return {
            Mode.FULL: [None] + list(range(n)),
            Mode.CHECKED: list(range(n)),
            Mode.FIXED_IDLE: [None],
        }[term.mode]

    def values(names):
        return itertools.product(*(model.decl(n).domain for n in names))

    worst = None
    for ctx in itertools.product(*(states(t) for t in stmt.context)):
        for w in values(stmt.given):
            tables = []
            for g in itertools.product(*(states(t) for t in stmt.group)):
                regime = {t.target: (None if s is None else model.decl(t.target).domain[s])
                          for t, s in zip(stmt.context + stmt.group, ctx + g)}
                if not model.has_regime(regime):
                    continue
                for y in values(stmt.independent):
                    given_ = dict(zip(stmt.given, w)) | dict(zip(stmt.independent, y))
                    c = conditional(model, regime, stmt.left, given_)
                    if c is not None:
                        tables.append(c.probs.ravel())
            for a, b in itertools.combinations(tables, 2):
                d = 0.5 * np.abs(a - b).sum()
                worst = d if worst is None else max(worst, d)
            if tables and worst is None:
                worst = 0.0
    return worst


# --- grammar -----------------------------------------------------------------


def test_parse_examples():
    s = parse_statement("Y _||_ F(T) | T")
    assert s.left == ("Y",) and s.group == (IndicatorTerm("T", Mode.FULL),) and s.given == ("T",)
    assert parse_statement("Y _||_ F(T)! | M").group == (IndicatorTerm("T", Mode.CHECKED),)
    s = parse_statement("Y, Z _||_ X, F(A)! | W, F(B)=idle, F(C)=1, F(D)!, F(E)")
    assert s.independent == ("X",)
    assert [t.mode for t in s.context] == [Mode.FIXED_IDLE, Mode.FIXED_VALUE, Mode.CHECKED, Mode.FULL]
    assert s.context[1].value == "1"


def test_empty_group_is_a_syntax_error_with_position():
    with pytest.raises(StatementSyntaxError) as exc:
        parse_statement("Y _||_ | T")
    assert exc.value.position == 7
    assert "position 7" in str(exc.value)
    with pytest.raises(StatementSyntaxError) as exc:
        parse_statement("Y _||_")
    assert exc.value.position == 6


@pytest.mark.parametrize("text", ["_||_ F(T)", "Y F(T)", "Y _||_ F(T) |", "Y _||_ F(T) # T",
                                  "Y, Y _||_ F(T)", "Y _||_ F(T), F(T)!", "Y _||_ F(T) | F(B)="])
def test_malformed(text):
    with pytest.raises(StatementError):
        parse_statement(text)


def test_explicit_empty_right_side():
    s = parse_statement("Y _||_ {} | T, F(T)=1")
    assert s.group == () and s.independent == ()
    assert format_statement(s) == "Y _||_ {} | T, F(T)=1"


def test_pinned_group_rejected():
    with pytest.raises(StatementError):
        ECIStatement(("Y",), group=(IndicatorTerm("T", Mode.FIXED_IDLE),))
    with pytest.raises(StatementError):
        ECIStatement(())


def test_format_fixed_point_and_order(m_ty):
    text = "Y _||_ F(T) | T"
    assert format_statement(parse_statement(text)) == text
    s = parse_statement("Y, T _||_ {} | F(T)=idle")
    assert format_statement(s, m_ty) == "T, Y _||_ {} | F(T)=idle"


names = st.sampled_from(["A", "B", "C", "D", "E", "F1", "x_2"])


@st.composite
def statements(draw):
    pool = draw(st.permutations(["A", "B", "C", "D", "E", "F1", "x_2"]))
    k = draw(st.integers(1, 3))
    left = pool[:k]
    rest = pool[k:]
    ind = rest[: draw(st.integers(0, 2))]
    giv = rest[len(ind): len(ind) + draw(st.integers(0, 2))]
    targets = draw(st.permutations(["T", "U", "V"]))
    ng = draw(st.integers(0 if ind else 1, 2))
    group = tuple(IndicatorTerm(t, draw(st.sampled_from([Mode.FULL, Mode.CHECKED]))) for t in targets[:ng])
    ctx = []
    for t in targets[ng:]:
        if draw(st.booleans()):
            mode = draw(st.sampled_from(list(Mode)))
            ctx.append(IndicatorTerm(t, mode, "1" if mode is Mode.FIXED_VALUE else None))
    return ECIStatement(tuple(left), group, tuple(ind), tuple(giv), tuple(ctx))


@settings(max_examples=200, deadline=None)
@given(statements())
def test_round_trip(stmt):
    text = format_statement(stmt)
    assert parse_statement(text) == stmt
    assert format_statement(parse_statement(text)) == text


# --- evaluation --------------------------------------------------------------


def test_m_ty_examples(m_ty):
    assert evaluate(m_ty, "T _||_ F(T)").holds
    v = evaluate(m_ty, "Y _||_ F(T) | T")
    assert v.fails and v.discrepancy == pytest.approx(0.6)
    w = v.witness
    assert w.given_a == {"T": 1} == w.given_b
    assert {tuple(w.regime_a.items()), tuple(w.regime_b.items())} == {(("T", None),), (("T", 0),)}
    assert w.replay(m_ty) == pytest.approx(0.6)


def test_empty_group_matches_check_ci(m_ty):
    for regime, text in [({}, "Y _||_ T | F(T)=idle"), ({"T": 1}, "Y _||_ T | F(T)=1")]:
        v = evaluate(m_ty, text)
        ref = check_ci(m_ty, regime, ["Y"], ["T"])
        assert v.outcome == ref.outcome and v.discrepancy == pytest.approx(ref.discrepancy)


def test_unknown_names(m_ty):
    with pytest.raises(UnknownVariable):
        evaluate(m_ty, "Q _||_ F(T)")
    with pytest.raises(UnknownVariable):
        evaluate(m_ty, "Y _||_ F(Y)")
    with pytest.raises(StatementError):
        evaluate(m_ty, "Y _||_ T | F(T)=7")


def test_missing_regimes_are_reported(m_ty):
    part = MultiRegimeModel(m_ty.variables, m_ty.targets, [e for e in m_ty.entries if e[0] != (0,)])
    v = evaluate(part, "T _||_ F(T)")
    assert v.holds and v.missing == ({"T": 0},)
    with pytest.raises(UnknownRegime):
        evaluate(part, "T _||_ F(T)", strict=True)


def test_vacuous_when_every_context_is_null(m_viol):
    # under F(T)=1 the recorded T is never 0
    assert evaluate(m_viol, "Y _||_ {} | T, F(T)=1").holds
    v = evaluate(m_viol, "Y _||_ T | F(T)=1")
    assert v.holds  # only T=1 is defined, a single table
    decls = m_viol.variables
    m = MultiRegimeModel(decls, ("T",), [((None,), [[1, 0], [0, 0]])])
    assert evaluate(m, "Y _||_ {} | T, F(T)=idle").outcome.value in ("holds", "vacuous")


@st.composite
def random_case(draw):
    seed = draw(st.integers(0, 2**31))
    structural = draw(st.booleans())
    shape = ModelShape(tuple(draw(st.lists(st.integers(2, 3), min_size=3, max_size=3))), 2)
    if structural:
        model = generate_structural_model(random_structural_spec(shape, seed))
    else:
        model = generate_random_model(shape, seed)
    names = list(draw(st.permutations(model.names)))
    k = draw(st.integers(1, 2))
    left, rest = names[:k], names[k:]
    ind = rest[: draw(st.integers(0, len(rest)))]
    giv = [n for n in rest if n not in ind][: draw(st.integers(0, 1))]
    terms = []
    for t in model.targets:
        choice = draw(st.sampled_from(["g-full", "g-checked", "full", "checked", "idle", "value", "none"]))
        terms.append((t, choice))
    group = tuple(IndicatorTerm(t, Mode.FULL if c == "g-full" else Mode.CHECKED) for t, c in terms if c.startswith("g-"))
    modes = {"full": Mode.FULL, "checked": Mode.CHECKED, "idle": Mode.FIXED_IDLE, "value": Mode.FIXED_VALUE}
    ctx = tuple(IndicatorTerm(t, modes[c], 0 if c == "value" else None) for t, c in terms if c in modes)
    return model, ECIStatement(tuple(left), group, tuple(ind), tuple(giv), ctx)


@settings(max_examples=150, deadline=None)
@given(random_case())
def test_matches_brute_force(case):
    model, stmt = case
    v = evaluate(model, stmt, 1e-9)
    ref = brute_force(model, stmt)
    if ref is None:
        assert v.vacuous
        return
    assert v.discrepancy == pytest.approx(ref, abs=1e-12)
    assert v.fails == (ref > 1e-9)
    if v.fails:
        assert v.witness.replay(model) == pytest.approx(v.discrepancy, abs=1e-12)
