import numpy as np
import pytest

from ecikit.model import MultiRegimeModel, StructuralSpec, VariableDecl, generate_structural_model

BIN = (0, 1)


def m_ty_spec() -> StructuralSpec:
    # T intended by a fair coin; Y | received r ~ Bernoulli(0.2 + 0.6 r)
    return StructuralSpec(
        (VariableDecl("T", BIN), VariableDecl("Y", BIN)),
        ("T",),
        ("T", "Y"),
        {"Y": ("T",)},
        {"T": np.array([0.5, 0.5]), "Y": np.array([[0.8, 0.2], [0.2, 0.8]])},
    )


@pytest.fixture
def m_ty() -> MultiRegimeModel:
    return generate_structural_model(m_ty_spec())


@pytest.fixture
def m_viol() -> MultiRegimeModel:
    # M_TY, except that setting T=1 also forces the recorded T to 1
    decls = (VariableDecl("T", BIN), VariableDecl("Y", BIN))
    idle = [[0.4, 0.1], [0.1, 0.4]]
    set0 = [[0.4, 0.1], [0.4, 0.1]]
    set1 = [[0.0, 0.0], [0.2, 0.8]]
    return MultiRegimeModel(decls, ("T",), [((None,), idle), ((0,), set0), ((1,), set1)])
