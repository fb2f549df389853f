from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from wehrlqpt.errors import ParameterError
from wehrlqpt.models import LMG, Cusp, Dicke, DickeProduct, Fock1D, IbmLmg, Spin, TwoMode, U3Block, Vibron2D


@pytest.mark.parametrize("make", [
    lambda: Cusp(-1, 0, 0.0),
    lambda: Dicke(1, 1, 0.5, 0),
    lambda: LMG(0, 0, 1),
    lambda: IbmLmg(1.2, 0, 10),
    lambda: IbmLmg(0.5, -1, 10),
    lambda: IbmLmg(0.5, 0, 0),
    lambda: Vibron2D(0.5, 1),
    lambda: Vibron2D(0.5, 4, 5),
    lambda: Vibron2D(1.5, 4),
])
def test_invalid_parameters_rejected(make):
    with pytest.raises(ParameterError):
        make()


def test_half_integer_spin_labels():
    assert Spin(3).labels() == [Fraction(-3, 2), Fraction(-1, 2), Fraction(1, 2), Fraction(3, 2)]
    assert Dicke(1, 1, 0.5, 3).j == 1.5
    assert Dicke(1, 1, 0.5, 3).lambda_c == 0.5


def test_u3_block_labels():
    assert U3Block(6, 0).labels() == [0, 2, 4, 6]
    assert U3Block(5, -1).labels() == [1, 3, 5]
    assert U3Block(5, -1).dim == 3


@given(st.integers(0, 30), st.integers(1, 12))
def test_label_index_bijection(n, two_j):
    for basis in (Fock1D(n), Spin(two_j), TwoMode(two_j), U3Block(two_j, two_j % 2), DickeProduct(n, two_j)):
        labels = basis.labels()
        assert len(labels) == basis.dim
        assert [basis.index(lab) for lab in labels] == list(range(basis.dim))


def test_dicke_product_order_is_n_major():
    labels = DickeProduct(1, 1).labels()
    assert labels == [(0, Fraction(-1, 2)), (0, Fraction(1, 2)), (1, Fraction(-1, 2)), (1, Fraction(1, 2))]
