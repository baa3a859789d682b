import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from roughflow.errors import InputError
from roughflow.tensor import Tensor2Element, level_norm, tensor_inv, tensor_mul

finite = st.floats(-10, 10, allow_nan=False)


@st.composite
def elements(draw, dim=3):
    return Tensor2Element(draw(arrays(float, dim, elements=finite)), draw(arrays(float, (dim, dim), elements=finite)))


def test_product_of_vectors_adds_outer_product():
    a = Tensor2Element(np.array([1.0, 0.0]), np.zeros((2, 2)))
    b = Tensor2Element(np.array([0.0, 1.0]), np.zeros((2, 2)))
    c = a * b
    np.testing.assert_array_equal(c.level1, [1.0, 1.0])
    np.testing.assert_array_equal(c.level2, [[0.0, 1.0], [0.0, 0.0]])


def test_identity_is_neutral():
    a = Tensor2Element(np.array([2.0, -1.0]), np.array([[1.0, 2.0], [3.0, 4.0]]))
    e = Tensor2Element.identity(2)
    assert (a * e).allclose(a, atol=0) and (e * a).allclose(a, atol=0)


def test_level_norm_example():
    a = Tensor2Element(np.array([3.0, 4.0]), np.zeros((2, 2)))
    assert level_norm(a, 1) == 5.0


@settings(max_examples=60, deadline=None)
@given(elements(), elements(), elements())
def test_associative(a, b, c):
    assert tensor_mul(tensor_mul(a, b), c).allclose(tensor_mul(a, tensor_mul(b, c)), atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(elements())
def test_inverse_both_sides(a):
    e = Tensor2Element.identity(3)
    assert tensor_mul(a, tensor_inv(a)).allclose(e, atol=1e-10)
    assert tensor_mul(tensor_inv(a), a).allclose(e, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(arrays(float, 3, elements=finite), arrays(float, 3, elements=finite))
def test_cross_norm(u, v):
    outer = Tensor2Element(np.zeros(3), np.outer(u, v))
    assert level_norm(outer, 2) == pytest.approx(np.linalg.norm(u) * np.linalg.norm(v), rel=1e-12, abs=1e-12)


def test_rejects_bad_shapes():
    with pytest.raises(InputError):
        Tensor2Element(np.zeros(2), np.zeros((3, 3)))
    with pytest.raises(InputError):
        tensor_mul(Tensor2Element.identity(2), Tensor2Element.identity(3))
    with pytest.raises(InputError):
        level_norm(Tensor2Element.identity(2), 3)
