from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from haucl import tensor as T
from haucl.errors import ContractError, DimensionError, DomainError, ParameterError
from haucl.gradcheck import _op_cases, check_function, numeric_grad, rel_err
from haucl.tensor import Tensor, no_grad


def leaf(x):
    return Tensor(np.asarray(x, dtype=np.float64), requires_grad=True)


# -- forward examples ----------------------------------------------------------

def test_matmul_identity():
    a = Tensor([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal((a @ Tensor(np.eye(2))).data, a.data)


def test_matmul_hand_value():
    assert (Tensor([[1.0, 2.0]]) @ Tensor([[3.0], [4.0]])).data.tolist() == [[11.0]]


def test_matmul_zero():
    out = Tensor(np.zeros((2, 3))) @ Tensor(np.random.default_rng(0).normal(size=(3, 4)))
    assert not out.data.any()


def test_matmul_shape_error_names_both_shapes():
    with pytest.raises(DimensionError, match=r"\(2, 3\).*\(2, 3\)"):
        Tensor(np.ones((2, 3))) @ Tensor(np.ones((2, 3)))


def test_softmax_examples():
    np.testing.assert_allclose(T.softmax(Tensor([0.0, 0.0, 0.0])).data, [1 / 3] * 3, atol=1e-15)
    np.testing.assert_allclose(T.softmax(Tensor([math.log(2), 0.0])).data, [2 / 3, 1 / 3], atol=1e-15)
    out = T.softmax(Tensor([1000.0, 1000.0])).data
    assert np.all(np.isfinite(out))
    np.testing.assert_allclose(out, [0.5, 0.5])


def test_softmax_empty_axis():
    with pytest.raises(DimensionError):
        T.softmax(Tensor(np.zeros((2, 0))), axis=1)


@given(arrays(np.float64, (3, 5), elements=st.floats(-50, 50)))
def test_softmax_rows_sum_to_one(x):
    s = T.softmax(Tensor(x), axis=1).data
    assert np.all(s >= 0)
    np.testing.assert_allclose(s.sum(axis=1), 1.0, atol=1e-12)


def test_softplus_zero():
    assert abs(T.softplus(Tensor(0.0)).item() - math.log(2)) < 1e-15


def test_softplus_large_inputs_stay_finite():
    out = T.softplus(Tensor([-800.0, 800.0])).data
    np.testing.assert_allclose(out, [0.0, 800.0])


def test_relu_negative_branch_and_zero_gradient():
    x = leaf([-3.0, 0.0, 2.0])
    y = T.relu(x)
    y.sum().backward()
    assert y.data.tolist() == [0.0, 0.0, 2.0]
    assert x.grad.tolist() == [0.0, 0.0, 1.0]


def test_concat_definition():
    out = T.concat([Tensor([1.0, 2.0]), Tensor([3.0]), Tensor([4.0, 5.0])])
    assert out.data.tolist() == [1, 2, 3, 4, 5]


def test_log_domain_error():
    with pytest.raises(DomainError):
        T.log(Tensor([1.0, 0.0]))
    with pytest.raises(DomainError):
        T.log(Tensor([-1.0]))


def test_broadcast_trailing_alignment_and_gradient_reduction():
    a = leaf(np.ones((2, 3)))
    b = leaf([1.0, 2.0, 3.0])
    (a * b).sum().backward()
    np.testing.assert_array_equal(b.grad, [2.0, 2.0, 2.0])
    np.testing.assert_array_equal(a.grad, np.tile([1.0, 2.0, 3.0], (2, 1)))


def test_broadcast_incompatible_shapes():
    with pytest.raises(DimensionError):
        Tensor(np.ones((2, 3))) + Tensor(np.ones((2,)))


# -- dropout -------------------------------------------------------------------

def test_dropout_eval_is_identity():
    x = Tensor(np.arange(6.0))
    assert T.dropout(x, 0.5, train=False) is x


def test_dropout_scaling():
    x = Tensor(np.ones(10000))
    y = T.dropout(x, 0.25, True, rng=np.random.default_rng(0)).data
    kept = y[y != 0]
    np.testing.assert_allclose(kept, 1 / 0.75)
    assert abs(len(kept) / 10000 - 0.75) < 0.02


def test_dropout_reproducible_with_seed():
    x = Tensor(np.ones((4, 7)))
    a = T.dropout(x, 0.4, True, rng=np.random.default_rng(9)).data
    b = T.dropout(x, 0.4, True, rng=np.random.default_rng(9)).data
    assert a.tobytes() == b.tobytes()


def test_dropout_rejects_bad_rate():
    with pytest.raises(ParameterError):
        T.dropout(Tensor(np.ones(3)), 1.0, True, rng=np.random.default_rng(0))


def test_dropout_gradient_uses_mask():
    x = leaf(np.ones(4))
    mask = np.array([True, False, True, False])
    T.dropout(x, 0.5, True, mask=mask).sum().backward()
    np.testing.assert_array_equal(x.grad, [2.0, 0.0, 2.0, 0.0])


# -- backward ------------------------------------------------------------------

def test_backward_sum_of_squares():
    x = leaf([1.0, -2.0, 3.5])
    (x * x).sum().backward()
    np.testing.assert_array_equal(x.grad, 2 * x.data)


def test_backward_non_scalar_is_contract_error():
    with pytest.raises(ContractError):
        (leaf([1.0, 2.0]) * 2.0).backward()


def test_backward_twice_raises():
    x = leaf([1.0, 2.0])
    loss = (x * x).sum()
    loss.backward()
    with pytest.raises(ContractError):
        loss.backward()


def test_every_leaf_gets_grad_even_if_unused_branch_is_zero():
    x = leaf([-1.0, -2.0])
    w = leaf([3.0])
    (T.relu(x) * w).sum().backward()
    assert x.grad is not None and w.grad is not None
    assert x.grad.shape == x.shape


def test_shared_subexpression_accumulates():
    x = leaf([2.0])
    y = x * x
    (y + y).sum().backward()
    assert x.grad.tolist() == [8.0]


def test_no_grad_records_nothing():
    x = leaf([1.0])
    with no_grad():
        y = x * 3.0
    assert y._parents == ()


def test_deep_chain_does_not_recurse():
    x = leaf([1.0])
    y = x
    for _ in range(5000):
        y = y * 1.0
    y.sum().backward()
    assert x.grad.tolist() == [1.0]


@pytest.mark.parametrize("case", _op_cases(np.random.default_rng(0)), ids=lambda c: c[0])
def test_primitive_op_matches_central_differences(case):
    name, fn, inputs = case
    result = check_function(name, fn, inputs)
    assert result.max_rel_err < 1e-5, result


def test_three_layer_composite_graph_against_finite_differences():
    rng = np.random.default_rng(5)
    X = rng.uniform(-2, 2, (4, 3))
    Ws = [rng.uniform(-2, 2, s) for s in [(3, 5), (5, 4), (4, 2)]]

    def f(*ws):
        h = Tensor(X)
        h = T.tanh(h @ ws[0])
        h = T.softplus(h @ ws[1])
        return T.softmax(h @ ws[2], axis=1)

    assert check_function("composite", f, Ws).max_rel_err < 1e-5


def test_corrupted_gradient_is_detected():
    rng = np.random.default_rng(1)
    a, b = rng.uniform(-2, 2, (3, 4)), rng.uniform(-2, 2, (4, 2))
    with T.corrupt_gradient("matmul"):
        assert check_function("matmul", T.matmul, [a, b]).max_rel_err > 1e-3


def test_numeric_grad_and_rel_err_helpers():
    x = np.array([0.3, -1.2])
    g = numeric_grad(lambda: float(np.sum(x ** 3)), x)
    np.testing.assert_allclose(g, 3 * x ** 2, rtol=1e-7)
    assert rel_err(np.array([2.0]), np.array([1.0]))[0] == 1.0
    assert rel_err(np.array([0.5]), np.array([0.25]))[0] == 0.25


@given(
    arrays(np.float64, (2, 3), elements=st.floats(-2, 2)),
    arrays(np.float64, (3,), elements=st.floats(-2, 2)),
)
def test_add_mul_values_match_numpy(a, b):
    np.testing.assert_array_equal((Tensor(a) + Tensor(b)).data, a + b)
    np.testing.assert_array_equal((Tensor(a) * Tensor(b)).data, a * b)


@given(arrays(np.float64, (4,), elements=st.floats(-30, 30)))
def test_forward_ops_finite_on_finite_inputs(x):
    t = Tensor(x)
    for out in (T.softplus(t), T.sigmoid(t), T.tanh(t), T.softmax(t), T.relu(t), T.exp(t * 0.1)):
        assert np.all(np.isfinite(out.data))
