import numpy as np
import pytest

from app.autograd import (
    Tensor,
    backward,
    concat,
    finite_diff_check,
    fresh_graph,
    get_precision,
    maximum,
    no_grad,
    precision,
    stack,
)
from app.exceptions import ContractError, ShapeError


def grad_of(fn, *values):
    """Градиенты скалярной функции по каждому входу"""
    tensors = [Tensor(v, requires_grad=True) for v in values]
    with fresh_graph():
        backward(fn(*tensors))
    return [t.grad for t in tensors]


class TestGraph:
    def test_square_sum(self, float64):
        (g,) = grad_of(lambda x: (x * x).sum(), np.array([1.0, -2.0, 3.0]))
        np.testing.assert_allclose(g, [2.0, -4.0, 6.0])

    def test_fan_out_accumulates(self, float64):
        (g,) = grad_of(lambda x: (x * x + x).sum(), np.array([0.5, 2.0]))
        np.testing.assert_allclose(g, [2.0, 5.0])

    def test_division_and_scalar_broadcast(self, float64):
        ga, gb = grad_of(lambda a, b: (a / b).sum(), np.array([1.0, 2.0]), np.array(4.0))
        np.testing.assert_allclose(ga, [0.25, 0.25])
        np.testing.assert_allclose(gb, -3.0 / 16.0)

    def test_repeated_fancy_index(self, float64):
        (g,) = grad_of(lambda x: x[[0, 0, 2]].sum(), np.arange(3.0))
        np.testing.assert_allclose(g, [2.0, 0.0, 1.0])

    def test_concat_and_stack_split_gradient(self, float64):
        ga, gb = grad_of(
            lambda a, b: (concat([a, b], axis=1) * 2.0).sum() + stack([a, a]).sum(),
            np.ones((2, 1)), np.ones((2, 3)),
        )
        np.testing.assert_allclose(ga, np.full((2, 1), 4.0))
        np.testing.assert_allclose(gb, np.full((2, 3), 2.0))

    def test_maximum_tie_goes_to_first(self, float64):
        ga, gb = grad_of(lambda a, b: maximum(a, b).sum(), np.array([1.0, 2.0]), np.array([1.0, 3.0]))
        np.testing.assert_allclose(ga, [1.0, 0.0])
        np.testing.assert_allclose(gb, [0.0, 1.0])

    def test_only_scalar_broadcast_allowed(self):
        with pytest.raises(ShapeError):
            Tensor(np.ones(3)) + Tensor(np.ones(2))
        with pytest.raises(ShapeError):
            Tensor(np.ones((2, 3))) * Tensor(np.ones(3))

    def test_backward_requires_scalar(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with fresh_graph():
            with pytest.raises(ContractError):
                backward(x * 2.0)

    def test_no_grad_records_nothing(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with fresh_graph() as graph, no_grad():
            y = (x * 3.0).sum()
        assert not y.requires_grad
        assert len(graph) == 0

    def test_constants_are_not_recorded(self):
        with fresh_graph() as graph:
            Tensor(np.ones(2)) + 1.0
        assert len(graph) == 0


class TestPrecision:
    def test_context_restores_mode(self):
        before = get_precision()
        with precision("float64"):
            assert Tensor([1.0]).dtype == np.float64
        assert get_precision() == before

    def test_float32_default(self):
        with precision("float32"):
            assert Tensor([1.0]).dtype == np.float32

    def test_unknown_mode(self):
        with pytest.raises(ContractError):
            with precision("float16"):
                pass


class TestFiniteDiff:
    def test_smooth_function_matches(self, float64, rng):
        x = Tensor(rng.normal(size=(3, 4)))
        error = finite_diff_check(lambda t: (t * t * t).sum(), x)
        assert error < 1e-7

    def test_value_restored(self, float64, rng):
        values = rng.normal(size=5)
        x = Tensor(values.copy())
        finite_diff_check(lambda t: (t * t).sum(), x, indices=[0, 3])
        np.testing.assert_array_equal(x.data, values)
        assert x.grad is None

    def test_rejects_non_scalar(self, float64):
        with pytest.raises(ContractError):
            finite_diff_check(lambda t: t * 2.0, Tensor(np.ones(2)))
