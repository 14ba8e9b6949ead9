"""
Проверка аналитических градиентов центральными конечными разностями
"""
from typing import Callable, Optional, Sequence

import numpy as np

from app.autograd.tensor import Tensor, backward, fresh_graph, no_grad
from app.exceptions import ContractError


def _scalar(value: Tensor) -> float:
    if value.size != 1:
        raise ContractError(f"finite_diff_check: функция вернула не скаляр, форма {value.shape}")
    return float(value.data.reshape(-1)[0])


def finite_diff_check(
    fn: Callable[[Tensor], Tensor],
    x: Tensor,
    eps: float = 1e-5,
    indices: Optional[Sequence[int]] = None
) -> float:
    """
    Максимальная относительная ошибка градиента:
    max |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).

    indices — плоские индексы проверяемых элементов (по умолчанию все).
    Значение x восстанавливается после проверки.
    """
    if eps <= 0:
        raise ContractError("finite_diff_check: eps должен быть положительным")

    x.data = np.ascontiguousarray(x.data)
    was_required = x.requires_grad
    saved_grad = x.grad
    x.requires_grad = True
    x.grad = None
    try:
        with fresh_graph():
            out = fn(x)
            _scalar(out)
            backward(out)
        analytic = np.zeros_like(x.data) if x.grad is None else x.grad
        analytic = analytic.reshape(-1)

        flat = x.data.reshape(-1)
        positions = range(flat.size) if indices is None else indices
        worst = 0.0
        with no_grad():
            for i in positions:
                original = flat[i]
                flat[i] = original + eps
                plus = _scalar(fn(x))
                flat[i] = original - eps
                minus = _scalar(fn(x))
                flat[i] = original

                numeric = (plus - minus) / (2.0 * eps)
                a = float(analytic[i])
                error = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
                worst = max(worst, error)
        return worst
    finally:
        x.requires_grad = was_required
        x.grad = saved_grad


def sample_indices(size: int, limit: int, seed: int = 0) -> Sequence[int]:
    """Случайное подмножество элементов для больших тензоров"""
    if size <= limit:
        return range(size)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(size, size=limit, replace=False)).tolist()
