"""
Тензоры и обратный режим автоматического дифференцирования

Граф вычислений записывается динамически: каждая операция вычисляет
значение сразу и добавляет узел в конец списка. Обратный проход идёт
по узлам в обратном порядке добавления.
"""
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.exceptions import ContractError, ShapeError


_DTYPES = {"float32": np.float32, "float64": np.float64}

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]
ForwardFn = Callable[..., Tuple[np.ndarray, BackwardFn]]
Scalar = Union[int, float]


class _Runtime:
    """Глобальное состояние: текущий граф, точность, запись градиентов"""

    def __init__(self):
        self.graph: "Graph" = Graph()
        self.precision: str = "float32"
        self.grad_enabled: bool = True


@dataclass
class Node:
    """Узел графа"""
    tag: str
    inputs: Tuple[Optional[int], ...]
    tensor: "Tensor"
    backward: Optional[BackwardFn] = None  # None у листьев


class Graph:
    """Граф вычислений (только добавление)"""

    def __init__(self):
        self.nodes: List[Node] = []

    def __len__(self) -> int:
        return len(self.nodes)

    def leaf(self, tensor: "Tensor") -> int:
        """Регистрация листа (параметра) в графе"""
        if tensor._graph is self and tensor.node_id is not None:
            return tensor.node_id
        if not tensor.is_leaf:
            raise ContractError(f"тензор {tensor!r} принадлежит другому графу")
        node_id = len(self.nodes)
        self.nodes.append(Node("leaf", (), tensor))
        tensor._graph = self
        tensor.node_id = node_id
        return node_id

    def record(
        self,
        tag: str,
        inputs: Sequence["Tensor"],
        data: np.ndarray,
        backward: BackwardFn
    ) -> "Tensor":
        """Добавление узла операции"""
        ids: List[Optional[int]] = []
        for t in inputs:
            if not t.requires_grad:
                ids.append(None)
            elif t.is_leaf:
                ids.append(self.leaf(t))
            elif t._graph is self:
                ids.append(t.node_id)
            else:
                raise ContractError(f"{tag}: вход из другого графа")

        out = Tensor(data)
        if any(i is not None for i in ids):
            out.requires_grad = True
            out.is_leaf = False
            out._graph = self
            out.node_id = len(self.nodes)
            self.nodes.append(Node(tag, tuple(ids), out, backward))
        return out

    def backward(self, loss: "Tensor") -> None:
        """Обратный проход от скалярной функции потерь"""
        if loss.size != 1:
            raise ContractError(f"backward: функция потерь должна быть скаляром, форма {loss.shape}")
        if loss.node_id is None or loss._graph is not self:
            raise ContractError("backward: тензор отсоединён от графа")

        grads = {loss.node_id: np.ones_like(loss.data)}
        for node_id in range(loss.node_id, -1, -1):
            g = grads.pop(node_id, None)
            if g is None:
                continue
            node = self.nodes[node_id]

            if node.backward is None:
                t = node.tensor
                t.grad = np.array(g, dtype=t.data.dtype) if t.grad is None else t.grad + g
                continue

            for input_id, ig in zip(node.inputs, node.backward(g)):
                if input_id is None or ig is None:
                    continue
                prev = grads.get(input_id)
                grads[input_id] = ig if prev is None else prev + ig


_runtime = _Runtime()


class Tensor:
    """Плотный n-мерный массив, одновременно узел графа"""

    __array_priority__ = 100

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        name: Optional[str] = None
    ):
        self.data: np.ndarray = np.asarray(data, dtype=get_dtype())
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self.is_leaf = True
        self.node_id: Optional[int] = None
        self._graph: Optional[Graph] = None

    # === Свойства ===

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def detach(self) -> "Tensor":
        """Копия значения без связи с графом"""
        return Tensor(self.data.copy())

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        backward(self)

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"<Tensor{label} {self.shape} {self.dtype}>"

    # === Арифметика ===

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __pow__(self, exponent: Scalar):
        return power(self, exponent)

    def __getitem__(self, key):
        return getitem(self, key)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        return tmean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes) -> "Tensor":
        return transpose(self, axes or None)


# === Управление режимами ===

def get_dtype():
    return _DTYPES[_runtime.precision]


def get_precision() -> str:
    return _runtime.precision


def set_precision(mode: str) -> None:
    """Глобальная точность графа: float64 для проверки градиентов, float32 для обучения"""
    if mode not in _DTYPES:
        raise ContractError(f"неизвестная точность {mode!r}, допустимо: {', '.join(_DTYPES)}")
    _runtime.precision = mode


@contextmanager
def precision(mode: str) -> Iterator[None]:
    previous = _runtime.precision
    set_precision(mode)
    try:
        yield
    finally:
        _runtime.precision = previous


@contextmanager
def no_grad() -> Iterator[None]:
    """Вычисления без записи графа"""
    previous = _runtime.grad_enabled
    _runtime.grad_enabled = False
    try:
        yield
    finally:
        _runtime.grad_enabled = previous


def is_grad_enabled() -> bool:
    return _runtime.grad_enabled


def current_graph() -> Graph:
    return _runtime.graph


@contextmanager
def fresh_graph() -> Iterator[Graph]:
    """Временный граф, прежний восстанавливается на выходе"""
    previous = _runtime.graph
    _runtime.graph = Graph()
    try:
        yield _runtime.graph
    finally:
        _runtime.graph = previous


def record(tag: str, inputs: Sequence[Tensor], forward: ForwardFn) -> Tensor:
    """
    Выполнение операции и регистрация узла.
    forward принимает массивы входов и возвращает (значение, функция градиента).
    """
    data, backward_fn = forward(*[t.data for t in inputs])
    if not _runtime.grad_enabled or not any(t.requires_grad for t in inputs):
        return Tensor(data)
    return _runtime.graph.record(tag, inputs, data, backward_fn)


def backward(loss: Tensor) -> None:
    if loss._graph is None:
        raise ContractError("backward: тензор отсоединён от графа")
    loss._graph.backward(loss)


# === Элементарные операции ===

def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _reduce_to(g: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    return np.sum(g).reshape(shape)


def _check_binary(tag: str, a: Tensor, b: Tensor) -> None:
    # Разрешено только скаляр-с-тензором
    if a.shape != b.shape and a.ndim != 0 and b.ndim != 0:
        raise ShapeError(tag, a.shape, b.shape)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_binary("add", a, b)

    def forward(x, y):
        return x + y, lambda g: (_reduce_to(g, x.shape), _reduce_to(g, y.shape))

    return record("add", [a, b], forward)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_binary("sub", a, b)

    def forward(x, y):
        return x - y, lambda g: (_reduce_to(g, x.shape), _reduce_to(-g, y.shape))

    return record("sub", [a, b], forward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_binary("mul", a, b)

    def forward(x, y):
        return x * y, lambda g: (_reduce_to(g * y, x.shape), _reduce_to(g * x, y.shape))

    return record("mul", [a, b], forward)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_binary("div", a, b)

    def forward(x, y):
        out = x / y

        def backward_fn(g):
            return _reduce_to(g / y, x.shape), _reduce_to(-g * out / y, y.shape)

        return out, backward_fn

    return record("div", [a, b], forward)


def power(a: Tensor, exponent: Scalar) -> Tensor:
    def forward(x):
        return x ** exponent, lambda g: (g * exponent * x ** (exponent - 1),)

    return record("pow", [a], forward)


def exp(a: Tensor) -> Tensor:
    def forward(x):
        out = np.exp(x)
        return out, lambda g: (g * out,)

    return record("exp", [a], forward)


def log(a: Tensor) -> Tensor:
    def forward(x):
        return np.log(x), lambda g: (g / x,)

    return record("log", [a], forward)


def sqrt(a: Tensor) -> Tensor:
    def forward(x):
        out = np.sqrt(x)
        return out, lambda g: (g * 0.5 / out,)

    return record("sqrt", [a], forward)


def absolute(a: Tensor) -> Tensor:
    def forward(x):
        return np.abs(x), lambda g: (g * np.sign(x),)

    return record("abs", [a], forward)


def maximum(a, b) -> Tensor:
    """Поэлементный максимум, при равенстве градиент идёт в первый аргумент"""
    a, b = as_tensor(a), as_tensor(b)
    _check_binary("maximum", a, b)

    def forward(x, y):
        take_x = x >= y
        out = np.where(take_x, x, y)

        def backward_fn(g):
            return _reduce_to(g * take_x, x.shape), _reduce_to(g * ~take_x, y.shape)

        return out, backward_fn

    return record("maximum", [a, b], forward)


def minimum(a, b) -> Tensor:
    """Поэлементный минимум, при равенстве градиент идёт в первый аргумент"""
    a, b = as_tensor(a), as_tensor(b)
    _check_binary("minimum", a, b)

    def forward(x, y):
        take_x = x <= y
        out = np.where(take_x, x, y)

        def backward_fn(g):
            return _reduce_to(g * take_x, x.shape), _reduce_to(g * ~take_x, y.shape)

        return out, backward_fn

    return record("minimum", [a, b], forward)


def clip(a: Tensor, low: Scalar, high: Scalar) -> Tensor:
    """Жёсткое ограничение, вне диапазона градиент нулевой"""
    def forward(x):
        inside = (x >= low) & (x <= high)
        return np.clip(x, low, high), lambda g: (g * inside,)

    return record("clip", [a], forward)


def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    def forward(x):
        out = np.sum(x, axis=axis, keepdims=keepdims)

        def backward_fn(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, x.shape),)

        return out, backward_fn

    return record("sum", [a], forward)


def tmean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    count = a.size if axis is None else int(np.prod([a.shape[i] for i in np.atleast_1d(axis)]))
    return tsum(a, axis=axis, keepdims=keepdims) * (1.0 / count)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)

    def forward(x):
        try:
            out = x.reshape(shape)
        except ValueError:
            raise ShapeError("reshape", x.shape, shape) from None
        return out, lambda g: (g.reshape(x.shape),)

    return record("reshape", [a], forward)


def transpose(a: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    axes = tuple(axes) if axes is not None else tuple(reversed(range(a.ndim)))
    inverse = tuple(np.argsort(axes))

    def forward(x):
        return np.transpose(x, axes), lambda g: (np.transpose(g, inverse),)

    return record("transpose", [a], forward)


def _is_basic_index(key) -> bool:
    items = key if isinstance(key, tuple) else (key,)
    return all(isinstance(k, (slice, int, type(Ellipsis))) or k is None for k in items)


def getitem(a: Tensor, key) -> Tensor:
    basic = _is_basic_index(key)

    def forward(x):
        out = x[key]

        def backward_fn(g):
            full = np.zeros_like(x)
            if basic:
                full[key] = g
            else:
                np.add.at(full, key, g)
            return (full,)

        return np.array(out), backward_fn

    return record("getitem", [a], forward)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """Конкатенация вдоль оси, остальные размеры обязаны совпадать"""
    tensors = list(tensors)
    if not tensors:
        raise ContractError("concat: пустой список")
    ref = tensors[0].shape
    ax = axis % len(ref)
    for t in tensors[1:]:
        if t.ndim != len(ref) or any(t.shape[i] != ref[i] for i in range(len(ref)) if i != ax):
            raise ShapeError("concat", ref, t.shape)

    def forward(*xs):
        bounds = np.cumsum([x.shape[ax] for x in xs])[:-1]
        return np.concatenate(xs, axis=ax), lambda g: tuple(np.split(g, bounds, axis=ax))

    return record("concat", tensors, forward)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = list(tensors)
    if not tensors:
        raise ContractError("stack: пустой список")
    for t in tensors[1:]:
        if t.shape != tensors[0].shape:
            raise ShapeError("stack", tensors[0].shape, t.shape)

    def forward(*xs):
        out = np.stack(xs, axis=axis)
        n = len(xs)
        return out, lambda g: tuple(np.take(g, i, axis=axis) for i in range(n))

    return record("stack", tensors, forward)
