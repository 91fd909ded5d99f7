"""Flat parameter vectors with named views, plus the SGD update rule.

All network weights live in one contiguous float64 vector so snapshots,
checkpoints, gradients, and finite-difference checks operate on a single
array.  A layout maps names to (offset, shape) slots; views into the flat
vector share memory, so writes through a view update the vector.
"""
from __future__ import annotations

import numpy as np


class ParameterLayout:
    def __init__(self, specs):
        self.specs = [(name, tuple(shape)) for name, shape in specs]
        self._slots: dict[str, tuple[int, int, tuple[int, ...]]] = {}
        offset = 0
        for name, shape in self.specs:
            if name in self._slots:
                raise ValueError(f"duplicate parameter name {name!r}")
            size = int(np.prod(shape)) if shape else 1
            self._slots[name] = (offset, offset + size, shape)
            offset += size
        self.size = offset

    def view(self, flat: np.ndarray, name: str) -> np.ndarray:
        start, end, shape = self._slots[name]
        return flat[start:end].reshape(shape)

    def describe(self) -> list:
        return [[name, list(shape)] for name, shape in self.specs]

    @classmethod
    def from_description(cls, description) -> "ParameterLayout":
        return cls([(name, tuple(shape)) for name, shape in description])

    def __eq__(self, other) -> bool:
        return isinstance(other, ParameterLayout) and self.specs == other.specs

    def __repr__(self) -> str:
        return f"ParameterLayout({len(self.specs)} slots, {self.size} values)"


class Parameters:
    """theta plus its momentum accumulator, both laid out by `layout`."""

    def __init__(self, layout: ParameterLayout,
                 theta: np.ndarray | None = None,
                 momentum: np.ndarray | None = None):
        self.layout = layout
        self.theta = np.zeros(layout.size) if theta is None else np.asarray(theta, dtype=np.float64)
        self.momentum = np.zeros(layout.size) if momentum is None else np.asarray(momentum, dtype=np.float64)
        if self.theta.shape != (layout.size,) or self.momentum.shape != (layout.size,):
            raise ValueError("parameter vector length does not match the layout")

    def view(self, name: str) -> np.ndarray:
        return self.layout.view(self.theta, name)

    def copy(self) -> "Parameters":
        return Parameters(self.layout, self.theta.copy(), self.momentum.copy())


def zero_gradient(layout: ParameterLayout) -> np.ndarray:
    return np.zeros(layout.size)


def sgd_step(params: Parameters, grads: np.ndarray, lr: float,
             momentum: float, weight_decay: float) -> Parameters:
    """In-place momentum SGD with coupled weight decay.

    m <- momentum * m + (grad + weight_decay * theta)
    theta <- theta - lr * m
    """
    if grads.shape != params.theta.shape:
        raise ValueError("gradient shape does not match parameters")
    params.momentum *= momentum
    params.momentum += grads + weight_decay * params.theta
    params.theta -= lr * params.momentum
    return params
