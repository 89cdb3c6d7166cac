"""A small reverse-mode tape over numpy arrays.

Nodes are appended to the tape in creation order, so walking the tape backwards
is already a valid reverse topological order. Only what the surrogate and the
ODE residual need is provided: elementwise arithmetic with numpy broadcasting,
``matmul``, ``tanh``, reductions, column gathering and column stacking.

Example
-------
>>> tape = Tape()
>>> x = tape.leaf(np.array([1.0, 2.0]))
>>> y = (x * x).sum()
>>> tape.backward(y)
>>> x.grad
array([2., 4.])
"""

from __future__ import annotations

import numpy as np


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Var:
    __slots__ = ("tape", "value", "grad", "requires_grad", "_backward")

    def __init__(self, tape, value, requires_grad, backward=None):
        self.tape = tape
        self.value = value
        self.grad = None
        self.requires_grad = requires_grad
        self._backward = backward

    def __repr__(self):
        return f"Var(shape={np.shape(self.value)}, requires_grad={self.requires_grad})"

    @property
    def shape(self):
        return np.shape(self.value)

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = g
        else:
            self.grad = self.grad + g

    # -- arithmetic ---------------------------------------------------------
    def _lift(self, other):
        return other if isinstance(other, Var) else self.tape.const(other)

    def __add__(self, other):
        other = self._lift(other)
        a, b = self, other
        a_shape, b_shape = np.shape(a.value), np.shape(b.value)

        def backward(g):
            if a.requires_grad:
                a._accumulate(_unbroadcast(g, a_shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(g, b_shape))
        return self.tape._op(a.value + b.value, (a, b), backward)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._lift(other)
        a, b = self, other
        a_shape, b_shape = np.shape(a.value), np.shape(b.value)

        def backward(g):
            if a.requires_grad:
                a._accumulate(_unbroadcast(g, a_shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(-g, b_shape))
        return self.tape._op(a.value - b.value, (a, b), backward)

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        a, b = self, other
        a_shape, b_shape = np.shape(a.value), np.shape(b.value)

        def backward(g):
            if a.requires_grad:
                a._accumulate(_unbroadcast(g * b.value, a_shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(g * a.value, b_shape))
        return self.tape._op(a.value * b.value, (a, b), backward)

    __rmul__ = __mul__

    def __neg__(self):
        a = self

        def backward(g):
            a._accumulate(-g)
        return self.tape._op(-a.value, (a,), backward)

    def __matmul__(self, other):
        other = self._lift(other)
        a, b = self, other

        # (n, k) @ (k, m) or (n, k) @ (k,)
        def backward(g):
            if a.requires_grad:
                a._accumulate(np.outer(g, b.value) if b.value.ndim == 1 else g @ b.value.T)
            if b.requires_grad:
                b._accumulate(a.value.T @ g)
        return self.tape._op(a.value @ b.value, (a, b), backward)

    # -- elementwise functions ---------------------------------------------
    def tanh(self):
        a = self
        out = np.tanh(a.value)

        def backward(g):
            a._accumulate(g * (1.0 - out * out))
        return self.tape._op(out, (a,), backward)

    def square(self):
        a = self

        def backward(g):
            a._accumulate(2.0 * g * a.value)
        return self.tape._op(a.value * a.value, (a,), backward)

    # -- reductions and reshaping ------------------------------------------
    def sum(self):
        a = self
        shape = np.shape(a.value)

        def backward(g):
            a._accumulate(np.broadcast_to(g, shape).copy())
        return self.tape._op(np.sum(a.value), (a,), backward)

    def mean(self):
        a = self
        shape = np.shape(a.value)
        n = a.value.size

        def backward(g):
            a._accumulate(np.full(shape, g / n))
        return self.tape._op(np.sum(a.value) / n, (a,), backward)

    def rows(self, index):
        """Select along the first axis (``x[index]``) with a slice."""
        a = self
        shape = np.shape(a.value)

        def backward(g):
            full = np.zeros(shape)
            full[index] = g
            a._accumulate(full)
        return self.tape._op(a.value[index], (a,), backward)

    def take(self, index):
        """Gather along the last axis (``x[..., index]``)."""
        a = self
        shape = np.shape(a.value)

        def backward(g):
            full = np.zeros(shape)
            np.add.at(full, (..., index), g)
            a._accumulate(full)
        return self.tape._op(a.value[..., index], (a,), backward)


def stack_columns(cols):
    """Stack 1-D vars of equal length into an (n, k) var."""
    tape = cols[0].tape

    def backward(g):
        for j, c in enumerate(cols):
            if c.requires_grad:
                c._accumulate(g[:, j])
    value = np.stack([c.value for c in cols], axis=1)
    return tape._op(value, cols, backward)


class Tape:
    """Records operations for one reverse sweep; create a fresh tape per evaluation."""

    def __init__(self):
        self.nodes = []

    def leaf(self, value):
        var = Var(self, np.asarray(value, dtype=float), True)
        self.nodes.append(var)
        return var

    def const(self, value):
        return Var(self, np.asarray(value, dtype=float), False)

    def _op(self, value, parents, backward):
        for p in parents:
            if p.requires_grad:
                var = Var(self, value, True, backward)
                self.nodes.append(var)
                return var
        return Var(self, value, False)

    def backward(self, output):
        if np.size(output.value) != 1:
            raise ValueError("backward needs a scalar output")
        for node in self.nodes:
            node.grad = None
        output.grad = np.ones_like(output.value)
        for node in reversed(self.nodes):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
