"""Fully connected tanh surrogate ``t -> (u, v)`` and exact gradients of the PINN loss.

The network input is ``x = scale * t + offset``. By default raw time is fed
directly (``scale = 1``); ``SurrogateConfig(time_window=(0, 20))`` maps that
window affinely onto ``[-1, 1]`` instead. Time derivatives are always with
respect to raw time, i.e. they include the factor ``scale``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .autodiff import Tape, stack_columns
from .errors import ConfigurationError, NumericalOverflow
from .model import PARAM_NAMES, ParameterState


@dataclass(frozen=True)
class SurrogateConfig:
    hidden_layers: int = 5
    neurons_per_layer: int = 10
    activation: str = "tanh"
    #: ``None`` feeds raw time; ``(lo, hi)`` maps that window onto [-1, 1].
    time_window: Optional[tuple] = None

    def __post_init__(self):
        if self.activation != "tanh":
            raise ConfigurationError(f"only tanh activation is supported, got {self.activation!r}")
        if self.hidden_layers < 1 or self.neurons_per_layer < 1:
            raise ConfigurationError("need at least one hidden layer with one neuron")
        if self.time_window is not None:
            lo, hi = map(float, self.time_window)
            if not hi > lo:
                raise ConfigurationError(f"time_window needs hi > lo, got {self.time_window}")
            object.__setattr__(self, "time_window", (lo, hi))

    def layer_shapes(self) -> list:
        sizes = [1] + [self.neurons_per_layer] * self.hidden_layers + [2]
        return list(zip(sizes[:-1], sizes[1:]))

    @property
    def time_map(self) -> tuple:
        """``(scale, offset)`` with network input ``scale * t + offset``."""
        if self.time_window is None:
            return 1.0, 0.0
        lo, hi = self.time_window
        scale = 2.0 / (hi - lo)
        return scale, -1.0 - lo * scale

    def to_input(self, t):
        scale, offset = self.time_map
        return np.asarray(t, dtype=float) * scale + offset


@dataclass(frozen=True)
class SurrogateWeights:
    """Per-layer ``(W, b)`` pairs; ``W`` has shape ``(fan_in, fan_out)``.

    The last pair is the linear output layer.
    """

    layers: tuple

    def __post_init__(self):
        layers = []
        for W, b in self.layers:
            W = np.array(W, dtype=float)
            b = np.array(b, dtype=float)
            if W.ndim != 2 or b.shape != (W.shape[1],):
                raise ConfigurationError(f"inconsistent layer shapes {W.shape} / {b.shape}")
            W.setflags(write=False)
            b.setflags(write=False)
            layers.append((W, b))
        for (W0, _), (W1, _) in zip(layers, layers[1:]):
            if W0.shape[1] != W1.shape[0]:
                raise ConfigurationError(f"layer widths do not chain: {W0.shape} -> {W1.shape}")
        if layers[0][0].shape[0] != 1 or layers[-1][0].shape[1] != 2:
            raise ConfigurationError("surrogate must map 1 input to 2 outputs")
        object.__setattr__(self, "layers", tuple(layers))

    @property
    def n_weights(self) -> int:
        return sum(W.size + b.size for W, b in self.layers)

    def flat(self) -> np.ndarray:
        return np.concatenate([np.concatenate([W.ravel(), b]) for W, b in self.layers])

    def from_flat(self, vec) -> "SurrogateWeights":
        vec = np.asarray(vec, dtype=float)
        out, k = [], 0
        for W, b in self.layers:
            nW = W.size
            out.append((vec[k:k + nW].reshape(W.shape), vec[k + nW:k + nW + b.size]))
            k += nW + b.size
        if k != vec.size:
            raise ConfigurationError(f"expected {k} values, got {vec.size}")
        return SurrogateWeights(tuple(out))

    def to_text(self) -> str:
        """Layer-tagged rows of decimal values (``repr`` precision, lossless)."""
        lines = []
        for i, (W, b) in enumerate(self.layers):
            lines.append(f"layer {i} W {W.shape[0]} {W.shape[1]}")
            lines += [" ".join(repr(float(x)) for x in row) for row in W]
            lines.append(f"layer {i} b {b.size}")
            lines.append(" ".join(repr(float(x)) for x in b))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SurrogateWeights":
        rows = [ln for ln in text.splitlines() if ln.strip()]
        layers, k = [], 0
        while k < len(rows):
            tag = rows[k].split()
            if tag[0] != "layer" or tag[2] != "W":
                raise ConfigurationError(f"malformed weights header: {rows[k]!r}")
            n_in, n_out = int(tag[3]), int(tag[4])
            W = np.array([[float(x) for x in rows[k + 1 + i].split()] for i in range(n_in)])
            k += 1 + n_in
            tag = rows[k].split()
            if tag[2] != "b":
                raise ConfigurationError(f"malformed weights header: {rows[k]!r}")
            b = np.array([float(x) for x in rows[k + 1].split()])
            k += 2
            if W.shape != (n_in, n_out):
                raise ConfigurationError(f"row count mismatch in layer {tag[1]}")
            layers.append((W, b))
        return cls(tuple(layers))


def init_weights(config: SurrogateConfig, rng: np.random.Generator) -> SurrogateWeights:
    """Glorot-uniform weights, zero biases."""
    layers = []
    for fan_in, fan_out in config.layer_shapes():
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        layers.append((rng.uniform(-limit, limit, size=(fan_in, fan_out)), np.zeros(fan_out)))
    return SurrogateWeights(tuple(layers))


def _forward_with_tangent(w: SurrogateWeights, x: np.ndarray, jacobian: float = 1.0):
    h = x.reshape(-1, 1)
    dh = np.full_like(h, jacobian)
    for W, b in w.layers[:-1]:
        h = np.tanh(h @ W + b)
        dh = (1.0 - h * h) * (dh @ W)
    W, b = w.layers[-1]
    return h @ W + b, dh @ W


def mlp_forward(w: SurrogateWeights, x) -> np.ndarray:
    """Surrogate output at network input(s) ``x``; shape ``(..., 2)``."""
    x = np.asarray(x, dtype=float)
    y, _ = _forward_with_tangent(w, x.ravel())
    return y.reshape(x.shape + (2,))


def mlp_time_derivative(w: SurrogateWeights, x, jacobian: float = 1.0) -> np.ndarray:
    """``d(u_hat, v_hat)/dt`` at network input(s) ``x``.

    ``jacobian`` is ``dx/dt`` of the time mapping (``SurrogateConfig.time_map[0]``).
    """
    x = np.asarray(x, dtype=float)
    _, dy = _forward_with_tangent(w, x.ravel(), jacobian)
    return dy.reshape(x.shape + (2,))


@dataclass(frozen=True)
class LossWeights:
    data: float = 1.0
    residual: float = 1.0


@dataclass(frozen=True)
class LossBreakdown:
    data_mse: float
    residual_mse: float
    total: float


@dataclass
class Gradients:
    """Loss gradients: per-layer ``(dW, db)`` and a name->value map over active parameters."""

    loss: LossBreakdown
    weights: list
    params: dict

    def param_vector(self, names: Sequence[str]) -> np.ndarray:
        return np.array([self.params[n] for n in names])

    def flat(self, names: Sequence[str] | None = None) -> np.ndarray:
        names = list(self.params) if names is None else names
        parts = [np.concatenate([dW.ravel(), db]) for dW, db in self.weights]
        return np.concatenate(parts + [self.param_vector(names)])


def _batch_arrays(batch):
    pts = batch.points if hasattr(batch, "points") else np.asarray(batch, dtype=float)
    pts = np.asarray(pts, dtype=float).reshape(-1, 3)
    return pts[:, 0], pts[:, 1:]


_U_IDX = [PARAM_NAMES.index(n) for n in ("a1", "a2", "alpha0", "alpha1", "alpha2", "alpha3", "alpha4")]
_U_SIGN = np.array([-1.0, -1.0, 1.0, 1.0, 1.0, 1.0, 1.0])
_B_IDX = [PARAM_NAMES.index(n) for n in ("b1", "b2")]
_V_IDX = [PARAM_NAMES.index(n) for n in ("beta0", "beta1", "beta2", "beta3", "beta4")]
_R_IDX = PARAM_NAMES.index("r")


def _rhs_graph(y, p):
    """Augmented right-hand side on the tape; ``p`` is the masked 15-vector."""
    u, v = y.take(0), y.take(1)
    ones = y.tape.const(np.ones(u.shape))
    uu, uv, vv = u.square(), u * v, v.square()
    uuv, uvv = uu * v, uv * v
    du = u + stack_columns([uu, uv, ones, u, v, uuv, uvv]) @ (p.take(_U_IDX) * _U_SIGN)
    dv = (v - stack_columns([uv, vv]) @ p.take(_B_IDX)) * p.take(_R_IDX) \
        + stack_columns([ones, u, v, uuv, uvv]) @ p.take(_V_IDX)
    return du, dv


def _check_finite(name, value, history=None):
    if not np.isfinite(value):
        raise NumericalOverflow(f"{name} became non-finite", term=name, history=history)


def loss_graph(tape: Tape, weight_vars, p_masked, t_data, y_data, t_coll,
               loss_weights: LossWeights, time_map=(1.0, 0.0)):
    """Build the PINN loss on ``tape``; returns ``(total, data_mse, residual_mse)`` vars."""
    n_d = len(t_data)
    scale, offset = time_map
    x_all = (np.concatenate([t_data, t_coll]) * scale + offset).reshape(-1, 1)
    h = tape.const(x_all)
    dh = tape.const(np.full_like(x_all, scale))
    for W, b in weight_vars[:-1]:
        h = (h @ W + b).tanh()
        dh = (1.0 - h.square()) * (dh @ W)
    W, b = weight_vars[-1]
    y = h @ W + b
    dy = dh @ W

    data_mse = (y.rows(slice(0, n_d)) - y_data).square().mean()
    y_c, dy_c = y.rows(slice(n_d, None)), dy.rows(slice(n_d, None))
    du, dv = _rhs_graph(y_c, p_masked)
    residual = ((dy_c.take(0) - du).square().sum() + (dy_c.take(1) - dv).square().sum()) \
        * (0.5 / len(t_coll))
    total = data_mse * loss_weights.data + residual * loss_weights.residual
    return total, data_mse, residual


def loss_and_grads(layers, p_full, mask, t_data, y_data, t_coll,
                   loss_weights: LossWeights = LossWeights(), time_map=(1.0, 0.0)):
    """Array-level gradient routine used by the training loop.

    Returns ``(LossBreakdown, [(dW, db), ...], dp)`` with ``dp`` the gradient
    over all 15 canonical parameters (zero where ``mask`` is 0).
    """
    tape = Tape()
    weight_vars = [(tape.leaf(W), tape.leaf(b)) for W, b in layers]
    p = tape.leaf(p_full)
    with np.errstate(over="ignore", invalid="ignore"):
        total, data_mse, residual = loss_graph(tape, weight_vars, p * mask, t_data, y_data,
                                               t_coll, loss_weights, time_map)
        _check_finite("data_mse", data_mse.value)
        _check_finite("residual_mse", residual.value)
        _check_finite("total", total.value)
        tape.backward(total)
    loss = LossBreakdown(float(data_mse.value), float(residual.value), float(total.value))
    grads = [(gw.grad if gw.grad is not None else np.zeros_like(gw.value),
              gb.grad if gb.grad is not None else np.zeros_like(gb.value))
             for gw, gb in weight_vars]
    dp = p.grad if p.grad is not None else np.zeros(len(PARAM_NAMES))
    return loss, grads, dp


def grad_all(w: SurrogateWeights, state: ParameterState, batch, collocation,
             loss_weights: LossWeights = LossWeights(),
             config: SurrogateConfig = SurrogateConfig()) -> Gradients:
    """Reverse-mode gradient of the PINN loss with respect to every trainable.

    ``batch`` is a :class:`~lvselect.ode.Dataset` or an ``(m, 3)`` array of
    ``(t, u, v)`` rows; ``collocation`` are raw times for the residual term.
    Inactive parameters are absent from ``Gradients.params``.
    """
    t_data, y_data = _batch_arrays(batch)
    t_coll = np.asarray(collocation, dtype=float).ravel()
    mask = np.array(state.mask, dtype=float)
    loss, grads, dp = loss_and_grads(w.layers, state.values(), mask, t_data, y_data,
                                     t_coll, loss_weights, config.time_map)
    params = {n: float(g) for n, g, m in zip(PARAM_NAMES, dp, state.mask) if m}
    return Gradients(loss=loss, weights=grads, params=params)
