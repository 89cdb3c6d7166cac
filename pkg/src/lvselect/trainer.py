"""PINN-style joint fit of surrogate weights and mechanism coefficients.

The loss is ``data_weight * data_mse + residual_weight * residual_mse`` where the
residual compares the surrogate's time derivative against the augmented
right-hand side evaluated on the surrogate output. Optimisation is plain Adam
with bias correction over a fixed number of epochs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateRecovery, IllConditioned, InvalidInput, NumericalOverflow
from .model import PARAM_NAMES, STRUCTURAL_NAMES, BaseParams, ParameterState, rhs_full
from .ode import Dataset, Trajectory
from .surrogate import (
    LossBreakdown,
    LossWeights,
    SurrogateConfig,
    SurrogateWeights,
    _batch_arrays,
    _forward_with_tangent,
    init_weights,
    loss_and_grads,
    mlp_forward,
)

log = logging.getLogger(__name__)

STRUCTURAL_INIT = (0.3, 1.0)


@dataclass(frozen=True)
class HyperParams:
    epochs: int = 5000
    batch_size: int = 100
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    data_weight: float = 1.0
    residual_weight: float = 1.0
    nonnegativity: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise InvalidInput("epochs must be >= 1")
        if self.batch_size < 1:
            raise InvalidInput("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise InvalidInput("learning_rate must be positive")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise InvalidInput("Adam betas must lie in [0, 1)")
        if self.data_weight < 0 or self.residual_weight < 0:
            raise InvalidInput("loss weights must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise InvalidInput("seed must be a 64-bit unsigned integer")

    @property
    def loss_weights(self) -> LossWeights:
        return LossWeights(self.data_weight, self.residual_weight)


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0

    @classmethod
    def zeros_like(cls, trainables) -> "AdamState":
        return cls([np.zeros_like(x) for x in trainables], [np.zeros_like(x) for x in trainables])


def adam_step(trainables: list, grads: list, state: AdamState, hyper: HyperParams,
              projected=()):
    """One bias-corrected Adam update.

    ``projected`` holds indices into ``trainables`` that are clipped at zero
    afterwards when ``hyper.nonnegativity`` is set (the mechanism coefficients).
    Returns ``(new_trainables, new_state)``; inputs are not modified.
    """
    if len(grads) != len(trainables) or len(state.m) != len(trainables):
        raise InvalidInput("optimizer state does not match trainables")
    b1, b2 = hyper.adam_beta1, hyper.adam_beta2
    t = state.t + 1
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    new_x, new_m, new_v = [], [], []
    for i, (x, g, m, v) in enumerate(zip(trainables, grads, state.m, state.v)):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        x = x - hyper.learning_rate * (m / c1) / (np.sqrt(v / c2) + hyper.adam_eps)
        if hyper.nonnegativity and i in projected:
            x = np.maximum(x, 0.0)
        new_x.append(x)
        new_m.append(m)
        new_v.append(v)
    return new_x, AdamState(new_m, new_v, t)


def pinn_loss(w: SurrogateWeights, state: ParameterState, batch, collocation,
              loss_weights: LossWeights = LossWeights(),
              config: SurrogateConfig = SurrogateConfig()) -> LossBreakdown:
    """Evaluate the loss without a tape (plain numpy forward pass)."""
    t_data, y_data = _batch_arrays(batch)
    t_coll = np.asarray(collocation, dtype=float).ravel()
    if len(t_data) == 0 or len(t_coll) == 0:
        raise InvalidInput("batch and collocation must be nonempty")
    with np.errstate(over="ignore", invalid="ignore"):
        y, _ = _forward_with_tangent(w, config.to_input(t_data))
        data_mse = float(np.mean((y - y_data) ** 2))
        yc, dyc = _forward_with_tangent(w, config.to_input(t_coll), config.time_map[0])
        du, dv = rhs_full(state, yc[:, 0], yc[:, 1]) if np.all(np.isfinite(yc)) \
            else (np.full(len(t_coll), np.nan),) * 2
        residual_mse = float(np.mean((dyc[:, 0] - du) ** 2 + (dyc[:, 1] - dv) ** 2) / 2.0)
    for name, value in (("data_mse", data_mse), ("residual_mse", residual_mse)):
        if not np.isfinite(value):
            raise NumericalOverflow(f"{name} became non-finite", term=name)
    total = loss_weights.data * data_mse + loss_weights.residual * residual_mse
    return LossBreakdown(data_mse, residual_mse, total)


@dataclass
class FitResult:
    state: ParameterState
    weights: SurrogateWeights
    #: (epochs, 3) array with columns total, data, residual.
    loss_history: np.ndarray = field(repr=False)
    config: SurrogateConfig = field(default_factory=SurrogateConfig)

    def surrogate(self, t) -> np.ndarray:
        """Trained surrogate evaluated at raw time(s) ``t``; shape ``(..., 2)``."""
        return mlp_forward(self.weights, self.config.to_input(t))

    def history_csv(self) -> str:
        lines = ["epoch,data,residual,total"]
        lines += [f"{i + 1},{d:.6g},{r:.6g},{t:.6g}" for i, (t, d, r) in enumerate(self.loss_history)]
        return "\n".join(lines) + "\n"


def init_parameters(template: ParameterState, rng: np.random.Generator) -> np.ndarray:
    """Structural parameters uniform in [0.3, 1.0), augmentation coefficients 0."""
    vec = np.zeros(len(PARAM_NAMES))
    vec[:len(STRUCTURAL_NAMES)] = rng.uniform(*STRUCTURAL_INIT, size=len(STRUCTURAL_NAMES))
    return np.where(template.mask, vec, 0.0)


def fit(template: ParameterState, data: Dataset, hyper: HyperParams = HyperParams(),
        config: SurrogateConfig = SurrogateConfig()) -> FitResult:
    """Train surrogate and active coefficients of ``template`` on ``data``.

    Only the mask of ``template`` is used; values are freshly initialised from
    ``hyper.seed``. Each epoch shuffles the points into batches of
    ``min(batch_size, n)``; the batch times double as collocation points.
    On a non-finite loss a :class:`NumericalOverflow` is raised whose
    ``history`` holds the completed epochs.
    """
    n_active = sum(template.mask)
    if n_active == 0:
        raise InvalidInput("at least one parameter must be active")
    pts = data.points if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    n = len(pts)
    if n == 0:
        raise InvalidInput("dataset is empty")

    rng = np.random.default_rng(hyper.seed)
    weights = init_weights(config, rng)
    p_full = init_parameters(template, rng)
    mask = np.array(template.mask, dtype=float)
    active = np.flatnonzero(template.mask)

    trainables = [x for layer in weights.layers for x in layer] + [p_full[active]]
    opt = AdamState.zeros_like(trainables)
    projected = (len(trainables) - 1,)
    bs = min(hyper.batch_size, n)
    lw = hyper.loss_weights
    history = np.zeros((hyper.epochs, 3))

    for epoch in range(hyper.epochs):
        perm = rng.permutation(n)
        acc = np.zeros(3)
        for start in range(0, n, bs):
            batch = pts[perm[start:start + bs]]
            t_b = batch[:, 0]
            layers = list(zip(trainables[:-1:2], trainables[1:-1:2]))
            p_full = np.zeros(len(PARAM_NAMES))
            p_full[active] = trainables[-1]
            try:
                loss, wgrads, dp = loss_and_grads(layers, p_full, mask, t_b, batch[:, 1:], t_b,
                                                  lw, config.time_map)
            except NumericalOverflow as exc:
                exc.history = history[:epoch].copy()
                raise
            grads = [g for pair in wgrads for g in pair] + [dp[active]]
            trainables, opt = adam_step(trainables, grads, opt, hyper, projected)
            acc += len(batch) * np.array([loss.total, loss.data_mse, loss.residual_mse])
        history[epoch] = acc / n

    p_full = np.zeros(len(PARAM_NAMES))
    p_full[active] = trainables[-1]
    fitted = ParameterState.from_values(p_full, active=template.active_names)
    final = SurrogateWeights(tuple(zip(trainables[:-1:2], trainables[1:-1:2])))
    return FitResult(state=fitted, weights=final, loss_history=history, config=config)


def oracle_derivative_fit(dense: Trajectory, max_condition: float = 1e10) -> BaseParams:
    """Recover the structural parameters by linear least squares on exact derivatives.

    Equation one: ``u' - u = -a1 u^2 - a2 u v``. Equation two:
    ``v' = c1 v + c2 u v + c3 v^2`` with ``r = c1``, ``b1 = -c2/c1``, ``b2 = -c3/c1``.
    ``dense.derivs`` must hold the true right-hand side along the trajectory.
    """
    u, v = dense.states[:, 0], dense.states[:, 1]
    du, dv = dense.derivs[:, 0], dense.derivs[:, 1]
    A = np.column_stack([u * u, u * v])
    B = np.column_stack([v, u * v, v * v])
    def check(name, M):
        cond = np.linalg.cond(M)
        if not cond <= max_condition:
            raise IllConditioned(f"{name} regression matrix has condition number {cond:.3e}")

    check("u-equation", A)
    (na1, na2), *_ = np.linalg.lstsq(A, du - u, rcond=None)
    # minimum-norm solve first: a zero growth rate makes B rank-deficient, and that is
    # reported as the more specific degeneracy
    (c1, c2, c3), *_ = np.linalg.lstsq(B, dv, rcond=None)
    if abs(c1) < 1e-10:
        raise DegenerateRecovery(f"growth coefficient {c1:.3e} is numerically zero")
    check("v-equation", B)
    return BaseParams(r=c1, a1=-na1, a2=-na2, b1=-c2 / c1, b2=-c3 / c1)
