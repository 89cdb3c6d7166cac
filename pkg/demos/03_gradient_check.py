"""
Checking the hand-written reverse mode
======================================

The trainer differentiates the loss with a small tape. Here the gradient is
compared, coordinate by coordinate, against central finite differences.
"""

import numpy as np

from lvselect import (
    FIG1A,
    PARAM_NAMES,
    LossWeights,
    ParameterState,
    SurrogateConfig,
    generate_dataset,
    grad_all,
    init_weights,
    pinn_loss,
)

rng = np.random.default_rng(7)
cfg = SurrogateConfig()
w = init_weights(cfg, rng)
state = ParameterState.full_family().with_values(
    np.concatenate([[0.5, 0.7, 0.3, 0.3, 0.6], rng.normal(scale=0.05, size=10)]))
data = generate_dataset(ParameterState.base_model(FIG1A), n_points=20)
batch, coll = data.points[:8], data.times[:8]

g = grad_all(w, state, batch, coll, LossWeights(), cfg)
print("loss:", pinn_loss(w, state, batch, coll).total)

# finite differences on the mechanism coefficients
h = 1e-5
p = state.values()
print(f"{'name':7s} {'reverse mode':>14s} {'central diff':>14s}")
for i, name in enumerate(PARAM_NAMES):
    e = np.zeros_like(p)
    e[i] = h
    up = pinn_loss(w, state.with_values(p + e), batch, coll).total
    dn = pinn_loss(w, state.with_values(p - e), batch, coll).total
    print(f"{name:7s} {g.params[name]:14.8f} {(up - dn) / (2 * h):14.8f}")

# and on a few network weights
flat = w.flat()
ad = g.flat(list(PARAM_NAMES))[:len(flat)]
for k in rng.choice(len(flat), 5, replace=False):
    e = np.zeros_like(flat)
    e[k] = h
    fd = (pinn_loss(w.from_flat(flat + e), state, batch, coll).total
          - pinn_loss(w.from_flat(flat - e), state, batch, coll).total) / (2 * h)
    print(f"weight {k:3d} {ad[k]:14.8f} {fd:14.8f}")
