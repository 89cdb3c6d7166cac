"""
Fitting the competition model with a physics-informed network
==============================================================

A 5x10 tanh network is trained jointly with the five structural parameters.
The loss combines a data misfit with the ODE residual of the network output.
Compare the full window [0, 20] with the quasi-stationary window [10, 20].
"""

import sys
import time

from lvselect import FIG1A, HyperParams, ParameterState, fit, generate_dataset, trajectory_mse

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 5000
truth = ParameterState.base_model(FIG1A)

for window in [(0.0, 20.0), (10.0, 20.0)]:
    data = generate_dataset(truth, window=window, n_points=100)
    t0 = time.perf_counter()
    res = fit(ParameterState.base_model(), data, HyperParams(epochs=epochs, seed=0))
    print(f"window {window}: {time.perf_counter() - t0:.1f} s, final loss {res.loss_history[-1, 0]:.3g}")
    for name, value in res.state.as_dict(active_only=True).items():
        print(f"  {name:2s} {value:.3f}  (true {getattr(FIG1A, name)})")
    print(f"  trajectory MSE on [0, 20]: {trajectory_mse(truth, res.state):.3g}")
