"""
Pruning the augmented family down to six mechanisms
===================================================

Start from fifteen coefficients (five structural, ten extra mechanisms),
fit, drop the smallest, refit. The default budget here is small so the demo
finishes in well under a minute; pass 5000 for the full run (a few minutes).
"""

import sys

from lvselect import FIG1A, HyperParams, ParameterState, generate_dataset, run_selection

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 300
truth = ParameterState.base_model(FIG1A)
data = generate_dataset(truth, window=(0.0, 20.0), n_points=100)

trace = run_selection(ParameterState.full_family(), data, epsilon=6,
                      hyper=HyperParams(epochs=epochs, seed=0), truth=truth)

for rec in trace.steps:
    gone = ", ".join(rec.eliminated) or "-"
    print(f"step {rec.step:2d}  active {rec.active_count:2d}  MSE {rec.mse:.3g}  removed {gone}")

print("\nfinal model:")
for name, value in trace.final_state.as_dict(active_only=True).items():
    print(f"  {name:6s} {value:.3f}")

# the same trace in the table layout used for the CSV artifact
print("\n" + "\n".join(trace.to_csv().splitlines()[:4]) + "\n...")
