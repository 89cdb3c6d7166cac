"""
Two competing species in the phase plane
========================================

The competition model has a coexistence point where both nontrivial
nullclines cross. Whether it attracts depends on where the nullclines
meet the axes.
"""

import numpy as np

from lvselect import FIG1A, FIG1B, ParameterState, classify_phase, coexistence_equilibrium, integrate

# coexistence: each species limits itself more than the other
print("FIG1A class:", classify_phase(FIG1A).value)
u_star, v_star = coexistence_equilibrium(FIG1A)
print(f"equilibrium  ({u_star:.6f}, {v_star:.6f})   exact (10/11, 40/33) = ({10/11:.6f}, {40/33:.6f})")

traj = integrate(ParameterState.base_model(FIG1A), (2.0, 1.0), (0.0, 100.0))
print("state at t=100:", np.round(traj.states[-1], 6))

# swap the competition strengths and the outcome depends on who starts ahead
print("\nFIG1B class:", classify_phase(FIG1B).value)
for u0, v0 in [(2.0, 1.0), (0.5, 2.0)]:
    end = integrate(ParameterState.base_model(FIG1B), (u0, v0), (0.0, 100.0)).states[-1]
    winner = "u" if end[0] > end[1] else "v"
    print(f"  from ({u0}, {v0}): end ({end[0]:.3g}, {end[1]:.3g}) -> {winner} survives")

# a coarse look at the trajectory itself, plot-ready as TSV
print("\nfirst rows of the FIG1A trajectory:")
print("\n".join(traj.to_tsv().splitlines()[:6]))
