"""When no finite lift exists: Carleman truncation and its failure modes.

Monomial lifts of most polynomial systems never close — each power pulls in
a higher one. Truncating the infinite ladder gives a finite linear model
that is exact symbolically below the cut but only locally accurate in time.
This script builds the truncations for the logistic map and for the blow-up
system dx/dt = x^2, and measures how the usable prediction horizon grows
with truncation rank.
"""

import numpy as np

from koopmankit import (
    builtin,
    carleman_center,
    carleman_logistic,
    closure_residual,
    iterate,
    propagate,
)

# --- logistic map: x -> r x (1 - x) --------------------------------------
r = 3.5
model = carleman_logistic(r, 4)
print(f"logistic map, r = {r}, rank-4 truncation:")
print(model.K)
system = builtin("logistic", r=r)
print("closure residual below the cut:",
      closure_residual(model, system, truncate=True))
print("closure residual with the dropped columns:",
      closure_residual(model, system, truncate=False))

x0 = 0.2
truth = iterate(system, [x0], 8)
lifted = propagate(model, [x0], steps=8)
print("\n step   truth      rank-4 prediction")
for k in range(9):
    print(f"  {k:2d}   {truth.states[k, 0]:8.5f}   {lifted.states[k, 0]:8.5f}")
print("the truncation is exact until the dropped powers matter — here two "
      "steps —\nthen the unmodeled top row feeds back and the prediction "
      "explodes.")

# --- dx/dt = x^2: solution 1/(1/x0 - t) blows up at t = 1/x0 --------------
print("\ndx/dt = x^2 from x0 = 0.5 (blow-up at t = 2):")
print("rank   10%-error horizon")
x0 = 0.5
for rank in (4, 8, 12, 16):
    m = carleman_center(rank)
    lifted = propagate(m, [x0], t_end=1.9, dt=0.001)
    truth = 1.0 / (1.0 / x0 - lifted.times)
    rel = np.abs(lifted.states[:, 0] - truth) / np.abs(truth)
    crossed = np.nonzero(rel > 0.1)[0]
    horizon = lifted.times[crossed[0]] if crossed.size else np.inf
    print(f" {rank:3d}   {horizon:.3f}")
print("higher rank buys time but never reaches the blow-up: a linear system "
      "cannot\nleave in finite time what the nonlinear one escapes.")
