"""Exact finite lifts: a nonlinear flow, linear in the right coordinates.

The two-state system

    dx1/dt = mu * x1
    dx2/dt = lam * (x2 - x1^2)

attracts everything onto the parabola x2 = x1^2 when lam < mu < 0. Appending
the single observable y3 = x1^2 closes the dynamics: the lifted state
(x1, x2, x1^2) evolves under a constant 3x3 matrix, with no truncation error.
This script builds the lift, checks the closure symbolically, and confirms
that the linear flow reproduces the nonlinear simulation to round-off-level
accuracy.
"""

import numpy as np

from koopmankit import (
    builtin,
    closure_residual,
    integrate,
    project_states,
    propagate,
    slow_manifold_lift_ct,
)

MU, LAM = -0.05, -1.0

model = slow_manifold_lift_ct(MU, LAM, {2: 1.0})
print("lifted coordinates:", model.library.names)
print("lifted matrix K =")
print(model.K)

# the closure defect is a polynomial identity, so it is exactly zero
system = builtin("quad_manifold", mu=MU, lam=LAM)
print("\nsymbolic closure residual:", closure_residual(model, system))

# propagate the lifted linear system and project back onto (x1, x2)
x0 = [1.5, -1.0]
truth = integrate(system, x0, t_end=10.0, dt=0.01)
lifted = propagate(model, x0, t_end=10.0, dt=0.01)
states = project_states(model, lifted)
err = np.max(np.abs(states - truth.states))
print(f"max |linear - nonlinear| over horizon 10: {err:.3e}")

# the third lifted coordinate is x1^2 along the entire trajectory
track = np.max(np.abs(lifted.states[:, 2] - truth.states[:, 0] ** 2))
print(f"max |y3 - x1^2| along the trajectory:     {track:.3e}")

# the fast mode (rate lam) snaps the state onto the parabola; what remains
# rides the manifold toward the origin at the slow rate 2*mu
dist = np.abs(truth.states[:, 1] - truth.states[:, 0] ** 2)
print(f"\ndistance to the parabola: {dist[0]:.3f} at t=0, "
      f"{dist[-1]:.2e} at t=10 (decaying like exp(2*mu*t))")
