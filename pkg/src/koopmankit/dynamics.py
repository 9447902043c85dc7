"""Polynomial vector fields and maps, trajectory generation, benchmark registry.

Continuous systems are integrated with fixed-step classical RK4; feedback
controllers are evaluated at every substep state, so closed-loop simulation
treats the control law as continuous feedback rather than a zero-order hold.
Discrete systems are iterated exactly. Both guards abort with
:class:`~koopmankit.exceptions.BlowUp` once the state norm passes 1e8.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .exceptions import BlowUp
from .polynomials import Polynomial

CONTINUOUS = "continuous"
DISCRETE = "discrete"

BLOWUP_LIMIT = 1e8
DEFAULT_DT = 0.01


@dataclass
class PolySystem:
    """A polynomial ODE right-hand side (continuous) or map (discrete).

    ``equations[i]`` is the polynomial for dx_i/dt or x_i(k+1). ``input_map``
    is an optional n-by-q matrix B for actuated systems, in which case the
    field is f(x) + B u. ``params`` records the named constants the equations
    were built from.
    """

    dim: int
    time_kind: str
    equations: tuple
    params: dict = field(default_factory=dict)
    input_map: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        if self.time_kind not in (CONTINUOUS, DISCRETE):
            raise ValueError(f"time_kind must be '{CONTINUOUS}' or '{DISCRETE}'")
        eqs = []
        for eq in self.equations:
            if not isinstance(eq, Polynomial):
                eq = Polynomial.from_terms(self.dim, eq)
            if eq.dim != self.dim:
                raise ValueError("equation dimension mismatch")
            eqs.append(eq)
        if len(eqs) != self.dim:
            raise ValueError(f"expected {self.dim} equations, got {len(eqs)}")
        self.equations = tuple(eqs)
        if self.input_map is not None:
            b = np.atleast_2d(np.asarray(self.input_map, dtype=float))
            if b.shape[0] != self.dim:
                raise ValueError(f"input map must have {self.dim} rows, got {b.shape}")
            if not np.all(np.isfinite(b)):
                raise ValueError("input map contains non-finite entries")
            self.input_map = b

    @property
    def n_inputs(self):
        return 0 if self.input_map is None else self.input_map.shape[1]


@dataclass
class Trajectory:
    """Sampled trajectory: times (M,), states (M, n), optional inputs (M, q)."""

    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        if self.times.ndim != 1:
            raise ValueError("times must be 1-D")
        if self.states.shape[0] != self.times.size:
            raise ValueError("states row count must match times")
        if self.inputs is not None:
            u = np.asarray(self.inputs, dtype=float)
            if u.ndim == 1:
                u = u[:, None]
            if u.shape[0] != self.times.size:
                raise ValueError("inputs row count must match times")
            self.inputs = u

    def __len__(self):
        return self.times.size

    @property
    def dim(self):
        return self.states.shape[1]


def eval_field(system: PolySystem, x, u=None, b=None):
    """Evaluate f(x), or f(x) + B u for actuated systems.

    ``b`` overrides the system's stored input map; supplying ``u`` without any
    input map (argument or stored) is an error, as is a stray ``b``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (system.dim,):
        raise ValueError(f"state must have shape ({system.dim},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("state contains non-finite entries")
    out = np.array([eq(x) for eq in system.equations])
    if u is None:
        if b is not None:
            raise ValueError("input map supplied without an input")
        return out
    bmat = b if b is not None else system.input_map
    if bmat is None:
        raise ValueError("input supplied but the system has no input map")
    bmat = np.atleast_2d(np.asarray(bmat, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    return out + bmat @ u


def _check_norm(x, t):
    norm = float(np.linalg.norm(x))
    if not np.isfinite(norm) or norm > BLOWUP_LIMIT:
        raise BlowUp(t, norm, BLOWUP_LIMIT)


def integrate(system: PolySystem, x0, t_end, dt=DEFAULT_DT, controller=None):
    """Fixed-step RK4 integration from t=0 to n_steps*dt covering ``t_end``.

    ``controller`` maps a state to an input vector; it is re-evaluated at each
    RK4 substep state and the value at each sample time is recorded in the
    returned trajectory.
    """
    if system.time_kind != CONTINUOUS:
        raise ValueError("integrate requires a continuous-time system")
    if dt <= 0 or t_end <= 0:
        raise ValueError("t_end and dt must be positive")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (system.dim,):
        raise ValueError(f"x0 must have shape ({system.dim},)")
    if controller is not None and system.input_map is None:
        raise ValueError("controller supplied but the system has no input map")

    if controller is None:
        def rhs(x):
            return np.array([eq(x) for eq in system.equations])
    else:
        b = system.input_map

        def rhs(x):
            drift = np.array([eq(x) for eq in system.equations])
            return drift + b @ np.atleast_1d(controller(x))

    n_steps = int(round(t_end / dt))
    times = np.arange(n_steps + 1) * dt
    states = np.empty((n_steps + 1, system.dim))
    states[0] = x0
    x = x0
    for k in range(n_steps):
        _check_norm(x, times[k])
        k1 = rhs(x)
        k2 = rhs(x + 0.5 * dt * k1)
        k3 = rhs(x + 0.5 * dt * k2)
        k4 = rhs(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise BlowUp(times[k + 1], float("inf"), BLOWUP_LIMIT)
        states[k + 1] = x
    _check_norm(x, times[-1])

    inputs = None
    if controller is not None:
        inputs = np.vstack([np.atleast_1d(controller(states[k])) for k in range(n_steps + 1)])
    return Trajectory(times=times, states=states, inputs=inputs)


def iterate(system: PolySystem, x0, steps):
    """Iterate a discrete map for ``steps`` steps (times are step indices)."""
    if system.time_kind != DISCRETE:
        raise ValueError("iterate requires a discrete-time system")
    if steps < 0:
        raise ValueError("steps must be non-negative")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (system.dim,):
        raise ValueError(f"x0 must have shape ({system.dim},)")
    states = np.empty((steps + 1, system.dim))
    states[0] = x0
    x = x0
    for k in range(steps):
        _check_norm(x, float(k))
        x = np.array([eq(x) for eq in system.equations])
        if not np.all(np.isfinite(x)):
            raise BlowUp(float(k + 1), float("inf"), BLOWUP_LIMIT)
        states[k + 1] = x
    _check_norm(x, float(steps))
    return Trajectory(times=np.arange(steps + 1, dtype=float), states=states)


# ---------------------------------------------------------------------------
# benchmark registry
# ---------------------------------------------------------------------------

def slow_manifold_field(mu, lam, poly):
    """Equations of dx1/dt = mu*x1, dx2/dt = lam*(x2 - P(x1)).

    ``poly`` maps exponent N -> coefficient a for P(x) = sum a*x^N.
    """
    eq1 = Polynomial(2, {(1, 0): mu})
    terms = {(0, 1): lam}
    for n, a in poly.items():
        terms[(int(n), 0)] = terms.get((int(n), 0), 0.0) + (-lam * a)
    eq2 = Polynomial(2, terms)
    return (eq1, eq2)


def _slow_manifold_map(mu, lam, poly):
    """Equations of x1 -> mu*x1, x2 -> lam*x2 + (1 - lam)*P(x1)."""
    eq1 = Polynomial(2, {(1, 0): mu})
    terms = {(0, 1): lam}
    for n, a in poly.items():
        terms[(int(n), 0)] = terms.get((int(n), 0), 0.0) + (1.0 - lam) * a
    eq2 = Polynomial(2, terms)
    return (eq1, eq2)


def _build_quad_manifold(p):
    return PolySystem(2, CONTINUOUS, slow_manifold_field(p["mu"], p["lambda"], {2: 1.0}),
                      params=p, name="quad_manifold")


def _build_quartic_manifold(p):
    return PolySystem(2, CONTINUOUS, slow_manifold_field(p["mu"], p["lambda"], {2: -2.0, 4: 1.0}),
                      params=p, name="quartic_manifold")


def _build_discrete_manifold(p):
    return PolySystem(2, DISCRETE, _slow_manifold_map(p["mu"], p["lambda"], {2: 1.0}),
                      params=p, name="discrete_manifold")


def _build_tu_map(p):
    lam, mu = p["lambda"], p["mu"]
    eq1 = Polynomial(2, {(1, 0): lam})
    eq2 = Polynomial(2, {(0, 1): mu, (2, 0): lam * lam - mu})
    return PolySystem(2, DISCRETE, (eq1, eq2), params=p, name="tu_map")


def _build_logistic(p):
    r = p["r"]
    eq = Polynomial(1, {(1,): r, (2,): -r})
    return PolySystem(1, DISCRETE, (eq,), params=p, name="logistic")


def _build_center_manifold(p):
    return PolySystem(1, CONTINUOUS, (Polynomial(1, {(2,): 1.0}),), params=p,
                      name="center_manifold")


def _build_kooc_demo(p):
    eqs = slow_manifold_field(p["mu"], p["lambda"], {2: 1.0})
    return PolySystem(2, CONTINUOUS, eqs, params=p, input_map=np.array([[0.0], [1.0]]),
                      name="kooc_demo")


def _build_limitation(p):
    eqs = slow_manifold_field(p["mu"], p["lambda"], {2: 1.0})
    return PolySystem(2, CONTINUOUS, eqs, params=p, input_map=np.array([[1.0], [0.0]]),
                      name="limitation")


def _build_rotated_quad(p):
    # coordinates (eta, xi) = T(angle) x for the quad-manifold field; the
    # transform matches spectral.rotation_matrix so the rotated data and the
    # rotated model line up.
    from .spectral import rotation_matrix  # local import to avoid a cycle

    t = rotation_matrix(p["angle"])
    tinv = np.linalg.inv(t)
    base = slow_manifold_field(p["mu"], p["lambda"], {2: 1.0})
    old_vars = [Polynomial(2, {(1, 0): tinv[i, 0], (0, 1): tinv[i, 1]}) for i in range(2)]
    substituted = [eq.compose(old_vars) for eq in base]
    eqs = tuple(
        sum((t[i, j] * substituted[j] for j in range(2)), Polynomial.zero(2))
        for i in range(2)
    )
    return PolySystem(2, CONTINUOUS, eqs, params=p, name="rotated_quad")


_REGISTRY = {
    "quad_manifold": {
        "builder": _build_quad_manifold,
        "defaults": {"mu": -0.05, "lambda": -1.0},
        "description": "continuous 2-state flow with attracting quadratic slow manifold x2 = x1^2",
    },
    "quartic_manifold": {
        "builder": _build_quartic_manifold,
        "defaults": {"mu": -0.05, "lambda": -1.0},
        "description": "continuous 2-state flow whose slow manifold is the quartic x2 = x1^4 - 2*x1^2",
    },
    "discrete_manifold": {
        "builder": _build_discrete_manifold,
        "defaults": {"mu": 0.9, "lambda": 0.1},
        "description": "discrete 2-state map contracting onto x2 = x1^2 (multipliers mu slow, lambda fast)",
    },
    "tu_map": {
        "builder": _build_tu_map,
        "defaults": {"lambda": 0.9, "mu": 0.5},
        "description": "discrete quadratic map x1 -> lambda*x1, x2 -> mu*x2 + (lambda^2 - mu)*x1^2",
    },
    "logistic": {
        "builder": _build_logistic,
        "defaults": {"r": 3.5},
        "description": "discrete 1-state logistic map x -> r*x*(1 - x)",
    },
    "center_manifold": {
        "builder": _build_center_manifold,
        "defaults": {},
        "description": "continuous 1-state flow dx/dt = x^2 (finite-time blow-up at t = 1/x0)",
    },
    "kooc_demo": {
        "builder": _build_kooc_demo,
        "defaults": {"mu": -0.1, "lambda": 1.0},
        "description": "actuated quad-manifold flow, input on x2 (B = [0, 1]); lifted-control benchmark",
    },
    "limitation": {
        "builder": _build_limitation,
        "defaults": {"mu": 0.1, "lambda": -1.0},
        "description": "actuated quad-manifold flow, input on x1 (B = [1, 0]); lifted x1^2 mode at 2*mu is uncontrollable",
    },
    "rotated_quad": {
        "builder": _build_rotated_quad,
        "defaults": {"mu": -0.05, "lambda": 1.0, "angle": float(np.pi / 4)},
        "description": "quad-manifold flow expressed in tilted coordinates (eta, xi) at the given angle",
    },
}


def registry_names():
    return sorted(_REGISTRY)


def registry_info(name=None):
    """Description strings keyed by system name (or one system's entry)."""
    if name is not None:
        return _REGISTRY[_canonical(name)]["description"]
    return {key: _REGISTRY[key]["description"] for key in registry_names()}


def registry_defaults(name):
    return dict(_REGISTRY[_canonical(name)]["defaults"])


def _canonical(name):
    key = str(name).replace("-", "_")
    if key not in _REGISTRY:
        raise ValueError(f"unknown system '{name}'; known: {', '.join(registry_names())}")
    return key


def builtin(name, **params):
    """Construct a registry system; keyword params override the defaults.

    ``lam`` is accepted as an alias for the reserved word ``lambda``.
    """
    key = _canonical(name)
    entry = _REGISTRY[key]
    merged = dict(entry["defaults"])
    for pname, value in params.items():
        pname = "lambda" if pname == "lam" else pname
        if pname not in merged:
            raise ValueError(f"system '{key}' takes no parameter '{pname}'")
        merged[pname] = float(value)
    return entry["builder"](merged)


# ---------------------------------------------------------------------------
# trajectory serialization (CSV, RFC 4180)
# ---------------------------------------------------------------------------

def _fmt(value):
    return format(value, ".17g")


def write_trajectory(traj: Trajectory, path, state_names=None):
    """Write a trajectory as CSV with header t,x1,...,xn[,u or u1..uq]."""
    n = traj.dim
    names = list(state_names) if state_names else [f"x{i + 1}" for i in range(n)]
    if len(names) != n:
        raise ValueError("state_names length mismatch")
    header = ["t"] + names
    if traj.inputs is not None:
        q = traj.inputs.shape[1]
        header += ["u"] if q == 1 else [f"u{i + 1}" for i in range(q)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(len(traj)):
            row = [_fmt(traj.times[k])] + [_fmt(v) for v in traj.states[k]]
            if traj.inputs is not None:
                row += [_fmt(v) for v in traj.inputs[k]]
            writer.writerow(row)


def read_trajectory(path):
    """Read a trajectory CSV produced by :func:`write_trajectory`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    if not header or header[0] != "t":
        raise ValueError(f"{path}: expected header starting with 't'")
    n_state = sum(1 for name in header[1:] if name.startswith("x"))
    n_input = len(header) - 1 - n_state
    data = np.asarray(rows, dtype=float)
    if data.shape[1] != len(header):
        raise ValueError(f"{path}: ragged rows")
    times = data[:, 0]
    states = data[:, 1:1 + n_state]
    inputs = data[:, 1 + n_state:] if n_input else None
    return Trajectory(times=times, states=states, inputs=inputs)
