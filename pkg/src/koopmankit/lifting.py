"""Observable libraries, closed-form Koopman lifts, and truncated Carleman matrices.

A lift packages an observable library together with the square matrix that
advances it, as a :class:`KoopmanModel`. For the slow-manifold family the
matrix closes exactly on the library; :func:`closure_residual` verifies that
symbolically, with zero residual, by comparing polynomial coefficients.
Carleman constructions are truncations: rows within the retained rank are
exact, and the neglected monomials are the truncation error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import comb

import numpy as np

from . import dynamics
from .dynamics import CONTINUOUS, DISCRETE, Trajectory
from .polynomials import Polynomial, ipow, monomial_name, format_polynomial

EXP_NEG_INV = "exp_neg_inv"
_NAMED = (EXP_NEG_INV,)


def eval_named_observable(name, values):
    """Evaluate a named closed-form observable on scalar samples.

    ``exp_neg_inv`` is exp(-1/x) for x > 0, extended continuously by 0 at
    x = 0; negative arguments are outside its domain.
    """
    if name != EXP_NEG_INV:
        raise ValueError(f"unknown named observable '{name}'")
    v = np.asarray(values, dtype=float)
    if np.any(v < 0):
        raise ValueError("exp_neg_inv is undefined for negative arguments")
    safe = np.where(v > 0, v, 1.0)
    return np.where(v > 0, np.exp(-1.0 / safe), 0.0)


def _as_observable(obs, dim):
    if isinstance(obs, str):
        name = obs.replace("-", "_")
        if name not in _NAMED:
            raise ValueError(f"unknown named observable '{obs}'")
        if dim != 1:
            raise ValueError("named observables require a 1-state library")
        return name
    if isinstance(obs, Polynomial):
        if obs.dim != dim:
            raise ValueError("observable dimension mismatch")
        if obs.is_zero():
            raise ValueError("zero polynomial is not a valid observable")
        return obs
    # bare exponent tuple -> monomial
    return Polynomial.monomial(dim, tuple(obs))


def observable_name(obs):
    if isinstance(obs, str):
        return obs
    if obs.is_monomial():
        return monomial_name(obs.exponents())
    return format_polynomial(obs)


@dataclass
class ObservableLibrary:
    """Ordered collection of observables on an n-dimensional state.

    Entries are polynomials (monomials being the common case) or the name of
    a closed-form scalar function. ``state_inclusive`` asserts that the first
    n observables are the state coordinates themselves.
    """

    dim: int
    observables: tuple
    state_inclusive: bool = False

    def __post_init__(self):
        obs = tuple(_as_observable(o, self.dim) for o in self.observables)
        keys = [o if isinstance(o, str) else o.key() for o in obs]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate observables in library")
        if self.state_inclusive:
            if len(obs) < self.dim:
                raise ValueError("state-inclusive library shorter than the state")
            for i in range(self.dim):
                expected = Polynomial.variable(self.dim, i)
                if not (isinstance(obs[i], Polynomial) and obs[i] == expected):
                    raise ValueError(f"observable {i} must be x{i + 1} in a state-inclusive library")
        self.observables = obs

    def __len__(self):
        return len(self.observables)

    @property
    def names(self):
        return [observable_name(o) for o in self.observables]

    def index_of(self, name):
        return self.names.index(name)

    def is_polynomial(self):
        return all(isinstance(o, Polynomial) for o in self.observables)


def monomials(dim, max_degree):
    """State-inclusive library of all monomials of degree 1..max_degree.

    Graded-lexicographic order: by total degree, then descending exponent of
    the earliest variable, so the state coordinates come first.
    """
    if max_degree < 1:
        raise ValueError("max_degree must be >= 1")
    exps = []

    def gen(prefix, remaining, slots):
        if slots == 1:
            exps.append(prefix + (remaining,))
            return
        for e in range(remaining, -1, -1):
            gen(prefix + (e,), remaining - e, slots - 1)

    all_exps = []
    for degree in range(1, max_degree + 1):
        exps = []
        gen((), degree, dim)
        all_exps.extend(exps)
    return ObservableLibrary(dim, tuple(all_exps), state_inclusive=True)


def eval_library(library: ObservableLibrary, x):
    """Stack observable values: (m,) for a point, (m, M) for snapshot columns."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    cols = x[:, None] if single else x
    if cols.shape[0] != library.dim:
        raise ValueError(f"state dimension {cols.shape[0]} does not match library dim {library.dim}")
    rows = []
    for obs in library.observables:
        if isinstance(obs, str):
            rows.append(eval_named_observable(obs, cols[0]))
        else:
            rows.append(np.atleast_1d(obs(cols)))
    out = np.vstack(rows)
    return out[:, 0] if single else out


@dataclass
class KoopmanModel:
    """A linear advance matrix K over an observable library.

    Continuous kind: d/dt Theta(x) = K Theta(x); discrete kind:
    Theta(F(x)) = K Theta(x). ``state_rows`` lists the rows that advance the
    original state coordinates.
    """

    library: ObservableLibrary
    K: np.ndarray
    time_kind: str
    state_rows: tuple = ()

    def __post_init__(self):
        if self.time_kind not in (CONTINUOUS, DISCRETE):
            raise ValueError("bad time_kind")
        k = np.asarray(self.K, dtype=float)
        m = len(self.library)
        if k.shape != (m, m):
            raise ValueError(f"K must be {m}x{m} for this library, got {k.shape}")
        if not np.all(np.isfinite(k)):
            raise ValueError("K contains non-finite entries")
        self.K = k
        rows = tuple(int(i) for i in self.state_rows)
        if any(i < 0 or i >= m for i in rows):
            raise ValueError("state_rows out of range")
        self.state_rows = rows

    @property
    def state_dim(self):
        return self.library.dim


def lift_state(model: KoopmanModel, x):
    """Evaluate the model's library at a state point."""
    return eval_library(model.library, np.asarray(x, dtype=float))


def _poly_dict(poly):
    """Normalize P given as {N: a} or iterable of (N, a); exponents >= 2, distinct."""
    if poly is None:
        items = []
    elif isinstance(poly, dict):
        items = list(poly.items())
    else:
        items = [(int(n), float(a)) for n, a in poly]
        if len({n for n, _ in items}) != len(items):
            raise ValueError("duplicate exponents in manifold polynomial")
    out = {}
    for n, a in items:
        n = int(n)
        if n < 2:
            raise ValueError("manifold polynomial exponents must be >= 2 "
                             "(degree-1 terms belong to the linear part)")
        if n in out:
            raise ValueError("duplicate exponents in manifold polynomial")
        out[n] = float(a)
    return dict(sorted(out.items()))


def _manifold_library(powers):
    obs = [(1, 0), (0, 1)] + [(n, 0) for n in powers]
    return ObservableLibrary(2, tuple(obs), state_inclusive=True)


def slow_manifold_lift_ct(mu, lam, poly=None):
    """Exact lift of dx1/dt = mu*x1, dx2/dt = lam*(x2 - P(x1)).

    P is given as {exponent: coefficient}. The library is
    [x1, x2, x1^N1, ..., x1^NM] with exponents ascending, and K is
    diag(mu, lam, mu*N1, ..., mu*NM) plus row-2 couplings -a_i*lam.
    """
    terms = _poly_dict(poly)
    powers = list(terms)
    m = 2 + len(powers)
    k = np.zeros((m, m))
    k[0, 0] = mu
    k[1, 1] = lam
    for i, n in enumerate(powers):
        k[1, 2 + i] = -terms[n] * lam
        k[2 + i, 2 + i] = mu * n
    return KoopmanModel(_manifold_library(powers), k, CONTINUOUS, state_rows=(0, 1))


def slow_manifold_lift_dt(mu, lam, poly=None):
    """Exact lift of the discrete family x1 -> mu*x1, x2 -> lam*x2 + (1-lam)*P(x1).

    Same library as the continuous lift; the diagonal carries the multipliers
    mu, lam, mu^N1, ..., and row 2 couples through a_i*(1-lam).
    """
    terms = _poly_dict(poly)
    powers = list(terms)
    m = 2 + len(powers)
    k = np.zeros((m, m))
    k[0, 0] = mu
    k[1, 1] = lam
    for i, n in enumerate(powers):
        k[1, 2 + i] = terms[n] * (1.0 - lam)
        k[2 + i, 2 + i] = ipow(mu, n)
    return KoopmanModel(_manifold_library(powers), k, DISCRETE, state_rows=(0, 1))


def tu_lift(lam, mu):
    """Exact lift of x1 -> lam*x1, x2 -> mu*x2 + (lam^2 - mu)*x1^2.

    Built directly (rather than by rewriting into the discrete family) so the
    matrix entries are bit-identical to the registry map's coefficients and
    the symbolic closure check is exact.
    """
    k = np.zeros((3, 3))
    k[0, 0] = lam
    k[1, 1] = mu
    k[1, 2] = lam * lam - mu
    k[2, 2] = lam * lam
    return KoopmanModel(_manifold_library([2]), k, DISCRETE, state_rows=(0, 1))


def carleman_logistic(r, rank):
    """Truncated Carleman matrix of the logistic map on [x, x^2, ..., x^rank].

    Row n carries r^n times the alternating Pascal row: entry (n, n+k) is
    (-1)^k * C(n, k) * r^n for k = 0..n, with columns beyond the rank dropped.
    """
    if rank < 1:
        raise ValueError("rank must be >= 1")
    k = np.zeros((rank, rank))
    for n in range(1, rank + 1):
        rn = ipow(r, n)
        for j in range(n + 1):
            col = n + j
            if col > rank:
                break
            coeff = comb(n, j) * rn
            k[n - 1, col - 1] = -coeff if j % 2 else coeff
    lib = ObservableLibrary(1, tuple((p,) for p in range(1, rank + 1)), state_inclusive=True)
    return KoopmanModel(lib, k, DISCRETE, state_rows=(0,))


def carleman_center(rank):
    """Truncated Carleman generator of dx/dt = x^2 on [x, x^2, ..., x^rank].

    Superdiagonal entry (i, i+1) is i; the matrix is nilpotent, so every
    truncation has determinant exactly zero.
    """
    if rank < 1:
        raise ValueError("rank must be >= 1")
    k = np.zeros((rank, rank))
    for i in range(1, rank):
        k[i - 1, i] = float(i)
    lib = ObservableLibrary(1, tuple((p,) for p in range(1, rank + 1)), state_inclusive=True)
    return KoopmanModel(lib, k, CONTINUOUS, state_rows=(0,))


# ---------------------------------------------------------------------------
# symbolic closure
# ---------------------------------------------------------------------------

def observable_advance(obs: Polynomial, system) -> Polynomial:
    """The observable's image under the dynamics: Lie derivative or composition."""
    if system.time_kind == CONTINUOUS:
        return obs.lie_derivative(system.equations)
    return obs.compose(system.equations)


def closure_residual(model: KoopmanModel, system, truncate=False):
    """Largest coefficient mismatch between each observable's advance and K·Theta.

    Zero means the library is exactly invariant and K reproduces the dynamics
    coefficient-for-coefficient. With ``truncate=True``, advance terms whose
    monomials lie outside the library (the discarded tail of a Carleman
    truncation) are dropped before comparing.
    """
    if not model.library.is_polynomial():
        raise ValueError("closure check requires a polynomial library")
    if system.time_kind != model.time_kind:
        raise ValueError("model and system time kinds differ")
    if system.dim != model.library.dim:
        raise ValueError("state dimension mismatch")
    retained = {o.exponents() for o in model.library.observables if o.is_monomial()}
    worst = 0.0
    for i, obs in enumerate(model.library.observables):
        lhs = observable_advance(obs, system)
        if truncate:
            lhs = Polynomial(lhs.dim, {e: c for e, c in lhs.terms.items() if e in retained})
        rhs = Polynomial.zero(system.dim)
        for j, other in enumerate(model.library.observables):
            if model.K[i, j] != 0.0:
                rhs = rhs + model.K[i, j] * other
        worst = max(worst, (lhs - rhs).max_abs_coeff())
    return worst


# ---------------------------------------------------------------------------
# linear propagation of lifted states
# ---------------------------------------------------------------------------

def propagate(model: KoopmanModel, x0, t_end=None, dt=dynamics.DEFAULT_DT, steps=None):
    """Advance the lifted state linearly and return the lifted trajectory.

    Continuous models integrate dy/dt = K y with fixed-step RK4 on [0, t_end];
    discrete models apply y -> K y for ``steps`` steps.
    """
    y0 = lift_state(model, x0)
    k = model.K
    if model.time_kind == DISCRETE:
        if steps is None:
            raise ValueError("steps required for a discrete model")
        ys = np.empty((steps + 1, len(y0)))
        ys[0] = y0
        y = y0
        for i in range(steps):
            y = k @ y
            ys[i + 1] = y
        return Trajectory(times=np.arange(steps + 1, dtype=float), states=ys)
    if t_end is None:
        raise ValueError("t_end required for a continuous model")
    n_steps = int(round(t_end / dt))
    times = np.arange(n_steps + 1) * dt
    ys = np.empty((n_steps + 1, len(y0)))
    ys[0] = y0
    y = y0
    for i in range(n_steps):
        k1 = k @ y
        k2 = k @ (y + 0.5 * dt * k1)
        k3 = k @ (y + 0.5 * dt * k2)
        k4 = k @ (y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        ys[i + 1] = y
    return Trajectory(times=times, states=ys)


def project_states(model: KoopmanModel, lifted: Trajectory):
    """Extract the original state coordinates from a lifted trajectory."""
    if not model.state_rows:
        raise ValueError("model has no state rows")
    return lifted.states[:, list(model.state_rows)]


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def observable_to_json(obs):
    if isinstance(obs, str):
        return obs
    if obs.is_monomial():
        return list(obs.exponents())
    return {"terms": [[c, list(e)] for e, c in sorted(obs.terms.items())]}


def observable_from_json(entry, dim):
    if isinstance(entry, str):
        return entry
    if isinstance(entry, dict):
        return Polynomial.from_terms(dim, [(c, tuple(e)) for c, e in entry["terms"]])
    return Polynomial.monomial(dim, tuple(entry))


def model_to_json(model: KoopmanModel) -> dict:
    return {
        "time_kind": model.time_kind,
        "dim": model.library.dim,
        "state_inclusive": model.library.state_inclusive,
        "observables": [observable_to_json(o) for o in model.library.observables],
        "K": [[float(v) for v in row] for row in model.K],
        "state_rows": list(model.state_rows),
    }


def model_from_json(data: dict) -> KoopmanModel:
    dim = int(data["dim"])
    lib = ObservableLibrary(
        dim,
        tuple(observable_from_json(o, dim) for o in data["observables"]),
        state_inclusive=bool(data.get("state_inclusive", False)),
    )
    return KoopmanModel(lib, np.asarray(data["K"], dtype=float), data["time_kind"],
                        state_rows=tuple(data.get("state_rows", ())))


def save_model(model: KoopmanModel, path):
    with open(path, "w") as fh:
        json.dump(model_to_json(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> KoopmanModel:
    with open(path) as fh:
        return model_from_json(json.load(fh))
