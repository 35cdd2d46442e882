"""Single-node chaotic dynamics, fixed-step integration, Lyapunov exponents and
the master stability function (MSF).

The node model is the Chen system

    x1' = a (x2 - x1)
    x2' = x1 (c - a - x3) + c x2
    x3' = x1 x2 - b x3

The MSF maps a normalised coupling eta to the largest Lyapunov exponent of the
variational system z' = (Df(s) + eta * Gamma) z along a free-running orbit s(t).
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numba
import numpy as np

from .errors import DivergenceError, DomainError, ThresholdNotFoundError

DEFAULT_BOUND = 1e6

# inner coupling used throughout the examples: x1 of node j drives equation 2 of node i
X1_TO_X2 = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])


@dataclass(frozen=True)
class NodeModel:
    """Parameters of a Chen oscillator (state dimension 3)."""

    a: float = 35.0
    b: float = 8.0 / 3.0
    c: float = 28.0

    @property
    def dim(self) -> int:
        return 3

    def flow(self, x):
        return chen_flow(x, self)

    def jacobian(self, x):
        return chen_jacobian(x, self)


def _as_state(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise DomainError(f"Chen state must have 3 components, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("non-finite state")
    return x


def chen_flow(x, m: NodeModel = NodeModel()):
    """Chen vector field. Accepts a single state or a stack of states (..., 3)."""
    x = _as_state(x)
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    return np.stack(
        [m.a * (x2 - x1), x1 * (m.c - m.a - x3) + m.c * x2, x1 * x2 - m.b * x3],
        axis=-1,
    )


def chen_jacobian(x, m: NodeModel = NodeModel()):
    x = _as_state(x)
    if x.ndim != 1:
        raise DomainError("chen_jacobian expects a single 3-vector")
    x1, x2, x3 = x
    return np.array(
        [
            [-m.a, m.a, 0.0],
            [m.c - m.a - x3, m.c, -x1],
            [x2, x1, -m.b],
        ]
    )


def integrate_ode(
    rhs: Callable[[np.ndarray], np.ndarray],
    x0,
    dt: float,
    n: int,
    bound: float = DEFAULT_BOUND,
) -> np.ndarray:
    """Classical RK4 with a fixed step. Returns the n+1 states including x0.

    Raises DivergenceError when any component exceeds `bound` in magnitude.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    x = np.array(x0, dtype=float)
    traj = np.empty((n + 1,) + x.shape)
    traj[0] = x
    half = 0.5 * dt
    for step in range(n):
        k1 = np.asarray(rhs(x))
        k2 = np.asarray(rhs(x + half * k1))
        k3 = np.asarray(rhs(x + half * k2))
        k4 = np.asarray(rhs(x + dt * k3))
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.abs(x) <= bound):
            raise DivergenceError(step + 1, bound, "integrate_ode")
        traj[step + 1] = x
    return traj


# ----------------------------------------------------------------------------
# Benettin estimate of the largest exponent of z' = (Df(s) + eta Gamma) z
# ----------------------------------------------------------------------------


@numba.njit(cache=True)
def _tangent_rhs(y, out, a, b, c, eta, G):
    s1, s2, s3 = y[0], y[1], y[2]
    z1, z2, z3 = y[3], y[4], y[5]
    out[0] = a * (s2 - s1)
    out[1] = s1 * (c - a - s3) + c * s2
    out[2] = s1 * s2 - b * s3
    out[3] = -a * z1 + a * z2
    out[4] = (c - a - s3) * z1 + c * z2 - s1 * z3
    out[5] = s2 * z1 + s1 * z2 - b * z3
    for p in range(3):
        acc = 0.0
        for q in range(3):
            acc += G[p, q] * y[3 + q]
        out[3 + p] += eta * acc


@numba.njit(cache=True)
def _rk4_tangent_step(y, dt, a, b, c, eta, G, k1, k2, k3, k4, tmp):
    _tangent_rhs(y, k1, a, b, c, eta, G)
    for i in range(6):
        tmp[i] = y[i] + 0.5 * dt * k1[i]
    _tangent_rhs(tmp, k2, a, b, c, eta, G)
    for i in range(6):
        tmp[i] = y[i] + 0.5 * dt * k2[i]
    _tangent_rhs(tmp, k3, a, b, c, eta, G)
    for i in range(6):
        tmp[i] = y[i] + dt * k3[i]
    _tangent_rhs(tmp, k4, a, b, c, eta, G)
    for i in range(6):
        y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@numba.njit(cache=True)
def _normalise_tangent(y):
    nrm = np.sqrt(y[3] * y[3] + y[4] * y[4] + y[5] * y[5])
    for i in range(3, 6):
        y[i] /= nrm
    return nrm


@numba.njit(cache=True)
def _benettin_kernel(y0, a, b, c, eta, G, dt, n_transient, n_steps, renorm, bound):
    y = y0.copy()
    k1 = np.empty(6)
    k2 = np.empty(6)
    k3 = np.empty(6)
    k4 = np.empty(6)
    tmp = np.empty(6)
    for step in range(n_transient):
        _rk4_tangent_step(y, dt, a, b, c, eta, G, k1, k2, k3, k4, tmp)
        for i in range(3):
            if not (abs(y[i]) <= bound):
                return np.nan, step + 1
        if (step + 1) % renorm == 0:
            _normalise_tangent(y)
    _normalise_tangent(y)
    log_sum = 0.0
    for step in range(n_steps):
        _rk4_tangent_step(y, dt, a, b, c, eta, G, k1, k2, k3, k4, tmp)
        for i in range(3):
            if not (abs(y[i]) <= bound):
                return np.nan, n_transient + step + 1
        if (step + 1) % renorm == 0:
            log_sum += np.log(_normalise_tangent(y))
    if n_steps % renorm:
        log_sum += np.log(_normalise_tangent(y))
    return log_sum / (n_steps * dt), -1


def max_lyapunov(
    m: NodeModel,
    eta: float,
    gamma=X1_TO_X2,
    horizon: float = 2000.0,
    dt: float = 1e-3,
    transient: float = 100.0,
    renorm_every: int = 10,
    seed: int = 0,
    bound: float = DEFAULT_BOUND,
) -> float:
    """Largest Lyapunov exponent of z' = (Df(s) + eta*Gamma) z (Benettin method).

    The reference orbit starts at [1, 1, 1] plus a small seeded perturbation;
    the tangent vector starts as a seeded random unit vector.
    """
    if dt <= 0 or horizon <= 0:
        raise ValueError("dt and horizon must be positive")
    rng = np.random.default_rng(seed)
    y0 = np.empty(6)
    y0[:3] = 1.0 + 1e-3 * rng.standard_normal(3)
    v = rng.standard_normal(3)
    y0[3:] = v / np.linalg.norm(v)
    G = np.ascontiguousarray(gamma, dtype=float)
    n_transient = int(round(transient / dt))
    n_steps = int(round(horizon / dt))
    mu, bad = _benettin_kernel(
        y0, m.a, m.b, m.c, float(eta), G, dt, n_transient, n_steps, int(renorm_every), bound
    )
    if bad >= 0:
        raise DivergenceError(bad, bound, "MSF reference trajectory")
    return float(mu)


@dataclass(frozen=True)
class MsfCurve:
    eta: np.ndarray
    mu: np.ndarray
    threshold: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if np.any(np.diff(self.eta) <= 0):
            raise ValueError("MSF samples must be strictly increasing in eta")

    def stable(self):
        return self.mu < 0


def find_threshold(eta, mu) -> float:
    """First grid value at which mu stops being negative.

    Every sample strictly below the returned value has mu < 0.
    """
    eta = np.asarray(eta, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if len(eta) == 0:
        raise ThresholdNotFoundError("empty grid")
    if not mu[0] < 0:
        raise ThresholdNotFoundError("no stable region at the low end of the grid")
    unstable = np.nonzero(~(mu < 0))[0]
    if len(unstable) == 0:
        raise ThresholdNotFoundError("grid lies entirely in the stable region")
    return float(eta[unstable[0]])


def _msf_point(args):
    m, eta, gamma, kw = args
    return max_lyapunov(m, eta, gamma, **kw)


def msf_sweep(
    m: NodeModel,
    gamma=X1_TO_X2,
    eta_grid: Sequence[float] = tuple(np.arange(-20.0, 0.25, 0.5)),
    jobs: int = 1,
    **kw,
) -> MsfCurve:
    """Evaluate the MSF on a sorted grid and locate the stability threshold.

    Every grid point uses the same seed (common reference orbit), so results do
    not depend on `jobs`.
    """
    grid = np.asarray(eta_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("eta grid is empty")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("eta grid must be strictly increasing")
    tasks = [(m, float(e), np.asarray(gamma, dtype=float), kw) for e in grid]
    jobs = jobs or os.cpu_count() or 1
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            mu = np.array(list(pool.map(_msf_point, tasks)))
    else:
        mu = np.array([_msf_point(t) for t in tasks])
    return MsfCurve(grid, mu, find_threshold(grid, mu), meta=dict(kw))
