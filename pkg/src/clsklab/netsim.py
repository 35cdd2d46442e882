"""Integration of coupled Chen networks with optional pinning control and
additive link noise.

Network nodes and control nodes are stacked into one (N + L) x 3 state. All
coupling, pinning and control interaction is expressed through one stacked
matrix ``K`` so the drift is ``f(x_p) + sum_q K[p, q] * Gamma @ x_q``.

Noise is additive: Wiener process ``w`` adds ``B[p, w] * g * dW_w`` to node p,
where ``g = Gamma @ 1`` selects the driven components.
"""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numba
import numpy as np

from .dynsys import DEFAULT_BOUND, NodeModel, chen_flow
from .errors import DivergenceError, SeedReuseError
from .topology import ClusterPattern, ControlNetwork, CouplingTopology

METHODS = ("sra-rk4", "sra1", "euler")
_M_RK4, _M_SRA1, _M_EULER = 0, 1, 2


@dataclass
class NetworkState:
    x: np.ndarray  # N x d
    xc: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))  # L x d
    t: float = 0.0

    def __post_init__(self):
        self.x = np.array(self.x, dtype=float)
        self.xc = np.array(self.xc, dtype=float).reshape(-1, self.x.shape[1])
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.xc))):
            raise ValueError("non-finite state")

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def L(self):
        return self.xc.shape[0]

    def stacked(self):
        return np.vstack([self.x, self.xc])

    @classmethod
    def from_stacked(cls, y, n, t=0.0):
        return cls(y[:n], y[n:], t)

    def copy(self):
        return NetworkState(self.x.copy(), self.xc.copy(), self.t)


def initial_state(n, L=0, seed=0, spread=5.0) -> NetworkState:
    """Uniform random start in [-spread, spread]^3 for every node."""
    rng = np.random.default_rng(seed)
    y = rng.uniform(-spread, spread, (n + L, 3))
    return NetworkState.from_stacked(y, n)


def coupling_matrix(topo: CouplingTopology, ctrl: ControlNetwork | None = None) -> np.ndarray:
    """Stacked coupling ``K`` acting through Gamma on (network, control) states."""
    n = topo.n
    L = ctrl.L if ctrl is not None else 0
    K = np.zeros((n + L, n + L))
    K[:n, :n] = topo.epsilon * topo.xi
    if ctrl is not None:
        gain = ctrl.alpha * topo.epsilon
        K[:n, n:] = gain * ctrl.pin
        K[n:, n:] = ctrl.A
        if ctrl.pin_mode == "diffusive":
            K[np.arange(n), np.arange(n)] -= gain * ctrl.pin.sum(axis=1)
    return K


def network_rhs(s: NetworkState, topo: CouplingTopology, ctrl: ControlNetwork | None = None,
                model: NodeModel = NodeModel()) -> NetworkState:
    """Time derivative of the controlled network, returned as a NetworkState."""
    if s.x.shape != (topo.n, topo.d):
        raise ValueError(f"state shape {s.x.shape} does not match topology ({topo.n}, {topo.d})")
    if (ctrl.L if ctrl is not None else 0) != s.L:
        raise ValueError("control state does not match the control network")
    y = s.stacked()
    K = coupling_matrix(topo, ctrl)
    dy = chen_flow(y, model) + (K @ y) @ topo.gamma.T
    return NetworkState.from_stacked(dy, topo.n, s.t)


# ----------------------------------------------------------------- kernel ---


@numba.njit(cache=True)
def _drift(y, rows, cols, vals, gmat, gcols, a, b, c, out, ky):
    n = y.shape[0]
    for i in range(n):
        x1 = y[i, 0]
        x2 = y[i, 1]
        x3 = y[i, 2]
        out[i, 0] = a * (x2 - x1)
        out[i, 1] = x1 * (c - a - x3) + c * x2
        out[i, 2] = x1 * x2 - b * x3
    for i in range(n):
        for s in gcols:
            ky[i, s] = 0.0
    # plain product K y: rounding leaves ~1e-16 differences between cluster
    # members, so exactly coincident states never become absorbing
    for e in range(vals.shape[0]):
        i = rows[e]
        j = cols[e]
        v = vals[e]
        for s in gcols:
            ky[i, s] += v * y[j, s]
    for i in range(n):
        for r in range(3):
            acc = 0.0
            for s in gcols:
                acc += gmat[r, s] * ky[i, s]
            out[i, r] += acc


@numba.njit(cache=True)
def _advance(y, rows, cols, vals, gmat, gcols, gvec, a, b, c, dt, nsteps, stride,
             bmat, dW, I10, method, bound, out, out_pos):
    """Advance ``y`` in place for ``nsteps`` steps, storing every ``stride``-th state.

    Returns the next free row of ``out`` and the 1-based step index of a
    divergence (or -1).
    """
    n = y.shape[0]
    nw = bmat.shape[1]
    k1 = np.empty_like(y)
    k2 = np.empty_like(y)
    k3 = np.empty_like(y)
    k4 = np.empty_like(y)
    tmp = np.empty_like(y)
    ky = np.zeros_like(y)
    eta = np.zeros(n)
    jump = np.zeros(n)
    noisy = nw > 0
    for step in range(nsteps):
        if noisy:
            for i in range(n):
                e = 0.0
                w_ = 0.0
                for w in range(nw):
                    e += bmat[i, w] * I10[step, w]
                    w_ += bmat[i, w] * dW[step, w]
                eta[i] = e / dt
                jump[i] = w_
        if method == 0:
            _drift(y, rows, cols, vals, gmat, gcols, a, b, c, k1, ky)
            for i in range(n):
                for r in range(3):
                    tmp[i, r] = y[i, r] + 0.5 * dt * k1[i, r] + 1.5 * eta[i] * gvec[r]
            _drift(tmp, rows, cols, vals, gmat, gcols, a, b, c, k2, ky)
            for i in range(n):
                for r in range(3):
                    tmp[i, r] = y[i, r] + 0.5 * dt * k2[i, r] + 1.5 * eta[i] * gvec[r]
            _drift(tmp, rows, cols, vals, gmat, gcols, a, b, c, k3, ky)
            for i in range(n):
                for r in range(3):
                    tmp[i, r] = y[i, r] + dt * k3[i, r]
            _drift(tmp, rows, cols, vals, gmat, gcols, a, b, c, k4, ky)
            for i in range(n):
                for r in range(3):
                    y[i, r] += dt / 6.0 * (k1[i, r] + 2.0 * k2[i, r] + 2.0 * k3[i, r] + k4[i, r])
                    y[i, r] += jump[i] * gvec[r]
        elif method == 1:
            _drift(y, rows, cols, vals, gmat, gcols, a, b, c, k1, ky)
            for i in range(n):
                for r in range(3):
                    tmp[i, r] = y[i, r] + 0.75 * dt * k1[i, r] + 1.5 * eta[i] * gvec[r]
            _drift(tmp, rows, cols, vals, gmat, gcols, a, b, c, k2, ky)
            for i in range(n):
                for r in range(3):
                    y[i, r] += dt * (k1[i, r] / 3.0 + 2.0 * k2[i, r] / 3.0) + jump[i] * gvec[r]
        else:
            _drift(y, rows, cols, vals, gmat, gcols, a, b, c, k1, ky)
            for i in range(n):
                for r in range(3):
                    y[i, r] += dt * k1[i, r] + jump[i] * gvec[r]
        for i in range(n):
            for r in range(3):
                if not (abs(y[i, r]) <= bound):
                    return out_pos, step + 1
        if (step + 1) % stride == 0:
            for i in range(n):
                for r in range(3):
                    out[out_pos, i, r] = y[i, r]
            out_pos += 1
    return out_pos, -1


def _sparse(K):
    K = np.array(K, dtype=float)
    rows, cols = np.nonzero(K)
    return rows.astype(np.int64), cols.astype(np.int64), K[rows, cols]


def _gamma_parts(gamma):
    gmat = np.ascontiguousarray(gamma, dtype=float)
    gcols = np.nonzero(np.any(gmat != 0, axis=0))[0].astype(np.int64)
    gvec = gmat @ np.ones(gmat.shape[1])
    return gmat, gcols, gvec


_EMPTY = np.zeros((0, 0))


class _Stepper:
    """Shared driver around the compiled kernel for one run."""

    def __init__(self, model, gamma, dt, method, bound, bmat=None):
        if dt <= 0:
            raise ValueError("dt must be positive")
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
        self.model = model
        self.gmat, self.gcols, self.gvec = _gamma_parts(gamma)
        self.dt = float(dt)
        self.method = {"sra-rk4": _M_RK4, "sra1": _M_SRA1, "euler": _M_EULER}[method]
        self.bound = float(bound)
        self.bmat = np.zeros((0, 0)) if bmat is None else np.ascontiguousarray(bmat, dtype=float)
        self.steps_done = 0

    def run(self, y, K, nsteps, stride, out, out_pos, dW=_EMPTY, I10=_EMPTY):
        rows, cols, vals = _sparse(K)
        bmat = self.bmat if dW.size else np.zeros((y.shape[0], 0))
        m = self.model
        pos, bad = _advance(
            y, rows, cols, vals, self.gmat, self.gcols, self.gvec, m.a, m.b, m.c, self.dt,
            int(nsteps), int(stride), bmat, dW, I10, self.method, self.bound, out, out_pos,
        )
        if bad >= 0:
            raise DivergenceError(self.steps_done + bad, self.bound, "network integration")
        self.steps_done += nsteps
        return pos


# -------------------------------------------------------- deterministic run ---


@dataclass
class Trajectory:
    """Stored samples of the stacked network state.

    ``x[k]`` is the (N + L) x d state at time ``t[k]``; the first ``n`` rows of each
    sample are network nodes.
    """

    t: np.ndarray
    x: np.ndarray
    n: int

    @property
    def network(self):
        return self.x[:, : self.n]

    @property
    def control(self):
        return self.x[:, self.n :]

    def final_state(self) -> NetworkState:
        return NetworkState.from_stacked(self.x[-1], self.n, float(self.t[-1]))

    def window(self, t0, t1):
        sel = (self.t >= t0 - 1e-9) & (self.t <= t1 + 1e-9)
        return Trajectory(self.t[sel], self.x[sel], self.n)


def _schedule_arrays(schedule, dt, stride):
    """Normalise a schedule into (matrices, steps per segment)."""
    mats, steps = [], []
    for K, n in schedule:
        n = int(n)
        if n < 0:
            raise ValueError("segment length must be nonnegative")
        if n % stride:
            raise ValueError("segment lengths must be multiples of the storage stride")
        mats.append(np.ascontiguousarray(K, dtype=float))
        steps.append(n)
    return mats, steps


def integrate_network(s0: NetworkState, topo: CouplingTopology, ctrl: ControlNetwork | None = None,
                      dt: float = 1e-3, n: int = 1000, stride: int = 1,
                      model: NodeModel = NodeModel(), bound: float = DEFAULT_BOUND,
                      schedule: Sequence[tuple] | None = None) -> Trajectory:
    """Deterministic RK4 integration of the (controlled) network.

    ``schedule`` optionally overrides the coupling with piecewise-constant
    segments ``[(K, steps), ...]`` of stacked coupling matrices; ``n`` is then
    ignored. The state is continuous across segments.
    """
    if n < 1 and schedule is None:
        raise ValueError("n must be >= 1")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if schedule is None:
        schedule = [(coupling_matrix(topo, ctrl), n)]
    return _integrate(s0, topo.gamma, schedule, dt, stride, model, bound, "sra-rk4", None)


def _integrate(s0, gamma, schedule, dt, stride, model, bound, method, noise_stream):
    mats, steps = _schedule_arrays(schedule, dt, stride)
    y = np.ascontiguousarray(s0.stacked(), dtype=float)
    if y.shape[0] != mats[0].shape[0]:
        raise ValueError(f"state has {y.shape[0]} nodes, coupling has {mats[0].shape[0]}")
    total = sum(steps)
    out = np.empty((total // stride + 1,) + y.shape)
    out[0] = y
    bmat = noise_stream.bmat if noise_stream is not None else None
    st = _Stepper(model, gamma, dt, method, bound, bmat)
    pos = 1
    for K, nseg in zip(mats, steps):
        if nseg == 0:
            continue
        if noise_stream is None:
            pos = st.run(y, K, nseg, stride, out, pos)
        else:
            done = 0
            while done < nseg:
                chunk = min(nseg - done, noise_stream.chunk // stride * stride or stride)
                dW, I10 = noise_stream.draw(chunk)
                pos = st.run(y, K, chunk, stride, out, pos, dW, I10)
                done += chunk
    t = s0.t + dt * stride * np.arange(out.shape[0])
    return Trajectory(t, out, s0.n)


# -------------------------------------------------------------------- noise ---


@dataclass(frozen=True)
class NoiseConfig:
    """Additive noise on selected links.

    ``links`` are (i, j) node pairs over the stacked node index: each receives an
    independent Wiener process entering node i with + and node j with - sign.
    Control-node endpoints receive no noise. ``pin=True`` adds one Wiener
    process per control node, shared by all nodes it pins.

    ``gain="unit"`` uses amplitude sigma on every source; ``gain="coupling"``
    scales link noise by epsilon and pin noise by alpha*epsilon.

    ``control`` adds an independent Wiener process of amplitude
    ``control * sigma`` to every control node (0 keeps control nodes noise-free).
    """

    sigma: float = 0.0
    links: tuple = ()
    pin: bool = False
    gain: str = "unit"
    seed: int = 0
    control: float = 0.0

    def __post_init__(self):
        if not (self.sigma >= 0 and np.isfinite(self.sigma)):
            raise ValueError("sigma must be finite and >= 0")
        if not self.control >= 0:
            raise ValueError("control noise level must be >= 0")
        if self.gain not in ("unit", "coupling"):
            raise ValueError(f"unknown gain {self.gain!r}")
        object.__setattr__(self, "links", tuple(tuple(int(v) for v in l) for l in self.links))

    def with_sigma(self, sigma):
        return replace(self, sigma=sigma)

    def with_seed(self, seed):
        return replace(self, seed=seed)


def diffusion_matrix(noise: NoiseConfig, topo: CouplingTopology, ctrl: ControlNetwork | None = None):
    """(N + L) x W matrix of per-node noise amplitudes, one column per Wiener process."""
    n = topo.n
    L = ctrl.L if ctrl is not None else 0
    cols = []
    link_gain = noise.sigma * (topo.epsilon if noise.gain == "coupling" else 1.0)
    for i, j in noise.links:
        if not (0 <= i < n + L and 0 <= j < n + L) or i == j:
            raise ValueError(f"invalid noisy link ({i}, {j})")
        if ctrl is None and abs(topo.xi[i, j]) == 0:
            raise ValueError(f"noisy link ({i}, {j}) is not a link of the topology")
        v = np.zeros(n + L)
        if i < n:
            v[i] = link_gain
        if j < n:
            v[j] = -link_gain
        cols.append(v)
    if noise.pin:
        if ctrl is None:
            raise ValueError("pin noise requires a control network")
        pin_gain = noise.sigma * (ctrl.alpha * topo.epsilon if noise.gain == "coupling" else 1.0)
        for k in range(ctrl.L):
            v = np.zeros(n + L)
            v[:n] = pin_gain * ctrl.pin[:, k]
            cols.append(v)
    if noise.control > 0 and L:
        for k in range(L):
            v = np.zeros(n + L)
            v[n + k] = noise.control * noise.sigma
            cols.append(v)
    if not cols:
        return np.zeros((n + L, 0))
    return np.column_stack(cols)


def wiener_increments(rng: np.random.Generator, n: int, w: int, dt: float):
    """Increments dW and the iterated integral I10 = int (W(s) - W(t_n)) ds per step."""
    sq = np.sqrt(dt)
    dW = rng.standard_normal((n, w)) * sq
    dZ = rng.standard_normal((n, w)) * sq
    I10 = 0.5 * dt * (dW + dZ / np.sqrt(3.0))
    return dW, I10


def coarsen_increments(dW, I10, dt, factor):
    """Combine ``factor`` consecutive fine steps into one coarse step (same path)."""
    n = dW.shape[0] // factor
    dW = dW[: n * factor].reshape((n, factor) + dW.shape[1:])
    I10 = I10[: n * factor].reshape((n, factor) + I10.shape[1:])
    cum = np.cumsum(dW, axis=1) - dW  # W at the start of each fine step, relative to coarse start
    return dW.sum(axis=1), I10.sum(axis=1) + dt * cum.sum(axis=1)


class SeedRegistry:
    """Tracks the noise seeds used in one run; reusing one is an error."""

    def __init__(self):
        self._seen = set()

    def claim(self, seed):
        key = tuple(np.atleast_1d(seed).tolist()) if not isinstance(seed, int) else (seed,)
        if key in self._seen:
            raise SeedReuseError(f"noise seed {seed} already used in this run")
        self._seen.add(key)


class WienerStream:
    """Chunked source of Wiener increments for a fixed diffusion matrix."""

    def __init__(self, bmat, dt, seed, registry: SeedRegistry | None = None, chunk=20000):
        if registry is not None:
            registry.claim(seed)
        self.bmat = np.ascontiguousarray(bmat, dtype=float)
        self.dt = float(dt)
        self.rng = np.random.default_rng(seed)
        self.chunk = int(chunk)

    @property
    def width(self):
        return self.bmat.shape[1]

    def draw(self, n):
        return wiener_increments(self.rng, n, self.width, self.dt)


def integrate_network_sde(s0: NetworkState, topo: CouplingTopology, ctrl: ControlNetwork | None,
                          noise: NoiseConfig, dt: float = 1e-3, n: int = 1000, stride: int = 1,
                          method: str = "sra-rk4", model: NodeModel = NodeModel(),
                          bound: float = DEFAULT_BOUND, schedule: Sequence[tuple] | None = None,
                          stream: WienerStream | None = None,
                          registry: SeedRegistry | None = None) -> Trajectory:
    """Stochastic Runge-Kutta integration of the noisy network.

    ``method`` is "sra-rk4" (RK4 stages with additive-noise corrections, strong
    order 1.5; exactly RK4 when sigma = 0), "sra1" (two-stage SRA1) or "euler"
    (Euler-Maruyama). Pass ``stream`` to continue an existing noise path.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if schedule is None:
        if n < 1:
            raise ValueError("n must be >= 1")
        schedule = [(coupling_matrix(topo, ctrl), n)]
    if stream is None:
        stream = WienerStream(diffusion_matrix(noise, topo, ctrl), dt, noise.seed, registry)
    if stream.width == 0 or noise.sigma == 0:
        stream = None
    return _integrate(s0, topo.gamma, schedule, dt, stride, model, bound, method, stream)


# ------------------------------------------------------- generic additive SDE ---


def integrate_additive_sde(drift: Callable, bvec, x0, dt: float, dW, I10, method: str = "sra-rk4"):
    """Integrate dx = drift(x) dt + b dW with given increments.

    ``x0`` may carry leading batch axes; ``drift`` must be vectorised over them.
    ``bvec`` maps the Wiener increments (last axis) to the state (b @ dW). Uses
    the same tableaux as the network kernel. Returns the final state.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    b = np.atleast_2d(np.asarray(bvec, dtype=float))
    x = np.array(x0, dtype=float)
    for k in range(dW.shape[0]):
        jump = dW[k] @ b.T
        eta = (I10[k] @ b.T) / dt
        if method == "sra-rk4":
            k1 = drift(x)
            k2 = drift(x + 0.5 * dt * k1 + 1.5 * eta)
            k3 = drift(x + 0.5 * dt * k2 + 1.5 * eta)
            k4 = drift(x + dt * k3)
            x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4) + jump
        elif method == "sra1":
            k1 = drift(x)
            k2 = drift(x + 0.75 * dt * k1 + 1.5 * eta)
            x = x + dt * (k1 / 3.0 + 2.0 * k2 / 3.0) + jump
        else:
            x = x + dt * drift(x) + jump
    return x


# ----------------------------------------------------------- sync analysis ---


def sync_error_series(traj, i: int, j: int) -> np.ndarray:
    """Euclidean norm of x_i - x_j at every stored sample."""
    x = traj.x if isinstance(traj, Trajectory) else np.asarray(traj)
    if i == j:
        raise ValueError("i and j must differ")
    return np.linalg.norm(x[:, i] - x[:, j], axis=-1)


def mean_error_matrix(x: np.ndarray) -> np.ndarray:
    """Time-averaged pairwise error norms for samples x[k, node, component]."""
    n = x.shape[1]
    E = np.zeros((n, n))
    for i, j in itertools.combinations(range(n), 2):
        E[i, j] = E[j, i] = np.linalg.norm(x[:, i] - x[:, j], axis=-1).mean()
    return E


SYNC_TOL = 1e-3
DESYNC_TOL = 0.1


def classify(E: np.ndarray, patterns: Sequence[ClusterPattern] = (), nodes=None,
             sync_tol=SYNC_TOL, desync_tol=DESYNC_TOL) -> str:
    """Label a mean error matrix: "full", "pattern:<k>", "desync" or "partial".

    ``nodes`` restricts the check (e.g. to network nodes); patterns must cover them.
    """
    idx = list(range(E.shape[0])) if nodes is None else list(nodes)
    pairs = list(itertools.combinations(idx, 2))
    vals = np.array([E[i, j] for i, j in pairs])
    if np.all(vals < sync_tol):
        return "full"
    for k, p in enumerate(patterns):
        intra = [E[i, j] for i, j in p.intra_pairs(idx)]
        inter = [E[i, j] for i, j in p.inter_pairs(idx)]
        if intra and all(e < sync_tol for e in intra) and all(e > desync_tol for e in inter):
            return f"pattern:{k}"
    if np.all(vals > sync_tol):
        return "desync"
    return "partial"


@dataclass
class ScanPoint:
    value: float
    errors: np.ndarray | None
    regime: str
    error: str = ""


@dataclass
class ScanResult:
    parameter: str
    points: list

    @property
    def grid(self):
        return np.array([p.value for p in self.points])

    @property
    def regimes(self):
        return [p.regime for p in self.points]

    def first(self, predicate):
        for p in self.points:
            if predicate(p.regime):
                return p.value
        return None

    def onset_of_sync(self):
        """Smallest grid value showing any synchronized regime (cluster or full)."""
        return self.first(lambda r: r == "full" or r.startswith("pattern"))

    def onset_of_full_sync(self):
        """Smallest grid value from which every later point is fully synchronized."""
        value = None
        for p in reversed(self.points):
            if p.regime != "full":
                break
            value = p.value
        return value


def spatiotemporal_scan(family: Callable[[float], tuple], grid: Iterable[float], s0: NetworkState,
                        transient: float = 50.0, window: float = 50.0, dt: float = 1e-3,
                        stride: int = 10, patterns: Sequence[ClusterPattern] = (), nodes=None,
                        parameter: str = "epsilon", model: NodeModel = NodeModel(),
                        bound: float = DEFAULT_BOUND) -> ScanResult:
    """Steady-state pairwise errors over a parameter grid.

    ``family(value)`` returns ``(topology, control or None)``. Each point starts
    from ``s0``, discards ``transient`` time units and averages over ``window``.
    A diverging point is recorded and the scan continues.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("scan grid is empty")
    n_tr = int(round(transient / dt))
    n_win = int(round(window / dt))
    n_tr -= n_tr % stride
    n_win -= n_win % stride
    points = []
    for v in grid:
        topo, ctrl = family(v)
        try:
            tr = integrate_network(s0, topo, ctrl, dt=dt, n=n_tr + n_win, stride=stride,
                                   model=model, bound=bound)
        except DivergenceError as exc:
            points.append(ScanPoint(float(v), None, "diverged", str(exc)))
            continue
        E = mean_error_matrix(tr.x[n_tr // stride :])
        points.append(ScanPoint(float(v), E, classify(E, patterns, nodes)))
    return ScanResult(parameter, points)


# ------------------------------------------------------------------ export ---


def export_trajectory_csv(traj: Trajectory, path, nodes=None):
    """Long-format CSV: t, node (1-based), component (1-based), value."""
    nodes = range(traj.x.shape[1]) if nodes is None else nodes
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "node", "component", "value"])
        for k, t in enumerate(traj.t):
            for i in nodes:
                for r in range(traj.x.shape[2]):
                    w.writerow([repr(float(t)), i + 1, r + 1, repr(float(traj.x[k, i, r]))])


def export_trajectory_npz(traj: Trajectory, path):
    np.savez(path, t=traj.t, x=traj.x, n=np.int64(traj.n))


def load_trajectory_npz(path) -> Trajectory:
    with np.load(path) as z:
        return Trajectory(z["t"], z["x"], int(z["n"]))
