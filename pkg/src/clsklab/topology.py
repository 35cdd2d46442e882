"""Coupling matrices, permutation symmetries, cluster patterns and the
eigenvalue-based design conditions for cluster synchronization.

Node indices are 0-based throughout the API. Config files and reports use the
1-based labels of the published examples; convert with ``ClusterPattern.from_labels``
and ``ClusterPattern.labels``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import NoRangeError, SymmetryError

STRUCT_TOL = 1e-9
SPECTRAL_TOL = 1e-8


# ---------------------------------------------------------------- topology ---


@dataclass(frozen=True)
class CouplingTopology:
    """Outer coupling matrix ``xi`` (N x N), inner coupling ``gamma`` (d x d)
    and coupling strength ``epsilon``."""

    xi: np.ndarray
    gamma: np.ndarray
    epsilon: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "xi", np.array(self.xi, dtype=float))
        object.__setattr__(self, "gamma", np.array(self.gamma, dtype=float))
        if self.xi.ndim != 2 or self.xi.shape[0] != self.xi.shape[1]:
            raise ValueError(f"xi must be square, got {self.xi.shape}")
        if self.gamma.ndim != 2 or self.gamma.shape[0] != self.gamma.shape[1]:
            raise ValueError(f"gamma must be square, got {self.gamma.shape}")

    @property
    def n(self) -> int:
        return self.xi.shape[0]

    @property
    def d(self) -> int:
        return self.gamma.shape[0]

    def links(self):
        """Undirected links (i, j), i < j, with nonzero coupling."""
        return links_of(self.xi)

    def with_epsilon(self, epsilon):
        return CouplingTopology(self.xi, self.gamma, epsilon)


def links_of(matrix, tol=STRUCT_TOL):
    m = np.asarray(matrix)
    n = m.shape[0]
    return [
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if abs(m[i, j]) > tol or abs(m[j, i]) > tol
    ]


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class Report:
    """Named pass/fail checks. Truthy iff every check passed."""

    checks: list = field(default_factory=list)

    def add(self, name, passed, detail=""):
        self.checks.append(Check(name, bool(passed), detail))
        return bool(passed)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __bool__(self):
        return self.passed

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def lines(self):
        return [f"{'PASS' if c.passed else 'FAIL'}  {c.name}  {c.detail}".rstrip() for c in self.checks]

    def __str__(self):
        return "\n".join(self.lines())


def validate_topology(t: CouplingTopology) -> Report:
    """Check the diffusive-coupling invariants and report offending indices."""
    rep = Report()
    xi = t.xi
    rows = np.nonzero(np.abs(xi.sum(axis=1)) > STRUCT_TOL)[0]
    rep.add("zero_row_sums", rows.size == 0, f"rows {rows.tolist()}" if rows.size else "")
    asym = np.argwhere(np.abs(xi - xi.T) > STRUCT_TOL)
    asym = [tuple(p) for p in asym.tolist() if p[0] < p[1]]
    rep.add("symmetric", not asym, f"entries {asym}" if asym else "")
    off = xi - np.diag(np.diag(xi))
    neg = [tuple(p) for p in np.argwhere(off < -STRUCT_TOL).tolist()]
    rep.add("nonnegative_off_diagonal", not neg, f"entries {neg}" if neg else "")
    g_ok = np.all((t.gamma == 0) | (t.gamma == 1))
    rep.add("gamma_binary", g_ok)
    if not asym:
        lam = np.sort(np.linalg.eigvalsh(xi))[::-1]
        ok = abs(lam[0]) <= STRUCT_TOL and (t.n == 1 or lam[1] < -STRUCT_TOL)
        rep.add("spectrum_ordering", ok, f"lambda_1={lam[0]:.3g}, lambda_2={lam[1] if t.n > 1 else float('nan'):.3g}")
    else:
        rep.add("spectrum_ordering", False, "matrix not symmetric")
    return rep


# ---------------------------------------------------------------- patterns ---


@dataclass(frozen=True)
class ClusterPattern:
    """Partition of nodes 0..N-1 into disjoint nonempty clusters."""

    clusters: tuple

    def __post_init__(self):
        cl = tuple(tuple(sorted(int(i) for i in c)) for c in self.clusters)
        object.__setattr__(self, "clusters", cl)
        if any(len(c) == 0 for c in cl):
            raise ValueError("empty cluster")
        flat = [i for c in cl for i in c]
        if len(flat) != len(set(flat)):
            raise ValueError("clusters overlap")
        if sorted(flat) != list(range(len(flat))):
            raise ValueError(f"clusters must cover 0..{len(flat) - 1}")

    @classmethod
    def from_labels(cls, groups, base=1):
        return cls(tuple(tuple(i - base for i in g) for g in groups))

    def labels(self, base=1):
        return [[i + base for i in c] for c in self.clusters]

    @property
    def n(self) -> int:
        return sum(len(c) for c in self.clusters)

    def __len__(self):
        return len(self.clusters)

    def cluster_of(self, node) -> int:
        for k, c in enumerate(self.clusters):
            if node in c:
                return k
        raise KeyError(node)

    def same_cluster(self, i, j) -> bool:
        return self.cluster_of(i) == self.cluster_of(j)

    def canonical(self):
        return frozenset(frozenset(c) for c in self.clusters)

    def intra_pairs(self, nodes=None):
        keep = set(range(self.n)) if nodes is None else set(nodes)
        return [
            (i, j)
            for c in self.clusters
            for i, j in itertools.combinations(c, 2)
            if i in keep and j in keep
        ]

    def inter_pairs(self, nodes=None):
        keep = sorted(range(self.n) if nodes is None else nodes)
        return [(i, j) for i, j in itertools.combinations(keep, 2) if not self.same_cluster(i, j)]

    def indicator(self):
        """N x L membership matrix (p_ik = 1 iff node i lies in cluster k)."""
        P = np.zeros((self.n, len(self.clusters)))
        for k, c in enumerate(self.clusters):
            P[list(c), k] = 1.0
        return P


@dataclass(frozen=True)
class PermutationSymmetry:
    """0/1 permutation matrix ``delta``; symmetries of interest are involutions."""

    delta: np.ndarray

    def __post_init__(self):
        d = np.array(self.delta, dtype=float)
        object.__setattr__(self, "delta", d)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise SymmetryError("permutation matrix must be square")
        if not np.all((d == 0) | (d == 1)):
            raise SymmetryError("permutation matrix must be 0/1")
        if not (np.all(d.sum(0) == 1) and np.all(d.sum(1) == 1)):
            raise SymmetryError("permutation matrix needs exactly one 1 per row and column")

    @classmethod
    def from_pairs(cls, pairs, n, base=0):
        perm = list(range(n))
        for i, j in pairs:
            i, j = i - base, j - base
            perm[i], perm[j] = j, i
        return cls.from_permutation(perm)

    @classmethod
    def from_permutation(cls, perm):
        n = len(perm)
        d = np.zeros((n, n))
        d[np.arange(n), perm] = 1.0
        return cls(d)

    @property
    def n(self):
        return self.delta.shape[0]

    def permutation(self):
        return np.argmax(self.delta, axis=1)

    def is_involution(self) -> bool:
        return np.array_equal(self.delta @ self.delta, np.eye(self.n))


def _delta_matrix(delta):
    return delta.delta if isinstance(delta, PermutationSymmetry) else np.asarray(delta, dtype=float)


def is_symmetry(xi, delta, tol=1e-12) -> bool:
    """True iff swapping nodes by ``delta`` leaves the coupling unchanged."""
    xi = np.asarray(xi, dtype=float)
    d = _delta_matrix(delta)
    if xi.shape != d.shape:
        raise ValueError(f"dimension mismatch: xi {xi.shape} vs delta {d.shape}")
    return bool(np.all(np.abs(d @ xi @ d.T - xi) <= tol))


def pattern_from_symmetry(delta) -> ClusterPattern:
    """Clusters are the orbits of an involutory permutation (pairs and fixed points)."""
    sym = delta if isinstance(delta, PermutationSymmetry) else PermutationSymmetry(delta)
    if not sym.is_involution():
        raise SymmetryError("permutation is not an involution")
    perm = sym.permutation()
    seen, clusters = set(), []
    for i in range(sym.n):
        if i in seen:
            continue
        orbit = {i, int(perm[i])}
        seen |= orbit
        clusters.append(tuple(sorted(orbit)))
    return ClusterPattern(tuple(clusters))


def symmetry_of_pattern(pattern: ClusterPattern) -> PermutationSymmetry:
    """Involution swapping the two members of every 2-node cluster."""
    if any(len(c) > 2 for c in pattern.clusters):
        raise SymmetryError("only clusters of size <= 2 correspond to a single involution")
    pairs = [c for c in pattern.clusters if len(c) == 2]
    return PermutationSymmetry.from_pairs(pairs, pattern.n)


# ------------------------------------------------------- spectral analysis ---


@dataclass(frozen=True)
class SpectralSplit:
    psi: np.ndarray  # columns: transverse basis vectors first, then synchronous ones
    theta: np.ndarray  # psi^-1 xi psi
    omega: np.ndarray  # transverse block
    phi: np.ndarray  # synchronous block
    omega_blocks: tuple
    transverse_eigs: np.ndarray  # descending
    sync_eigs: np.ndarray  # descending, first is 0
    n_transverse: int

    @property
    def lambda_min(self) -> float:
        return float(np.min(np.abs(self.transverse_eigs)))

    @property
    def lambda_s2(self) -> float:
        if len(self.sync_eigs) < 2:
            return float("nan")
        return float(self.sync_eigs[1])

    def reconstruct(self):
        return self.psi @ self.theta @ self.psi.T

    def all_eigs(self):
        return np.sort(np.concatenate([self.transverse_eigs, self.sync_eigs]))


def _split_blocks(omega, tol=STRUCT_TOL):
    """Decompose a symmetric matrix into independent diagonal blocks."""
    n = omega.shape[0]
    seen, blocks = set(), []
    for start in range(n):
        if start in seen:
            continue
        comp, stack = [], [start]
        seen.add(start)
        while stack:
            i = stack.pop()
            comp.append(i)
            for j in np.nonzero(np.abs(omega[i]) > tol)[0]:
                if j not in seen:
                    seen.add(int(j))
                    stack.append(int(j))
        comp.sort()
        blocks.append(omega[np.ix_(comp, comp)])
    return tuple(blocks)


def block_diagonalize(xi, delta, pattern: ClusterPattern | None = None) -> SpectralSplit:
    """Separate transverse and synchronous dynamics using the eigenvectors of ``delta``.

    For every swapped pair (i, j) the transverse vector is (e_i - e_j)/sqrt(2) and
    the synchronous vector (e_i + e_j)/sqrt(2); fixed points contribute e_i to the
    synchronous subspace. The basis is orthonormal, so psi^-1 = psi^T.
    """
    xi = np.asarray(xi, dtype=float)
    sym = delta if isinstance(delta, PermutationSymmetry) else PermutationSymmetry(delta)
    if not sym.is_involution():
        raise SymmetryError("permutation is not an involution")
    if not is_symmetry(xi, sym):
        raise SymmetryError("permutation is not a symmetry of the coupling matrix")
    orbits = pattern_from_symmetry(sym)
    if pattern is not None and pattern.canonical() != orbits.canonical():
        raise SymmetryError("cluster pattern is not the orbit partition of the permutation")
    n = xi.shape[0]
    r = np.sqrt(0.5)
    trans, sync = [], []
    for c in orbits.clusters:
        if len(c) == 2:
            i, j = c
            v = np.zeros(n)
            v[i], v[j] = r, -r
            trans.append(v)
            w = np.zeros(n)
            w[i], w[j] = r, r
            sync.append(w)
        else:
            w = np.zeros(n)
            w[c[0]] = 1.0
            sync.append(w)
    psi = np.column_stack(trans + sync)
    theta = psi.T @ xi @ psi
    nt = len(trans)
    coupling = np.abs(theta[:nt, nt:]).max() if nt and nt < n else 0.0
    if coupling > SPECTRAL_TOL:
        raise SymmetryError("transverse and synchronous blocks do not decouple")
    omega = theta[:nt, :nt]
    phi = theta[nt:, nt:]
    t_eigs = np.sort(np.linalg.eigvalsh(omega))[::-1] if nt else np.zeros(0)
    s_eigs = np.sort(np.linalg.eigvalsh(phi))[::-1]
    return SpectralSplit(
        psi=psi,
        theta=theta,
        omega=omega,
        phi=phi,
        omega_blocks=_split_blocks(omega) if nt else (),
        transverse_eigs=t_eigs,
        sync_eigs=s_eigs,
        n_transverse=nt,
    )


def check_eigenvalue_condition(split: SpectralSplit) -> bool:
    """|lambda^s_2| < lambda_min (strict).

    A zero lambda^s_2 (disconnected quotient network) fails: no coupling
    strength can stabilise the synchronous subspace then.
    """
    if split.n_transverse == 0 or len(split.sync_eigs) < 2:
        return False
    if abs(split.lambda_s2) <= SPECTRAL_TOL:
        return False
    return bool(abs(split.lambda_s2) < split.lambda_min)


def epsilon_range(eta_bar: float, split: SpectralSplit) -> tuple:
    """Admissible coupling strengths [|eta|/lambda_min, |eta|/|lambda^s_2|]."""
    if not check_eigenvalue_condition(split):
        raise NoRangeError(
            f"eigenvalue condition fails: |lambda_s2|={abs(split.lambda_s2):.4g} "
            f">= lambda_min={split.lambda_min:.4g}"
        )
    if not eta_bar < 0:
        raise NoRangeError("stability threshold must be negative")
    eta = abs(eta_bar)
    return (eta / split.lambda_min, eta / abs(split.lambda_s2))


# ---------------------------------------------------------- control network ---


def control_weights(xi, pattern: ClusterPattern) -> np.ndarray:
    """omega_kl = (sum over i in G_k, j in G_l of xi_ij) / |G_k|."""
    xi = np.asarray(xi, dtype=float)
    P = pattern.indicator()
    sizes = P.sum(axis=0)
    return (P.T @ xi @ P) / sizes[:, None]


@dataclass(frozen=True)
class AlphaThresholds:
    alpha1: float  # inducing threshold
    alpha2: float  # controlling threshold

    def regime(self, alpha: float) -> str:
        if alpha > self.alpha2:
            return "controlled"
        if alpha > self.alpha1:
            return "induced"
        return "none"


def alpha_thresholds(eta_bar: float, epsilon: float, lambda_min: float) -> AlphaThresholds:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    a2 = abs(eta_bar) / epsilon
    return AlphaThresholds(a2 - lambda_min, a2)


@dataclass(frozen=True)
class ControlNetwork:
    """Control nodes pinned onto the network.

    ``A`` is the L x L control coupling (no epsilon factor), ``pin`` the N x L
    interconnection matrix. ``pin_mode`` selects how a control node enters its
    pinned nodes: "additive" adds alpha*eps*Gamma*x~_k, "diffusive" adds
    alpha*eps*Gamma*(x~_k - x_i).
    """

    A: np.ndarray
    pin: np.ndarray
    alpha: float
    pin_mode: str = "additive"

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        pin = np.array(self.pin, dtype=float)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "pin", pin)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("control matrix must be square")
        if pin.ndim != 2 or pin.shape[1] != A.shape[0]:
            raise ValueError(f"pin map shape {pin.shape} incompatible with A {A.shape}")
        if not (np.all((pin == 0) | (pin == 1)) and np.all(pin.sum(axis=1) == 1)):
            raise ValueError("every node must be pinned to exactly one control node")
        if self.pin_mode not in ("additive", "diffusive"):
            raise ValueError(f"unknown pin_mode {self.pin_mode!r}")

    @property
    def L(self) -> int:
        return self.A.shape[0]

    def with_A(self, A):
        return ControlNetwork(A, self.pin, self.alpha, self.pin_mode)

    def with_alpha(self, alpha):
        return ControlNetwork(self.A, self.pin, alpha, self.pin_mode)


def augmented_coupling(xi, ctrl: ControlNetwork | None):
    """Weighted adjacency over network nodes followed by control nodes.

    Used for link bookkeeping (requirements, channel links); entry (i, N+k) is
    nonzero when node i is pinned to control node k.
    """
    xi = np.asarray(xi, dtype=float)
    if ctrl is None:
        return xi.copy()
    n, L = xi.shape[0], ctrl.L
    M = np.zeros((n + L, n + L))
    M[:n, :n] = xi
    M[:n, n:] = ctrl.pin
    M[n:, :n] = ctrl.pin.T
    M[n:, n:] = ctrl.A
    return M


# ----------------------------------------------------- design requirements ---


def check_requirements(
    couplings: Sequence[np.ndarray],
    patterns: Sequence[ClusterPattern],
    transmitter: Iterable[int],
    receiver: Iterable[int],
    control_links: Iterable[tuple] | None = None,
    label=lambda i: i + 1,
) -> Report:
    """Check the four CLSK network design requirements.

    ``couplings[m]`` is the weighted adjacency in force while symbol m is sent
    (use :func:`augmented_coupling` when a control network is present) and
    ``patterns[m]`` the cluster pattern it must realise, over the same node set.
    ``label`` renders node indices in the report (1-based by default).
    """
    rep = Report()
    tx, rx = set(transmitter), set(receiver)
    mats = [np.asarray(c, dtype=float) for c in couplings]
    n = mats[0].shape[0] if mats else 0
    nodes_ok = not (tx & rx) and (tx | rx) == set(range(n))
    rep.add("node_partition", nodes_ok, f"transmitter={[label(i) for i in sorted(tx)]}, receiver={[label(i) for i in sorted(rx)]}")

    M = len(patterns)
    rep.add("i_capacity", M > 1 and len(mats) == M, f"M={M}, configurations={len(mats)}")

    canon = [p.canonical() for p in patterns]
    distinct = len(set(canon)) == len(canon)
    cover = all(p.n == n for p in patterns)
    all_links = sorted(set().union(*(links_of(m) for m in mats))) if mats else []
    changed = [
        (i, j)
        for i, j in all_links
        if any(
            abs(m[i, j] - mats[0][i, j]) > STRUCT_TOL or abs(m[j, i] - mats[0][j, i]) > STRUCT_TOL
            for m in mats[1:]
        )
    ]
    ok = distinct and cover
    detail = f"changed links {[(label(i), label(j)) for i, j in changed]}"
    if control_links is not None:
        allowed = {tuple(sorted(l)) for l in control_links}
        outside = [l for l in changed if l not in allowed]
        ok = ok and not outside
        if outside:
            detail += f"; not designated as control: {[(label(i), label(j)) for i, j in outside]}"
    if not distinct:
        detail += "; patterns not pairwise distinct"
    if not cover:
        detail += "; pattern does not cover all nodes"
    rep.add("ii_switchable", ok, detail)

    channel = [(i, j) for i, j in all_links if (i in tx) != (j in tx)]
    clash = [
        (m, i, j) for m, p in enumerate(patterns) if p.n == n for i, j in channel if p.same_cluster(i, j)
    ]
    rep.add(
        "iii_channel_unsynchronized",
        bool(channel) and not clash,
        "; ".join(f"symbol {m}: link ({label(i)},{label(j)}) inside a cluster" for m, i, j in clash)
        or f"channel links {[(label(i), label(j)) for i, j in channel]}",
    )

    outside_tx = [(i, j) for i, j in changed if not (i in tx and j in tx)]
    rep.add(
        "iv_controls_in_transmitter",
        not outside_tx,
        f"links {[(label(i), label(j)) for i, j in outside_tx]} change but are not transmitter links"
        if outside_tx
        else "",
    )
    return rep


def channel_links(coupling, transmitter):
    tx = set(transmitter)
    return [(i, j) for i, j in links_of(coupling) if (i in tx) != (j in tx)]
