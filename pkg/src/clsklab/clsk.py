"""Cluster shift keying modem.

The transmitter maps each symbol to a coupling configuration whose stable
cluster pattern encodes it. The receiver measures the error energy of every
pair of receiver nodes over each symbol window, thresholds it at the mean
energy and picks the symbol whose reference pattern overlaps the resulting
synchronization matrix most.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .design import NetworkDesign
from .errors import RequirementError, UnmappedSymbolError
from .netsim import (
    NetworkState,
    SeedRegistry,
    WienerStream,
    diffusion_matrix,
    initial_state,
    integrate_network_sde,
)
from .topology import ClusterPattern


@dataclass(frozen=True)
class SymbolMap:
    """Symbols 0..M-1, each with a stacked coupling matrix and its cluster pattern."""

    matrices: tuple
    patterns: tuple
    receiver: tuple

    def __post_init__(self):
        if len(self.matrices) != len(self.patterns):
            raise ValueError("one coupling configuration per pattern is required")
        canon = [p.canonical() for p in self.patterns]
        if len(set(canon)) != len(canon):
            raise ValueError("symbol patterns must be pairwise distinct")

    @property
    def M(self):
        return len(self.patterns)

    @classmethod
    def from_design(cls, ds: NetworkDesign, epsilon=None, alpha=None):
        mats = tuple(ds.drift_matrix(m, epsilon, alpha) for m in range(len(ds.symbols)))
        order = [s.symbol for s in ds.symbols]
        if sorted(order) != list(range(len(order))):
            raise ValueError("design symbols must be numbered 0..M-1")
        perm = np.argsort(order)
        return cls(
            tuple(mats[k] for k in perm),
            tuple(ds.symbols[k].pattern for k in perm),
            tuple(ds.receiver),
        )

    def references(self):
        return [reference_matrix(p, self.receiver) for p in self.patterns]


def _symbols(bits, M):
    arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits)
    if arr.size == 0:
        return np.zeros(0, dtype=np.int64)
    if arr.ndim != 1 or not np.all(np.equal(np.mod(arr, 1), 0)):
        raise UnmappedSymbolError("symbols must be a 1-D sequence of integers")
    arr = arr.astype(np.int64)
    bad = arr[(arr < 0) | (arr >= M)]
    if bad.size:
        raise UnmappedSymbolError(f"symbol {int(bad[0])} has no mapped pattern (M={M})")
    return arr


def schedule_controls(bits, smap: SymbolMap, steps_per_symbol: int):
    """Piecewise-constant coupling schedule [(K, steps), ...], one segment per symbol."""
    syms = _symbols(bits, smap.M)
    return [(smap.matrices[s], steps_per_symbol) for s in syms]


@dataclass
class TransmissionFrame:
    """Observable outcome of a transmission.

    ``receiver[k]`` holds receiver node states at ``t[k]``; symbol n occupies
    samples n*s_f .. (n+1)*s_f inclusive. ``channel[k, l]`` holds the endpoint
    states (2 x d) of channel link l (empty unless requested).
    """

    bits: np.ndarray
    t: np.ndarray
    receiver: np.ndarray
    channel: np.ndarray
    channel_links: list
    spreading_factor: int
    sample_interval: float
    final_state: NetworkState | None = None
    stream: WienerStream | None = field(default=None, repr=False)

    @property
    def symbol_duration(self):
        return self.spreading_factor * self.sample_interval

    def channel_error(self):
        """Error norm across each channel link, shape (samples, links)."""
        if self.channel.size == 0:
            return np.zeros((len(self.t), 0))
        return np.linalg.norm(self.channel[:, :, 0] - self.channel[:, :, 1], axis=-1)


def transmit(bits, ds: NetworkDesign, sigma: float = 0.0, seed: int = 0, *,
             spreading_factor: int | None = None, epsilon=None, alpha=None,
             state: NetworkState | None = None, stream: WienerStream | None = None,
             registry: SeedRegistry | None = None, keep_channel: bool = True,
             check: bool = True) -> TransmissionFrame:
    """Send ``bits`` through the network described by ``ds``.

    Integrates across the symbol schedule with the state continuous at symbol
    boundaries. The initial state is drawn from ``seed`` unless ``state`` is
    given; the noise path is drawn from ``seed + 1`` unless ``stream`` continues
    an earlier one. Only receiver node states and channel link endpoints are
    returned.
    """
    if check:
        rep = ds.requirements()
        if not rep:
            raise RequirementError(rep)
    sim = ds.simulation
    sf = int(spreading_factor or sim.spreading_factor)
    if sf < 1:
        raise ValueError("spreading factor must be >= 1")
    smap = SymbolMap.from_design(ds, epsilon, alpha)
    syms = _symbols(bits, smap.M)
    topo = ds.topology(0, epsilon)
    ctrl = ds.control(0, alpha)
    if state is None:
        state = initial_state(ds.n, ds.n_control, seed)
    links = ds.channel_links()
    h = sim.sample_interval
    if syms.size == 0:
        d = state.x.shape[1]
        return TransmissionFrame(
            syms, np.zeros(0), np.zeros((0, len(ds.receiver), d)), np.zeros((0, len(links), 2, d)),
            links, sf, h, state, stream,
        )
    noise = ds.noise(sigma, seed + 1)
    if stream is None and sigma > 0:
        stream = WienerStream(diffusion_matrix(noise, topo, ctrl), sim.dt, noise.seed, registry)
    schedule = schedule_controls(syms, smap, sf * sim.sample_every)
    traj = integrate_network_sde(
        state, topo, ctrl, noise, dt=sim.dt, stride=sim.sample_every, method=sim.method,
        model=ds.model, schedule=schedule, stream=stream if sigma > 0 else None,
    )
    rx = traj.x[:, list(ds.receiver)]
    if keep_channel and links:
        ch = np.stack([traj.x[:, [i for i, _ in links]], traj.x[:, [j for _, j in links]]], axis=2)
    else:
        ch = np.zeros((len(traj.t), 0, 2, traj.x.shape[2]))
    return TransmissionFrame(syms, traj.t, rx, ch, links, sf, h, traj.final_state(), stream)


# ---------------------------------------------------------------- detector ---


def _window(traces, n, sf):
    lo, hi = n * sf, (n + 1) * sf
    if n < 0 or hi > len(traces) - 1:
        raise IndexError(f"symbol window {n} [{lo}, {hi}] outside trace of {len(traces)} samples")
    return traces[lo : hi + 1]


def error_energy(traces, i: int, j: int, n: int, T_b: float, dt: float) -> float:
    """Trapezoidal integral of ||x_i - x_j||^2 over symbol window n."""
    sf = int(round(T_b / dt))
    if sf < 1 or abs(sf * dt - T_b) > 1e-9 * max(1.0, T_b):
        raise ValueError("symbol duration must be a whole number of samples")
    w = _window(np.asarray(traces), n, sf)
    e2 = np.sum((w[:, i] - w[:, j]) ** 2, axis=-1)
    return float(np.trapezoid(e2, dx=dt))


def energy_matrices(traces, sf: int, dt: float, n_symbols: int | None = None) -> np.ndarray:
    """E[n, i, j] for every symbol window and receiver pair."""
    x = np.asarray(traces)
    total = (len(x) - 1) // sf
    n_symbols = total if n_symbols is None else n_symbols
    if n_symbols > total:
        raise IndexError("traces do not cover the requested symbols")
    NR = x.shape[1]
    E = np.zeros((n_symbols, NR, NR))
    for i in range(NR):
        for j in range(i + 1, NR):
            e2 = np.sum((x[: n_symbols * sf + 1, i] - x[: n_symbols * sf + 1, j]) ** 2, axis=-1)
            # trapezoid per window: end samples weighted 1/2, interior samples 1
            ends = 0.5 * (e2[0 : n_symbols * sf : sf] + e2[sf : n_symbols * sf + 1 : sf])
            body = e2[: n_symbols * sf].reshape(n_symbols, sf)[:, 1:].sum(axis=1)
            E[:, i, j] = E[:, j, i] = dt * (ends + body)
    return E


def threshold(E) -> float:
    """Mean over all N_R^2 entries (zero diagonal included)."""
    E = np.asarray(E, dtype=float)
    return float(E.sum() / E.size)


def sync_matrix(E, gamma: float) -> np.ndarray:
    return (np.asarray(E) <= gamma).astype(np.int64)


def reference_matrix(pattern: ClusterPattern, receiver: Sequence[int]) -> np.ndarray:
    """beta_ij = 1 iff receiver nodes i and j share a cluster (diagonal included)."""
    rx = list(receiver)
    covered = set(i for c in pattern.clusters for i in c)
    missing = [i for i in rx if i not in covered]
    if missing:
        raise ValueError(f"receiver nodes {missing} not covered by the pattern")
    labels = np.array([pattern.cluster_of(i) for i in rx])
    return (labels[:, None] == labels[None, :]).astype(np.int64)


def detect(A, references: Sequence[np.ndarray]):
    """Index of the reference with the largest Hadamard overlap (lowest index on ties)."""
    if len(references) < 2:
        raise ValueError("at least two reference patterns are required")
    A = np.asarray(A)
    scores = []
    for B in references:
        B = np.asarray(B)
        if B.shape != A.shape:
            raise ValueError(f"reference shape {B.shape} does not match {A.shape}")
        scores.append(float(np.sum(A * B)))
    best = max(scores)
    return scores.index(best), scores


@dataclass
class DetectionFrame:
    n: int
    energies: np.ndarray
    gamma: float
    A: np.ndarray
    symbol: int
    scores: list

    def to_dict(self):
        return {
            "n": self.n,
            "energies": self.energies.tolist(),
            "gamma": self.gamma,
            "A": self.A.tolist(),
            "symbol": self.symbol,
            "scores": self.scores,
        }


def demodulate(traces, references, sf: int, dt: float, n_symbols: int | None = None):
    """Detection frames for consecutive symbol windows of receiver traces."""
    E = energy_matrices(traces, sf, dt, n_symbols)
    frames = []
    for n in range(E.shape[0]):
        g = threshold(E[n])
        A = sync_matrix(E[n], g)
        s, scores = detect(A, references)
        frames.append(DetectionFrame(n, E[n], g, A, s, scores))
    return frames


def receive(frame: TransmissionFrame, ds: NetworkDesign):
    """Demodulate a transmission with the design's reference patterns."""
    refs = SymbolMap.from_design(ds).references()
    return demodulate(frame.receiver, refs, frame.spreading_factor, frame.sample_interval, len(frame.bits))


def detected_bits(frames) -> np.ndarray:
    return np.array([f.symbol for f in frames], dtype=np.int64)


def export_frames(frames, path):
    with open(path, "w") as fh:
        json.dump([f.to_dict() for f in frames], fh, indent=1)
        fh.write("\n")
