"""Chaos shift keying (CSK) and differential CSK (DCSK) over an AWGN channel."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynsys import NodeModel
from .netsim import initial_state, integrate_network
from .topology import CouplingTopology

FIT_COEFFS = (-0.5354, 7.2835, -25.05)


@dataclass(frozen=True)
class BasebandSignal:
    samples: np.ndarray
    dt: float
    sf: int

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if self.sf < 1:
            raise ValueError("spreading factor must be >= 1")
        if len(self.samples) % self.sf:
            raise ValueError("signal length must be a multiple of the spreading factor")

    @property
    def n_symbols(self):
        return len(self.samples) // self.sf

    def symbols(self):
        return self.samples.reshape(self.n_symbols, self.sf)


def chaotic_sources(n_samples: int, seed: int = 0, sample_interval: float = 0.01,
                    substeps: int = 4, transient: float = 20.0, model: NodeModel = NodeModel()):
    """First components of two uncoupled Chen orbits with different initial states."""
    topo = CouplingTopology(np.zeros((2, 2)), np.zeros((3, 3)), 0.0)
    dt = sample_interval / substeps
    skip = int(round(transient / sample_interval))
    s0 = initial_state(2, seed=seed)
    tr = integrate_network(s0, topo, dt=dt, n=(n_samples + skip) * substeps, stride=substeps, model=model)
    x = tr.x[skip + 1 :, :, 0]
    return x[:, 0].copy(), x[:, 1].copy()


def _bits(bits):
    b = np.asarray(bits, dtype=np.int64).ravel()
    if b.size and not np.all((b == 0) | (b == 1)):
        raise ValueError("bits must be 0 or 1")
    return b


def csk_modulate(bits, x, y, sf: int, dt: float = 1.0) -> BasebandSignal:
    """Bit 0 sends the x segment of its slot, bit 1 the y segment."""
    b = _bits(bits)
    need = b.size * sf
    if len(x) < need or len(y) < need:
        raise ValueError(f"chaotic sources need {need} samples")
    xs = np.asarray(x[:need]).reshape(-1, sf)
    ys = np.asarray(y[:need]).reshape(-1, sf)
    out = np.where(b[:, None] == 0, xs, ys)
    return BasebandSignal(out.ravel(), dt, sf)


def csk_demodulate(r, x, y, sf: int) -> np.ndarray:
    """Correlation receiver with exact replicas.

    Decides for the replica maximizing <r, s> - ||s||^2 / 2, i.e. the one closest
    to r, so replicas of unequal energy are compared fairly.
    """
    r = r.samples if isinstance(r, BasebandSignal) else np.asarray(r)
    rs = r.reshape(-1, sf)
    n = rs.shape[0]
    xs = np.asarray(x[: n * sf]).reshape(n, sf)
    ys = np.asarray(y[: n * sf]).reshape(n, sf)
    sx = np.sum(rs * xs, axis=1) - 0.5 * np.sum(xs * xs, axis=1)
    sy = np.sum(rs * ys, axis=1) - 0.5 * np.sum(ys * ys, axis=1)
    return (sy > sx).astype(np.int64)


def dcsk_modulate(bits, x, sf: int, dt: float = 1.0) -> BasebandSignal:
    """Reference half followed by the reference (bit 0) or its negation (bit 1)."""
    if sf % 2:
        raise ValueError("DCSK needs an even spreading factor")
    b = _bits(bits)
    half = sf // 2
    need = b.size * half
    if len(x) < need:
        raise ValueError(f"chaotic source needs {need} samples")
    ref = np.asarray(x[:need]).reshape(-1, half)
    data = np.where(b[:, None] == 0, ref, -ref)
    return BasebandSignal(np.hstack([ref, data]).ravel(), dt, sf)


def dcsk_demodulate(r, sf: int) -> np.ndarray:
    if sf % 2:
        raise ValueError("DCSK needs an even spreading factor")
    r = r.samples if isinstance(r, BasebandSignal) else np.asarray(r)
    rs = r.reshape(-1, sf)
    half = sf // 2
    corr = np.sum(rs[:, :half] * rs[:, half:], axis=1)
    return (corr < 0).astype(np.int64)


def bit_energy(signal: BasebandSignal) -> float:
    """Mean over symbols of the summed squared samples."""
    return float(np.mean(np.sum(signal.symbols() ** 2, axis=1)))


def noise_variance(eb: float, ebn0_db: float) -> float:
    """Per-sample variance N0/2 for the requested Eb/N0."""
    if np.isinf(ebn0_db) and ebn0_db > 0:
        return 0.0
    return eb / (2.0 * 10.0 ** (ebn0_db / 10.0))


def awgn(signal: BasebandSignal, ebn0_db: float, rng: np.random.Generator | int = 0) -> BasebandSignal:
    """Add white Gaussian noise for the given Eb/N0, using the measured bit energy."""
    if signal.samples.size == 0:
        raise ValueError("empty signal")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    var = noise_variance(bit_energy(signal), ebn0_db)
    if var == 0.0:
        return BasebandSignal(signal.samples.copy(), signal.dt, signal.sf)
    noisy = signal.samples + rng.standard_normal(signal.samples.shape) * np.sqrt(var)
    return BasebandSignal(noisy, signal.dt, signal.sf)


def fit_curve(x):
    """Quadratic-exponent trend curve P_e = 10**(a x^2 + b x + c), capped at 1."""
    a, b, c = FIT_COEFFS
    x = np.asarray(x, dtype=float)
    return np.minimum(10.0 ** (a * x * x + b * x + c), 1.0)


def simulate_ber(scheme: str, ebn0_db, bits: int, sf: int, seed: int = 0, chunk: int = 2000):
    """Bit errors per Eb/N0 level for CSK or DCSK.

    Bits and chaotic sources are shared across noise levels; each level draws
    its own noise. Work proceeds in chunks to bound memory. Returns an int array
    of error counts aligned with ``ebn0_db``.
    """
    if scheme not in ("csk", "dcsk"):
        raise ValueError(f"unknown baseline scheme {scheme!r}")
    if bits < 1:
        raise ValueError("bits must be >= 1")
    levels = np.atleast_1d(np.asarray(ebn0_db, dtype=float))
    root = np.random.SeedSequence([seed, sf, 0 if scheme == "csk" else 1])
    bit_seq, src_seq, *noise_seqs = root.spawn(2 + len(levels))
    bit_rng = np.random.default_rng(bit_seq)
    noise_rngs = [np.random.default_rng(s) for s in noise_seqs]
    src_seeds = src_seq.generate_state(1 + bits // chunk)
    errors = np.zeros(len(levels), dtype=np.int64)
    done, k = 0, 0
    while done < bits:
        nb = min(chunk, bits - done)
        b = bit_rng.integers(0, 2, nb)
        per = sf if scheme == "csk" else sf // 2
        x, y = chaotic_sources(nb * per, seed=int(src_seeds[k]))
        if scheme == "csk":
            sig = csk_modulate(b, x, y, sf)
        else:
            sig = dcsk_modulate(b, x, sf)
        for li, db in enumerate(levels):
            r = awgn(sig, db, noise_rngs[li])
            bh = csk_demodulate(r, x, y, sf) if scheme == "csk" else dcsk_demodulate(r, sf)
            errors[li] += int(np.sum(bh != b))
        done += nb
        k += 1
    return errors


def fit_vertex() -> float:
    """Eb/N0 (dB) where the trend curve peaks; it is a BER trend only beyond this point."""
    a, b, _ = FIT_COEFFS
    return -b / (2.0 * a)


def crossover(ebn0_db, pe, bits: int, curve=fit_curve):
    """First Eb/N0 at which ``curve`` drops below a measured BER.

    Only the decreasing branch of the curve (beyond its vertex) is searched.
    The measured BER is interpolated linearly in log10 between grid points,
    with zero counts floored at half an error. Returns None if the curve stays
    above the measurement.
    """
    x = np.asarray(ebn0_db, dtype=float)
    p = np.maximum(np.asarray(pe, dtype=float), 0.5 / bits)
    if x.size < 2 or np.any(np.diff(x) <= 0):
        raise ValueError("need an increasing Eb/N0 grid with at least two points")
    lo = max(fit_vertex(), x[0])
    fine = np.linspace(lo, x[-1], 2001)
    gap = np.log10(curve(fine)) - np.interp(fine, x, np.log10(p))
    below = np.nonzero(gap < 0)[0]
    if below.size == 0:
        return None
    k = below[0]
    if k == 0:
        return float(fine[0])
    # linear root between the last point above and the first point below
    g0, g1 = gap[k - 1], gap[k]
    return float(fine[k - 1] + (fine[k] - fine[k - 1]) * g0 / (g0 - g1))
