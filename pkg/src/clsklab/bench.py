"""Monte Carlo BER sweeps, bit-count schedules, spectrograms and result files."""
from __future__ import annotations

import csv
import itertools
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from . import baselines, clsk
from .design import NetworkDesign
from .errors import ConfigError, DivergenceError
from .netsim import SeedRegistry

CSV_COLUMNS = (
    "scheme",
    "sigma",
    "epsilon",
    "alpha",
    "spreading_factor",
    "bits",
    "errors",
    "pe",
    "pe_is_upper_bound",
    "ci_low",
    "ci_high",
    "seed",
    "wall_seconds",
)

DESK_CAP = 10_000
MIN_BITS = 100


# ------------------------------------------------------------ bit schedules ---


@dataclass(frozen=True)
class ScheduleRow:
    lo: float
    hi: float
    bits: int
    alpha: float | None = None
    sf: int | None = None

    def matches(self, sigma, alpha=None, sf=None):
        if not (self.lo <= sigma <= self.hi):
            return False
        if self.alpha is not None and alpha is not None and self.alpha != alpha:
            return False
        if self.sf is not None and sf is not None and self.sf != sf:
            return False
        return True


@dataclass(frozen=True)
class BitSchedule:
    """Bits per cell keyed by sigma range (optionally by alpha and s_f).

    Ranges may overlap; the first matching row wins.
    """

    rows: tuple

    def lookup(self, sigma, alpha=None, sf=None) -> int:
        for r in self.rows:
            if r.matches(sigma, alpha, sf):
                return r.bits
        raise ConfigError(f"sigma={sigma} (alpha={alpha}, s_f={sf}) outside all scheduled ranges")


TABLE1 = BitSchedule(
    (
        ScheduleRow(0, 4, 20_000_000),
        ScheduleRow(5, 10, 1_000_000),
        ScheduleRow(11, 15, 500_000),
        ScheduleRow(16, 20, 100_000),
    )
)

TABLE2 = BitSchedule(
    (
        ScheduleRow(0, 0.15, 10_000_000, 20, 500),
        ScheduleRow(0.2, 0.65, 5_000_000, 20, 500),
        ScheduleRow(0.7, 1.0, 100_000, 20, 500),
        ScheduleRow(0, 0.15, 10_000_000, 20, 1000),
        ScheduleRow(0.2, 0.65, 7_000_000, 20, 1000),
        ScheduleRow(0.7, 1.0, 1_000_000, 20, 1000),
        ScheduleRow(0, 0.6, 10_000_000, 10, 1000),
        ScheduleRow(0.65, 1, 1_000_000, 10, 1000),
        ScheduleRow(1, 1.5, 100_000, 10, 1000),
    )
)


def adapt_bits(sigma, schedule: BitSchedule, alpha=None, sf=None, scale="desk", cap=DESK_CAP) -> int:
    """Scheduled bit count; desk scale caps it at ``cap``."""
    n = schedule.lookup(sigma, alpha, sf)
    if scale == "paper":
        return n
    if scale != "desk":
        raise ConfigError(f"unknown scale {scale!r}")
    return max(MIN_BITS, min(n, cap))


# ------------------------------------------------------------------ records ---


def clopper_pearson(errors: int, bits: int, level: float = 0.95):
    a = 1.0 - level
    lo = 0.0 if errors == 0 else float(stats.beta.ppf(a / 2, errors, bits - errors + 1))
    hi = 1.0 if errors == bits else float(stats.beta.ppf(1 - a / 2, errors + 1, bits - errors))
    return lo, hi


@dataclass
class BerRecord:
    scheme: str
    sigma: float
    epsilon: float
    alpha: float
    spreading_factor: int
    bits: int
    errors: int
    pe: float
    pe_is_upper_bound: bool
    ci_low: float
    ci_high: float
    seed: int
    wall_seconds: float = 0.0
    status: str = "ok"
    detail: str = ""

    @classmethod
    def from_counts(cls, scheme, sigma, epsilon, alpha, sf, bits, errors, seed, wall=0.0):
        if bits < 1 or not 0 <= errors <= bits:
            raise ValueError(f"invalid counts: {errors} errors in {bits} bits")
        zero = errors == 0
        pe = 1.0 / bits if zero else errors / bits
        lo, hi = clopper_pearson(errors, bits)
        return cls(scheme, float(sigma), float(epsilon), float(alpha), int(sf), int(bits), int(errors),
                   pe, zero, lo, hi, int(seed), float(wall))

    @classmethod
    def failed(cls, scheme, sigma, epsilon, alpha, sf, seed, detail, wall=0.0):
        return cls(scheme, float(sigma), float(epsilon), float(alpha), int(sf), 0, 0, float("nan"),
                   False, float("nan"), float("nan"), int(seed), float(wall), "diverged", detail)

    @property
    def key(self):
        return (self.scheme, self.sigma, self.epsilon, self.alpha, self.spreading_factor, self.seed)

    def row(self):
        d = asdict(self)
        out = []
        for c in CSV_COLUMNS:
            v = d[c]
            if isinstance(v, bool):
                out.append("true" if v else "false")
            elif isinstance(v, float):
                out.append(repr(v))
            else:
                out.append(str(v))
        return out


def write_csv(records: Sequence[BerRecord], path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            if r.status == "ok":
                w.writerow(r.row())


def read_csv(path) -> list:
    out = []
    with open(path, newline="") as fh:
        for d in csv.DictReader(fh):
            out.append(
                BerRecord(
                    d["scheme"], float(d["sigma"]), float(d["epsilon"]), float(d["alpha"]),
                    int(d["spreading_factor"]), int(d["bits"]), int(d["errors"]), float(d["pe"]),
                    d["pe_is_upper_bound"] == "true", float(d["ci_low"]), float(d["ci_high"]),
                    int(d["seed"]), float(d["wall_seconds"]),
                )
            )
    return out


# -------------------------------------------------------------------- sweep ---


@dataclass
class SweepConfig:
    design: NetworkDesign
    sigmas: tuple
    epsilons: tuple = ()
    alphas: tuple = ()
    sfs: tuple = ()
    schedule: BitSchedule | None = None
    bits: int | None = None  # fixed count overriding the schedule
    scale: str = "desk"
    cap: int = DESK_CAP
    seed_base: int = 0
    jobs: int = 1
    batch: int = 500
    baselines: tuple = ()  # ("csk", "dcsk"): sigma column then carries Eb/N0 in dB
    clsk: bool = True

    def __post_init__(self):
        ds = self.design
        self.sigmas = tuple(float(s) for s in self.sigmas)
        self.epsilons = tuple(float(e) for e in (self.epsilons or (ds.epsilon,)))
        self.alphas = tuple(float(a) for a in (self.alphas or (ds.alpha,)))
        self.sfs = tuple(int(s) for s in (self.sfs or (ds.simulation.spreading_factor,)))
        if not self.sigmas:
            raise ConfigError("sigma grid is empty")
        if any(s < 0 for s in self.sigmas) and not self.baselines:
            raise ConfigError("sigma must be >= 0")
        if self.bits is None and self.schedule is None:
            raise ConfigError("either a fixed bit count or a bit schedule is required")
        if self.bits is not None and self.bits < MIN_BITS:
            raise ConfigError(f"bit count must be >= {MIN_BITS}")
        if any(s < 1 for s in self.sfs):
            raise ConfigError("spreading factors must be >= 1")
        for b in self.baselines:
            if b not in ("csk", "dcsk"):
                raise ConfigError(f"unknown baseline {b!r}")

    def cells(self):
        """(index, scheme, sigma, epsilon, alpha, s_f) in deterministic order."""
        out = []
        if self.clsk:
            for sigma, eps, alpha, sf in itertools.product(self.sigmas, self.epsilons, self.alphas, self.sfs):
                out.append(("clsk", sigma, eps, alpha, sf))
        for scheme in self.baselines:
            for sf in self.sfs:
                for db in self.sigmas:
                    out.append((scheme, db, self.epsilons[0], self.alphas[0], sf))
        return [(i,) + c for i, c in enumerate(out)]

    def bits_for(self, sigma, alpha, sf):
        if self.bits is not None:
            return self.bits
        return adapt_bits(sigma, self.schedule, alpha, sf, self.scale, self.cap)


def cell_seed(seed_base: int, index: int) -> int:
    return int(np.random.SeedSequence([seed_base, index]).generate_state(1)[0])


def run_clsk_cell(ds: NetworkDesign, sigma, epsilon, alpha, sf, bits, seed, batch=500):
    """Send ``bits`` random bits (plus one unscored warm-up symbol); return the error count."""
    rng = np.random.default_rng(seed)
    payload = rng.integers(0, 2, bits)
    stream_bits = np.concatenate([rng.integers(0, 2, 1), payload])
    refs = clsk.SymbolMap.from_design(ds).references()
    registry = SeedRegistry()
    state, stream = None, None
    errors = 0
    for start in range(0, len(stream_bits), batch):
        chunk = stream_bits[start : start + batch]
        fr = clsk.transmit(
            chunk, ds, sigma, seed, spreading_factor=sf, epsilon=epsilon, alpha=alpha,
            state=state, stream=stream, registry=registry if stream is None else None,
            keep_channel=False, check=start == 0,
        )
        state, stream = fr.final_state, fr.stream
        frames = clsk.demodulate(fr.receiver, refs, sf, fr.sample_interval, len(chunk))
        det = clsk.detected_bits(frames)
        scored = slice(1, None) if start == 0 else slice(None)
        errors += int(np.sum(det[scored] != chunk[scored]))
    return errors


def _run_cell(args):
    cfg, (idx, scheme, sigma, eps, alpha, sf) = args
    seed = cell_seed(cfg.seed_base, idx)
    t0 = time.perf_counter()
    try:
        if scheme == "clsk":
            bits = cfg.bits_for(sigma, alpha, sf)
            errors = run_clsk_cell(cfg.design, sigma, eps, alpha, sf, bits, seed, cfg.batch)
        else:
            bits = cfg.bits if cfg.bits is not None else cfg.cap
            errors = int(baselines.simulate_ber(scheme, [sigma], bits, sf, seed)[0])
    except DivergenceError as exc:
        return BerRecord.failed(scheme, sigma, eps, alpha, sf, seed, str(exc), time.perf_counter() - t0)
    return BerRecord.from_counts(scheme, sigma, eps, alpha, sf, bits, errors, seed, time.perf_counter() - t0)


def ber_sweep(cfg: SweepConfig, resume: Sequence[BerRecord] = (), progress=None) -> list:
    """Run every cell of the grid. Cells whose key appears in ``resume`` are reused.

    Results are ordered by cell index and independent of ``jobs``.
    """
    done = {r.key: r for r in resume}
    todo, results = [], {}
    for cell in cfg.cells():
        idx, scheme, sigma, eps, alpha, sf = cell
        key = (scheme, float(sigma), float(eps), float(alpha), int(sf), cell_seed(cfg.seed_base, idx))
        if key in done:
            results[idx] = done[key]
        else:
            todo.append(cell)
    jobs = cfg.jobs or os.cpu_count() or 1
    if jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for cell, rec in zip(todo, pool.map(_run_cell, [(cfg, c) for c in todo])):
                results[cell[0]] = rec
                if progress:
                    progress(rec)
    else:
        for cell in todo:
            rec = _run_cell((cfg, cell))
            results[cell[0]] = rec
            if progress:
                progress(rec)
    return [results[i] for i in sorted(results)]


# -------------------------------------------------------------- spectrogram ---


@dataclass
class Spectrogram:
    freqs: np.ndarray
    times: np.ndarray  # window centres
    magnitude: np.ndarray  # (frequency bins, columns)
    window: int
    dt: float = 1.0

    def energy(self):
        """Total energy of the windowed frames (one-sided spectrum corrected)."""
        p = self.magnitude**2
        w = np.full(p.shape[0], 2.0)
        w[0] = 1.0
        if self.window % 2 == 0:
            w[-1] = 1.0
        return float(np.sum(p * w[:, None]) / self.window)

    def centroid(self):
        p = self.magnitude**2
        tot = p.sum(axis=0)
        tot[tot == 0] = np.finfo(float).tiny
        return (self.freqs[:, None] * p).sum(axis=0) / tot

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + [repr(float(f)) for f in self.freqs])
            for k, t in enumerate(self.times):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in self.magnitude[:, k]])


def spectrogram(signal, window: int = 256, overlap: int = 128, dt: float = 1.0) -> Spectrogram:
    """Short-time Fourier magnitude with a Hann window."""
    x = np.asarray(signal, dtype=float)
    if window < 2 or window > len(x):
        raise ValueError("window must be in [2, len(signal)]")
    if not 0 <= overlap < window:
        raise ValueError("overlap must be in [0, window)")
    hop = window - overlap
    n_cols = 1 + (len(x) - window) // hop
    idx = np.arange(window)[None, :] + hop * np.arange(n_cols)[:, None]
    frames = x[idx] * np.hanning(window + 1)[:-1][None, :]
    mag = np.abs(np.fft.rfft(frames, axis=1)).T
    freqs = np.fft.rfftfreq(window, dt)
    times = (hop * np.arange(n_cols) + window / 2) * dt
    return Spectrogram(freqs, times, mag, window, dt)


def windowed_energy(signal, window: int = 256, overlap: int = 128) -> float:
    x = np.asarray(signal, dtype=float)
    hop = window - overlap
    n_cols = 1 + (len(x) - window) // hop
    w = np.hanning(window + 1)[:-1]
    return float(sum(np.sum((x[k * hop : k * hop + window] * w) ** 2) for k in range(n_cols)))


@dataclass
class CovertnessReport:
    boundary_p: float  # variance of centroid, boundary vs within-symbol columns
    symbol_p: float  # centroid location, symbol 0 vs symbol 1 columns
    n_boundary: int
    n_within: int

    def indistinguishable(self, level=0.05):
        return self.boundary_p > level


def covertness_statistics(sig: Spectrogram, symbol_duration: float, bits, t0: float = 0.0,
                          skip_symbols: int = 1) -> CovertnessReport:
    """Compare spectral centroids of columns straddling symbol boundaries with
    columns lying inside one symbol.

    Variance equality uses the Brown-Forsythe test; the symbol comparison uses
    the Mann-Whitney U test on within-symbol columns.
    """
    cen = sig.centroid()
    half = 0.5 * sig.window * sig.dt
    lo = sig.times - half - t0
    hi = sig.times + half - t0
    first = np.floor(lo / symbol_duration + 1e-12).astype(int)
    last = np.floor((hi - 1e-9) / symbol_duration).astype(int)
    keep = first >= skip_symbols
    bits = np.asarray(bits)
    keep &= last < len(bits)
    boundary = keep & (first != last)
    within = keep & (first == last)
    bp = float(stats.levene(cen[boundary], cen[within], center="median").pvalue)
    s = np.where(within, bits[np.clip(first, 0, len(bits) - 1)], -1)
    c0, c1 = cen[s == 0], cen[s == 1]
    sp = float(stats.mannwhitneyu(c0, c1).pvalue) if len(c0) and len(c1) else float("nan")
    return CovertnessReport(bp, sp, int(boundary.sum()), int(within.sum()))


# ---------------------------------------------------------------------- SVG ---


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "clsklab"
    return plt


def plot_ber_svg(records: Sequence[BerRecord], path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    groups = {}
    for r in records:
        if r.status == "ok":
            groups.setdefault((r.scheme, r.epsilon, r.alpha, r.spreading_factor), []).append(r)
    for (scheme, eps, alpha, sf), rs in sorted(groups.items()):
        rs = sorted(rs, key=lambda r: r.sigma)
        x = [r.sigma for r in rs]
        y = [r.pe for r in rs]
        line, = ax.semilogy(x, y, marker="o", label=f"{scheme} eps={eps:g} alpha={alpha:g} sf={sf}")
        ub = [(r.sigma, r.pe) for r in rs if r.pe_is_upper_bound]
        if ub:
            ax.semilogy(*zip(*ub), linestyle="none", marker="o", mfc="white", color=line.get_color())
    ax.set_xlabel("noise level (Eb/N0 in dB for baselines)")
    ax.set_ylabel("P_e")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_spectrogram_svg(sig: Spectrogram, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.pcolormesh(sig.times, sig.freqs, 20 * np.log10(sig.magnitude + 1e-12), shading="auto")
    ax.set_xlabel("t")
    ax.set_ylabel("frequency")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
