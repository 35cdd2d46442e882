"""Network description files.

A design lists the node model, inner coupling, coupling strength, one coupling
matrix (and optional control matrix) per symbol, the cluster pattern each symbol
must realise, the transmitter/receiver split and the noisy links.

Files are JSON with 1-based node labels. Network nodes are integers 1..N and
control nodes are strings such as ``"2'"``. Internally every index is 0-based
over the stacked (network, control) node list.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynsys import NodeModel
from .errors import ConfigError
from .netsim import NoiseConfig, coupling_matrix
from .topology import (
    ClusterPattern,
    ControlNetwork,
    CouplingTopology,
    PermutationSymmetry,
    augmented_coupling,
    channel_links,
    check_requirements,
)

DATA_DIR = Path(__file__).parent / "data"


@dataclass(frozen=True)
class SymbolDesign:
    symbol: int
    xi: np.ndarray
    pattern: ClusterPattern  # over stacked nodes
    control_A: np.ndarray | None = None
    symmetry: PermutationSymmetry | None = None

    def __eq__(self, other):
        if not isinstance(other, SymbolDesign):
            return NotImplemented
        same_sym = (self.symmetry is None) == (other.symmetry is None) and (
            self.symmetry is None or np.array_equal(self.symmetry.delta, other.symmetry.delta)
        )
        same_A = (self.control_A is None) == (other.control_A is None) and (
            self.control_A is None or np.array_equal(self.control_A, other.control_A)
        )
        return (
            self.symbol == other.symbol
            and np.array_equal(self.xi, other.xi)
            and self.pattern == other.pattern
            and same_A
            and same_sym
        )


@dataclass(frozen=True)
class Simulation:
    dt: float = 0.01
    sample_every: int = 20
    spreading_factor: int = 200
    method: str = "sra-rk4"

    @property
    def sample_interval(self):
        return self.dt * self.sample_every

    @property
    def symbol_duration(self):
        return self.sample_interval * self.spreading_factor


@dataclass(frozen=True)
class NetworkDesign:
    name: str
    n: int
    gamma: np.ndarray
    epsilon: float
    symbols: tuple
    transmitter: tuple
    receiver: tuple
    control_links: tuple = ()
    model: NodeModel = NodeModel()
    n_control: int = 0
    pin: np.ndarray | None = None
    alpha: float = 0.0
    pin_mode: str = "additive"
    noise_links: tuple = ()
    pin_noise: bool = False
    noise_gain: str = "unit"
    control_noise: float = 0.0
    simulation: Simulation = field(default_factory=Simulation)

    def __eq__(self, other):
        if not isinstance(other, NetworkDesign):
            return NotImplemented
        return to_dict(self) == to_dict(other)

    @property
    def nodes(self):
        return self.n + self.n_control

    def label(self, idx):
        return idx + 1 if idx < self.n else f"{idx - self.n + 1}'"

    def topology(self, m=0, epsilon=None) -> CouplingTopology:
        return CouplingTopology(self.symbols[m].xi, self.gamma, self.epsilon if epsilon is None else epsilon)

    def control(self, m=0, alpha=None) -> ControlNetwork | None:
        if not self.n_control:
            return None
        A = self.symbols[m].control_A
        return ControlNetwork(A, self.pin, self.alpha if alpha is None else alpha, self.pin_mode)

    def drift_matrix(self, m=0, epsilon=None, alpha=None):
        return coupling_matrix(self.topology(m, epsilon), self.control(m, alpha))

    def adjacency(self, m=0):
        return augmented_coupling(self.symbols[m].xi, self.control(m))

    def patterns(self):
        return [s.pattern for s in self.symbols]

    def requirements(self):
        return check_requirements(
            [self.adjacency(m) for m in range(len(self.symbols))],
            self.patterns(),
            self.transmitter,
            self.receiver,
            self.control_links,
            label=self.label,
        )

    def channel_links(self):
        return channel_links(self.adjacency(0), self.transmitter)

    def noise(self, sigma=0.0, seed=0) -> NoiseConfig:
        return NoiseConfig(sigma, self.noise_links, self.pin_noise, self.noise_gain, seed, self.control_noise)

    def with_params(self, epsilon=None, alpha=None, simulation=None):
        kw = dict(self.__dict__)
        if epsilon is not None:
            kw["epsilon"] = float(epsilon)
        if alpha is not None:
            kw["alpha"] = float(alpha)
        if simulation is not None:
            kw["simulation"] = simulation
        return NetworkDesign(**kw)


# ---------------------------------------------------------------- parsing ---


def _node_index(label, n, n_control):
    if isinstance(label, bool):
        raise ConfigError(f"invalid node label {label!r}")
    if isinstance(label, int):
        if not 1 <= label <= n:
            raise ConfigError(f"node {label} outside 1..{n}")
        return label - 1
    if isinstance(label, str) and label.endswith("'") and label[:-1].isdigit():
        k = int(label[:-1])
        if not 1 <= k <= n_control:
            raise ConfigError(f"control node {label} outside 1'..{n_control}'")
        return n + k - 1
    raise ConfigError(f"invalid node label {label!r}")


def _matrix(value, shape, what):
    try:
        M = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: not a numeric matrix") from exc
    if M.shape != shape:
        raise ConfigError(f"{what}: expected shape {shape}, got {M.shape}")
    return M


def from_dict(d: dict) -> NetworkDesign:
    try:
        n = int(d["nodes"])
        ctrl = d.get("control")
        n_control = 0
        pin = None
        if ctrl:
            pin_targets = ctrl["pin"]
            if len(pin_targets) != n:
                raise ConfigError("control.pin must list one control node per network node")
            n_control = max(int(str(p).rstrip("'")) for p in pin_targets)
            pin = np.zeros((n, n_control))
            for i, p in enumerate(pin_targets):
                pin[i, _node_index(p, n, n_control) - n] = 1.0
        idx = lambda lab: _node_index(lab, n, n_control)
        gamma = _matrix(d["gamma"], (3, 3), "gamma")
        symbols = []
        for s in d["symbols"]:
            groups = [[idx(v) for v in g] for g in s["pattern"]]
            listed = {i for g in groups for i in g}
            groups += [[i] for i in range(n + n_control) if i not in listed]
            try:
                pattern = ClusterPattern(tuple(tuple(g) for g in groups))
            except ValueError as exc:
                raise ConfigError(f"symbol {s.get('symbol')}: {exc}") from exc
            sym = None
            if s.get("symmetry") is not None:
                sym = PermutationSymmetry.from_pairs(
                    [(idx(a), idx(b)) for a, b in s["symmetry"]], n
                )
            A = _matrix(s["control_A"], (n_control, n_control), "control_A") if ctrl else None
            symbols.append(
                SymbolDesign(int(s["symbol"]), _matrix(s["xi"], (n, n), "xi"), pattern, A, sym)
            )
        sim = Simulation(**d.get("simulation", {}))
        noise = d.get("noise", {})
        model = NodeModel(**d.get("model", {}))
        return NetworkDesign(
            name=str(d.get("name", "")),
            n=n,
            gamma=gamma,
            epsilon=float(d["epsilon"]),
            symbols=tuple(symbols),
            transmitter=tuple(sorted(idx(v) for v in d["transmitter"])),
            receiver=tuple(sorted(idx(v) for v in d["receiver"])),
            control_links=tuple(tuple(sorted((idx(a), idx(b)))) for a, b in d.get("control_links", [])),
            model=model,
            n_control=n_control,
            pin=pin,
            alpha=float(ctrl.get("alpha", 0.0)) if ctrl else 0.0,
            pin_mode=str(ctrl.get("pin_mode", "additive")) if ctrl else "additive",
            noise_links=tuple(tuple(sorted((idx(a), idx(b)))) for a, b in noise.get("links", [])),
            pin_noise=bool(noise.get("pin", False)),
            noise_gain=str(noise.get("gain", "unit")),
            control_noise=float(noise.get("control", 0.0)),
            simulation=sim,
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed network description: {exc!r}") from exc


def _rows(M):
    return [[float(v) for v in row] for row in np.asarray(M)]


def to_dict(ds: NetworkDesign) -> dict:
    lab = ds.label
    out = {
        "name": ds.name,
        "nodes": ds.n,
        "model": {"a": ds.model.a, "b": ds.model.b, "c": ds.model.c},
        "gamma": _rows(ds.gamma),
        "epsilon": ds.epsilon,
        "transmitter": [lab(i) for i in ds.transmitter],
        "receiver": [lab(i) for i in ds.receiver],
        "control_links": [[lab(i), lab(j)] for i, j in ds.control_links],
    }
    if ds.n_control:
        out["control"] = {
            "pin": [lab(ds.n + int(np.argmax(row))) for row in ds.pin],
            "alpha": ds.alpha,
            "pin_mode": ds.pin_mode,
        }
    syms = []
    for s in ds.symbols:
        e = {
            "symbol": s.symbol,
            "xi": _rows(s.xi),
            "pattern": [[lab(i) for i in c] for c in s.pattern.clusters],
        }
        if s.symmetry is not None:
            perm = s.symmetry.permutation()
            e["symmetry"] = [[lab(i), lab(int(perm[i]))] for i in range(ds.n) if perm[i] > i]
        if s.control_A is not None:
            e["control_A"] = _rows(s.control_A)
        syms.append(e)
    out["symbols"] = syms
    out["noise"] = {
        "links": [[lab(i), lab(j)] for i, j in ds.noise_links],
        "pin": ds.pin_noise,
        "gain": ds.noise_gain,
        "control": ds.control_noise,
    }
    sim = ds.simulation
    out["simulation"] = {
        "dt": sim.dt,
        "sample_every": sim.sample_every,
        "spreading_factor": sim.spreading_factor,
        "method": sim.method,
    }
    return out


def loads(text: str) -> NetworkDesign:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    return from_dict(d)


_FLAT_LIST = re.compile(r"\[\s+([^\[\]{}]*?)\s+\]")


def dumps(ds: NetworkDesign) -> str:
    text = json.dumps(to_dict(ds), indent=2)
    # one line per matrix row and per label list
    text = _FLAT_LIST.sub(lambda m: "[" + re.sub(r"\s*\n\s*", " ", m.group(1)) + "]", text)
    return text + "\n"


def load(path) -> NetworkDesign:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"network description not found: {p}")
    return loads(p.read_text())


def save(ds: NetworkDesign, path):
    Path(path).write_text(dumps(ds))


def builtin(name: str) -> NetworkDesign:
    """Shipped designs: "example1" (link switching) and "example2" (pinning control)."""
    return load(DATA_DIR / f"{name}.json")
