"""Command-line entry point: ``clsk <command> [options]``."""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, bench, clsk, design
from .dynsys import X1_TO_X2, msf_sweep
from .errors import (
    ClskError,
    ConfigError,
    DivergenceError,
    NoRangeError,
    RequirementError,
    SymmetryError,
    ThresholdNotFoundError,
)
from .netsim import export_trajectory_csv, load_trajectory_npz, Trajectory
from .topology import block_diagonalize, check_eigenvalue_condition, epsilon_range, validate_topology

EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_DIVERGENCE = 4
EXIT_REQUIREMENT = 5

OUT_ENV = "CLSK_OUT"


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ config ---


class RunConfig:
    """A run configuration file, or a bare network description.

    A run configuration names its network with ``"network"``: a path relative to
    the configuration file or ``"builtin:<name>"``. Other keys provide defaults
    for command-line flags and per-command sections (``msf``, ``ber``, ...).
    """

    def __init__(self, path=None):
        self.path = Path(path) if path else None
        self.inputs = []
        self.data = {}
        self.network = None
        if self.path is None:
            return
        if str(path).startswith("builtin:"):
            self.network = design.builtin(str(path).split(":", 1)[1])
            self.path = None
            return
        if not self.path.is_file():
            raise ConfigError(f"config file not found: {self.path}")
        self.inputs.append(self.path)
        try:
            self.data = json.loads(self.path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {self.path}: {exc}") from exc
        if "symbols" in self.data:
            self.network = design.from_dict(self.data)
            self.data = {}
            return
        ref = self.data.get("network")
        if ref is not None:
            if str(ref).startswith("builtin:"):
                self.network = design.builtin(str(ref).split(":", 1)[1])
            else:
                p = (self.path.parent / ref).resolve()
                self.network = design.load(p)
                self.inputs.append(p)

    def get(self, key, default=None):
        return self.data.get(key, default)

    def section(self, name):
        return self.data.get(name, {})

    def require_network(self):
        if self.network is None:
            raise ConfigError("a network description is required (--config)")
        return self.network


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out: Path, command, args, cfg: RunConfig, seed, outputs):
    manifest = {
        "command": command,
        "version": __version__,
        "config": str(cfg.path) if cfg.path else None,
        "seed": seed,
        "output_dir": str(out),
        "arguments": {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)},
        "inputs": {str(p): _sha256(p) for p in cfg.inputs},
        "outputs": sorted(str(o) for o in outputs),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV) or "clsk_out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _pick(flag, cfg: RunConfig, key, default):
    return flag if flag is not None else cfg.get(key, default)


def _apply_overrides(ds, args, cfg):
    sf = _pick(args.sf, cfg, "sf", None)
    sim = ds.simulation if sf is None else replace(ds.simulation, spreading_factor=int(sf))
    return ds.with_params(
        epsilon=_pick(args.epsilon, cfg, "epsilon", None),
        alpha=_pick(args.alpha, cfg, "alpha", None),
        simulation=sim,
    )


def _grid(lo, hi, step):
    if step <= 0:
        raise UsageError("grid step must be positive")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    if n < 1:
        raise UsageError("empty grid")
    return np.round(lo + step * np.arange(n), 12)


# ---------------------------------------------------------------- commands ---


def cmd_msf(args):
    cfg = RunConfig(args.config)
    sec = cfg.section("msf")
    model = cfg.network.model if cfg.network else design.NodeModel()
    gamma = cfg.network.gamma if cfg.network else X1_TO_X2
    grid = _grid(
        _pick(args.eta_min, cfg, "_", sec.get("eta_min", -20.0)),
        _pick(args.eta_max, cfg, "_", sec.get("eta_max", 0.0)),
        _pick(args.eta_step, cfg, "_", sec.get("eta_step", 0.5)),
    )
    seed = _pick(args.seed, cfg, "seed", 0)
    kw = dict(
        horizon=float(_pick(args.horizon, cfg, "_", sec.get("horizon", 2000.0))),
        dt=float(_pick(args.dt, cfg, "_", sec.get("dt", 1e-3))),
        transient=float(sec.get("transient", 100.0)),
        seed=int(seed),
    )
    curve = msf_sweep(model, gamma, grid, jobs=args.jobs or 1, **kw)
    out = _out_dir(args)
    lines = ["eta,mu"] + [f"{e!r},{m!r}" for e, m in zip(curve.eta.tolist(), curve.mu.tolist())]
    (out / "msf.csv").write_text("\n".join(lines) + "\n")
    (out / "threshold.json").write_text(json.dumps({"eta_bar": curve.threshold, **kw}, indent=2, sort_keys=True) + "\n")
    write_manifest(out, "msf", args, cfg, seed, ["msf.csv", "threshold.json"])
    print(f"eta_bar = {curve.threshold:g}")
    return 0


def _threshold_for(args, cfg, ds):
    eta = _pick(args.eta_bar, cfg, "eta_bar", None)
    if eta is not None:
        return float(eta)
    curve = msf_sweep(ds.model, ds.gamma, _grid(-12.0, -8.0, 0.5), horizon=500.0)
    return curve.threshold


def cmd_design_check(args):
    cfg = RunConfig(args.config)
    ds = _apply_overrides(cfg.require_network(), args, cfg)
    lines = [f"design: {ds.name}"]
    ok = True
    for m, s in enumerate(ds.symbols):
        rep = validate_topology(ds.topology(m))
        lines += [f"symbol {s.symbol} topology:"] + ["  " + l for l in rep.lines()]
        ok &= rep.passed
    req = ds.requirements()
    lines += ["requirements:"] + ["  " + l for l in req.lines()]
    result = {"design": ds.name, "requirements": req.passed, "symbols": []}
    eta_bar = None
    for m, s in enumerate(ds.symbols):
        if s.symmetry is None:
            continue
        eta_bar = _threshold_for(args, cfg, ds) if eta_bar is None else eta_bar
        try:
            split = block_diagonalize(s.xi, s.symmetry, None)
        except SymmetryError as exc:
            lines.append(f"symbol {s.symbol}: {exc}")
            ok = False
            continue
        cond = check_eigenvalue_condition(split)
        entry = {"symbol": s.symbol, "lambda_min": split.lambda_min, "lambda_s2": split.lambda_s2,
                 "eigenvalue_condition": cond}
        lines.append(
            f"symbol {s.symbol}: lambda_min={split.lambda_min:.4f} |lambda_s2|={abs(split.lambda_s2):.4f} "
            f"condition={'PASS' if cond else 'FAIL'}"
        )
        try:
            lo, hi = epsilon_range(eta_bar, split)
            entry["epsilon_range"] = [lo, hi]
            lines.append(f"  epsilon range [{lo:.2f}, {hi:.2f}] (eta_bar={eta_bar:g})")
        except NoRangeError as exc:
            lines.append(f"  {exc}")
            ok = False
        result["symbols"].append(entry)
    out = _out_dir(args)
    (out / "design_check.txt").write_text("\n".join(lines) + "\n")
    (out / "design_check.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    write_manifest(out, "design-check", args, cfg, None, ["design_check.txt", "design_check.json"])
    print("\n".join(lines))
    if not req:
        raise RequirementError(req)
    return 0 if ok else EXIT_REQUIREMENT


def _parse_bits(text):
    text = text.strip().replace(",", "").replace(" ", "")
    if not text or any(ch not in "01" for ch in text):
        raise UsageError(f"malformed bit string {text!r}: use 0/1 characters")
    return np.array([int(ch) for ch in text], dtype=np.int64)


def cmd_transmit(args):
    cfg = RunConfig(args.config)
    ds = _apply_overrides(cfg.require_network(), args, cfg)
    seed = int(_pick(args.seed, cfg, "seed", 0))
    bits_arg = _pick(args.bits, cfg, "bits", None)
    if bits_arg is None:
        bits = np.random.default_rng(seed).integers(0, 2, 8)
    elif isinstance(bits_arg, int) or str(bits_arg).startswith("random:"):
        n = int(str(bits_arg).split(":")[-1])
        bits = np.random.default_rng(seed).integers(0, 2, n)
    else:
        bits = _parse_bits(str(bits_arg))
    sigma = float(_pick(args.sigma, cfg, "sigma", 0.0))
    fr = clsk.transmit(bits, ds, sigma, seed)
    frames = clsk.receive(fr, ds)
    det = clsk.detected_bits(frames)
    out = _out_dir(args)
    np.savez(out / "traces.npz", t=fr.t, receiver=fr.receiver, channel=fr.channel,
             receiver_nodes=np.array([ds.label(i) for i in ds.receiver], dtype=str),
             channel_links=np.array([[ds.label(i), ds.label(j)] for i, j in fr.channel_links], dtype=str))
    n_ch = fr.channel.shape[1]
    ch_traj = Trajectory(fr.t, fr.channel.reshape(len(fr.t), 2 * n_ch, -1), 0)
    export_trajectory_csv(ch_traj, out / "channel.csv")
    clsk.export_frames(frames, out / "frames.json")
    (out / "bits.txt").write_text("sent     " + "".join(map(str, bits)) + "\ndetected " + "".join(map(str, det)) + "\n")
    errs = int(np.sum(det[1:] != bits[1:]))
    write_manifest(out, "transmit", args, cfg, seed, ["traces.npz", "channel.csv", "frames.json", "bits.txt"])
    print("sent     " + "".join(map(str, bits)))
    print("detected " + "".join(map(str, det)))
    print(f"errors after the first symbol: {errs}/{max(len(bits) - 1, 0)}")
    return 0


def cmd_ber(args):
    cfg = RunConfig(args.config)
    only_baseline = args.scheme in ("csk", "dcsk")
    # baselines need no network; the default design only fills the grid defaults
    net = cfg.network if only_baseline and cfg.network is not None else (
        design.builtin("example1") if only_baseline else cfg.require_network())
    ds = _apply_overrides(net, args, cfg)
    sec = cfg.section("ber")
    seed = int(_pick(args.seed, cfg, "seed", 0))
    scale = args.scale or sec.get("scale", "desk")
    default_grid = [0.0, 4.0, 8.0, 12.0] if only_baseline else [0.0, 0.25]
    sigmas = args.sigma_grid or ([args.sigma] if args.sigma is not None else sec.get("sigmas", default_grid))
    schedule = {"table1": bench.TABLE1, "table2": bench.TABLE2, None: None}[sec.get("schedule")]
    bits = _pick(args.bits, cfg, "_", sec.get("bits"))
    if bits is not None:
        bits = int(bits)
    if only_baseline:
        baselines = (args.scheme,)
    elif args.with_baselines:
        baselines = tuple(sec.get("baselines", ("csk", "dcsk")))
    else:
        baselines = ()
    sweep = bench.SweepConfig(
        design=ds,
        sigmas=tuple(sigmas),
        epsilons=tuple(sec.get("epsilons", ())) if args.epsilon is None else (args.epsilon,),
        alphas=tuple(sec.get("alphas", ())) if args.alpha is None else (args.alpha,),
        sfs=tuple(sec.get("sfs", ())) if args.sf is None else (args.sf,),
        schedule=schedule,
        bits=bits,
        scale=scale,
        seed_base=seed,
        jobs=args.jobs or os.cpu_count() or 1,
        baselines=baselines,
        clsk=not only_baseline,
    )
    out = _out_dir(args)
    csv_path = out / "ber.csv"
    resume = bench.read_csv(csv_path) if args.resume and csv_path.exists() else ()
    recs = bench.ber_sweep(sweep, resume, progress=lambda r: print(
        f"{r.scheme} sigma={r.sigma:g} eps={r.epsilon:g} alpha={r.alpha:g} sf={r.spreading_factor} "
        f"{r.status} {r.errors}/{r.bits}", flush=True))
    if args.no_wall_time:
        for r in recs:
            r.wall_seconds = 0.0
    bench.write_csv(recs, csv_path)
    outputs = ["ber.csv"]
    failed = [r for r in recs if r.status != "ok"]
    if failed:
        (out / "ber_failures.json").write_text(json.dumps(
            [{"cell": list(r.key), "detail": r.detail} for r in failed], indent=2) + "\n")
        outputs.append("ber_failures.json")
    if args.svg:
        bench.plot_ber_svg(recs, out / "ber.svg")
        outputs.append("ber.svg")
    write_manifest(out, "ber", args, cfg, seed, outputs)
    return 0


def cmd_spectrogram(args):
    cfg = RunConfig(args.config)
    trace = Path(args.trace)
    if not trace.is_file():
        raise ConfigError(f"trace file not found: {trace}")
    cfg.inputs.append(trace)
    if trace.suffix == ".npz":
        with np.load(trace) as z:
            if "channel" in z:
                t, ch = z["t"], z["channel"]
                link = args.link - 1
                if not 0 <= link < ch.shape[1]:
                    raise ConfigError(f"link {args.link} not in trace (1..{ch.shape[1]})")
                signal = np.linalg.norm(ch[:, link, 0] - ch[:, link, 1], axis=-1)
            else:
                tr = load_trajectory_npz(trace)
                t, signal = tr.t, tr.x[:, 0, 0]
    else:
        data = np.loadtxt(trace, delimiter=",", skiprows=1, ndmin=2)
        t, signal = data[:, 0], data[:, -1]
    dt = float(t[1] - t[0]) if len(t) > 1 else 1.0
    try:
        sig = bench.spectrogram(signal, args.window, args.overlap, dt)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = _out_dir(args)
    sig.write_csv(out / "spectrogram.csv")
    outputs = ["spectrogram.csv"]
    if args.svg:
        bench.plot_spectrogram_svg(sig, out / "spectrogram.svg")
        outputs.append("spectrogram.svg")
    write_manifest(out, "spectrogram", args, cfg, None, outputs)
    return 0


# ------------------------------------------------------------------ parser ---


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration or network description (JSON)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./clsk_out)")
    common.add_argument("--bits", default=None, help="transmit: bit string such as 0110 or random:N; ber: bits per cell")
    common.add_argument("--sigma", type=float, default=None)
    common.add_argument("--epsilon", type=float, default=None)
    common.add_argument("--alpha", type=float, default=None)
    common.add_argument("--sf", type=int, default=None, help="spreading factor (samples per symbol)")
    common.add_argument("--scheme", choices=("clsk", "csk", "dcsk"), default=None)
    scale = common.add_mutually_exclusive_group()
    scale.add_argument("--desk-scale", dest="scale", action="store_const", const="desk")
    scale.add_argument("--paper-scale", dest="scale", action="store_const", const="paper")
    common.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")

    p = argparse.ArgumentParser(prog="clsk", description="Cluster shift keying simulation laboratory.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("msf", parents=[common], help="master stability function and threshold")
    m.add_argument("--eta-min", type=float, default=None)
    m.add_argument("--eta-max", type=float, default=None)
    m.add_argument("--eta-step", type=float, default=None)
    m.add_argument("--horizon", type=float, default=None)
    m.add_argument("--dt", type=float, default=None)
    m.set_defaults(func=cmd_msf)

    d = sub.add_parser("design-check", parents=[common], help="requirements and eigenvalue condition")
    d.add_argument("--eta-bar", type=float, default=None, help="MSF threshold (computed when omitted)")
    d.set_defaults(func=cmd_design_check)

    t = sub.add_parser("transmit", parents=[common], help="send bits and detect them")
    t.set_defaults(func=cmd_transmit)

    b = sub.add_parser("ber", parents=[common], help="Monte Carlo BER sweep")
    b.add_argument("--sigma-grid", type=float, nargs="+", default=None)
    b.add_argument("--with-baselines", action="store_true", help="add CSK/DCSK rows (sigma column = Eb/N0 dB)")
    b.add_argument("--resume", action="store_true", help="reuse completed cells from an existing ber.csv")
    b.add_argument("--svg", action="store_true")
    b.add_argument("--no-wall-time", action="store_true", help="write 0 for wall_seconds (byte-stable output)")
    b.set_defaults(func=cmd_ber)

    s = sub.add_parser("spectrogram", parents=[common], help="STFT magnitude of a channel trace")
    s.add_argument("trace", help="traces.npz from transmit, or a CSV whose last column is the signal")
    s.add_argument("--link", type=int, default=1, help="channel link (1-based) for npz traces")
    s.add_argument("--window", type=int, default=256)
    s.add_argument("--overlap", type=int, default=128)
    s.add_argument("--svg", action="store_true")
    s.set_defaults(func=cmd_spectrogram)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except RequirementError as exc:
        print(f"requirement failure: {exc}", file=sys.stderr)
        return EXIT_REQUIREMENT
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (ConfigError, ThresholdNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ClskError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
