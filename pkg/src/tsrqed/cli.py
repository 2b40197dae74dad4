"""Command-line front end: reproducible CSV/report runs of the simulator.

Subcommands: modes, coupling, reflect, pulse, gate, oracle, sweep.
Configuration comes from built-in defaults, overridden by an optional
key = value config file, overridden by command-line flags.  Every run
writes a manifest echoing the fully resolved configuration; identical
configurations produce byte-identical output files (floats are serialized
with 17 significant digits, no timestamps).
"""

from __future__ import annotations

import argparse
import math
import sys as _sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .dispersive import (PulseSpec, SystemParams, adiabatic_reflection,
                         integrate_semiclassical, overlap_metrics)
from .gates import (HybridState, apply_cpf_ideal, apply_cpf_simulated,
                    compose_tqcpf)
from .lindblad import (HilbertConfig, evolve_master, initial_state,
                       output_field)
from .resonator import (CircuitParams, continuum_wavevector, coupling_profile,
                        solve_modes)


@dataclass
class RunConfig:
    """Fully resolved run configuration (defaults < config file < flags)."""

    command: str = ""
    out: str = "tsrqed-out"
    # circuit
    nodes: int = 300
    c0_ratio: float = 1.0
    n_modes: int = 6
    mode_indices: str = "0,1"
    # system
    chi: float = 10.0
    kappa: float = 1.0
    gamma: float = 0.1
    gamma_phi: float = 0.0
    delta_r: float = None
    g: float = None
    delta: float = None
    # pulse
    sigma: float = 4.0
    window: float = 10.0
    pad: float = None
    scale: float = 1.0
    dt: float = 0.01
    paper_window: bool = False
    # oracle
    nmax: int = 6
    model: str = "dispersive"
    dt_out: float = 0.05
    # run
    qubit: str = "down"
    channel: str = "u"
    sweep: str = None
    param: str = "chi"
    with_oracle: bool = False
    gnuplot: bool = False
    workers: int = 1

    def to_text(self) -> str:
        lines = [f"artifact_version = {__version__}"]
        for f in fields(self):
            lines.append(f"{f.name} = {_fmt(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for name, raw in _parse_keyvals(text).items():
            if name == "artifact_version":
                continue
            if name not in known:
                raise ValueError(f"unknown configuration key {name!r}")
            kwargs[name] = _coerce(name, raw)
        return cls(**kwargs)

    def system_params(self) -> SystemParams:
        return SystemParams(chi=self.chi, kappa=self.kappa, gamma=self.gamma,
                            gamma_phi=self.gamma_phi, delta_r=self.delta_r,
                            g=self.g, delta=self.delta)

    def pulse_spec(self) -> PulseSpec:
        return PulseSpec(sigma=self.sigma, window=self.window,
                         scale=self.scale, pad=self.pad)

    def circuit_params(self) -> CircuitParams:
        return CircuitParams(nodes_per_leg=self.nodes,
                             central_capacitance=self.c0_ratio)

    def qubit_sign(self) -> float:
        return 1.0 if self.qubit == "up" else -1.0


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _parse_keyvals(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


_FIELD_TYPES = {
    "command": str, "out": str, "nodes": int, "c0_ratio": float,
    "n_modes": int, "mode_indices": str, "chi": float, "kappa": float,
    "gamma": float, "gamma_phi": float, "delta_r": float, "g": float,
    "delta": float, "sigma": float, "window": float, "pad": float,
    "scale": float, "dt": float, "paper_window": bool, "nmax": int,
    "model": str, "dt_out": float, "qubit": str, "channel": str,
    "sweep": str, "param": str, "with_oracle": bool, "gnuplot": bool,
    "workers": int,
}


def _coerce(name: str, raw: str):
    if raw == "none":
        return None
    kind = _FIELD_TYPES[name]
    if kind is bool:
        return raw.lower() in ("1", "true", "yes")
    return kind(raw)


def _write_csv(path: Path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def _write_text(path: Path, text: str):
    with open(path, "w") as fh:
        fh.write(text)
    return path


def _parse_sweep(spec: str):
    try:
        start, stop, step = (float(x) for x in spec.split(":"))
    except Exception as exc:
        raise ValueError(f"sweep must be START:STOP:STEP, got {spec!r}") from exc
    if step <= 0 or stop < start:
        raise ValueError(f"bad sweep range {spec!r}")
    n = int(math.floor((stop - start) / step + 1e-9))
    return [start + i * step for i in range(n + 1)]


# ---------------------------------------------------------------- commands

def cmd_modes(cfg: RunConfig, out_dir: Path):
    params = cfg.circuit_params()
    sol = solve_modes(params, cfg.n_modes)
    rows = [(i, sol.frequencies[i], sol.classifications[i],
             sol.wavevectors[i] * params.leg_length)
            for i in range(len(sol.frequencies))]
    paths = [_write_csv(out_dir / "modes.csv",
                        ["index", "omega", "classification", "kL_fit"], rows)]
    x = sol.node_positions()
    for idx in (int(s) for s in cfg.mode_indices.split(",") if s.strip()):
        amp = sol.leg_amplitudes(idx)
        shape_rows = [(leg + 1, node + 1, x[node], amp[leg, node])
                      for leg in range(3) for node in range(params.nodes_per_leg)]
        paths.append(_write_csv(out_dir / f"mode_shape_{idx:03d}.csv",
                                ["leg", "node", "x", "amplitude"], shape_rows))
    if cfg.gnuplot:
        paths.append(_write_text(out_dir / "plot.gp", _gnuplot_modes(cfg)))
    return paths


def cmd_coupling(cfg: RunConfig, out_dir: Path):
    params = cfg.circuit_params()
    sol = solve_modes(params, cfg.n_modes)
    rows = []
    for leg in (1, 2, 3):
        prof = coupling_profile(params, sol, leg)
        rows.extend((leg, xx, gp, gm)
                    for xx, gp, gm in zip(prof.x, prof.g_plus, prof.g_minus))
    return [_write_csv(out_dir / "coupling.csv",
                       ["leg", "x", "g_plus", "g_minus"], rows)]


def cmd_reflect(cfg: RunConfig, out_dir: Path):
    sys_params = cfg.system_params()
    if cfg.sweep:
        detunings = _parse_sweep(cfg.sweep)
    else:
        step = sys_params.kappa / 10.0
        detunings = _parse_sweep(f"{-3 * abs(cfg.chi)}:{abs(cfg.chi)}:{step}")
    paths = []
    for name, sz in (("reflection_up.csv", 1.0), ("reflection_down.csv", -1.0)):
        rows = []
        for d in detunings:
            p = SystemParams(chi=cfg.chi, kappa=cfg.kappa, gamma=cfg.gamma,
                             gamma_phi=cfg.gamma_phi, delta_r=d)
            r = adiabatic_reflection(p, sz)
            rows.append((d, r.real, r.imag, abs(r), np.angle(r)))
        paths.append(_write_csv(out_dir / name,
                                ["delta_r", "re_r", "im_r", "abs_r", "arg_r"], rows))
    return paths


def cmd_pulse(cfg: RunConfig, out_dir: Path):
    sys_params = cfg.system_params()
    pulse = cfg.pulse_spec()
    series = integrate_semiclassical(
        sys_params, pulse, qubit_init=cfg.qubit_sign(), channel=cfg.channel,
        dt=cfg.dt, paper_window=cfg.paper_window)
    header = ["t", "re_in", "im_in", "re_out_u", "im_out_u",
              "re_out_d", "im_out_d", "sigma_z"]
    columns = [series.times, series.alpha_in.real, series.alpha_in.imag,
               series.alpha_out_u.real, series.alpha_out_u.imag,
               series.alpha_out_d.real, series.alpha_out_d.imag,
               series.sigma_z]
    if cfg.with_oracle:
        hil = HilbertConfig(n_max_plus=cfg.nmax, n_max_minus=cfg.nmax,
                            model=cfg.model)
        oracle_channel = "u" if cfg.channel in ("u", "both") else "d"
        traj = evolve_master(initial_state(hil, cfg.qubit), sys_params, hil,
                             pulse, channel=oracle_channel,
                             dt_out=series.dt, paper_window=cfg.paper_window)
        out = output_field(traj, pulse)
        n = min(len(out), len(series.times))
        header += ["re_out_oracle", "im_out_oracle"]
        columns = [col[:n] for col in columns] + [out[:n].real, out[:n].imag]
    rows = list(zip(*columns))
    paths = [_write_csv(out_dir / "pulse.csv", header, rows)]
    if cfg.gnuplot:
        paths.append(_write_text(out_dir / "plot.gp", _gnuplot_pulse(cfg)))
    return paths


def cmd_gate(cfg: RunConfig, out_dir: Path):
    sys_params = cfg.system_params()
    pulse = cfg.pulse_spec()
    state = HybridState.product((1.0, 1.0), [(1.0, 1.0)])
    ideal = apply_cpf_ideal(state)
    out_state, report = apply_cpf_simulated(state, sys_params, pulse, dt=cfg.dt)
    tq = compose_tqcpf(np.array([1.0, 1.0]) / math.sqrt(2.0))
    lines = [
        f"fidelity = {_fmt(report.fidelity)}",
        f"tau_d = {_fmt(report.tau_d)}",
    ]
    for key, c in report.branch_amplitudes.items():
        lines.append(f"branch_{key}_re = {_fmt(c.real)}")
        lines.append(f"branch_{key}_im = {_fmt(c.imag)}")
    for i, label in enumerate(("up_u", "up_d", "down_u", "down_d")):
        lines.append(f"ideal_out_{label} = {_fmt(ideal.amps[i].real)}")
        lines.append(f"simulated_out_{label}_re = {_fmt(out_state.amps[i].real)}")
        lines.append(f"simulated_out_{label}_im = {_fmt(out_state.amps[i].imag)}")
    for key in ("chi", "kappa", "gamma", "gamma_phi", "delta_r",
                "sigma", "window", "scale"):
        lines.append(f"{key} = {_fmt(getattr(report, key))}")
    lines.append(f"tqcpf_residual = {_fmt(tq.residual)}")
    lines.append(f"tqcpf_factorizes = {_fmt(tq.factorizes)}")
    for label in ("dd", "ud", "du", "uu"):
        lines.append(f"tqcpf_phase_{label} = {_fmt(tq.photon_phases[label].real)}")
    return [_write_text(out_dir / "gate_report.txt", "\n".join(lines) + "\n")]


def cmd_oracle(cfg: RunConfig, out_dir: Path):
    sys_params = cfg.system_params()
    pulse = cfg.pulse_spec()
    hil = HilbertConfig(n_max_plus=cfg.nmax, n_max_minus=cfg.nmax, model=cfg.model)
    channel = "u" if cfg.channel in ("u", "both") else "d"
    traj = evolve_master(initial_state(hil, cfg.qubit), sys_params, hil, pulse,
                         channel=channel, dt_out=cfg.dt_out,
                         paper_window=cfg.paper_window)
    rows = zip(traj.times, traj.a_plus.real, traj.a_plus.imag,
               traj.a_minus.real, traj.a_minus.imag, traj.sigma_z,
               traj.n_plus, traj.n_minus, traj.trace_err, traj.min_eig)
    return [_write_csv(out_dir / "oracle.csv",
                       ["t", "re_a_plus", "im_a_plus", "re_a_minus", "im_a_minus",
                        "sigma_z", "n_plus", "n_minus", "trace_err", "min_eig"],
                       rows)]


def _sweep_point(cfg: RunConfig, value: float):
    kwargs = dict(chi=cfg.chi, kappa=cfg.kappa, gamma=cfg.gamma,
                  gamma_phi=cfg.gamma_phi, delta_r=cfg.delta_r)
    sigma, window = cfg.sigma, cfg.window
    if cfg.param in kwargs:
        kwargs[cfg.param] = value
        if cfg.param == "chi":
            kwargs["delta_r"] = None  # keep the operating point delta_r = -chi
    elif cfg.param == "sigma":
        sigma = value
    else:
        raise ValueError(f"cannot sweep parameter {cfg.param!r}")
    sys_params = SystemParams(**kwargs)
    pulse = PulseSpec(sigma=sigma, window=window, scale=cfg.scale, pad=cfg.pad)
    rows = [value]
    for sz0, sign in ((-1.0, -1), (1.0, 1)):
        series = integrate_semiclassical(sys_params, pulse, qubit_init=sz0,
                                         channel="u", dt=cfg.dt)
        res = overlap_metrics(series, pulse, sign=sign)
        rows.extend([res.tau_d, res.fidelity])
    return tuple(rows)


def cmd_sweep(cfg: RunConfig, out_dir: Path):
    if not cfg.sweep:
        raise ValueError("sweep command requires --sweep START:STOP:STEP")
    values = _parse_sweep(cfg.sweep)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(lambda v: _sweep_point(cfg, v), values))
    else:
        rows = [_sweep_point(cfg, v) for v in values]
    return [_write_csv(out_dir / "sweep.csv",
                       ["value", "tau_d_down", "f_down", "tau_d_up", "f_up"],
                       rows)]


def _gnuplot_modes(cfg: RunConfig) -> str:
    return ("set datafile separator ','\n"
            "set key autotitle columnhead\n"
            "plot 'mode_shape_000.csv' using 3:4 with lines, \\\n"
            "     'mode_shape_001.csv' using 3:4 with lines\n")


def _gnuplot_pulse(cfg: RunConfig) -> str:
    return ("set datafile separator ','\n"
            "set key autotitle columnhead\n"
            "plot 'pulse.csv' using 1:2 with lines, \\\n"
            "     'pulse.csv' using 1:4 with lines\n")


COMMANDS = {
    "modes": cmd_modes,
    "coupling": cmd_coupling,
    "reflect": cmd_reflect,
    "pulse": cmd_pulse,
    "gate": cmd_gate,
    "oracle": cmd_oracle,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tsrqed",
        description="Triple-leg stripline resonator circuit-QED simulator")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("modes", "solve and classify resonator eigenmodes"),
            ("coupling", "qubit coupling profile of the fundamental doublet"),
            ("reflect", "adiabatic reflection spectrum for both qubit states"),
            ("pulse", "semiclassical pulse scattering time series"),
            ("gate", "ideal and simulated hybrid CPF gate reports"),
            ("oracle", "Lindblad master-equation trajectory"),
            ("sweep", "pulse metrics swept over one parameter")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=str, default=None,
                       help="key = value configuration file")
        p.add_argument("--out", type=str, default=None, help="output directory")
        p.add_argument("--chi", type=float, default=None)
        p.add_argument("--kappa", type=float, default=None)
        p.add_argument("--gamma", type=float, default=None)
        p.add_argument("--gamma-phi", dest="gamma_phi", type=float, default=None)
        p.add_argument("--delta-r", dest="delta_r", type=float, default=None)
        p.add_argument("--g", type=float, default=None)
        p.add_argument("--delta", type=float, default=None)
        p.add_argument("--sigma", type=float, default=None)
        p.add_argument("--window", type=float, default=None)
        p.add_argument("--pad", type=float, default=None)
        p.add_argument("--scale", type=float, default=None)
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--dt-out", dest="dt_out", type=float, default=None)
        p.add_argument("--paper-window", dest="paper_window",
                       action="store_true", default=None)
        p.add_argument("--nodes", type=int, default=None)
        p.add_argument("--c0-ratio", dest="c0_ratio", type=float, default=None)
        p.add_argument("--n-modes", dest="n_modes", type=int, default=None)
        p.add_argument("--mode-indices", dest="mode_indices", type=str, default=None)
        p.add_argument("--nmax", type=int, default=None)
        p.add_argument("--model", choices=("jc", "dispersive"), default=None)
        p.add_argument("--qubit", choices=("up", "down"), default=None)
        p.add_argument("--channel", choices=("u", "d", "both"), default=None)
        p.add_argument("--sweep", type=str, default=None,
                       help="START:STOP:STEP")
        p.add_argument("--param", choices=("chi", "gamma", "sigma"), default=None)
        p.add_argument("--with-oracle", dest="with_oracle",
                       action="store_true", default=None)
        p.add_argument("--gnuplot", action="store_true", default=None)
        p.add_argument("--workers", type=int, default=None)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        text = Path(args.config).read_text()
        file_cfg = RunConfig.from_text(text)
        cfg = file_cfg
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            setattr(cfg, f.name, value)
    cfg.command = args.command
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        out_dir = Path(cfg.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = COMMANDS[cfg.command](cfg, out_dir)
        _write_text(out_dir / "manifest.txt", cfg.to_text())
        for p in paths:
            print(p)
        print(out_dir / "manifest.txt")
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=_sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
