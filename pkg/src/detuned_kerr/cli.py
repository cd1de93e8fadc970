"""Command-line front end.

    detuned-kerr <command> [--config FILE] [--out DIR] [--threads N] [--check-convergence]

Commands: spectrum, excursion, steadystate, colored, gate, wigner, estimate.
Configs are YAML with units in the key names (``kappa1_over_K``,
``T_in_inv_K``).  Every run writes a CSV and ``manifest.yaml``; the manifest
holds the fully resolved config and can be passed back as ``--config``.

Exit codes: 0 success, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Any, Callable, Iterable, Optional

import numpy as np
import yaml

from .dynamics import (
    DEFAULT_TRUNCATION,
    NoiseParams,
    excursion_rate,
    mean_excitation_degenerate,
    setup_mode,
    steady_state_populations,
)
from .fock import FockBasis, SystemParams, coherent, default_basis
from .spectral import alpha_for_nbar, code_states, diagonalize, pair_spacing_sweep
from .tolerances import DEFAULT as DEFAULT_TOL

log = logging.getLogger("detuned_kerr")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
FLOAT_FMT = "%.12e"
COMMANDS = ("spectrum", "excursion", "steadystate", "colored", "gate", "wigner", "estimate")

_NOISE = {"kappa1_over_K": 1e-3, "nth": 1e-2, "kappa_phi_over_K": 1e-5}

DEFAULTS: dict[str, dict[str, dict[str, Any]]] = {
    "spectrum": {
        "system": {"alpha2": 4.0, "delta_over_K": {"start": 0.0, "stop": 14.0, "num": 57}},
        "spectrum": {"n_pairs": 8},
        "truncation": {"fock_dim": None},
    },
    "excursion": {
        "system": {"nbar": [4, 5, 6, 7, 8, 9, 10], "delta_over_K": [0, 4, 8]},
        "noise": dict(_NOISE),
        "truncation": {"eigen_levels": DEFAULT_TRUNCATION, "fock_dim": None},
        "fit": {"n_samples": 200, "window_start_kappa1_t": 0.5},
    },
    "steadystate": {
        "system": {"nbar": [10], "delta_over_K": [0, 4, 10]},
        "noise": dict(_NOISE),
        "truncation": {"eigen_levels": DEFAULT_TRUNCATION, "fock_dim": None},
    },
    "colored": {
        "system": {"nbar": [4, 6, 8], "delta_over_K": [0, 4, 8]},
        "noise": dict(_NOISE),
        "filter": {"modes": 3, "kappa_eng_over_K": None, "leakage": False},
        "truncation": {"eigen_levels": 14, "fock_dim": None, "dim_cap": 56},
        "fit": {"n_samples": 101, "window_start_kappa1_t": 0.5},
    },
    "gate": {
        "system": {"nbar": 8, "delta_over_K": 8},
        "gate": {
            "kind": "zeno",
            "T_in_inv_K": [0.5, 1.0, 2.0, 5.0, 10.0],
            "angle_rad": math.pi,
            "pulse_edge": "cut",
            "kappa_eng_over_K": [None],
            "modes": [3],
            "schedule": "smoothstep",
            "dim_cap": 56,
        },
    },
    "wigner": {
        "system": {"nbar": 8, "delta_over_K": 4},
        "wigner": {
            "state": "code0",
            "x_range": [-4.5, 4.5],
            "p_range": [-4.5, 4.5],
            "resolution": 101,
            "svg": True,
        },
        "truncation": {"fock_dim": None},
    },
    "estimate": {
        "system": {"nbar": [4, 6, 8], "delta_over_K": [0]},
        "noise": dict(_NOISE),
        "estimate": {"n_cutoff": 20, "kappa_conf_over_K": None, "simulate": False},
        "truncation": {"eigen_levels": DEFAULT_TRUNCATION, "fock_dim": None},
    },
}

_RATE_KEYS = {"kappa1_over_K", "nth", "kappa_phi_over_K", "kappa_eng_over_K", "kappa_conf_over_K"}
_GRID_KEYS = {"nbar", "delta_over_K", "T_in_inv_K", "kappa_eng_over_K", "modes"}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- config


def _grid(value, field: str) -> list:
    if isinstance(value, dict):
        extra = set(value) - {"start", "stop", "num"}
        if extra or not {"start", "stop", "num"} <= set(value):
            raise ConfigError(f"{field}: a range needs exactly start, stop, num")
        if int(value["num"]) < 1:
            raise ConfigError(f"{field}: empty grid")
        return [float(v) for v in np.linspace(value["start"], value["stop"], int(value["num"]))]
    if isinstance(value, (list, tuple)):
        if not value:
            raise ConfigError(f"{field}: empty grid")
        return list(value)
    return [value]


def _check_number(value, field: str, allow_none: bool = False):
    if value is None and allow_none:
        return
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{field}: expected a finite number, got {value!r}")


def resolve_config(command: str, raw: Optional[dict]) -> dict:
    """Merge ``raw`` over the command defaults, rejecting unknown keys."""
    if command not in DEFAULTS:
        raise ConfigError(f"unknown command {command!r}")
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    if "command" in raw and "config" in raw:
        # a manifest from an earlier run
        if raw["command"] != command:
            raise ConfigError(f"manifest is for {raw['command']!r}, not {command!r}")
        raw = raw["config"]
    cfg = copy.deepcopy(DEFAULTS[command])
    for section, body in raw.items():
        if section not in cfg:
            raise ConfigError(f"unknown section {section!r} for {command}; allowed: {sorted(cfg)}")
        if not isinstance(body, dict):
            raise ConfigError(f"section {section!r} must be a mapping")
        for key, value in body.items():
            if key not in cfg[section]:
                raise ConfigError(f"unknown key {section}.{key}; allowed: {sorted(cfg[section])}")
            cfg[section][key] = value
    _validate(command, cfg)
    return cfg


def _validate(command: str, cfg: dict) -> None:
    for section, body in cfg.items():
        for key, value in body.items():
            field = f"{section}.{key}"
            if key in _GRID_KEYS:
                items = _grid(value, field)
                for v in items:
                    _check_number(v, field, allow_none=key == "kappa_eng_over_K")
                    if key in _RATE_KEYS and v is not None and v < 0:
                        raise ConfigError(f"{field}: rates must be nonnegative")
            elif key in _RATE_KEYS:
                _check_number(value, field, allow_none=True)
                if value is not None and value < 0:
                    raise ConfigError(f"{field}: rates must be nonnegative")
    sysc = cfg["system"]
    for v in _grid(sysc.get("nbar", 1.0), "system.nbar"):
        if v <= 0:
            raise ConfigError("system.nbar: must be positive")
    if "alpha2" in sysc:
        _check_number(sysc["alpha2"], "system.alpha2")
        if sysc["alpha2"] < 0:
            raise ConfigError("system.alpha2: must be nonnegative")
    trunc = cfg.get("truncation", {})
    for key in ("eigen_levels", "fock_dim", "dim_cap"):
        v = trunc.get(key)
        if v is not None and (not isinstance(v, int) or isinstance(v, bool) or v < 2):
            raise ConfigError(f"truncation.{key}: expected an integer >= 2")
    if command == "gate":
        g = cfg["gate"]
        if g["kind"] not in ("zeno", "x", "cnot"):
            raise ConfigError(f"gate.kind: expected zeno, x or cnot, got {g['kind']!r}")
        if g["pulse_edge"] not in ("cut", "shifted"):
            raise ConfigError("gate.pulse_edge: expected cut or shifted")
        if g["schedule"] not in ("smoothstep", "linear"):
            raise ConfigError("gate.schedule: expected smoothstep or linear")
        for T in _grid(g["T_in_inv_K"], "gate.T_in_inv_K"):
            if T <= 0:
                raise ConfigError("gate.T_in_inv_K: durations must be positive")
    if command == "wigner":
        w = cfg["wigner"]
        if w["state"] not in ("code0", "code1", "plus", "minus", "coherent"):
            raise ConfigError(f"wigner.state: unknown state {w['state']!r}")
        for key in ("x_range", "p_range"):
            r = w[key]
            if not isinstance(r, (list, tuple)) or len(r) != 2 or r[0] >= r[1]:
                raise ConfigError(f"wigner.{key}: expected [low, high] with low < high")
        if not isinstance(w["resolution"], int) or w["resolution"] < 2:
            raise ConfigError("wigner.resolution: expected an integer >= 2")


def load_config(path: Optional[str]) -> Optional[dict]:
    if path is None:
        return None
    try:
        with open(path) as fh:
            return yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"{path}: YAML error{where}: {getattr(exc, 'problem', exc)}") from exc


# ----------------------------------------------------------------- helpers


def _noise(cfg: dict) -> NoiseParams:
    n = cfg["noise"]
    return NoiseParams(n["kappa1_over_K"], n["nth"], n["kappa_phi_over_K"])


def _params(nbar: float, delta: float) -> SystemParams:
    alpha = alpha_for_nbar(nbar, delta)
    m = delta / 2.0
    if abs(m - round(m)) < 1e-12 and m >= 0:
        return SystemParams.at_m(alpha, int(round(m)))
    return SystemParams(alpha, delta)


def _basis(params: SystemParams, fock_dim: Optional[int], min_dim: int, scale: float = 1.0) -> FockBasis:
    b = FockBasis(fock_dim) if fock_dim else default_basis(params, min_dim=min_dim)
    return b.enlarged(scale) if scale != 1.0 else b


def _points(cfg: dict) -> list[tuple[float, float]]:
    s = cfg["system"]
    return [(float(n), float(d)) for n in _grid(s["nbar"], "system.nbar") for d in _grid(s["delta_over_K"], "system.delta_over_K")]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % v
    return "" if v is None else str(v)


# ------------------------------------------------------------ row workers
# Module-level so a process pool can pickle them.  Each returns a list of rows.


def _excursion_row(args):
    (nbar, delta), cfg, scale = args
    p = _params(nbar, delta)
    t = cfg["truncation"]
    levels = t["eigen_levels"]
    basis = _basis(p, t["fock_dim"], (levels + 1) // 2 * 2 + 16, scale)
    noise = _noise(cfg)
    k1 = noise.kappa1 if noise.kappa1 > 0 else 1e-3
    fit = excursion_rate(
        p,
        noise,
        n_trunc=levels,
        n_samples=cfg["fit"]["n_samples"],
        window_start=cfg["fit"]["window_start_kappa1_t"] / k1,
        basis=basis,
    )
    return [[nbar, delta, p.alpha, fit.gamma, fit.amplitude, fit.residual_rms]]


def _steady_rows(args):
    (nbar, delta), cfg, scale = args
    p = _params(nbar, delta)
    t = cfg["truncation"]
    levels = t["eigen_levels"]
    basis = _basis(p, t["fock_dim"], (levels + 1) // 2 * 2 + 16, scale)
    setup = setup_mode(p, levels, basis)
    pops = steady_state_populations(p, _noise(cfg), setup=setup)
    m = p.blockable_m
    nex = mean_excitation_degenerate(np.diag(pops), m) if m is not None else float("nan")
    # levels are interleaved (phi0+, phi0-, phi1+, ...)
    return [[nbar, delta, k // 2, 1 - 2 * (k % 2), pops[k], nex] for k in range(len(pops))]


def _colored_row(args):
    from .filters import build_colored_lindbladian, colored_bitflip_rate, colored_leakage, default_filter, uncolored_leakage

    (nbar, delta), cfg, scale = args
    p = _params(nbar, delta)
    t = cfg["truncation"]
    levels = t["eigen_levels"]
    basis = _basis(p, t["fock_dim"], (levels + 1) // 2 * 2 + 16, scale)
    setup = setup_mode(p, levels, basis)
    f = cfg["filter"]
    fp = default_filter(setup, M=f["modes"], kappa_eng=f["kappa_eng_over_K"])
    noise = _noise(cfg)
    k1 = noise.kappa1 if noise.kappa1 > 0 else 1e-3
    build_colored_lindbladian(setup, fp, noise, dim_cap=t["dim_cap"])  # cap check before the long run
    fit = colored_bitflip_rate(
        p,
        noise,
        fp,
        n_samples=cfg["fit"]["n_samples"],
        window_start=cfg["fit"]["window_start_kappa1_t"] / k1,
        setup=setup,
    )
    leak_on = leak_off = float("nan")
    if f["leakage"]:
        leak_on = colored_leakage(p, noise, fp, setup=setup)
        leak_off = uncolored_leakage(p, noise, setup=setup)
    return [[nbar, delta, fp.M, fp.kappa_eng, fp.delta_f, fit.gamma, leak_on, leak_off]]


def _gate_row(args):
    from .gates import Schedule, cnot_gate, gaussian_pulse, x_gate, zeno_z_gate

    (T, kappa_eng, modes), cfg = args
    g = cfg["gate"]
    p = _params(float(cfg["system"]["nbar"]), float(cfg["system"]["delta_over_K"]))
    if g["kind"] == "zeno":
        pulse = gaussian_pulse(T, g["angle_rad"], _code_nbar(p), edge=g["pulse_edge"])
        r = zeno_z_gate(p, pulse, kappa_eng=kappa_eng, M=modes, dim_cap=g["dim_cap"])
        return [[T, r.p_z_na, 0.0 if kappa_eng is None else kappa_eng, 0 if kappa_eng is None else modes, r.p_z_na_codespace, r.leakage]]
    sched = Schedule(T, theta_final=g["angle_rad"], kind=g["schedule"])
    if g["kind"] == "x":
        r = x_gate(p, sched)
        return [[T, r.fidelity, 1.0 - r.fidelity]]
    r = cnot_gate(p, p, sched)
    tt = r.details["truth_table"]
    return [[T, tt[(0, 0)], tt[(0, 1)], tt[(1, 0)], tt[(1, 1)], r.fidelity]]


def _code_nbar(p: SystemParams) -> float:
    return code_states(diagonalize(p, default_basis(p), n_levels=2)).nbar


def _estimate_row(args):
    from .estimators import gamma_formula, perturbative_bitflip_rate, perturbative_leakage

    (nbar, delta), cfg, scale = args
    p = _params(nbar, delta)
    e = cfg["estimate"]
    t = cfg["truncation"]
    noise = _noise(cfg)
    kc = e["kappa_conf_over_K"] or noise.kappa1
    basis = _basis(p, t["fock_dim"], 2 * e["n_cutoff"] + 12, scale)
    spec = diagonalize(p, basis, n_levels=e["n_cutoff"] + 1)
    state = perturbative_leakage(p, noise, e["n_cutoff"], spectrum=spec)
    pert = perturbative_bitflip_rate(state, kc).gamma
    formula = gamma_formula(spec, noise, kc) if abs(delta) < 1e-12 else float("nan")
    sim = float("nan")
    if e["simulate"]:
        levels = t["eigen_levels"]
        sim = excursion_rate(p, noise, n_trunc=levels, basis=_basis(p, t["fock_dim"], levels + 16, scale)).gamma
    return [[nbar, delta, state.kappa_l, pert, formula, sim]]


# ------------------------------------------------------------ orchestration


class RunFailure(RuntimeError):
    pass


def _run_rows(worker: Callable, jobs: list, threads: int, writer, header_len: int, fh) -> None:
    """Evaluate ``jobs`` in order, writing rows as soon as their turn comes.

    On a failure the rows so far are kept and a marker row is appended.
    """

    def emit(rows):
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
        fh.flush()

    try:
        if threads > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                for rows in pool.map(worker, jobs):
                    emit(rows)
        else:
            for job in jobs:
                emit(worker(job))
    except Exception as exc:
        writer.writerow(["# FAILED"] + [""] * (header_len - 2) + [f"{type(exc).__name__}: {exc}".replace("\n", " ")])
        fh.flush()
        raise RunFailure(f"{type(exc).__name__}: {exc}") from exc


class _Converged:
    """Worker wrapper adding the relative change of one value column when
    the Fock space is enlarged.  A class so pools can pickle it."""

    def __init__(self, worker: Callable, column: int):
        self.worker, self.column = worker, column

    def __call__(self, job):
        point, cfg, _ = job
        base = self.worker((point, cfg, 1.0))
        big = self.worker((point, cfg, DEFAULT_TOL.convergence_scale))
        out = []
        for r0, r1 in zip(base, big):
            a, b = float(r0[self.column]), float(r1[self.column])
            out.append(list(r0) + [abs(a - b) / max(abs(b), 1e-300)])
        return out


def _write_manifest(out: Path, command: str, cfg: dict, outputs: list[str], convergence: bool, extra: dict) -> Path:
    from . import __version__

    manifest = {
        "command": command,
        "config": cfg,
        "package_version": __version__,
        "outputs": outputs,
        "check_convergence": convergence,
        "tolerances": asdict(DEFAULT_TOL),
        "determinism": "no random numbers are drawn; identical config gives byte-identical CSV",
        "float_format": FLOAT_FMT,
        "units": "energies and rates in K, times in 1/K",
    }
    manifest.update(extra)
    path = out / "manifest.yaml"
    path.write_text(yaml.safe_dump(_plain(manifest), sort_keys=True))
    return path


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _table(out: Path, name: str, header: list[str], worker, jobs, threads, convergence, column) -> Path:
    if convergence:
        worker = _Converged(worker, column)
        header = header + [f"{header[column]}_convergence_rel"]
    path = out / name
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        _run_rows(worker, jobs, threads, w, len(header), fh)
    return path


def cmd_spectrum(cfg, out: Path, threads: int, convergence: bool) -> list[str]:
    alpha = math.sqrt(cfg["system"]["alpha2"])
    deltas = [float(d) for d in _grid(cfg["system"]["delta_over_K"], "system.delta_over_K")]
    n_pairs = cfg["spectrum"]["n_pairs"]
    worst = SystemParams(alpha, max(max(deltas), 0.0))
    basis = _basis(worst, cfg["truncation"]["fock_dim"], 2 * n_pairs + 12)
    sp = pair_spacing_sweep(alpha, deltas, n_pairs, basis)
    big = pair_spacing_sweep(alpha, deltas, n_pairs, basis.enlarged(DEFAULT_TOL.convergence_scale)) if convergence else None
    header = ["delta_over_K", "n", "delta_n_over_K"] + (["abs_change"] if convergence else [])
    path = out / "spectrum.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, d in enumerate(deltas):
            for n in range(n_pairs):
                row = [d, n, sp[i, n]] + ([abs(sp[i, n] - big[i, n])] if convergence else [])
                w.writerow([_fmt(v) for v in row])
    return [path.name]


def cmd_excursion(cfg, out, threads, convergence):
    jobs = [(pt, cfg, 1.0) for pt in _points(cfg)]
    header = ["nbar", "delta_over_K", "alpha", "gamma_S_over_K", "fit_amplitude", "fit_residual_rms"]
    return [_table(out, "excursion.csv", header, _excursion_row, jobs, threads, convergence, 3).name]


def cmd_steadystate(cfg, out, threads, convergence):
    jobs = [(pt, cfg, 1.0) for pt in _points(cfg)]
    header = ["nbar", "delta_over_K", "pair_index", "parity", "population", "nbar_ex"]
    return [_table(out, "steadystate.csv", header, _steady_rows, jobs, threads, convergence, 4).name]


def cmd_colored(cfg, out, threads, convergence):
    jobs = [(pt, cfg, 1.0) for pt in _points(cfg)]
    header = ["nbar", "delta_over_K", "n_filters", "kappa_eng_over_K", "delta_f_over_K", "gamma_bitflip_over_K", "leakage_colored", "leakage_uncolored"]
    return [_table(out, "colored.csv", header, _colored_row, jobs, threads, convergence, 5).name]


def cmd_estimate(cfg, out, threads, convergence):
    jobs = [(pt, cfg, 1.0) for pt in _points(cfg)]
    header = ["nbar", "delta_over_K", "kappa_l_over_K", "gamma_perturbative_over_K", "gamma_formula_over_K", "gamma_simulated_over_K"]
    return [_table(out, "estimate.csv", header, _estimate_row, jobs, threads, convergence, 3).name]


def cmd_gate(cfg, out, threads, convergence):
    if convergence:
        log.warning("--check-convergence is not available for gate runs; ignored")
    g = cfg["gate"]
    Ts = [float(T) for T in _grid(g["T_in_inv_K"], "gate.T_in_inv_K")]
    if g["kind"] == "zeno":
        jobs = [
            ((T, None if k is None else float(k), int(M)), cfg)
            for k in _grid(g["kappa_eng_over_K"], "gate.kappa_eng_over_K")
            for M in (_grid(g["modes"], "gate.modes") if k is not None else [0])
            for T in Ts
        ]
        header = ["T_in_inv_K", "p_Z_NA", "kappa_eng_over_K", "n_filters", "p_Z_NA_codespace", "leakage"]
    elif g["kind"] == "x":
        jobs = [((T, None, 0), cfg) for T in Ts]
        header = ["T_in_inv_K", "fidelity", "infidelity"]
    else:
        jobs = [((T, None, 0), cfg) for T in Ts]
        header = ["T_in_inv_K", "fidelity_00", "fidelity_01", "fidelity_10", "fidelity_11", "fidelity_min"]
    return [_table(out, f"gate_{g['kind']}.csv", header, _gate_row, jobs, threads, False, 1).name]


def cmd_wigner(cfg, out, threads, convergence):
    from .wigner import wigner, write_csv, write_svg

    w = cfg["wigner"]
    p = _params(float(cfg["system"]["nbar"]), float(cfg["system"]["delta_over_K"]))
    basis = _basis(p, cfg["truncation"]["fock_dim"], 2)
    if w["state"] == "coherent":
        state = coherent(p.alpha, basis)
    else:
        code = code_states(diagonalize(p, basis, n_levels=2))
        state = {"code0": code.ket0, "code1": code.ket1, "plus": code.ket_plus, "minus": code.ket_minus}[w["state"]]
    grid = wigner(state, tuple(w["x_range"]), tuple(w["p_range"]), w["resolution"])
    files = [write_csv(grid, out / "wigner.csv").name]
    if w["svg"]:
        files.append(write_svg(grid, out / "wigner.svg", title=f"{w['state']} nbar={cfg['system']['nbar']}").name)
    return files


HANDLERS = {
    "spectrum": cmd_spectrum,
    "excursion": cmd_excursion,
    "steadystate": cmd_steadystate,
    "colored": cmd_colored,
    "gate": cmd_gate,
    "wigner": cmd_wigner,
    "estimate": cmd_estimate,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="detuned-kerr", description="Detuned Kerr cat simulations")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="YAML config or an earlier manifest.yaml")
    ap.add_argument("--out", default=".", help="output directory (default: current)")
    ap.add_argument("--threads", type=int, default=None, help="worker processes (default: all cores)")
    ap.add_argument("--check-convergence", action="store_true", help="rerun each point with a 1.25x Fock space")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: Optional[Iterable[str]] = None) -> int:
    args = build_parser().parse_args(None if argv is None else list(argv))
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        raw = load_config(args.config)
        cfg = resolve_config(args.command, raw)
        convergence = args.check_convergence or bool(isinstance(raw, dict) and raw.get("check_convergence"))
        threads = args.threads if args.threads is not None else (os.cpu_count() or 1)
        if threads < 1:
            raise ConfigError("--threads must be at least 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    status, extra, outputs = EXIT_OK, {}, []
    try:
        outputs = HANDLERS[args.command](cfg, out, threads, convergence)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        status, extra = EXIT_NUMERIC, {"failure": str(exc)}
    _write_manifest(out, args.command, cfg, outputs, convergence, extra)
    return status


if __name__ == "__main__":
    sys.exit(main())
