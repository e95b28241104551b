"""Command-line front end: run modes, CSV serialization, self-test.

Usage:  nvdual --config run.cfg [--out PATH] [--workers N] [--seed-check]

Exit codes: 0 success, 2 config validation failure, 3 numeric invariant
violation during integration.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import os
import sys

import numpy as np

from . import __version__
from .analytic import (
    TwoLevelParams,
    dressed_model,
    eigenlevels_vs_field,
    lzt_resonance,
    predicted_splitting,
    sideband_model,
)
from .config import ConfigError, RunConfig, parse_config, write_sidecar
from .dynamics import LindbladIntegrityError
from .spectra import (
    Spectrum,
    ensemble_odmr,
    odmr_sweep,
    rf_amplitude_map,
    rf_frequency_map,
    volts_to_rabi,
    zeeman_map,
)


def _write_csv(path: str, header, rows) -> str:
    """Write an RFC-4180-style CSV with LF endings; return its sha256 hex."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _spectrum_rows(spec: Spectrum):
    return [[f"{f:.6f}", f"{c:.12e}"] for f, c in zip(spec.mw_frequencies, spec.contrast)]


_SPECTRUM_HEADER = ["mw_frequency (Hz)", "contrast (dimensionless)"]


def _run_spectrum_mode(cfg: RunConfig) -> dict:
    mw = cfg.mw_grid()
    if cfg.strain_enabled:
        spec = ensemble_odmr(cfg.params, cfg.drives, mw, cfg.strain, cfg.settings,
                             fvec=cfg.fvec, workers=cfg.workers)
    else:
        spec = odmr_sweep(cfg.params, cfg.drives, mw, cfg.settings,
                          fvec=cfg.fvec, workers=cfg.workers)
    digest = _write_csv(cfg.output, _SPECTRUM_HEADER, _spectrum_rows(spec))
    return {"files": cfg.output, "content_hash": digest}


def _row_path(output: str, index: int) -> str:
    stem, ext = os.path.splitext(output)
    return f"{stem}_row{index:02d}{ext or '.csv'}"


def _run_map_mode(cfg: RunConfig) -> dict:
    mw = cfg.mw_grid()
    if cfg.mode == "rf-frequency-map":
        smap = rf_frequency_map(cfg.params, cfg.drives, cfg.row_values, mw,
                                cfg.strain, cfg.settings, workers=cfg.workers)
        row_name = "f_rf (Hz)"
        row_values = cfg.row_values
    elif cfg.mode == "rf-amplitude-map":
        if cfg.row_units == "volts":
            amplitudes = [volts_to_rabi(v) for v in cfg.row_values]
        else:
            amplitudes = list(cfg.row_values)
        smap = rf_amplitude_map(cfg.params, cfg.drives, amplitudes, mw,
                                cfg.strain, cfg.settings, workers=cfg.workers)
        row_name = "omega_rf (Hz)"
        row_values = amplitudes
    else:  # zeeman-map
        smap = zeeman_map(cfg.params, cfg.drives, cfg.row_values, mw,
                          cfg.strain, cfg.settings, workers=cfg.workers,
                          aligned_only=cfg.aligned_only)
        row_name = "b_field (T)"
        row_values = cfg.row_values
    index_rows = []
    hasher = hashlib.sha256()
    files = []
    for i, (value, spec) in enumerate(zip(row_values, smap.spectra)):
        row_file = _row_path(cfg.output, i)
        digest = _write_csv(row_file, _SPECTRUM_HEADER, _spectrum_rows(spec))
        index_rows.append([i, f"{value:.6f}", os.path.basename(row_file), digest])
        hasher.update(bytes.fromhex(digest))
        files.append(row_file)
    index_digest = _write_csv(cfg.output, ["row_index", row_name, "file", "sha256"],
                              index_rows)
    hasher.update(bytes.fromhex(index_digest))
    files.append(cfg.output)
    return {"files": " ".join(files), "content_hash": hasher.hexdigest()}


def _run_levels_mode(cfg: RunConfig) -> dict:
    b_grid = np.linspace(cfg.sweep_start, cfg.sweep_stop, cfg.sweep_points)
    curves = eigenlevels_vs_field(cfg.params, cfg.params.e_x, b_grid)
    header = (["b_field (T)"]
              + [f"level_{j + 1} (Hz)" for j in range(9)]
              + [f"transition_{j + 1} (Hz)" for j in range(6)])
    rows = []
    for i in range(b_grid.size):
        rows.append([f"{b_grid[i]:.9e}"]
                    + [f"{v:.6f}" for v in curves.eigenvalues[i]]
                    + [f"{v:.6f}" for v in curves.transitions[i]])
    digest = _write_csv(cfg.output, header, rows)
    return {"files": cfg.output, "content_hash": digest}


def _run_analytic_mode(cfg: RunConfig) -> dict:
    n_max = int(cfg.analytic["n_max"])
    omega_grid = np.linspace(cfg.sweep_start, cfg.sweep_stop, cfg.sweep_points)
    header = (["omega_rf (Hz)", "delta (Hz)", "lzt_resonance (Hz)",
               "predicted_splitting (Hz)"]
              + [f"coupling_n{n:+d} (Hz)" for n in range(-n_max, n_max + 1)]
              + [f"sideband_{n}_offset (Hz)" for n in (1, 2, 3)]
              + [f"sideband_{n}_coupling (Hz)" for n in (1, 2, 3)])
    rows = []
    for omega_rf in omega_grid:
        p = TwoLevelParams(e_strain=cfg.analytic["e_strain"],
                           a_par=cfg.analytic["a_par"],
                           omega_rf=float(omega_rf), f_rf=cfg.analytic["f_rf"])
        dm = dressed_model(p, n_max=n_max)
        row = [f"{omega_rf:.6f}", f"{dm.delta:.6f}", f"{lzt_resonance(p):.6f}",
               f"{predicted_splitting(p):.6f}"]
        row += [f"{val:.6f}" for _, val in dm.couplings]
        offs, coups = zip(*(sideband_model(p, n) for n in (1, 2, 3)))
        row += [f"{v:.6f}" for v in offs] + [f"{v:.6f}" for v in coups]
        rows.append(row)
    digest = _write_csv(cfg.output, header, rows)
    return {"files": cfg.output, "content_hash": digest}


def run(config_path: str, out_override=None, workers_override=None) -> int:
    """Execute one configured run; returns the process exit code."""
    try:
        cfg = parse_config(config_path)
        if out_override:
            cfg.output = out_override
        if workers_override:
            if workers_override < 1:
                raise ConfigError("workers must be >= 1")
            cfg.workers = workers_override
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        if cfg.mode in ("odmr",):
            result = _run_spectrum_mode(cfg)
        elif cfg.mode in ("rf-frequency-map", "rf-amplitude-map", "zeeman-map"):
            result = _run_map_mode(cfg)
        elif cfg.mode == "levels":
            result = _run_levels_mode(cfg)
        else:
            result = _run_analytic_mode(cfg)
    except LindbladIntegrityError as exc:
        print(f"numeric invariant violation: {exc}", file=sys.stderr)
        return 3

    result["version"] = __version__
    write_sidecar(cfg.output + ".meta", cfg, result)
    print(f"wrote {result['files']} (sha256 {result['content_hash'][:16]}...)")
    return 0


def seed_check() -> int:
    """Run the built-in invariant self-tests and exit 0 on success."""
    import numpy.linalg as la

    from .dynamics import (EvolutionSettings, initial_state_unpolarized,
                           lindblad_rhs, time_averaged_fluorescence)
    from .model import DriveConfig, NvParameters, build_level_model
    from .spinops import expm, spin1_operators

    failures = 0

    def check(name, ok):
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failures += 0 if ok else 1

    s = spin1_operators()
    comm = s.sx @ s.sy - s.sy @ s.sx - 1j * s.sz
    check("spin-1 commutator [sx, sy] = i sz", np.max(np.abs(comm)) < 1e-12)
    casimir = s.sx @ s.sx + s.sy @ s.sy + s.sz @ s.sz - 2 * np.eye(3)
    check("spin-1 Casimir sx^2+sy^2+sz^2 = 2", np.max(np.abs(casimir)) < 1e-12)

    rng = np.random.default_rng(7)
    a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    check("expm inverse property", np.max(np.abs(expm(a) @ expm(-a) - np.eye(6))) < 1e-10)

    h = np.diag([0.0, 1.0, 3.0]).astype(complex)
    l_op = np.zeros((3, 3), complex)
    l_op[0, 2] = 1.0
    rho = np.eye(3, dtype=complex) / 3.0
    check("lindblad_rhs is traceless",
          abs(np.trace(lindblad_rhs(rho, h, [l_op]))) < 1e-12)

    p = NvParameters(e_x=2e6)
    d = DriveConfig(f_mw=2.872e9)
    m = build_level_model(p, d)
    st = EvolutionSettings(dt_max=4e-9, transient_time=2e-6, average_periods=2)
    v1 = time_averaged_fluorescence(m, d, st)
    v2 = time_averaged_fluorescence(m, d, st)
    check("steady-state point deterministic", v1 == v2)
    check("steady-state fluorescence in (0, 1)", 0.0 < v1 < 1.0)

    print("self-test:", "PASS" if failures == 0 else f"{failures} FAILURES")
    return 0 if failures == 0 else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nvdual",
        description="Dual-frequency (MW+RF) ODMR simulation of NV centers",
    )
    parser.add_argument("--config", help="path to the run configuration file")
    parser.add_argument("--out", help="override run.output from the config")
    parser.add_argument("--workers", type=int, help="override run.workers")
    parser.add_argument("--seed-check", action="store_true",
                        help="run the invariant self-test suite and exit")
    parser.add_argument("--version", action="version", version=f"nvdual {__version__}")
    args = parser.parse_args(argv)

    if args.seed_check:
        return seed_check()
    if not args.config:
        parser.error("--config is required (or use --seed-check)")
    return run(args.config, out_override=args.out, workers_override=args.workers)


if __name__ == "__main__":
    sys.exit(main())
