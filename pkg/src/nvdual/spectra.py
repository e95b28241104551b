"""Sweep orchestration: ODMR spectra, strain ensembles, RF/Zeeman maps.

Every spectrum point is an independent steady-state simulation, so sweeps
parallelize over a process pool; results are assembled by index and are
bit-identical for any worker count.  Contrast is reported positive for
fluorescence dips (baseline minus driven value, baseline taken once with
the MW probe off).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from .dynamics import EvolutionSettings, time_averaged_fluorescence
from .model import DriveConfig, FieldVector, NvParameters, build_level_model, orientation_projections

#: RF antenna calibration: drive amplitude in volts per Rabi frequency (Hz).
RABI_PER_VOLT = 0.225e6


def volts_to_rabi(volts: float) -> float:
    """RF amplitude in volts to longitudinal Rabi frequency in Hz."""
    return volts * RABI_PER_VOLT


@dataclass
class Spectrum:
    """Contrast versus MW frequency plus the full parameter record."""

    mw_frequencies: np.ndarray
    contrast: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.mw_frequencies = np.asarray(self.mw_frequencies, dtype=float)
        self.contrast = np.asarray(self.contrast, dtype=float)
        if self.mw_frequencies.shape != self.contrast.shape:
            raise ValueError("mw_frequencies and contrast must have equal length")
        if self.mw_frequencies.size >= 2 and not np.all(np.diff(self.mw_frequencies) > 0):
            raise ValueError("mw_frequencies must be strictly increasing")


@dataclass(frozen=True)
class StrainDistribution:
    """Half-normal strain ensemble: weights exp(-E^2 / 2 sigma^2) on a uniform grid."""

    sigma: float = 5.0e6
    e_min: float = 0.0
    e_max: float = 15.0e6
    n_points: int = 16

    def __post_init__(self):
        if self.e_min < 0 or self.e_max <= self.e_min or self.n_points < 2:
            raise ValueError("invalid strain distribution")

    def grid(self) -> np.ndarray:
        return np.linspace(self.e_min, self.e_max, self.n_points)

    def weights(self, e_values=None) -> np.ndarray:
        e = self.grid() if e_values is None else np.asarray(e_values, dtype=float)
        w = np.exp(-(e**2) / (2.0 * self.sigma**2))
        return w / w.sum()


@dataclass
class SpectrumMap:
    """A stack of spectra indexed by one swept row quantity."""

    row_axis: list
    spectra: list
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.row_axis) != len(self.spectra):
            raise ValueError("row_axis and spectra must have equal length")


def default_mw_grid(center: float = 2.87e9, half_span: float = 30e6,
                    n_points: int = 241) -> np.ndarray:
    return np.linspace(center - half_span, center + half_span, n_points)


def _simulate_point(task):
    params, drives, settings, fvec = task
    model = build_level_model(params, drives, fvec)
    return time_averaged_fluorescence(model, drives, settings)


def _run_tasks(tasks, workers: int):
    if workers <= 1 or len(tasks) < 2:
        return [_simulate_point(t) for t in tasks]
    chunk = max(1, len(tasks) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_simulate_point, tasks, chunksize=chunk))


def _metadata(params, drives, settings, fvec, extra=None) -> dict:
    meta = {
        "nv": asdict(params),
        "drive": asdict(drives),
        "evolution": asdict(settings),
        "field": asdict(fvec),
        "version": __version__,
    }
    if extra:
        meta.update(extra)
    return meta


def odmr_sweep(params: NvParameters, drives: DriveConfig, mw_frequencies,
               settings: EvolutionSettings, fvec: FieldVector = FieldVector(),
               workers: int = 1) -> Spectrum:
    """Contrast spectrum over the MW grid for one center / one strain value.

    contrast[i] = baseline - fluorescence(f_mw[i]) with the baseline taken
    once at omega_mw = 0 (it is independent of f_mw).
    """
    mw = np.asarray(mw_frequencies, dtype=float)
    if mw.size < 2:
        raise ValueError("need at least 2 MW frequencies")
    tasks = [(params, replace(drives, omega_mw=0.0), settings, fvec)]
    tasks += [(params, replace(drives, f_mw=f), settings, fvec) for f in mw]
    values = _run_tasks(tasks, workers)
    baseline = values[0]
    contrast = baseline - np.asarray(values[1:])
    meta = _metadata(params, drives, settings, fvec, {"baseline": baseline})
    return Spectrum(mw_frequencies=mw, contrast=contrast, metadata=meta)


def strain_average(per_strain_spectra, dist: StrainDistribution) -> Spectrum:
    """Weighted average of single-strain spectra over the strain ensemble.

    Weights are the half-normal density at the sampled strain values,
    renormalized to sum to 1 over the grid.
    """
    if not per_strain_spectra:
        raise ValueError("no spectra to average")
    e_values = np.array([e for e, _ in per_strain_spectra], dtype=float)
    grid = per_strain_spectra[0][1].mw_frequencies
    for _, s in per_strain_spectra:
        if s.mw_frequencies.shape != grid.shape or not np.allclose(s.mw_frequencies, grid):
            raise ValueError("mismatched MW grids in strain average")
    w = dist.weights(e_values)
    contrast = np.zeros_like(grid)
    for (e, s), wk in zip(per_strain_spectra, w):
        contrast += wk * s.contrast
    meta = dict(per_strain_spectra[0][1].metadata)
    meta.update({
        "strain": asdict(dist),
        "strain_values_hz": e_values.tolist(),
        "strain_weights": w.tolist(),
    })
    return Spectrum(mw_frequencies=grid.copy(), contrast=contrast, metadata=meta)


def ensemble_odmr(params: NvParameters, drives: DriveConfig, mw_frequencies,
                  dist: StrainDistribution, settings: EvolutionSettings,
                  fvec: FieldVector = FieldVector(), workers: int = 1) -> Spectrum:
    """Strain-ensemble ODMR spectrum (sweeps every strain grid point)."""
    mw = np.asarray(mw_frequencies, dtype=float)
    e_grid = dist.grid()
    tasks = []
    for e in e_grid:
        pe = replace(params, e_x=e, e_y=0.0)
        tasks.append((pe, replace(drives, omega_mw=0.0), settings, fvec))
        tasks += [(pe, replace(drives, f_mw=f), settings, fvec) for f in mw]
    values = _run_tasks(tasks, workers)
    per_strain = []
    stride = mw.size + 1
    for i, e in enumerate(e_grid):
        block = values[i * stride:(i + 1) * stride]
        contrast = block[0] - np.asarray(block[1:])
        meta = _metadata(replace(params, e_x=e, e_y=0.0), drives, settings, fvec,
                         {"baseline": block[0]})
        per_strain.append((e, Spectrum(mw_frequencies=mw, contrast=contrast, metadata=meta)))
    return strain_average(per_strain, dist)


def rf_frequency_map(params: NvParameters, drives: DriveConfig, f_rf_values,
                     mw_frequencies, dist: StrainDistribution,
                     settings: EvolutionSettings, workers: int = 1) -> SpectrumMap:
    """One strain-ensemble spectrum per RF frequency (f_rf = 0 rows are RF-off)."""
    rows = []
    for f_rf in f_rf_values:
        if f_rf > 0:
            d = replace(drives, f_rf=float(f_rf))
        else:
            d = replace(drives, omega_rf=0.0)
        rows.append(ensemble_odmr(params, d, mw_frequencies, dist, settings, workers=workers))
    return SpectrumMap(row_axis=list(f_rf_values), spectra=rows,
                       metadata={"row_quantity": "f_rf_hz"})


def rf_amplitude_map(params: NvParameters, drives: DriveConfig, omega_rf_values,
                     mw_frequencies, dist: StrainDistribution,
                     settings: EvolutionSettings, workers: int = 1) -> SpectrumMap:
    """One strain-ensemble spectrum per RF Rabi amplitude (Hz; use
    :func:`volts_to_rabi` for drive amplitudes given in volts)."""
    rows = []
    for orf in omega_rf_values:
        d = replace(drives, omega_rf=float(orf))
        rows.append(ensemble_odmr(params, d, mw_frequencies, dist, settings, workers=workers))
    return SpectrumMap(row_axis=list(omega_rf_values), spectra=rows,
                       metadata={"row_quantity": "omega_rf_hz"})


def zeeman_map(params: NvParameters, drives: DriveConfig, b_magnitudes,
               mw_frequencies, dist: StrainDistribution,
               settings: EvolutionSettings, workers: int = 1,
               aligned_only: bool = False) -> SpectrumMap:
    """Ensemble spectra versus external field magnitude along (1,1,1).

    Each field value is resolved into the four NV orientation classes; the
    class spectra are strain-averaged and combined with weights 1 (aligned)
    to 3 (misaligned), or the aligned class alone if ``aligned_only``.
    Orientation classes with identical NV-frame fields (up to the +/-z
    relabeling symmetry) are simulated once.
    """
    unit = 1.0 / math.sqrt(3.0)
    rows = []
    for b in b_magnitudes:
        b_lab = FieldVector(bx=b * unit, by=b * unit, bz=b * unit)
        classes = orientation_projections(b_lab)
        if aligned_only:
            classes = classes[:1]
        groups = {}
        for cl in classes:
            key = (round(abs(cl.bz) * 1e9), round(cl.bx * 1e9))
            groups.setdefault(key, [0, cl])[0] += 1
        total = sum(g[0] for g in groups.values())
        contrast = None
        for count, cl in groups.values():
            spec = ensemble_odmr(params, drives, mw_frequencies, dist, settings,
                                 fvec=FieldVector(bx=cl.bx, by=cl.by, bz=abs(cl.bz)),
                                 workers=workers)
            part = (count / total) * spec.contrast
            contrast = part if contrast is None else contrast + part
        meta = _metadata(params, drives, settings, b_lab,
                         {"b_magnitude_t": float(b), "aligned_only": aligned_only,
                          "strain": asdict(dist)})
        rows.append(Spectrum(mw_frequencies=np.asarray(mw_frequencies, dtype=float),
                             contrast=contrast, metadata=meta))
    return SpectrumMap(row_axis=list(b_magnitudes), spectra=rows,
                       metadata={"row_quantity": "b_tesla_along_111"})


def difference_spectrum(s: Spectrum, reference: Spectrum) -> Spectrum:
    """Pointwise contrast difference s - reference on a common MW grid."""
    if s.mw_frequencies.shape != reference.mw_frequencies.shape or \
            not np.allclose(s.mw_frequencies, reference.mw_frequencies):
        raise ValueError("difference_spectrum requires a common MW grid")
    meta = {"minuend": s.metadata, "subtrahend": reference.metadata}
    return Spectrum(mw_frequencies=s.mw_frequencies.copy(),
                    contrast=s.contrast - reference.contrast, metadata=meta)


def extract_splitting(s: Spectrum, window):
    """Locate the two largest local maxima inside ``window`` = (lo, hi) Hz.

    Peak positions are refined by 3-point quadratic interpolation around the
    grid maxima.  Returns (f_minus, f_plus) ordered, or None when fewer than
    two local maxima are resolved.
    """
    lo, hi = window
    f = s.mw_frequencies
    y = s.contrast
    idx = [i for i in range(1, f.size - 1)
           if lo <= f[i] <= hi and y[i] > y[i - 1] and y[i] >= y[i + 1]]
    if len(idx) < 2:
        return None
    idx.sort(key=lambda i: y[i], reverse=True)
    peaks = []
    for i in idx[:2]:
        denom = y[i - 1] - 2.0 * y[i] + y[i + 1]
        shift = 0.5 * (y[i - 1] - y[i + 1]) / denom if denom != 0 else 0.0
        step = f[i + 1] - f[i]
        peaks.append(f[i] + shift * step)
    f_minus, f_plus = sorted(peaks)
    return (f_minus, f_plus)
