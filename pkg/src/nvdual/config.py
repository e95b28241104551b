"""Run-configuration parsing, validation and the metadata sidecar format.

Config files are INI-style ``key = value`` under dotted sections, with one
``schema_version`` field.  Unknown sections or keys are hard errors, so an
experiment definition can always be diffed and replayed.  The ``.meta``
sidecar written next to every output is itself a valid config file echoing
every resolved parameter (including defaults) plus a [result] section with
the content hash of the produced files.
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, field

from .dynamics import EvolutionSettings
from .model import DriveConfig, FieldVector, NvParameters
from .spectra import StrainDistribution

SCHEMA_VERSION = 1

MODES = (
    "odmr",
    "rf-frequency-map",
    "rf-amplitude-map",
    "zeeman-map",
    "levels",
    "analytic-table",
)


class ConfigError(ValueError):
    """Invalid or unknown configuration content (CLI exit code 2)."""


def _float_list(text: str):
    try:
        return [float(tok) for tok in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"expected a list of numbers, got {text!r}") from exc


def _bool(text: str):
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


# section -> key -> (parser, default); defaults of None mean "mode decides".
_SCHEMA = {
    "run": {
        "schema_version": (int, SCHEMA_VERSION),
        "mode": (str, "odmr"),
        "output": (str, "nvdual_out.csv"),
        "workers": (int, 1),
    },
    "sweep": {
        "start": (float, 2.84e9),
        "stop": (float, 2.90e9),
        "points": (int, 241),
    },
    "rows": {
        "values": (_float_list, []),
        "units": (str, "hz"),
    },
    "nv": {key: (float, default) for key, default in asdict(NvParameters()).items()},
    "drive": {key: (float, default) for key, default in asdict(DriveConfig()).items()},
    "field": {key: (float, 0.0) for key in ("bx", "by", "bz")},
    "strain": {
        "enabled": (_bool, True),
        "sigma": (float, 5.0e6),
        "e_min": (float, 0.0),
        "e_max": (float, 15.0e6),
        "n_points": (int, 16),
    },
    "evolution": {
        "dt_max": (float, EvolutionSettings().dt_max),
        "rel_tol": (float, EvolutionSettings().rel_tol),
        "transient_time": (float, EvolutionSettings().transient_time),
        "average_periods": (int, EvolutionSettings().average_periods),
        "dephasing_rate": (float, EvolutionSettings().dephasing_rate),
    },
    "zeeman": {
        "aligned_only": (_bool, False),
    },
    "analytic": {
        "e_strain": (float, 2.0e6),
        "a_par": (float, NvParameters().a_par),
        "f_rf": (float, 5.0e6),
        "n_max": (int, 3),
    },
    # Written by the CLI into sidecars; accepted and ignored on input so a
    # sidecar can be replayed as a config.
    "result": {
        "content_hash": (str, ""),
        "version": (str, ""),
        "files": (str, ""),
    },
}


@dataclass
class RunConfig:
    """Fully resolved run description (every default made explicit)."""

    mode: str
    output: str
    workers: int
    sweep_start: float
    sweep_stop: float
    sweep_points: int
    row_values: list
    row_units: str
    params: NvParameters
    drives: DriveConfig
    fvec: FieldVector
    strain_enabled: bool
    strain: StrainDistribution
    settings: EvolutionSettings
    aligned_only: bool
    analytic: dict = field(default_factory=dict)

    def mw_grid(self):
        import numpy as np

        return np.linspace(self.sweep_start, self.sweep_stop, self.sweep_points)


def parse_config(path: str) -> RunConfig:
    """Parse and validate a config file; raise ConfigError on any problem."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc

    values = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in cp.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown config key {section}.{key}")
            parser, _ = _SCHEMA[section][key]
            try:
                values[(section, key)] = parser(raw)
            except ConfigError:
                raise
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"invalid value for {section}.{key}: {raw!r}") from exc

    def get(section, key):
        if (section, key) in values:
            return values[(section, key)]
        return _SCHEMA[section][key][1]

    version = get("run", "schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unknown run.schema_version {version} (supported: {SCHEMA_VERSION})")
    mode = get("run", "mode")
    if mode not in MODES:
        raise ConfigError(f"unknown run.mode {mode!r} (choose from {', '.join(MODES)})")
    workers = get("run", "workers")
    if workers < 1:
        raise ConfigError("run.workers must be >= 1")
    points = get("sweep", "points")
    if points < 2:
        raise ConfigError("sweep.points must be >= 2")
    if get("sweep", "stop") <= get("sweep", "start"):
        raise ConfigError("sweep.stop must exceed sweep.start")
    row_units = get("rows", "units").lower()
    if row_units not in ("hz", "volts"):
        raise ConfigError("rows.units must be 'hz' or 'volts'")
    row_values = list(get("rows", "values"))
    if mode in ("rf-frequency-map", "rf-amplitude-map", "zeeman-map") and not row_values:
        raise ConfigError(f"mode {mode} requires rows.values")

    try:
        params = NvParameters(**{k: get("nv", k) for k in _SCHEMA["nv"]})
        drives = DriveConfig(**{k: get("drive", k) for k in _SCHEMA["drive"]})
        fvec = FieldVector(**{k: get("field", k) for k in _SCHEMA["field"]})
        strain = StrainDistribution(
            sigma=get("strain", "sigma"), e_min=get("strain", "e_min"),
            e_max=get("strain", "e_max"), n_points=get("strain", "n_points"),
        )
        settings = EvolutionSettings(
            dt_max=get("evolution", "dt_max"), rel_tol=get("evolution", "rel_tol"),
            transient_time=get("evolution", "transient_time"),
            average_periods=get("evolution", "average_periods"),
            dephasing_rate=get("evolution", "dephasing_rate"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    return RunConfig(
        mode=mode,
        output=get("run", "output"),
        workers=workers,
        sweep_start=get("sweep", "start"),
        sweep_stop=get("sweep", "stop"),
        sweep_points=points,
        row_values=row_values,
        row_units=row_units,
        params=params,
        drives=drives,
        fvec=fvec,
        strain_enabled=get("strain", "enabled"),
        strain=strain,
        settings=settings,
        aligned_only=get("zeeman", "aligned_only"),
        analytic={k: get("analytic", k) for k in _SCHEMA["analytic"]},
    )


def resolved_sections(cfg: RunConfig) -> dict:
    """Every parameter of a run, fully resolved, as config-file sections."""
    return {
        "run": {
            "schema_version": SCHEMA_VERSION,
            "mode": cfg.mode,
            "output": cfg.output,
            "workers": cfg.workers,
        },
        "sweep": {
            "start": repr(cfg.sweep_start),
            "stop": repr(cfg.sweep_stop),
            "points": cfg.sweep_points,
        },
        "rows": {
            "values": " ".join(repr(v) for v in cfg.row_values),
            "units": cfg.row_units,
        },
        "nv": {k: repr(v) for k, v in asdict(cfg.params).items()},
        "drive": {k: repr(v) for k, v in asdict(cfg.drives).items()},
        "field": {k: repr(v) for k, v in asdict(cfg.fvec).items()},
        "strain": {
            "enabled": cfg.strain_enabled,
            "sigma": repr(cfg.strain.sigma),
            "e_min": repr(cfg.strain.e_min),
            "e_max": repr(cfg.strain.e_max),
            "n_points": cfg.strain.n_points,
        },
        "evolution": {k: repr(v) for k, v in asdict(cfg.settings).items()},
        "zeeman": {"aligned_only": cfg.aligned_only},
        "analytic": {k: repr(v) if isinstance(v, float) else v
                     for k, v in cfg.analytic.items()},
    }


def write_sidecar(path: str, cfg: RunConfig, result: dict) -> None:
    """Write the .meta sidecar: resolved config plus a [result] section."""
    cp = configparser.ConfigParser()
    for section, entries in resolved_sections(cfg).items():
        cp[section] = {k: str(v) for k, v in entries.items()}
    cp["result"] = {k: str(v) for k, v in result.items()}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        cp.write(fh)
