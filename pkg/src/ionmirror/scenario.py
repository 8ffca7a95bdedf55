"""Scenario runner: configuration, full pipeline, parameter sweeps and result emission.

All physics is run in dimensionless form with Omega_m = 1; eta G is set by
``etaG_over_Omega`` and every rate and time is a ratio against those.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from functools import lru_cache
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from .analysis import entanglement_analytic, entanglement_numeric, witness
from .fock import FIELD_1, FIELD_2, ION_VIBRATION, MIRROR, fidelity
from .interferometer import Detector, run_protocol
from .ion import IonParams, Sideband, closed_form_ion_state, ion_layout, prepare_ion
from .optomech import OmParams, om_layout, prepare_om

LAMB_DICKE_ETA = 0.1


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ScenarioConfig:
    sideband: str = "red"
    theta: float = math.pi / 4
    gamma_over_etaG: float = 0.0
    Gamma_over_Omega: float = 0.0
    kappa: float = 1.0
    alpha0: complex = 1.0
    detection_time_fraction: float = 0.0
    outcome: str = "D_B"
    truncation_overrides: Optional[Mapping[str, int]] = None
    seed: int = 0
    #: eta G / Omega_m; the two arms share one clock
    etaG_over_Omega: float = 1.0
    #: detection window t_D in units of 1/Omega_m
    detection_window: float = 0.0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        try:
            Sideband(self.sideband)
        except ValueError:
            raise ConfigError("sideband", f"must be 'red' or 'blue', got {self.sideband!r}") from None
        if self.outcome not in (Detector.D_A.value, Detector.D_B.value):
            raise ConfigError("outcome", f"must be 'D_A' or 'D_B', got {self.outcome!r}")
        for name in ("theta", "gamma_over_etaG", "Gamma_over_Omega", "kappa",
                     "detection_time_fraction", "etaG_over_Omega", "detection_window"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
                raise ConfigError(name, f"must be a finite real number, got {value!r}")
        if not 0.0 <= self.theta <= math.pi / 2 + 1e-15:
            raise ConfigError("theta", f"must lie in [0, pi/2], got {self.theta}")
        for name in ("gamma_over_etaG", "Gamma_over_Omega", "kappa", "detection_window"):
            if getattr(self, name) < 0:
                raise ConfigError(name, f"must be nonnegative, got {getattr(self, name)}")
        if not self.etaG_over_Omega > 0:
            raise ConfigError("etaG_over_Omega", "must be positive")
        if not 0.0 <= self.detection_time_fraction <= 1.0:
            raise ConfigError("detection_time_fraction", "must lie in [0, 1]")
        if not isinstance(self.alpha0, (int, float, complex)) or not np.isfinite(complex(self.alpha0)):
            raise ConfigError("alpha0", f"must be a finite complex number, got {self.alpha0!r}")
        if self.truncation_overrides:
            for label, dim in self.truncation_overrides.items():
                if label not in (FIELD_1, ION_VIBRATION, FIELD_2, MIRROR):
                    raise ConfigError("truncation_overrides", f"unknown mode {label!r}")
                if not isinstance(dim, int) or dim < 2:
                    raise ConfigError("truncation_overrides", f"{label} dimension must be an integer >= 2")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError("seed", "must be an integer")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown configuration field")
        kwargs = {}
        for key, value in data.items():
            kwargs[key] = _coerce(key, value)
        return cls(**kwargs)

    def ion_params(self) -> IonParams:
        etaG = self.etaG_over_Omega
        return IonParams(
            G=etaG / LAMB_DICKE_ETA, eta=LAMB_DICKE_ETA,
            gamma=self.gamma_over_etaG * etaG, theta=self.theta,
        )

    def om_params(self) -> OmParams:
        return OmParams(Omega_m=1.0, g=self.kappa, Gamma=self.Gamma_over_Omega, alpha0=complex(self.alpha0))

    @property
    def detection_time(self) -> float:
        return self.detection_time_fraction * self.detection_window


def _coerce(key: str, value: Any) -> Any:
    if key == "alpha0":
        if isinstance(value, str):
            try:
                return complex(value.replace(" ", ""))
            except ValueError:
                raise ConfigError(key, f"cannot parse complex value {value!r}") from None
        if isinstance(value, (list, tuple)) and len(value) == 2:
            return complex(float(value[0]), float(value[1]))
        return value
    if key in ("sideband", "outcome"):
        return str(value)
    if key == "seed":
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(key, f"must be an integer, got {value!r}") from None
    if key == "truncation_overrides":
        if value in (None, "", {}):
            return None
        if isinstance(value, str):
            try:
                value = json.loads(value)
            except json.JSONDecodeError:
                raise ConfigError(key, "must be a JSON object of mode label -> dimension") from None
        if not isinstance(value, Mapping):
            raise ConfigError(key, "must map mode labels to dimensions")
        return dict(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            raise ConfigError(key, f"must be a number, got {value!r}") from None
    if isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    return value


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple

    def __post_init__(self):
        values = tuple(self.values)
        object.__setattr__(self, "values", values)
        if len(values) < 1:
            raise ConfigError("sweep", "needs at least one value")
        if len(values) > 1 and all(isinstance(v, (int, float)) for v in values):
            diffs = np.diff(np.asarray(values, dtype=float))
            if not (np.all(diffs > 0) or np.all(diffs < 0)):
                raise ConfigError("sweep", "grid values must be strictly monotone")

    @classmethod
    def grid(cls, parameter: str, start: float, stop: float, count: int, scale: str = "linear") -> "SweepSpec":
        if count < 1:
            raise ConfigError("sweep", "count must be >= 1")
        if scale == "linear":
            values = np.linspace(start, stop, count)
        elif scale == "log":
            if start <= 0 or stop <= 0:
                raise ConfigError("sweep", "log grid needs positive endpoints")
            values = np.geomspace(start, stop, count)
        else:
            raise ConfigError("sweep", f"unknown scale {scale!r}")
        return cls(parameter, tuple(float(v) for v in values))


@dataclass
class ResultRow:
    sideband: str
    theta: float
    gamma_over_etaG: float
    Gamma_over_Omega: float
    kappa: float
    alpha0_real: float
    alpha0_imag: float
    detection_time_fraction: float
    detection_window: float
    etaG_over_Omega: float
    outcome: str
    truncation_overrides: str
    seed: int
    success_probability_preparation: float
    prob_D_A: float
    prob_D_B: float
    prob_none: float
    prob_multi: float
    postselection_probability: float
    entropy_bits: Optional[float]
    negativity: Optional[float]
    overlap_s_magnitude: Optional[float]
    fidelity_closed_form_vs_numeric: float
    witness_vacuum_probability: Optional[float]
    empty_postselection: bool = False


ROW_FIELDS = tuple(f.name for f in fields(ResultRow))


def _layouts(cfg: ScenarioConfig, op: OmParams):
    over = dict(cfg.truncation_overrides or {})
    ion_l = ion_layout(over.get(FIELD_1, 3), over.get(ION_VIBRATION, 3))
    om_l = om_layout(op, over.get(FIELD_2, 3), over.get(MIRROR))
    return ion_l, om_l


@lru_cache(maxsize=64)
def _prepared_om(op: OmParams, layout):
    return prepare_om(op, layout=layout)


@lru_cache(maxsize=64)
def _prepared_ion(ip: IonParams, sideband: str, layout):
    return prepare_ion(ip, Sideband(sideband), layout=layout)


def run_scenario(cfg: ScenarioConfig) -> ResultRow:
    """Prepare both arms, decay to the detection time, interfere, post-select and analyse."""
    ip, op = cfg.ion_params(), cfg.om_params()
    ion_l, om_l = _layouts(cfg, op)
    ion = _prepared_ion(ip, cfg.sideband, ion_l)
    om = _prepared_om(op, om_l)
    result = run_protocol(ion, om, t=cfg.detection_time, outcome=cfg.outcome)
    closed = closed_form_ion_state(ip, Sideband(cfg.sideband), layout=ion_l)
    probs = result.probabilities
    alpha0 = complex(cfg.alpha0)
    row = dict(
        sideband=cfg.sideband,
        theta=cfg.theta,
        gamma_over_etaG=cfg.gamma_over_etaG,
        Gamma_over_Omega=cfg.Gamma_over_Omega,
        kappa=cfg.kappa,
        alpha0_real=alpha0.real,
        alpha0_imag=alpha0.imag,
        detection_time_fraction=cfg.detection_time_fraction,
        detection_window=cfg.detection_window,
        etaG_over_Omega=cfg.etaG_over_Omega,
        outcome=cfg.outcome,
        truncation_overrides=json.dumps(dict(cfg.truncation_overrides), sort_keys=True)
        if cfg.truncation_overrides else "",
        seed=cfg.seed,
        success_probability_preparation=ion.success_probability,
        prob_D_A=probs[Detector.D_A],
        prob_D_B=probs[Detector.D_B],
        prob_none=probs[Detector.NONE],
        prob_multi=probs[Detector.MULTI],
        postselection_probability=result.outcome.probability,
        fidelity_closed_form_vs_numeric=fidelity(closed.state, ion.state),
    )
    if result.empty:
        return ResultRow(**row, entropy_bits=None, negativity=None, overlap_s_magnitude=None,
                         witness_vacuum_probability=None, empty_postselection=True)
    report = entanglement_numeric(result.state, overlap=result.hybrid.overlap)
    w = witness(result.state, alpha0)
    return ResultRow(
        **row,
        entropy_bits=report.entropy_bits,
        negativity=report.negativity,
        overlap_s_magnitude=abs(result.hybrid.overlap),
        witness_vacuum_probability=w.post_displacement_vacuum_probability,
    )


def analytic_report(cfg: ScenarioConfig):
    """Entanglement of the two-branch analytic state for ``cfg``."""
    ip, op = cfg.ion_params(), cfg.om_params()
    ion_l, om_l = _layouts(cfg, op)
    result = run_protocol(_prepared_ion(ip, cfg.sideband, ion_l), _prepared_om(op, om_l),
                          t=cfg.detection_time, outcome=cfg.outcome)
    return entanglement_analytic(result.hybrid) if not result.empty else None


SWEEPABLE = tuple(
    f.name for f in fields(ScenarioConfig) if f.name not in ("truncation_overrides",)
)


def run_sweep(cfg: ScenarioConfig, sweep: SweepSpec, workers: int = 1) -> list:
    if sweep.parameter not in SWEEPABLE:
        raise ConfigError("sweep", f"unknown parameter {sweep.parameter!r}; choose from {SWEEPABLE}")
    configs = [
        dataclasses.replace(cfg, **{sweep.parameter: _coerce(sweep.parameter, v)})
        for v in sweep.values
    ]
    if workers <= 1:
        return [run_scenario(c) for c in configs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_scenario, configs))


def _render(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def emit(rows: Sequence[ResultRow], fmt: str = "csv", destination=None) -> None:
    """Write rows as CSV (17 significant digits) or a JSON array to a path or stream."""
    if not rows:
        raise ValueError("emit needs at least one row")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(ROW_FIELDS)
        for row in rows:
            writer.writerow([_render(getattr(row, name)) for name in ROW_FIELDS])
        text = buf.getvalue()
    elif fmt == "json":
        text = json.dumps([dataclasses.asdict(r) for r in rows], indent=1) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if destination is None:
        sys.stdout.write(text)
    elif hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
