"""Workbench configuration: one JSON file, units explicit in every key."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from .circuit import CircuitParams, ResonatorBank
from .errors import ConfigError
from .lossmodel import DEFAULT_LOSS_TABLE, LossProfile
from .solver import SimulationSetup

SCHEMA_VERSION = 1


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ResonatorConfig(_Strict):
    f_res_ghz: float = Field(gt=0)
    c_res_pf: float = Field(gt=0)
    c_couple_ff: float = Field(ge=0)
    insertion_period: int = Field(10, ge=1)


class CircuitConfig(_Strict):
    n_cells: int = Field(3141, gt=0)
    c_ground_ff: float = Field(28.616, gt=0)
    i_critical_ua: float = Field(3.14, gt=0)
    c_junction_ff: float = Field(0.0, ge=0)
    tan_delta: float = Field(4.9e-3, ge=0)
    resonators: list[ResonatorConfig] = Field(
        default_factory=lambda: [
            ResonatorConfig(f_res_ghz=5.2815, c_res_pf=6.653, c_couple_ff=28.616),
            ResonatorConfig(f_res_ghz=8.169, c_res_pf=2.781, c_couple_ff=28.616),
        ]
    )


class PumpConfig(_Strict):
    f_ghz: list[float] = Field(default_factory=lambda: [5.2984, 8.109], min_length=2, max_length=2)
    p_nw: list[float] | None = Field(None, min_length=2, max_length=2)
    c_p_per_w: list[float] | None = Field(None, min_length=2, max_length=2)
    beta: list[float] | None = Field(None, min_length=2, max_length=2)

    @model_validator(mode="after")
    def _check(self):
        if not self.f_ghz[0] < self.f_ghz[1]:
            raise ValueError("pump frequencies must be increasing")
        if self.p_nw is not None and any(p < 0 for p in self.p_nw):
            raise ValueError("pump powers must be >= 0")
        if self.p_nw is not None and self.beta is None and self.c_p_per_w is None:
            raise ValueError("pump powers need c_p_per_w")
        return self


class LossTableRow(_Strict):
    temp_k: float = Field(gt=0)
    loss_db_total: float = Field(le=0)


class LossConfig(_Strict):
    kind: Literal["none", "constant", "distributed", "lumped_at_end", "saturable"] = "none"
    total_db: float = Field(0.0, le=0)
    pump_loss_db: float = Field(0.0, le=0)
    fridge_temp_k: float = Field(0.030, ge=0)
    out_of_range: Literal["warn", "clamp", "raise"] = "warn"
    loss_table: list[LossTableRow] = Field(
        default_factory=lambda: [LossTableRow(temp_k=t, loss_db_total=db) for t, db in DEFAULT_LOSS_TABLE]
    )


class SimulationConfig(_Strict):
    depth: int = Field(0, ge=0)
    rtol: float = Field(1e-10, gt=0)
    atol: float = Field(1e-12, gt=0)
    f_start_ghz: float = Field(4.0, gt=0)
    f_stop_ghz: float = Field(9.5, gt=0)
    f_step_ghz: float = Field(0.01, gt=0)
    f_signal_ghz: float | None = Field(None, gt=0)
    f_signal_grid_ghz: list[float] | None = None
    p2_grid_nw: list[float] | None = None
    theta_points: int = Field(361, ge=3)

    def freq_grid_hz(self):
        n = int(np.floor((self.f_stop_ghz - self.f_start_ghz) / self.f_step_ghz + 1e-9)) + 1
        return (self.f_start_ghz + self.f_step_ghz * np.arange(n)) * 1e9


class AnalysisConfig(_Strict):
    mode: Literal["single", "two_mode"] = "single"
    eta_meas: float = Field(0.06534, gt=0, le=1)
    eta_meas_low: float | None = Field(None, gt=0, le=1)
    eta_meas_high: float | None = Field(None, gt=0, le=1)
    n_bar: float = Field(1.4e-4, ge=0)
    phi_step_deg: float = Field(1.0, gt=0)


class CalibrationConfig(_Strict):
    freq_ghz: float = Field(6.7, gt=0)
    bandwidth_hz: float = Field(100.0, gt=0)
    qubit_freq_ghz: float | None = Field(None, gt=0)
    xi: float = Field(1.0, gt=0, le=1)
    p_rt_cal_dbm: float | None = None
    p_noise_rt_dbm: float | None = None
    reference_row: int = Field(0, ge=0)


class PathsConfig(_Strict):
    quadrature_data: str | None = None
    sntj_csv: str | None = None
    wqed_csv: str | None = None
    sntj_report: str | None = None
    wqed_report: str | None = None


class WorkbenchConfig(_Strict):
    schema_version: int = SCHEMA_VERSION
    circuit: CircuitConfig = Field(default_factory=CircuitConfig)
    pumps: PumpConfig = Field(default_factory=PumpConfig)
    loss: LossConfig = Field(default_factory=LossConfig)
    simulation: SimulationConfig = Field(default_factory=SimulationConfig)
    analysis: AnalysisConfig = Field(default_factory=AnalysisConfig)
    calibration: CalibrationConfig = Field(default_factory=CalibrationConfig)
    paths: PathsConfig = Field(default_factory=PathsConfig)

    @field_validator("schema_version")
    @classmethod
    def _version(cls, v):
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {v}")
        return v

    # conversions -----------------------------------------------------

    def circuit_params(self) -> CircuitParams:
        c = self.circuit
        return CircuitParams(
            n_cells=c.n_cells,
            c_ground=c.c_ground_ff * 1e-15,
            i_critical=c.i_critical_ua * 1e-6,
            c_junction=c.c_junction_ff * 1e-15,
            tan_delta=c.tan_delta,
            resonators=tuple(
                ResonatorBank(r.f_res_ghz * 1e9, r.c_res_pf * 1e-12, r.c_couple_ff * 1e-15, r.insertion_period)
                for r in c.resonators
            ),
            pump_freqs=tuple(f * 1e9 for f in self.pumps.f_ghz),
        )

    def loss_profile(self) -> LossProfile | None:
        lc = self.loss
        if lc.kind == "none":
            return None
        return LossProfile(
            kind=lc.kind,
            total_db=lc.total_db,
            n_cells=self.circuit.n_cells,
            table=tuple((r.temp_k, r.loss_db_total) for r in lc.loss_table),
            fridge_temp=lc.fridge_temp_k,
            out_of_range=lc.out_of_range,
            pump_loss_db=lc.pump_loss_db,
        )

    def setup(self) -> SimulationSetup:
        p = self.pumps
        return SimulationSetup(
            params=self.circuit_params(),
            loss=self.loss_profile(),
            depth=self.simulation.depth,
            betas=None if p.beta is None else tuple(p.beta),
            powers_w=None if p.p_nw is None else tuple(x * 1e-9 for x in p.p_nw),
            c_p=None if p.c_p_per_w is None else tuple(p.c_p_per_w),
            rtol=self.simulation.rtol,
            atol=self.simulation.atol,
        )

    def hash(self) -> str:
        canon = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def _set_path(data: dict, dotted: str, raw: str):
    keys = dotted.split(".")
    node = data
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"{dotted}: {k} is not a section")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    if isinstance(value, (dict, list)):
        raise ConfigError(f"{dotted}: overrides must be scalar")
    node[keys[-1]] = value


def load_config(path=None, overrides=()) -> WorkbenchConfig:
    """Read, override (``section.key=value`` scalars) and validate a config."""
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        _set_path(data, key.strip(), raw.strip())
    try:
        return WorkbenchConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
