"""Run configuration documents.

A run file is either a single run object or a plan ``{"name": ..., "runs": [...]}``.
A run object looks like::

    {
      "system": {"J": 6, "omega10": 2100, "alpha": 100, "positions": [0.0],
                 "dephasing": 0.0, "dephasing_scaling": "quadratic"},
      "drive": {"K": 2},                                # or {"omega_d": 2050.0}
      "powers": {"logspace": [-1, 4, 201]},             # Omega_d^2 / gamma10^2
      "probe": {"offsets": {"linspace": [-150, 50, 201]}},   # omega_p - omega10
      "model": "full"
    }

Grids are one of ``{"values": [...]}``, ``{"linspace": [a, b, n]}`` or
``{"logspace": [a, b, n]}`` (decades), or a bare list of numbers.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import SpecError
from .model import ArraySpec, DriveSpec, TransmonSpec, dephasing_profile

MODELS = ("full", "reduced", "single", "oracle")
CURVES = ("full", "reduced", "decoupled", "single")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Grid(_Strict):
    values: Optional[list[float]] = None
    linspace: Optional[tuple[float, float, int]] = None
    logspace: Optional[tuple[float, float, int]] = None

    @model_validator(mode="after")
    def _one_kind(self):
        kinds = [k for k in ("values", "linspace", "logspace") if getattr(self, k) is not None]
        if len(kinds) != 1:
            raise ValueError("grid needs exactly one of values, linspace, logspace")
        n = self.linspace[2] if self.linspace else self.logspace[2] if self.logspace else len(self.values)
        if n < 1:
            raise ValueError("grid must be nonempty")
        return self

    def array(self) -> np.ndarray:
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        if self.linspace is not None:
            a, b, n = self.linspace
            return np.linspace(a, b, int(n))
        a, b, n = self.logspace
        return np.logspace(a, b, int(n))


def _coerce_grid(v):
    if isinstance(v, (list, tuple)) and all(isinstance(x, (int, float)) for x in v):
        return {"values": list(v)}
    if isinstance(v, (int, float)):
        return {"values": [v]}
    return v


class SystemConfig(_Strict):
    J: int = Field(6, ge=2)
    omega10: float = Field(2100.0, gt=0)
    alpha: float = 100.0
    gamma10: float = Field(1.0, gt=0)
    positions: list[float] = Field(default_factory=lambda: [0.0], min_length=1)
    bare_rates: Optional[list[float]] = None
    dephasing: Union[float, list[float]] = 0.0
    dephasing_scaling: Literal["uniform", "linear", "quadratic"] = "quadratic"

    def transmon(self, gamma_phi: float | None = None) -> TransmonSpec:
        deph = self.dephasing if gamma_phi is None else gamma_phi
        if isinstance(deph, list):
            levels = tuple(deph)
        else:
            levels = dephasing_profile(float(deph), self.J, self.dephasing_scaling)
        return TransmonSpec(
            J=self.J,
            omega10=self.omega10,
            alpha=self.alpha,
            gamma10=self.gamma10,
            dephasing=levels,
            bare_rates=None if self.bare_rates is None else tuple(self.bare_rates),
        )

    def array(self, gamma_phi: float | None = None) -> ArraySpec:
        return ArraySpec.uniform(self.transmon(gamma_phi), self.positions)


class DriveConfig(_Strict):
    K: Optional[int] = Field(None, ge=1)
    omega_d: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _one(self):
        if (self.K is None) == (self.omega_d is None):
            raise ValueError("drive needs exactly one of K, omega_d")
        return self

    def template(self, transmon: TransmonSpec) -> DriveSpec:
        if self.K is not None:
            return DriveSpec.k_photon(transmon, self.K, 0.0)
        return DriveSpec(omega_d=self.omega_d, Omega_d=0.0)


class ProbeConfig(_Strict):
    offsets: Optional[Grid] = None      # omega_p - omega10
    omega_p: Optional[Grid] = None      # absolute
    branch: Optional[tuple[int, int]] = None   # track a sideband: omega_p = e_nu - e_mu + omega_d

    _g1 = field_validator("offsets", "omega_p", mode="before")(lambda v: _coerce_grid(v))

    @model_validator(mode="after")
    def _one(self):
        n = sum(x is not None for x in (self.offsets, self.omega_p, self.branch))
        if n != 1:
            raise ValueError("probe needs exactly one of offsets, omega_p, branch")
        return self


class RunConfig(_Strict):
    label: str = ""
    system: SystemConfig = SystemConfig()
    drive: DriveConfig
    powers: Grid
    probe: ProbeConfig
    dephasing_scan: Optional[Grid] = None
    model: Literal["full", "reduced", "single", "oracle"] = "full"
    interference: bool = True
    compare: Optional[list[Literal["full", "reduced", "decoupled", "single"]]] = None
    threshold: float = Field(1.0, ge=0)
    sidebands: Optional[list[tuple[int, int]]] = None
    diagnostics: bool = False
    Omega_p: float = Field(1e-3, gt=0)
    workers: int = Field(1, ge=1)

    _g = field_validator("powers", "dephasing_scan", mode="before")(lambda v: _coerce_grid(v))

    @field_validator("powers")
    @classmethod
    def _nonneg(cls, g: Grid):
        if np.any(g.array() < 0):
            raise ValueError("drive powers must be >= 0")
        return g

    @property
    def kind(self) -> str:
        """'spectrum' for a plain single-model grid, 'curves' otherwise."""
        if self.compare or self.dephasing_scan is not None or self.probe.branch is not None:
            return "curves"
        return "spectrum"

    def gamma_phis(self) -> list[float | None]:
        return [None] if self.dephasing_scan is None else [float(x) for x in self.dephasing_scan.array()]

    def resolved(self) -> dict:
        """Canonical JSON-able form with every default filled in (workers excluded)."""
        return self.model_dump(mode="json", exclude={"workers"})


class RunPlan(_Strict):
    name: str = "run"
    runs: list[RunConfig] = Field(min_length=1)

    def resolved(self) -> dict:
        return {"name": self.name, "runs": [r.resolved() for r in self.runs]}


def format_validation_error(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{path}: {err['msg']}")
    return "\n".join(lines)


def parse_plan(doc: dict | list, name: str = "run") -> RunPlan:
    """Validate a run or plan document; raise SpecError with field paths on failure."""
    try:
        if isinstance(doc, dict) and "runs" in doc:
            return RunPlan.model_validate(doc)
        return RunPlan(name=name, runs=[RunConfig.model_validate(doc)])
    except ValidationError as exc:
        raise SpecError("invalid configuration:\n" + format_validation_error(exc)) from None


def load_plan(path) -> RunPlan:
    with open(path) as fh:
        doc = json.load(fh)
    return parse_plan(doc, name=Path(path).stem)
