"""Canned run plans for the standard scenarios.

Every preset uses the six-level transmon with omega10 = 2100, alpha = 100 and
gamma_{j,j-1} = j * gamma10 at the mirror antinode (x = 0).
"""

from __future__ import annotations

from .config import RunConfig, RunPlan
from .errors import SpecError

K2_POWER = 100.0
K2_OFFSET = -102.0
K3_POWER = 5600.0
K3_OFFSET = -12.1

_MAP_POWERS = {"logspace": [-1, 4, 201]}
_MAP_OFFSETS = {"linspace": [-150, 50, 201]}


def _run(**kw) -> RunConfig:
    return RunConfig.model_validate(kw)


def _map(K: int) -> RunConfig:
    return _run(drive={"K": K}, powers=_MAP_POWERS, probe={"offsets": _MAP_OFFSETS}, model="full")


def _cut(K: int, power: float, lo: float, hi: float, sidebands) -> RunConfig:
    n = int(round((hi - lo) / 0.1)) + 1
    return _run(label=f"K{K}", drive={"K": K}, powers=[power], probe={"offsets": {"linspace": [lo, hi, n]}},
                sidebands=sidebands, compare=["full", "reduced", "decoupled", "single"])


def _dephasing(K: int, power: float, offset: float) -> RunConfig:
    return _run(label=f"K{K}", drive={"K": K}, powers=[power], probe={"offsets": [offset]},
                dephasing_scan={"linspace": [0.0, 0.1, 51]}, compare=["full", "reduced", "decoupled"])


def _branch() -> RunConfig:
    return _run(label="D4-D5", drive={"K": 1}, powers={"logspace": [1, 4, 50]}, probe={"branch": [4, 5]},
                compare=["full", "reduced", "decoupled", "single"])


PRESETS = {
    "fig2a": lambda: [_map(1)],
    "fig2b": lambda: [_branch()],
    "fig3a": lambda: [_map(2)],
    "fig3b": lambda: [_cut(2, K2_POWER, -110.0, -94.0, [[5, 3], [5, 4]])],
    "fig3d": lambda: [_map(3)],
    "fig3e": lambda: [_cut(3, K3_POWER, -20.0, 0.0, [[3, 4], [4, 5]])],
    "fig4": lambda: [_dephasing(2, K2_POWER, K2_OFFSET), _dephasing(3, K3_POWER, K3_OFFSET)],
}


def preset_plan(name: str) -> RunPlan:
    try:
        runs = PRESETS[name]()
    except KeyError:
        raise SpecError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}") from None
    return RunPlan(name=name, runs=runs)
