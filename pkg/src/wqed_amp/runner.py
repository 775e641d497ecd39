"""Execute run plans and write self-describing CSV/JSON outputs."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import CURVES, RunConfig, RunPlan
from .dressed import DressedAnalysis, analyze, dressed_basis, identify_sidebands, report_from_analysis
from .errors import SpecError
from .oracle import oracle_reflection
from .parallel import ordered_map
from .response import SCHEMA_VERSION, SpectrumResult, ground_state, solve_point, steady_state, sweep
from .operators import build_liouvillian0

CURVE_COLUMNS = ("label", "drive_power", "omega_p", "gamma_phi", "r_full", "r_reduced", "r_decoupled",
                 "r_single", "inversion", "classification", "flags")


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x) if np.isfinite(x) else "nan"
    return str(x)


@dataclass
class CurveTable:
    """Side-by-side model curves along a cut, branch or dephasing scan."""

    rows: list[dict]
    params: dict = field(default_factory=dict)
    complete: bool = True

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write(f"# schema_version: {SCHEMA_VERSION}\n")
        buf.write(f"# complete: {str(self.complete).lower()}\n")
        buf.write("# params: " + json.dumps(self.params, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CURVE_COLUMNS)
        for row in self.rows:
            w.writerow([_fmt(row.get(c, float("nan"))) for c in CURVE_COLUMNS])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_json(self) -> dict:
        clean = [{k: (None if isinstance(v, float) and not np.isfinite(v) else v) for k, v in r.items()}
                 for r in self.rows]
        return {"schema_version": SCHEMA_VERSION, "kind": "curves", "complete": self.complete,
                "params": self.params, "columns": list(CURVE_COLUMNS), "rows": clean}

    def column(self, name: str) -> np.ndarray:
        return np.array([r.get(name, np.nan) for r in self.rows], dtype=float)


def read_curves_csv(path) -> tuple[dict, list[dict]]:
    params, lines = {}, []
    for line in Path(path).read_text().splitlines(keepends=True):
        if line.startswith("# params: "):
            params = json.loads(line[len("# params: "):])
        elif not line.startswith("#"):
            lines.append(line)
    rows = []
    for r in csv.DictReader(lines):
        rows.append({k: (v if k in ("label", "classification", "flags") else float(v)) for k, v in r.items()})
    return params, rows


# ---------------------------------------------------------------------------
# per-point evaluation


def _pairs_for(cfg: RunConfig, an: DressedAnalysis, omega_p: float, omega_d: float, threshold: float):
    if cfg.probe.branch is not None:
        # the tracked sideband first, plus anything else that happens to be resonant
        br = tuple(cfg.probe.branch)
        return [br] + [p for p in identify_sidebands(an.basis, omega_p, omega_d, threshold) if p != br]
    if cfg.sidebands is not None:
        return [tuple(p) for p in cfg.sidebands]
    return identify_sidebands(an.basis, omega_p, omega_d, threshold)


def _curve_task(args) -> list[dict]:
    """All requested curves at every probe frequency of one (power, gamma_phi) row."""
    cfg, power, gamma_phi, omega_ps, threshold = args
    array = cfg.system.array(gamma_phi)
    drive = cfg.drive.template(array.proto).with_power(power)
    wanted = cfg.compare or list(CURVES)
    gp = 0.0 if gamma_phi is None else float(gamma_phi)
    if cfg.probe.branch is not None:
        mu, nu = cfg.probe.branch
        e = dressed_basis(array, drive).energies
        omega_ps = [float(e[nu] - e[mu] + drive.omega_d)]
    rows = []
    try:
        L0 = build_liouvillian0(array, drive)
        ss = steady_state(L0, initial=ground_state(array))
    except Exception as exc:
        return [{"label": cfg.label, "drive_power": float(power), "omega_p": float(wp), "gamma_phi": gp,
                 "flags": type(exc).__name__} for wp in omega_ps]
    for wp in omega_ps:
        row = {"label": cfg.label, "drive_power": float(power), "omega_p": float(wp), "gamma_phi": gp,
               "classification": "", "flags": ""}
        try:
            r_full = None
            if "full" in wanted:
                r_full = solve_point(array, drive, wp, L0=L0, steady=ss).r
                row["r_full"] = r_full
            an = analyze(array, drive, wp, rho0=ss.rho0)
            pairs = _pairs_for(cfg, an, wp, drive.omega_d, threshold)
            rep = report_from_analysis(an, wp, pairs, r_full)
            for name, val in (("reduced", rep.r_reduced), ("decoupled", rep.r_decoupled), ("single", rep.r_single)):
                if name in wanted:
                    row[f"r_{name}"] = val
            row["inversion"] = rep.transitions[0].inversion if rep.transitions else 0.0
            row["classification"] = rep.classification
        except Exception as exc:
            row["flags"] = type(exc).__name__
        rows.append(row)
    return rows


def _model_task(args):
    """Single-model spectrum row for the dressed or time-domain models."""
    cfg, power, omega_ps, threshold, model = args
    array = cfg.system.array()
    drive = cfg.drive.template(array.proto).with_power(power)
    r = np.full(len(omega_ps), np.nan)
    flags = [""] * len(omega_ps)
    try:
        L0 = build_liouvillian0(array, drive)
        ss = steady_state(L0, initial=ground_state(array))
    except Exception as exc:
        return r, [type(exc).__name__] * len(omega_ps)
    for k, wp in enumerate(omega_ps):
        try:
            if model == "oracle":
                r[k] = oracle_reflection(array, drive, wp, cfg.Omega_p)
                continue
            an = analyze(array, drive, wp, rho0=ss.rho0)
            pairs = _pairs_for(cfg, an, wp, drive.omega_d, threshold)
            if model == "single":
                r[k] = an.r_single(pairs) if pairs else 1.0
            else:
                r[k] = an.reduced(pairs, zero_offdiagonal=not cfg.interference).r
        except Exception as exc:
            flags[k] = type(exc).__name__
    return r, flags


def probe_grid(cfg: RunConfig) -> np.ndarray:
    if cfg.probe.offsets is not None:
        return cfg.system.omega10 + cfg.probe.offsets.array()
    if cfg.probe.omega_p is not None:
        return cfg.probe.omega_p.array()
    return np.zeros(0)


def run_config(cfg: RunConfig, *, workers: int | None = None):
    """Evaluate one run; returns a SpectrumResult or a CurveTable."""
    workers = cfg.workers if workers is None else workers
    params = cfg.resolved()
    powers = cfg.powers.array()
    probes = probe_grid(cfg)
    if cfg.kind == "spectrum":
        array = cfg.system.array()
        drive = cfg.drive.template(array.proto)
        if cfg.model == "full":
            return sweep(array, drive, powers, probes, workers=workers, params=params,
                         diagnostics=cfg.diagnostics, threshold=cfg.threshold)
        tasks = [(cfg, float(P), probes, cfg.threshold, cfg.model) for P in powers]
        rows, complete = ordered_map(_model_task, tasks, workers)
        rows += [(np.full(len(probes), np.nan), ["cancelled"] * len(probes))] * (len(tasks) - len(rows))
        r = np.vstack([x[0] for x in rows])
        flags = np.array([x[1] for x in rows], dtype=object)
        return SpectrumResult(powers, probes, r, flags, params=params, complete=complete)
    tasks = [(cfg, float(P), g, probes, cfg.threshold) for g in cfg.gamma_phis() for P in powers]
    chunks, complete = ordered_map(_curve_task, tasks, workers)
    return CurveTable([row for ch in chunks for row in ch], params=params, complete=complete)


@dataclass
class PlanOutput:
    name: str
    parts: list
    files: list[Path]

    @property
    def complete(self) -> bool:
        return all(p.complete for p in self.parts)


def run_plan(plan: RunPlan, out_dir, *, workers: int | None = None) -> PlanOutput:
    """Run every part of a plan and write ``config.json``, ``result.json`` and CSVs into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    parts = [run_config(cfg, workers=workers) for cfg in plan.runs]
    files = []
    if len(parts) > 1 and all(isinstance(p, CurveTable) for p in parts):
        merged = CurveTable([r for p in parts for r in p.rows], params=plan.resolved(),
                            complete=all(p.complete for p in parts))
        path = out / f"{plan.name}.csv"
        merged.to_csv(path)
        files.append(path)
    else:
        for i, p in enumerate(parts):
            suffix = "" if len(parts) == 1 else f"-{plan.runs[i].label or i}"
            path = out / f"{plan.name}{suffix}.csv"
            p.to_csv(path)
            files.append(path)
    (out / "config.json").write_text(json.dumps(plan.resolved(), indent=1, sort_keys=True) + "\n")
    doc = {
        "schema_version": SCHEMA_VERSION,
        "name": plan.name,
        "complete": all(p.complete for p in parts),
        "files": [f.name for f in files],
        "parts": [p.to_json() for p in parts],
    }
    (out / "result.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return PlanOutput(plan.name, parts, files)


def load_result(run_dir) -> dict:
    path = Path(run_dir) / "result.json"
    if not path.exists():
        raise SpecError(f"no result.json in {run_dir}")
    return json.loads(path.read_text())
