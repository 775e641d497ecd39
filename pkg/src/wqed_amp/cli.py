"""Command-line entry point: presets, config runs, annotation and oracle checks."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from scipy.signal import find_peaks

from .config import RunPlan, load_plan
from .dressed import sideband_report
from .errors import SpecError
from .oracle import oracle_reflection
from .presets import PRESETS, preset_plan
from .response import SCHEMA_VERSION, full_reflection
from .runner import probe_grid, run_plan, load_result

ORACLE_TOL = 1e-3
PEAK_PROMINENCE = 1e-3


def _override(plan: RunPlan, args) -> RunPlan:
    upd = {}
    if getattr(args, "model", None):
        upd["model"] = args.model
    if getattr(args, "threshold", None) is not None:
        upd["threshold"] = args.threshold
    if not upd:
        return plan
    runs = [type(r).model_validate({**r.model_dump(), **upd}) for r in plan.runs]
    return RunPlan(name=plan.name, runs=runs)


def _report(out) -> None:
    for f in out.files:
        print(f"wrote {f}")
    if not out.complete:
        print("run interrupted; outputs marked incomplete", file=sys.stderr)


def cmd_preset(args) -> int:
    plan = _override(preset_plan(args.name), args)
    out = run_plan(plan, Path(args.out) / plan.name, workers=args.workers)
    _report(out)
    return 0 if out.complete else 130


def cmd_run(args) -> int:
    plan = _override(load_plan(args.config), args)
    out = run_plan(plan, args.out or Path(args.config).with_suffix(""), workers=args.workers)
    _report(out)
    return 0 if out.complete else 130


def _label(t: dict) -> str:
    return f"D{t['mu']}<->D{t['nu']} (F{t['f_offset']:+d})"


def spectrum_features(part: dict, prominence: float = PEAK_PROMINENCE) -> list[tuple[float, float, float]]:
    """Peaks of |r - 1| along omega_p for every drive-power row."""
    feats = []
    powers, probes = part["drive_powers"], part["omega_p"]
    r = np.array([[np.nan if v is None else v for v in row] for row in part["r"]], dtype=float)
    for i, P in enumerate(powers):
        dev = np.nan_to_num(np.abs(r[i] - 1.0))
        idx, _ = find_peaks(dev, prominence=prominence)
        if len(probes) == 1 and dev[0] > prominence:
            idx = [0]
        feats += [(float(P), float(probes[k]), float(r[i, k])) for k in idx]
    return feats


def curve_features(part: dict, prominence: float = PEAK_PROMINENCE) -> list[tuple[str, float, float, float]]:
    """Peaks of |r - 1| along each labelled curve (r_full when present, else r_reduced)."""
    groups: dict[tuple, list] = {}
    for row in part["rows"]:
        r = row.get("r_full")
        if r is None:
            r = row.get("r_reduced")
        if r is None:
            continue
        key = (row.get("label", ""), row.get("gamma_phi", 0.0))
        groups.setdefault(key, []).append((row["drive_power"], row["omega_p"], r))
    feats = []
    for (label, _), pts in groups.items():
        dev = np.abs(np.array([p[2] for p in pts]) - 1.0)
        idx = list(find_peaks(dev, prominence=prominence)[0])
        if len(pts) == 1 and dev[0] > prominence:
            idx = [0]
        feats += [(label, *pts[k]) for k in idx]
    return feats


def annotate_run(run_dir, threshold: float | None = None) -> dict:
    """Label every spectral feature of a finished run with its active sidebands."""
    from .config import RunConfig

    doc = load_result(run_dir)
    features = []
    for part in doc["parts"]:
        cfg = RunConfig.model_validate(part["params"])
        thr = cfg.threshold if threshold is None else threshold
        array = cfg.system.array()
        diag = {(d["drive_power"], d["omega_p"]): d for d in (part.get("diagnostics") or [])}
        if part["kind"] == "spectrum":
            pts = [(cfg.label, P, wp, r) for P, wp, r in spectrum_features(part)]
        else:
            pts = curve_features(part)
        for label, P, wp, r in pts:
            rep = diag.get((P, wp))
            if rep is None or "error" in rep:
                drive = cfg.drive.template(array.proto).with_power(P)
                rep = sideband_report(array, drive, wp, threshold=thr, pairs=cfg.sidebands, r_full=r).to_dict()
            trans = rep["transitions"]
            features.append({
                "label": label,
                "drive_power": P,
                "omega_p": wp,
                "r": r,
                "transitions": [{**t, "name": _label(t)} for t in trans],
                "annotation": ", ".join(_label(t) for t in trans) if trans else "none active",
                "classification": rep["classification"],
                "inverted": any(t["inverted"] for t in trans),
            })
    ann = {"schema_version": SCHEMA_VERSION, "run": doc.get("name"), "features": features}
    if not features:
        ann["summary"] = "none active"
    return ann


def cmd_annotate(args) -> int:
    ann = annotate_run(args.run_dir, args.threshold)
    path = Path(args.out) if args.out else Path(args.run_dir) / "annotations.json"
    path.write_text(json.dumps(ann, indent=1, sort_keys=True) + "\n")
    print(f"wrote {path} ({len(ann['features'])} features)")
    return 0


def oracle_check(plan: RunPlan, points: int, seed: int = 0, Omega_p: float | None = None) -> list[dict]:
    """Compare full and time-domain r at random grid points of the first run."""
    cfg = plan.runs[0]
    rng = np.random.default_rng(seed)
    powers = cfg.powers.array()
    probes = probe_grid(cfg)
    if probes.size == 0:
        raise SpecError("oracle-check needs an explicit probe grid")
    array = cfg.system.array()
    rows = []
    for _ in range(points):
        P = float(powers[rng.integers(powers.size)])
        wp = float(probes[rng.integers(probes.size)])
        drive = cfg.drive.template(array.proto).with_power(P)
        rf = full_reflection(array, drive, wp)
        ro = oracle_reflection(array, drive, wp, Omega_p or cfg.Omega_p)
        rows.append({"drive_power": P, "omega_p": wp, "r_full": rf, "r_oracle": ro, "abs_diff": abs(rf - ro)})
    return rows


def cmd_oracle_check(args) -> int:
    plan = load_plan(args.config)
    rows = oracle_check(plan, args.points, args.seed_grid)
    out = Path(args.out) if args.out else Path(args.config).with_suffix("")
    out.mkdir(parents=True, exist_ok=True)
    lines = ["drive_power,omega_p,r_full,r_oracle,abs_diff"]
    lines += [",".join(repr(float(r[k])) for k in ("drive_power", "omega_p", "r_full", "r_oracle", "abs_diff"))
              for r in rows]
    (out / "oracle_check.csv").write_text("\n".join(lines) + "\n")
    worst = max(r["abs_diff"] for r in rows) if rows else 0.0
    ok = worst <= ORACLE_TOL
    (out / "config.json").write_text(json.dumps(plan.resolved(), indent=1, sort_keys=True) + "\n")
    (out / "result.json").write_text(json.dumps(
        {"schema_version": SCHEMA_VERSION, "kind": "oracle-check", "seed": args.seed_grid, "points": rows,
         "max_abs_diff": worst, "tolerance": ORACLE_TOL, "passed": ok}, indent=1, sort_keys=True) + "\n")
    print(f"{len(rows)} points, max |r_full - r_oracle| = {worst:.3e} ({'ok' if ok else 'FAIL'})")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wqed-amp", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_default=None):
        sp.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
        sp.add_argument("--out", default=out_default, help="output directory")
        sp.add_argument("--threshold", type=float, default=None, help="sideband resonance threshold in gamma10")
        sp.add_argument("--model", choices=("full", "reduced", "single", "oracle"), default=None)

    sp = sub.add_parser("preset", help="run a canned scenario")
    sp.add_argument("name", choices=sorted(PRESETS))
    common(sp, out_default="runs")
    sp.set_defaults(func=cmd_preset)

    sp = sub.add_parser("run", help="run a JSON config")
    sp.add_argument("config")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("annotate", help="label spectral features of a finished run")
    sp.add_argument("run_dir")
    sp.add_argument("--out", default=None)
    sp.add_argument("--threshold", type=float, default=None)
    sp.set_defaults(func=cmd_annotate)

    sp = sub.add_parser("oracle-check", help="compare against time-domain integration")
    sp.add_argument("config")
    sp.add_argument("--points", type=int, default=5)
    sp.add_argument("--seed-grid", type=int, default=0, help="seed for sampling grid points")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_oracle_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
