"""Weak-probe linear response and reflection amplitude of the full master equation.

The density matrix is expanded as rho ~ rho0 + (Omega_p/gamma10) rho1 exp(-i Delta_pd t)
with Delta_pd = omega_p - omega_d.  rho0 is the null vector of L0 and rho1 solves

    (L0 + i Delta_pd) rho1 = -gamma10 * S_plus[rho0].

The source is traceless, so Tr(rho1) = 0; adding the rank-one term
vec(I) Tr(.)/d to the operator leaves the solution unchanged while lifting the
zero mode of L0, which keeps the solve well conditioned through
omega_p = omega_d.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import DegenerateSteadyState, SingularAtZeroDetuning
from .model import ArraySpec, DriveSpec, ProbeSpec
from .parallel import ordered_map
from .operators import (
    build_liouvillian0,
    build_probe_superops,
    ladder_ops,
    probe_unit_superops,
    trace_functional,
    unvec,
    vec,
)

SCHEMA_VERSION = 1
CSV_COLUMNS = ("drive_power", "omega_p", "r", "flags")
ZERO_DETUNING_NUDGE = 1e-6


@dataclass(frozen=True)
class SteadyState:
    rho0: np.ndarray
    residual: float
    null_dim: int = 1


@dataclass(frozen=True)
class LinearResponse:
    rho1: np.ndarray
    detuning: float
    residual: float


def steady_state(L0: np.ndarray, *, initial: np.ndarray | None = None, tol: float = 1e-8,
                 check_unique: bool = True) -> SteadyState:
    """Unit-trace null vector of ``L0``.

    The unique case uses the bordered system (first row of L0 replaced by the
    trace functional).  When the null space is degenerate, ``initial`` selects
    the steady state reached from that state by projecting onto the zero
    modes with the left null vectors (the conserved quantities); without it
    :class:`DegenerateSteadyState` is raised.
    """
    D = L0.shape[0]
    d = int(round(math.sqrt(D)))
    null_dim = 1
    if check_unique:
        sv = np.linalg.svd(L0, compute_uv=False)
        small = sv <= tol * max(sv[0], 1.0)
        null_dim = int(small.sum())
        if null_dim > 1 and initial is None:
            raise DegenerateSteadyState(null_dim, sv[-null_dim:])
    if null_dim > 1:
        rho = _project_null_space(L0, np.asarray(initial, dtype=complex), null_dim)
    else:
        A = L0.copy()
        b = np.zeros(D, dtype=complex)
        A[0, :] = trace_functional(d)
        b[0] = 1.0
        rho = unvec(np.linalg.solve(A, b), d)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    res = float(np.linalg.norm(L0 @ vec(rho)))
    return SteadyState(rho0=rho, residual=res, null_dim=null_dim)


def _project_null_space(L0: np.ndarray, initial: np.ndarray, k: int) -> np.ndarray:
    d = initial.shape[0]
    U, s, Vh = np.linalg.svd(L0)
    right = Vh[-k:].conj().T          # (D, k) right null basis
    left = U[:, -k:].conj().T         # (k, D) left null basis
    # biorthogonalise so left @ right = I
    coeff = np.linalg.solve(left @ right, left @ vec(initial))
    return unvec(right @ coeff, d)


def linear_response_rho1(L0: np.ndarray, S_plus: np.ndarray, rho0: np.ndarray, delta_pd: float,
                         gamma10: float = 1.0) -> LinearResponse:
    """First-order coefficient rho1 at probe-drive detuning ``delta_pd``."""
    D = L0.shape[0]
    d = int(round(math.sqrt(D)))
    src = -gamma10 * (S_plus @ vec(rho0))
    t = trace_functional(d)
    A = L0 + 1j * delta_pd * np.eye(D) + np.outer(t, t) / d
    try:
        x = np.linalg.solve(A, src)
    except np.linalg.LinAlgError as exc:
        raise SingularAtZeroDetuning(f"shifted operator singular at delta_pd={delta_pd}") from exc
    if delta_pd == 0 and np.linalg.cond(A) > 1e13:
        raise SingularAtZeroDetuning("shifted operator numerically singular at delta_pd=0")
    res = float(np.linalg.norm((L0 + 1j * delta_pd * np.eye(D)) @ x - src))
    return LinearResponse(rho1=unvec(x, d), detuning=float(delta_pd), residual=res)


def emission_weights(array: ArraySpec, omega_p: float) -> np.ndarray:
    """gamma~_j(x_n)/gamma10 = sqrt(j omega_p gamma0_{j,j-1} / (gamma10 omega10)) cos(k_{j,j-1} x_n).

    Shape (N, J-1).  The bare gamma0 is used so that the lossless
    two-level limit reflects with unit modulus at every position.
    """
    t0 = array.proto
    j = np.arange(1, array.J)
    k = np.diff(t0.levels)
    out = np.empty((array.N, array.J - 1))
    for n, t in enumerate(array.transmons):
        g0 = np.asarray(t.bare_rates)
        out[n] = np.sqrt(j * omega_p * g0 / (t0.gamma10 * t0.omega10)) * np.cos(k * t.position)
    return out


def emission_operator(array: ArraySpec, omega_p: float) -> np.ndarray:
    """sum_{n,j} (gamma~_j(x_n)/gamma10) sigma^n_{j-1,j}."""
    ops = ladder_ops(array.J, array.N)
    w = emission_weights(array, omega_p)
    E = np.zeros((ops.dim, ops.dim), dtype=complex)
    for n in range(array.N):
        for j in range(1, array.J):
            E += w[n, j - 1] * ops.lowering(n, j)
    return E


def reflection_complex(rho1: np.ndarray, array: ArraySpec, omega_p: float) -> complex:
    E = emission_operator(array, omega_p)
    return 1.0 + 2j * np.trace(E @ rho1)


def reflection(rho1: np.ndarray, array: ArraySpec, omega_p: float) -> float:
    """r = |1 + 2i sum_{n,j} (gamma~_j(x_n)/gamma10) Tr(sigma^n_{j-1,j} rho1)|."""
    return float(abs(reflection_complex(rho1, array, omega_p)))


@dataclass(frozen=True)
class ResponsePoint:
    steady: SteadyState
    response: LinearResponse
    r: float


def solve_point(array: ArraySpec, drive: DriveSpec, probe: ProbeSpec | float,
                L0: np.ndarray | None = None, steady: SteadyState | None = None) -> ResponsePoint:
    """Full pipeline at one (drive, probe) point."""
    if not isinstance(probe, ProbeSpec):
        probe = ProbeSpec(omega_p=float(probe))
    if L0 is None:
        L0 = build_liouvillian0(array, drive)
    if steady is None:
        steady = steady_state(L0, initial=ground_state(array))
    S_plus, _ = build_probe_superops(array, probe)
    lr = linear_response_rho1(L0, S_plus, steady.rho0, probe.omega_p - drive.omega_d, array.gamma10)
    return ResponsePoint(steady=steady, response=lr, r=reflection(lr.rho1, array, probe.omega_p))


def full_reflection(array: ArraySpec, drive: DriveSpec, omega_p: float) -> float:
    return solve_point(array, drive, omega_p).r


def ground_state(array: ArraySpec) -> np.ndarray:
    d = array.dim
    g = np.zeros((d, d), dtype=complex)
    g[0, 0] = 1.0
    return g


# ---------------------------------------------------------------------------
# grid sweeps


@dataclass
class SpectrumResult:
    drive_powers: np.ndarray
    omega_p: np.ndarray
    r: np.ndarray                     # (n_power, n_probe), NaN where flagged
    flags: np.ndarray                 # (n_power, n_probe) str, "" when clean
    params: dict[str, Any] = field(default_factory=dict)
    diagnostics: list[dict] | None = None
    complete: bool = True

    def rows(self):
        for i, P in enumerate(self.drive_powers):
            for k, wp in enumerate(self.omega_p):
                yield float(P), float(wp), float(self.r[i, k]), str(self.flags[i, k])

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write(f"# schema_version: {SCHEMA_VERSION}\n")
        buf.write(f"# complete: {str(self.complete).lower()}\n")
        buf.write("# params: " + json.dumps(self.params, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for P, wp, r, f in self.rows():
            w.writerow([repr(P), repr(wp), repr(r), f])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def to_json(self, path=None) -> dict:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "kind": "spectrum",
            "complete": self.complete,
            "params": self.params,
            "drive_powers": [float(x) for x in self.drive_powers],
            "omega_p": [float(x) for x in self.omega_p],
            "r": [[None if not np.isfinite(v) else float(v) for v in row] for row in self.r],
            "flags": [[str(f) for f in row] for row in self.flags],
            "diagnostics": self.diagnostics,
        }
        if path is not None:
            with open(path, "w") as fh:
                json.dump(doc, fh, indent=1, sort_keys=True)
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "SpectrumResult":
        r = np.array([[np.nan if v is None else v for v in row] for row in doc["r"]], dtype=float)
        return cls(
            drive_powers=np.asarray(doc["drive_powers"], dtype=float),
            omega_p=np.asarray(doc["omega_p"], dtype=float),
            r=r,
            flags=np.array(doc["flags"], dtype=object),
            params=doc.get("params", {}),
            diagnostics=doc.get("diagnostics"),
            complete=doc.get("complete", True),
        )


def read_spectrum_csv(path) -> tuple[dict, np.ndarray]:
    """Parse a spectrum CSV back into (params, records array)."""
    params: dict = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("# params: "):
                params = json.loads(line[len("# params: "):])
            if line.startswith("#"):
                continue
            rows.append(line)
    reader = csv.DictReader(rows)
    recs = [(float(r["drive_power"]), float(r["omega_p"]), float(r["r"]), r["flags"]) for r in reader]
    arr = np.array(recs, dtype=[("drive_power", float), ("omega_p", float), ("r", float), ("flags", object)])
    return params, arr


def _sweep_row(args):
    array, drive, power, omega_p, diagnostics, threshold = args
    n = len(omega_p)
    r = np.full(n, np.nan)
    flags = [""] * n
    try:
        dr = drive.with_power(power)
        L0 = build_liouvillian0(array, dr)
        ss = steady_state(L0, initial=ground_state(array))
    except Exception as exc:  # whole row fails together
        return r, [type(exc).__name__] * n, None
    units = probe_unit_superops(array)
    D = L0.shape[0]
    d = array.dim
    t = trace_functional(d)
    base = L0 + np.outer(t, t) / d
    v0 = vec(ss.rho0)
    unit_src = [S @ v0 for S in units]
    eye = np.eye(D)
    x = array.positions
    for k, wp in enumerate(omega_p):
        delta = wp - dr.omega_d
        if delta == 0:
            delta = ZERO_DETUNING_NUDGE * array.gamma10
            flags[k] = "nudged"
        try:
            src = -array.gamma10 * sum(np.cos(wp * xn) * s for xn, s in zip(x, unit_src))
            sol = np.linalg.solve(base + 1j * delta * eye, src)
            val = reflection(unvec(sol, d), array, wp)
            if not np.isfinite(val):
                raise FloatingPointError("non-finite reflection")
            r[k] = val
        except Exception as exc:
            flags[k] = type(exc).__name__
    diag = None
    if diagnostics:
        from .dressed import row_reports

        diag = row_reports(array, dr, ss.rho0, omega_p, r, threshold)
    return r, flags, diag


def sweep(array: ArraySpec, drive: DriveSpec, drive_powers: Sequence[float], omega_p: Sequence[float],
          *, workers: int = 1, params: dict | None = None, diagnostics: bool = False,
          threshold: float = 1.0) -> SpectrumResult:
    """Full-model reflection on a (drive power x probe frequency) grid.

    Rows (drive powers) are independent; with ``workers > 1`` they are
    farmed out to processes and reassembled by index, so the result does
    not depend on the worker count.
    """
    powers = np.asarray(drive_powers, dtype=float)
    probes = np.asarray(omega_p, dtype=float)
    tasks = [(array, drive, float(P), probes, diagnostics, threshold) for P in powers]
    rows, complete = ordered_map(_sweep_row, tasks, workers)
    missing = len(tasks) - len(rows)
    rows += [(np.full(len(probes), np.nan), ["cancelled"] * len(probes), None)] * missing
    r = np.vstack([row[0] for row in rows]) if rows else np.zeros((0, len(probes)))
    flags = np.array([row[1] for row in rows], dtype=object).reshape(len(powers), len(probes))
    diag = None
    if diagnostics:
        diag = []
        for P, row in zip(powers, rows):
            for wp, rep in zip(probes, row[2] or [None] * len(probes)):
                entry = {"drive_power": float(P), "omega_p": float(wp)}
                entry.update(rep if rep is not None else {"error": "cancelled"})
                diag.append(entry)
    return SpectrumResult(powers, probes, r, flags, params=dict(params or {}), diagnostics=diag,
                          complete=complete)
