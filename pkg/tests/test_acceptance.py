"""Acceptance criteria, each checked at its stated tolerance.

Every test records one ``CRITERION n ... PASS/FAIL`` line (printed in the
terminal summary) before asserting, so a failing criterion still reports
the measured numbers.
"""

from __future__ import annotations

import time

import numpy as np
from scipy.signal import find_peaks, peak_widths

from conftest import ACCEPTANCE_LINES
from wqed_amp.dressed import (
    analyze,
    assemble_pi,
    dressed_basis,
    dressed_populations,
    single_sideband_prefactor,
)
from wqed_amp.model import ArraySpec, DriveSpec, ProbeSpec, TransmonSpec, collective_rates, decay_rates
from wqed_amp.operators import (
    build_liouvillian0,
    build_probe_superops,
    single_atom_liouvillian,
    trace_functional,
    vec,
)
from wqed_amp.oracle import oracle_reflection
from wqed_amp.presets import K2_OFFSET, K2_POWER, K3_OFFSET, K3_POWER, preset_plan
from wqed_amp.response import full_reflection, ground_state, steady_state, sweep
from wqed_amp.runner import run_config

T6 = TransmonSpec(J=6)
A6 = ArraySpec.single(T6)
W10 = T6.omega10


def _record(n: int, title: str, checks: list[tuple[str, bool, str]], t0: float, budget: float) -> None:
    elapsed = time.perf_counter() - t0
    checks = checks + [(f"runtime < {budget:g} s", elapsed < budget, f"{elapsed:.1f} s")]
    ok = all(c[1] for c in checks)
    detail = "; ".join(f"{name}: {'ok' if good else 'FAIL'} ({info})" for name, good, info in checks)
    line = f"CRITERION {n} {title}: {'PASS' if ok else 'FAIL'} [{elapsed:.1f} s] {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    failed = [c[0] for c in checks if not c[1]]
    assert not failed, f"criterion {n} failed: {', '.join(failed)}"


def _k_point(K: int, power: float, offset: float):
    return DriveSpec.k_photon(T6, K, np.sqrt(power)), W10 + offset


# ---------------------------------------------------------------------------


def test_criterion_1_two_photon_gain_without_inversion():
    t0 = time.perf_counter()
    drive, wp = _k_point(2, K2_POWER, K2_OFFSET)
    r = full_reflection(A6, drive, wp)
    an = analyze(A6, drive, wp)
    pairs = [(5, 3), (5, 4)]
    _, P = dressed_populations(an.rho0, an.basis)
    inversions = [float(P[nu, mu]) for mu, nu in pairs]
    r_dec = an.reduced(pairs, zero_offdiagonal=True).r
    _record(1, "K=2 inversion-free gain", [
        ("r_full in [1.08, 1.12]", 1.08 <= r <= 1.12, f"r={r:.5f}"),
        ("no inversion on active pair", all(x <= 0 for x in inversions),
         "P=" + ", ".join(f"{x:.4f}" for x in inversions)),
        ("|r_decoupled - 1| <= 0.02", abs(r_dec - 1) <= 0.02, f"r_dec={r_dec:.5f}"),
    ], t0, 1.0)


def test_criterion_2_three_photon_interference():
    t0 = time.perf_counter()
    drive, wp = _k_point(3, K3_POWER, K3_OFFSET)
    r = full_reflection(A6, drive, wp)
    an = analyze(A6, drive, wp)
    r_dec = an.reduced([(3, 4), (4, 5)], zero_offdiagonal=True).r
    _record(2, "K=3 interference enhancement", [
        ("r_full = 1.215 +- 0.02", abs(r - 1.215) <= 0.02, f"r={r:.5f}"),
        ("r_decoupled = 1.125 +- 0.02", abs(r_dec - 1.125) <= 0.02, f"r_dec={r_dec:.5f}"),
    ], t0, 1.0)


def test_criterion_3_dephasing():
    t0 = time.perf_counter()
    drive, wp = _k_point(3, K3_POWER, K3_OFFSET)
    r014 = full_reflection(A6.with_dephasing(0.014), drive, wp)
    checks = [("r(0.014) = 1.18 +- 0.01", abs(r014 - 1.18) <= 0.01, f"r={r014:.5f}")]
    for cfg in preset_plan("fig4").runs:
        table = run_config(cfg)
        r = table.column("r_full")
        worst = float(np.max(np.diff(r)))
        checks.append((f"{cfg.label} nonincreasing over [0, 0.1]", worst <= 0.0,
                       f"max step {worst:+.2e}, r {r[0]:.4f} -> {r[-1]:.4f}"))
    _record(3, "dephasing", checks, t0, 5.0)


def test_criterion_4_full_vs_reduced_on_branch():
    t0 = time.perf_counter()
    table = run_config(preset_plan("fig2b").runs[0])
    full, red = table.column("r_full"), table.column("r_reduced")
    inv = table.column("inversion")
    diff = float(np.max(np.abs(red - full)))
    mismatch = int(np.sum(np.sign(full - 1) != np.sign(inv)))
    _record(4, "full vs reduced on the D5-D4 branch", [
        ("50 points", len(full) == 50, f"{len(full)}"),
        ("max |r_red - r_full| <= 0.01", diff <= 0.01, f"{diff:.4f}"),
        ("sign(r-1) = sign(P54) everywhere", mismatch == 0, f"{mismatch} mismatches"),
    ], t0, 30.0)


def _fwhm(power: float, center: float, half: float = 6.0) -> float:
    drive = DriveSpec.k_photon(T6, 1, 0.0)
    off = center + np.linspace(-half, half, 2401)
    dev = np.abs(sweep(A6, drive, [power], W10 + off).r[0] - 1)
    k = int(np.argmax(dev))
    return float(peak_widths(dev, [k], rel_height=0.5)[0][0] * (off[1] - off[0]))


def _split(row: np.ndarray, off: np.ndarray, center: float, width: float, Omega: float, side) -> bool:
    """True when the row has peaks on both sides of ``center`` separated by more than ``width``."""
    window = (np.abs(off - center) <= 1.2 * Omega + 3.0) & side
    idx = np.nonzero(window)[0]
    # pad by one point so edge maxima are still detected as peaks
    lo_i, hi_i = max(idx[0] - 1, 0), min(idx[-1] + 2, len(off))
    dev = np.abs(row[lo_i:hi_i] - 1)
    pk, _ = find_peaks(dev, prominence=1e-3)
    o = off[lo_i:hi_i][pk]
    o = o[(np.abs(o - center) <= 1.2 * Omega + 3.0) & side[lo_i:hi_i][pk]]
    lo, hi = o[o < center - width / 2], o[o > center + width / 2]
    return bool(lo.size and hi.size and hi.max() - lo.min() > width)


def test_criterion_5_splitting_topology():
    t0 = time.perf_counter()
    plan = preset_plan("fig2a")
    cfg = plan.runs[0]
    tm = time.perf_counter()
    spec = run_config(cfg, workers=1)
    t_map = time.perf_counter() - tm
    tm = time.perf_counter()
    spec8 = run_config(cfg, workers=8)
    t_map8 = time.perf_counter() - tm
    powers, off = spec.drive_powers, spec.omega_p - W10
    r = spec.r

    fw10, fw21 = _fwhm(0.1, 0.0), _fwhm(0.1, -100.0)
    upper = off > -50
    lower = off < -50
    i_low = int(np.argmin(np.abs(powers - 0.1)))
    pk0 = find_peaks(np.abs(r[i_low] - 1), prominence=1e-3)[0]
    near0 = off[pk0][np.abs(off[pk0]) <= 5]
    unsplit = near0.size == 1 and abs(near0[0]) <= fw10 / 2

    # both branches of the |1>-|0> line sit near +-Omega_d; the map ends at +50
    rows10 = [i for i, P in enumerate(powers) if 10.0 <= P and np.sqrt(P) <= 50.0]
    not_split = [i for i in rows10 if not _split(r[i], off, 0.0, fw10, np.sqrt(powers[i]), upper)]

    i_one = int(np.argmin(np.abs(powers - 1.0)))
    pk21 = find_peaks(np.abs(r[i_one] - 1), prominence=1e-3)[0]
    appears = bool(np.any(np.abs(off[pk21] + 100) <= 2))
    split21 = [i for i, P in enumerate(powers) if _split(r[i], off, -100.0, fw21, np.sqrt(P), lower)]
    onset = float(powers[split21[0]]) if split21 else float("nan")
    log_onset = np.log10(onset)

    _record(5, "splitting topology", [
        ("|1>-|0> unsplit at 1e-1", unsplit, f"peaks near 0: {near0.tolist()}, FWHM {fw10:.2f}"),
        ("|1>-|0> resolvably split for 1e1 <= P (branches on map)", not not_split,
         f"{len(rows10) - len(not_split)}/{len(rows10)} rows split"),
        ("|2>-|1> feature near -100", appears, f"peaks {off[pk21].tolist()}"),
        ("|2>-|1> split onset 10^(1.5 +- 0.5)", abs(log_onset - 1.5) <= 0.5,
         f"onset 10^{log_onset:.3f} (FWHM {fw21:.2f})"),
        ("map < 300 s single-threaded", t_map < 300.0, f"{t_map:.1f} s"),
        ("map < 60 s at 8 workers, identical", t_map8 < 60.0 and np.array_equal(spec8.r, r, equal_nan=True),
         f"{t_map8:.1f} s"),
    ], t0, 360.0)


def test_criterion_6_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    powers = np.logspace(-1, 4, 201)
    offsets = np.linspace(-150, 50, 201)
    worst, where = 0.0, None
    for _ in range(20):
        K = int(rng.integers(1, 4))
        P = float(powers[rng.integers(powers.size)])
        o = float(offsets[rng.integers(offsets.size)])
        drive, wp = _k_point(K, P, o)
        d = abs(oracle_reflection(A6, drive, wp, Omega_p=1e-3) - full_reflection(A6, drive, wp))
        if d >= worst:
            worst, where = d, (K, P, o)
    drive, wp = _k_point(2, K2_POWER, K2_OFFSET)
    ref = full_reflection(A6, drive, wp)
    amps = np.array([0.025, 0.05, 0.1, 0.2])
    dev = np.array([abs(oracle_reflection(A6, drive, wp, Omega_p=a) - ref) for a in amps])
    slope = float(np.polyfit(np.log(amps), np.log(dev), 1)[0])
    _record(6, "oracle equivalence", [
        ("20 points |r_oracle - r_full| <= 1e-3", worst <= 1e-3,
         f"max {worst:.2e} at K={where[0]}, P={where[1]:.3g}, offset={where[2]:g}"),
        ("deviation exponent 2.0 +- 0.3", abs(slope - 2.0) <= 0.3, f"{slope:.3f}"),
    ], t0, 120.0)


def test_criterion_7_exact_identities():
    t0 = time.perf_counter()
    dephased = TransmonSpec(J=4, dephasing=(0.0, 0.02, 0.08, 0.18))
    cases = [
        (A6, *_k_point(2, K2_POWER, K2_OFFSET)),
        (A6, *_k_point(3, K3_POWER, K3_OFFSET)),
        (ArraySpec.single(dephased), DriveSpec.k_photon(dephased, 2, 7.0), 2060.0),
        (ArraySpec.uniform(TransmonSpec(J=3), [0.0, 0.4 / W10]), DriveSpec.k_photon(TransmonSpec(J=3), 1, 3.0),
         2098.0),
    ]
    tr, herm, psd, basis = 0.0, 0.0, 0.0, 0.0
    for arr, drive, wp in cases:
        L = build_liouvillian0(arr, drive)
        tr = max(tr, float(np.abs(trace_functional(arr.dim) @ L).max()))
        rho = steady_state(L, initial=ground_state(arr)).rho0
        herm = max(herm, float(np.abs(rho - rho.conj().T).max()), abs(np.trace(rho) - 1))
        psd = min(psd, float(np.linalg.eigvalsh(rho).min()))
        an = analyze(arr, drive, wp, rho0=rho)
        n = arr.dim
        pairs = [(m, v) for m in range(n) for v in range(n)]
        U = an.basis.U
        T = np.array([vec(np.outer(U[:, m], U[:, v].conj()).T) for m, v in pairs])
        M = T @ (L + 1j * (wp - drive.omega_d) * np.eye(n * n)) @ np.linalg.inv(T)
        Sp, _ = build_probe_superops(arr, ProbeSpec(wp))
        b = T @ (-arr.gamma10 * Sp @ vec(rho))
        basis = max(basis, float(np.abs(assemble_pi(pairs, an.rates, an.delta) - M).max()),
                    float(np.abs(np.array([an.pump[p] for p in pairs]) - b).max()))

    xs = np.array([0.0, 0.11, 0.37, 0.9]) / W10
    arr = ArraySpec.uniform(T6, xs)
    rt = collective_rates(arr)
    k = rt.wavenumbers
    diag = max(
        float(np.abs(np.array([rt.collective_decay[n, n] for n in range(4)])
                     - np.array([decay_rates(t) for t in arr.transmons])).max()),
        float(np.abs(np.array([rt.lamb_shift[n, n] for n in range(4)])
                     - T6.bare_rates[0] / 4 * np.sin(2 * k[None, :] * xs[:, None])).max()),
    )

    gen = 0.0
    for t, drive in ((T6, DriveSpec.k_photon(T6, 2, 10.0)), (dephased, DriveSpec.k_photon(dephased, 1, 3.0)),
                     (T6.with_dephasing(0.05), DriveSpec.k_photon(T6, 3, 40.0))):
        gen = max(gen, float(np.abs(build_liouvillian0(ArraySpec.single(t), drive)
                                    - single_atom_liouvillian(t, drive)).max()))

    worst_im, worst_re = 0.0, -np.inf
    for P in np.logspace(1, 4, 50):
        drive = DriveSpec.k_photon(T6, 1, np.sqrt(P))
        b = dressed_basis(A6, drive)
        wp = float(b.energies[5] - b.energies[4] + drive.omega_d)
        an = analyze(A6, drive, wp)
        f = single_sideband_prefactor(4, 5, an.rates, an.C, an.Om)
        worst_im = max(worst_im, abs(f.imag) / abs(f))
        worst_re = max(worst_re, f.real)

    _record(7, "exact identities", [
        ("L0 trace preserving", tr < 1e-10, f"{tr:.1e}"),
        ("rho0 Hermitian, unit trace", herm < 1e-10, f"{herm:.1e}"),
        ("rho0 PSD", psd > -1e-10, f"min eig {psd:.1e}"),
        ("dressed equations = basis change of L0", basis < 1e-10, f"{basis:.1e}"),
        ("collective diagonal = single-atom rates", diag < 1e-12, f"{diag:.1e}"),
        ("N=1 collective generator = single-atom generator at x=0", gen < 1e-10, f"{gen:.1e}"),
        ("single-sideband prefactor real", worst_im < 1e-9, f"max |Im/f| {worst_im:.1e}"),
        ("single-sideband prefactor negative", worst_re < 0, f"max Re {worst_re:.3e}"),
    ], t0, 10.0)


def test_criterion_8_two_atoms_at_the_mirror():
    t0 = time.perf_counter()
    t3 = TransmonSpec(J=3)
    one, two = ArraySpec.single(t3), ArraySpec.uniform(t3, [0.0, 0.0])
    drive = DriveSpec(omega_d=t3.omega10, Omega_d=0.0)
    L1, L2 = build_liouvillian0(one, drive), build_liouvillian0(two, drive)

    def damping(L, ket, d):
        rho = np.outer(ket, np.eye(d)[0])
        out = (L @ vec(rho)).reshape(d, d, order="F")
        return -complex(np.vdot(vec(rho), vec(out)) / np.vdot(vec(rho), vec(rho))).real, \
            float(np.abs(out - (np.vdot(vec(rho), vec(out)) / np.vdot(vec(rho), vec(rho))) * rho).max())

    g1, _ = damping(L1, np.eye(3)[1], 3)
    sym = np.zeros(9)
    sym[[1, 3]] = 1 / np.sqrt(2)         # (|01> + |10>)/sqrt2 in the product basis
    anti = np.zeros(9)
    anti[1], anti[3] = 1 / np.sqrt(2), -1 / np.sqrt(2)
    gs, res_s = damping(L2, sym, 9)
    ga, res_a = damping(L2, anti, 9)

    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(5):
        K = int(rng.integers(1, 3))
        P = float(10 ** rng.uniform(-1, 3))
        o = float(np.round(rng.uniform(-150, 50)))
        d = DriveSpec.k_photon(t3, K, np.sqrt(P))
        worst = max(worst, abs(oracle_reflection(two, d, W10 + o) - full_reflection(two, d, W10 + o)))
    _record(8, "two atoms at the mirror", [
        ("symmetric coherence damping = 2x single atom", abs(gs - 2 * g1) < 1e-12 and res_s < 1e-12,
         f"{gs:.4f} vs 2x{g1:.4f}"),
        ("antisymmetric coherence dark", abs(ga) < 1e-12 and res_a < 1e-12, f"{ga:.1e}"),
        ("5 points |r_oracle - r_full| <= 1e-3", worst <= 1e-3, f"max {worst:.2e}"),
    ], t0, 120.0)
