from __future__ import annotations

import numpy as np
import pytest

from wqed_amp.errors import NonConvergence, SpecError
from wqed_amp.model import ArraySpec, DriveSpec, ProbeSpec, TransmonSpec
from wqed_amp.operators import build_liouvillian0
from wqed_amp.oracle import (
    Trajectory,
    choose_step,
    demodulate_reflection,
    integrate_time_domain,
    oracle_reflection,
)
from wqed_amp.response import full_reflection, steady_state

SMALL = ArraySpec.single(TransmonSpec(J=3))


def test_choose_step_bounds():
    assert choose_step(0.0, 0.0) == 1e-3
    assert choose_step(100.0, 0.0) == pytest.approx(5e-4)
    assert choose_step(1.0, 500.0) == pytest.approx(1e-4)


def test_unprobed_trajectory_reaches_steady_state(atom, k2_point):
    drive, wp = k2_point
    traj = integrate_time_domain(atom, drive, ProbeSpec(wp, 0.0), t_settle=30.0)
    rho0 = steady_state(build_liouvillian0(atom, drive)).rho0
    np.testing.assert_allclose(traj.final, rho0, atol=1e-6)
    with pytest.raises(SpecError):
        demodulate_reflection(traj, atom, wp)


def test_steady_state_matches_long_time_limit(atom, transmon):
    drive = DriveSpec.k_photon(transmon, 1, np.sqrt(1e3))
    traj = integrate_time_domain(atom, drive, ProbeSpec(2090.0, 0.0), t_settle=40.0)
    rho0 = steady_state(build_liouvillian0(atom, drive)).rho0
    assert np.abs(traj.final - rho0).max() < 1e-6


def test_uncoupled_diagonal_state_is_frozen():
    t = TransmonSpec(J=3, bare_rates=(0.0, 0.0))
    arr = ArraySpec.single(t)
    rho = np.diag([0.5, 0.3, 0.2]).astype(complex)
    traj = integrate_time_domain(arr, DriveSpec(omega_d=2000.0, Omega_d=0.0), ProbeSpec(2100.0, 0.0),
                                 t_settle=2.0, initial=rho)
    for s in traj.states:
        np.testing.assert_allclose(s, rho, atol=1e-14)


@pytest.mark.parametrize("gphi", [0.0, 0.1, 0.3])
def test_coherence_linewidth(gphi):
    # |0><1| decays at gamma10/2 plus the level-1 dephasing rate
    arr = ArraySpec.single(TransmonSpec(J=2, dephasing=(0.0, gphi)))
    rho = np.full((2, 2), 0.5, dtype=complex)
    traj = integrate_time_domain(arr, DriveSpec(omega_d=2090.0, Omega_d=0.0), ProbeSpec(2100.0, 0.0),
                                 t_settle=3.0, window_periods=1, initial=rho)
    t = traj.times
    amp = np.abs(traj.states[:, 0, 1])
    rate = -np.polyfit(t, np.log(amp), 1)[0]
    assert rate == pytest.approx(0.5 + gphi, rel=1e-8)


def test_trace_and_hermiticity_preserved(atom, k3_point):
    drive, wp = k3_point
    traj = integrate_time_domain(atom, drive, ProbeSpec(wp, 1e-3))
    assert traj.trace_drift < 1e-10
    assert traj.hermiticity_drift < 1e-10
    assert traj.window.shape == (20, 1, 5)
    assert traj.steps_per_period * traj.dt == pytest.approx(2 * np.pi / abs(wp - drive.omega_d))


@pytest.mark.parametrize("which", ["k2", "k3"])
def test_oracle_matches_perturbative(which, atom, k2_point, k3_point):
    drive, wp = k2_point if which == "k2" else k3_point
    assert oracle_reflection(atom, drive, wp) == pytest.approx(full_reflection(atom, drive, wp), abs=1e-6)


def test_initial_state_independence(atom, k2_point):
    drive, wp = k2_point
    a = oracle_reflection(atom, drive, wp)
    b = oracle_reflection(atom, drive, wp, initial=np.eye(6) / 6)
    assert abs(a - b) < 1e-4


def test_step_halving(atom, k2_point):
    drive, wp = k2_point
    traj = integrate_time_domain(atom, drive, ProbeSpec(wp, 1e-3))
    fine = oracle_reflection(atom, drive, wp, dt=traj.dt / 2)
    assert abs(demodulate_reflection(traj, atom, wp) - fine) < 1e-4


def test_zero_response_gives_unity():
    t = TransmonSpec(J=2, position=np.pi / 2 / 2100.0)
    arr = ArraySpec.single(t)
    r = oracle_reflection(arr, DriveSpec(omega_d=2095.0, Omega_d=0.0), 2100.0, t_settle=2.0)
    assert r == pytest.approx(1.0, abs=1e-12)


def test_short_settle_is_reported(atom, k2_point):
    drive, wp = k2_point
    with pytest.raises(NonConvergence):
        integrate_time_domain(atom, drive, ProbeSpec(wp, 1e-3), t_settle=0.5)


def test_static_probe_path():
    drive = DriveSpec(omega_d=2100.0, Omega_d=1.0)
    r = oracle_reflection(SMALL, drive, 2100.0, t_settle=40.0)
    assert r == pytest.approx(full_reflection(SMALL, drive, 2100.0), abs=1e-6)


def test_trajectory_csv(tmp_path, atom, k2_point):
    drive, wp = k2_point
    traj = integrate_time_domain(atom, drive, ProbeSpec(wp, 1e-3), t_settle=5.0, check=False)
    assert isinstance(traj, Trajectory)
    text = traj.to_csv(tmp_path / "t.csv", elements=[(0, 0), (0, 1)])
    lines = text.splitlines()
    assert lines[0] == "time,re_rho_0_0,im_rho_0_0,re_rho_0_1,im_rho_0_1"
    assert len(lines) == len(traj.times) + 1
    assert (tmp_path / "t.csv").read_text() == text
