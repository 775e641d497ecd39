"""Time-domain reference: integrate the probed master equation and demodulate.

The equation

    d vec(rho)/dt = [L0 + Omega_p (exp(-i D t) S_plus + exp(+i D t) S_minus)] vec(rho),
    D = omega_p - omega_d,

is stepped with classical fixed-step RK4.  The step divides the beat period
2 pi/|D| exactly, so the generator is periodic on the step grid.  Because the
equation is linear, the RK4 map over one period is the same matrix every
period; it is built once by stepping the identity matrix through a period
and then applied repeatedly.  The sum over steps of
exp(+i D t_k) <sigma^n_{j-1,j}(t_k)> is accumulated alongside, which gives
the lock-in projection of every period at the cost of a matrix-vector product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonConvergence, SpecError, WindowMismatch
from .model import ArraySpec, DriveSpec, ProbeSpec
from .operators import build_liouvillian0, build_probe_superops, ladder_ops, unvec, vec
from .response import emission_weights, ground_state

DT_CAP = 1e-3
SETTLE_TOL = 1e-4
WINDOW_PERIODS = 20


@dataclass
class Trajectory:
    """Sampled solution of the probed master equation.

    ``times``/``states`` are period-boundary snapshots; ``window`` holds the
    demodulated coherences <sigma^n_{j-1,j}> e^{+iDt} averaged over each
    period of the final window, shape (periods, N, J-1).
    """

    times: np.ndarray
    states: np.ndarray
    window: np.ndarray
    dt: float
    detuning: float
    Omega_p: float
    steps_per_period: int
    trace_drift: float
    hermiticity_drift: float
    reference: np.ndarray | None = None   # probe-free coherences (static case, informational)
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, path=None, elements=None) -> str:
        """Dump period-boundary snapshots: time plus real/imag parts of ``elements``.

        ``elements`` is a list of (row, col) index pairs; the default is the
        populations and the first-row coherences.
        """
        d = self.states.shape[1]
        if elements is None:
            elements = [(i, i) for i in range(d)] + [(0, j) for j in range(1, d)]
        cols = ["time"] + [f"{part}_rho_{a}_{b}" for a, b in elements for part in ("re", "im")]
        lines = [",".join(cols)]
        for t, rho in zip(self.times, self.states):
            vals = [t] + [x for a, b in elements for x in (rho[a, b].real, rho[a, b].imag)]
            lines.append(",".join(repr(float(v)) for v in vals))
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def choose_step(Omega_d: float, detuning: float, L0: np.ndarray | None = None,
                dt_cap: float = DT_CAP, stiffness: float = 0.25) -> float:
    """Largest step allowed by min(dt_cap, 0.05/Omega_d, 0.05/|D|, stiffness/||L0||)."""
    dt = dt_cap
    if Omega_d > 0:
        dt = min(dt, 0.05 / Omega_d)
    if detuning != 0:
        dt = min(dt, 0.05 / abs(detuning))
    if L0 is not None and stiffness:
        dt = min(dt, stiffness / np.abs(np.linalg.eigvals(L0)).max())
    return dt


def _rk4_period(L0, Sp, Sm, Omega_p, detuning, dt, n, readout):
    """RK4 propagator over n steps plus the accumulated lock-in readout rows.

    Returns (V, Q) with V the one-period map and Q[a] = sum_k e^{iDt_k} readout[a] @ V_k.
    """
    D = L0.shape[0]
    V = np.eye(D, dtype=complex)
    Q = np.zeros((readout.shape[0], D), dtype=complex)

    def gen(t):
        ph = np.exp(-1j * detuning * t)
        return L0 + Omega_p * (ph * Sp + np.conj(ph) * Sm)

    for k in range(n):
        t = k * dt
        Q += np.exp(1j * detuning * t) * (readout @ V)
        M1, M2, M3 = gen(t), gen(t + dt / 2), gen(t + dt)
        k1 = M1 @ V
        k2 = M2 @ (V + dt / 2 * k1)
        k3 = M2 @ (V + dt / 2 * k2)
        k4 = M3 @ (V + dt * k3)
        V = V + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return V, Q / n


def _readout(array: ArraySpec) -> np.ndarray:
    """Rows r_a with r_a @ vec(rho) = Tr(sigma^n_{j-1,j} rho), flattened over (n, j)."""
    ops = ladder_ops(array.J, array.N)
    # Tr(A rho) = vec(A^T) . vec(rho)
    return np.array([vec(ops.lowering(n, j).T) for n in range(array.N) for j in range(1, array.J)])


def integrate_time_domain(array: ArraySpec, drive: DriveSpec, probe: ProbeSpec, *,
                          t_settle: float = 40.0, window_periods: int = WINDOW_PERIODS,
                          static_window: float = 20.0, dt: float | None = None,
                          initial: np.ndarray | None = None, check: bool = True) -> Trajectory:
    """Integrate from ``initial`` (default ground state) through the transient and the lock-in window."""
    g = array.gamma10
    L0 = build_liouvillian0(array, drive)
    Sp, Sm = build_probe_superops(array, probe)
    detuning = probe.omega_p - drive.omega_d
    rho = ground_state(array) if initial is None else np.asarray(initial, dtype=complex)
    v = vec(rho).astype(complex)
    R = _readout(array)
    shape = (array.N, array.J - 1)
    dt_max = dt if dt is not None else choose_step(drive.Omega_d, detuning, L0)

    if detuning == 0:
        return _integrate_static(array, L0, Sp, Sm, probe, v, R, shape, dt_max,
                                 t_settle / g, static_window / g, check)

    period = 2 * math.pi / abs(detuning)
    n = max(1, math.ceil(period / dt_max - 1e-9))
    step = period / n
    if not np.isclose(n * step, period, rtol=1e-12, atol=0):
        raise WindowMismatch(f"cannot tile beat period {period} with {n} steps")
    V, Q = _rk4_period(L0, Sp, Sm, probe.Omega_p, detuning, step, n, R)
    settle = math.ceil(t_settle / g / period)
    times, states, window = [0.0], [v], []
    for p in range(settle + window_periods):
        if p >= settle:
            window.append((Q @ v).reshape(shape))
        v = V @ v
        times.append((p + 1) * period)
        states.append(v)
    states = np.array([unvec(s) for s in states])
    traj = Trajectory(
        times=np.array(times),
        states=states,
        window=np.array(window),
        dt=step,
        detuning=detuning,
        Omega_p=probe.Omega_p,
        steps_per_period=n,
        trace_drift=float(np.abs(np.trace(states, axis1=1, axis2=2) - 1).max()),
        hermiticity_drift=float(np.abs(states - states.conj().transpose(0, 2, 1)).max()),
        meta={"periods_settle": settle, "periods_window": window_periods, "gamma10": g},
    )
    if check:
        _check_settled(traj, array, probe.omega_p)
    return traj


def _integrate_static(array, L0, Sp, Sm, probe, v, R, shape, dt_max, t_settle, t_window, check):
    """omega_p = omega_d: the probe term is constant in time.

    Both the co- and counter-rotating responses then sit at zero frequency,
    so they are separated by phase cycling: with the probe phase phi the
    first-order DC shift is Omega_p (e^{i phi} X+ + e^{-i phi} X-).  Averaging
    e^{-i phi} <sigma> over phi = 0, pi/2, pi, 3pi/2 keeps X+ and cancels the
    probe-free part and all even orders in Omega_p.
    """
    n_settle = math.ceil(t_settle / dt_max)
    step = t_settle / n_settle
    n_win = max(1, math.ceil(t_window / step))
    chunk = max(1, n_win // WINDOW_PERIODS)

    def phi(M):
        h = step
        I = np.eye(M.shape[0])
        M2 = M @ M
        return I + h * M + h**2 / 2 * M2 + h**3 / 6 * M2 @ M + h**4 / 24 * M2 @ M2

    def run(M):
        P = phi(M)
        u = np.linalg.matrix_power(P, n_settle) @ v
        C = np.linalg.matrix_power(P, chunk)
        win = []
        for _ in range(WINDOW_PERIODS):
            win.append((R @ u).reshape(shape))
            u = C @ u
        return np.array(win), u

    Op = probe.Omega_p
    free, _ = run(L0)
    cycled, u0 = 0.0, None
    for k in range(4):
        ph = 1j**k
        w, u = run(L0 + Op * (ph * Sp + np.conj(ph) * Sm))
        cycled = cycled + np.conj(ph) * w / 4
        u0 = u if u0 is None else u0
    states = np.array([unvec(v), unvec(u0)])
    traj = Trajectory(
        times=np.array([0.0, t_settle + WINDOW_PERIODS * chunk * step]),
        states=states,
        window=cycled,
        dt=step,
        detuning=0.0,
        Omega_p=Op,
        steps_per_period=chunk,
        trace_drift=float(abs(np.trace(states[-1]) - 1)),
        hermiticity_drift=float(np.abs(states[-1] - states[-1].conj().T).max()),
        reference=free,
        meta={"static": True, "gamma10": array.gamma10},
    )
    if check:
        _check_settled(traj, array, probe.omega_p)
    return traj


def _halves(traj: Trajectory, array: ArraySpec, omega_p: float) -> tuple[float, float]:
    h = len(traj.window) // 2
    return (_demod(traj, array, omega_p, slice(0, h)), _demod(traj, array, omega_p, slice(h, None)))


def _check_settled(traj, array, omega_p):
    if traj.Omega_p == 0:
        return
    a, b = _halves(traj, array, omega_p)
    if abs(a - b) > SETTLE_TOL * max(1.0, abs(b)):
        raise NonConvergence(f"demodulated amplitude drifts by {abs(a - b):.2e} across the window")


def _demod(traj: Trajectory, array: ArraySpec, omega_p: float, sl=slice(None)) -> float:
    if traj.Omega_p == 0:
        raise SpecError("demodulation needs a probed trajectory (Omega_p > 0)")
    w = emission_weights(array, omega_p)
    win = traj.window[sl]
    proj = np.mean(np.sum(w[None] * win, axis=(1, 2)))
    g = traj.meta.get("gamma10", array.gamma10)
    return float(abs(1.0 + 2j * g * proj / traj.Omega_p))


def demodulate_reflection(traj: Trajectory, array: ArraySpec, omega_p: float) -> float:
    """r_oracle = |1 + 2i gamma10 <sum w sigma e^{iDt}>_window / Omega_p|."""
    return _demod(traj, array, omega_p)


def oracle_reflection(array: ArraySpec, drive: DriveSpec, omega_p: float, Omega_p: float = 1e-3,
                      **kwargs) -> float:
    traj = integrate_time_domain(array, drive, ProbeSpec(omega_p, Omega_p), **kwargs)
    return demodulate_reflection(traj, array, omega_p)
