"""Hilbert-space ladder operators and Liouville-space generators.

Vectorization is column-major throughout: ``vec(A @ rho @ B) = kron(B.T, A) @ vec(rho)``.
Every generator is written in the rotating frame of the drive, with the
"+H.c." partner of a superoperator S defined by ``S_hc[rho] = (S[rho^dag])^dag``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import SpecError
from .model import ArraySpec, DriveSpec, ProbeSpec, RateTable, TransmonSpec, collective_rates, decay_rates, wavenumbers

MAX_DIM = 1024


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if d is None:
        d = int(round(np.sqrt(v.size)))
    return v.reshape(d, d, order="F")


def spre(A: np.ndarray) -> np.ndarray:
    """A rho"""
    return np.kron(np.eye(A.shape[0]), A)


def spost(B: np.ndarray) -> np.ndarray:
    """rho B"""
    return np.kron(B.T, np.eye(B.shape[0]))


def sprepost(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """A rho B"""
    return np.kron(B.T, A)


def comm(A: np.ndarray) -> np.ndarray:
    """[A, rho]"""
    return spre(A) - spost(A)


def hc(S: np.ndarray) -> np.ndarray:
    """Superoperator rho -> (S[rho^dag])^dag."""
    D = S.shape[0]
    d = int(round(np.sqrt(D)))
    # row index a + d*b reshapes (C order) to [b, a]
    S4 = S.reshape(d, d, d, d)
    return np.conj(S4.transpose(1, 0, 3, 2)).reshape(D, D)


def trace_functional(d: int) -> np.ndarray:
    return vec(np.eye(d))


class LadderOps:
    """sigma^n_{j,k} = |j><k| on atom n, identity-padded to the full J**N space."""

    def __init__(self, J: int, N: int = 1, max_dim: int = MAX_DIM):
        if J < 2 or N < 1:
            raise SpecError("ladder operators need J >= 2 and N >= 1")
        if J**N > max_dim:
            raise SpecError(f"Hilbert dimension {J**N} exceeds cap {max_dim}")
        self.J = J
        self.N = N
        self.dim = J**N
        self._cache: dict[tuple[int, int, int], np.ndarray] = {}

    def __call__(self, n: int, j: int, k: int) -> np.ndarray:
        key = (n, j, k)
        op = self._cache.get(key)
        if op is None:
            if not (0 <= n < self.N and 0 <= j < self.J and 0 <= k < self.J):
                raise IndexError(key)
            local = np.zeros((self.J, self.J), dtype=complex)
            local[j, k] = 1.0
            op = np.kron(np.kron(np.eye(self.J**n), local), np.eye(self.J ** (self.N - n - 1)))
            op.setflags(write=False)
            self._cache[key] = op
        return op

    def lowering(self, n: int, j: int) -> np.ndarray:
        """sigma^n_{j-1,j}"""
        return self(n, j - 1, j)

    def raising(self, n: int, j: int) -> np.ndarray:
        """sigma^n_{j,j-1}"""
        return self(n, j, j - 1)

    def projector(self, n: int, j: int) -> np.ndarray:
        return self(n, j, j)


@lru_cache(maxsize=16)
def ladder_ops(J: int, N: int = 1, max_dim: int = MAX_DIM) -> LadderOps:
    return LadderOps(J, N, max_dim)


def rotating_hamiltonian(array: ArraySpec, drive: DriveSpec) -> np.ndarray:
    """H_s + H_d in the drive frame, with the sign slaved to the generator.

    The generator is d rho/dt = -i[H, rho] + ..., so the printed
    i(j omega_d - omega_j)[sigma_jj, rho] and +i sqrt(j) Omega_d cos/2 ([sigma, rho] - H.c.)
    rows correspond to H = sum (omega_j - j omega_d) sigma_jj - sum sqrt(j) Omega_d cos(k_d x)/2 (sigma + sigma^dag).
    """
    ops = ladder_ops(array.J, array.N)
    w = array.proto.levels
    H = np.zeros((ops.dim, ops.dim), dtype=complex)
    kd = drive.omega_d
    for n, t in enumerate(array.transmons):
        c = np.cos(kd * t.position)
        for j in range(1, array.J):
            H += (w[j] - j * drive.omega_d) * ops.projector(n, j)
            amp = np.sqrt(j) * drive.Omega_d * c / 2.0
            H -= amp * (ops.raising(n, j) + ops.lowering(n, j))
    return H


def single_atom_liouvillian(transmon: TransmonSpec, drive: DriveSpec) -> np.ndarray:
    """Zeroth-order generator of a single transmon, built row by row from the
    single-atom master equation (no collective terms)."""
    J = transmon.J
    w = transmon.levels
    gam = decay_rates(transmon)
    deph = transmon.dephasing
    x = transmon.position

    def s(a, b):
        m = np.zeros((J, J), dtype=complex)
        m[a, b] = 1.0
        return m

    L = np.zeros((J * J, J * J), dtype=complex)
    for j in range(J):
        L += 1j * (j * drive.omega_d - w[j]) * comm(s(j, j))
    cd = np.cos(drive.omega_d * x)
    for j in range(1, J):
        C = comm(s(j, j - 1))
        L += 1j * np.sqrt(j) * drive.Omega_d * cd / 2.0 * (C - hc(C))
    for j in range(1, J):
        for l in range(1, J):
            A, B = s(j - 1, j), s(l, l - 1)
            T = sprepost(A, B) - spre(B @ A)
            L += np.sqrt(j * l) * gam[j - 1] / 2.0 * (T + hc(T))
    for j in range(J):
        if deph[j]:
            P = s(j, j)
            T = sprepost(P, P) - spre(P @ P)
            L += deph[j] * (T + hc(T))
    return L


def build_liouvillian0(array: ArraySpec, drive: DriveSpec, rates: RateTable | None = None) -> np.ndarray:
    """Zeroth-order (probe-free) generator of an N-transmon array.

    Includes the detuning and drive commutators, waveguide-mediated
    collective dissipation gamma^{nm} with its coherent dipole-dipole partner
    Delta^{nm}, and per-level pure dephasing.
    """
    if rates is None:
        rates = collective_rates(array)
    N, J = array.N, array.J
    for name, shape in (("collective_decay", (N, N, J - 1)), ("lamb_shift", (N, N, J - 1)), ("dephasing", (N, J))):
        arr = getattr(rates, name)
        if arr is None or np.shape(arr) != shape:
            raise SpecError(f"rate table field {name!r} missing or has wrong shape (expected {shape})")
    ops = ladder_ops(J, N)
    w = array.proto.levels
    d = ops.dim
    L = np.zeros((d * d, d * d), dtype=complex)

    for n in range(N):
        for j in range(1, J):
            L += 1j * (j * drive.omega_d - w[j]) * comm(ops.projector(n, j))
    for n, t in enumerate(array.transmons):
        cd = np.cos(drive.omega_d * t.position)
        if drive.Omega_d == 0 or cd == 0:
            continue
        for j in range(1, J):
            C = comm(ops.raising(n, j))
            L += 1j * np.sqrt(j) * drive.Omega_d * cd / 2.0 * (C - hc(C))

    g, D = rates.collective_decay, rates.lamb_shift
    for n in range(N):
        for m in range(N):
            for j in range(1, J):
                gnm, dnm = g[n, m, j - 1], D[n, m, j - 1]
                if gnm == 0 and dnm == 0:
                    continue
                A = ops.lowering(m, j)
                for l in range(1, J):
                    B = ops.raising(n, l)
                    T = sprepost(A, B) - spre(B @ A)
                    Th = hc(T)
                    c = np.sqrt(j * l)
                    L += 1j * c * dnm * (T - Th) + c * gnm / 2.0 * (T + Th)

    for n in range(N):
        for j in range(J):
            gp = rates.dephasing[n, j]
            if gp:
                P = ops.projector(n, j)
                T = sprepost(P, P) - spre(P)
                L += gp * (T + hc(T))
    return L


def probe_unit_superops(array: ArraySpec) -> list[np.ndarray]:
    """Per-atom probe generators without the cos(k_p x_n) factor.

    Entry n is i sum_j sqrt(j)/2 [sigma^n_{j,j-1}, .].
    """
    ops = ladder_ops(array.J, array.N)
    out = []
    for n in range(array.N):
        S = sum(np.sqrt(j) / 2.0 * comm(ops.raising(n, j)) for j in range(1, array.J))
        out.append(1j * S)
    return out


def build_probe_superops(array: ArraySpec, probe: ProbeSpec) -> tuple[np.ndarray, np.ndarray]:
    """(S_plus, S_minus): coefficients of exp(+i(omega_d - omega_p)t) and its conjugate,
    normalised per unit Omega_p."""
    units = probe_unit_superops(array)
    kp = probe.omega_p
    S_plus = sum(np.cos(kp * x) * S for x, S in zip(array.positions, units))
    # S_plus = i c C, and the "- H.c." partner -i c hc(C) is exactly hc(S_plus)
    return S_plus, hc(S_plus)


__all__ = [
    "LadderOps",
    "build_liouvillian0",
    "build_probe_superops",
    "comm",
    "hc",
    "ladder_ops",
    "probe_unit_superops",
    "rotating_hamiltonian",
    "single_atom_liouvillian",
    "spost",
    "spre",
    "sprepost",
    "trace_functional",
    "unvec",
    "vec",
    "wavenumbers",
]
