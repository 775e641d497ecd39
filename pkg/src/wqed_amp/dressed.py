"""Dressed-state sideband analysis.

The rotating-frame atom+drive Hamiltonian is diagonalised into dressed states
|D_mu>.  In that basis the first-order coherences s_{mu nu} = <D_nu|rho1|D_mu>
obey Bloch equations whose coefficients are the rate tensors below; keeping
only the near-resonant sideband transitions gives a small linear system Pi.

Index conventions
-----------------
* ``<sigma_{D_mu D_nu}> = Tr(rho |D_mu><D_nu|) = <D_nu|rho|D_mu>``.
* Jump operators are labelled by ``a = n*(J-1) + (j-1)`` for atom n and
  transition j -> j-1; ``Lw[a] = U^dag sigma^n_{j-1,j} U`` and ``Rw[a] = Lw[a]^dag``.
* In d<rho>_{nu mu}/dt the coefficient of rho_{eta xi} is
  ``Gbar[eta, nu, mu, xi] - delta_{xi mu} sum_k Gp[k, nu, eta, k]
  - delta_{eta nu} sum_k Gm[k, xi, mu, k]``.
* A sideband (mu, nu) is the transition |D_mu, F> -> |D_nu, F+1> at
  omega^D_nu - omega^D_mu + omega_d; |D_nu> is its upper state.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np

from .errors import SingularPi, ZeroRelaxation
from .model import ArraySpec, DriveSpec, ProbeSpec, RateTable, collective_rates
from .operators import build_liouvillian0, build_probe_superops, ladder_ops, rotating_hamiltonian
from .response import emission_weights, ground_state, linear_response_rho1, reflection, steady_state

GAIN_LABELS = ("none", "attenuation", "inversion", "interference", "mixed")
SINGLE_TOLERANCE = 0.02
DECOUPLED_TOLERANCE = 0.02
PI_COND_LIMIT = 1e12


@dataclass(frozen=True)
class DressedBasis:
    energies: np.ndarray   # ascending
    U: np.ndarray          # columns |D_mu>
    phase_convention: str = "max-abs-real-positive"

    @property
    def dim(self) -> int:
        return self.energies.size

    def to_dressed(self, X: np.ndarray) -> np.ndarray:
        """U^dag X U, i.e. entry [a, b] = <D_a|X|D_b>."""
        return self.U.conj().T @ X @ self.U

    def ground_overlap(self) -> np.ndarray:
        return np.abs(self.U[0, :])


def dressed_basis(array: ArraySpec, drive: DriveSpec, tie_tol: float = 1e-9) -> DressedBasis:
    """Eigenbasis of the drive-frame Hamiltonian with deterministic labels."""
    H = rotating_hamiltonian(array, drive)
    e, U = np.linalg.eigh(H)
    # phase: largest-magnitude component real positive (first such index on ties)
    for c in range(U.shape[1]):
        col = U[:, c]
        k = int(np.argmax(np.abs(col) - 1e-12 * np.arange(col.size)))
        U[:, c] = col * (abs(col[k]) / col[k])
    # ties: descending |<0|D>|, then by the bare index of the dominant component
    order = np.arange(e.size)
    start = 0
    while start < e.size:
        stop = start + 1
        while stop < e.size and e[stop] - e[start] <= tie_tol * max(1.0, abs(e[start])):
            stop += 1
        if stop - start > 1:
            blk = list(range(start, stop))
            blk.sort(key=lambda c: (-round(abs(U[0, c]), 12), int(np.argmax(np.abs(U[:, c])))))
            order[start:stop] = blk
        start = stop
    return DressedBasis(energies=e[order].copy(), U=U[:, order].copy())


def _jump_index(array: ArraySpec):
    return [(n, j) for n in range(array.N) for j in range(1, array.J)]


def dressed_lowering(basis: DressedBasis, array: ArraySpec) -> np.ndarray:
    """Stack Lw[a] = U^dag sigma^n_{j-1,j} U, shape (N(J-1), d, d)."""
    ops = ladder_ops(array.J, array.N)
    return np.array([basis.to_dressed(ops.lowering(n, j)) for n, j in _jump_index(array)])


def coefficient_C(basis: DressedBasis, array: ArraySpec, omega_p: float) -> np.ndarray:
    """C[mu, nu] = sum_{n,j} (gamma~_j(x_n)/gamma10) Tr(sigma^n_{j-1,j} sigma_{D_nu D_mu})
    = sum w <D_mu|sigma^n_{j-1,j}|D_nu>."""
    w = emission_weights(array, omega_p).reshape(-1)
    return np.tensordot(w, dressed_lowering(basis, array), axes=1)


def pump_matrix(basis: DressedBasis, array: ArraySpec, omega_p: float) -> np.ndarray:
    """Omega^D[mu, nu] = sum_{n,j} (sqrt(j) gamma10/2) cos(k_p x_n) <D_nu|sigma^n_{j,j-1}|D_mu>."""
    Lw = dressed_lowering(basis, array)
    coef = np.array([np.sqrt(j) * array.gamma10 / 2.0 * np.cos(omega_p * array.positions[n])
                     for n, j in _jump_index(array)])
    # <D_nu|sigma_{j,j-1}|D_mu> = conj(<D_mu|sigma_{j-1,j}|D_nu>) = conj(Lw[mu, nu])
    return np.tensordot(coef, Lw.conj(), axes=1)


def dressed_detunings(basis: DressedBasis, omega_p: float, omega_d: float) -> np.ndarray:
    """delta[mu, nu] = omega_p - (omega^D_nu - omega^D_mu + omega_d)."""
    e = basis.energies
    return omega_p - (e[None, :] - e[:, None] + omega_d)


def dressed_populations(rho0: np.ndarray, basis: DressedBasis) -> tuple[np.ndarray, np.ndarray]:
    """Populations <D_mu|rho0|D_mu> and the difference table P[nu, mu] = p_nu - p_mu."""
    p = np.real(np.einsum("im,ij,jm->m", basis.U.conj(), rho0, basis.U))
    return p, p[:, None] - p[None, :]


@dataclass
class SidebandRates:
    """Dressed rate coefficients for one (array, drive) point.

    ``chi``, ``eta_plus`` and ``eta_minus`` are the jump-index matrices of the
    waveguide dissipator; the four-index tensors are built on demand.
    """

    Lw: np.ndarray            # (A, d, d)
    Pw: np.ndarray            # (N*J, d, d) dressed projectors
    dephasing: np.ndarray     # (N*J,)
    chi: np.ndarray           # [a_lower, a_raise]
    eta_plus: np.ndarray      # [a_raise, a_lower]
    eta_minus: np.ndarray     # [a_raise, a_lower]
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def Rw(self) -> np.ndarray:
        return np.conj(self.Lw.transpose(0, 2, 1))

    @cached_property
    def gamma_bar(self) -> np.ndarray:
        """Gbar[eta, nu, mu, xi]."""
        G = np.einsum("lr,lve,rxm->evmx", self.chi, self.Lw, self.Rw, optimize=True)
        G += 2.0 * np.einsum("p,pve,pxm->evmx", self.dephasing, self.Pw, self.Pw, optimize=True)
        return G

    def _gamma_pm(self, eta: np.ndarray) -> np.ndarray:
        G = np.einsum("rl,rve,lxm->evmx", eta, self.Rw, self.Lw, optimize=True)
        G += np.einsum("p,pve,pxm->evmx", self.dephasing, self.Pw, self.Pw, optimize=True)
        return G

    @cached_property
    def gamma_plus(self) -> np.ndarray:
        return self._gamma_pm(self.eta_plus)

    @cached_property
    def gamma_minus(self) -> np.ndarray:
        return self._gamma_pm(self.eta_minus)

    # contracted pieces, cheap without the four-index tensors
    def _contract(self, eta: np.ndarray) -> np.ndarray:
        """K[nu, eta] = sum_k G[k, nu, eta, k] for G built from ``eta``."""
        key = id(eta)
        if key not in self._cache:
            RL = np.einsum("rl,rvk,lke->ve", eta, self.Rw, self.Lw, optimize=True)
            RL += np.einsum("p,pve->ve", self.dephasing, self.Pw)
            self._cache[key] = RL
        return self._cache[key]

    @property
    def K_plus(self) -> np.ndarray:
        return self._contract(self.eta_plus)

    @property
    def K_minus(self) -> np.ndarray:
        return self._contract(self.eta_minus)

    def gamma_bar_entry(self, eta: int, nu: int, mu: int, xi: int) -> complex:
        val = np.einsum("lr,l,r->", self.chi, self.Lw[:, nu, eta], self.Rw[:, xi, mu])
        val += 2.0 * np.sum(self.dephasing * self.Pw[:, nu, eta] * self.Pw[:, xi, mu])
        return complex(val)

    def coupling(self, row: tuple[int, int], col: tuple[int, int]) -> complex:
        """Coefficient of <sigma_{col}> in d<sigma_{row}>/dt, without the detuning.

        ``row`` and ``col`` are sideband pairs (mu, nu).
        """
        mu, nu = row
        mu2, nu2 = col
        val = self.gamma_bar_entry(nu2, nu, mu, mu2)
        if mu == mu2:
            val -= self.K_plus[nu, nu2]
        if nu == nu2:
            val -= self.K_minus[mu2, mu]
        return val

    def composite(self, mu: int, nu: int) -> complex:
        """Composite relaxation Gamma^D_{mu nu} (negative real part for a damped coherence)."""
        return self.coupling((mu, nu), (mu, nu))


def dressed_rates(basis: DressedBasis, array: ArraySpec, rates: RateTable | None = None) -> SidebandRates:
    if rates is None:
        rates = collective_rates(array)
    idx = _jump_index(array)
    A = len(idx)
    chi = np.zeros((A, A), dtype=complex)
    ep = np.zeros((A, A), dtype=complex)
    em = np.zeros((A, A), dtype=complex)
    g, D = rates.collective_decay, rates.lamb_shift
    for a, (m, k) in enumerate(idx):          # lowering on atom m, level k
        for b, (n, j) in enumerate(idx):      # raising on atom n, level j
            s = np.sqrt(j * k)
            chi[a, b] = s * ((g[n, m, k - 1] + g[n, m, j - 1]) / 2.0 + 1j * (D[n, m, k - 1] - D[n, m, j - 1]))
            ep[b, a] = s * (g[n, m, k - 1] / 2.0 + 1j * D[n, m, k - 1])
            em[b, a] = s * (g[n, m, j - 1] / 2.0 - 1j * D[n, m, j - 1])
    ops = ladder_ops(array.J, array.N)
    Pw = np.array([basis.to_dressed(ops.projector(n, j)) for n in range(array.N) for j in range(array.J)])
    return SidebandRates(
        Lw=dressed_lowering(basis, array),
        Pw=Pw,
        dephasing=np.asarray(rates.dephasing, dtype=float).reshape(-1),
        chi=chi,
        eta_plus=ep,
        eta_minus=em,
    )


def pump_terms(basis: DressedBasis, rho0: np.ndarray, array: ArraySpec, omega_p: float) -> np.ndarray:
    """Source of the dressed first-order Bloch equations, indexed [mu, nu].

    b[mu, nu] = i sum_k (Omega^D_{mu k} <sigma_{D_k D_nu}>_0 - Omega^D_{k nu} <sigma_{D_mu D_k}>_0),
    using the full rho0 including dressed coherences.
    """
    Om = pump_matrix(basis, array, omega_p)
    R = basis.to_dressed(rho0)      # R[a, b] = <sigma_{D_b D_a}>_0
    # sum_k Om[mu,k] R[nu,k] - Om[k,nu] R[k,mu]
    return 1j * (Om @ R.T - (R.T @ Om))


def identify_sidebands(basis: DressedBasis, omega_p: float, omega_d: float,
                       threshold: float = 1.0) -> list[tuple[int, int]]:
    """Ordered pairs (mu, nu), mu != nu, with |delta^D_{mu nu}| <= threshold, sorted by |delta|."""
    delta = dressed_detunings(basis, omega_p, omega_d)
    mu, nu = np.nonzero(np.abs(delta) <= threshold)
    pairs = [(int(a), int(b)) for a, b in zip(mu, nu) if a != b]
    pairs.sort(key=lambda p: (abs(delta[p]), p))
    return pairs


@dataclass(frozen=True)
class ReducedSolution:
    pairs: list[tuple[int, int]]
    coherences: np.ndarray
    r: float
    Pi: np.ndarray
    condition: float


def assemble_pi(pairs, rates: SidebandRates, delta: np.ndarray, zero_offdiagonal: bool = False) -> np.ndarray:
    M = len(pairs)
    Pi = np.zeros((M, M), dtype=complex)
    for i, p in enumerate(pairs):
        for k, q in enumerate(pairs):
            if i == k:
                Pi[i, i] = rates.composite(*p) + 1j * delta[p]
            elif not zero_offdiagonal:
                Pi[i, k] = rates.coupling(p, q)
    return Pi


def reduced_model_solve(pairs, rates: SidebandRates, pump: np.ndarray, C: np.ndarray, delta: np.ndarray,
                        zero_offdiagonal: bool = False) -> ReducedSolution:
    """Solve Pi s = b on the active sidebands and return r = |1 + 2i sum C s|."""
    pairs = [tuple(p) for p in pairs]
    if not pairs:
        return ReducedSolution([], np.zeros(0, dtype=complex), 1.0, np.zeros((0, 0), dtype=complex), 1.0)
    Pi = assemble_pi(pairs, rates, delta, zero_offdiagonal)
    cond = float(np.linalg.cond(Pi))
    if not np.isfinite(cond) or cond > PI_COND_LIMIT:
        raise SingularPi(cond)
    b = np.array([pump[p] for p in pairs])
    s = np.linalg.solve(Pi, b)
    r = abs(1.0 + 2j * sum(C[p] * s[i] for i, p in enumerate(pairs)))
    return ReducedSolution(pairs, s, float(r), Pi, cond)


def single_sideband_prefactor(mu: int, nu: int, rates: SidebandRates, C: np.ndarray, Om: np.ndarray) -> complex:
    """2 C_{mu nu} Omega^D_{mu nu} / Gamma^D_{mu nu}."""
    G = rates.composite(mu, nu)
    if G == 0:
        raise ZeroRelaxation(f"Gamma^D vanishes for sideband ({mu}, {nu})")
    return 2.0 * C[mu, nu] * Om[mu, nu] / G


def single_sideband_r(mu: int, nu: int, rates: SidebandRates, C: np.ndarray, Om: np.ndarray,
                      populations: np.ndarray, detuning: float = 0.0) -> float:
    """r = |1 - 2 C Omega^D P^D_{nu mu} / (Gamma^D + i delta)| for one isolated sideband."""
    G = rates.composite(mu, nu) + 1j * detuning
    if G == 0:
        raise ZeroRelaxation(f"Gamma^D vanishes for sideband ({mu}, {nu})")
    P = populations[nu] - populations[mu]
    return float(abs(1.0 - 2.0 * C[mu, nu] * Om[mu, nu] * P / G))


@dataclass
class Transition:
    mu: int
    nu: int
    f_offset: int
    delta: float
    inversion: float      # P^D_{nu mu}
    inverted: bool


@dataclass
class SidebandReport:
    transitions: list[Transition]
    populations: np.ndarray
    r_full: float | None
    r_reduced: float
    r_decoupled: float
    r_single: float
    classification: str
    condition: float = 1.0

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return [(t.mu, t.nu) for t in self.transitions]

    def to_dict(self) -> dict:
        return {
            "transitions": [asdict(t) for t in self.transitions],
            "populations": [float(p) for p in self.populations],
            "r_full": None if self.r_full is None or not np.isfinite(self.r_full) else float(self.r_full),
            "r_reduced": float(self.r_reduced),
            "r_decoupled": float(self.r_decoupled),
            "r_single": float(self.r_single),
            "classification": self.classification,
            "condition": float(self.condition),
        }


def classify_gain(report: SidebandReport) -> str:
    """Label the gain mechanism at one point.

    ``r`` is the full-model value when present, else the reduced one.
    inversion: an active sideband is inverted and the incoherent sum of
    single-sideband terms matches r to 2 %; interference: r > 1 with no
    inverted active sideband and the decoupled model giving r ~ 1.
    """
    if not report.transitions:
        return "none"
    r = report.r_full if report.r_full is not None and np.isfinite(report.r_full) else report.r_reduced
    if r <= 1.0:
        return "attenuation"
    inverted = any(t.inverted for t in report.transitions)
    if inverted and abs(r - report.r_single) <= SINGLE_TOLERANCE * r:
        return "inversion"
    if not inverted and abs(report.r_decoupled - 1.0) <= DECOUPLED_TOLERANCE:
        return "interference"
    return "mixed"


@dataclass
class DressedAnalysis:
    """Everything needed to evaluate the dressed models at one point."""

    basis: DressedBasis
    rates: SidebandRates
    rho0: np.ndarray
    populations: np.ndarray
    C: np.ndarray
    Om: np.ndarray
    pump: np.ndarray
    delta: np.ndarray

    def reduced(self, pairs, zero_offdiagonal: bool = False) -> ReducedSolution:
        return reduced_model_solve(pairs, self.rates, self.pump, self.C, self.delta, zero_offdiagonal)

    def r_single(self, pairs) -> float:
        tot = 0.0 + 0.0j
        for mu, nu in pairs:
            G = self.rates.composite(mu, nu) + 1j * self.delta[mu, nu]
            if G == 0:
                raise ZeroRelaxation(f"Gamma^D vanishes for sideband ({mu}, {nu})")
            tot += 2.0 * self.C[mu, nu] * self.Om[mu, nu] * (self.populations[nu] - self.populations[mu]) / G
        return float(abs(1.0 - tot))


def analyze(array: ArraySpec, drive: DriveSpec, omega_p: float, rho0: np.ndarray | None = None,
            L0: np.ndarray | None = None) -> DressedAnalysis:
    basis = dressed_basis(array, drive)
    if rho0 is None:
        if L0 is None:
            L0 = build_liouvillian0(array, drive)
        rho0 = steady_state(L0, initial=ground_state(array)).rho0
    pops, _ = dressed_populations(rho0, basis)
    return DressedAnalysis(
        basis=basis,
        rates=dressed_rates(basis, array),
        rho0=rho0,
        populations=pops,
        C=coefficient_C(basis, array, omega_p),
        Om=pump_matrix(basis, array, omega_p),
        pump=pump_terms(basis, rho0, array, omega_p),
        delta=dressed_detunings(basis, omega_p, drive.omega_d),
    )


def sideband_report(array: ArraySpec, drive: DriveSpec, omega_p: float, *, threshold: float = 1.0,
                    pairs=None, r_full: float | None = None, compute_full: bool = False) -> SidebandReport:
    """Active sidebands, populations, the three dressed r values and the gain label."""
    L0 = build_liouvillian0(array, drive)
    ss = steady_state(L0, initial=ground_state(array))
    an = analyze(array, drive, omega_p, rho0=ss.rho0)
    if pairs is None:
        pairs = identify_sidebands(an.basis, omega_p, drive.omega_d, threshold)
    pairs = [tuple(int(x) for x in p) for p in pairs]
    if compute_full and r_full is None:
        S_plus, _ = build_probe_superops(array, ProbeSpec(omega_p))
        lr = linear_response_rho1(L0, S_plus, ss.rho0, omega_p - drive.omega_d, array.gamma10)
        r_full = reflection(lr.rho1, array, omega_p)
    return report_from_analysis(an, omega_p, pairs, r_full)


def report_from_analysis(an: DressedAnalysis, omega_p: float, pairs, r_full: float | None = None) -> SidebandReport:
    pairs = [tuple(int(x) for x in p) for p in pairs]
    red = an.reduced(pairs)
    dec = an.reduced(pairs, zero_offdiagonal=True)
    trans = []
    for mu, nu in pairs:
        P = float(an.populations[nu] - an.populations[mu])
        trans.append(Transition(mu, nu, +1, float(an.delta[mu, nu]), P, P > 0))
    rep = SidebandReport(
        transitions=trans,
        populations=an.populations,
        r_full=r_full,
        r_reduced=red.r,
        r_decoupled=dec.r,
        r_single=an.r_single(pairs) if pairs else 1.0,
        classification="none",
        condition=red.condition,
    )
    rep.classification = classify_gain(rep)
    return rep


def row_reports(array: ArraySpec, drive: DriveSpec, rho0: np.ndarray, omega_ps, r_full, threshold: float = 1.0):
    """Sideband reports along one drive-power row, sharing the basis and rates."""
    basis = dressed_basis(array, drive)
    rates = dressed_rates(basis, array)
    pops, _ = dressed_populations(rho0, basis)
    out = []
    for wp, rf in zip(omega_ps, r_full):
        an = DressedAnalysis(basis, rates, rho0, pops, coefficient_C(basis, array, wp), pump_matrix(basis, array, wp),
                             pump_terms(basis, rho0, array, wp), dressed_detunings(basis, wp, drive.omega_d))
        pairs = identify_sidebands(basis, wp, drive.omega_d, threshold)
        try:
            out.append(report_from_analysis(an, wp, pairs, float(rf)).to_dict())
        except (SingularPi, ZeroRelaxation) as exc:
            out.append({"error": type(exc).__name__})
    return out
