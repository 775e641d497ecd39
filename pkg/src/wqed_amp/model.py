"""Physical system description and scalar rate coefficients.

All quantities are expressed in units of the base decay rate ``gamma10``
(frequencies in rad * gamma10, positions in v_g / gamma10, with v_g = 1).

Decay-rate convention
---------------------
``bare_rates[j-1]`` is the rate gamma0_{j,j-1} that multiplies sqrt(j*l) in
the master equation.  The ladder matrix elements already carry the sqrt(j)
enhancement, so level ``j`` actually decays at ``j * gamma0_{j,j-1}``; with
the default ``bare_rates = gamma10`` this gives the familiar n*gamma10
level decay of a transmon.  :func:`level_decay_rates` returns those
effective emission rates.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import SpecError

DEPHASING_SCALINGS = ("uniform", "linear", "quadratic")


def dephasing_profile(gamma_phi: float, J: int, scaling: str = "quadratic") -> tuple[float, ...]:
    """Per-level pure dephasing rates built from a single scalar.

    Level 0 never dephases.  ``quadratic`` (the default) gives
    gamma_phi_j = j**2 * gamma_phi, which is what a fluctuating transition
    frequency omega10 produces for the |0><j| coherence; ``uniform`` uses the
    same rate for every excited level.
    """
    if gamma_phi < 0:
        raise SpecError("dephasing rate must be >= 0")
    j = np.arange(J, dtype=float)
    if scaling == "uniform":
        w = (j > 0).astype(float)
    elif scaling == "linear":
        w = j
    elif scaling == "quadratic":
        w = j**2
    else:
        raise SpecError(f"unknown dephasing scaling {scaling!r}; expected one of {DEPHASING_SCALINGS}")
    return tuple(float(x) for x in gamma_phi * w)


def _levels(J: int, omega10: float, alpha: float) -> np.ndarray:
    j = np.arange(J, dtype=float)
    return j * omega10 - j * (j - 1) * alpha / 2.0


@dataclass(frozen=True)
class TransmonSpec:
    J: int = 6
    omega10: float = 2100.0
    alpha: float = 100.0
    gamma10: float = 1.0
    position: float = 0.0
    dephasing: tuple[float, ...] | None = None
    bare_rates: tuple[float, ...] | None = None

    def __post_init__(self):
        if int(self.J) != self.J or self.J < 2:
            raise SpecError(f"J must be an integer >= 2, got {self.J}")
        object.__setattr__(self, "J", int(self.J))
        if self.gamma10 < 0:
            raise SpecError("gamma10 must be >= 0")
        if self.position < 0:
            raise SpecError("position must be >= 0 (mirror at x=0)")
        if self.omega10 <= 0:
            raise SpecError("omega10 must be > 0")
        if np.any(np.diff(_levels(self.J, self.omega10, self.alpha)) <= 0):
            raise SpecError(
                f"level ladder is not increasing: alpha={self.alpha} too large for J={self.J}"
            )
        deph = self.dephasing
        if deph is None:
            deph = (0.0,) * self.J
        deph = tuple(float(x) for x in deph)
        if len(deph) != self.J:
            raise SpecError(f"dephasing needs {self.J} per-level entries, got {len(deph)}")
        if any(x < 0 for x in deph):
            raise SpecError("dephasing rates must be >= 0")
        object.__setattr__(self, "dephasing", deph)
        bare = self.bare_rates
        if bare is None:
            bare = (float(self.gamma10),) * (self.J - 1)
        bare = tuple(float(x) for x in bare)
        if len(bare) != self.J - 1:
            raise SpecError(f"bare_rates needs {self.J - 1} per-transition entries, got {len(bare)}")
        if any(x < 0 for x in bare):
            raise SpecError("bare decay rates must be >= 0")
        object.__setattr__(self, "bare_rates", bare)

    @property
    def levels(self) -> np.ndarray:
        return build_levels(self)

    @property
    def transition_frequencies(self) -> np.ndarray:
        """omega_{j,j-1} for j = 1..J-1."""
        return np.diff(self.levels)

    def with_dephasing(self, gamma_phi: float, scaling: str = "quadratic") -> "TransmonSpec":
        return replace(self, dephasing=dephasing_profile(gamma_phi, self.J, scaling))

    def at(self, position: float) -> "TransmonSpec":
        return replace(self, position=float(position))


@dataclass(frozen=True)
class DriveSpec:
    omega_d: float
    Omega_d: float
    K: int | None = None

    def __post_init__(self):
        if self.omega_d <= 0:
            raise SpecError("omega_d must be > 0")
        if self.Omega_d < 0:
            raise SpecError("Omega_d must be >= 0")
        if self.K is not None and self.K < 1:
            raise SpecError("K must be >= 1")

    @classmethod
    def k_photon(cls, transmon: TransmonSpec, K: int, Omega_d: float) -> "DriveSpec":
        """Drive tuned so that K drive photons reach level K: omega_d = omega_K / K."""
        if K < 1 or K > transmon.J - 1:
            raise SpecError(f"K={K} outside 1..J-1 for J={transmon.J}")
        return cls(omega_d=float(transmon.levels[K]) / K, Omega_d=float(Omega_d), K=K)

    @property
    def power(self) -> float:
        """Drive power Omega_d**2 (in gamma10**2)."""
        return self.Omega_d**2

    def with_power(self, power: float) -> "DriveSpec":
        if power < 0:
            raise SpecError("drive power must be >= 0")
        return replace(self, Omega_d=float(np.sqrt(power)))


@dataclass(frozen=True)
class ProbeSpec:
    omega_p: float
    Omega_p: float = 0.0

    def __post_init__(self):
        if self.omega_p <= 0:
            raise SpecError("omega_p must be > 0")
        if self.Omega_p < 0:
            raise SpecError("Omega_p must be >= 0")


@dataclass(frozen=True)
class ArraySpec:
    """Ordered array of identical transmons along the waveguide."""

    transmons: tuple[TransmonSpec, ...]

    def __post_init__(self):
        ts = tuple(self.transmons)
        if not ts:
            raise SpecError("an array needs at least one transmon")
        first = ts[0]
        for t in ts[1:]:
            if (t.J, t.omega10, t.alpha, t.gamma10) != (first.J, first.omega10, first.alpha, first.gamma10):
                raise SpecError("all transmons in an array must share J, omega10, alpha and gamma10")
        pos = [t.position for t in ts]
        if any(b < a for a, b in zip(pos, pos[1:])):
            raise SpecError("transmon positions must be nondecreasing")
        object.__setattr__(self, "transmons", ts)

    @classmethod
    def single(cls, transmon: TransmonSpec | None = None) -> "ArraySpec":
        return cls((transmon or TransmonSpec(),))

    @classmethod
    def uniform(cls, transmon: TransmonSpec, positions: Sequence[float]) -> "ArraySpec":
        return cls(tuple(transmon.at(x) for x in positions))

    @property
    def N(self) -> int:
        return len(self.transmons)

    @property
    def J(self) -> int:
        return self.transmons[0].J

    @property
    def dim(self) -> int:
        return self.J**self.N

    @property
    def proto(self) -> TransmonSpec:
        return self.transmons[0]

    @property
    def positions(self) -> np.ndarray:
        return np.array([t.position for t in self.transmons], dtype=float)

    @property
    def omega10(self) -> float:
        return self.proto.omega10

    @property
    def gamma10(self) -> float:
        return self.proto.gamma10

    def with_dephasing(self, gamma_phi: float, scaling: str = "quadratic") -> "ArraySpec":
        return ArraySpec(tuple(t.with_dephasing(gamma_phi, scaling) for t in self.transmons))


@dataclass(frozen=True)
class RateTable:
    """Rate coefficients consumed by the Liouvillian builders.

    Arrays are indexed ``[..., j-1]`` for the transition j -> j-1.
    """

    bare_decay: np.ndarray        # (N, J-1)
    mirror_decay: np.ndarray      # (N, J-1)
    collective_decay: np.ndarray  # (N, N, J-1)
    lamb_shift: np.ndarray        # (N, N, J-1)
    wavenumbers: np.ndarray       # (J-1,)
    dephasing: np.ndarray = field(default=None)  # (N, J)

    @property
    def N(self) -> int:
        return self.bare_decay.shape[0]

    @property
    def J(self) -> int:
        return self.bare_decay.shape[1] + 1


def build_levels(spec: TransmonSpec) -> np.ndarray:
    """Level energies omega_j = j*omega10 - j(j-1)*alpha/2, j = 0..J-1."""
    w = _levels(spec.J, spec.omega10, spec.alpha)
    if np.any(np.diff(w) <= 0):
        raise SpecError("nonmonotonic level ladder")
    return w


def wavenumbers(spec: TransmonSpec) -> np.ndarray:
    """k_{j,j-1} = omega_{j,j-1} / v_g with v_g = 1."""
    return spec.transition_frequencies.copy()


def decay_rates(spec: TransmonSpec) -> np.ndarray:
    """Mirror-modified rates gamma_{j,j-1}(x) = gamma0_{j,j-1} cos^2(k_{j,j-1} x)."""
    return np.asarray(spec.bare_rates) * np.cos(wavenumbers(spec) * spec.position) ** 2


def level_decay_rates(spec: TransmonSpec) -> np.ndarray:
    """Total emission rate of level j into j-1, i.e. j * gamma_{j,j-1}(x)."""
    j = np.arange(1, spec.J)
    return j * decay_rates(spec)


def collective_rates(array: ArraySpec) -> RateTable:
    """Waveguide-mediated collective decay and Lamb shift for every atom pair.

    gamma^{nm} = gamma0/2 Re[e^{ik(x_n+x_m)} + e^{ik|x_n-x_m|}],
    Delta^{nm} = gamma0/4 Im[same].
    The diagonal n = m reduces to the single-atom gamma0 cos^2(kx).
    """
    k = wavenumbers(array.proto)
    x = array.positions
    bare = np.array([t.bare_rates for t in array.transmons], dtype=float)
    mirror = np.array([decay_rates(t) for t in array.transmons])
    xs = x[:, None] + x[None, :]
    xd = np.abs(x[:, None] - x[None, :])
    bracket = np.exp(1j * k[None, None, :] * xs[..., None]) + np.exp(1j * k[None, None, :] * xd[..., None])
    # geometric mean keeps the table symmetric if per-atom bare rates ever differ
    g0 = np.sqrt(bare[:, None, :] * bare[None, :, :])
    coll = g0 / 2.0 * bracket.real
    lamb = g0 / 4.0 * bracket.imag
    deph = np.array([t.dephasing for t in array.transmons], dtype=float)
    return RateTable(
        bare_decay=bare,
        mirror_decay=mirror,
        collective_decay=coll,
        lamb_shift=lamb,
        wavenumbers=k,
        dephasing=deph,
    )


@dataclass(frozen=True)
class CutoffCheck:
    top_population: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.top_population <= self.tolerance


def validate_cutoff(rho0: np.ndarray, J: int, N: int = 1, tolerance: float = 1e-3) -> CutoffCheck:
    """Largest single-atom population of the highest retained level J-1."""
    rho0 = np.asarray(rho0)
    diag = np.real(np.diag(rho0)).reshape((J,) * N)
    top = 0.0
    for n in range(N):
        other = tuple(a for a in range(N) if a != n)
        marg = diag.sum(axis=other) if other else diag
        top = max(top, float(marg[J - 1]))
    return CutoffCheck(top_population=top, tolerance=tolerance)
