"""Exception types raised by the solvers."""

from __future__ import annotations


class SpecError(ValueError):
    """Invalid physical specification or configuration."""


class DegenerateSteadyState(RuntimeError):
    """The zeroth-order Liouvillian has more than one zero mode."""

    def __init__(self, null_dim: int, singular_values):
        self.null_dim = null_dim
        self.singular_values = singular_values
        super().__init__(
            f"steady state is not unique: {null_dim} singular values below tolerance "
            f"(smallest: {list(singular_values)})"
        )


class SingularAtZeroDetuning(RuntimeError):
    """The shifted first-order operator is singular (probe exactly at the drive)."""


class SingularPi(RuntimeError):
    def __init__(self, condition: float):
        self.condition = condition
        super().__init__(f"sideband coefficient matrix is singular (cond={condition:.3e})")


class ZeroRelaxation(ZeroDivisionError):
    """Single-sideband formula evaluated on a transition with vanishing relaxation."""


class NonConvergence(RuntimeError):
    """Time-domain trajectory has not settled within the integration window."""


class WindowMismatch(RuntimeError):
    """No integer number of beat periods fits the requested demodulation window."""
