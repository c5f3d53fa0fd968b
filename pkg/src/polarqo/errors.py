"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`PolarqoError`, so callers can catch the whole family at once.
"""

from __future__ import annotations

__all__ = [
    "PolarqoError",
    "DimensionOverflow",
    "BadModeIndex",
    "NotAntiHermitian",
    "BasisMismatch",
    "NegativeEigenvalue",
    "VacuumState",
    "LabelInvalid",
    "CutoffExceeded",
    "TailTooLarge",
    "QuadratureUnderResolved",
    "ParamInvalid",
    "EmptySector",
    "NotPScalar",
    "NoConvergence",
    "FamilyUnsupported",
    "PathInvalid",
    "ConstraintViolated",
    "SpecError",
]


class PolarqoError(Exception):
    """Base class of all package errors."""


class DimensionOverflow(PolarqoError):
    """The requested Fock basis is larger than the configured limit."""


class BadModeIndex(PolarqoError):
    """A spatiotemporal mode index or polarization label is out of range."""


class NotAntiHermitian(PolarqoError):
    """An exponent generator is not anti-Hermitian."""


class BasisMismatch(PolarqoError):
    """Objects built on different Fock bases were combined."""


class NegativeEigenvalue(PolarqoError):
    """A matrix expected to be positive semidefinite is not."""


class VacuumState(PolarqoError):
    """A quantity normalized by the photon number was requested for the vacuum."""


class LabelInvalid(PolarqoError):
    """Quantum-number labels are inconsistent."""


class CutoffExceeded(PolarqoError):
    """A state needs more photons than the basis cutoff allows."""


class TailTooLarge(PolarqoError):
    """Truncation discarded more norm than the tolerance allows.

    Attributes
    ----------
    leak : float
        The discarded norm.
    """

    def __init__(self, leak: float, limit: float, what: str = "state"):
        self.leak = float(leak)
        self.limit = float(limit)
        super().__init__(
            f"{what}: truncation tail {self.leak:.3e} exceeds tolerance {self.limit:.3e}"
        )


class QuadratureUnderResolved(PolarqoError):
    """Quadrature node counts fall below the exactness bound."""


class ParamInvalid(PolarqoError):
    """Closed-form parameters are out of their domain."""


class EmptySector(PolarqoError):
    """No basis state carries the requested quasispin."""


class NotPScalar(PolarqoError):
    """The state is not in the P-scalar (p = 0) sector."""


class NoConvergence(PolarqoError):
    """Step doubling hit its cap before the estimate settled."""


class FamilyUnsupported(PolarqoError):
    """No closed form is implemented for this state family."""


class PathInvalid(PolarqoError):
    """A loop on the sphere is malformed or not closed."""


class ConstraintViolated(PolarqoError):
    """Amplitudes break the phase constraint of their family."""


class SpecError(PolarqoError):
    """A declarative state specification failed validation.

    The message starts with the dotted path of the offending field.
    """
