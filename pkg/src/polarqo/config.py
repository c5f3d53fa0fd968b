"""Numerical tolerances shared by every module.

All thresholds live in one frozen record so that callers can tighten or
relax them in a single place.  Functions accept an optional ``tol``
argument and fall back to :data:`DEFAULT`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

__all__ = ["Tolerances", "DEFAULT"]


@dataclass(frozen=True)
class Tolerances:
    """Configuration record of numerical tolerances.

    Attributes
    ----------
    dim_limit : int
        Largest Fock basis that :func:`~polarqo.fock.build_basis` will build.
    hermitian : float
        Relative bound on ``max|M - M^dagger|`` for Hermitian operators.
    antihermitian : float
        Relative bound on ``max|G + G^dagger|`` for exponent generators.
    norm : float
        Allowed deviation of a pure state norm (or a density trace) from 1.
    psd : float
        Most negative eigenvalue tolerated in a density matrix or in P+P-.
    tail : float
        Largest leaked norm accepted from a non-number-conserving exponential.
    mixed_tail : float
        Largest discarded weight for truncated thermal and coherent mixtures.
    vacuum : float
        ``<N>`` at or below which a state counts as the vacuum.
    phase : float
        Convergence threshold of the geometric-phase step doubling.
    k_cap : int
        Largest number of loop steps tried by the phase estimator.
    eps_abs : float
        Absolute variance threshold used by the squeezing classifier.
    signature_rel : float
        Relative tolerance for matching the unpolarized-light variance patterns.
    s_max : int
        Highest moment order inspected when testing for the polarization vacuum.
    bessel_small : float
        Below this argument the Bessel ratio is replaced by its series limit.
    """

    dim_limit: int = 20000
    hermitian: float = 1e-12
    antihermitian: float = 1e-10
    norm: float = 1e-12
    psd: float = 1e-10
    tail: float = 1e-8
    mixed_tail: float = 1e-10
    vacuum: float = 1e-14
    phase: float = 1e-6
    k_cap: int = 2**20
    eps_abs: float = 1e-10
    signature_rel: float = 1e-6
    s_max: int = 4
    bessel_small: float = 1e-6

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if value <= 0:
                raise ValueError(f"tolerance {name} must be positive, got {value!r}")

    def with_(self, **changes) -> "Tolerances":
        """Return a copy with some fields replaced."""
        return replace(self, **changes)


DEFAULT = Tolerances()
