"""P-quasispin operators, biphoton generators and scalar diagnostics.

With ``a_+`` and ``a_-`` the circular-polarization annihilators of one
spatiotemporal mode, the generators are::

    P0 = (n_+ - n_-) / 2,   P+ = a+^dag a-,   P- = a-^dag a+,
    P1 = (P+ + P-) / 2,     P2 = i (P+ - P-) / 2,

summed over modes.  They close as ``[P0, P+-] = +-P+-`` and
``[P+, P-] = 2 P0``.  In spin language ``P1 = Jx``, ``P2 = -Jy`` and
``P0 = Jz``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .config import DEFAULT, Tolerances
from .errors import BadModeIndex, BasisMismatch, NegativeEigenvalue, VacuumState
from .fock import (
    FockBasis,
    LadderSum,
    Operator,
    QuantumState,
    components,
    expectation,
    slot,
)

__all__ = [
    "PolarizationOps",
    "BiphotonOps",
    "build_polarization_ops",
    "p_terms",
    "yplus_terms",
    "xplus_terms",
    "e_terms",
    "radial_operator",
    "moment",
    "polarization_degree",
    "VarianceProfile",
    "variance_profile",
    "DepolarizationMeasures",
    "depolarization_measures",
]

_C, _A = 1, -1


def _modes(m: int, mode: int | None):
    if mode is None:
        return range(1, m + 1)
    if not 1 <= mode <= m:
        raise BadModeIndex(f"mode index {mode} outside 1..{m}")
    return (mode,)


@lru_cache(maxsize=None)
def p_terms(m: int, name: str, mode: int | None = None) -> LadderSum:
    """Ladder-operator form of ``P0, Pplus, Pminus, P1, P2`` or ``N``.

    ``mode`` restricts the sum to one spatiotemporal mode.
    """
    out = LadderSum()
    for j in _modes(m, mode):
        sp_, sm = slot(j, "+"), slot(j, "-")
        if name == "P0":
            out += LadderSum.single(0.5, (sp_, _C), (sp_, _A))
            out += LadderSum.single(-0.5, (sm, _C), (sm, _A))
        elif name == "Pplus":
            out += LadderSum.single(1, (sp_, _C), (sm, _A))
        elif name == "Pminus":
            out += LadderSum.single(1, (sm, _C), (sp_, _A))
        elif name == "P1":
            out += LadderSum.single(0.5, (sp_, _C), (sm, _A))
            out += LadderSum.single(0.5, (sm, _C), (sp_, _A))
        elif name == "P2":
            out += LadderSum.single(0.5j, (sp_, _C), (sm, _A))
            out += LadderSum.single(-0.5j, (sm, _C), (sp_, _A))
        elif name == "N":
            out += LadderSum.single(1, (sp_, _C), (sp_, _A))
            out += LadderSum.single(1, (sm, _C), (sm, _A))
        else:
            raise ValueError(f"unknown generator {name!r}")
    return out


def yplus_terms(i: int, j: int) -> LadderSum:
    """``Y+_ij = (a+^dag(i) a-^dag(j) + a-^dag(i) a+^dag(j)) / 2``."""
    return (LadderSum.single(0.5, (slot(i, "+"), _C), (slot(j, "-"), _C))
            + LadderSum.single(0.5, (slot(i, "-"), _C), (slot(j, "+"), _C)))


def xplus_terms(i: int, j: int) -> LadderSum:
    """``X+_ij = a+^dag(i) a-^dag(j) - a-^dag(i) a+^dag(j)``."""
    return (LadderSum.single(1, (slot(i, "+"), _C), (slot(j, "-"), _C))
            + LadderSum.single(-1, (slot(i, "-"), _C), (slot(j, "+"), _C)))


def e_terms(i: int, j: int) -> LadderSum:
    """``E_ij = sum_alpha a_alpha^dag(i) a_alpha(j)``."""
    return (LadderSum.single(1, (slot(i, "+"), _C), (slot(j, "+"), _A))
            + LadderSum.single(1, (slot(i, "-"), _C), (slot(j, "-"), _A)))


@lru_cache(maxsize=64)
def _sparse(basis: FockBasis, name: str, mode: int | None) -> sp.csr_matrix:
    # shared between callers; treated as read-only
    return p_terms(basis.m, name, mode).sparse(basis)


class PolarizationOps:
    """P-quasispin operator set on one basis.

    Operators are built lazily on first access and cached.

    Parameters
    ----------
    basis : FockBasis
    mode : int, optional
        Restrict every generator to one spatiotemporal mode.

    Attributes
    ----------
    P0, Pplus, Pminus, P1, P2, N : Operator
    casimir : Operator
        ``P^2 = (P+P- + P-P+)/2 + P0^2``.
    per_mode : list of PolarizationOps
        One operator set per spatiotemporal mode (only for the total set).
    """

    def __init__(self, basis: FockBasis, mode: int | None = None):
        if mode is not None:
            _modes(basis.m, mode)
        self._basis = basis
        self._mode = mode

    @property
    def basis(self) -> FockBasis:
        return self._basis

    @property
    def mode(self) -> int | None:
        return self._mode

    def sparse(self, name: str) -> sp.csr_matrix:
        return _sparse(self._basis, name, self._mode)

    def terms(self, name: str) -> LadderSum:
        return p_terms(self._basis.m, name, self._mode)

    def _op(self, name: str, kind: str) -> Operator:
        return Operator(self._basis, self.sparse(name), kind=kind)

    @cached_property
    def P0(self) -> Operator:
        return self._op("P0", "hermitian")

    @cached_property
    def Pplus(self) -> Operator:
        return self._op("Pplus", "general")

    @cached_property
    def Pminus(self) -> Operator:
        return self._op("Pminus", "general")

    @cached_property
    def P1(self) -> Operator:
        return self._op("P1", "hermitian")

    @cached_property
    def P2(self) -> Operator:
        return self._op("P2", "hermitian")

    @cached_property
    def N(self) -> Operator:
        return self._op("N", "hermitian")

    @cached_property
    def casimir(self) -> Operator:
        pp, pm, p0 = self.sparse("Pplus"), self.sparse("Pminus"), self.sparse("P0")
        mat = 0.5 * (pp @ pm + pm @ pp) + p0 @ p0
        return Operator(self._basis, mat, kind="hermitian")

    def component(self, alpha: int) -> Operator:
        """``P_alpha`` for ``alpha`` in 0, 1, 2."""
        try:
            return (self.P0, self.P1, self.P2)[alpha]
        except (IndexError, TypeError):
            raise ValueError(f"axis must be 0, 1 or 2, got {alpha!r}") from None

    @cached_property
    def per_mode(self) -> list:
        if self._mode is not None:
            return [self]
        return [PolarizationOps(self._basis, j) for j in range(1, self._basis.m + 1)]

    def _stokes_check(self):
        if self._basis.m != 1:
            raise BadModeIndex("Stokes aliases exist only for a single mode (m = 1)")

    @property
    def Sigma1(self) -> Operator:
        """Stokes operator ``2 P2`` (m = 1 only)."""
        self._stokes_check()
        return self.P2 * 2

    @property
    def Sigma2(self) -> Operator:
        """Stokes operator ``-2 P0`` (m = 1 only)."""
        self._stokes_check()
        return self.P0 * -2

    @property
    def Sigma3(self) -> Operator:
        """Stokes operator ``-2 P1`` (m = 1 only)."""
        self._stokes_check()
        return self.P1 * -2


def build_polarization_ops(basis: FockBasis) -> PolarizationOps:
    """Polarization operator set on ``basis``."""
    return PolarizationOps(basis)


class BiphotonOps:
    """Biphoton cluster generators ``Y+_ij``, ``X+_ij`` and ``E_ij``.

    ``Y+`` commutes with ``P0``; ``X+`` commutes with all of ``P0, P+-``.
    """

    def __init__(self, basis: FockBasis):
        self._basis = basis

    @property
    def basis(self) -> FockBasis:
        return self._basis

    def _pair(self, i: int, j: int):
        m = self._basis.m
        for k in (i, j):
            if not 1 <= k <= m:
                raise BadModeIndex(f"mode index {k} outside 1..{m}")

    def Yplus(self, i: int, j: int) -> Operator:
        self._pair(i, j)
        return yplus_terms(i, j).operator(self._basis, kind="general")

    def Xplus(self, i: int, j: int) -> Operator:
        self._pair(i, j)
        return xplus_terms(i, j).operator(self._basis, kind="general")

    def E(self, i: int, j: int) -> Operator:
        self._pair(i, j)
        return e_terms(i, j).operator(self._basis)


# ---------------------------------------------------------------------------
# diagnostics


def radial_operator(ops: PolarizationOps, tol: Tolerances = DEFAULT) -> Operator:
    """Principal square root ``E_r = sqrt(P+ P-)``.

    ``P+P-`` is positive semidefinite and conserves every per-mode photon
    number, so the root is taken block by block.

    Raises
    ------
    NegativeEigenvalue
        If ``P+P-`` has an eigenvalue below ``-tol.psd``.
    """
    M = ops.sparse("Pplus") @ ops.sparse("Pminus")
    M = (M + M.conj().T) * 0.5
    dim = ops.basis.dim
    rows, cols, vals = [], [], []
    for idx in components(M):
        sub = M[idx][:, idx].toarray()
        w, V = la.eigh(sub)
        if w.min() < -tol.psd:
            raise NegativeEigenvalue(f"P+P- has eigenvalue {w.min():.3e}")
        root = (V * np.sqrt(np.clip(w, 0, None))) @ V.conj().T
        r, c = np.meshgrid(idx, idx, indexing="ij")
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(root.ravel())
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    ).tocsr()
    mat.eliminate_zeros()
    return Operator(ops.basis, mat, kind="hermitian")


def moment(state: QuantumState, A: Operator, s: int) -> complex:
    """``<A^s>`` by repeated application (no matrix powers formed)."""
    if state.basis != A.basis:
        raise BasisMismatch("state and operator live on different bases")
    if s == 0:
        return 1.0 + 0j
    data = A._data
    if state.is_pure:
        psi = state.data
        if A.kind == "hermitian":
            # <A^s> = <A^h psi | A^(s-h) psi> with h = s // 2
            left = psi
            for _ in range(s // 2):
                left = data @ left
            right = data @ left if s % 2 else left
            return complex(np.vdot(left, right))
        vec = psi
        for _ in range(s):
            vec = data @ vec
        return complex(np.vdot(psi, vec))
    mat = np.asarray(state.data)
    for _ in range(s):
        mat = np.asarray(data @ mat)
    return complex(np.trace(mat))


def _mean(state, A) -> float:
    return float(np.real(expectation(state, A)))


def polarization_degree(state: QuantumState, ops: PolarizationOps,
                        tol: Tolerances = DEFAULT) -> float:
    """Degree of polarization ``2 |<P>| / <N>``.

    The raw value is returned; it is not clamped to 1.

    Raises
    ------
    VacuumState
        If ``<N> <= tol.vacuum``.

    Examples
    --------
    A coherent state with only the ``+`` polarization excited is fully
    polarized, ``degP = 1``.
    """
    n = _mean(state, ops.N)
    if n <= tol.vacuum:
        raise VacuumState("polarization degree undefined for the vacuum")
    p = [_mean(state, ops.component(a)) for a in range(3)]
    return 2.0 * float(np.sqrt(sum(x * x for x in p))) / n


@dataclass(frozen=True)
class VarianceProfile:
    """Second-order polarization statistics of a state.

    Attributes
    ----------
    sigma : tuple of float
        ``(var P0, var P1, var P2)``.
    means : tuple of float
        ``(<P0>, <P1>, <P2>)``.
    n_mean : float
        ``<N>``.
    casimir : float
        ``<P^2>``.
    dP2 : float
        Total noise ``sum(sigma)``.
    deltaP2 : float or None
        Relative noise ``dP2 / <N>^2``; ``None`` for the vacuum.
    pbar : float
        Nonnegative root of ``pbar (pbar + 1) = <P^2>``.
    """

    sigma: tuple
    means: tuple
    n_mean: float
    casimir: float
    dP2: float
    deltaP2: float | None
    pbar: float

    @property
    def sigma_P0(self) -> float:
        return self.sigma[0]

    @property
    def sigma_P1(self) -> float:
        return self.sigma[1]

    @property
    def sigma_P2(self) -> float:
        return self.sigma[2]


def variance_profile(state: QuantumState, ops: PolarizationOps,
                     tol: Tolerances = DEFAULT) -> VarianceProfile:
    """Variances of ``P0, P1, P2`` and the derived noise measures.

    Parameters
    ----------
    state : QuantumState
    ops : PolarizationOps

    Returns
    -------
    VarianceProfile
        ``deltaP2`` is ``None`` when ``<N>`` vanishes.
    """
    means = tuple(_mean(state, ops.component(a)) for a in range(3))
    seconds = tuple(float(np.real(moment(state, ops.component(a), 2))) for a in range(3))
    sigma = tuple(s - m * m for s, m in zip(seconds, means))
    n = _mean(state, ops.N)
    cas = sum(seconds)
    dP2 = float(sum(sigma))
    pbar = 0.5 * (-1.0 + np.sqrt(1.0 + 4.0 * max(cas, 0.0)))
    delta = dP2 / (n * n) if n > tol.vacuum else None
    return VarianceProfile(sigma, means, n, cas, dP2, delta, float(pbar))


@dataclass(frozen=True)
class DepolarizationMeasures:
    """``dep_P = 1 - 2 pbar / <N>`` and ``dep_P0 = 1 - |2 <P0>| / <N>``."""

    dep_P: float
    dep_P0: float


def depolarization_measures(state: QuantumState, ops: PolarizationOps,
                            tol: Tolerances = DEFAULT) -> DepolarizationMeasures:
    """Depolarization measures built from ``pbar`` and ``<P0>``.

    Raises
    ------
    VacuumState
    """
    prof = variance_profile(state, ops, tol)
    n = prof.n_mean
    if n <= tol.vacuum:
        raise VacuumState("depolarization undefined for the vacuum")
    return DepolarizationMeasures(1.0 - 2.0 * prof.pbar / n, 1.0 - abs(2.0 * prof.means[0]) / n)
