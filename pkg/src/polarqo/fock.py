"""Truncated multimode Fock spaces and the operator/state engine.

A basis covers ``m`` spatiotemporal modes, each carrying two circular
polarizations, so a basis vector is an occupation tuple
``(n+_1, n-_1, ..., n+_m, n-_m)``.  Only tuples with total photon number
``N <= n_max`` are kept.  Vectors are ordered by ascending ``N`` and,
inside each block, by descending lexicographic order of the tuple, which
gives for one mode and ``n_max = 2``::

    (0,0) (1,0) (0,1) (2,0) (1,1) (0,2)

This ordering is a stable contract for every file written by the package.

Operators that are polynomials in ladder operators are described by
:class:`LadderSum` and realized on a basis on demand.  Creation operators
that would leave the cutoff are mapped to zero.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from math import comb
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import expm_multiply

from .config import DEFAULT, Tolerances
from .errors import (
    BadModeIndex,
    BasisMismatch,
    DimensionOverflow,
    NegativeEigenvalue,
    NotAntiHermitian,
    PolarqoError,
    TailTooLarge,
)

__all__ = [
    "FockBasis",
    "LadderSum",
    "Operator",
    "QuantumState",
    "build_basis",
    "slot",
    "creation_op",
    "annihilation_op",
    "number_op",
    "identity_op",
    "commutator",
    "unitary_from_generator",
    "expectation",
    "expm_apply",
    "components",
]


# ---------------------------------------------------------------------------
# basis


def _compositions(total: int, parts: int):
    """Weak compositions of ``total`` into ``parts`` in descending lex order."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Occupation-number basis of ``2m`` modes with total-photon cutoff.

    Parameters
    ----------
    m : int
        Number of spatiotemporal modes.
    n_max : int
        Inclusive cutoff on the total photon number.
    states : tuple of tuple of int
        Occupation tuples in canonical order.

    Notes
    -----
    Two bases compare equal when ``m`` and ``n_max`` agree, since the
    enumeration is then identical.
    """

    m: int
    n_max: int
    states: tuple = field(repr=False)

    def __eq__(self, other):
        return (
            isinstance(other, FockBasis)
            and self.m == other.m
            and self.n_max == other.n_max
        )

    def __hash__(self):
        return hash((FockBasis, self.m, self.n_max))

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def n_slots(self) -> int:
        return 2 * self.m

    @cached_property
    def index(self) -> dict:
        """Map from occupation tuple to its ordinal."""
        return {s: k for k, s in enumerate(self.states)}

    @cached_property
    def occupations(self) -> np.ndarray:
        """Integer array of shape ``(dim, 2m)``."""
        occ = np.array(self.states, dtype=np.int64).reshape(self.dim, self.n_slots)
        occ.setflags(write=False)
        return occ

    @cached_property
    def totals(self) -> np.ndarray:
        tot = self.occupations.sum(axis=1)
        tot.setflags(write=False)
        return tot

    @cached_property
    def block_bounds(self) -> tuple:
        """``(start, stop)`` of each fixed-N block, indexed by N."""
        bounds = []
        start = 0
        for n in range(self.n_max + 1):
            size = comb(n + self.n_slots - 1, self.n_slots - 1)
            bounds.append((start, start + size))
            start += size
        return tuple(bounds)

    def block(self, n: int) -> slice:
        """Slice of the fixed-N block."""
        if not 0 <= n <= self.n_max:
            raise ValueError(f"block N={n} outside 0..{self.n_max}")
        return slice(*self.block_bounds[n])

    @cached_property
    def _sorted_keys(self):
        keys = self._encode(self.occupations)
        order = np.argsort(keys)
        return keys[order], order

    def _encode(self, occ: np.ndarray) -> np.ndarray:
        radix = self.n_max + 2
        weights = radix ** np.arange(self.n_slots, dtype=np.int64)
        return occ @ weights

    def lookup(self, occ: np.ndarray) -> np.ndarray:
        """Ordinals of occupation rows; ``-1`` for rows outside the basis."""
        occ = np.asarray(occ, dtype=np.int64).reshape(-1, self.n_slots)
        out = np.full(len(occ), -1, dtype=np.int64)
        ok = (occ >= 0).all(axis=1) & (occ.sum(axis=1) <= self.n_max)
        if ok.any():
            keys, order = self._sorted_keys
            pos = np.searchsorted(keys, self._encode(occ[ok]))
            out[ok] = order[pos]
        return out


def build_basis(m: int, n_max: int, tol: Tolerances = DEFAULT) -> FockBasis:
    """Enumerate the truncated Fock basis.

    Parameters
    ----------
    m : int
        Number of spatiotemporal modes, at least 1.
    n_max : int
        Inclusive total-photon cutoff, at least 0.
    tol : Tolerances, optional
        Supplies ``dim_limit``.

    Returns
    -------
    FockBasis

    Raises
    ------
    DimensionOverflow
        If ``C(n_max + 2m, 2m)`` exceeds ``tol.dim_limit``.

    Examples
    --------
    >>> build_basis(1, 2).states
    ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))
    """
    if int(m) != m or m < 1:
        raise ValueError("m must be >= 1")
    if int(n_max) != n_max or n_max < 0:
        raise ValueError("n_max must be >= 0")
    m, n_max = int(m), int(n_max)
    dim = comb(n_max + 2 * m, 2 * m)
    if dim > tol.dim_limit:
        raise DimensionOverflow(
            f"basis m={m}, n_max={n_max} has dimension {dim} > limit {tol.dim_limit}"
        )
    states = tuple(s for n in range(n_max + 1) for s in _compositions(n, 2 * m))
    return FockBasis(m, n_max, states)


def slot(j: int, pol, m: int | None = None) -> int:
    """Column of mode ``j`` (1-based) and polarization ``pol`` in an occupation tuple."""
    if m is not None and not 1 <= j <= m:
        raise BadModeIndex(f"mode index {j} outside 1..{m}")
    if j < 1:
        raise BadModeIndex(f"mode index {j} must be >= 1")
    if pol in ("+", 1, +1):
        return 2 * (j - 1)
    if pol in ("-", "−", -1):
        return 2 * (j - 1) + 1
    raise BadModeIndex(f"polarization must be '+' or '-', got {pol!r}")


# ---------------------------------------------------------------------------
# ladder polynomials

_CREATE, _ANNIHILATE = 1, -1


@dataclass(frozen=True)
class LadderSum:
    """Linear combination of products of ladder operators.

    Each term is ``(coefficient, word)`` where ``word`` is a tuple of
    ``(slot, kind)`` with ``kind = +1`` for a creation and ``-1`` for an
    annihilation operator.  Words read left to right as written, so the
    rightmost factor acts first.
    """

    terms: tuple = ()

    @classmethod
    def single(cls, coef, *ops) -> "LadderSum":
        return cls(((complex(coef), tuple(ops)),))

    def __add__(self, other: "LadderSum") -> "LadderSum":
        return LadderSum(self.terms + other.terms)

    def __neg__(self) -> "LadderSum":
        return self * -1

    def __sub__(self, other: "LadderSum") -> "LadderSum":
        return self + (-other)

    def __mul__(self, scalar) -> "LadderSum":
        scalar = complex(scalar)
        return LadderSum(tuple((c * scalar, w) for c, w in self.terms))

    __rmul__ = __mul__

    def adjoint(self) -> "LadderSum":
        return LadderSum(
            tuple(
                (c.conjugate(), tuple((s, -k) for s, k in reversed(w)))
                for c, w in self.terms
            )
        )

    def act(self, occ: Sequence[int], n_cap: int | None = None) -> dict:
        """Apply to one occupation tuple without a basis.

        Intermediate and final states above ``n_cap`` are dropped.
        """
        out: dict = {}
        for coef, word in self.terms:
            cur = list(occ)
            amp = coef
            for s, kind in reversed(word):
                if kind == _ANNIHILATE:
                    if cur[s] == 0:
                        amp = 0
                        break
                    amp *= np.sqrt(cur[s])
                    cur[s] -= 1
                else:
                    cur[s] += 1
                    if n_cap is not None and sum(cur) > n_cap:
                        amp = 0
                        break
                    amp *= np.sqrt(cur[s])
            if amp != 0:
                key = tuple(cur)
                out[key] = out.get(key, 0) + amp
        return out

    def sparse(self, basis: FockBasis) -> sp.csr_matrix:
        """CSR realization on ``basis`` under the truncation convention."""
        occ0 = basis.occupations
        rows, cols, vals = [], [], []
        all_cols = np.arange(basis.dim)
        for coef, word in self.terms:
            cur = occ0.copy()
            amp = np.full(basis.dim, coef, dtype=complex)
            ok = np.ones(basis.dim, dtype=bool)
            for s, kind in reversed(word):
                if not 0 <= s < basis.n_slots:
                    raise BadModeIndex(f"slot {s} outside basis with m={basis.m}")
                if kind == _ANNIHILATE:
                    amp *= np.sqrt(np.maximum(cur[:, s], 0))
                    cur[:, s] -= 1
                    ok &= cur[:, s] >= 0
                else:
                    cur[:, s] += 1
                    ok &= cur.sum(axis=1) <= basis.n_max
                    amp *= np.sqrt(cur[:, s])
            ok &= amp != 0
            idx = basis.lookup(cur[ok])
            rows.append(idx)
            cols.append(all_cols[ok])
            vals.append(amp[ok])
        if not rows:
            return sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
        mat = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(basis.dim, basis.dim),
        ).tocsr()
        mat.sum_duplicates()
        mat.eliminate_zeros()
        return mat

    def operator(self, basis: FockBasis, kind: str | None = None) -> "Operator":
        return Operator(basis, self.sparse(basis), kind=kind)


# ---------------------------------------------------------------------------
# operators

_KINDS = ("hermitian", "antihermitian", "general")


def _max_abs(mat) -> float:
    if sp.issparse(mat):
        return float(abs(mat).max()) if mat.nnz else 0.0
    return float(np.max(np.abs(mat))) if mat.size else 0.0


def _classify(mat, tol: Tolerances) -> str:
    scale = _max_abs(mat)
    if scale == 0.0:
        return "hermitian"
    diff_h = _max_abs(mat - mat.conj().T)
    if diff_h <= tol.hermitian * scale:
        return "hermitian"
    if _max_abs(mat + mat.conj().T) <= tol.antihermitian * scale:
        return "antihermitian"
    return "general"


class Operator:
    """Matrix of an operator on a :class:`FockBasis`.

    Parameters
    ----------
    basis : FockBasis
    matrix : array_like or scipy.sparse matrix
        ``dim x dim`` complex matrix.  Sparse input is kept sparse and the
        dense array is produced on first access of :attr:`matrix`.
    kind : {'hermitian', 'antihermitian', 'general'}, optional
        Symmetry tag.  Detected from the matrix when omitted, validated
        when given.
    tol : Tolerances, optional

    Notes
    -----
    Instances are immutable; the dense array is read-only.
    """

    __slots__ = ("_basis", "_sparse", "_dense", "_kind", "__weakref__")

    def __init__(self, basis: FockBasis, matrix, kind: str | None = None,
                 tol: Tolerances = DEFAULT):
        if sp.issparse(matrix):
            mat = sp.csr_matrix(matrix, dtype=complex)
            dense = None
        else:
            dense = np.array(matrix, dtype=complex)
            dense.setflags(write=False)
            mat = None
        shape = (mat if mat is not None else dense).shape
        if shape != (basis.dim, basis.dim):
            raise BasisMismatch(
                f"matrix shape {shape} does not match basis dimension {basis.dim}"
            )
        data = mat if mat is not None else dense
        if kind is None:
            kind = _classify(data, tol)
        elif kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}")
        elif kind == "hermitian":
            if _max_abs(data - data.conj().T) > tol.hermitian * max(_max_abs(data), 1e-300):
                raise ValueError("matrix tagged hermitian is not Hermitian")
        elif kind == "antihermitian":
            if _max_abs(data + data.conj().T) > tol.antihermitian * max(_max_abs(data), 1e-300):
                raise NotAntiHermitian("matrix tagged antihermitian is not anti-Hermitian")
        object.__setattr__(self, "_basis", basis)
        object.__setattr__(self, "_sparse", mat)
        object.__setattr__(self, "_dense", dense)
        object.__setattr__(self, "_kind", kind)

    def __setattr__(self, name, value):
        raise AttributeError("Operator is immutable")

    def __repr__(self):
        return f"Operator(dim={self.basis.dim}, kind={self.kind!r})"

    @property
    def basis(self) -> FockBasis:
        return self._basis

    @property
    def kind(self) -> str:
        return self._kind

    @property
    def hermitian_flag(self) -> str:
        return self._kind

    @property
    def matrix(self) -> np.ndarray:
        """Dense read-only matrix."""
        if self._dense is None:
            dense = self._sparse.toarray()
            dense.setflags(write=False)
            object.__setattr__(self, "_dense", dense)
        return self._dense

    @property
    def csr(self) -> sp.csr_matrix:
        """Sparse view (converted from the dense matrix when needed)."""
        if self._sparse is not None:
            return self._sparse
        return sp.csr_matrix(self._dense)

    @property
    def _data(self):
        return self._sparse if self._sparse is not None else self._dense

    @property
    def dag(self) -> "Operator":
        kind = self.kind
        return Operator(self.basis, self._data.conj().T, kind=kind if kind != "general" else None)

    def _check(self, other: "Operator"):
        if not isinstance(other, Operator):
            raise TypeError(f"expected Operator, got {type(other).__name__}")
        if other.basis != self.basis:
            raise BasisMismatch("operators live on different bases")

    def __add__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.basis, self._data + other._data)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.basis, self._data - other._data)

    def __neg__(self) -> "Operator":
        return Operator(self.basis, -self._data, kind=self.kind)

    def __mul__(self, scalar) -> "Operator":
        if isinstance(scalar, Operator):
            return self @ scalar
        return Operator(self.basis, self._data * complex(scalar))

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            if self._sparse is not None and other._sparse is not None:
                return Operator(self.basis, self._sparse @ other._sparse)
            return Operator(self.basis, np.asarray(self._data @ other.matrix))
        return np.asarray(self._data @ np.asarray(other))

    def apply(self, vec) -> np.ndarray:
        """Matrix-vector (or matrix-matrix) product."""
        return np.asarray(self._data @ np.asarray(vec, dtype=complex))

    def norm(self) -> float:
        """Frobenius norm."""
        if self._sparse is not None:
            return float(sp.linalg.norm(self._sparse))
        return float(np.linalg.norm(self._dense))

    def power(self, k: int) -> "Operator":
        out = identity_op(self.basis)
        for _ in range(k):
            out = out @ self
        return out


def identity_op(basis: FockBasis) -> Operator:
    return Operator(basis, sp.identity(basis.dim, dtype=complex, format="csr"), kind="hermitian")


def commutator(a: Operator, b: Operator) -> Operator:
    """``[a, b] = ab - ba``."""
    return a @ b - b @ a


def creation_op(basis: FockBasis, j: int, pol) -> Operator:
    """Creation operator of polarization ``pol`` in mode ``j`` (1-based).

    Transitions that leave the cutoff are mapped to zero.

    Raises
    ------
    BadModeIndex
    """
    s = slot(j, pol, basis.m)
    return LadderSum.single(1, (s, _CREATE)).operator(basis, kind="general")


def annihilation_op(basis: FockBasis, j: int, pol) -> Operator:
    """Annihilation operator of polarization ``pol`` in mode ``j`` (1-based)."""
    s = slot(j, pol, basis.m)
    return LadderSum.single(1, (s, _ANNIHILATE)).operator(basis, kind="general")


def number_op(basis: FockBasis) -> Operator:
    """Total photon number as a diagonal operator."""
    return Operator(basis, sp.diags(basis.totals.astype(complex), format="csr"), kind="hermitian")


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Normalized pure state or density matrix on a basis.

    Parameters
    ----------
    basis : FockBasis
    kind : {'pure', 'mixed'}
    data : ndarray
        Amplitude vector (pure) or density matrix (mixed).
    leak : float
        Norm discarded by truncation while the state was built.

    Use :meth:`pure` and :meth:`mixed` rather than the raw constructor.
    """

    basis: FockBasis
    kind: str
    data: np.ndarray = field(repr=False)
    leak: float = 0.0
    tol: Tolerances = field(default=DEFAULT, repr=False)

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        dim = self.basis.dim
        if self.kind == "pure":
            if data.shape != (dim,):
                raise BasisMismatch(f"amplitude vector of length {data.shape} != {dim}")
            nrm = np.linalg.norm(data)
            if abs(nrm - 1) > self.tol.norm:
                raise ValueError(f"pure state norm {nrm!r} differs from 1")
        elif self.kind == "mixed":
            if data.shape != (dim, dim):
                raise BasisMismatch(f"density shape {data.shape} != ({dim}, {dim})")
            tr = np.trace(data)
            if abs(tr - 1) > self.tol.norm:
                raise ValueError(f"density trace {tr!r} differs from 1")
            scale = max(float(np.max(np.abs(data))), 1e-300)
            if np.max(np.abs(data - data.conj().T)) > self.tol.hermitian * scale:
                raise ValueError("density matrix is not Hermitian")
            lo = _min_eigenvalue(data)
            if lo < -self.tol.psd:
                raise NegativeEigenvalue(f"density has eigenvalue {lo:.3e}")
        else:
            raise ValueError("kind must be 'pure' or 'mixed'")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def pure(cls, basis: FockBasis, amplitudes, normalize: bool = False,
             leak: float = 0.0, tol: Tolerances = DEFAULT) -> "QuantumState":
        vec = np.asarray(amplitudes, dtype=complex)
        if normalize:
            nrm = np.linalg.norm(vec)
            if nrm == 0:
                raise ValueError("cannot normalize the zero vector")
            vec = vec / nrm
        return cls(basis, "pure", vec, leak, tol)

    @classmethod
    def mixed(cls, basis: FockBasis, rho, normalize: bool = False,
              leak: float = 0.0, tol: Tolerances = DEFAULT) -> "QuantumState":
        rho = np.asarray(rho, dtype=complex)
        if normalize:
            rho = rho / np.trace(rho)
        return cls(basis, "mixed", rho, leak, tol)

    @classmethod
    def fock(cls, basis: FockBasis, occupation: Sequence[int]) -> "QuantumState":
        """Single occupation-number state."""
        occupation = tuple(int(x) for x in occupation)
        if occupation not in basis.index:
            raise PolarqoError(f"occupation {occupation} not in basis")
        vec = np.zeros(basis.dim, dtype=complex)
        vec[basis.index[occupation]] = 1
        return cls.pure(basis, vec)

    @property
    def is_pure(self) -> bool:
        return self.kind == "pure"

    @property
    def vector(self) -> np.ndarray:
        if self.kind != "pure":
            raise ValueError("mixed state has no amplitude vector")
        return self.data

    def density(self) -> np.ndarray:
        if self.kind == "pure":
            return np.outer(self.data, self.data.conj())
        return self.data

    def fidelity(self, other: "QuantumState") -> float:
        """``|<a|b>|^2`` for pure states, ``<a|rho|a>`` when one side is mixed.

        The Uhlmann fidelity of two mixed states is not needed here.
        """
        if other.basis != self.basis:
            raise BasisMismatch("states live on different bases")
        if self.is_pure and other.is_pure:
            return float(abs(np.vdot(self.data, other.data)) ** 2)
        if self.is_pure:
            return float(np.real(np.vdot(self.data, other.data @ self.data)))
        if other.is_pure:
            return other.fidelity(self)
        raise NotImplementedError("fidelity between two mixed states")


def components(pattern) -> list:
    """Index arrays of the connected components of a sparsity pattern.

    Only components of size > 0 are returned, largest first.
    """
    pat = sp.csr_matrix(pattern)
    n, labels = connected_components(abs(pat) + abs(pat).T, directed=False)
    groups = [np.flatnonzero(labels == k) for k in range(n)]
    groups.sort(key=len, reverse=True)
    return groups


def _min_eigenvalue(mat: np.ndarray) -> float:
    off = mat - np.diag(np.diag(mat))
    if not off.any():
        return float(np.min(np.real(np.diag(mat)))) if mat.size else 0.0
    lo = np.inf
    for idx in components(mat != 0):
        sub = mat[np.ix_(idx, idx)]
        lo = min(lo, float(la.eigvalsh(sub, subset_by_index=[0, 0])[0])
                 if len(idx) > 1 else float(np.real(sub[0, 0])))
    return lo


# ---------------------------------------------------------------------------
# exponentials and expectations


def unitary_from_generator(G: Operator, tol: Tolerances = DEFAULT) -> Operator:
    """Matrix exponential ``exp(G)`` of an anti-Hermitian generator.

    The Hermitian matrix ``iG`` is diagonalized separately on each
    connected block of its sparsity pattern, so number-conserving
    generators are exponentiated one N-block (or smaller) at a time.

    Parameters
    ----------
    G : Operator
        Anti-Hermitian within ``tol.antihermitian * max|G|``.

    Returns
    -------
    Operator
        Unitary ``exp(G)``.

    Raises
    ------
    NotAntiHermitian
    """
    data = G._data
    scale = _max_abs(data)
    if scale and _max_abs(data + data.conj().T) > tol.antihermitian * scale:
        raise NotAntiHermitian("generator is not anti-Hermitian")
    dim = G.basis.dim
    if scale == 0:
        return identity_op(G.basis)
    H = (1j * sp.csr_matrix(data))
    H = (H + H.conj().T) * 0.5
    U = np.zeros((dim, dim), dtype=complex)
    for idx in components(H):
        if len(idx) == 1:
            k = idx[0]
            U[k, k] = np.exp(-1j * H[k, k].real)
            continue
        sub = H[idx][:, idx].toarray()
        w, V = la.eigh(sub)
        U[np.ix_(idx, idx)] = (V * np.exp(-1j * w)) @ V.conj().T
    return Operator(G.basis, U, kind="general")


def expectation(state: QuantumState, A: Operator) -> complex:
    """``<psi|A|psi>`` for pure states or ``Tr(rho A)`` for mixed ones.

    Raises
    ------
    BasisMismatch
    """
    if state.basis != A.basis:
        raise BasisMismatch("state and operator live on different bases")
    if state.is_pure:
        psi = state.data
        return complex(np.vdot(psi, A.apply(psi)))
    rho = state.data
    data = A._data
    if sp.issparse(data):
        return complex((data.multiply(rho.T)).sum())
    return complex(np.einsum("ij,ji->", data, rho))


def _bfs_closure(gen: LadderSum, seeds: Iterable[tuple], n_cap: int, max_states: int):
    """States reachable from ``seeds`` under ``gen`` with at most ``n_cap`` photons."""
    order: list = []
    index: dict = {}
    entries: list = []
    queue = deque()
    for s in seeds:
        if s not in index:
            index[s] = len(order)
            order.append(s)
            queue.append(s)
    while queue:
        src = queue.popleft()
        col = index[src]
        for dst, amp in gen.act(src, n_cap=n_cap).items():
            if sum(dst) > n_cap:
                continue
            if dst not in index:
                if len(order) >= max_states:
                    raise PolarqoError(
                        f"reachable set exceeds {max_states} states; lower the padding"
                    )
                index[dst] = len(order)
                order.append(dst)
                queue.append(dst)
            entries.append((index[dst], col, amp))
    return order, entries


def expm_apply(gen: LadderSum, state: QuantumState, tail_tol: float | None = None,
               pad: int | None = None, tol: Tolerances = DEFAULT) -> QuantumState:
    """Apply ``exp(gen)`` to a pure state and project onto the basis.

    The exponential is evaluated on the states reachable from the support of
    ``state`` with up to ``n_max + pad`` photons, so amplitudes at or
    below the cutoff are accurate even when ``gen`` does not conserve N.
    The norm that lands above the cutoff is reported as ``leak``.

    Parameters
    ----------
    gen : LadderSum
        Anti-Hermitian generator.
    state : QuantumState
        Pure input state.
    tail_tol : float, optional
        Largest acceptable leak, ``tol.tail`` by default.
    pad : int, optional
        Extra photons kept during the evaluation; default
        ``max(8, n_max // 2)``.

    Returns
    -------
    QuantumState
        Normalized projection, with ``leak = 1 - ||P psi||^2``.

    Raises
    ------
    TailTooLarge
    NotAntiHermitian
    """
    if not state.is_pure:
        raise ValueError("expm_apply needs a pure state")
    basis = state.basis
    tail_tol = tol.tail if tail_tol is None else tail_tol
    pad = max(8, basis.n_max // 2) if pad is None else int(pad)
    n_cap = basis.n_max + pad
    support = np.flatnonzero(state.data)
    order, entries = _bfs_closure(gen, (basis.states[k] for k in support), n_cap, 50000)
    size = len(order)
    if entries:
        r, c, v = zip(*entries)
        G = sp.coo_matrix((np.array(v, dtype=complex), (r, c)), shape=(size, size)).tocsr()
    else:
        G = sp.csr_matrix((size, size), dtype=complex)
    scale = _max_abs(G)
    if scale and _max_abs(G + G.conj().T) > tol.antihermitian * scale:
        raise NotAntiHermitian("generator is not anti-Hermitian")
    psi = np.zeros(size, dtype=complex)
    psi[: len(support)] = state.data[support]
    out = np.zeros(size, dtype=complex)
    for idx in components(G) if size else []:
        sub_psi = psi[idx]
        if not sub_psi.any():
            continue
        sub = G[idx][:, idx]
        if len(idx) <= 800:
            H = 1j * sub.toarray()
            w, V = la.eigh((H + H.conj().T) / 2)
            out[idx] = V @ (np.exp(-1j * w) * (V.conj().T @ sub_psi))
        else:
            out[idx] = expm_multiply(sub.tocsc(), sub_psi)
    occ = np.array(order, dtype=np.int64).reshape(size, basis.n_slots)
    inside = occ.sum(axis=1) <= basis.n_max
    vec = np.zeros(basis.dim, dtype=complex)
    vec[basis.lookup(occ[inside])] = out[inside]
    kept = float(np.vdot(vec, vec).real)
    leak = max(0.0, 1.0 - kept)
    if leak > tail_tol:
        raise TailTooLarge(leak, tail_tol, "exponential")
    return QuantumState.pure(basis, vec / np.sqrt(kept), leak=leak + state.leak)
