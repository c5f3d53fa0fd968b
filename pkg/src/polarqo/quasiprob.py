"""Polarization Q-functions and characteristic functions.

The complete Q-function uses one reference vector; the reduced one for a
quasispin sector ``p`` sums over every highest-weight vector of that
sector, i.e. the null space of ``P+`` inside ``P0 = p``.  Closed forms for
semi-coherent, two-mode Glauber and thermal states are provided for
cross-checking.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from pathlib import Path

import numpy as np
import scipy.linalg as la
from scipy.special import ive

from .basis_states import half_integer
from .config import DEFAULT, Tolerances
from .errors import BasisMismatch, EmptySector, ParamInvalid
from .fock import FockBasis, QuantumState, components
from .gcs import GcsOrbit, GcsSpec, Rotator
from .polarization import PolarizationOps

__all__ = [
    "QGrid",
    "quadrature_nodes",
    "highest_weight_vectors",
    "q_complete",
    "q_complete_at",
    "q_reduced",
    "q_reduced_at",
    "q_reduced_closed",
    "char_fn_numeric",
    "char_fn_ordered",
    "char_fn_closed",
]


# ------------------------------------------------------------------ grids


def quadrature_nodes(n_theta: int = 64, n_phi: int = 128):
    """Gauss-Legendre nodes in ``cos(theta)`` and uniform ``phi`` nodes.

    Returns ``(theta, w_theta, phi, w_phi)``; the weights integrate
    ``sin(theta) d theta`` and ``d phi`` respectively.  ``theta`` ascends.
    """
    if n_theta < 1 or n_phi < 1:
        raise ParamInvalid("grid needs at least one node per axis")
    x, w = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(x)[::-1]
    return theta, w[::-1].copy(), 2 * np.pi * np.arange(n_phi) / n_phi, np.full(n_phi, 2 * np.pi / n_phi)


@dataclass
class QGrid:
    """Q-function sampled on a product grid.

    Attributes
    ----------
    theta_nodes, phi_nodes : ndarray
    values : ndarray
        Shape ``(len(theta_nodes), len(phi_nodes))``.
    p : Fraction or None
        Quasispin sector for reduced functions.
    theta_weights, phi_weights : ndarray
        Quadrature weights for ``sin(theta) d theta`` and ``d phi``.
    meta : dict
        Free-form provenance (state description, reference spec).
    """

    theta_nodes: np.ndarray
    phi_nodes: np.ndarray
    values: np.ndarray
    p: Fraction | None = None
    theta_weights: np.ndarray | None = None
    phi_weights: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.theta_nodes), len(self.phi_nodes)):
            raise ValueError("values shape does not match the node lists")
        if self.values.size and self.values.min() < -1e-12:
            raise ValueError(f"negative Q value {self.values.min():.3e}")

    def integral(self) -> float:
        """``(2p+1)/(4 pi) sum w Q``, i.e. the weight of this sector."""
        if self.theta_weights is None or self.phi_weights is None:
            raise ValueError("grid carries no quadrature weights")
        scale = 1.0 if self.p is None else float(2 * self.p + 1)
        return scale / (4 * np.pi) * float(self.theta_weights @ self.values @ self.phi_weights)

    def write_csv(self, path) -> Path:
        """Write ``theta,phi,q`` rows (theta-major) and a JSON sidecar ``<path>.json``."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta", "phi", "q"])
            for i, th in enumerate(self.theta_nodes):
                for j, ph in enumerate(self.phi_nodes):
                    w.writerow([repr(float(th)), repr(float(ph)), repr(float(self.values[i, j]))])
        side = {
            "p": None if self.p is None else str(self.p),
            "n_theta": len(self.theta_nodes),
            "n_phi": len(self.phi_nodes),
            "quadrature": {"theta": "gauss-legendre in cos(theta)", "phi": "uniform trapezoid"},
            **self.meta,
        }
        sidecar = path.with_name(path.name + ".json")
        sidecar.write_text(json.dumps(side, indent=2, sort_keys=True))
        return sidecar


# ------------------------------------------------------------- evaluation


def _expect_rows(states: np.ndarray, rho: QuantumState, order: np.ndarray) -> np.ndarray:
    """``<s_k|rho|s_k>`` for rows ``s_k`` living on basis indices ``order``."""
    if rho.is_pure:
        amp = states.conj() @ rho.data[order]
        return np.abs(amp) ** 2
    sub = rho.data[np.ix_(order, order)]
    return np.real(np.einsum("ki,ij,kj->k", states.conj(), sub, states))


def _check_basis(rho: QuantumState, basis: FockBasis):
    if rho.basis != basis:
        raise BasisMismatch("state and reference live on different bases")


def q_complete_at(rho: QuantumState, spec: GcsSpec, thetas, phis,
                  tol: Tolerances = DEFAULT) -> np.ndarray:
    """``<theta phi; psi0| rho |theta phi; psi0>`` at paired angle arrays."""
    orbit = GcsOrbit(spec, rho.basis, tol)
    rot = orbit.rotator
    return np.clip(_expect_rows(rot.batch_sub(thetas, phis), rho, rot.order), 0.0, None)


def q_complete(rho: QuantumState, spec: GcsSpec, n_theta: int = 64, n_phi: int = 128,
               tol: Tolerances = DEFAULT) -> QGrid:
    """Complete Q-function for the reference fixed by ``spec`` (angles ignored).

    Raises
    ------
    BasisMismatch
    """
    th, wt, ph, wp = quadrature_nodes(n_theta, n_phi)
    TH, PH = np.meshgrid(th, ph, indexing="ij")
    vals = q_complete_at(rho, spec, TH.ravel(), PH.ravel(), tol).reshape(TH.shape)
    return QGrid(th, ph, vals, None, wt, wp, {"reference": spec.to_dict()})


def highest_weight_vectors(basis: FockBasis, p, ops: PolarizationOps | None = None) -> np.ndarray:
    """Orthonormal highest-weight vectors of sector ``p``, as columns.

    These span ``ker(P+)`` inside the ``P0 = p`` eigenspace, one vector per
    multiplet label ``(n, lambda)``.
    """
    p = half_integer(p, "p")
    ops = ops or PolarizationOps(basis)
    twice_p0 = basis.occupations[:, 0::2].sum(axis=1) - basis.occupations[:, 1::2].sum(axis=1)
    Pp = ops.sparse("Pplus")
    cols = []
    for n in range(int(2 * p), basis.n_max + 1, 2):
        blk = basis.block(n)
        rows = np.arange(blk.start, blk.stop)
        src = rows[twice_p0[rows] == int(2 * p)]
        dst = rows[twice_p0[rows] == int(2 * p) + 2]
        if not len(src):
            continue
        if len(dst):
            ker = la.null_space(Pp[dst][:, src].toarray())
        else:
            ker = np.eye(len(src))
        for v in ker.T:
            full = np.zeros(basis.dim, dtype=complex)
            full[src] = v
            cols.append(full)
    if not cols:
        raise EmptySector(f"sector p = {p} has no states with N <= {basis.n_max}")
    return np.array(cols).T


def q_reduced_at(rho: QuantumState, p, thetas, phis, ops: PolarizationOps | None = None,
                 tol: Tolerances = DEFAULT) -> np.ndarray:
    """Reduced Q-function of sector ``p`` at paired angle arrays.

    Raises
    ------
    EmptySector
    """
    basis = rho.basis
    hw = highest_weight_vectors(basis, p, ops)
    thetas = np.asarray(thetas, dtype=float).ravel()
    phis = np.asarray(phis, dtype=float).ravel()
    total = np.zeros(len(thetas))
    for v in hw.T:
        rot = Rotator(basis, v)
        total += _expect_rows(rot.batch_sub(thetas, phis), rho, rot.order)
    return np.clip(total, 0.0, None)


def q_reduced(rho: QuantumState, p, n_theta: int = 64, n_phi: int = 128,
              ops: PolarizationOps | None = None, tol: Tolerances = DEFAULT) -> QGrid:
    """Reduced Q-function ``Q^p`` on the default product grid.

    Raises
    ------
    EmptySector
    """
    p = half_integer(p, "p")
    th, wt, ph, wp = quadrature_nodes(n_theta, n_phi)
    TH, PH = np.meshgrid(th, ph, indexing="ij")
    vals = q_reduced_at(rho, p, TH.ravel(), PH.ravel(), ops, tol).reshape(TH.shape)
    return QGrid(th, ph, vals, p, wt, wp)


# ----------------------------------------------------------- closed forms


def _cos2_half(theta, phi, theta2, phi2):
    """``cos^2`` of half the angle between two directions on the sphere."""
    dot = (np.sin(theta) * np.sin(theta2) * np.cos(phi - phi2)
           + np.cos(theta) * np.cos(theta2))
    return np.clip((1 + dot) / 2, 0.0, 1.0)


def _bessel_ratio(nu: int, x: float, small: float) -> float:
    """``I_nu(2x) / x^nu``, via its power series when ``x`` is tiny."""
    if x < small:
        return sum(x ** (2 * k) / (factorial(k) * factorial(k + nu)) for k in range(3))
    return float(ive(nu, 2 * x) * np.exp(2 * x) / x ** nu)


def _need(params: dict, *names):
    missing = [n for n in names if n not in params]
    if missing:
        raise ParamInvalid(f"missing parameter(s): {', '.join(missing)}")


def q_reduced_closed(family: str, params: dict, theta: float, phi: float,
                     tol: Tolerances = DEFAULT) -> float:
    """Closed-form reduced Q-functions.

    ``family``:

    ``'semi'``
        Pure semi-coherent state ``(p', mu', theta', phi')``; params ``p``,
        ``p_state``, ``mu``, ``theta_state``, ``phi_state``.  Gives
        ``C(2p, p+mu') cos^{2(p+mu')}(Theta/2) sin^{2(p-mu')}(Theta/2)`` for
        ``p = p'`` and 0 otherwise, ``Theta`` being the angle between the
        two directions.
    ``'glauber_m2'``
        Two-mode coherent state; params ``p``, ``alpha_plus``,
        ``alpha_minus`` (length 2).  Gives
        ``e^{-|alpha|^2} (2p+1) I_{2p+1}(2x) / x^{2p+1} (sum_i |alpha'+_i|^2)^{2p}``
        with ``x = |alpha1+ alpha2- - alpha1- alpha2+|`` and
        ``alpha'+_i`` the amplitude along the rotated ``+`` direction.
        The removable singularity at ``x = 0`` uses the power series.
    ``'thermal'``
        Single-mode thermal state; params ``p``, ``beta``.  Gives
        ``(1 - e^{-beta})^2 e^{-2 p beta}``, independent of angles.

    Raises
    ------
    ParamInvalid
    """
    try:
        if family == "semi":
            _need(params, "p", "mu", "theta_state", "phi_state")
            p = half_integer(params["p"], "p")
            ps = half_integer(params.get("p_state", p), "p_state")
            mu = half_integer(params["mu"], "mu")
            if abs(mu) > ps or (ps - mu).denominator != 1:
                raise ParamInvalid(f"mu = {mu} incompatible with p = {ps}")
            if ps != p:
                return 0.0
            c2 = _cos2_half(theta, phi, params["theta_state"], params["phi_state"])
            return float(comb(int(2 * p), int(p + mu)) * c2 ** int(p + mu) * (1 - c2) ** int(p - mu))
        if family == "glauber_m2":
            _need(params, "p", "alpha_plus", "alpha_minus")
            p = half_integer(params["p"], "p")
            ap = np.asarray(params["alpha_plus"], dtype=complex)
            am = np.asarray(params["alpha_minus"], dtype=complex)
            if ap.shape != (2,) or am.shape != (2,):
                raise ParamInvalid("glauber_m2 needs two amplitudes per polarization")
            nu = int(2 * p) + 1
            x = abs(ap[0] * am[1] - am[0] * ap[1])
            rot = np.cos(theta / 2) * ap + np.exp(-1j * phi) * np.sin(theta / 2) * am
            s = float(np.sum(np.abs(rot) ** 2))
            total = float(np.sum(np.abs(ap) ** 2 + np.abs(am) ** 2))
            return float(np.exp(-total) * nu * _bessel_ratio(nu, x, tol.bessel_small) * s ** int(2 * p))
        if family == "thermal":
            _need(params, "p", "beta")
            p = half_integer(params["p"], "p")
            beta = float(params["beta"])
            if not beta > 0:
                raise ParamInvalid(f"beta must be positive, got {beta}")
            return float((1 - np.exp(-beta)) ** 2 * np.exp(-2 * float(p) * beta))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ParamInvalid):
            raise
        raise ParamInvalid(str(exc)) from exc
    raise ParamInvalid(f"unknown closed-form family {family!r}")


# --------------------------------------------------- characteristic functions

_AXES = {0: "P0", 1: "P1", 2: "P2"}


def _exp_apply(ops: PolarizationOps, axis: int, tau: float, vecs: np.ndarray) -> np.ndarray:
    """``exp(i tau P_axis)`` applied to the columns of ``vecs``."""
    if axis not in _AXES:
        raise ParamInvalid(f"axis must be 0, 1 or 2, got {axis}")
    H = ops.sparse(_AXES[axis])
    out = np.array(vecs, dtype=complex)
    for idx in components(H):
        if len(idx) == 1:
            out[idx] *= np.exp(1j * tau * H[idx[0], idx[0]])
            continue
        sub = H[idx][:, idx].toarray()
        w, V = la.eigh((sub + sub.conj().T) / 2)
        out[idx] = V @ (np.exp(1j * tau * w)[:, None] * (V.conj().T @ out[idx]))
    return out


def char_fn_ordered(state: QuantumState, ops: PolarizationOps, factors) -> complex:
    """``<exp(i t1 P_a1) exp(i t2 P_a2) ...>`` for ``factors = [(a1, t1), ...]``.

    The product is taken left to right, so the last factor acts first.
    """
    if state.basis != ops.basis:
        raise BasisMismatch("state and operators live on different bases")
    factors = list(factors)
    if state.is_pure:
        v = state.data[:, None]
        for axis, tau in reversed(factors):
            v = _exp_apply(ops, int(axis), float(tau), v)
        return complex(np.vdot(state.data, v[:, 0]))
    rho = state.data
    for axis, tau in reversed(factors):
        rho = _exp_apply(ops, int(axis), float(tau), rho)
    return complex(np.trace(rho))


def char_fn_numeric(state: QuantumState, ops: PolarizationOps, axis: int, tau: float) -> complex:
    """``<exp(i tau P_axis)>`` by diagonalizing ``P_axis`` block by block."""
    return char_fn_ordered(state, ops, [(axis, tau)])


def _direction(theta, phi):
    """Unit vector ``c`` with ``<P_k> = p c_k`` on a rotated top state, axes (0, 1, 2)."""
    return {0: np.cos(theta), 1: np.sin(theta) * np.cos(phi), 2: -np.sin(theta) * np.sin(phi)}


def char_fn_closed(family: str, params: dict, axis: int, tau: float) -> complex:
    """Closed-form characteristic functions.

    ``'semi'`` (params ``p``, ``mu``, ``theta``, ``phi``)::

        sum_a (p+mu)!(p-mu)! / ((p+mu-a)!(p-mu-a)! a!^2) [-sin^2(tau/2)(1-c^2)]^a
              [cos(tau/2) + i sin(tau/2) c]^{p+mu-a} [cos(tau/2) - i sin(tau/2) c]^{p-mu-a}

    with ``c`` the direction cosine of the state's axis along ``P_axis``.

    ``'glauber'`` (params ``alpha_plus``, ``alpha_minus``, optional
    ``theta``, ``phi`` rotating the amplitudes first)::

        exp[(cos(tau/2) - 1) N + 2 i sin(tau/2) <P_axis>]

    where ``<P0> = (|a+|^2 - |a-|^2)/2``, ``<P1> = Re w``, ``<P2> = -Im w``
    and ``w = sum_j a-_j conj(a+_j)``.

    Raises
    ------
    ParamInvalid
    """
    if axis not in _AXES:
        raise ParamInvalid(f"axis must be 0, 1 or 2, got {axis}")
    ch, sh = np.cos(tau / 2), np.sin(tau / 2)
    if family == "semi":
        _need(params, "p", "mu")
        p = half_integer(params["p"], "p")
        mu = half_integer(params["mu"], "mu")
        if abs(mu) > p or (p - mu).denominator != 1:
            raise ParamInvalid(f"mu = {mu} incompatible with p = {p}")
        c = _direction(float(params.get("theta", 0.0)), float(params.get("phi", 0.0)))[axis]
        a_hi, a_lo = int(p + mu), int(p - mu)
        plus, minus = ch + 1j * sh * c, ch - 1j * sh * c
        mix = -(sh ** 2) * (1 - c * c)
        total = 0j
        for a in range(min(a_hi, a_lo) + 1):
            coef = factorial(a_hi) * factorial(a_lo) / (
                factorial(a_hi - a) * factorial(a_lo - a) * factorial(a) ** 2)
            total += coef * mix ** a * plus ** (a_hi - a) * minus ** (a_lo - a)
        return complex(total)
    if family == "glauber":
        _need(params, "alpha_plus", "alpha_minus")
        ap = np.asarray(params["alpha_plus"], dtype=complex).ravel()
        am = np.asarray(params["alpha_minus"], dtype=complex).ravel()
        if ap.shape != am.shape:
            raise ParamInvalid("alpha_plus and alpha_minus differ in length")
        th, ph = float(params.get("theta", 0.0)), float(params.get("phi", 0.0))
        c, s = np.cos(th / 2), np.sin(th / 2)
        ap, am = ap * c - np.exp(-1j * ph) * am * s, am * c + np.exp(1j * ph) * ap * s
        N = float(np.sum(np.abs(ap) ** 2 + np.abs(am) ** 2))
        w = complex(np.sum(am * ap.conj()))
        mean = {0: 0.5 * float(np.sum(np.abs(ap) ** 2 - np.abs(am) ** 2)),
                1: w.real, 2: -w.imag}[axis]
        return complex(np.exp((ch - 1) * N + 2j * sh * mean))
    raise ParamInvalid(f"unknown closed-form family {family!r}")
