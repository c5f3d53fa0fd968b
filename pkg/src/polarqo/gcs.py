"""Generalized coherent states of the SU(2) polarization group.

Every state here has the form ``D(theta, phi) |psi0>`` with
``D = exp(xi P+ - xi* P-)`` and ``xi = -(theta/2) e^{-i phi}``.  The
displacement factorizes as ``exp(-i phi P0) exp(i theta P2) exp(i phi P0)``;
``P2`` conserves the photon number of every spatial mode, so its
eigen-decomposition splits into small blocks.  :class:`Rotator` caches those
blocks and hands them to the compiled kernels.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from fractions import Fraction
from functools import lru_cache
from math import comb, cos, factorial, lgamma, sin, sqrt

import numpy as np
import scipy.linalg as la

from . import kernels
from .basis_states import (
    glauber_amplitudes,
    half_integer,
    pmu_labels,
    pmu_state_m1,
    pmu_state_m2,
)
from .config import DEFAULT, Tolerances
from .errors import (
    ConstraintViolated,
    CutoffExceeded,
    FamilyUnsupported,
    LabelInvalid,
    QuadratureUnderResolved,
    SpecError,
    TailTooLarge,
)
from .fock import (
    FockBasis,
    LadderSum,
    Operator,
    QuantumState,
    components,
    expm_apply,
    slot,
    unitary_from_generator,
)
from .polarization import (
    PolarizationOps,
    e_terms,
    xplus_terms,
    yplus_terms,
)

__all__ = [
    "FAMILIES",
    "GcsSpec",
    "Rotator",
    "GcsOrbit",
    "su2_displacement",
    "d_coefficients",
    "max_classical_coefficients",
    "overlap_closed_form",
    "reference_state",
    "build_gcs",
    "build_gcs_series",
    "rotated_glauber_amplitudes",
    "identity_resolution_check",
    "x_biphoton_expansion_check",
]

FAMILIES = (
    "semi_coherent",
    "max_classical",
    "product",
    "fock_rotated",
    "x_biphoton",
    "y_biphoton",
    "glauber",
    "glauber_rotated",
    "glauber_circular",
    "glauber_phase_constrained",
)

_GLAUBER = ("glauber", "glauber_rotated", "glauber_phase_constrained")
_PHASE_EPS = 1e-9


# ---------------------------------------------------------------- spec type


def _frac_or_none(x, name):
    return None if x is None else half_integer(x, name)


def _cplx(x) -> complex:
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, dict):
        return complex(float(x.get("re", 0.0)), float(x.get("im", 0.0)))
    return complex(x)


def _cjson(z: complex):
    return [float(z.real), float(z.imag)]


@dataclass(frozen=True)
class GcsSpec:
    """Declarative description of one coherent state.

    Parameters
    ----------
    family : str
        One of :data:`FAMILIES`.
    theta, phi : float
        Rotation angles, ``theta`` in ``[0, pi]`` and ``phi`` in ``[0, 2 pi)``.
    p, mu, n, t : half-integers, optional
        Labels of the reference eigenstate.  ``n`` defaults to ``2p`` and
        ``t`` (two spatial modes only) to ``p``.
    sign : {+1, -1}
        Which circular polarization carries the reference photons in the
        ``max_classical``, ``product``, biphoton and ``glauber_circular``
        families.
    occupations : tuple of int
        ``fock_rotated``: full occupation tuple ``(n+(1), n-(1), ...)``.
        ``product``: photons per spatial mode ``(n(1), ..., n(m))``.
    mode_angles : tuple of (theta, phi)
        ``product`` only: per-mode rotations applied before the common one.
    alpha_plus, alpha_minus : tuple of complex
        Glauber amplitudes per spatial mode.
    alpha : tuple of complex
        ``glauber_circular`` amplitudes, all in the ``sign`` polarization.
    zeta, kappa, gamma : complex
        Biphoton squeezing parameters.
    """

    family: str
    theta: float = 0.0
    phi: float = 0.0
    p: Fraction | None = None
    mu: Fraction | None = None
    n: int | None = None
    t: Fraction | None = None
    sign: int = 1
    occupations: tuple = ()
    mode_angles: tuple = ()
    alpha_plus: tuple = ()
    alpha_minus: tuple = ()
    alpha: tuple = ()
    zeta: complex = 0j
    kappa: complex = 0j
    gamma: complex = 0j

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        try:
            set_("p", _frac_or_none(self.p, "labels.p"))
            set_("mu", _frac_or_none(self.mu, "labels.mu"))
            set_("t", _frac_or_none(self.t, "labels.t"))
        except LabelInvalid as exc:
            raise SpecError(str(exc)) from exc
        set_("theta", float(self.theta))
        set_("phi", float(self.phi))
        set_("occupations", tuple(int(x) for x in self.occupations))
        set_("mode_angles", tuple((float(a), float(b)) for a, b in self.mode_angles))
        for k in ("alpha_plus", "alpha_minus", "alpha"):
            set_(k, tuple(_cplx(z) for z in getattr(self, k)))
        for k in ("zeta", "kappa", "gamma"):
            set_(k, _cplx(getattr(self, k)))
        self.validate()

    # -- validation -------------------------------------------------------

    def validate(self, m: int | None = None) -> "GcsSpec":
        """Check family-specific completeness and ranges.

        Raises
        ------
        SpecError
            With a dotted field path such as ``angles.theta``.
        ConstraintViolated
            For ``glauber_phase_constrained`` with nonzero phase sums.
        """
        f = self.family
        if f not in FAMILIES:
            raise SpecError(f"family: unknown family {f!r}")
        if not 0.0 <= self.theta <= np.pi:
            raise SpecError(f"angles.theta: {self.theta} outside [0, pi]")
        if not 0.0 <= self.phi < 2 * np.pi:
            raise SpecError(f"angles.phi: {self.phi} outside [0, 2 pi)")
        if self.sign not in (1, -1):
            raise SpecError(f"labels.sign: must be +1 or -1, got {self.sign}")
        if f in ("semi_coherent", "max_classical", "x_biphoton", "y_biphoton") and self.p is None:
            raise SpecError("labels.p: required for family " + f)
        if self.p is not None and self.p < 0:
            raise SpecError(f"labels.p: must be >= 0, got {self.p}")
        if f == "semi_coherent":
            if self.mu is None:
                raise SpecError("labels.mu: required for semi_coherent")
            if abs(self.mu) > self.p or (self.p - self.mu).denominator != 1:
                raise SpecError(f"labels.mu: {self.mu} incompatible with p = {self.p}")
        if self.n is not None and (self.n < 0 or self.p is not None and (
                self.n < 2 * self.p or (self.n - 2 * self.p) % 2)):
            raise SpecError(f"labels.n: {self.n} incompatible with p = {self.p}")
        if self.t is not None and self.p is not None and (
                abs(self.t) > self.p or (self.p - self.t).denominator != 1):
            raise SpecError(f"labels.t: {self.t} incompatible with p = {self.p}")
        if f == "fock_rotated":
            if not self.occupations or len(self.occupations) % 2:
                raise SpecError("occupations: fock_rotated needs 2m occupation numbers")
        if f == "product":
            if not self.occupations:
                raise SpecError("occupations: product needs photons per mode")
            if self.mode_angles and len(self.mode_angles) != len(self.occupations):
                raise SpecError("mode_angles: one (theta, phi) pair per mode required")
        if any(x < 0 for x in self.occupations):
            raise SpecError("occupations: must be nonnegative")
        if f in _GLAUBER:
            if not self.alpha_plus or len(self.alpha_plus) != len(self.alpha_minus):
                raise SpecError("amplitudes.alpha_minus: need one amplitude per mode "
                                "for both polarizations")
        if f == "glauber_circular" and not self.alpha:
            raise SpecError("amplitudes.alpha: required for glauber_circular")
        if f == "glauber_phase_constrained":
            for name in ("alpha_plus", "alpha_minus"):
                amps = getattr(self, name)
                if any(a == 0 for a in amps):
                    raise ConstraintViolated(f"amplitudes.{name}: zero amplitude has no phase")
                total = float(np.angle(np.prod(np.asarray(amps))))
                if abs(total) > _PHASE_EPS:
                    raise ConstraintViolated(
                        f"amplitudes.{name}: phases sum to {total:.3g} mod 2 pi, need 0")
        if m is not None:
            need = self._modes()
            if need is not None and need != m:
                raise SpecError(f"family {f} with these fields needs m = {need}, basis has m = {m}")
            if f == "x_biphoton" and m < 2:
                raise SpecError("family: x_biphoton needs m >= 2")
            if f == "semi_coherent" and m > 2:
                raise SpecError("family: semi_coherent labels are defined for m <= 2")
        return self

    def _modes(self) -> int | None:
        f = self.family
        if f == "fock_rotated":
            return len(self.occupations) // 2
        if f == "product":
            return len(self.occupations)
        if f in _GLAUBER:
            return len(self.alpha_plus)
        if f == "glauber_circular":
            return len(self.alpha)
        return None

    @property
    def n_value(self) -> int | None:
        if self.n is not None:
            return int(self.n)
        return None if self.p is None else int(2 * self.p)

    @property
    def t_value(self) -> Fraction | None:
        return self.p if self.t is None else self.t

    # -- JSON -------------------------------------------------------------

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("p", "mu", "t"):
            if d[k] is not None:
                d[k] = str(d[k])
        for k in ("alpha_plus", "alpha_minus", "alpha"):
            d[k] = [_cjson(z) for z in d[k]]
        for k in ("zeta", "kappa", "gamma"):
            d[k] = _cjson(d[k])
        d["occupations"] = list(d["occupations"])
        d["mode_angles"] = [list(x) for x in d["mode_angles"]]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "GcsSpec":
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise SpecError(f"{sorted(unknown)[0]}: unknown field")
        if "family" not in d:
            raise SpecError("family: required")
        try:
            return cls(**d)
        except (TypeError, ValueError) as exc:
            raise SpecError(f"spec: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "GcsSpec":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"spec: invalid JSON ({exc.msg})") from exc
        if not isinstance(d, dict):
            raise SpecError("spec: JSON object expected")
        return cls.from_dict(d)

    def at(self, theta: float, phi: float) -> "GcsSpec":
        """Same reference with new angles."""
        return replace(self, theta=theta, phi=phi)


# ------------------------------------------------------------- rotation core


@lru_cache(maxsize=32)
def _p2_blocks(basis: FockBasis, mode: int | None):
    """Eigen-decomposition of ``P2`` block by block.

    Returns ``(labels, blocks)`` where ``labels[k]`` is the block of basis
    state ``k`` and ``blocks[b] = (idx, lam, V)``.
    """
    ops = PolarizationOps(basis, mode)
    P2 = ops.sparse("P2")
    labels = np.empty(basis.dim, dtype=np.int64)
    blocks = []
    for b, idx in enumerate(components(P2)):
        idx = np.sort(idx)
        H = P2[idx][:, idx].toarray()
        lam, V = la.eigh((H + H.conj().T) / 2)
        labels[idx] = b
        blocks.append((idx, lam, np.ascontiguousarray(V, dtype=complex)))
    return labels, blocks


@lru_cache(maxsize=32)
def _p0_diag(basis: FockBasis, mode: int | None) -> np.ndarray:
    occ = basis.occupations
    if mode is None:
        return 0.5 * (occ[:, 0::2].sum(axis=1) - occ[:, 1::2].sum(axis=1)).astype(float)
    s = 2 * (mode - 1)
    return 0.5 * (occ[:, s] - occ[:, s + 1]).astype(float)


class Rotator:
    """Orbit ``psi(theta, phi) = D(theta, phi) psi0`` of a fixed vector.

    Only the ``P2`` blocks that meet the support of ``psi0`` are kept, so
    evaluation cost scales with the support rather than the basis.

    Parameters
    ----------
    basis : FockBasis
    psi0 : array_like
        Reference amplitudes.
    mode : int, optional
        Rotate a single spatial mode instead of all of them.
    backend : {'compiled', 'python'}, optional
        Kernel implementation; the import-time default otherwise.
    """

    def __init__(self, basis: FockBasis, psi0, mode: int | None = None,
                 backend: str | None = None):
        psi0 = np.asarray(psi0, dtype=complex)
        labels, blocks = _p2_blocks(basis, mode)
        used = np.unique(labels[np.flatnonzero(psi0)])
        idx = [blocks[b][0] for b in used]
        self.basis = basis
        self.order = np.concatenate(idx) if idx else np.zeros(0, dtype=np.int64)
        sizes = np.array([len(i) for i in idx], dtype=np.int64)
        self.boff = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        self.voff = np.concatenate([[0], np.cumsum(sizes ** 2)]).astype(np.int64)
        self.vdata = (np.concatenate([blocks[b][2].ravel() for b in used])
                      if idx else np.zeros(0, dtype=complex))
        self.lam = (np.concatenate([blocks[b][1] for b in used])
                    if idx else np.zeros(0))
        self.mu = np.ascontiguousarray(_p0_diag(basis, mode)[self.order])
        self.psi0 = np.ascontiguousarray(psi0[self.order])
        impl = kernels.get(backend or kernels.BACKEND)
        self._rotate = impl.rotate_batch
        self._loop = impl.loop_phase

    @property
    def support_dim(self) -> int:
        return len(self.order)

    def _args(self):
        return (self.vdata, self.voff, self.boff, self.lam, self.mu, self.psi0)

    def batch_sub(self, thetas, phis) -> np.ndarray:
        """Rotated amplitudes restricted to :attr:`order`; shape ``(K, support_dim)``."""
        th = np.atleast_1d(np.asarray(thetas, dtype=float))
        ph = np.atleast_1d(np.asarray(phis, dtype=float))
        th, ph = np.broadcast_arrays(th, ph)
        return self._rotate(*self._args(), np.ascontiguousarray(th), np.ascontiguousarray(ph))

    def batch(self, thetas, phis) -> np.ndarray:
        """Rotated amplitudes on the full basis; shape ``(K, dim)``."""
        sub = self.batch_sub(thetas, phis)
        out = np.zeros((sub.shape[0], self.basis.dim), dtype=complex)
        out[:, self.order] = sub
        return out

    def at(self, theta: float, phi: float) -> np.ndarray:
        return self.batch([theta], [phi])[0]

    def loop_phase(self, thetas, phis):
        """``(sum of -arg overlaps, closure overlap, min |overlap|)`` along samples."""
        th = np.ascontiguousarray(np.asarray(thetas, dtype=float))
        ph = np.ascontiguousarray(np.asarray(phis, dtype=float))
        return self._loop(*self._args(), th, ph)


def su2_displacement(theta: float, phi: float, ops: PolarizationOps,
                     tol: Tolerances = DEFAULT) -> Operator:
    """Dense ``D(theta, phi) = exp(xi P+ - xi* P-)``, ``xi = -(theta/2) e^{-i phi}``.

    Built from the generator by per-block diagonalization, independent of
    :class:`Rotator`.  ``P+-`` conserve N, so truncation is exact.
    """
    xi = -(theta / 2) * np.exp(-1j * phi)
    gen = ops.Pplus * xi - ops.Pminus * np.conj(xi)
    return unitary_from_generator(gen, tol)


# ----------------------------------------------------------- closed forms


def _pochhammer(a: Fraction, k: int) -> Fraction:
    out = Fraction(1)
    for i in range(k):
        out *= a + i
    return out


def _int(x: Fraction) -> int:
    return int(x)


def _check_labels(p, *mus):
    p = half_integer(p, "p")
    if p < 0:
        raise LabelInvalid(f"p must be >= 0, got {p}")
    out = [p]
    for k, mu in enumerate(mus):
        mu = half_integer(mu, f"mu[{k}]")
        if abs(mu) > p or (p - mu).denominator != 1:
            raise LabelInvalid(f"mu = {mu} incompatible with p = {p}")
        out.append(mu)
    return out


def d_coefficients(p, mu_prime, mu, theta: float, phi: float) -> complex:
    """Matrix element ``u^p_{mu' mu}(theta, phi) = <p, mu'| D(theta, phi) |p, mu>``.

    Evaluated from the terminating hypergeometric series in sine/cosine
    form::

        sqrt[(p+mu)!(p-mu')! / ((p+mu')!(p-mu)!)] e^{i phi (mu - mu')}
          sum_k (mu-p)_k (-p-mu')_k / (k! (mu-mu'+k)!) (-1)^k
                sin(theta/2)^{mu-mu'+2k} cos(theta/2)^{2p-mu+mu'-2k}

    Terms with ``mu - mu' + k < 0`` are dropped (the reciprocal factorial
    vanishes there).

    Raises
    ------
    LabelInvalid
    """
    p, mp, mu = _check_labels(p, mu_prime, mu)
    d = mu - mp
    pref = 0.5 * (lgamma(float(p + mu) + 1) + lgamma(float(p - mp) + 1)
                  - lgamma(float(p + mp) + 1) - lgamma(float(p - mu) + 1))
    s, c = sin(theta / 2), cos(theta / 2)
    total = 0.0
    for k in range(0, _int(min(p - mu, p + mp)) + 1):
        if d + k < 0:
            continue
        coef = _pochhammer(mu - p, k) * _pochhammer(-p - mp, k) / (
            factorial(k) * factorial(_int(d + k)))
        if coef == 0:
            continue
        total += float(coef) * (-1) ** k * s ** _int(d + 2 * k) * c ** _int(2 * p - d - 2 * k)
    return complex(np.exp(pref) * total * np.exp(1j * phi * float(d)))


def max_classical_coefficients(p, theta: float, phi: float, sign: int = 1) -> dict:
    """Amplitudes of the maximally classical state on ``|p, mu>``.

    For ``sign = +1`` (reference ``mu = p``)::

        c_mu = sqrt[(2p)! / ((p+mu)!(p-mu)!)] sin^{p-mu} cos^{p+mu} e^{-i(mu-p) phi}

    and for ``sign = -1`` (reference ``mu = -p``) the sine changes sign and
    the roles of ``p +- mu`` swap.  Half angles throughout.
    """
    p = half_integer(p, "p")
    s, c = sin(theta / 2), cos(theta / 2)
    out = {}
    for k in range(_int(2 * p) + 1):
        mu = p - k
        lo, hi = (p - mu, p + mu) if sign > 0 else (p + mu, p - mu)
        mag = sqrt(comb(_int(2 * p), _int(lo)))
        amp = mag * (sign * s) ** _int(lo) * c ** _int(hi)
        out[mu] = complex(amp * np.exp(-1j * float(mu - sign * p) * phi))
    return out


def _w_elements(theta, phi, theta2, phi2):
    """``A = W++`` and ``C = W-+`` of ``W = M(theta,phi)^dag M(theta',phi')``."""
    s, c = sin(theta / 2), cos(theta / 2)
    s2, c2 = sin(theta2 / 2), cos(theta2 / 2)
    A = c * c2 + s * s2 * np.exp(1j * (phi2 - phi))
    C = -np.exp(1j * phi) * s * c2 + np.exp(1j * phi2) * c * s2
    return complex(A), complex(C)


def _overlap_ordered(p, mu, mp, th, ph, th2, ph2) -> complex:
    # <p,mu| D(th,ph)^dag D(th2,ph2) |p,mp> for mp >= mu
    A, C = _w_elements(th, ph, th2, ph2)
    d = _int(mp - mu)
    pref = 0.5 * (lgamma(float(p - mu) + 1) + lgamma(float(p + mp) + 1)
                  - lgamma(float(p + mu) + 1) - lgamma(float(p - mp) + 1))
    total = 0j
    z = -abs(C) ** 2
    for s in range(0, _int(min(p + mu, p - mp)) + 1):
        coef = _pochhammer(-p - mu, s) * _pochhammer(-p + mp, s) / (
            _pochhammer(Fraction(1 + d), s) * factorial(s))
        if coef == 0:
            continue
        total += (float(coef) * A ** _int(p + mu - s) * np.conj(A) ** _int(p - mp - s)
                  * z ** s)
    return complex(np.exp(pref) * total * C ** d / factorial(d))


def overlap_closed_form(spec1: GcsSpec, spec2: GcsSpec) -> complex:
    """``<spec1|spec2>`` for two semi-coherent states, in closed form.

    Zero unless ``p``, ``n`` and ``t`` agree.  For ``mu' >= mu`` the value is
    ``sqrt[(p-mu)!(p+mu')!/((p+mu)!(p-mu')!)] A^{p+mu} A*^{p-mu'} C^{mu'-mu}
    / (mu'-mu)! F(-p-mu, -p+mu'; 1+mu'-mu; -|C|^2/|A|^2)`` expanded as a
    finite sum, where ``A`` and ``C`` are entries of the product of the two
    rotation matrices; the other ordering follows by Hermitian symmetry.

    Raises
    ------
    LabelInvalid
    """
    for s in (spec1, spec2):
        if s.family not in ("semi_coherent", "max_classical") or s.p is None:
            raise LabelInvalid("overlap_closed_form needs semi-coherent specs with labels")
    mu1 = spec1.mu if spec1.family == "semi_coherent" else spec1.sign * spec1.p
    mu2 = spec2.mu if spec2.family == "semi_coherent" else spec2.sign * spec2.p
    if (spec1.p != spec2.p or spec1.n_value != spec2.n_value
            or (spec1.t is not None or spec2.t is not None)
            and spec1.t_value != spec2.t_value):
        return 0j
    p = spec1.p
    if mu2 >= mu1:
        return _overlap_ordered(p, mu1, mu2, spec1.theta, spec1.phi, spec2.theta, spec2.phi)
    return np.conj(_overlap_ordered(p, mu2, mu1, spec2.theta, spec2.phi,
                                    spec1.theta, spec1.phi))


def rotated_glauber_amplitudes(alpha_plus, alpha_minus, theta: float, phi: float):
    """Amplitudes of ``D(theta, phi)`` applied to a coherent state.

    ``a+ -> a+ cos(theta/2) - e^{-i phi} a- sin(theta/2)`` and
    ``a- -> a- cos(theta/2) + e^{i phi} a+ sin(theta/2)``.
    """
    ap = np.asarray(alpha_plus, dtype=complex)
    am = np.asarray(alpha_minus, dtype=complex)
    c, s = cos(theta / 2), sin(theta / 2)
    return (ap * c - np.exp(-1j * phi) * am * s, am * c + np.exp(1j * phi) * ap * s)


# ------------------------------------------------------ reference vectors


def _power_state(basis: FockBasis, counts: dict) -> np.ndarray:
    """Normalized occupation state with ``counts[slot]`` photons."""
    occ = [0] * basis.n_slots
    for s, k in counts.items():
        occ[s] += int(k)
    if sum(occ) > basis.n_max:
        raise CutoffExceeded(f"reference needs {sum(occ)} photons > n_max = {basis.n_max}")
    return QuantumState.fock(basis, occ).data.copy()


def _circ(sign: int) -> str:
    return "+" if sign > 0 else "-"


def _labelled_state(basis: FockBasis, p, mu, n, t) -> np.ndarray:
    if basis.m == 1:
        if n is not None and n != 2 * p:
            raise LabelInvalid(f"m = 1 requires n = 2p (n = {n}, p = {p})")
        return pmu_state_m1(p, mu, basis).data
    if basis.m == 2:
        return pmu_state_m2(p, mu, int(2 * p) if n is None else n, p if t is None else t, basis).data
    raise FamilyUnsupported("labelled eigenstates are implemented for m <= 2")


def _glauber_ref(basis, ap, am, tol) -> tuple:
    vec, leak = glauber_amplitudes(basis, ap, am)
    if leak > tol.tail:
        raise TailTooLarge(leak, tol.tail, "coherent state")
    return vec / np.linalg.norm(vec), leak


def _product_reference(spec: GcsSpec, basis: FockBasis, backend=None) -> np.ndarray:
    pol = _circ(spec.sign)
    vec = _power_state(basis, {slot(j + 1, pol, basis.m): k for j, k in enumerate(spec.occupations)})
    for j, (th, ph) in enumerate(spec.mode_angles):
        vec = Rotator(basis, vec, mode=j + 1, backend=backend).at(th, ph)
    return vec


def _x_generator(m: int, zeta: complex, kappa: complex) -> LadderSum:
    E12, E21 = e_terms(1, 2), e_terms(2, 1)
    X = xplus_terms(1, 2)
    return E12 * kappa - E21 * np.conj(kappa) + X * zeta - X.adjoint() * np.conj(zeta)


def _y_generator(gamma: complex) -> LadderSum:
    Y = yplus_terms(1, 1)
    return Y * gamma - Y.adjoint() * np.conj(gamma)


def reference_state(spec: GcsSpec, basis: FockBasis, tol: Tolerances = DEFAULT,
                    backend: str | None = None) -> QuantumState:
    """The vector ``psi0`` that ``D(theta, phi)`` rotates for this family.

    Raises
    ------
    SpecError, LabelInvalid, CutoffExceeded, TailTooLarge, ConstraintViolated
    """
    spec.validate(basis.m)
    f = spec.family
    leak = 0.0
    if f == "semi_coherent":
        vec = _labelled_state(basis, spec.p, spec.mu, spec.n, spec.t)
    elif f == "max_classical":
        vec = _labelled_state(basis, spec.p, spec.sign * spec.p, spec.n, spec.t)
    elif f == "fock_rotated":
        vec = _power_state(basis, dict(enumerate(spec.occupations)))
    elif f == "product":
        vec = _product_reference(spec, basis, backend)
    elif f in ("x_biphoton", "y_biphoton"):
        two_p = _int(2 * spec.p)
        seed = QuantumState.pure(basis, _power_state(basis, {slot(1, _circ(spec.sign), basis.m): two_p}))
        gen = (_x_generator(basis.m, spec.zeta, spec.kappa) if f == "x_biphoton"
               else _y_generator(spec.gamma))
        st = expm_apply(gen, seed, tail_tol=tol.tail, tol=tol)
        vec, leak = st.data, st.leak
    elif f in _GLAUBER:
        vec, leak = _glauber_ref(basis, spec.alpha_plus, spec.alpha_minus, tol)
    elif f == "glauber_circular":
        zero = [0j] * basis.m
        amps = list(spec.alpha)
        ap, am = (amps, zero) if spec.sign > 0 else (zero, amps)
        vec, leak = _glauber_ref(basis, ap, am, tol)
    else:  # pragma: no cover - validate() rejects unknown families
        raise SpecError(f"family: unknown family {f!r}")
    return QuantumState.pure(basis, vec, normalize=True, leak=leak, tol=tol)


class GcsOrbit:
    """All states ``D(theta, phi) psi0`` sharing the reference of ``spec``."""

    def __init__(self, spec: GcsSpec, basis: FockBasis, tol: Tolerances = DEFAULT,
                 backend: str | None = None):
        self.spec = spec
        self.basis = basis
        self.tol = tol
        self.reference = reference_state(spec, basis, tol, backend)
        self.rotator = Rotator(basis, self.reference.data, backend=backend)

    def at(self, theta: float, phi: float) -> QuantumState:
        vec = self.rotator.at(theta, phi)
        return QuantumState.pure(self.basis, vec, normalize=True,
                                 leak=self.reference.leak, tol=self.tol)

    def batch(self, thetas, phis) -> np.ndarray:
        return self.rotator.batch(thetas, phis)


def build_gcs(spec: GcsSpec, basis: FockBasis, ops: PolarizationOps | None = None,
              tol: Tolerances = DEFAULT, backend: str | None = None) -> QuantumState:
    """Construct the coherent state described by ``spec``.

    The reference vector is built exactly (or by a tail-controlled
    exponential for the biphoton families) and then rotated by the exact
    displacement.  ``ops`` is accepted for interface symmetry; the rotation
    uses cached ``P2`` blocks of the same basis.

    Raises
    ------
    TailTooLarge, LabelInvalid, ConstraintViolated, SpecError
    """
    if ops is not None and ops.basis != basis:
        raise LabelInvalid("ops built on a different basis")
    return GcsOrbit(spec, basis, tol, backend).at(spec.theta, spec.phi)


# ----------------------------------------------------------- series paths


def _semi_series(basis, p, mu, n, t, theta, phi) -> np.ndarray:
    vec = np.zeros(basis.dim, dtype=complex)
    for k in range(_int(2 * p) + 1):
        mp = p - k
        vec += d_coefficients(p, mp, mu, theta, phi) * _labelled_state(basis, p, mp, n, t)
    return vec


def _maxc_series(basis, p, sign, n, t, theta, phi) -> np.ndarray:
    vec = np.zeros(basis.dim, dtype=complex)
    for mu, c in max_classical_coefficients(p, theta, phi, sign).items():
        vec += c * _labelled_state(basis, p, mu, n, t)
    return vec


def _x_series(basis, p, sign, zeta, kappa, theta, phi):
    """Double series in ``T`` (pair number) and ``tau`` (mode-2 transfers)."""
    r, k = abs(zeta), abs(kappa)
    ez = np.exp(1j * np.angle(zeta)) if r else 1.0
    ek = np.exp(-1j * np.angle(kappa)) if k else 1.0
    two_p = _int(2 * p)
    vec = np.zeros(basis.dim, dtype=complex)
    kept = 0.0
    T = 0
    while 2 * T + two_p <= basis.n_max:
        for tau in range(two_p + 1):
            mag2 = comb(T + two_p + 1, T) * comb(two_p, tau)
            amp = (np.cosh(r) ** (-2 * (p + 1)) * (np.tanh(r) * ez) ** T
                   * np.cos(k) ** (two_p - tau) * (-np.sin(k) * ek) ** tau * sqrt(mag2))
            if amp == 0:
                continue
            kept += abs(amp) ** 2
            vec += amp * _maxc_series(basis, p, sign, 2 * T + two_p, p - tau, theta, phi)
        T += 1
    return vec, max(0.0, 1.0 - kept)


def _y_series(basis, p, sign, gamma, theta, phi):
    """Series over ``tau`` of semi-coherent states with ``p' = p + tau``, ``mu = sign p``."""
    if basis.m != 1:
        raise FamilyUnsupported("y_biphoton series path is implemented for m = 1")
    r = abs(gamma)
    eg = np.exp(1j * np.angle(gamma)) if r else 1.0
    two_p = _int(2 * p)
    vec = np.zeros(basis.dim, dtype=complex)
    kept = 0.0
    tau = 0
    while two_p + 2 * tau <= basis.n_max:
        amp = (np.cosh(r) ** (-(two_p + 1)) * (np.tanh(r) * eg) ** tau
               * sqrt(comb(two_p + tau, tau)))
        kept += abs(amp) ** 2
        vec += amp * _semi_series(basis, p + tau, sign * p, None, None, theta, phi)
        tau += 1
    return vec, max(0.0, 1.0 - kept)


def build_gcs_series(spec: GcsSpec, basis: FockBasis, tol: Tolerances = DEFAULT) -> QuantumState:
    """Second construction path from closed-form expansions.

    Available for ``semi_coherent``, ``max_classical``, ``x_biphoton``,
    ``y_biphoton`` (m = 1) and the rotated Glauber families; none of them
    touch :class:`Rotator`.

    Raises
    ------
    FamilyUnsupported, TailTooLarge
    """
    spec.validate(basis.m)
    f, th, ph = spec.family, spec.theta, spec.phi
    leak = 0.0
    if f == "semi_coherent":
        vec = _semi_series(basis, spec.p, spec.mu, spec.n, spec.t, th, ph)
    elif f == "max_classical":
        vec = _maxc_series(basis, spec.p, spec.sign, spec.n, spec.t, th, ph)
    elif f == "x_biphoton":
        if basis.m != 2:
            raise FamilyUnsupported("x_biphoton series path is implemented for m = 2")
        vec, leak = _x_series(basis, spec.p, spec.sign, spec.zeta, spec.kappa, th, ph)
    elif f == "y_biphoton":
        vec, leak = _y_series(basis, spec.p, spec.sign, spec.gamma, th, ph)
    elif f in _GLAUBER:
        ap, am = rotated_glauber_amplitudes(spec.alpha_plus, spec.alpha_minus, th, ph)
        vec, leak = glauber_amplitudes(basis, ap, am)
    else:
        raise FamilyUnsupported(f"no series construction for family {f}")
    if leak > tol.tail:
        raise TailTooLarge(leak, tol.tail, f"{f} series")
    return QuantumState.pure(basis, vec, normalize=True, leak=leak, tol=tol)


# ------------------------------------------------------------- checks


def _gl_theta(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return np.arccos(x), w  # integrates sin(theta) d theta


def identity_resolution_check(p_max, n: int, basis: FockBasis,
                              ops: PolarizationOps | None = None,
                              n_theta: int | None = None, n_phi: int | None = None,
                              backend: str | None = None) -> float:
    """Max entrywise deviation of the coherent-state resolution from the identity.

    Sums ``(2p+1)/(4 pi) int |theta phi; p, n, t><...| sin(theta) d theta d phi``
    over every ``(p, t)`` of the fixed-``n`` block with ``p <= p_max``,
    using Gauss-Legendre in ``cos(theta)`` and the trapezoid rule in ``phi``.

    Raises
    ------
    QuadratureUnderResolved
        If ``n_phi < 4 p_max + 2`` or ``n_theta < 2 p_max + 2``.
    LabelInvalid
        For ``m > 2`` or ``n > n_max``.
    """
    p_max = half_integer(p_max, "p_max")
    if basis.m > 2:
        raise LabelInvalid("identity resolution is checked for m <= 2")
    if n > basis.n_max:
        raise LabelInvalid(f"n = {n} exceeds n_max = {basis.n_max}")
    need_phi, need_theta = _int(4 * p_max + 2), _int(2 * p_max + 2)
    n_phi = need_phi if n_phi is None else int(n_phi)
    n_theta = need_theta if n_theta is None else int(n_theta)
    if n_phi < need_phi or n_theta < need_theta:
        raise QuadratureUnderResolved(
            f"need >= {need_phi} phi nodes and >= {need_theta} theta nodes, "
            f"got {n_phi} and {n_theta}")
    th, wt = _gl_theta(n_theta)
    phis = 2 * np.pi * np.arange(n_phi) / n_phi
    TH, PH = np.meshgrid(th, phis, indexing="ij")
    W = np.outer(wt, np.full(n_phi, 2 * np.pi / n_phi)).ravel()
    blk = basis.block(n)
    acc = np.zeros((blk.stop - blk.start,) * 2, dtype=complex)
    seen = set()
    for p, mu, t in pmu_labels(basis.m, n):
        if p > p_max or (p, t) in seen:
            continue
        seen.add((p, t))
        ref = _labelled_state(basis, p, p, n, t)
        states = Rotator(basis, ref, backend=backend).batch(TH.ravel(), PH.ravel())[:, blk]
        acc += float(2 * p + 1) / (4 * np.pi) * (states.T * W) @ states.conj()
    return float(np.max(np.abs(acc - np.eye(acc.shape[0]))))


def x_biphoton_expansion_check(p, zeta: complex, kappa: complex, basis: FockBasis,
                               theta: float = 0.0, phi: float = 0.0, sign: int = 1,
                               tol: Tolerances = DEFAULT) -> float:
    """``1 - fidelity`` between the series and the exponential construction.

    Raises
    ------
    TailTooLarge
    """
    if basis.m != 2:
        raise LabelInvalid("x_biphoton_expansion_check needs m = 2")
    spec = GcsSpec("x_biphoton", theta=theta, phi=phi, p=p, sign=sign, zeta=zeta, kappa=kappa)
    a = build_gcs(spec, basis, tol=tol)
    b = build_gcs_series(spec, basis, tol=tol)
    return max(0.0, 1.0 - a.fidelity(b))
