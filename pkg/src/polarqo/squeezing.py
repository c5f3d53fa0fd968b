"""Polarization uncertainty relations, squeezing types and unpolarized classes.

Thresholds come from :class:`~polarqo.config.Tolerances`: ``eps_abs`` is the
absolute zero for variances and moments, ``signature_rel`` the relative
tolerance when matching variance signatures and ``s_max`` the highest
moment order inspected.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from .basis_states import half_integer
from .config import DEFAULT, Tolerances
from .errors import LabelInvalid, NotPScalar
from .fock import FockBasis, QuantumState
from .gcs import GcsSpec, build_gcs
from .polarization import (
    PolarizationOps,
    moment,
    variance_profile,
)

__all__ = [
    "SqueezeClass",
    "UnpolarizedClass",
    "UncertaintyTriple",
    "SqueezeReport",
    "squeeze_report",
    "uncertainty_triples",
    "classify_squeezing",
    "classify_unpolarized",
    "EprReport",
    "epr_moment_relations",
    "YVarianceReport",
    "y_gcs_variance_check",
]


class SqueezeClass(str, Enum):
    NONE = "none"
    CIRCULAR = "circular"
    LINEAR = "linear"
    CIRCULAR_LINEAR = "circular_linear"
    ABSOLUTE = "absolute"
    SOFT = "soft"


class UnpolarizedClass(str, Enum):
    NOT_UNPOLARIZED = "not_unpolarized"
    POLARIZATION_VACUUM = "polarization_vacuum"
    TWIN_PHOTON_HIDDEN = "twin_photon_hidden"
    COHERENT_UNPOLARIZED = "coherent_unpolarized"
    THERMAL_LIKE = "thermal_like"
    PHASE_RANDOMIZED = "phase_randomized"
    OTHER_UNPOLARIZED = "other_unpolarized"


@dataclass(frozen=True)
class UncertaintyTriple:
    """``Delta P_i Delta P_j >= |<P_k>| / 2`` for one cyclic pair."""

    pair: tuple
    lhs: float
    rhs: float
    satisfied: bool


# cyclic partners: [P1, P2] ~ P0, [P2, P0] ~ P1, [P0, P1] ~ P2
_PAIRS = ((1, 2, 0), (2, 0, 1), (0, 1, 2))


def _triples(sigma, means, tol: Tolerances) -> list:
    out = []
    for i, j, k in _PAIRS:
        lhs = float(np.sqrt(max(sigma[i], 0.0) * max(sigma[j], 0.0)))
        rhs = 0.5 * abs(means[k])
        out.append(UncertaintyTriple((i, j, k), lhs, rhs, lhs >= rhs - 1e-10))
    return out


def uncertainty_triples(state: QuantumState, ops: PolarizationOps,
                        tol: Tolerances = DEFAULT) -> list:
    """The three polarization uncertainty relations evaluated on ``state``."""
    prof = variance_profile(state, ops, tol)
    return _triples(prof.sigma, prof.means, tol)


@dataclass
class SqueezeReport:
    """Polarization noise summary of one state.

    ``dP2`` is the total noise ``sum_i sigma_i`` and ``deltaP2`` the
    relative noise ``dP2 / <N>^2``.  Quantities that divide by ``<N>`` are
    ``None`` for the vacuum.
    """

    sigma: tuple
    means: tuple
    n_mean: float
    casimir: float
    pbar: float
    dP2: float
    deltaP2: float | None
    k: tuple | None
    degP: float | None
    dep_P: float | None
    dep_P0: float | None
    triples: list = field(default_factory=list)
    squeezing_class: SqueezeClass | None = None
    unpolarized_class: UnpolarizedClass | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["triples"] = [
            {"pair": list(t.pair), "lhs": t.lhs, "rhs": t.rhs, "satisfied": t.satisfied}
            for t in self.triples
        ]
        for key in ("sigma", "means", "k"):
            if d[key] is not None:
                d[key] = [float(x) for x in d[key]]
        for key in ("squeezing_class", "unpolarized_class"):
            v = getattr(self, key)
            d[key] = None if v is None else v.value
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def squeeze_report(state: QuantumState, ops: PolarizationOps, tol: Tolerances = DEFAULT,
                   classify: bool = True) -> SqueezeReport:
    """Compute variances, derived measures, triples and (optionally) both classes."""
    prof = variance_profile(state, ops, tol)
    n = prof.n_mean
    vac = n <= tol.vacuum
    k = tuple(s / prof.dP2 for s in prof.sigma) if prof.dP2 > 0 else None
    norm_p = float(np.sqrt(sum(m * m for m in prof.means)))
    rep = SqueezeReport(
        sigma=prof.sigma,
        means=prof.means,
        n_mean=n,
        casimir=prof.casimir,
        pbar=prof.pbar,
        dP2=prof.dP2,
        deltaP2=prof.deltaP2,
        k=k,
        degP=None if vac else 2 * norm_p / n,
        dep_P=None if vac else 1 - 2 * prof.pbar / n,
        dep_P0=None if vac else 1 - abs(2 * prof.means[0]) / n,
        triples=_triples(prof.sigma, prof.means, tol),
    )
    if classify:
        rep.squeezing_class = classify_squeezing(rep, tol)
        rep.unpolarized_class = classify_unpolarized(state, ops, tol, report=rep)
    return rep


def classify_squeezing(report: SqueezeReport, tol: Tolerances = DEFAULT) -> SqueezeClass:
    """Squeezing type from the variance pattern.

    Rules, checked in order:

    * ``absolute``: ``dP2 <= eps_abs``;
    * ``circular``: ``sigma0 <= eps_abs`` and ``sigma1, sigma2 > eps_abs``;
    * ``linear``: the same with ``sigma1`` or ``sigma2`` in the role of ``sigma0``;
    * ``circular_linear``: ``sigma0`` and exactly one of ``sigma1, sigma2`` at
      most ``dP2/3``, the remaining one strictly above it;
    * ``soft``: ``dP2`` exceeds the fixed-``p`` minimum ``pbar`` and some
      ``k_i < 1/3``;
    * ``none`` otherwise.

    "Strictly" means beyond the relative tolerance ``signature_rel``, so a
    state with three equal variances is never squeezed.
    """
    s0, s1, s2 = report.sigma
    eps, rel = tol.eps_abs, tol.signature_rel
    dP2 = report.dP2
    if dP2 <= eps:
        return SqueezeClass.ABSOLUTE
    small = [s <= eps for s in (s0, s1, s2)]
    if small == [True, False, False]:
        return SqueezeClass.CIRCULAR
    if small in ([False, True, False], [False, False, True]):
        return SqueezeClass.LINEAR
    third = dP2 / 3
    margin = rel * third
    below = [s <= third for s in (s0, s1, s2)]
    above = [s > third + margin for s in (s0, s1, s2)]
    if below[0] and ((below[1] and above[2]) or (below[2] and above[1])):
        return SqueezeClass.CIRCULAR_LINEAR
    if report.k is not None and dP2 > report.pbar * (1 + rel) + eps:
        if min(report.k) < 1 / 3 - rel:
            return SqueezeClass.SOFT
    return SqueezeClass.NONE


def _close(a: float, b: float, tol: Tolerances) -> bool:
    return abs(a - b) <= tol.signature_rel * max(abs(b), abs(a)) + tol.eps_abs


def classify_unpolarized(state: QuantumState, ops: PolarizationOps, tol: Tolerances = DEFAULT,
                         report: SqueezeReport | None = None) -> UnpolarizedClass:
    """Class of unpolarized light, or ``not_unpolarized`` when some ``<P_a>`` is nonzero.

    Signatures, tested in order with relative tolerance ``signature_rel``:

    * ``polarization_vacuum``: ``<P_a^s> = 0`` for all axes and ``s <= s_max``;
    * ``twin_photon_hidden``: ``dP2 = <N> + <N>^2/2``, ``<P0^s> = 0`` for
      ``s <= s_max`` and ``<P1^2> > 0``;
    * ``coherent_unpolarized``: every ``sigma_a = <N>/4``;
    * ``thermal_like``: every ``sigma_a = (<N> + <N>^2/2)/4``;
    * ``phase_randomized``: ``sigma0 = <N>/4`` and
      ``sigma1 = sigma2 = (<N> + <N>^2/2)/4``;
    * ``other_unpolarized`` otherwise.
    """
    rep = report or squeeze_report(state, ops, tol, classify=False)
    eps = tol.eps_abs
    if any(abs(m) > eps for m in rep.means):
        return UnpolarizedClass.NOT_UNPOLARIZED
    comps = [ops.component(a) for a in range(3)]

    def moments_vanish(axes) -> bool:
        return all(abs(moment(state, comps[a], s)) <= eps
                   for a in axes for s in range(1, tol.s_max + 1))

    n = rep.n_mean
    s0, s1, s2 = rep.sigma
    coh, th = n / 4, (n + n * n / 2) / 4
    if moments_vanish((0, 1, 2)):
        return UnpolarizedClass.POLARIZATION_VACUUM
    if (_close(rep.dP2, n + n * n / 2, tol) and moments_vanish((0,))
            and np.real(moment(state, comps[1], 2)) > eps):
        return UnpolarizedClass.TWIN_PHOTON_HIDDEN
    if all(_close(s, coh, tol) for s in (s0, s1, s2)):
        return UnpolarizedClass.COHERENT_UNPOLARIZED
    if all(_close(s, th, tol) for s in (s0, s1, s2)):
        return UnpolarizedClass.THERMAL_LIKE
    if _close(s0, coh, tol) and _close(s1, th, tol) and _close(s2, th, tol):
        return UnpolarizedClass.PHASE_RANDOMIZED
    return UnpolarizedClass.OTHER_UNPOLARIZED


@dataclass(frozen=True)
class EprReport:
    """Residuals of the two-mode moment relations.

    ``sign_residual`` is the largest ``|<P_a(1)^s> - (-1)^s <P_a(2)^s>|`` and
    ``product_residual`` the largest
    ``|<P_a(1)^s><P_b(1)^s> - <P_a(2)^s><P_b(2)^s>|`` over ``s`` and axes.
    """

    moments_mode1: dict
    moments_mode2: dict
    sign_residual: float
    product_residual: float

    @property
    def max_residual(self) -> float:
        return max(self.sign_residual, self.product_residual)


def epr_moment_relations(state: QuantumState, ops_per_mode: list | None = None,
                         s_values=(1, 2, 3), tol: Tolerances = DEFAULT,
                         ops: PolarizationOps | None = None) -> EprReport:
    """Mode-1 versus mode-2 moment identities of a polarization scalar.

    Raises
    ------
    LabelInvalid
        If the basis does not have two spatial modes.
    NotPScalar
        If ``<P^2>`` exceeds ``eps_abs``.
    """
    basis = state.basis
    if basis.m != 2:
        raise LabelInvalid("epr_moment_relations needs m = 2")
    ops = ops or PolarizationOps(basis)
    cas = float(np.real(moment(state, ops.casimir, 1)))
    if cas > tol.eps_abs:
        raise NotPScalar(f"<P^2> = {cas:.3e} is not zero")
    per = ops_per_mode or ops.per_mode
    mom = [{(a, s): moment(state, per[j].component(a), s) for a in range(3) for s in s_values}
           for j in range(2)]
    sign_res = max(abs(mom[0][a, s] - (-1) ** s * mom[1][a, s]) for a in range(3) for s in s_values)
    prod_res = max(abs(mom[0][a, s] * mom[0][b, s] - mom[1][a, s] * mom[1][b, s])
                   for a in range(3) for b in range(3) for s in s_values)
    to_plain = lambda d: {f"P{a}^{s}": complex(v) for (a, s), v in d.items()}  # noqa: E731
    return EprReport(to_plain(mom[0]), to_plain(mom[1]), float(sign_res), float(prod_res))


@dataclass(frozen=True)
class YVarianceReport:
    """Measured versus closed-form noise of a Y-biphoton coherent state.

    ``dP2_sinh`` is ``p + (p+1)(2p+1) sinh^2|2 gamma| / 2``.
    ``dP2_n_printed`` evaluates the ``<N>`` form
    ``((1-2p)(<N>(p+1) + p) + <N>^2/2) / (2p+1)``, which only agrees with the
    sinh form at ``p = 0``; ``dP2_n`` is the ``<N>`` form that holds for
    every ``p``: ``p + 2(p+1)(2p+1) x (1+x)`` with
    ``x = (<N> - 2p) / (2(2p+1))``.
    """

    p: float
    gamma: complex
    n_mean: float
    n_sinh: float
    dP2: float
    dP2_sinh: float
    dP2_n: float
    dP2_n_printed: float
    leak: float

    @property
    def residual(self) -> float:
        return max(abs(self.dP2 - self.dP2_sinh), abs(self.dP2 - self.dP2_n),
                   abs(self.n_mean - self.n_sinh))


def y_gcs_variance_check(p, gamma: complex, basis: FockBasis,
                         ops: PolarizationOps | None = None, theta: float = 0.0,
                         phi: float = 0.0, tol: Tolerances = DEFAULT) -> YVarianceReport:
    """Build the Y-biphoton coherent state and compare its noise with closed forms.

    Raises
    ------
    LabelInvalid
        If ``m != 1``.
    TailTooLarge
    """
    if basis.m != 1:
        raise LabelInvalid("y_gcs_variance_check needs m = 1")
    p = half_integer(p, "p")
    ops = ops or PolarizationOps(basis)
    state = build_gcs(GcsSpec("y_biphoton", theta=theta, phi=phi, p=p, gamma=gamma), basis, tol=tol)
    prof = variance_profile(state, ops, tol)
    pf, r = float(p), abs(gamma)
    n = prof.n_mean
    x = (n - 2 * pf) / (2 * (2 * pf + 1))
    return YVarianceReport(
        p=pf,
        gamma=complex(gamma),
        n_mean=n,
        n_sinh=2 * pf + 2 * (2 * pf + 1) * np.sinh(r) ** 2,
        dP2=prof.dP2,
        dP2_sinh=pf + 0.5 * (pf + 1) * (2 * pf + 1) * np.sinh(2 * r) ** 2,
        dP2_n=pf + 2 * (pf + 1) * (2 * pf + 1) * x * (1 + x),
        dP2_n_printed=((1 - 2 * pf) * (n * (pf + 1) + pf) + n * n / 2) / (2 * pf + 1),
        leak=state.leak,
    )
