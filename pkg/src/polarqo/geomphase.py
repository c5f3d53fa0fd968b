"""Geometric phases of polarization coherent states along closed loops.

Loops live in the ``(theta, phi)`` parameter plane with ``phi`` unwrapped,
so a path may pass through a pole and continue along another meridian.
The numerical phase is the discrete Pancharatnam sum
``-sum_k arg <psi_k|psi_{k+1}> + arg <psi_0|psi_K>``, which is exact for
any gauge and converges as ``1/K^2`` on smooth loops; step doubling with
Richardson extrapolation refines it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import FamilyUnsupported, NoConvergence, PathInvalid
from .fock import FockBasis
from .gcs import GcsOrbit, GcsSpec
from .polarization import PolarizationOps

__all__ = [
    "SpherePath",
    "PhaseResult",
    "parse_loop",
    "solid_angle",
    "principal_value",
    "geometric_phase_numeric",
    "geometric_phase_closed",
]

_MIN_K = 8


def _sphere_distance(t1, p1, t2, p2) -> float:
    # chord form stays accurate for nearly coincident points
    a = np.array([np.sin(t1) * np.cos(p1), np.sin(t1) * np.sin(p1), np.cos(t1)])
    b = np.array([np.sin(t2) * np.cos(p2), np.sin(t2) * np.sin(p2), np.cos(t2)])
    return float(2 * np.arcsin(min(1.0, np.linalg.norm(a - b) / 2)))


def _polyline(theta, phi):
    """Piecewise-linear parameterization through vertices, by Euclidean length."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    seg = np.hypot(np.diff(theta), np.diff(phi))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    if cum[-1] == 0:
        return lambda s: (np.full_like(s, theta[0]), np.full_like(s, phi[0]))
    cum /= cum[-1]

    def param(s):
        return np.interp(s, cum, theta), np.interp(s, cum, phi)

    return param


@dataclass
class SpherePath:
    """Closed loop sampled at ``K + 1`` points, the last closing onto the first.

    Attributes
    ----------
    theta, phi : ndarray
        Samples; ``phi`` is unwrapped (continuous along the loop).
    kind : str
        ``constant_theta``, ``great_circle`` or ``custom``.
    label : str
        Descriptor the path was generated from.
    param : callable
        ``s -> (theta(s), phi(s))`` on ``[0, 1]``, used for refinement.
    """

    theta: np.ndarray
    phi: np.ndarray
    kind: str
    label: str = ""
    param: Callable | None = field(default=None, repr=False)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        if self.theta.shape != self.phi.shape or self.theta.ndim != 1:
            raise PathInvalid("theta and phi must be 1-d arrays of equal length")
        if len(self.theta) - 1 < _MIN_K:
            raise PathInvalid(f"a loop needs at least {_MIN_K} steps, got {len(self.theta) - 1}")
        if not np.all(np.isfinite(self.theta)) or not np.all(np.isfinite(self.phi)):
            raise PathInvalid("non-finite sample")
        if self.theta.min() < -1e-12 or self.theta.max() > np.pi + 1e-12:
            raise PathInvalid("theta samples must lie in [0, pi]")
        self.theta = np.clip(self.theta, 0.0, np.pi)
        gap = _sphere_distance(self.theta[0], self.phi[0], self.theta[-1], self.phi[-1])
        if gap > 1e-12:
            raise PathInvalid(f"loop is not closed: endpoints {gap:.3e} apart")
        if self.param is None:
            self.param = _polyline(self.theta, self.phi)

    @property
    def K(self) -> int:
        return len(self.theta) - 1

    # -- constructors -----------------------------------------------------

    @classmethod
    def _from_param(cls, param, K, kind, label):
        s = np.linspace(0.0, 1.0, K + 1)
        th, ph = param(s)
        return cls(th, ph, kind, label, param)

    @classmethod
    def circle(cls, theta0: float, K: int = 256, phi0: float = 0.0, direction: int = 1) -> "SpherePath":
        """Constant-``theta`` loop, counter-clockwise in ``phi`` for ``direction = +1``."""
        if not 0 <= theta0 <= np.pi:
            raise PathInvalid(f"theta0 = {theta0} outside [0, pi]")

        def param(s):
            s = np.asarray(s, dtype=float)
            return np.full_like(s, theta0), phi0 + direction * 2 * np.pi * s

        return cls._from_param(param, K, "constant_theta", f"circle:theta={theta0!r}")

    @classmethod
    def lune(cls, phi1: float, phi2: float, K: int = 256) -> "SpherePath":
        """North pole down meridian ``phi1``, along the south pole, up meridian ``phi2``."""
        verts_t = [0.0, np.pi, np.pi, 0.0]
        verts_p = [phi1, phi1, phi2, phi2]
        return cls._from_param(_polyline(verts_t, verts_p), K, "great_circle",
                               f"lune:phi1={phi1!r},phi2={phi2!r}")

    @classmethod
    def great(cls, tilt: float, azimuth: float = 0.0, K: int = 256) -> "SpherePath":
        """Great circle whose pole sits at ``(tilt, azimuth)``; ``0 < tilt < pi``.

        The circle must avoid the poles, so ``tilt`` may not be ``pi/2``.
        """
        if not 0 < tilt < np.pi or abs(tilt - np.pi / 2) < 1e-9:
            raise PathInvalid("great circle through a pole has no smooth (theta, phi) form")
        n = np.array([np.sin(tilt) * np.cos(azimuth), np.sin(tilt) * np.sin(azimuth), np.cos(tilt)])
        u = np.cross([0.0, 0.0, 1.0], n)
        u /= np.linalg.norm(u)
        v = np.cross(n, u)

        def param(s):
            a = 2 * np.pi * np.asarray(s, dtype=float)
            pts = np.outer(np.cos(a), u) + np.outer(np.sin(a), v)
            th = np.arctan2(np.hypot(pts[:, 0], pts[:, 1]), pts[:, 2])
            ph = np.unwrap(np.arctan2(pts[:, 1], pts[:, 0]))
            return th, ph

        return cls._from_param(param, K, "great_circle", f"great:tilt={tilt!r},azimuth={azimuth!r}")

    @classmethod
    def from_samples(cls, theta, phi, unwrap: bool = True) -> "SpherePath":
        """Custom loop through given samples (the last one closing the loop)."""
        phi = np.unwrap(np.asarray(phi, dtype=float)) if unwrap else phi
        return cls(theta, phi, "custom", "custom")

    @classmethod
    def from_csv(cls, path) -> "SpherePath":
        """Read ``theta,phi`` rows in radians (header optional)."""
        rows = []
        with Path(path).open() as fh:
            for rec in csv.reader(fh):
                if not rec or rec[0].strip().lower() == "theta":
                    continue
                try:
                    rows.append((float(rec[0]), float(rec[1])))
                except (ValueError, IndexError) as exc:
                    raise PathInvalid(f"bad CSV row {rec!r}") from exc
        if not rows:
            raise PathInvalid("empty path file")
        th, ph = np.array(rows).T
        return cls.from_samples(th, ph)

    # -- transformations --------------------------------------------------

    def resample(self, K: int, warp: Callable | None = None) -> "SpherePath":
        """Same loop at ``K`` steps; ``warp`` is a monotone map of ``[0, 1]`` onto itself."""
        s = np.linspace(0.0, 1.0, int(K) + 1)
        if warp is not None:
            s = np.asarray(warp(s), dtype=float)
            s[0], s[-1] = 0.0, 1.0
            if np.any(np.diff(s) < 0):
                raise PathInvalid("warp must be monotone")
        th, ph = self.param(s)
        return SpherePath(th, ph, self.kind, self.label, self.param)

    def reversed(self) -> "SpherePath":
        base = self.param
        return SpherePath(self.theta[::-1], self.phi[::-1], self.kind, self.label + ":reversed",
                          lambda s: base(1.0 - np.asarray(s, dtype=float)))

    def shifted(self, s0: float) -> "SpherePath":
        """Same loop started at parameter ``s0`` instead of 0."""
        base = self.param
        t_end, p_end = base(np.array([0.0, 1.0]))
        jump = p_end[1] - p_end[0]

        def param(s):
            u = np.asarray(s, dtype=float) + s0
            wrap = u > 1.0
            th, ph = base(np.where(wrap, u - 1.0, u))
            return th, ph + np.where(wrap, jump, 0.0)

        return SpherePath._from_param(param, self.K, self.kind, self.label + f":shift={s0!r}")


def parse_loop(text: str, K: int = 256) -> SpherePath:
    """Path from a descriptor: ``circle:theta=<v>``, ``lune:phi1=<a>,phi2=<b>``,
    ``great:tilt=<t>[,azimuth=<a>]`` or a CSV file name."""
    kind, _, rest = text.partition(":")
    kv = {}
    if rest:
        for part in rest.split(","):
            key, eq, val = part.partition("=")
            if not eq:
                raise PathInvalid(f"cannot parse {part!r} in loop descriptor")
            try:
                kv[key.strip()] = float(val)
            except ValueError as exc:
                raise PathInvalid(f"{key.strip()}: not a number ({val!r})") from exc
    try:
        if kind == "circle":
            return SpherePath.circle(kv["theta"], K, kv.get("phi0", 0.0))
        if kind == "lune":
            return SpherePath.lune(kv["phi1"], kv["phi2"], K)
        if kind == "great":
            return SpherePath.great(kv["tilt"], kv.get("azimuth", 0.0), K)
    except KeyError as exc:
        raise PathInvalid(f"loop descriptor {text!r} is missing {exc.args[0]}") from exc
    if Path(text).is_file():
        return SpherePath.from_csv(text)
    raise PathInvalid(f"unknown loop descriptor {text!r}")


# ------------------------------------------------------------- integrals


def _midpoint_integral(path: SpherePath, f_dphi, f_dtheta=None) -> float:
    th, ph = path.theta, path.phi
    tm, pm = (th[1:] + th[:-1]) / 2, (ph[1:] + ph[:-1]) / 2
    out = float(np.sum(f_dphi(tm, pm) * np.diff(ph)))
    if f_dtheta is not None:
        out += float(np.sum(f_dtheta(tm, pm) * np.diff(th)))
    return out


def _refined_integral(path: SpherePath, f_dphi, f_dtheta=None, K: int | None = None) -> float:
    """Midpoint rule at ``K`` and ``2K`` combined by Richardson extrapolation."""
    K = max(path.K, 4096) if K is None else int(K)
    a = _midpoint_integral(path.resample(K), f_dphi, f_dtheta)
    b = _midpoint_integral(path.resample(2 * K), f_dphi, f_dtheta)
    return b + (b - a) / 3


def solid_angle(path: SpherePath, refine: bool = False) -> float:
    """``Omega = loop integral of (1 - cos theta) d phi`` by the midpoint rule.

    With ``refine=False`` the sum runs over the path's own samples; with
    ``refine=True`` the loop is resampled and extrapolated.
    """
    f = lambda t, p: 1.0 - np.cos(t)  # noqa: E731
    return _refined_integral(path, f) if refine else _midpoint_integral(path, f)


def principal_value(gamma: float) -> tuple:
    """``(value in (-pi, pi], winding)`` with ``gamma = value + 2 pi winding``."""
    w = int(np.ceil((gamma - np.pi) / (2 * np.pi)))
    val = gamma - 2 * np.pi * w
    if val <= -np.pi:
        val += 2 * np.pi
        w -= 1
    return float(val), w


@dataclass(frozen=True)
class PhaseResult:
    gamma_total: float
    gamma_principal: float
    winding: int
    K_final: int
    converged: bool
    min_overlap: float
    estimates: tuple = ()

    def to_dict(self) -> dict:
        return {
            "gamma_total": self.gamma_total,
            "gamma_principal": self.gamma_principal,
            "winding": self.winding,
            "K_final": self.K_final,
            "converged": self.converged,
        }


def _discrete_phase(orbit: GcsOrbit, path: SpherePath) -> tuple:
    total, closure, min_ov = orbit.rotator.loop_phase(path.theta, path.phi)
    return total + float(np.angle(closure)), min_ov


def geometric_phase_numeric(spec: GcsSpec, path: SpherePath, basis: FockBasis,
                            ops: PolarizationOps | None = None, tol: Tolerances = DEFAULT,
                            K0: int | None = None, backend: str | None = None,
                            strict: bool = True) -> PhaseResult:
    """Geometric phase of ``D(theta, phi) psi0`` around ``path``.

    The reference ``psi0`` is fixed by ``spec`` (its own angles are
    ignored).  Step counts double from ``K0`` (default ``max(path.K, 64)``)
    and successive Richardson estimates are compared until they agree to
    ``tol.phase``.

    Raises
    ------
    NoConvergence
        If ``tol.k_cap`` is reached first and ``strict`` is set.
    TailTooLarge
    """
    orbit = GcsOrbit(spec, basis, tol, backend)
    K = max(path.K, 64) if K0 is None else max(int(K0), _MIN_K)
    prev_raw, min_ov = _discrete_phase(orbit, path.resample(K))
    prev_rich = None
    estimates = [prev_raw]
    while True:
        K *= 2
        if K > tol.k_cap:
            if strict:
                raise NoConvergence(f"geometric phase not converged at K = {K // 2}")
            g = prev_rich if prev_rich is not None else prev_raw
            pv, w = principal_value(g)
            return PhaseResult(g, pv, w, K // 2, False, min_ov, tuple(estimates))
        raw, min_ov = _discrete_phase(orbit, path.resample(K))
        rich = raw + (raw - prev_raw) / 3
        estimates.append(rich)
        if prev_rich is not None and abs(rich - prev_rich) < tol.phase and min_ov > 0.5:
            pv, w = principal_value(rich)
            return PhaseResult(rich, pv, w, K, True, min_ov, tuple(estimates))
        prev_raw, prev_rich = raw, rich


# ------------------------------------------------------------- closed forms


def _p0_eigenvalue(spec: GcsSpec) -> float | None:
    f = spec.family
    if f == "semi_coherent":
        return float(spec.mu)
    if f in ("max_classical", "x_biphoton", "y_biphoton"):
        return float(spec.sign * spec.p)
    if f == "fock_rotated":
        occ = spec.occupations
        return 0.5 * (sum(occ[0::2]) - sum(occ[1::2]))
    if f == "product" and not spec.mode_angles:
        return 0.5 * spec.sign * sum(spec.occupations)
    return None


def _glauber_means(spec: GcsSpec):
    if spec.family == "glauber_circular":
        z = np.zeros(len(spec.alpha), dtype=complex)
        a = np.asarray(spec.alpha, dtype=complex)
        ap, am = (a, z) if spec.sign > 0 else (z, a)
    else:
        ap = np.asarray(spec.alpha_plus, dtype=complex)
        am = np.asarray(spec.alpha_minus, dtype=complex)
    w = complex(np.sum(am * ap.conj()))
    p0 = 0.5 * float(np.sum(np.abs(ap) ** 2 - np.abs(am) ** 2))
    return p0, w.real, -w.imag


def geometric_phase_closed(spec: GcsSpec, path: SpherePath, K: int | None = None) -> float:
    """Closed-form geometric phase, by quadrature of the line integrals.

    For references with ``P0 = mu`` (semi-coherent, maximally classical,
    biphoton, rotated Fock states) ``gamma = -2 mu loop sin^2(theta/2) dphi``.
    For rotated Glauber states::

        gamma = -2<P0> loop sin^2(theta/2) dphi
                - <P1> loop [sin(theta) cos(phi) dphi + sin(phi) dtheta]
                + <P2> loop [sin(theta) sin(phi) dphi - cos(phi) dtheta]

    with the means taken in the reference state.

    Raises
    ------
    FamilyUnsupported
    """
    half = lambda t, p: np.sin(t / 2) ** 2  # noqa: E731
    mu = _p0_eigenvalue(spec)
    if mu is not None:
        return -2 * mu * _refined_integral(path, half, K=K)
    if spec.family in ("glauber", "glauber_rotated", "glauber_circular", "glauber_phase_constrained"):
        p0, p1, p2 = _glauber_means(spec)
        g0 = -2 * p0 * _refined_integral(path, half, K=K)
        g1 = -p1 * _refined_integral(path, lambda t, p: np.sin(t) * np.cos(p),
                                     lambda t, p: np.sin(p), K=K)
        g2 = p2 * _refined_integral(path, lambda t, p: np.sin(t) * np.sin(p),
                                    lambda t, p: -np.cos(p), K=K)
        return g0 + g1 + g2
    raise FamilyUnsupported(f"no closed-form geometric phase for family {spec.family}")
