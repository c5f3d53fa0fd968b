"""Reference states: the |p, mu; n, t> families and two unpolarized mixtures.

For one spatiotemporal mode the eigenstates of ``P^2, P0, N`` are plain
occupation states ``|n+ = p + mu, n- = p - mu>``.  For two modes the extra
label ``t = (n(1) - n(2)) / 2`` resolves the multiplicity, and the states
carry powers of the P-scalar pair creator ``X+_12``.

Combinatorial prefactors are evaluated in exact rational arithmetic and
converted to floating point only at the end, so large factorials never
overflow.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb, factorial, lgamma

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import CutoffExceeded, LabelInvalid, TailTooLarge
from .fock import FockBasis, QuantumState

__all__ = [
    "half_integer",
    "pmu_state_m1",
    "pmu_state_m2",
    "pmu_labels",
    "monomial_state",
    "thermal_density_m1",
    "phase_randomized_density",
    "glauber_amplitudes",
]


def half_integer(x, name: str = "value") -> Fraction:
    """Parse ``x`` as an exact half-integer.

    Accepts ints, floats such as ``0.5``, strings such as ``"3/2"`` and
    :class:`fractions.Fraction`.

    Raises
    ------
    LabelInvalid
        If ``2 x`` is not an integer.
    """
    try:
        f = Fraction(x).limit_denominator(1000) if isinstance(x, float) else Fraction(x)
    except (TypeError, ValueError) as exc:
        raise LabelInvalid(f"{name}: cannot read {x!r} as a half-integer") from exc
    if (2 * f).denominator != 1 or (isinstance(x, float) and abs(float(f) - x) > 1e-12):
        raise LabelInvalid(f"{name}: {x!r} is not a half-integer")
    return f


def _as_int(f: Fraction, name: str) -> int:
    if f.denominator != 1:
        raise LabelInvalid(f"{name} must be an integer, got {f}")
    return int(f)


def _sqrt_fraction(q: Fraction) -> float:
    """``sqrt(q)`` for a nonnegative rational, accurate even when q is huge."""
    if q < 0:
        raise ValueError("negative argument")
    if q == 0:
        return 0.0
    # scale to keep float conversion in range
    num, den = q.numerator, q.denominator
    shift = num.bit_length() - den.bit_length()
    shift -= shift % 2
    scaled = Fraction(num, den * (1 << shift)) if shift >= 0 else Fraction(num * (1 << -shift), den)
    return float(np.sqrt(float(scaled))) * 2.0 ** (shift / 2)


def monomial_state(basis: FockBasis, terms: dict) -> np.ndarray:
    """Vector of ``sum_e c_e prod_s (a_s^dag)^{e_s} |0>``.

    Parameters
    ----------
    basis : FockBasis
    terms : dict
        Map from exponent tuple (length ``2m``) to exact coefficient
        (:class:`Fraction` or int).  Each term contributes
        ``c_e sqrt(prod e_s!)`` to the occupation state ``|e>``.

    Returns
    -------
    ndarray
        Unnormalized amplitudes.

    Raises
    ------
    CutoffExceeded
        If a nonzero term needs more than ``n_max`` photons.
    """
    vec = np.zeros(basis.dim)
    for e, c in terms.items():
        if c == 0:
            continue
        if sum(e) > basis.n_max:
            raise CutoffExceeded(f"state needs {sum(e)} photons > n_max={basis.n_max}")
        weight = Fraction(c) ** 2
        for n in e:
            weight *= factorial(n)
        vec[basis.index[tuple(e)]] += (1 if c > 0 else -1) * _sqrt_fraction(weight)
    return vec


def _check_pmu(p: Fraction, mu: Fraction):
    if p < 0:
        raise LabelInvalid(f"p must be >= 0, got {p}")
    if abs(mu) > p:
        raise LabelInvalid(f"|mu| = {abs(mu)} exceeds p = {p}")
    if (p - mu).denominator != 1:
        raise LabelInvalid(f"p - mu must be an integer (p={p}, mu={mu})")


def pmu_state_m1(p, mu, basis: FockBasis) -> QuantumState:
    """Single-mode eigenstate ``|p, mu>`` of ``P^2, P0`` and ``N``.

    Built as ``(a+^dag)^{|mu|+mu} (a-^dag)^{|mu|-mu} (Y+_11)^{p-|mu|} |0>``
    divided by ``sqrt((p-mu)! (p+mu)!)``, which is the occupation state
    ``|n+ = p + mu, n- = p - mu>`` with a positive sign.

    Raises
    ------
    LabelInvalid
    CutoffExceeded
    """
    if basis.m != 1:
        raise LabelInvalid(f"pmu_state_m1 needs m = 1, basis has m = {basis.m}")
    p, mu = half_integer(p, "p"), half_integer(mu, "mu")
    _check_pmu(p, mu)
    if 2 * p > basis.n_max:
        raise CutoffExceeded(f"n = 2p = {2 * p} exceeds n_max = {basis.n_max}")
    a = abs(mu)
    e_plus = _as_int(a + mu + (p - a), "n+")
    e_minus = _as_int(a - mu + (p - a), "n-")
    norm_sq = Fraction(1, factorial(_as_int(p - mu, "p-mu")) * factorial(_as_int(p + mu, "p+mu")))
    vec = monomial_state(basis, {(e_plus, e_minus): 1}) * _sqrt_fraction(norm_sq)
    return QuantumState.pure(basis, vec)


def pmu_state_m2(p, mu, n: int, t, basis: FockBasis) -> QuantumState:
    """Two-mode eigenstate ``|p, mu; n, t>``.

    Simultaneous eigenstate of ``P^2, P0, N`` and ``(N(1) - N(2)) / 2`` with
    eigenvalues ``p(p+1), mu, n, t``::

        |p,mu;n,t> = K sum_a (a+^dag(1))^{p+mu-a} (a-^dag(1))^{t-mu+a}
                     (a+^dag(2))^a (a-^dag(2))^{p-t-a}
                     / (a! (p-t-a)! (p+mu-a)! (t+a-mu)!)  (X+_12)^{n/2-p} |0>

    with ``K^2 = (2p+1)(p+mu)!(p-mu)!(p-t)!(p+t)! / ((n/2+p+1)! (n/2-p)!)``.
    The sum runs over every ``a`` that keeps all four factorial arguments
    nonnegative.

    Raises
    ------
    LabelInvalid
    CutoffExceeded
    """
    if basis.m != 2:
        raise LabelInvalid(f"pmu_state_m2 needs m = 2, basis has m = {basis.m}")
    p, mu, t = half_integer(p, "p"), half_integer(mu, "mu"), half_integer(t, "t")
    _check_pmu(p, mu)
    if int(n) != n or n < 2 * p or (n - 2 * p) % 2:
        raise LabelInvalid(f"n must be >= 2p with n - 2p even (n={n}, p={p})")
    if abs(t) > p or (p - t).denominator != 1:
        raise LabelInvalid(f"t must satisfy |t| <= p with p - t integer (t={t}, p={p})")
    if n > basis.n_max:
        raise CutoffExceeded(f"n = {n} exceeds n_max = {basis.n_max}")
    k = _as_int(Fraction(n, 2) - p, "n/2 - p")
    P, M, T = p, mu, t
    k_sq = Fraction(
        (2 * P + 1) * factorial(int(P + M)) * factorial(int(P - M))
        * factorial(int(P - T)) * factorial(int(P + T)),
        factorial(k + int(2 * P) + 1) * factorial(k),
    )
    lo, hi = max(0, int(M - T)), min(int(P + M), int(P - T))
    terms: dict = {}
    for a in range(lo, hi + 1):
        base = Fraction(1, factorial(a) * factorial(int(P - T) - a)
                        * factorial(int(P + M) - a) * factorial(int(T - M) + a))
        for r in range(k + 1):
            # r factors of -a-^dag(1) a+^dag(2) from X+_12, k - r of a+^dag(1) a-^dag(2)
            e = (int(P + M) - a + k - r, int(T - M) + a + r, a + r, int(P - T) - a + k - r)
            terms[e] = terms.get(e, 0) + base * comb(k, r) * (-1) ** r
    vec = monomial_state(basis, terms) * _sqrt_fraction(k_sq)
    return QuantumState.pure(basis, vec)


def pmu_labels(m: int, n: int) -> list:
    """All valid ``(p, mu, t)`` labels of the fixed-N block (``t`` is None for m = 1)."""
    n = int(n)
    out = []
    if m == 1:
        p = Fraction(n, 2)
        for k in range(n + 1):
            out.append((p, p - k, None))
        return out
    if m == 2:
        for j in range(n // 2 + 1):
            p = Fraction(n, 2) - j
            for a in range(int(2 * p) + 1):
                for b in range(int(2 * p) + 1):
                    out.append((p, p - a, p - b))
        return out
    raise LabelInvalid("closed-form labels exist for m = 1 and m = 2 only")


# ---------------------------------------------------------------------------
# mixtures


def thermal_density_m1(beta: float, basis: FockBasis, tol: Tolerances = DEFAULT) -> QuantumState:
    """Two-polarization thermal state of one mode.

    ``rho = (1 - e^{-beta})^2 sum_{n+, n-} e^{-(n+ + n-) beta} |n+, n-><n+, n-|``,
    truncated at ``n_max`` and renormalized.  The discarded weight is
    ``leak``.

    Raises
    ------
    TailTooLarge
        If the discarded weight is not below ``tol.mixed_tail``.
    """
    if basis.m != 1:
        raise LabelInvalid(f"thermal_density_m1 needs m = 1, basis has m = {basis.m}")
    if not beta > 0:
        raise ValueError("beta must be positive")
    x = np.exp(-beta)
    M = basis.n_max
    # closed form of the discarded geometric tail
    tail = (M + 2) * x ** (M + 1) - (M + 1) * x ** (M + 2)
    if tail >= tol.mixed_tail:
        raise TailTooLarge(tail, tol.mixed_tail, "thermal state")
    w = np.expm1(-beta) ** 2 * np.exp(-beta * basis.totals)
    w = w / w.sum()
    return QuantumState.mixed(basis, np.diag(w.astype(complex)), leak=float(max(tail, 0.0)))


def glauber_amplitudes(basis: FockBasis, alpha_plus, alpha_minus) -> tuple:
    """Occupation amplitudes of a multimode coherent state, truncated.

    Returns
    -------
    vec : ndarray
        ``prod_s exp(-|a_s|^2/2) a_s^{n_s} / sqrt(n_s!)`` (unnormalized).
    leak : float
        Probability above the cutoff, ``1 - ||vec||^2``.
    """
    ap = np.asarray(alpha_plus, dtype=complex).ravel()
    am = np.asarray(alpha_minus, dtype=complex).ravel()
    if len(ap) != basis.m or len(am) != basis.m:
        raise LabelInvalid(f"need {basis.m} amplitudes per polarization")
    amps = np.empty(2 * basis.m, dtype=complex)
    amps[0::2], amps[1::2] = ap, am
    occ = basis.occupations
    logmag = -0.5 * float(np.sum(np.abs(amps) ** 2)) * np.ones(basis.dim)
    phase = np.zeros(basis.dim)
    zero = np.zeros(basis.dim, dtype=bool)
    lg = np.array([lgamma(k + 1) for k in range(basis.n_max + 1)])
    for s, a in enumerate(amps):
        ns = occ[:, s]
        logmag -= 0.5 * lg[ns]
        if a == 0:
            zero |= ns > 0
        else:
            logmag += ns * np.log(abs(a))
            phase += ns * np.angle(a)
    vec = np.where(zero, 0.0, np.exp(logmag + 1j * phase))
    leak = max(0.0, 1.0 - float(np.vdot(vec, vec).real))
    return vec, leak


def phase_randomized_density(alpha: complex, basis: FockBasis,
                             tol: Tolerances = DEFAULT) -> QuantumState:
    """Coherent state averaged over the relative polarization phase.

    The average of ``|alpha e^{i chi}, alpha><...|`` over ``chi`` is formed
    exactly by keeping only the components with equal ``n+ - n-``, so the
    result commutes with ``P0``.

    Raises
    ------
    TailTooLarge
        If the coherent-state tail is not below ``tol.mixed_tail``.
    """
    if basis.m != 1:
        raise LabelInvalid(f"phase_randomized_density needs m = 1, basis has m = {basis.m}")
    vec, leak = glauber_amplitudes(basis, [alpha], [alpha])
    if leak >= tol.mixed_tail:
        raise TailTooLarge(leak, tol.mixed_tail, "coherent state")
    diff = basis.occupations[:, 0] - basis.occupations[:, 1]
    rho = np.outer(vec, vec.conj()) * (diff[:, None] == diff[None, :])
    rho /= np.trace(rho).real
    return QuantumState.mixed(basis, rho, leak=leak)
