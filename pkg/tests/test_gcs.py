from fractions import Fraction

import numpy as np
import pytest

from polarqo.basis_states import pmu_state_m1, pmu_state_m2
from polarqo.errors import (
    ConstraintViolated,
    QuadratureUnderResolved,
    SpecError,
    TailTooLarge,
)
from polarqo.fock import QuantumState, build_basis, creation_op, expectation
from polarqo.gcs import (
    FAMILIES,
    GcsOrbit,
    GcsSpec,
    Rotator,
    build_gcs,
    build_gcs_series,
    d_coefficients,
    identity_resolution_check,
    max_classical_coefficients,
    overlap_closed_form,
    reference_state,
    rotated_glauber_amplitudes,
    su2_displacement,
    x_biphoton_expansion_check,
)
from polarqo.polarization import BiphotonOps, build_polarization_ops, variance_profile

HALF = Fraction(1, 2)


@pytest.fixture(scope="module")
def m1():
    basis = build_basis(1, 4)
    return basis, build_polarization_ops(basis)


def test_d_coefficients_are_matrix_elements(m1):
    basis, ops = m1
    p = 2
    labels = [Fraction(p) - k for k in range(2 * p + 1)]
    for theta, phi in [(0.7, 1.9), (2.5, 4.4)]:
        D = su2_displacement(theta, phi, ops).matrix
        for mu in labels:
            v = pmu_state_m1(p, mu, basis).vector
            for mp in labels:
                w = pmu_state_m1(p, mp, basis).vector
                assert abs(np.vdot(w, D @ v) - d_coefficients(p, mp, mu, theta, phi)) <= 1e-12


def test_d_coefficients_unitary():
    p = Fraction(5, 2)
    labels = [p - k for k in range(6)]
    M = np.array([[d_coefficients(p, a, b, 1.1, 0.3) for b in labels] for a in labels])
    assert np.allclose(M.conj().T @ M, np.eye(6), atol=1e-12)


@pytest.mark.parametrize("sign", [1, -1])
def test_max_classical_coefficients(m1, sign):
    basis, _ = m1
    p = Fraction(3, 2)
    st = build_gcs(GcsSpec("max_classical", 0.9, 2.0, p=p, sign=sign), basis)
    coefs = max_classical_coefficients(p, 0.9, 2.0, sign)
    for mu, c in coefs.items():
        assert np.vdot(pmu_state_m1(p, mu, basis).vector, st.vector) == pytest.approx(c, abs=1e-12)


def test_sign_flip_relation(m1):
    # |theta phi>_- = exp(-2 i p phi) |theta + pi, phi>_+
    basis, _ = m1
    p = Fraction(3, 2)
    lo = Rotator(basis, pmu_state_m1(p, -p, basis).vector)
    hi = Rotator(basis, pmu_state_m1(p, p, basis).vector)
    for theta, phi in [(0.3, 0.8), (1.7, 4.0)]:
        assert np.allclose(lo.at(theta, phi),
                           np.exp(-2j * float(p) * phi) * hi.at(theta + np.pi, phi), atol=1e-12)


def test_displacement_rotates_creation_operators(m1):
    basis, ops = m1
    theta, phi = 0.8, 2.3
    D = su2_displacement(theta, phi, ops).matrix
    ap, am = creation_op(basis, 1, "+").matrix, creation_op(basis, 1, "-").matrix
    lhs = D @ ap @ D.conj().T
    rhs = np.cos(theta / 2) * ap + np.exp(1j * phi) * np.sin(theta / 2) * am
    inner = basis.totals <= basis.n_max - 1
    assert np.max(np.abs((lhs - rhs)[:, inner])) <= 1e-12


def test_overlap_selection_rules():
    a = GcsSpec("semi_coherent", 0.3, 0.2, p=1, mu=0, n=4, t=0)
    assert overlap_closed_form(a, GcsSpec("semi_coherent", 0.3, 0.2, p=2, mu=0, n=4, t=0)) == 0
    assert overlap_closed_form(a, GcsSpec("semi_coherent", 0.3, 0.2, p=1, mu=0, n=4, t=1)) == 0
    assert overlap_closed_form(a, a) == pytest.approx(1.0)
    b = GcsSpec("semi_coherent", 2.1, 5.0, p=1, mu=1, n=4, t=0)
    assert overlap_closed_form(b, a) == pytest.approx(np.conj(overlap_closed_form(a, b)))


def test_overlap_half_example():
    # two orthogonal polarizations of a single photon, rotated by pi/2 about different axes
    a = GcsSpec("semi_coherent", np.pi / 2, 0.0, p=HALF, mu=HALF)
    b = GcsSpec("semi_coherent", np.pi / 2, np.pi / 2, p=HALF, mu=HALF)
    basis = build_basis(1, 1)
    brute = np.vdot(build_gcs(a, basis).vector, build_gcs(b, basis).vector)
    assert overlap_closed_form(a, b) == pytest.approx(brute, abs=1e-14)
    assert abs(brute) == pytest.approx(np.sqrt(0.5))


SERIES_CASES = [
    (GcsSpec("semi_coherent", 1.2, 0.4, p=Fraction(3, 2), mu=HALF), 1, 4),
    (GcsSpec("semi_coherent", 0.5, 3.0, p=1, mu=-1, n=4, t=0), 2, 4),
    (GcsSpec("max_classical", 2.0, 1.0, p=2, sign=-1), 1, 4),
    (GcsSpec("y_biphoton", 0.6, 1.1, p=HALF, gamma=0.2 + 0.1j), 1, 30),
    (GcsSpec("x_biphoton", 0.9, 0.5, p=HALF, zeta=0.1j, kappa=0.15), 2, 14),
    (GcsSpec("glauber", 0.4, 2.4, alpha_plus=(0.3, 0.2j), alpha_minus=(-0.1, 0.4)), 2, 12),
]


@pytest.mark.parametrize("spec, m, n_max", SERIES_CASES, ids=lambda x: getattr(x, "family", ""))
def test_series_matches_rotation(spec, m, n_max):
    basis = build_basis(m, n_max)
    assert build_gcs_series(spec, basis).fidelity(build_gcs(spec, basis)) == pytest.approx(1, abs=1e-12)


ALL_FAMILY_SPECS = {
    "semi_coherent": (GcsSpec("semi_coherent", p=1, mu=0), 1, 4),
    "max_classical": (GcsSpec("max_classical", p=HALF, sign=-1), 1, 4),
    "product": (GcsSpec("product", occupations=(1, 2), mode_angles=((0.3, 0.1), (1.0, 2.0))), 2, 4),
    "fock_rotated": (GcsSpec("fock_rotated", occupations=(1, 0, 0, 2)), 2, 4),
    "x_biphoton": (GcsSpec("x_biphoton", p=0, zeta=0.2), 2, 14),
    "y_biphoton": (GcsSpec("y_biphoton", p=1, gamma=0.2), 1, 30),
    "glauber": (GcsSpec("glauber", alpha_plus=(0.5,), alpha_minus=(0.2j,)), 1, 24),
    "glauber_rotated": (GcsSpec("glauber_rotated", alpha_plus=(0.5,), alpha_minus=(0.2j,)), 1, 24),
    "glauber_circular": (GcsSpec("glauber_circular", alpha=(0.4, 0.3), sign=-1), 2, 14),
    "glauber_phase_constrained": (GcsSpec("glauber_phase_constrained", alpha_plus=(0.4j, -0.3j),
                                          alpha_minus=(0.2, 0.5)), 2, 14),
}


def test_every_family_has_a_case():
    assert set(ALL_FAMILY_SPECS) == set(FAMILIES)


@pytest.mark.parametrize("family", FAMILIES)
def test_identity_angles_give_reference(family):
    spec, m, n_max = ALL_FAMILY_SPECS[family]
    basis = build_basis(m, n_max)
    ref = reference_state(spec, basis)
    assert build_gcs(spec, basis).fidelity(ref) == pytest.approx(1.0, abs=1e-12)
    orbit = GcsOrbit(spec, basis)
    rotated = orbit.at(1.0, 2.0)
    assert np.linalg.norm(rotated.vector) == pytest.approx(1.0)
    assert rotated.fidelity(build_gcs(spec.at(1.0, 2.0), basis)) == pytest.approx(1.0, abs=1e-12)


def test_rotated_glauber_matches_rotated_amplitudes():
    basis = build_basis(2, 12)
    ap, am = (0.3 + 0.1j, -0.2), (0.25j, 0.1)
    st = build_gcs(GcsSpec("glauber", 1.3, 0.7, alpha_plus=ap, alpha_minus=am), basis)
    rp, rm = rotated_glauber_amplitudes(ap, am, 1.3, 0.7)
    ref = build_gcs(GcsSpec("glauber", alpha_plus=tuple(rp), alpha_minus=tuple(rm)), basis)
    assert st.fidelity(ref) == pytest.approx(1.0, abs=1e-12)


def test_scalar_biphoton_is_rotation_invariant():
    basis = build_basis(2, 14)
    spec = GcsSpec("x_biphoton", p=0, zeta=0.25, kappa=0.1)
    st = build_gcs(spec, basis)
    for theta, phi in [(0.5, 0.1), (2.9, 4.0)]:
        assert build_gcs(spec.at(theta, phi), basis).fidelity(st) == pytest.approx(1.0, abs=1e-12)
    ops = build_polarization_ops(basis)
    assert variance_profile(st, ops).dP2 == pytest.approx(0.0, abs=1e-12)


def test_xplus_vacuum_matches_labelled_state():
    basis = build_basis(2, 2)
    vac = QuantumState.fock(basis, (0,) * 4).vector
    x = BiphotonOps(basis).Xplus(1, 2).apply(vac)
    assert np.allclose(x / np.linalg.norm(x), pmu_state_m2(0, 0, 2, 0, basis).vector)


def test_semi_coherent_means(m1):
    basis, ops = m1
    theta, phi = 1.1, 0.6
    st = build_gcs(GcsSpec("semi_coherent", theta, phi, p=2, mu=1), basis)
    got = [expectation(st, A).real for A in (ops.P1, ops.P2, ops.P0)]
    want = [np.sin(theta) * np.cos(phi), -np.sin(theta) * np.sin(phi), np.cos(theta)]
    assert got == pytest.approx(want, abs=1e-12)


def test_x_expansion_check():
    basis = build_basis(2, 12)
    assert x_biphoton_expansion_check(HALF, 0.05, 0.1, basis, theta=0.4, phi=1.0) <= 1e-12


def test_tail_too_large():
    with pytest.raises(TailTooLarge):
        build_gcs(GcsSpec("x_biphoton", p=0, zeta=2.0), build_basis(2, 6))


@pytest.mark.parametrize("m, n", [(1, 3), (2, 2)])
def test_identity_resolution_and_underresolution(m, n):
    basis = build_basis(m, 3)
    p = Fraction(n, 2)
    assert identity_resolution_check(p, n, basis) <= 1e-12
    need = int(4 * p + 2)
    with pytest.raises(QuadratureUnderResolved):
        identity_resolution_check(p, n, basis, n_phi=need - 1)


@pytest.mark.parametrize("kwargs, path", [
    (dict(family="semi_coherent", theta=4.0, p=1, mu=0), "angles.theta"),
    (dict(family="semi_coherent", p=1, mu=2), "labels"),
    (dict(family="nope"), "family"),
    (dict(family="max_classical", p=1, sign=0), "sign"),
])
def test_spec_errors_name_field(kwargs, path):
    with pytest.raises(SpecError, match=path):
        GcsSpec(**kwargs)


def test_phase_constraint():
    with pytest.raises(ConstraintViolated):
        GcsSpec("glauber_phase_constrained", alpha_plus=(0.4,), alpha_minus=(0.4j,))


@pytest.mark.parametrize("family", FAMILIES)
def test_spec_json_roundtrip(family):
    spec = ALL_FAMILY_SPECS[family][0].at(0.5, 1.5)
    assert GcsSpec.from_json(spec.to_json()) == spec
    assert GcsSpec.from_dict(spec.to_dict()) == spec
