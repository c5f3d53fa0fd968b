import json
from fractions import Fraction

import numpy as np
import pytest

from polarqo.basis_states import pmu_state_m2, thermal_density_m1
from polarqo.errors import LabelInvalid, NotPScalar
from polarqo.fock import QuantumState, build_basis
from polarqo.gcs import GcsSpec, build_gcs
from polarqo.polarization import build_polarization_ops
from polarqo.squeezing import (
    SqueezeClass,
    UnpolarizedClass,
    classify_squeezing,
    classify_unpolarized,
    epr_moment_relations,
    squeeze_report,
    uncertainty_triples,
    y_gcs_variance_check,
)


def _setup(m, n_max):
    basis = build_basis(m, n_max)
    return basis, build_polarization_ops(basis)


def test_triples_max_classical_equality():
    basis, ops = _setup(1, 2)
    st = build_gcs(GcsSpec("max_classical", p=1), basis)
    t = uncertainty_triples(st, ops)[0]
    assert t.pair == (1, 2, 0)
    assert t.lhs == pytest.approx(0.5) and t.rhs == pytest.approx(0.5)


@pytest.mark.parametrize("theta, phi", [(0.6, 0.2), (1.4, 2.5), (2.2, 4.0)])
def test_triples_max_classical_trig_forms(theta, phi):
    p = 2
    basis, ops = _setup(1, 4)
    st = build_gcs(GcsSpec("max_classical", theta, phi, p=p), basis)
    s, c = np.sin(theta), np.cos(theta)
    var = [p / 2 * s ** 2, p / 2 * (1 - s ** 2 * np.cos(phi) ** 2), p / 2 * (1 - s ** 2 * np.sin(phi) ** 2)]
    means = [p * c, p * s * np.cos(phi), -p * s * np.sin(phi)]
    for tr in uncertainty_triples(st, ops):
        i, j, k = tr.pair
        assert tr.lhs == pytest.approx(np.sqrt(var[i] * var[j]), abs=1e-9)
        assert tr.rhs == pytest.approx(abs(means[k]) / 2, abs=1e-9)


def test_triples_glauber_and_vacuum():
    basis, ops = _setup(1, 30)
    st = build_gcs(GcsSpec("glauber", alpha_plus=(1,), alpha_minus=(0,)), basis)
    t = uncertainty_triples(st, ops)[0]
    assert t.lhs == pytest.approx(0.25, abs=1e-12) and t.rhs == pytest.approx(0.25, abs=1e-12)
    vac = QuantumState.fock(basis, (0, 0))
    assert all(t.lhs == 0 and t.rhs == 0 for t in uncertainty_triples(vac, ops))


def test_circular_squeezing():
    basis, ops = _setup(1, 4)
    rep = squeeze_report(build_gcs(GcsSpec("max_classical", p=2), basis), ops)
    assert rep.sigma[1] == pytest.approx(1.0) and rep.sigma[2] == pytest.approx(1.0)
    assert rep.squeezing_class == SqueezeClass.CIRCULAR


def test_circular_linear_squeezing():
    theta = np.arcsin(np.sqrt(0.6))
    phi = np.arccos(np.sqrt(0.65))
    basis, ops = _setup(1, 4)
    rep = squeeze_report(build_gcs(GcsSpec("max_classical", theta, phi, p=2), basis), ops)
    assert rep.squeezing_class == SqueezeClass.CIRCULAR_LINEAR


def test_linear_squeezing_on_equator():
    basis, ops = _setup(1, 4)
    rep = squeeze_report(build_gcs(GcsSpec("max_classical", np.pi / 2, 0.0, p=2), basis), ops)
    assert rep.squeezing_class == SqueezeClass.LINEAR


def test_absolute_and_vacuum():
    basis, ops = _setup(2, 4)
    st = pmu_state_m2(0, 0, 2, 0, basis)
    rep = squeeze_report(st, ops)
    assert rep.squeezing_class == SqueezeClass.ABSOLUTE
    assert rep.unpolarized_class == UnpolarizedClass.POLARIZATION_VACUUM


def test_glauber_is_not_squeezed():
    basis, ops = _setup(1, 30)
    st = build_gcs(GcsSpec("glauber", 0.7, 0.3, alpha_plus=(0.8,), alpha_minus=(0.4j,)), basis)
    rep = squeeze_report(st, ops)
    assert rep.squeezing_class == SqueezeClass.NONE
    assert rep.unpolarized_class == UnpolarizedClass.NOT_UNPOLARIZED


def test_thermal_signature():
    basis, ops = _setup(1, 60)
    rho = thermal_density_m1(np.log(2), basis)
    rep = squeeze_report(rho, ops)
    n = rep.n_mean
    assert rep.sigma == pytest.approx([(n + n * n / 2) / 4] * 3, abs=1e-9)
    assert classify_unpolarized(rho, ops) == UnpolarizedClass.THERMAL_LIKE


def test_report_json_roundtrip():
    basis, ops = _setup(1, 3)
    rep = squeeze_report(build_gcs(GcsSpec("max_classical", 0.3, 0.1, p=1), basis), ops)
    d = json.loads(rep.to_json())
    assert d["squeezing_class"] == rep.squeezing_class.value
    assert len(d["triples"]) == 3
    assert classify_squeezing(rep) == rep.squeezing_class


def test_vacuum_report():
    basis, ops = _setup(1, 2)
    rep = squeeze_report(QuantumState.fock(basis, (0, 0)), ops)
    assert rep.degP is None and rep.deltaP2 is None


@pytest.mark.parametrize("n", [1, 2])
def test_epr_relations_for_x_clusters(n):
    basis, ops = _setup(2, 2 * n)
    st = pmu_state_m2(0, 0, 2 * n, 0, basis)
    rep = epr_moment_relations(st, ops=ops)
    assert rep.max_residual <= 1e-10
    assert rep.moments_mode1["P0^1"] == pytest.approx(-rep.moments_mode2["P0^1"])


def test_epr_gate():
    basis, ops = _setup(2, 8)
    st = build_gcs(GcsSpec("glauber", alpha_plus=(0.5, 0), alpha_minus=(0, 0.5)), basis)
    with pytest.raises(NotPScalar):
        epr_moment_relations(st, ops=ops)
    with pytest.raises(LabelInvalid):
        epr_moment_relations(QuantumState.fock(build_basis(1, 1), (0, 0)))


def test_y_variance_p0_value():
    rep = y_gcs_variance_check(0, 0.3, build_basis(1, 40))
    assert rep.dP2 == pytest.approx(0.5 * np.sinh(0.6) ** 2, abs=1e-10)
    assert rep.dP2 == pytest.approx(rep.n_mean + rep.n_mean ** 2 / 2, abs=1e-10)
    assert rep.dP2 == pytest.approx(0.2026639, abs=1e-7)
    assert abs(rep.dP2 - 0.203131) > 4e-4


@pytest.mark.parametrize("p", [0, Fraction(1, 2), 1])
def test_y_variance_gamma_zero(p):
    rep = y_gcs_variance_check(p, 0.0, build_basis(1, 2))
    assert rep.dP2 == pytest.approx(float(p), abs=1e-12)


@pytest.mark.parametrize("p", [Fraction(1, 2), 1, Fraction(3, 2)])
def test_y_variance_printed_n_form_only_at_p0(p):
    rep = y_gcs_variance_check(p, 0.2, build_basis(1, 40))
    assert rep.residual <= 1e-7
    assert abs(rep.dP2_n_printed - rep.dP2) > 1e-3


def test_y_variance_needs_one_mode():
    with pytest.raises(LabelInvalid):
        y_gcs_variance_check(0, 0.1, build_basis(2, 2))
