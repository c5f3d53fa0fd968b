from fractions import Fraction

import numpy as np
import pytest

from polarqo.basis_states import (
    half_integer,
    phase_randomized_density,
    pmu_labels,
    pmu_state_m1,
    pmu_state_m2,
    thermal_density_m1,
)
from polarqo.errors import CutoffExceeded, LabelInvalid, TailTooLarge
from polarqo.fock import QuantumState, build_basis, creation_op, expectation
from polarqo.polarization import BiphotonOps, build_polarization_ops, variance_profile


@pytest.mark.parametrize("text, value", [("3/2", Fraction(3, 2)), (0.5, Fraction(1, 2)), (2, 2)])
def test_half_integer_parsing(text, value):
    assert half_integer(text) == value


@pytest.mark.parametrize("bad", ["1/3", 0.3, "x"])
def test_half_integer_rejects(bad):
    with pytest.raises(LabelInvalid):
        half_integer(bad)


def test_single_plus_photon():
    basis = build_basis(1, 2)
    v = pmu_state_m1(Fraction(1, 2), Fraction(1, 2), basis).vector
    assert np.allclose(v, creation_op(basis, 1, "+").apply(QuantumState.fock(basis, (0, 0)).vector))


def test_p1_mu0_is_twin_photon():
    basis = build_basis(1, 2)
    st = pmu_state_m1(1, 0, basis)
    assert np.allclose(st.vector, QuantumState.fock(basis, (1, 1)).vector)
    ops = build_polarization_ops(basis)
    assert expectation(st, ops.casimir).real == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("args", [(1, 2), ("1/2", 0), (-1, 0)])
def test_invalid_labels(args):
    with pytest.raises(LabelInvalid):
        pmu_state_m1(*args, build_basis(1, 4))


def test_cutoff():
    with pytest.raises(CutoffExceeded):
        pmu_state_m1(2, 0, build_basis(1, 3))
    with pytest.raises(CutoffExceeded):
        pmu_state_m2(1, 0, 4, 0, build_basis(2, 3))


def test_m2_scalar_state_is_normalized_xplus():
    basis = build_basis(2, 2)
    x = BiphotonOps(basis).Xplus(1, 2).apply(QuantumState.fock(basis, (0,) * 4).vector)
    assert np.linalg.norm(x) == pytest.approx(np.sqrt(2))
    assert np.allclose(pmu_state_m2(0, 0, 2, 0, basis).vector, x / np.sqrt(2))


def test_m2_labels_are_orthogonal():
    basis = build_basis(2, 2)
    a = pmu_state_m2(0, 0, 2, 0, basis).vector
    b = pmu_state_m2(1, 0, 2, 0, basis).vector
    assert abs(np.vdot(a, b)) <= 1e-15


@pytest.mark.parametrize("n", range(7))
def test_m2_label_count_matches_block(n):
    basis = build_basis(2, 6)
    blk = basis.block(n)
    assert len(pmu_labels(2, n)) == blk.stop - blk.start


def test_thermal_examples():
    cold = thermal_density_m1(50.0, build_basis(1, 4))
    assert abs(cold.density()[0, 0] - 1) <= 1e-20
    basis = build_basis(1, 60)
    rho = thermal_density_m1(np.log(2), basis)
    ops = build_polarization_ops(basis)
    assert expectation(rho, ops.N).real == pytest.approx(2.0, abs=1e-10)
    for A in (ops.P0, ops.P1, ops.P2):
        assert abs(expectation(rho, A)) <= 1e-12
    assert np.max(np.abs(ops.P0.matrix @ rho.density() - rho.density() @ ops.P0.matrix)) <= 1e-12


def test_thermal_tail_too_large():
    with pytest.raises(TailTooLarge):
        thermal_density_m1(0.1, build_basis(1, 10))


@pytest.mark.parametrize("alpha", [0.4, 0.7 * np.exp(1.3j)])
def test_phase_randomized_moments(alpha):
    basis = build_basis(1, 30)
    ops = build_polarization_ops(basis)
    rho = phase_randomized_density(alpha, basis)
    for A in (ops.P0, ops.P1, ops.P2):
        assert abs(expectation(rho, A)) <= 1e-12
    prof = variance_profile(rho, ops)
    n = 2 * abs(alpha) ** 2
    assert prof.n_mean == pytest.approx(n, abs=1e-10)
    assert prof.sigma[0] == pytest.approx(n / 4, abs=1e-10)
    assert prof.sigma[1] == pytest.approx((n + n * n / 2) / 4, abs=1e-10)
    assert prof.sigma[2] == pytest.approx((n + n * n / 2) / 4, abs=1e-10)
    assert np.max(np.abs(ops.P0.matrix @ rho.density() - rho.density() @ ops.P0.matrix)) <= 1e-12


def test_phase_randomized_vacuum():
    rho = phase_randomized_density(0, build_basis(1, 3))
    assert rho.density()[0, 0] == pytest.approx(1.0)
