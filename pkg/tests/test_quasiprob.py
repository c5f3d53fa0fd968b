import json
from fractions import Fraction
from math import comb

import numpy as np
import pytest
from scipy.special import jv

from polarqo.basis_states import thermal_density_m1
from polarqo.errors import EmptySector, ParamInvalid
from polarqo.fock import QuantumState, build_basis, expectation
from polarqo.gcs import GcsSpec, build_gcs
from polarqo.polarization import build_polarization_ops
from polarqo.quasiprob import (
    QGrid,
    char_fn_closed,
    char_fn_numeric,
    char_fn_ordered,
    highest_weight_vectors,
    q_complete,
    q_complete_at,
    q_reduced,
    q_reduced_at,
    q_reduced_closed,
    quadrature_nodes,
)

HALF = Fraction(1, 2)


def test_quadrature_weights():
    th, wt, ph, wp = quadrature_nodes(16, 32)
    assert np.all(np.diff(th) > 0)
    assert wt.sum() == pytest.approx(2.0)
    assert wp.sum() == pytest.approx(2 * np.pi)
    assert wt @ np.cos(th) ** 2 == pytest.approx(2 / 3)
    with pytest.raises(ParamInvalid):
        quadrature_nodes(0, 4)


@pytest.mark.parametrize("m, n_max", [(1, 4), (2, 3)])
def test_sector_weights_sum_to_one(m, n_max):
    basis = build_basis(m, n_max)
    rng = np.random.default_rng(2)
    v = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    rho = QuantumState.pure(basis, v, normalize=True)
    total = sum(q_reduced(rho, Fraction(k, 2), 12, 24).integral() for k in range(n_max + 1))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_highest_weight_vectors():
    basis = build_basis(2, 4)
    ops = build_polarization_ops(basis)
    hw = highest_weight_vectors(basis, HALF, ops)
    # p = 1/2 at n = 1 (t = +-1/2) and n = 3 (t = +-1/2)
    assert hw.shape[1] == 4
    assert np.allclose(hw.conj().T @ hw, np.eye(4))
    assert np.allclose(ops.Pplus.matrix @ hw, 0)
    assert np.allclose(ops.P0.matrix @ hw, 0.5 * hw)
    with pytest.raises(EmptySector):
        highest_weight_vectors(build_basis(1, 2), 2)


def test_reduced_q_peaks_at_state_direction():
    basis = build_basis(1, 3)
    spec = GcsSpec("semi_coherent", 1.0, 2.0, p=Fraction(3, 2), mu=Fraction(3, 2))
    rho = build_gcs(spec, basis)
    assert q_reduced_at(rho, Fraction(3, 2), [1.0], [2.0])[0] == pytest.approx(1.0)
    assert q_reduced_at(rho, HALF, [1.0], [2.0])[0] == pytest.approx(0.0, abs=1e-15)


def test_semi_closed_needs_binomial():
    # without C(2p, p+mu') the trig form is not the Q-function
    basis = build_basis(1, 4)
    params = dict(p=2, mu=0, theta_state=0.8, phi_state=0.3)
    rho = build_gcs(GcsSpec("semi_coherent", 0.8, 0.3, p=2, mu=0), basis)
    num = q_reduced_at(rho, 2, [1.9], [1.0])[0]
    closed = q_reduced_closed("semi", params, 1.9, 1.0)
    assert num == pytest.approx(closed, abs=1e-13)
    assert abs(num - closed / comb(4, 2)) > 1e-2


def test_glauber_closed_uses_modified_bessel():
    ap, am = (0.5 + 0.1j, -0.2j), (0.3, 0.4)
    basis = build_basis(2, 14)
    rho = build_gcs(GcsSpec("glauber", alpha_plus=ap, alpha_minus=am), basis)
    p, theta, phi = 1, 1.2, 0.5
    num = q_reduced_at(rho, p, [theta], [phi])[0]
    params = dict(p=p, alpha_plus=ap, alpha_minus=am)
    closed = q_reduced_closed("glauber_m2", params, theta, phi)
    assert num == pytest.approx(closed, abs=1e-9)
    # the same expression with the ordinary Bessel function J
    nu = 2 * p + 1
    x = abs(ap[0] * am[1] - am[0] * ap[1])
    rot = np.cos(theta / 2) * np.array(ap) + np.exp(-1j * phi) * np.sin(theta / 2) * np.array(am)
    total = sum(abs(a) ** 2 for a in ap + am)
    with_j = np.exp(-total) * nu * jv(nu, 2 * x) / x ** nu * np.sum(np.abs(rot) ** 2) ** (2 * p)
    assert abs(with_j - num) > 1e-3 * num


def test_glauber_closed_small_x_series():
    params = dict(p=HALF, alpha_plus=(0.6, 0.0), alpha_minus=(0.3, 0.0))
    near = dict(params, alpha_minus=(0.3, 1e-9))
    a = q_reduced_closed("glauber_m2", params, 0.7, 0.2)
    b = q_reduced_closed("glauber_m2", near, 0.7, 0.2)
    assert np.isfinite(a) and a == pytest.approx(b, rel=1e-8)


@pytest.mark.parametrize("beta", [0.5, np.log(2), 2.0])
def test_thermal_closed_form(beta):
    basis = build_basis(1, 80)
    rho = thermal_density_m1(beta, basis)
    for p in (0, HALF, 1, Fraction(5, 2)):
        closed = q_reduced_closed("thermal", dict(p=p, beta=beta), 0.0, 0.0)
        assert q_reduced_at(rho, p, [0.4, 2.0], [1.0, 5.0]) == pytest.approx([closed] * 2, abs=1e-12)


def test_closed_form_errors():
    with pytest.raises(ParamInvalid):
        q_reduced_closed("nope", {}, 0, 0)
    with pytest.raises(ParamInvalid):
        q_reduced_closed("thermal", dict(p=1, beta=-1), 0, 0)
    with pytest.raises(ParamInvalid):
        q_reduced_closed("semi", dict(p=1), 0, 0)


def test_complete_q_is_fidelity():
    basis = build_basis(1, 3)
    spec = GcsSpec("semi_coherent", p=Fraction(3, 2), mu=HALF)
    rho = build_gcs(spec.at(0.9, 4.0), basis)
    assert q_complete_at(rho, spec, [0.9], [4.0])[0] == pytest.approx(1.0)
    grid = q_complete(rho, spec, 8, 16)
    assert grid.values.max() <= 1 + 1e-12
    # for a fixed multiplet the resolution of identity gives weight 1
    assert 4 * grid.integral() == pytest.approx(1.0, abs=1e-12)


def test_grid_csv(tmp_path):
    basis = build_basis(1, 2)
    rho = build_gcs(GcsSpec("max_classical", 0.5, 0.5, p=1), basis)
    grid = q_reduced(rho, 1, 3, 4)
    side = grid.write_csv(tmp_path / "q.csv")
    lines = (tmp_path / "q.csv").read_text().splitlines()
    assert lines[0] == "theta,phi,q"
    assert len(lines) == 1 + 12
    meta = json.loads(side.read_text())
    assert meta["p"] == "1" and meta["n_theta"] == 3
    with pytest.raises(ValueError):
        QGrid(np.zeros(2), np.zeros(3), np.zeros((3, 2)))


# ------------------------------------------------------ characteristic functions

def test_glauber_example_on_p0_axis():
    alpha = 0.8
    basis = build_basis(1, 30)
    ops = build_polarization_ops(basis)
    st = build_gcs(GcsSpec("glauber", alpha_plus=(alpha,), alpha_minus=(0,)), basis)
    n = alpha ** 2
    for tau in (0.3, 1.0, 2.5):
        num = char_fn_numeric(st, ops, 0, tau)
        assert num == pytest.approx(np.exp(n * (np.exp(1j * tau / 2) - 1)), abs=1e-12)
        assert abs(num - np.exp(-n) * np.exp(n * np.exp(1j * tau))) > 1e-3


@pytest.mark.parametrize("axis", [0, 1, 2])
def test_char_fn_derivatives_give_moments(axis):
    basis = build_basis(1, 4)
    ops = build_polarization_ops(basis)
    st = build_gcs(GcsSpec("semi_coherent", 0.9, 1.4, p=2, mu=1), basis)
    A = ops.component(axis)
    h = 1e-4
    plus, minus, zero = (char_fn_numeric(st, ops, axis, t) for t in (h, -h, 0.0))
    assert zero == pytest.approx(1.0)
    assert (plus - minus) / (2 * h) == pytest.approx(1j * expectation(st, A).real, abs=1e-7)
    second = (plus - 2 * zero + minus) / h ** 2
    assert second.real == pytest.approx(-expectation(st, A @ A).real, abs=1e-5)


def test_ordered_product_composes():
    basis = build_basis(2, 3)
    ops = build_polarization_ops(basis)
    rng = np.random.default_rng(4)
    v = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    st = QuantumState.pure(basis, v, normalize=True)
    rho = QuantumState.mixed(basis, np.outer(st.vector, st.vector.conj()))
    a = char_fn_ordered(st, ops, [(1, 0.4), (1, 0.7)])
    assert a == pytest.approx(char_fn_numeric(st, ops, 1, 1.1), abs=1e-12)
    b = char_fn_ordered(st, ops, [(0, 0.3), (2, 1.2)])
    assert b == pytest.approx(char_fn_ordered(rho, ops, [(0, 0.3), (2, 1.2)]), abs=1e-12)


def test_char_fn_errors():
    with pytest.raises(ParamInvalid):
        char_fn_closed("semi", dict(p=1, mu=0), 3, 0.1)
    with pytest.raises(ParamInvalid):
        char_fn_closed("nope", {}, 0, 0.1)
