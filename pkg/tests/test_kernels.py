import numpy as np
import pytest

from polarqo import kernels
from polarqo.fock import build_basis
from polarqo.gcs import Rotator, su2_displacement
from polarqo.polarization import build_polarization_ops

BACKENDS = kernels.available()


def _random_vec(basis, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    return v / np.linalg.norm(v)


def test_backend_choice():
    assert kernels.BACKEND in BACKENDS
    assert "python" in BACKENDS
    with pytest.raises(ValueError):
        kernels.get("fortran")


def test_compiled_extension_is_built():
    # the package ships a compiled core; the numpy fallback only covers missing builds
    assert "compiled" in BACKENDS


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("m, n_max", [(1, 5), (2, 3)])
def test_rotator_matches_dense_displacement(backend, m, n_max):
    basis = build_basis(m, n_max)
    ops = build_polarization_ops(basis)
    psi0 = _random_vec(basis, 3)
    rot = Rotator(basis, psi0, backend=backend)
    for theta, phi in [(0.0, 0.0), (0.4, 2.2), (2.8, 5.9), (np.pi, 1.0)]:
        ref = su2_displacement(theta, phi, ops).apply(psi0)
        assert np.max(np.abs(rot.at(theta, phi) - ref)) <= 1e-12


@pytest.mark.skipif("compiled" not in BACKENDS, reason="compiled kernels not built")
@pytest.mark.parametrize("m, n_max", [(1, 8), (2, 4)])
def test_backends_agree(m, n_max):
    basis = build_basis(m, n_max)
    psi0 = _random_vec(basis, 11)
    rng = np.random.default_rng(0)
    th, ph = rng.uniform(0, np.pi, 300), rng.uniform(0, 2 * np.pi, 300)
    a = Rotator(basis, psi0, backend="compiled")
    b = Rotator(basis, psi0, backend="python")
    assert np.max(np.abs(a.batch(th, ph) - b.batch(th, ph))) <= 1e-13
    loop_t = 1.0 + 0.3 * np.cos(np.linspace(0, 2 * np.pi, 5000))
    loop_p = np.linspace(0, 2 * np.pi, 5000)
    ga, ca, ma = a.loop_phase(loop_t, loop_p)
    gb, cb, mb = b.loop_phase(loop_t, loop_p)
    assert ga == pytest.approx(gb, abs=1e-10)
    assert ca == pytest.approx(cb, abs=1e-12)
    assert ma == pytest.approx(mb, abs=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_loop_phase_chunking_is_seamless(backend):
    # more samples than one chunk of the numpy kernel
    basis = build_basis(1, 2)
    psi0 = np.zeros(basis.dim, complex)
    psi0[basis.index[(1, 0)]] = 1
    rot = Rotator(basis, psi0, backend=backend)
    K = 5000
    phis = np.linspace(0, 2 * np.pi, K + 1)
    total, closure, min_ov = rot.loop_phase(np.full(K + 1, np.pi / 2), phis)
    assert total + np.angle(closure) == pytest.approx(-np.pi, abs=1e-5)
    assert min_ov > 0.99


@pytest.mark.parametrize("backend", BACKENDS)
def test_single_mode_rotation_leaves_other_mode(backend):
    basis = build_basis(2, 3)
    psi0 = np.zeros(basis.dim, complex)
    psi0[basis.index[(0, 0, 1, 0)]] = 1
    out = Rotator(basis, psi0, mode=1, backend=backend).at(1.3, 0.4)
    assert np.allclose(out, psi0)
