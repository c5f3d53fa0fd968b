from fractions import Fraction

import numpy as np
import pytest

from polarqo.config import Tolerances
from polarqo.errors import FamilyUnsupported, NoConvergence, PathInvalid
from polarqo.fock import build_basis
from polarqo.gcs import GcsOrbit, GcsSpec
from polarqo.geomphase import (
    SpherePath,
    geometric_phase_closed,
    geometric_phase_numeric,
    parse_loop,
    principal_value,
    solid_angle,
)

HALF = Fraction(1, 2)
SEMI_HALF = GcsSpec("semi_coherent", p=HALF, mu=HALF)


@pytest.fixture(scope="module")
def b1():
    return build_basis(1, 3)


def test_equator_half_photon(b1):
    res = geometric_phase_numeric(SEMI_HALF, SpherePath.circle(np.pi / 2), b1)
    assert res.gamma_total == pytest.approx(-np.pi, abs=1e-6)
    assert res.converged


def test_winding_count(b1):
    spec = GcsSpec("semi_coherent", p=1, mu=1)
    res = geometric_phase_numeric(spec, SpherePath.circle(np.pi / 2), b1)
    assert res.gamma_total == pytest.approx(-2 * np.pi, abs=1e-6)
    assert res.gamma_principal == pytest.approx(0.0, abs=1e-6)
    assert res.winding == -1


@pytest.mark.parametrize("g, pv, w", [(-np.pi, np.pi, -1), (np.pi, np.pi, 0), (7.0, 7.0 - 2 * np.pi, 1),
                                      (0.0, 0.0, 0)])
def test_principal_value(g, pv, w):
    val, wind = principal_value(g)
    assert val == pytest.approx(pv) and wind == w
    assert -np.pi < val <= np.pi


def test_mu_zero_has_no_phase(b1):
    spec = GcsSpec("semi_coherent", p=1, mu=0)
    assert abs(geometric_phase_numeric(spec, SpherePath.circle(1.0), b1).gamma_total) <= 1e-6


@pytest.mark.parametrize("theta0", [0.3, 1.0, 2.5])
def test_solid_angle_of_circles(theta0):
    path = SpherePath.circle(theta0, K=512)
    assert solid_angle(path, refine=True) == pytest.approx(2 * np.pi * (1 - np.cos(theta0)), abs=1e-9)


def test_lune_solid_angle_and_phase(b1):
    path = SpherePath.lune(0.4, 1.5)
    assert abs(solid_angle(path, refine=True)) == pytest.approx(2 * 1.1, abs=1e-9)
    res = geometric_phase_numeric(SEMI_HALF, path, b1)
    assert res.gamma_total == pytest.approx(geometric_phase_closed(SEMI_HALF, path), abs=1e-6)


def test_convergence_is_second_order(b1):
    orbit = GcsOrbit(SEMI_HALF, b1)
    path = SpherePath.circle(1.2)
    exact = -2 * np.pi * np.sin(0.6) ** 2
    errs = []
    for K in (64, 128, 256):
        p = path.resample(K)
        total, closure, _ = orbit.rotator.loop_phase(p.theta, p.phi)
        errs.append(abs(total + np.angle(closure) - exact))
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.05)


def test_parametrization_invariance(b1):
    path = SpherePath.great(0.6, 0.9)
    base = geometric_phase_numeric(SEMI_HALF, path, b1).gamma_total
    rev = geometric_phase_numeric(SEMI_HALF, path.reversed(), b1).gamma_total
    shifted = geometric_phase_numeric(SEMI_HALF, path.shifted(0.37), b1).gamma_total
    warped = geometric_phase_numeric(
        SEMI_HALF, path.resample(256, lambda s: s + 0.05 * np.sin(2 * np.pi * s)), b1).gamma_total
    assert rev == pytest.approx(-base, abs=1e-6)
    assert shifted == pytest.approx(base, abs=1e-6)
    assert warped == pytest.approx(base, abs=1e-6)


def test_glauber_sign_of_p0_term():
    # a circular coherent state on a latitude circle picks up -<P0> times the solid angle
    basis = build_basis(1, 30)
    spec = GcsSpec("glauber", alpha_plus=(1.0,), alpha_minus=(0,))
    path = SpherePath.circle(1.0)
    res = geometric_phase_numeric(spec, path, basis)
    omega = 2 * np.pi * (1 - np.cos(1.0))
    assert res.gamma_total == pytest.approx(-0.5 * omega, abs=1e-5)
    assert geometric_phase_closed(spec, path) == pytest.approx(-0.5 * omega, abs=1e-9)


def test_phases_add_over_product_modes():
    basis = build_basis(2, 3)
    path = SpherePath.circle(0.8)
    both = GcsSpec("fock_rotated", occupations=(2, 0, 1, 0))
    one = GcsSpec("fock_rotated", occupations=(2, 0, 0, 0))
    two = GcsSpec("fock_rotated", occupations=(0, 0, 1, 0))
    g = [geometric_phase_numeric(s, path, basis).gamma_total for s in (both, one, two)]
    assert g[0] == pytest.approx(g[1] + g[2], abs=1e-9)


def test_no_convergence():
    tight = Tolerances(k_cap=128)
    with pytest.raises(NoConvergence):
        geometric_phase_numeric(SEMI_HALF, SpherePath.circle(1.0, K=64), build_basis(1, 1), tol=tight)
    res = geometric_phase_numeric(SEMI_HALF, SpherePath.circle(1.0, K=64), build_basis(1, 1),
                                  tol=tight, strict=False)
    assert not res.converged


def test_closed_form_unsupported():
    with pytest.raises(FamilyUnsupported):
        geometric_phase_closed(GcsSpec("product", occupations=(1, 1), mode_angles=((0.5, 0), (0, 0))),
                               SpherePath.circle(1.0))


@pytest.mark.parametrize("make", [
    lambda: SpherePath(np.zeros(4), np.linspace(0, 2 * np.pi, 4), "custom", "x"),
    lambda: SpherePath.circle(4.0),
    lambda: SpherePath.from_samples(np.full(20, 1.0), np.linspace(0, np.pi, 20)),
    lambda: SpherePath.great(np.pi / 2),
])
def test_invalid_paths(make):
    with pytest.raises(PathInvalid):
        make()


def test_parse_loop_and_csv(tmp_path):
    assert parse_loop("circle:theta=1.0").label.startswith("circle")
    assert parse_loop("lune:phi1=0.1,phi2=0.9").kind == "great_circle"
    assert parse_loop("great:tilt=0.4,azimuth=1").K == 256
    t = np.linspace(0, 2 * np.pi, 41)
    rows = "\n".join(f"{1.0 + 0.2 * np.sin(s)},{s}" for s in t)
    f = tmp_path / "loop.csv"
    f.write_text("theta,phi\n" + rows + "\n")
    path = parse_loop(str(f))
    assert path.K == 40
    assert SpherePath.from_csv(f).K == 40
    with pytest.raises(PathInvalid):
        parse_loop("square:side=1")
