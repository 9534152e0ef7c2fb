import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from htype.constants import sphere_volume
from htype.errors import PreconditionError
from htype.extremals import (CYLINDRICAL, ConformalParams, bump, cayley, cayley_batch, cayley_jacobian,
                             conformal_orbit, extremal_U, f_epsilon, f_epsilon_constant, field_product,
                             field_sum, omega, omega_all, omega_fd, phi, sphere_coordinate_mean,
                             translate_field)
from htype.functionals import critical_norm_power
from htype.group import GroupPoint, hnorm, mul
from htype.integrate import IntegrationSpec, integrate_G

from conftest import random_point, random_rows


def test_extremal_values(group):
    G = group
    for s in (0.25, 0.5, 0.75):
        U = extremal_U(G, s)
        assert U(G.identity()) == 1.0
        z = np.zeros(2 * G.n)
        z[0] = 2.0
        assert U(GroupPoint(z, np.zeros(G.m))) == pytest.approx(2 ** (-(G.Q - 2 * s) / 2), rel=1e-14)
        assert U.symmetry == CYLINDRICAL
        assert U.decay == pytest.approx(G.Q - 2 * s)


def test_extremal_decay_matches_metadata(group):
    G, s = group, 0.5
    U = extremal_U(G, s)
    rng = np.random.default_rng(1)
    z, w = random_rows(G, rng, 20)
    mu = 1e3
    lhs = U.eval(mu * z, mu * mu * w) * mu ** U.decay
    assert np.allclose(lhs, hnorm(z, w) ** (-U.decay), rtol=1e-4)


def test_extremal_range():
    from htype.group import GroupSpec
    G = GroupSpec.build(1, 1)
    extremal_U(G, 1.5)
    with pytest.raises(PreconditionError):
        extremal_U(G, 2.0)
    with pytest.raises(PreconditionError):
        phi(G, 2.5, 1.0)
    with pytest.raises(PreconditionError):
        phi(G, 0.5, 0.0)


def test_phi_examples(group):
    G = group
    rng = np.random.default_rng(2)
    z, w = random_rows(G, rng, 100)
    for s, rho in [(0.3, 1.0), (0.5, 2.5), (-0.4, 0.7)]:
        f = phi(G, s, rho)
        assert f(G.identity()) == pytest.approx(rho ** (-(G.Q + 2 * s) / 2), rel=1e-14)
        r = math.sqrt(rho)
        assert np.allclose(f.eval(r * z, rho * w), rho ** (-(G.Q + 2 * s) / 2) * phi(G, s, 1.0).eval(z, w),
                           rtol=1e-12)
    assert np.allclose(phi(G, -0.5, 1.0).eval(z, w), extremal_U(G, 0.5).eval(z, w), rtol=1e-15)


def test_gradient_matches_finite_differences(heis):
    G = heis
    f = phi(G, 0.3, 1.7)
    rng = np.random.default_rng(3)
    z, w = random_rows(G, rng, 10)
    gz, gw = f.grad(z, w)
    h = 1e-6
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        fd = (f.eval(z + e, w) - f.eval(z - e, w)) / (2 * h)
        assert np.allclose(gz[:, i], fd, rtol=1e-6, atol=1e-12)
    fd = (f.eval(z, w + h) - f.eval(z, w - h)) / (2 * h)
    assert np.allclose(gw[:, 0], fd, rtol=1e-6, atol=1e-12)


def test_jacobian_is_power_of_extremal(group):
    G = group
    rng = np.random.default_rng(4)
    z, w = random_rows(G, rng, 100)
    J = cayley_jacobian(G)
    assert J(G.identity()) == 1.0
    for s in (0.25, 0.5, 0.75):
        U = extremal_U(G, s)
        assert np.allclose(J.eval(z, w), U.eval(z, w) ** (2 * G.Q / (G.Q - 2 * s)), rtol=1e-13)


def test_jacobian_integrates_to_sphere_volume(heis):
    est = integrate_G(heis, cayley_jacobian(heis), IntegrationSpec("monte-carlo", 200_000, seed=1))
    assert abs(est.value - math.pi ** 2) <= 3 * est.error
    assert est.error / est.value < 5e-3


def test_cayley_origin_and_unit_norm(group):
    G = group
    assert np.array_equal(cayley(G, G.identity()), np.r_[np.zeros(G.dim), -1.0])
    rng = np.random.default_rng(5)
    z, w = random_rows(G, rng, 1000, scale=2.0)
    c = cayley_batch(G, z, w)
    assert c.shape == (1000, G.dim + 1)
    assert np.max(np.abs(np.linalg.norm(c, axis=1) - 1)) <= 1e-13
    p = random_point(G, rng)
    assert np.allclose(cayley(G, p), cayley_batch(G, p.z, p.w)[0], rtol=0, atol=1e-15)


def test_cayley_horizontal_axis(group):
    G = group
    rng = np.random.default_rng(6)
    z = rng.normal(size=(50, 2 * G.n))
    c = cayley_batch(G, z, np.zeros((50, G.m)))
    assert np.all(c[:, 2 * G.n:2 * G.n + G.m] == 0)


def test_cayley_injective_on_sample(heis):
    rng = np.random.default_rng(7)
    z, w = random_rows(heis, rng, 10_000, scale=3.0)
    c = cayley_batch(heis, z, w)
    order = np.lexsort(c.T)
    gaps = np.linalg.norm(np.diff(c[order], axis=0), axis=1)
    assert np.min(gaps) > 1e-9


def test_cayley_jacobian_pushes_forward_to_uniform(heis):
    # Under J dxi the Cayley image is uniform on S^3, so <x_j^2> = 1/4.
    rng = np.random.default_rng(8)
    from htype._sampling import sample_bubble
    z, w = sample_bubble(1, 1, heis.Q / 2, rng, 200_000)
    c = cayley_batch(heis, z, w)
    assert np.allclose(np.mean(c, axis=0), 0, atol=0.006)
    assert np.allclose(np.mean(c ** 2, axis=0), 0.25, atol=0.006)


def test_omega_at_origin(group):
    G = group
    om = omega_all(G, np.zeros((1, 2 * G.n)), np.zeros((1, G.m)))[0]
    assert np.all(om[:-1] == 0)
    assert om[-1] == pytest.approx(1.0, abs=1e-15)
    assert omega(G, 0.5, G.dim + 1)(G.identity()) == pytest.approx(1.0)


def test_omega_sum_of_squares(group):
    G = group
    rng = np.random.default_rng(9)
    z, w = random_rows(G, rng, 1000, scale=3.0)
    om = omega_all(G, z, w)
    assert om.shape == (1000, G.dim + 1)
    assert np.max(np.abs(np.sum(om ** 2, axis=1) - 1)) <= 1e-10


def test_omega_independent_of_s(group):
    G = group
    rng = np.random.default_rng(10)
    z, w = random_rows(G, rng, 200)
    for j in range(1, G.dim + 2):
        a = omega(G, 0.3, j).eval(z, w)
        b = omega(G, 0.7, j).eval(z, w)
        assert np.max(np.abs(a - b)) <= 1e-10


@pytest.mark.parametrize("s", [0.3, 0.7])
def test_omega_matches_orbit_derivative(group, s):
    G = group
    rng = np.random.default_rng(11)
    z, w = random_rows(G, rng, 30)
    for j in range(1, G.dim + 2):
        an = omega(G, s, j).eval(z, w)
        fd = omega_fd(G, s, j, z, w)
        assert np.allclose(an, fd, atol=1e-6)


def test_omega_is_cayley_up_to_sign(group):
    G = group
    rng = np.random.default_rng(12)
    z, w = random_rows(G, rng, 100)
    c = cayley_batch(G, z, w)
    om = omega_all(G, z, w)
    assert np.allclose(om[:, :-1], c[:, :-1], atol=1e-14)
    assert np.allclose(om[:, -1], -c[:, -1], atol=1e-14)


def test_omega_index_errors(heis):
    with pytest.raises(PreconditionError):
        omega(heis, 0.5, 0)
    with pytest.raises(PreconditionError):
        omega(heis, 0.5, heis.dim + 2)
    with pytest.raises(PreconditionError):
        omega(heis, 1.0, 1)


@pytest.mark.parametrize("j", [1, 2, 3, 4])
def test_omega_moment_zero(heis, j):
    f = field_product(omega(heis, 0.5, j), cayley_jacobian(heis))
    est = integrate_G(heis, f, IntegrationSpec("monte-carlo", 400_000, seed=4))
    assert abs(est.value) <= 2 * est.error


def test_conformal_orbit_identity(group):
    G = group
    rng = np.random.default_rng(13)
    z, w = random_rows(G, rng, 50)
    orb = conformal_orbit(G, ConformalParams(1.0, G.identity(), 0.5))
    assert np.allclose(orb.eval(z, w), extremal_U(G, 0.5).eval(z, w), rtol=1e-15)
    assert orb.symmetry == CYLINDRICAL


def test_conformal_orbit_definition(heis):
    G = heis
    rng = np.random.default_rng(14)
    eta = random_point(G, rng)
    mu, s = 1.7, 0.4
    orb = conformal_orbit(G, ConformalParams(mu, eta, s))
    z, w = random_rows(G, rng, 20)
    tz, tw = mul(G, -eta.z[None], -eta.w[None], z, w)
    want = mu ** ((G.Q - 2 * s) / 2) * extremal_U(G, s).eval(mu * tz, mu * mu * tw)
    assert np.allclose(orb.eval(z, w), want, rtol=1e-14)
    with pytest.raises(PreconditionError):
        ConformalParams(0.0, eta, s)


def test_conformal_orbit_norm_constant(heis):
    G, s = heis, 0.5
    rng = np.random.default_rng(15)
    spec = IntegrationSpec("monte-carlo", 100_000, seed=2)
    base = critical_norm_power(G, extremal_U(G, s), s, spec)
    assert base.value == pytest.approx(sphere_volume(1, 1), rel=5e-3)
    for _ in range(10):
        p = ConformalParams(float(np.exp(rng.uniform(-0.7, 0.7))), random_point(G, rng, 0.7), s)
        est = critical_norm_power(G, conformal_orbit(G, p), s, spec)
        assert abs(est.value - base.value) <= 3 * math.hypot(est.error, base.error)


def test_translate_field(heis):
    G = heis
    rng = np.random.default_rng(16)
    h = random_point(G, rng)
    U = extremal_U(G, 0.5)
    f = translate_field(G, U, h)
    p = random_point(G, rng)
    hp = mul(G, h.z[None], h.w[None], p.z[None], p.w[None])
    assert f(p) == pytest.approx(U.eval(*hp)[0], rel=1e-14)


def test_f_epsilon_constant_limits(heis):
    assert f_epsilon_constant(heis, 1e-4) == pytest.approx(1.0, abs=1e-7)
    vals = [f_epsilon_constant(heis, e) for e in (0.4, 0.2, 0.1, 0.05, 0.01)]
    assert np.all(np.diff(np.abs(np.array(vals) - 1)) < 0)
    for eps in (0.0, 0.5, -0.1):
        with pytest.raises(PreconditionError):
            f_epsilon(heis, eps)


def test_f_epsilon_normalisation(group):
    G = group
    eps = 0.2
    f = f_epsilon(G, eps)
    f2J = field_product(field_product(f, f), cayley_jacobian(G))
    f2J = type(f2J)(f2J.eval, f2J.symmetry, 2 * G.Q, f2J.name)
    est = integrate_G(G, f2J, IntegrationSpec("monte-carlo", 200_000, seed=3))
    V = sphere_volume(G.n, G.m)
    assert abs(est.value - V) <= 3 * est.error
    rng = np.random.default_rng(17)
    z, w = random_rows(G, rng, 10)
    C = f_epsilon_constant(G, eps)
    want = C * (math.sqrt(1 - eps ** 2) + eps * omega_all(G, z, w)[:, 0])
    assert np.allclose(f.eval(z, w), want, rtol=1e-15)


def test_sphere_coordinate_mean():
    for D in (2, 3, 5, 8):
        assert sphere_coordinate_mean(lambda x: x * x, D) == pytest.approx(1 / (D + 1), rel=1e-10)
        assert sphere_coordinate_mean(lambda x: 1.0, D) == pytest.approx(1.0, rel=1e-12)
        assert abs(sphere_coordinate_mean(lambda x: x, D)) < 1e-14


def test_bump_support(heis):
    G = heis
    rng = np.random.default_rng(18)
    c = random_point(G, rng)
    b = bump(G, c, radius=0.8, amp=2.0)
    assert b(c) == pytest.approx(2.0)
    z, w = random_rows(G, rng, 5000, scale=2.0)
    v = b.eval(z, w)
    r = hnorm(*mul(G, -c.z[None], -c.w[None], z, w))
    assert np.all(v[r >= 0.8] == 0)
    assert np.all(v[r < 0.75] > 0)
    assert b.decay == math.inf


def test_field_combinations(heis):
    G = heis
    U, J = extremal_U(G, 0.5), cayley_jacobian(G)
    rng = np.random.default_rng(19)
    z, w = random_rows(G, rng, 10)
    s = field_sum([U, J], [2.0, -1.0])
    assert np.allclose(s.eval(z, w), 2 * U.eval(z, w) - J.eval(z, w))
    assert s.decay == U.decay and s.symmetry == CYLINDRICAL
    p = field_product(U, J)
    assert p.decay == U.decay + J.decay
    assert np.allclose(U.scaled(3.0).eval(z, w), 3 * U.eval(z, w))


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_cayley_unit_norm_property(x, y, t):
    from htype.group import GroupSpec
    G = GroupSpec.build(1, 1)
    c = cayley(G, GroupPoint(np.array([x, y]), np.array([t])))
    assert abs(np.linalg.norm(c) - 1) <= 1e-13
