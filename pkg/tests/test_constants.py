import itertools
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from htype import constants as C
from htype.errors import PreconditionError

mp.mp.dps = 40


def Q(n, m):
    return 2 * n + 2 * m


# High-precision oracles written straight from the closed forms.
def mp_S(n, m, s):
    q = Q(n, m)
    s = mp.mpf(s)
    return (mp.power(4, s * (q + 2 * n) / q) * mp.power(mp.pi, s * (2 * n + m) / q)
            * mp.gamma((n + 1 + s) / 2) * mp.gamma((n + m + s) / 2)
            / (mp.gamma((n + 1 - s) / 2) * mp.gamma((n + m - s) / 2))
            * mp.power(mp.gamma(n + mp.mpf(m) / 2) / mp.gamma(2 * n + m), 2 * s / q))


def mp_N(n, m, s):
    s = mp.mpf(s)
    return (mp.power(4, s) * mp.gamma((n + 1 + s) / 2) * mp.gamma((n + m + s) / 2)
            / (mp.gamma((n + 1 - s) / 2) * mp.gamma((n + m - s) / 2)))


def mp_c(n, m, s):
    s = mp.mpf(s)
    return (mp.gamma((n + 1 - s) / 2) * mp.gamma((n + m - s) / 2)
            / (mp.power(2, n + 1 + s) * mp.power(mp.pi, n + mp.mpf(m + 1) / 2) * mp.gamma(s)))


def mp_a(n, m, s):
    s = mp.mpf(s)
    return (mp.power(2, -n - 2 + s) * mp.power(mp.pi, -n - mp.mpf(m + 1) / 2)
            * mp.gamma((n + 1 + s) / 2) * mp.gamma((n + m + s) / 2) / abs(mp.gamma(-s)))


def mp_V(n, m):
    return mp.power(4, n) * mp.power(mp.pi, n + mp.mpf(m) / 2) * mp.gamma(n + mp.mpf(m) / 2) / mp.gamma(2 * n + m)


def mp_logsob(n, m):
    return (mp.power(2, n + 3) * mp.power(mp.pi, n + mp.mpf(m + 1) / 2)
            / (Q(n, m) * mp.gamma(mp.mpf(n + 1) / 2) * mp.gamma(mp.mpf(n + m) / 2)))


def mp_C1(n, m, s):
    s = mp.mpf(s)
    return (mp.power(2, -2 * n - 2 * s) * mp.power(mp.pi, -n - mp.mpf(m) / 2)
            * mp.gamma(n + s) * mp.gamma((n + m + s) / 2) / (mp.gamma(s) * mp.gamma((n + s) / 2)))


GRID = [(n, m, s) for (n, m) in [(1, 1), (2, 1), (2, 3), (4, 7), (3, 2)] for s in (0.1, 0.25, 0.5, 0.75, 0.9)]


@pytest.mark.parametrize("n,m,s", GRID)
def test_constants_match_high_precision_oracles(n, m, s):
    for got, want in [(C.sharp_sobolev(n, m, s), mp_S(n, m, s)),
                      (C.hardy_const(n, m, s), mp_N(n, m, s)),
                      (C.green_const(n, m, s), mp_c(n, m, s)),
                      (C.groundstate_const(n, m, s), mp_a(n, m, s)),
                      (C.sphere_volume(n, m), mp_V(n, m)),
                      (C.poisson_norm(n, m, s), mp_C1(n, m, s))]:
        assert got == pytest.approx(float(want), rel=1e-12)


def test_worked_values_at_heisenberg_half():
    assert C.sharp_sobolev(1, 1, 0.5) == pytest.approx(1.93945, abs=1e-5)
    N = 2 * (math.gamma(1.25) / math.gamma(0.75)) ** 2
    assert C.hardy_const(1, 1, 0.5) == pytest.approx(N, rel=1e-14)
    assert C.hardy_const(1, 1, 0.5) == pytest.approx(1.09422, abs=1e-5)
    assert C.green_const(1, 1, 0.5) == pytest.approx(0.01517, abs=1e-5)
    a = math.gamma(1.25) ** 2 / (2 ** 2.5 * math.pi ** 2 * 2 * math.sqrt(math.pi))
    assert C.groundstate_const(1, 1, 0.5) == pytest.approx(a, rel=1e-13)
    assert C.sphere_volume(1, 1) == pytest.approx(math.pi ** 2, rel=1e-12)
    # 2^4 pi^2 / (4 Gamma(1) Gamma(1))
    assert C.logsobolev_const(1, 1) == pytest.approx(4 * math.pi ** 2, rel=1e-13)
    assert C.hls_const(1, 1, 0.5) == pytest.approx(1 / (1.93945 * 0.015174), rel=1e-4)


@pytest.mark.parametrize("n,m", [(1, 1), (2, 1), (2, 3), (4, 7)])
def test_logsobolev_constant(n, m):
    assert C.logsobolev_const(n, m) == pytest.approx(float(mp_logsob(n, m)), rel=1e-12)


def test_identity_volume_power_on_grid():
    for n, m, s in itertools.product([1, 2, 4], [1, 3, 7], [0.2, 0.5, 0.8]):
        S, N, V = C.sharp_sobolev(n, m, s), C.hardy_const(n, m, s), C.sphere_volume(n, m)
        assert abs(S - N * V ** (2 * s / Q(n, m))) / S <= 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 6), st.integers(1, 8), st.floats(0.01, 0.99))
def test_identity_volume_power_random(n, m, s):
    S, N, V = C.sharp_sobolev(n, m, s), C.hardy_const(n, m, s), C.sphere_volume(n, m)
    assert abs(S - N * V ** (2 * s / Q(n, m))) / S <= 1e-12


def test_sphere_volume_product_integral():
    # 4^n (int_{R^2n} (1+|z|^2)^{-(Q-m)}) (int_{R^m} (1+|w|^2)^{-Q/2})
    for n, m in [(1, 1), (2, 1), (2, 3)]:
        q = Q(n, m)
        rz = mp.quad(lambda r: r ** (2 * n - 1) * (1 + r * r) ** (-(q - m)), [0, mp.inf])
        rw = mp.quad(lambda r: r ** (m - 1) * (1 + r * r) ** (-mp.mpf(q) / 2), [0, mp.inf])
        area = lambda d: 2 * mp.pi ** (mp.mpf(d) / 2) / mp.gamma(mp.mpf(d) / 2)
        direct = 4 ** n * area(2 * n) * rz * area(m) * rw
        assert C.sphere_volume(n, m) == pytest.approx(float(direct), rel=1e-12)


def test_small_s_limits():
    for n, m in [(1, 1), (2, 3)]:
        assert C.sharp_sobolev(n, m, 1e-9) == pytest.approx(1.0, abs=1e-7)
        assert C.hardy_const(n, m, 1e-9) == pytest.approx(1.0, abs=1e-7)
        assert C.green_const(n, m, 1e-6) / 1e-6 == pytest.approx(
            C.green_const(n, m, 2e-6) / 2e-6, rel=1e-5)


@pytest.mark.parametrize("n,m", [(1, 1), (2, 1), (3, 4)])
def test_limit_chain(n, m):
    lim = math.gamma((n + 1) / 2) * math.gamma((n + m) / 2) / (2 ** (n + 1) * math.pi ** (n + (m + 1) / 2))
    assert C.logsobolev_limit_const(n, m) == pytest.approx(lim, rel=1e-13)
    for s in (1e-4, 1e-3):
        val = C.sharp_sobolev(n, m, s) * C.green_const(n, m, s) / s
        assert val == pytest.approx(lim, rel=1e-3 if s == 1e-4 else 1e-2)
    # the log-Sobolev constant is 4 / (Q lim)
    assert C.logsobolev_const(n, m) == pytest.approx(4 / (Q(n, m) * lim), rel=1e-13)


def test_groundstate_vanishes_at_one():
    a1, a2 = C.groundstate_const(1, 1, 1 - 1e-4), C.groundstate_const(1, 1, 1 - 2e-4)
    assert a2 / a1 == pytest.approx(2.0, rel=1e-3)


def test_hardy_constant_shape_in_s():
    # At (1,1) N = 4^s Gamma(1 + s/2)^2 / Gamma(1 - s/2)^2 equals 1 at both ends
    # of (0, 1) and exceeds 1 in between, rising then falling.
    s = np.linspace(0.01, 0.99, 99)
    vals = np.array([C.hardy_const(1, 1, x) for x in s])
    assert np.all(vals > 1)
    assert C.hardy_const(1, 1, 1 - 1e-12) == pytest.approx(1.0, abs=1e-10)
    d = np.diff(vals)
    k = int(np.argmax(d < 0))
    assert k > 0 and np.all(d[:k] > 0) and np.all(d[k:] < 0)
    # larger groups are increasing on the whole range
    vals = [C.hardy_const(2, 3, x) for x in s]
    assert np.all(np.diff(vals) > 0)


def test_trace_factor():
    assert C.trace_prefactor(0.5) == pytest.approx(1.0, rel=1e-15)
    assert C.trace_factor(1, 1, 0.5) == pytest.approx(C.sharp_sobolev(1, 1, 0.5), rel=1e-15)
    pref = mp.power(2, 0.5) * mp.gamma(0.75) / mp.gamma(0.25)
    assert C.trace_factor(1, 1, 0.25) == pytest.approx(float(pref * mp_S(1, 1, 0.25)), rel=1e-12)


@pytest.mark.parametrize("n,m,s", [(1, 1, 0.5), (2, 1, 0.3), (2, 3, 0.8)])
def test_hls_consistency(n, m, s):
    S, N, c, V = (C.sharp_sobolev(n, m, s), C.hardy_const(n, m, s),
                  C.green_const(n, m, s), C.sphere_volume(n, m))
    assert C.hls_const(n, m, s) == pytest.approx(1 / (S * c), rel=1e-14)
    assert V / (c * N) == pytest.approx(V ** ((Q(n, m) + 2 * s) / Q(n, m)) / (S * c), rel=1e-12)


def test_green_constant_extended_range():
    assert C.green_const(1, 1, 1.5) == pytest.approx(float(mp_c(1, 1, 1.5)), rel=1e-12)
    with pytest.raises(PreconditionError):
        C.green_const(1, 1, 2.0)


@pytest.mark.parametrize("fn", [C.sharp_sobolev, C.hardy_const, C.groundstate_const, C.poisson_norm,
                                C.trace_factor, C.hls_const])
@pytest.mark.parametrize("s", [0.0, 1.0, -0.2, 1.5])
def test_range_errors(fn, s):
    with pytest.raises(PreconditionError):
        fn(1, 1, s)


def test_dimension_errors():
    with pytest.raises(PreconditionError):
        C.sphere_volume(0, 1)
    with pytest.raises(PreconditionError):
        C.hardy_const(1.5, 1, 0.5)


def test_large_dimensions_do_not_overflow():
    for fn in (C.sharp_sobolev, C.hardy_const, C.groundstate_const):
        v = fn(30, 20, 0.5)
        assert np.isfinite(v) and v > 0
    assert np.isfinite(C.sphere_volume(30, 20))


def test_all_constants_table():
    tab = C.all_constants(1, 1, 0.5)
    assert set(tab) == {"S", "N", "c", "a", "V", "logsob", "trace", "hls", "C1"}
    assert all(v > 0 for v, _ in tab.values())


def test_log_bubble_integral():
    for n, m, b in [(1, 1, 1.5), (2, 1, 2.0), (1, 2, 3.0)]:
        rz = mp.quad(lambda r: r ** (2 * n - 1) * mp.quad(
            lambda t: t ** (m - 1) * ((1 + r * r / 4) ** 2 + t * t) ** (-b), [0, mp.inf]), [0, mp.inf])
        area = lambda d: 2 * mp.pi ** (mp.mpf(d) / 2) / mp.gamma(mp.mpf(d) / 2)
        want = mp.log(area(2 * n) * area(m) * rz)
        assert C.log_bubble_integral(n, m, b) == pytest.approx(float(want), rel=1e-10)
    with pytest.raises(PreconditionError):
        C.log_bubble_integral(1, 1, 1.0)


# Heisenberg cross-check.
#
# Put Z = z (as C^n) and t = 4w.  At m = 1 the bracket term is
# (1/2) z^T E z' = (1/2)(x y' - y x'), so t'' = t + t' + 2(x y' - y x'),
# which is the Heisenberg law t + t' + 2 Im<z, z'> (with <z, z'> conjugate
# linear in the first slot).  The norms satisfy
# (|Z|^4 + t^2)^{1/4} = 2 (|z|^4/16 + w^2)^{1/4}, and dZ dt = 4 dz dw.
# For F(Z, t) = f(z, w), G(Z, t) = g(z, w) the double integral picks up
# 4^2 2^{-lam} and each L^p norm picks up 4^{1/p}, so the sharp constants
# obey C_Heis = 16 2^{-lam} 4^{-2/p} C_here with 2/p = (2Q - lam)/Q.

def mp_frank_lieb(n, lam):
    q = 2 * n + 2
    lam = mp.mpf(lam)
    return (mp.power(mp.pi ** (n + 1) / (2 ** (n - 1) * mp.factorial(n)), lam / q)
            * mp.factorial(n) * mp.gamma((q - lam) / 2) / mp.gamma((2 * q - lam) / 4) ** 2)


def test_group_law_rescaling_matches_heisenberg(heis):
    from htype.group import hnorm, mul
    rng = np.random.default_rng(0)
    z1, w1 = rng.normal(size=(50, 2)), rng.normal(size=(50, 1))
    z2, w2 = rng.normal(size=(50, 2)), rng.normal(size=(50, 1))
    z, w = mul(heis, z1, w1, z2, w2)
    t = 4 * w1[:, 0] + 4 * w2[:, 0] + 2 * (z1[:, 0] * z2[:, 1] - z1[:, 1] * z2[:, 0])
    assert np.allclose(4 * w[:, 0], t, atol=1e-12)
    zz = np.einsum("ni,ni->n", z1, z1)
    assert np.allclose((zz ** 2 + (4 * w1[:, 0]) ** 2) ** 0.25, 2 * hnorm(z1, w1), rtol=1e-14)


@pytest.mark.parametrize("s", [0.25, 0.5])
def test_frank_lieb_cross_check(s):
    n = 1
    q = 2 * n + 2
    lam = q - 2 * s
    fl = float(mp_frank_lieb(n, lam))
    assert C.frank_lieb_const(n, lam) == pytest.approx(fl, rel=1e-13)
    ours = C.hls_const(n, 1, s)
    mapped = 16 * 2 ** (-lam) * 4 ** (-(2 * q - lam) / q) * ours
    assert mapped == pytest.approx(fl, rel=1e-10)


def test_frank_lieb_errors():
    with pytest.raises(PreconditionError):
        C.frank_lieb_const(1, 4.0)
    with pytest.raises(PreconditionError):
        C.frank_lieb_const(0, 1.0)
