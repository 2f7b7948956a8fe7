import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robinlab import maps


def small_disk_points(max_abs=0.8):
    return st.complex_numbers(max_magnitude=max_abs, allow_nan=False, allow_infinity=False)


UNIT_DISK = lambda z: abs(z) < 1.0


class TestParsing:
    @pytest.mark.parametrize(
        "text,z,expected",
        [
            ("z", 0.3 + 0.1j, 0.3 + 0.1j),
            ("z**2", 2j, -4.0),
            ("(z + 0.3*z**2)/1.3", 1.0, 1.0),
            ("exp(z)", 1j * math.pi, -1.0),
            ("0.5*z", 0.4, 0.2),
            ("z/2 - 1", 4.0, 1.0),
            ("i*z", 1.0, 1j),
        ],
    )
    def test_values(self, text, z, expected):
        f = maps.from_expression(text)
        assert f(z) == pytest.approx(expected, rel=1e-14, abs=1e-14)

    def test_rejects_unknown_symbol(self):
        with pytest.raises(maps.MapError):
            maps.parse_expression("w + 1")

    def test_rejects_noninteger_power(self):
        with pytest.raises(maps.MapError):
            maps.parse_expression("z**0.5")

    def test_vectorized_eval(self):
        f = maps.from_expression("z**2 + 1")
        zs = np.array([0.0, 1j, 2.0])
        np.testing.assert_allclose(f(zs), [1.0, 0.0, 5.0])


class TestDerivatives:
    @pytest.mark.parametrize(
        "text",
        ["z**3 - 2*z", "(z - 0.5)/(1 - 0.5*z)", "exp(2*z)", "(z + 0.45*z**2)/1.45"],
    )
    def test_against_central_differences(self, text):
        f = maps.from_expression(text)
        pts = [0.1 + 0.2j, -0.3 + 0.05j, 0.4 - 0.4j, 0.0]
        assert maps.derivative_fd_error(f, pts, step=1e-5) < 1e-6

    def test_higher_orders(self):
        f = maps.from_expression("z**4")
        assert f.derivative(2.0, 3) == pytest.approx(48.0)
        assert f.derivative(2.0, 4) == pytest.approx(24.0)
        assert f.derivative(2.0, 5) == pytest.approx(0.0)

    def test_taylor_rational_route(self):
        f = maps.from_expression("(z + 0.3*z**2)/1.3")
        c = f.taylor(0.0, 3)
        assert c[0] == pytest.approx(0.0, abs=1e-15)
        assert c[1] == pytest.approx(1 / 1.3, rel=1e-14)
        assert c[2] == pytest.approx(0.3 / 1.3, rel=1e-14)
        assert c[3] == pytest.approx(0.0, abs=1e-15)

    def test_local_expansion_orders(self):
        f = maps.from_expression("z**2")
        n, c = f.local_expansion(0.0)
        assert n == 2 and c == pytest.approx(1.0)
        n, c = f.local_expansion(0.5)
        assert n == 1 and c == pytest.approx(1.0)


class TestSchwarzian:
    @given(z=small_disk_points(0.6))
    @settings(max_examples=60)
    def test_mobius_vanishes(self, z):
        m = maps.disk_automorphism(0.4 - 0.2j, theta=0.7)
        assert abs(maps.schwarzian(m, z)) < 1e-9

    @pytest.mark.parametrize("a", [0.1, 0.3, 0.45])
    def test_quadratic_value_two_routes(self, a):
        f = maps.from_expression(f"(z + {a}*z**2)/(1 + {a})")
        s1 = maps.schwarzian(f, 0.0)
        s2 = maps.schwarzian_from_series(f, 0.0)
        assert s1 == pytest.approx(-6.0 * a * a, abs=1e-12)
        assert abs(s1 - s2) < 1e-10

    def test_chain_rule_with_mobius(self):
        # S_{f o m} = (S_f o m) * (m')^2 for Moebius m
        f = maps.from_expression("z**2 + 0.25*z**3")
        a = 0.3 + 0.1j
        rot = cmath.exp(0.4j)
        # m(z) = rot*(z - a)/(1 - conj(a) z), composed symbolically
        m_num = f"({rot.real}+{rot.imag}j)*(z - ({a.real}+{a.imag}j))"
        m_den = f"(1 - ({a.real}-{a.imag}j)*z)"
        m_text = f"({m_num})/{m_den}"
        m = maps.from_expression(m_text)
        comp = maps.from_expression(f"(({m_text})**2 + 0.25*({m_text})**3)")
        for z in (0.1 + 0.1j, -0.2j, 0.35):
            lhs = maps.schwarzian(comp, z)
            rhs = maps.schwarzian(f, m(z)) * m.derivative(z, 1) ** 2
            assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)

    def test_rejects_critical_point(self):
        f = maps.from_expression("z**2")
        with pytest.raises(maps.MapError):
            maps.schwarzian(f, 0.0)


class TestPreimages:
    def test_square_simple(self):
        f = maps.from_expression("z**2", )
        f = maps.HolomorphicMap(f.expr, valence=2)
        pts = maps.preimages(f, 0.25, UNIT_DISK)
        assert sorted((round(z.real, 9), m) for z, m in pts) == [(-0.5, 1), (0.5, 1)]

    def test_square_double_zero(self):
        f = maps.HolomorphicMap(maps.parse_expression("z**2"), valence=2)
        pts = maps.preimages(f, 0.0, UNIT_DISK)
        assert len(pts) == 1
        z, m = pts[0]
        assert abs(z) < 1e-12 and m == 2

    def test_roots_outside_region_dropped(self):
        f = maps.HolomorphicMap(maps.parse_expression("z**2"), valence=2)
        pts = maps.preimages(f, 4.0, UNIT_DISK)
        assert pts == []

    @pytest.mark.parametrize("w0", [0.1 + 0.2j, -0.3j, 0.55])
    def test_blaschke_degree_three(self, w0):
        b = maps.blaschke([0.5, -0.3 + 0.1j, 0.2j])
        pts = maps.preimages(b, w0, UNIT_DISK)
        assert sum(m for _, m in pts) == 3
        for z, _ in pts:
            assert abs(b(z) - w0) < 1e-9
            assert abs(z) < 1.0

    def test_affine_closed_form(self):
        f = maps.affine(2.0, 1.0)
        pts = maps.preimages(f, 1.5, lambda z: True)
        assert len(pts) == 1
        assert pts[0][0] == pytest.approx(0.25)

    def test_refuses_exp(self):
        f = maps.from_expression("exp(z)")
        with pytest.raises(maps.PreimageError):
            maps.preimages(f, 1.0, UNIT_DISK)

    def test_valence_guard(self):
        f = maps.HolomorphicMap(maps.parse_expression("z**3"), valence=1)
        with pytest.raises(maps.PreimageError):
            maps.preimages(f, 0.001 + 0.001j, UNIT_DISK)


class TestCatalogConstructors:
    def test_automorphism_is_isometry_like(self):
        m = maps.disk_automorphism(0.3)
        assert abs(m(0.3)) < 1e-15
        assert abs(abs(m(cmath.exp(0.3j))) - 1.0) < 1e-12

    def test_blaschke_boundary_modulus(self):
        b = maps.blaschke([0.4, -0.2j], rotation=cmath.exp(0.9j))
        for t in np.linspace(0, 2 * math.pi, 7):
            assert abs(abs(b(cmath.exp(1j * t))) - 1.0) < 1e-12

    def test_blaschke_rejects_outside_zero(self):
        with pytest.raises(maps.MapError):
            maps.blaschke([1.2])

    def test_mobius_rejects_degenerate(self):
        with pytest.raises(maps.MapError):
            maps.mobius(1, 2, 2, 4)

    def test_polynomial_map(self):
        p = maps.polynomial_map([1, 0, 2])  # 1 + 2 z^2
        assert p(2.0) == pytest.approx(9.0)
        assert p.valence == 2
