import math

import pytest

from app.errors import DomainError
from app.models.coding import (
    CATALOG,
    SofGain,
    SofRole,
    apply_coding,
    catalog,
    compose,
    inverse,
    make_sof_gain,
    new_coding,
    sof_polynomial,
)
from app.models.polynomial import Polynomial
from tests.conftest import random_valid_coding


class TestValidity:
    def test_identity(self):
        M = new_coding(1, 0, 0, 1)
        assert M.delta == 1.0
        assert M.is_one_way

    def test_ad_zero(self):
        with pytest.raises(DomainError, match="ad = 0"):
            new_coding(0, 1, 1, 1)

    def test_determinant_zero(self):
        with pytest.raises(DomainError, match="ad-bc = 0"):
            new_coding(1, 2, 0.5, 1)

    def test_non_finite(self):
        with pytest.raises(DomainError):
            new_coding(1, math.inf, 0, 1)


class TestInverse:
    def test_inverse_entries(self, p2_coding):
        inv = inverse(p2_coding)
        assert inv.as_tuple() == pytest.approx((1 / 3, -2.0, 1 / 3, 1.0))

    def test_round_trip(self, rng):
        for _ in range(20):
            M = random_valid_coding(rng)
            assert compose(M, inverse(M)) == pytest.approx((1, 0, 0, 1), abs=1e-12)
            x = tuple(rng.normal(size=2))
            assert apply_coding(inverse(M), *apply_coding(M, *x)) == pytest.approx(x)

    def test_stretching_inverse(self):
        inv = inverse(catalog("stretching3", a=2.0, d=4.0))
        assert inv.as_tuple() == pytest.approx((0.5, 0.0, 0.0, 0.25))

    @pytest.mark.parametrize("kind,param,key", [("shearing1", 0.7, "c"), ("shearing2", -1.3, "b")])
    def test_shearing_inverse_negates(self, kind, param, key):
        inv = inverse(catalog(kind, **{key: param}))
        assert getattr(inv, key) == pytest.approx(-param)
        assert inv.a == pytest.approx(1.0) and inv.d == pytest.approx(1.0)

    def test_shearing3_inverse(self):
        b, c = 0.5, 3.0
        inv = inverse(catalog("shearing3", b=b, c=c))
        scale = 1.0 / (1.0 - b * c)
        assert inv.as_tuple() == pytest.approx((scale, -b * scale, -c * scale, scale))

    def test_rotation_inverse(self):
        theta = 0.4
        inv = inverse(catalog("rotation", theta=theta))
        assert inv.as_tuple() == pytest.approx(catalog("rotation", theta=-theta).as_tuple())

    def test_scattering_inverse(self):
        gamma = 2.0
        inv = inverse(catalog("scattering", gamma=gamma))
        root = math.sqrt(2.0 / gamma)
        assert inv.as_tuple() == pytest.approx((root, -1.0 / gamma, -1.0, root))


class TestCatalog:
    def test_all_kinds_build(self):
        params = {
            "stretching1": {"a": 2.0},
            "stretching2": {"d": 3.0},
            "stretching3": {"a": 2.0, "d": 0.5},
            "squeezing": {"a": 4.0},
            "shearing1": {"c": 1.0},
            "shearing2": {"b": 1.0},
            "shearing3": {"b": 2.0, "c": 0.25},
            "rotation": {"theta": 0.3},
            "scattering": {"gamma": 1.5},
            "general_scattering": {"gamma": 1.5, "theta": 0.2},
            "one_way": {"alpha": 2.0, "beta": -1.0},
        }
        for kind in CATALOG:
            M = catalog(kind, **params.get(kind, {}))
            assert abs(M.delta) > 1e-12

    def test_squeezing_has_unit_ad(self):
        assert catalog("squeezing", a=4.0).ad == pytest.approx(1.0)

    def test_scattering_entries(self):
        M = catalog("scattering", gamma=2.0)
        assert M.as_tuple() == pytest.approx((2.0, 1.0, 2.0, 2.0))
        assert M.delta == pytest.approx(2.0)

    def test_general_scattering_entries(self):
        gamma, theta = 2.0, math.pi / 4
        M = catalog("general_scattering", gamma=gamma, theta=theta)
        assert M.as_tuple() == pytest.approx((2.0, 1.0, 2.0, 2.0))

    def test_shearing3_bc_one(self):
        with pytest.raises(DomainError, match="bc != 1"):
            catalog("shearing3", b=2.0, c=0.5)

    def test_rotation_odd_right_angle(self):
        with pytest.raises(DomainError):
            catalog("rotation", theta=math.pi / 2)

    def test_scattering_gamma_range(self):
        with pytest.raises(DomainError):
            catalog("scattering", gamma=0.0)

    def test_unknown_kind(self):
        with pytest.raises(DomainError, match="unknown coding kind"):
            catalog("mirror")

    def test_bad_parameters(self):
        with pytest.raises(DomainError, match="bad parameters"):
            catalog("shearing1", b=1.0)

    def test_one_way(self):
        M = catalog("one_way", alpha=2.0, beta=3.0)
        assert M.is_one_way
        assert M.as_tuple() == (2.0, 0.0, 0.0, 3.0)


class TestSofGain:
    def test_stabilizing(self, P2):
        gain = make_sof_gain(P2, 2.0, SofRole.F1_POLE_PLACER)
        assert gain.closed_poly == Polynomial((1.0, 1.0))
        assert gain.max_real_part == pytest.approx(-1.0)

    def test_not_stabilizing(self, P2):
        with pytest.raises(DomainError, match="gain not stabilizing"):
            make_sof_gain(P2, 0.5, SofRole.F2_ZERO_PLACER)

    def test_direct_construction_is_checked(self, P1):
        with pytest.raises(DomainError):
            SofGain(5.0, SofRole.F1_POLE_PLACER, sof_polynomial(P1, 5.0), 0.0)
