import json

import numpy as np
import pytest

from app.models.coding import TwoWayCoding, catalog, new_coding
from app.models.transfer_function import RationalTf


@pytest.fixture
def P1() -> RationalTf:
    """(s - 1)/(s^2 + 3s + 2)：非最小相位、穩定"""
    return RationalTf.from_coeffs([-1.0, 1.0], [2.0, 3.0, 1.0])


@pytest.fixture
def P2() -> RationalTf:
    """1/(s - 1)：不穩定、無有限零點"""
    return RationalTf.from_coeffs([1.0], [-1.0, 1.0])


@pytest.fixture
def K1() -> RationalTf:
    return RationalTf.constant(1.0)


@pytest.fixture
def K2() -> RationalTf:
    return RationalTf.constant(2.0)


@pytest.fixture
def identity():
    return catalog("identity")


@pytest.fixture
def shear():
    return catalog("shearing1", c=1.0)


@pytest.fixture
def p2_coding():
    return new_coding(1.0, 2.0, -1.0 / 3.0, 1.0 / 3.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def scenario_file(tmp_path):
    """把 dict 寫成情境檔並回傳路徑"""

    def _write(doc: dict, name: str = "scenario.json"):
        path = tmp_path / name
        path.write_text(json.dumps(doc), encoding="utf-8")
        return path

    return _write


def random_valid_coding(rng) -> TwoWayCoding:
    while True:
        a, b, c, d = rng.uniform(-2.0, 2.0, size=4)
        if abs(a * d) > 0.1 and abs(a * d - b * c) > 0.1:
            return new_coding(a, b, c, d)


def random_stable_den(rng, degree: int) -> list[float]:
    """根在 [-3, -0.5] 的實係數多項式（升冪）"""
    rts = -rng.uniform(0.5, 3.0, size=degree)
    return list(np.polynomial.polynomial.polyfromroots(rts))
