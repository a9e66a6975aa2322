import math

import numpy as np
import pytest

from tsfdrank.exceptions import DomainError
from tsfdrank.functions import ConcaveFn, PiecewiseLinear, ShiftedLog, parse_concave


def test_shifted_log_values_and_inverse():
    f = ShiftedLog(-0.6)
    assert f(1.6) == pytest.approx(0.0)
    assert f.inverse(f(2.5)) == pytest.approx(2.5)
    assert f.derivative(1.1) == pytest.approx(2.0)
    with pytest.raises(DomainError):
        f.check_domain(np.array([0.6]))


def test_piecewise_linear_anchor_and_concavity():
    f = PiecewiseLinear((4.0, 2.0, 1.0), (1.0, 3.0))
    assert f(1.0) == 0.0
    assert f(0.0) == pytest.approx(-4.0)
    assert f(3.0) == pytest.approx(4.0)
    assert f(5.0) == pytest.approx(6.0)
    xs = np.linspace(-2, 6, 41)
    for x in xs:
        assert f.inverse(f(x)) == pytest.approx(x)
    ys = f(xs)
    assert np.all(np.diff(ys) > 0)
    assert np.all(np.diff(ys, 2) <= 1e-12)


@pytest.mark.parametrize("slopes,bps", [((1.0, 2.0), (0.0,)), ((2.0, 1.0), ()), ((1.0, -1.0), (0.0,))])
def test_piecewise_linear_rejects_non_concave(slopes, bps):
    with pytest.raises(ValueError):
        PiecewiseLinear(slopes, bps)


def test_parse_and_serialize():
    assert parse_concave("log:-0.6") == ShiftedLog(-0.6)
    f = parse_concave("pwl:4,1;0.95")
    assert isinstance(f, PiecewiseLinear)
    assert ConcaveFn.from_dict(f.to_dict()) == f
    with pytest.raises(ValueError):
        parse_concave("exp:1")


def test_log_matches_math():
    assert ShiftedLog(0.0001)(0.0) == pytest.approx(math.log(0.0001))
