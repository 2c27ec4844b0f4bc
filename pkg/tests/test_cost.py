from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from disksearch.cost import (
    CostFunction,
    CostKind,
    check_pseudo_linear,
    evaluate,
    linear_terms,
    normalization,
    shift_rate,
)

times = st.floats(0, 50, allow_nan=False)


class TestEvaluate:
    def test_examples(self):
        assert evaluate(CostFunction.gw(0.0), 5, 3) == 3
        assert evaluate(CostFunction.max_norm(), 2, 7) == 7
        assert evaluate(CostFunction.gw(1.0), 2, 3) == 5
        assert evaluate(CostFunction.proj2(), 9, 4) == 4

    def test_negative_times_rejected(self):
        with pytest.raises(ValueError):
            evaluate(CostFunction.proj2(), -1.0, 0.0)

    def test_monotone_in_each_coordinate(self, any_cost):
        rng = np.random.default_rng(0)
        x, y, dx, dy = rng.uniform(0, 10, size=(4, 10_000))
        for xi, yi, dxi, dyi in zip(x, y, dx, dy):
            base = evaluate(any_cost, xi, yi)
            assert evaluate(any_cost, xi + dxi, yi) >= base
            assert evaluate(any_cost, xi, yi + dyi) >= base

    @given(times, times)
    def test_equals_max_of_linear_terms(self, x, y):
        for f in (CostFunction.proj2(), CostFunction.max_norm(), CostFunction.gw(0.37)):
            lin = max(u * x + v * y for u, v in linear_terms(f))
            assert evaluate(f, x, y) == pytest.approx(lin, abs=1e-12)


class TestNormalization:
    def test_values(self):
        assert normalization(CostFunction.proj2()) == 1
        assert normalization(CostFunction.max_norm()) == 1
        assert normalization(CostFunction.gw(1.0)) == 2
        assert normalization(CostFunction.gw(0.5)) == 1.5

    def test_is_cost_at_unit_times(self, any_cost):
        assert normalization(any_cost) == evaluate(any_cost, 1.0, 1.0)


class TestLinearTerms:
    def test_terms(self):
        assert linear_terms(CostFunction.proj2()) == [(0.0, 1.0)]
        assert linear_terms(CostFunction.max_norm()) == [(1.0, 0.0), (0.0, 1.0)]
        assert linear_terms(CostFunction.gw(0.3)) == [(0.3, 1.0)]

    def test_min_is_rejected(self):
        with pytest.raises(ValueError):
            linear_terms(CostFunction(CostKind.MIN))

    def test_shift_rates(self):
        assert shift_rate(CostFunction.proj2()) == 1
        assert shift_rate(CostFunction.max_norm()) == 1
        assert shift_rate(CostFunction.gw(0.4)) == pytest.approx(1.4)


class TestPseudoLinear:
    def test_supported_kinds(self, any_cost):
        assert check_pseudo_linear(any_cost)

    def test_gw_on_random_samples(self):
        rng = np.random.default_rng(1)
        samples = [tuple(s) for s in rng.uniform(0, 20, size=(1000, 3))]
        for f in (CostFunction.proj2(), CostFunction.max_norm(), CostFunction.gw(0.7)):
            assert check_pseudo_linear(f, samples)

    def test_min_is_shift_compatible(self):
        # min is rejected by the LP builder, not by the shift check
        assert check_pseudo_linear(CostFunction(CostKind.MIN))

    def test_tolerance_is_relative(self):
        assert check_pseudo_linear(CostFunction.gw(0.3), [(1e6, 2e6, 3e6)])


class TestConstruction:
    @pytest.mark.parametrize("w", [-0.1, 1.5, None])
    def test_bad_weight(self, w):
        with pytest.raises(ValueError):
            CostFunction(CostKind.WEIGHTED_AVG, w)

    def test_weight_only_for_gw(self):
        with pytest.raises(ValueError):
            CostFunction(CostKind.PROJ2, 0.5)

    def test_parse(self):
        assert CostFunction.parse("proj2") == CostFunction.proj2()
        assert CostFunction.parse("MAX") == CostFunction.max_norm()
        assert CostFunction.parse("gw", 0.25) == CostFunction.gw(0.25)
        with pytest.raises(ValueError):
            CostFunction.parse("gw")
        with pytest.raises(ValueError):
            CostFunction.parse("geometric")

    def test_dict_round_trip(self, any_cost):
        assert CostFunction.from_dict(any_cost.to_dict()) == any_cost

    def test_only_max_is_symmetric(self):
        assert CostFunction.max_norm().symmetric
        assert not CostFunction.proj2().symmetric
        assert not CostFunction.gw(0.5).symmetric
