from __future__ import annotations

import math

import pytest

from disksearch.cost import CostFunction

ALL_COSTS = [CostFunction.proj2(), CostFunction.max_norm(), CostFunction.gw(0.3)]

SQRT3 = math.sqrt(3.0)


@pytest.fixture(params=ALL_COSTS, ids=lambda f: f.name)
def any_cost(request):
    return request.param
