from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from permshape.weights import WeightModel


def cycle_lengths(perm) -> list[int]:
    seen = [False] * len(perm)
    out = []
    for i in range(len(perm)):
        if seen[i]:
            continue
        length, k = 0, i
        while not seen[k]:
            seen[k] = True
            k = perm[k]
            length += 1
        out.append(length)
    return out


def enumerate_measure(model: WeightModel, n: int):
    """Brute force over S_n: cycle-length lists and their probabilities (None if h_n = 0)."""
    lengths, weights = [], []
    for perm in itertools.permutations(range(n)):
        ls = cycle_lengths(perm)
        lengths.append(ls)
        weights.append(math.prod(model.theta_at(k) for k in ls))
    w = np.array(weights, dtype=float)
    h = w.sum() / math.factorial(n)
    if h == 0.0:
        return lengths, None, 0.0
    return lengths, w / w.sum(), h


def profile_of(ls, cut: int) -> int:
    return sum(1 for k in ls if k >= cut)


ORACLE_MODELS = [WeightModel.polylog(1.0), WeightModel.polylog(1.0, 1), WeightModel.constant(2.0),
                 WeightModel.polylog(0.5), WeightModel.custom([0.5, 0.0, 2.0, 1.0])]


@pytest.fixture(scope="session")
def enumerated():
    cache = {}

    def get(model, n):
        key = (model, n)
        if key not in cache:
            cache[key] = enumerate_measure(model, n)
        return cache[key]

    return get
