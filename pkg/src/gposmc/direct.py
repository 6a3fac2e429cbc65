"""DIRECT (DIviding RECTangles) global maximisation over a box.

Deterministic, derivative-free: the domain is normalised to the unit
hypercube, which is recursively trisected. Each round selects the
potentially optimal rectangles (the lower-right convex hull of the
(size, value) scatter, with a relative improvement slack over the
incumbent) and splits them along their longest sides, sampling the two
new centers per side. Maximisation runs as minimisation of the negated
objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .models import BoxDomain

_BAD = 1e300


@dataclass(frozen=True)
class DirectConfig:
    max_evals: int = 500
    epsilon: float = 1e-4
    max_depth: int = 30

    def __post_init__(self):
        if self.max_evals < 1:
            raise ValueError("max_evals must be at least 1")
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be non-negative")


class DirectResult(NamedTuple):
    theta: np.ndarray
    value: float
    n_evals: int


class _Rect:
    """Hyperrectangle tracked by its center and per-dimension trisection depth."""

    __slots__ = ("center", "levels", "value", "index")

    def __init__(self, center, levels, value, index):
        self.center = center
        self.levels = levels
        self.value = value  # negated objective at the center
        self.index = index


def _measure(levels, cache) -> float:
    # half-diagonal; computed from the sorted depth multiset so rectangles
    # with the same side multiset always share the exact float value
    key = tuple(sorted(levels))
    m = cache.get(key)
    if m is None:
        m = 0.5 * math.sqrt(sum(3.0 ** (-2 * l) for l in key))
        cache[key] = m
    return m


def _potentially_optimal(rects, f_min, epsilon, max_depth, cache):
    candidates = {}
    for rect in rects:
        if min(rect.levels) >= max_depth:
            continue
        d = _measure(rect.levels, cache)
        best = candidates.get(d)
        if best is None or (rect.value, rect.index) < (best.value, best.index):
            candidates[d] = rect
    if not candidates:
        return []

    items = sorted(candidates.items())  # ascending measure
    measures = [d for d, _ in items]
    values = [r.value for _, r in items]
    slack = epsilon * max(abs(f_min), 1e-8)
    selected = []
    for j, (dj, rect) in enumerate(items):
        fj = values[j]
        lo = -math.inf
        for i in range(j):
            lo = max(lo, (fj - values[i]) / (dj - measures[i]))
        hi = math.inf
        for i in range(j + 1, len(items)):
            hi = min(hi, (values[i] - fj) / (measures[i] - dj))
        if lo > hi:
            continue
        if hi < math.inf and fj - dj * hi > f_min - slack:
            continue
        selected.append(rect)
    return selected


def maximize(
    objective: Callable,
    domain: BoxDomain,
    config: DirectConfig | None = None,
) -> DirectResult:
    """Maximise ``objective`` over ``domain`` within the evaluation budget.

    The objective may return ``-inf`` (treated as very bad). Always returns
    the incumbent; the actual evaluation count may overshoot ``max_evals``
    by at most the final division (two points per split dimension).
    """
    config = config or DirectConfig()
    dim = domain.dim
    state = {"n": 0, "best_g": math.inf, "best_u": None, "best_v": -math.inf}

    def evaluate(u: np.ndarray) -> float:
        v = float(objective(domain.from_unit(u)))
        if math.isnan(v) or v == -math.inf:
            g = _BAD
        elif v == math.inf:
            g = -_BAD
        else:
            g = -v
        state["n"] += 1
        if g < state["best_g"]:
            state["best_g"] = g
            state["best_u"] = u.copy()
            state["best_v"] = v
        return g

    measure_cache: dict = {}
    center = np.full(dim, 0.5)
    rects = [_Rect(center, [0] * dim, evaluate(center), 0)]
    next_index = 1

    while state["n"] < config.max_evals:
        selected = _potentially_optimal(
            rects, state["best_g"], config.epsilon, config.max_depth, measure_cache
        )
        if not selected:
            break
        for rect in selected:
            if state["n"] >= config.max_evals:
                break
            lmin = min(rect.levels)
            delta = 3.0 ** (-(lmin + 1))
            samples = []
            for i, level in enumerate(rect.levels):
                if level != lmin:
                    continue
                cp = rect.center.copy()
                cp[i] += delta
                cm = rect.center.copy()
                cm[i] -= delta
                fp = evaluate(cp)
                fm = evaluate(cm)
                samples.append((min(fp, fm), i, cp, fp, cm, fm))
            # best sampled value splits first, keeping its children largest
            samples.sort(key=lambda s: (s[0], s[1]))
            levels = list(rect.levels)
            for _, i, cp, fp, cm, fm in samples:
                levels[i] += 1
                rects.append(_Rect(cp, list(levels), fp, next_index))
                rects.append(_Rect(cm, list(levels), fm, next_index + 1))
                next_index += 2
            rect.levels = levels

    return DirectResult(
        theta=domain.from_unit(state["best_u"]),
        value=state["best_v"],
        n_evals=state["n"],
    )


def _neg_sixhump(theta):
    x, y = theta
    return -(
        (4.0 - 2.1 * x**2 + x**4 / 3.0) * x**2 + x * y + (-4.0 + 4.0 * y**2) * y**2
    )


def _neg_branin(theta):
    x, y = theta
    a, b, c = 1.0, 5.1 / (4.0 * math.pi**2), 5.0 / math.pi
    r, s, t = 6.0, 10.0, 1.0 / (8.0 * math.pi)
    return -(a * (y - b * x**2 + c * x - r) ** 2 + s * (1 - t) * math.cos(x) + s)


#: built-in maximisation test problems: name -> (objective, domain)
TEST_FUNCTIONS = {
    "quadratic1d": (lambda th: -((th[0] - 0.3) ** 2), BoxDomain([0.0], [1.0])),
    "quadratic2d": (
        lambda th: -float(np.sum((np.asarray(th) - 0.7) ** 2)),
        BoxDomain([0.0, 0.0], [1.0, 1.0]),
    ),
    "sixhump": (_neg_sixhump, BoxDomain([-3.0, -2.0], [3.0, 2.0])),
    "branin": (_neg_branin, BoxDomain([-5.0, 0.0], [10.0, 15.0])),
}


def get_test_function(name: str):
    """Look up a built-in test problem by name."""
    try:
        return TEST_FUNCTIONS[name]
    except KeyError:
        known = ", ".join(sorted(TEST_FUNCTIONS))
        raise ValueError(f"unknown test function '{name}' (known: {known})") from None
