"""Finite-difference gradient suite over every diffcore operation."""

import logging
from typing import Callable, Iterable, Mapping

import numpy as np

from . import ops
from .grad_check import GradCheckReport, grad_check
from .tape import DiffArray

logger = logging.getLogger(__name__)

CaseBuilder = Callable[[np.random.Generator], tuple[dict[str, np.ndarray], Callable[[Mapping[str, DiffArray]], DiffArray]]]


def _uniform(rng: np.random.Generator, *shape: int) -> np.ndarray:
    return rng.uniform(-2.0, 2.0, size=shape)


def _projected(build: Callable[[Mapping[str, DiffArray]], DiffArray], shape: tuple[int, int], rng: np.random.Generator):
    weights = DiffArray.constant(rng.normal(size=shape))
    return lambda p: ops.reduce_sum(ops.hadamard(build(p), weights))


def _matmul_case(rng):
    params = {"a": _uniform(rng, 5, 4), "b": _uniform(rng, 4, 3)}
    return params, _projected(lambda p: ops.matmul(p["a"], p["b"]), (5, 3), rng)


def _activation_case(kind: str) -> CaseBuilder:
    def build(rng):
        params = {"x": _uniform(rng, 4, 3)}
        return params, _projected(lambda p: ops.elementwise(p["x"], kind), (4, 3), rng)
    return build


def _broadcast_case(rng):
    params = {"a": _uniform(rng, 4, 3), "row": _uniform(rng, 1, 3), "col": _uniform(rng, 4, 1)}

    def build(p):
        x = ops.add(p["a"], p["row"])
        x = ops.hadamard(x, p["col"])
        return ops.sub(x, ops.scale(p["a"], 0.5))

    return params, _projected(build, (4, 3), rng)


def _concat_case(rng):
    params = {"a": _uniform(rng, 3, 2), "b": _uniform(rng, 3, 1), "c": _uniform(rng, 2, 3)}

    def build(p):
        left = ops.concat_cols(p["a"], p["b"])
        return ops.concat_rows(left, p["c"])

    return params, _projected(build, (5, 3), rng)


def _reduce_case(rng):
    params = {"a": _uniform(rng, 4, 3)}

    def build(p):
        cols = ops.reduce_sum(p["a"], axis=0)
        rows = ops.reduce_sum(p["a"], axis=1)
        return ops.add(ops.matmul(rows, cols), ops.transpose(ops.mean_rows(ops.transpose(p["a"]))))

    return params, _projected(build, (4, 3), rng)


def _softmax_case(rng):
    params = {"logits": _uniform(rng, 6, 1)}
    return params, _projected(lambda p: ops.softmax_vec(p["logits"]), (6, 1), rng)


def _gather_case(rng):
    params = {"a": _uniform(rng, 6, 3)}
    ids = rng.integers(0, 6, size=8)
    dst = rng.integers(0, 5, size=8)

    def build(p):
        return ops.scatter_add_rows(ops.gather_rows(p["a"], ids), dst, 5)

    return params, _projected(build, (5, 3), rng)


def _bce_case(rng):
    params = {"z": _uniform(rng, 7, 1)}
    labels = rng.integers(0, 2, size=7)
    return params, lambda p: ops.bce_with_logits(p["z"], labels)


def _sigmoid_chain_case(rng):
    params = {"w": _uniform(rng, 3, 3), "x": _uniform(rng, 2, 3)}

    def build(p):
        y = p["x"]
        for _ in range(3):
            y = ops.sigmoid(ops.matmul(y, p["w"]))
        return y

    return params, _projected(build, (2, 3), rng)


def corrupted_tanh(a: DiffArray) -> DiffArray:
    """tanh whose adjoint is deliberately doubled; a negative control for the suite."""
    y = np.tanh(a.value)
    return ops.custom("corrupted_tanh", (a,), y, lambda g: (2.0 * g * (1.0 - y * y),))


def _corrupted_case(rng):
    params = {"x": _uniform(rng, 3, 3)}
    return params, _projected(lambda p: corrupted_tanh(p["x"]), (3, 3), rng)


DIFFCORE_CASES: dict[str, CaseBuilder] = {
    "matmul": _matmul_case,
    "sigmoid": _activation_case("sigmoid"),
    "tanh": _activation_case("tanh"),
    "leaky_relu": _activation_case("leaky_relu"),
    "add_sub_hadamard_scale": _broadcast_case,
    "concat": _concat_case,
    "reduce_sum_transpose": _reduce_case,
    "softmax_vec": _softmax_case,
    "gather_scatter_rows": _gather_case,
    "bce_with_logits": _bce_case,
    "sigmoid_chain": _sigmoid_chain_case,
}


def run_case(name: str, builder: CaseBuilder, seed: int, step: float, tolerance: float) -> GradCheckReport:
    rng = np.random.default_rng(seed)
    params, closure = builder(rng)
    return grad_check(closure, params, step=step, tolerance=tolerance, label=f"{name}[seed={seed}]")


def run_diffcore_suite(
    seeds: Iterable[int],
    step: float = 1e-5,
    tolerance: float = 1e-4,
    inject_bug: bool = False,
) -> list[GradCheckReport]:
    """
    Runs every operation case for every seed.

    Args:
        seeds: Random seeds, one instance per case and seed
        step: Central-difference step
        tolerance: Relative error threshold
        inject_bug: Also run the corrupted-adjoint fixture, which must fail

    Returns:
        One report per (case, seed)
    """

    cases = dict(DIFFCORE_CASES)
    if inject_bug:
        cases["corrupted_tanh"] = _corrupted_case

    reports = []
    for seed in seeds:
        for name, builder in cases.items():
            reports.append(run_case(name, builder, seed, step, tolerance))
    logger.info(f"diffcore suite: {sum(r.passed for r in reports)}/{len(reports)} checks passed")
    return reports
