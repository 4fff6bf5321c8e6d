import logging
from typing import Callable, Mapping

import numpy as np
from pydantic import BaseModel, Field

from .tape import DiffArray, Tape, as_matrix

logger = logging.getLogger(__name__)

ForwardClosure = Callable[[Mapping[str, DiffArray]], DiffArray]

DENOMINATOR_FLOOR = 1e-8


class ParamCheck(BaseModel):
    """Analytic vs central-difference comparison for one parameter."""

    name: str = Field(..., description="Parameter name")
    shape: tuple[int, int] = Field(..., description="Parameter shape")
    max_abs_error: float = Field(..., description="Largest absolute gradient difference")
    max_rel_error: float = Field(..., description="max_abs_error over the largest gradient magnitude")
    passed: bool = Field(..., description="max_rel_error <= tolerance")


class GradCheckReport(BaseModel):
    """
    Result of a finite-difference gradient check.

    Attributes:
        label: Name of the checked function
        step: Central-difference step
        tolerance: Relative error threshold
        params: Per-parameter comparisons
    """

    label: str = Field(default="", description="Name of the checked function")
    step: float = Field(..., gt=0.0, description="Central-difference step")
    tolerance: float = Field(..., gt=0.0, description="Relative error threshold")
    params: list[ParamCheck] = Field(default_factory=list, description="Per-parameter results")

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.params)

    @property
    def max_rel_error(self) -> float:
        return max((p.max_rel_error for p in self.params), default=0.0)

    def failing(self) -> list[str]:
        return [p.name for p in self.params if not p.passed]


def _evaluate(f: ForwardClosure, params: Mapping[str, np.ndarray]) -> float:
    tape = Tape()
    return f(tape.parameters(dict(params))).item()


def analytic_gradients(f: ForwardClosure, params: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
    tape = Tape()
    loss = f(tape.parameters(dict(params)))
    return tape.backward(loss)


def grad_check(
    f: ForwardClosure,
    params: Mapping[str, np.ndarray],
    step: float = 1e-5,
    tolerance: float = 1e-4,
    label: str = "",
) -> GradCheckReport:
    """
    Compares tape gradients against central finite differences.

    The relative error of a parameter is
    max|analytic - numeric| / max(max|analytic|, max|numeric|, 1e-8).

    Args:
        f: Deterministic closure mapping tape parameters to a 1x1 loss
        params: Parameter values at which to check
        step: Central-difference step
        tolerance: Pass threshold on the relative error
        label: Name recorded in the report

    Returns:
        A GradCheckReport with one entry per parameter
    """

    base = {name: as_matrix(value).copy() for name, value in params.items()}
    analytic = analytic_gradients(f, base)
    report = GradCheckReport(label=label, step=step, tolerance=tolerance)

    for name, value in base.items():
        numeric = np.zeros_like(value)
        for index in np.ndindex(value.shape):
            original = value[index]
            value[index] = original + step
            plus = _evaluate(f, base)
            value[index] = original - step
            minus = _evaluate(f, base)
            value[index] = original
            numeric[index] = (plus - minus) / (2.0 * step)

        grad = analytic[name]
        abs_error = float(np.max(np.abs(grad - numeric)))
        scale = max(float(np.max(np.abs(grad))), float(np.max(np.abs(numeric))), DENOMINATOR_FLOOR)
        rel_error = abs_error / scale
        report.params.append(
            ParamCheck(
                name=name,
                shape=value.shape,
                max_abs_error=abs_error,
                max_rel_error=rel_error,
                passed=rel_error <= tolerance,
            )
        )

    if report.passed:
        logger.debug(f"grad_check '{label}' passed, max rel error {report.max_rel_error:.3e}")
    else:
        logger.warning(f"grad_check '{label}' failed for {report.failing()}")
    return report
