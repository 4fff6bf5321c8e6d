import math
from typing import Sequence

import numpy as np

from src.core.errors import ContractError
from src.diffcore import DiffArray, ops


def bce_loss(logit: float, label: int) -> float:
    """Binary cross-entropy of one logit, max(z, 0) - z*y + log(1 + exp(-|z|))."""
    if label not in (0, 1):
        raise ContractError(f"Label must be 0 or 1, got {label}")
    if not math.isfinite(logit):
        raise ContractError(f"Logit must be finite, got {logit}")
    return max(logit, 0.0) - logit * label + math.log1p(math.exp(-abs(logit)))


def day_loss(logits: DiffArray, labels: Sequence[int] | np.ndarray) -> DiffArray:
    """Mean loss over one day's curb stocks, recorded on the logits' tape."""
    return ops.bce_with_logits(logits, labels)
