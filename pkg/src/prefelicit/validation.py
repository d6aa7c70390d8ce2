"""Input checks shared by the estimator and the harness."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .agents import MAXBID, TrueValuation
from .bundles import MAX_ITEMS


def check_valuations(X) -> list[TrueValuation]:
    """Coerce ``X`` to a list of valuations.

    ``X`` is either a sequence of :class:`TrueValuation` or an
    ``(n_agents, 2**k)`` integer array whose columns follow bundle-mask order.
    """
    if isinstance(X, TrueValuation):
        return [X]
    if len(X) and all(isinstance(x, TrueValuation) for x in X):
        ks = {x.k for x in X}
        if len(ks) != 1:
            raise ValueError(f"agents disagree on the item count: {sorted(ks)}")
        return list(X)
    arr = np.asarray(X)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2D array (n_agents, 2**k), got shape {arr.shape}")
    n, width = arr.shape
    if n < 1:
        raise ValueError("need at least one agent")
    k = width.bit_length() - 1
    if width != 1 << k or k > MAX_ITEMS:
        raise ValueError(f"row length {width} is not 2**k for k <= {MAX_ITEMS}")
    if not np.issubdtype(arr.dtype, np.number):
        raise ValueError(f"valuations must be numeric, got dtype {arr.dtype}")
    if np.any(arr != np.round(arr)):
        raise ValueError("valuations must be integers")
    if arr.min() < 0 or arr.max() > MAXBID:
        raise ValueError(f"valuations must lie in [0, {MAXBID}]")
    return [TrueValuation(k, tuple(int(v) for v in row)) for row in arr]


def check_policy(name: str, allowed: Sequence[str]) -> str:
    if name not in allowed:
        raise ValueError(f"policy must be one of {list(allowed)}, got {name!r}")
    return name


def check_positive(value: float, name: str) -> float:
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return float(value)
