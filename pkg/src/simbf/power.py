"""Water-filling over parallel channels."""

from __future__ import annotations

import numpy as np

__all__ = ["waterfill"]


def waterfill(floors, budget: float, tol: float = 1e-12, max_iter: int = 200):
    """Allocate ``budget`` as ``P_i = [level - floors_i]^+``.

    ``floors[i]`` is the noise-to-gain ratio of channel ``i`` (``inf`` for
    a dead channel).  The level is bracketed by bisection until the budget
    residual is within ``tol * budget``; the active set found that way is
    then used to solve for the level in closed form, which makes the
    allocation sum to the budget up to rounding.

    Returns
    -------
    powers : np.ndarray
    level : float
        Common water level, ``nan`` when no channel can be used.
    """
    floors = np.asarray(floors, dtype=float)
    powers = np.zeros_like(floors)
    usable = np.isfinite(floors)
    if budget <= 0 or not usable.any():
        return powers, float("nan")
    f = floors[usable]
    lo, hi = float(f.min()), float(f.max()) + budget
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        spent = np.maximum(mid - f, 0.0).sum()
        if abs(spent - budget) <= tol * budget:
            lo = hi = mid
            break
        if spent > budget:
            hi = mid
        else:
            lo = mid
    level = 0.5 * (lo + hi)
    # closed-form polish on the identified active set
    for _ in range(f.size + 1):
        active = f < level
        if not active.any():
            active = f <= f.min()
        new_level = (budget + f[active].sum()) / active.sum()
        if np.array_equal(active, f < new_level) or new_level == level:
            level = new_level
            break
        level = new_level
    alloc = np.maximum(level - f, 0.0)
    active = alloc > 0
    if active.any():
        # level - floor cancels when floors dwarf the budget; spread the residual
        shift = (budget - alloc.sum()) / active.sum()
        alloc[active] += shift
        level += shift
    powers[usable] = alloc
    return powers, float(level)
