"""Brute-force cross-checks for the analytic building blocks.

Everything here recomputes a quantity by exhaustive enumeration, with no
shortcuts shared with the production path: channel-state realizations for
outcome probabilities and sensing times, a dense power grid for the
allocation solver.  The test suite and the `oracle` CLI preset both run
these.
"""

import itertools
import math

from .coopsort import CoalitionPlan
from .noncoop import OrderedChannelList
from .outcomes import IDLE
from .power import RateContext

__all__ = ["realization_outcome_oracle", "sensing_time_oracle",
           "grid_allocation_oracle"]


def realization_outcome_oracle(plan: CoalitionPlan, thetas) -> dict:
    """Outcome distribution by enumerating every channel-state realization.

    For each of the 2^{K_S} free/busy patterns, every member scans its own
    ordering and takes the first free channel (IDLE when none is); the
    pattern's probability accrues to that joint assignment.
    """
    channels = plan.shared_channels
    dist: dict[tuple, float] = {}
    for free_set in itertools.product((False, True), repeat=len(channels)):
        prob = 1.0
        for ch, free in zip(channels, free_set):
            prob *= thetas[ch] if free else 1.0 - thetas[ch]
        if prob == 0.0:
            continue
        free = {ch for ch, f in zip(channels, free_set) if f}
        assignment = tuple(
            next((ch for ch in row if ch in free), IDLE)
            for row in plan.orderings)
        dist[assignment] = dist.get(assignment, 0.0) + prob
    return dist


def sensing_time_oracle(ordered: OrderedChannelList, thetas, alpha: float) -> float:
    """Expected sensing time by enumerating channel-state realizations.

    A user that finds its first free channel at 1-based position j has
    spent j*alpha of the slot sensing; finding none costs the whole slot.
    """
    channels = ordered.channels
    expected = 0.0
    for free_set in itertools.product((False, True), repeat=len(channels)):
        prob = 1.0
        for ch, free in zip(channels, free_set):
            prob *= thetas[ch] if free else 1.0 - thetas[ch]
        stop = next((j for j, free in enumerate(free_set, start=1) if free), None)
        expected += prob * (stop * alpha if stop is not None else 1.0)
    return expected


def grid_allocation_oracle(ctx: RateContext, p_max: float,
                           grid_points: int = 100) -> tuple[float, list]:
    """Best sum-rate over a dense grid of two-channel power splits.

    Each member's budget split is quantized to `grid_points` steps; all
    combinations are evaluated.  Only defined for 2-channel groups (the
    combinatorics explode beyond that).
    """
    n = ctx.n_members
    if ctx.n_channels != 2:
        raise ValueError("grid oracle only supports 2-channel groups")
    splits = [(t * p_max / grid_points, p_max - t * p_max / grid_points)
              for t in range(grid_points + 1)]
    best_rate = -math.inf
    best_alloc = None
    for combo in itertools.product(splits, repeat=n):
        rate = 0.0
        for i in range(n):
            for k in range(2):
                if combo[i][k] <= 0.0:
                    continue
                d = ctx.noise + ctx.fixed_interference[i][k]
                for j in range(n):
                    if j != i:
                        d += combo[j][k] * ctx.gains[j][k]
                if d > 0.0:
                    rate += math.log2(1.0 + combo[i][k] * ctx.gains[i][k] / d)
                else:
                    rate = math.inf
        if rate > best_rate:
            best_rate = rate
            best_alloc = [list(row) for row in combo]
    return best_rate, best_alloc
