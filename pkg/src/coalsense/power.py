"""Power allocation for a group of users transmitting at the same rank.

Each member spreads its fixed budget over the group's channel pool so the
group sum-rate is as large as possible.  With in-group interference the
problem is non-convex, so the solver runs damped best-response rounds
(every member waterfills against the interference it currently sees) from
a few deterministic starting points and keeps the best allocation it ever
visits.  Plain float lists throughout; the compiled kernel replays the
same operation order.
"""

import math
from dataclasses import dataclass

__all__ = ["SolverParams", "DEFAULT_SOLVER", "PowerAllocation", "RateContext",
           "waterfill", "allocate", "group_capacity", "member_rates", "sum_rate"]


@dataclass(frozen=True)
class SolverParams:
    damping: float = 0.5
    tol: float = 1e-8          # absolute sum-rate change per sweep
    max_sweeps: int = 200
    grid_points: int = 100     # per-member resolution of the brute-force oracle


DEFAULT_SOLVER = SolverParams()


@dataclass(frozen=True)
class RateContext:
    """Rates for one rank group: own gains plus everything treated as fixed.

    `fixed_interference[i][k]` bundles earlier-rank and out-of-coalition
    power already on channel k, as received; only same-group members are
    re-optimized against each other.
    """
    gains: tuple[tuple[float, ...], ...]
    fixed_interference: tuple[tuple[float, ...], ...]
    noise: float

    def __post_init__(self):
        if self.noise < 0:
            raise ValueError("noise must be nonnegative")
        for row in self.gains + self.fixed_interference:
            if any(v < 0 for v in row):
                raise ValueError("gains and interference must be nonnegative")

    @property
    def n_members(self) -> int:
        return len(self.gains)

    @property
    def n_channels(self) -> int:
        return len(self.gains[0])


@dataclass(frozen=True)
class PowerAllocation:
    """Per (member, channel) transmit powers in mW; each row spends one budget."""
    p: tuple[tuple[float, ...], ...]


def waterfill(ratios, p_max: float) -> list[float]:
    """Split a budget over parallel channels with gain-to-noise `ratios`.

    Closed form: channels sorted by inverse ratio, the water level for the
    m best channels is (budget + sum of their inverses)/m, and the active
    set is the largest m whose level still clears its worst member.  All
    ratios zero degenerates to an even split.
    """
    n = len(ratios)
    if n == 0:
        raise ValueError("no channels")
    inv = [(1.0 / r) if r > 0.0 else math.inf for r in ratios]
    order = sorted((j for j in range(n) if inv[j] < math.inf),
                   key=lambda j: (inv[j], j))
    if not order:
        return [p_max / n] * n
    level = 0.0
    running = 0.0
    active = 0
    for m, j in enumerate(order, start=1):
        running += inv[j]
        cand = (p_max + running) / m
        if cand > inv[j]:
            level = cand
            active = m
    powers = [0.0] * n
    for j in order[:active]:
        powers[j] = level - inv[j]
    total = sum(powers)
    if total > 0.0:
        scale = p_max / total
        for j in order[:active]:
            powers[j] *= scale
    return powers


def _sinr_denominator(p, gains, fixed, noise, i, k) -> float:
    d = noise + fixed[i][k]
    for j in range(len(p)):
        if j != i:
            d += p[j][k] * gains[j][k]
    return d


def member_rates(p, gains, fixed, noise) -> list[float]:
    """Per-member rate over every channel it powers, under allocation `p`."""
    rates = []
    for i in range(len(p)):
        r = 0.0
        for k in range(len(p[i])):
            if p[i][k] > 0.0:
                d = _sinr_denominator(p, gains, fixed, noise, i, k)
                s = p[i][k] * gains[i][k]
                r += math.log2(1.0 + s / d) if d > 0.0 else (
                    math.inf if s > 0.0 else 0.0)
        rates.append(r)
    return rates


def sum_rate(p, gains, fixed, noise) -> float:
    total = 0.0
    for i in range(len(p)):
        for k in range(len(p[i])):
            if p[i][k] > 0.0:
                d = _sinr_denominator(p, gains, fixed, noise, i, k)
                s = p[i][k] * gains[i][k]
                total += math.log2(1.0 + s / d) if d > 0.0 else (
                    math.inf if s > 0.0 else 0.0)
    return total


def _starts(gains, fixed, noise, p_max):
    n, m = len(gains), len(gains[0])
    even = [[p_max / m] * m for _ in range(n)]
    spike = []
    for i in range(n):
        best_k = 0
        best_q = -1.0
        for k in range(m):
            d = noise + fixed[i][k]
            q = gains[i][k] / d if d > 0.0 else math.inf
            if q > best_q:
                best_q, best_k = q, k
        row = [0.0] * m
        row[best_k] = p_max
        spike.append(row)
    greedy = [[0.0] * m for _ in range(n)]
    for i in range(n):
        ratios = []
        for k in range(m):
            d = _sinr_denominator(greedy, gains, fixed, noise, i, k)
            ratios.append(gains[i][k] / d if d > 0.0 else math.inf)
        greedy[i] = waterfill(ratios, p_max)
    starts = [even, spike, greedy]
    # pure one-channel-per-member corners: the strong-interference optima
    # that damped sweeps can drift away from; skipped for lone members
    # (their problem is concave, waterfilling is already exact)
    if n >= 2 and m ** n <= 16:
        for combo in range(m ** n):
            corner = []
            digits = combo
            for _ in range(n):
                row = [0.0] * m
                row[digits % m] = p_max
                corner.append(row)
                digits //= m
            starts.append(corner)
    return starts


def _lattice_two_by_two(gains, fixed, noise, p_max, grid_points):
    """Exhaustive budget-split scan for two members on two channels.

    In-group interference makes best-response equilibria undershoot the
    cooperative optimum by whole percents in strong-interference regimes;
    the 2x2 case is cheap enough to scan the same lattice the brute-force
    oracle walks.
    """
    best_rate = -math.inf
    best_p = None
    for ta in range(grid_points + 1):
        a0 = ta * p_max / grid_points
        for tb in range(grid_points + 1):
            b0 = tb * p_max / grid_points
            p = [[a0, p_max - a0], [b0, p_max - b0]]
            rate = sum_rate(p, gains, fixed, noise)
            if rate > best_rate:
                best_rate = rate
                best_p = p
    return best_rate, best_p


def _best_response(p, gains, fixed, noise, p_max, params):
    """Damped sweeps from one start; returns (best_rate, best_allocation)."""
    n, m = len(gains), len(gains[0])
    best_rate = sum_rate(p, gains, fixed, noise)
    best_p = [row[:] for row in p]
    prev = best_rate
    for _ in range(params.max_sweeps):
        for i in range(n):
            ratios = []
            for k in range(m):
                d = _sinr_denominator(p, gains, fixed, noise, i, k)
                ratios.append(gains[i][k] / d if d > 0.0 else math.inf)
            target = waterfill(ratios, p_max)
            for k in range(m):
                p[i][k] += params.damping * (target[k] - p[i][k])
        rate = sum_rate(p, gains, fixed, noise)
        if rate > best_rate:
            best_rate = rate
            best_p = [row[:] for row in p]
        if abs(rate - prev) < params.tol:
            break
        prev = rate
    return best_rate, best_p


def allocate(ctx: RateContext, p_max: float,
             params: SolverParams = DEFAULT_SOLVER) -> PowerAllocation:
    """Best allocation found over all starts; always budget-feasible."""
    gains = [list(row) for row in ctx.gains]
    fixed = [list(row) for row in ctx.fixed_interference]
    best_rate = -math.inf
    best_p = None
    for start in _starts(gains, fixed, ctx.noise, p_max):
        rate, p = _best_response([row[:] for row in start],
                                 gains, fixed, ctx.noise, p_max, params)
        if rate > best_rate:
            best_rate, best_p = rate, p
    if len(gains) == 2 and len(gains[0]) == 2:
        rate, p = _lattice_two_by_two(gains, fixed, ctx.noise, p_max,
                                      params.grid_points)
        if rate > best_rate:
            best_rate, best_p = rate, p
    return PowerAllocation(p=tuple(tuple(row) for row in best_p))


def group_capacity(alloc: PowerAllocation, ctx: RateContext,
                   member: int, channel: int) -> float:
    """Rate of one member on one channel under the given allocation."""
    p = alloc.p
    if p[member][channel] <= 0.0:
        return 0.0
    d = _sinr_denominator(p, ctx.gains, ctx.fixed_interference, ctx.noise,
                          member, channel)
    s = p[member][channel] * ctx.gains[member][channel]
    if d <= 0.0:
        return math.inf if s > 0.0 else 0.0
    return math.log2(1.0 + s / d)
