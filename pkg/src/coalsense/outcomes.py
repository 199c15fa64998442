"""Joint access outcomes of a coalition under its cooperative sensing plan.

All members scan the shared channel pool rank by rank, each following its
own ordering, and transmit on the first channel they find free.  Because
every member observes the same channel states, the per-member stops are
correlated; this module enumerates the joint outcome tuples (who ends up
on which channel, or idle) together with their exact probabilities, and
splits each tuple's transmitters into same-rank groups.
"""

from dataclasses import dataclass

from .coopsort import CoalitionPlan
from .errors import ConfigError, EnumerationLimitError

__all__ = ["IDLE", "OutcomeTuple", "OutcomeDistribution", "tuple_probability",
           "enumerate_outcomes", "rank_groups", "DEFAULT_ENUMERATION_CAP"]

IDLE = -1
DEFAULT_ENUMERATION_CAP = 10 ** 6


@dataclass(frozen=True)
class OutcomeTuple:
    """One joint access outcome: per-member channel (or IDLE) with its odds."""
    assignment: tuple[int, ...]
    prob: float
    rank_groups: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class OutcomeDistribution:
    coalition: tuple[int, ...]
    tuples: tuple[OutcomeTuple, ...]

    @property
    def total_mass(self) -> float:
        return sum(t.prob for t in self.tuples)


def _check_assignment(plan: CoalitionPlan, assignment) -> None:
    if len(assignment) != len(plan.members):
        raise ConfigError(
            f"assignment length {len(assignment)} != coalition size {len(plan.members)}")
    shared = set(plan.shared_channels)
    for ch in assignment:
        if ch != IDLE and ch not in shared:
            raise ConfigError(f"assigned channel {ch} outside the coalition pool")


def tuple_probability(plan: CoalitionPlan, assignment, thetas) -> float:
    """Exact probability of a joint assignment (0 if internally inconsistent).

    The assignment forces every selected channel free and every channel a
    member scanned past (its busy prefix; the whole pool for an idle member)
    busy.  When those two unions overlap no channel-state realization can
    produce the tuple and the probability is 0; otherwise the independent
    per-channel states factorize.
    """
    _check_assignment(plan, assignment)
    selected: set[int] = set()
    busy: set[int] = set()
    for row, ch in zip(plan.orderings, assignment):
        if ch == IDLE:
            busy.update(row)
        else:
            selected.add(ch)
            busy.update(row[:row.index(ch)])
    if selected & busy:
        return 0.0
    p = 1.0
    for ch in selected:
        p *= thetas[ch]
    for ch in busy:
        p *= 1.0 - thetas[ch]
    return p


def rank_groups(plan: CoalitionPlan, assignment) -> list[tuple[int, ...]]:
    """Group transmitting members by the rank of their selected channel."""
    _check_assignment(plan, assignment)
    by_rank: dict[int, list[int]] = {}
    for member, row, ch in zip(plan.members, plan.orderings, assignment):
        if ch == IDLE:
            continue
        by_rank.setdefault(row.index(ch), []).append(member)
    return [tuple(sorted(by_rank[r])) for r in sorted(by_rank)]


def enumerate_outcomes(plan: CoalitionPlan, thetas,
                       cap: int = DEFAULT_ENUMERATION_CAP) -> OutcomeDistribution:
    """All nonzero-probability joint outcomes, by pruned depth-first search.

    Walks members in order, choosing a stop rank (or idle) for each while
    tracking the channels forced free and forced busy so far; branches that
    need a channel in both states are cut immediately, so only consistent
    tuples are ever completed.
    """
    n_members = len(plan.members)
    n_ch = plan.n_channels
    space = (n_ch + 1) ** n_members
    if space > cap:
        raise EnumerationLimitError(
            coalition=plan.members, space_size=space, cap=cap)

    ch_index = {ch: j for j, ch in enumerate(plan.shared_channels)}
    theta = [thetas[ch] for ch in plan.shared_channels]
    # per (member, stop-rank): selected-channel bit and busy-prefix mask
    rows_bits = []
    for row in plan.orderings:
        bits = []
        prefix = 0
        for ch in row:
            b = 1 << ch_index[ch]
            bits.append((b, prefix))
            prefix |= b
        bits.append((0, prefix))  # IDLE: whole ordering busy
        rows_bits.append(bits)

    all_mask = (1 << n_ch) - 1
    found: list[OutcomeTuple] = []
    assignment = [IDLE] * n_members

    def mask_prob(sel_mask: int, busy_mask: int) -> float:
        p = 1.0
        for j in range(n_ch):
            b = 1 << j
            if sel_mask & b:
                p *= theta[j]
            elif busy_mask & b:
                p *= 1.0 - theta[j]
        return p

    def walk(m: int, sel_mask: int, busy_mask: int) -> None:
        if m == n_members:
            prob = mask_prob(sel_mask, busy_mask)
            if prob > 0.0:
                found.append(OutcomeTuple(
                    assignment=tuple(assignment), prob=prob,
                    rank_groups=tuple(rank_groups(plan, assignment))))
            return
        row = plan.orderings[m]
        for rank, (sel_b, busy_b) in enumerate(rows_bits[m]):
            if (sel_b & busy_mask) or (busy_b & sel_mask & all_mask):
                continue
            assignment[m] = row[rank] if sel_b else IDLE
            walk(m + 1, sel_mask | sel_b, busy_mask | busy_b)
        assignment[m] = IDLE

    walk(0, 0, 0)
    return OutcomeDistribution(coalition=plan.members, tuples=tuple(found))
