"""Cooperative channel sorting for a coalition.

Members pool their known channels and then jointly assign every member one
channel per sensing rank, trying to keep any two members off the same
channel at the same rank.  Per rank, everyone proposes its highest-weight
unused channel; unique proposals stick, contested channels go to the member
weighting them highest, and losers re-propose among channels nobody has
fixed at this rank yet.  Only when that restricted set is empty does a
member knowingly collide, taking its best remaining channel; such picks are
recorded so tests can verify every same-rank collision was forced.
"""

from collections import Counter
from dataclasses import dataclass

from .errors import ConfigError
from .noncoop import channel_weight
from .scenario import Scenario

__all__ = ["CoalitionPlan", "ForcedPick", "ConflictPick", "build_plan",
           "collision_profile"]


@dataclass(frozen=True)
class ForcedPick:
    """A member took an already-fixed channel because nothing else was left.

    `rank_selected` snapshots the channels fixed at this rank at pick time;
    the restricted set was empty exactly when it covers everything the
    member had not used at earlier ranks.
    """
    member: int
    rank: int
    channel: int
    rank_selected: tuple[int, ...]


@dataclass(frozen=True)
class ConflictPick:
    """Resolution of one contested proposal: `winner` out of `group`."""
    rank: int
    channel: int
    winner: int
    group: tuple[int, ...]


@dataclass(frozen=True)
class CoalitionPlan:
    """Cooperative sensing orders for one coalition.

    `orderings[i]` is the full permutation of `shared_channels` that
    `members[i]` will sense, rank by rank.
    """
    members: tuple[int, ...]
    shared_channels: tuple[int, ...]
    orderings: tuple[tuple[int, ...], ...]
    forced: tuple[ForcedPick, ...] = ()
    conflicts: tuple[ConflictPick, ...] = ()

    def ordering(self, member: int) -> tuple[int, ...]:
        return self.orderings[self.members.index(member)]

    @property
    def n_channels(self) -> int:
        return len(self.shared_channels)


def build_plan(scenario: Scenario, members) -> CoalitionPlan:
    """Run the joint sorting procedure for `members` over their channel union."""
    members = tuple(sorted(members))
    if not members:
        raise ConfigError("empty coalition")
    shared = sorted(set().union(*(scenario.sus[i].known_channels for i in members)))
    n_ranks = len(shared)
    weight = {(i, k): channel_weight(scenario.channels[k].theta, scenario.gains.g[i, k])
              for i in members for k in shared}

    rows = {i: [] for i in members}        # channels fixed so far, by rank
    used = {i: set() for i in members}     # same content as rows[i], as a set
    forced_picks = []
    conflict_picks = []

    for rank in range(n_ranks):
        fixed_at_rank = set()
        unassigned = list(members)
        first_round = True
        for _ in range(n_ranks * len(members) + 1):
            if not unassigned:
                break
            proposals: dict[int, list[int]] = {}
            for i in unassigned:
                own_remaining = [k for k in shared if k not in used[i]]
                if first_round:
                    pool = own_remaining
                else:
                    pool = [k for k in own_remaining if k not in fixed_at_rank]
                    if not pool:
                        # forced collision: grab the best channel regardless
                        pick = max(own_remaining, key=lambda k: (weight[i, k], -k))
                        forced_picks.append(ForcedPick(
                            member=i, rank=rank, channel=pick,
                            rank_selected=tuple(sorted(fixed_at_rank))))
                        rows[i].append(pick)
                        used[i].add(pick)
                        fixed_at_rank.add(pick)  # no-op: pick is already fixed
                        continue
                pick = max(pool, key=lambda k: (weight[i, k], -k))
                proposals.setdefault(pick, []).append(i)
            for ch in sorted(proposals):
                group = proposals[ch]
                if len(group) == 1:
                    winner = group[0]
                else:
                    winner = max(group, key=lambda i: (weight[i, ch], -i))
                    conflict_picks.append(ConflictPick(
                        rank=rank, channel=ch, winner=winner, group=tuple(group)))
                rows[winner].append(ch)
                used[winner].add(ch)
                fixed_at_rank.add(ch)
            unassigned = [i for i in unassigned if len(rows[i]) == rank]
            first_round = False
        else:
            raise RuntimeError(f"rank {rank}: assignment loop exceeded its bound")

    return CoalitionPlan(
        members=members,
        shared_channels=tuple(shared),
        orderings=tuple(tuple(rows[i]) for i in members),
        forced=tuple(forced_picks),
        conflicts=tuple(conflict_picks),
    )


def collision_profile(plan: CoalitionPlan) -> list[list[int]]:
    """Per rank, the channels chosen by more than one member (sorted)."""
    profile = []
    for rank in range(plan.n_channels):
        counts = Counter(row[rank] for row in plan.orderings)
        profile.append(sorted(ch for ch, n in counts.items() if n > 1))
    return profile
