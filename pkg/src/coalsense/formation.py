"""Switch-based coalition formation and its stability checks.

Users hop between coalitions one at a time: a move needs strict
self-improvement, unanimous non-harm for the members being joined (both
measured against the pre-move partition), and the destination must not sit
in the mover's history of abandoned coalitions.  Passes over the users in
seeded random order repeat until one full pass makes no move; the result is
audited for Nash stability by exhaustive deviation search, and for small
networks an exhaustive set-partition sweep provides the welfare optimum.
"""

import json
from dataclasses import dataclass

from .errors import ConfigError, EnumerationLimitError, NonConvergenceError, SizeLimitError
from .prng import shuffled, stream
from .scenario import Scenario
from .valuation import PartitionEvaluator, PayoffVector

__all__ = ["Partition", "HistorySet", "SwitchRecord", "FormationTrace",
           "FormationState", "preference_value", "try_switch", "form",
           "audit_nash_stability", "optimal_partition", "set_partitions",
           "replay_trace"]


@dataclass(frozen=True)
class Partition:
    """Disjoint coalitions covering all SUs."""
    coalitions: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        seen: set[int] = set()
        for c in self.coalitions:
            if not c:
                raise ConfigError("empty coalition")
            if seen & set(c):
                raise ConfigError("overlapping coalitions")
            seen.update(c)
        if seen != set(range(max(seen) + 1)):
            raise ConfigError("partition must cover SU ids 0..N-1")

    @property
    def n_sus(self) -> int:
        return sum(len(c) for c in self.coalitions)

    def coalition_of(self, su: int) -> tuple[int, ...]:
        for c in self.coalitions:
            if su in c:
                return c
        raise KeyError(su)


class HistorySet:
    """Per-SU record of coalitions joined and later abandoned.

    Only non-singleton coalitions are stored (leaving a solo state is not
    an abandonment); membership is checked with the candidate's full member
    set, mover included.  Normally only the departing SU records the
    dissolved coalition; under cycle escalation (see form()) every former
    member does.
    """

    def __init__(self, n_sus: int):
        self._sets: list[set[frozenset]] = [set() for _ in range(n_sus)]

    def add(self, su: int, coalition) -> None:
        if len(coalition) > 1:
            self._sets[su].add(frozenset(coalition))

    def vetoed(self, su: int, coalition) -> bool:
        return frozenset(coalition) in self._sets[su]

    def reset(self) -> None:
        for s in self._sets:
            s.clear()


@dataclass(frozen=True)
class SwitchRecord:
    su: int
    from_coalition: tuple[int, ...]   # membership before leaving, mover included
    to_coalition: tuple[int, ...]     # membership after joining, mover included
    pass_index: int

    def to_json(self) -> str:
        return json.dumps({"pass": self.pass_index, "su": self.su,
                           "from": list(self.from_coalition),
                           "to": list(self.to_coalition)})


@dataclass(frozen=True)
class FormationTrace:
    records: tuple[SwitchRecord, ...]
    final_partition: tuple[tuple[int, ...], ...]
    pass_count: int
    converged: bool

    def to_jsonl(self) -> str:
        return "\n".join(r.to_json() for r in self.records)


def replay_trace(initial_partition, records) -> tuple[tuple[int, ...], ...]:
    """Apply switch records to an initial partition; returns the result."""
    parts = [list(c) for c in initial_partition]
    for rec in records:
        su = rec.su
        src = next(p for p in parts if su in p)
        src.remove(su)
        if not src:
            parts.remove(src)
        dest_members = [m for m in rec.to_coalition if m != su]
        if dest_members:
            dest = next(p for p in parts if set(p) == set(dest_members))
            dest.append(su)
            dest.sort()
        else:
            parts.append([su])
    return tuple(tuple(sorted(p)) for p in parts)


class FormationState:
    """Mutable formation-run state: partition, history, cached payoffs."""

    def __init__(self, scenario: Scenario, partition, evaluator=None):
        self.scenario = scenario
        self.evaluator = evaluator or PartitionEvaluator(scenario)
        self.partition: list[tuple[int, ...]] = [tuple(sorted(c)) for c in partition]
        self.history = HistorySet(scenario.n_sus)
        self.values: dict[frozenset, PayoffVector] = {}
        self.pass_index = 0
        self.records: list[SwitchRecord] = []
        self.escalated = False
        self.refresh_values()

    def refresh_values(self) -> None:
        ev = self.evaluator
        self.values = {}
        for c in self.partition:
            ext = ev.external_for(c, self.partition)
            self.values[frozenset(c)] = ev.value(c, ext)

    def payoff(self, su: int) -> float:
        for key, vec in self.values.items():
            if su in key:
                return vec.payoff_of(su)
        raise KeyError(su)


def preference_value(scenario: Scenario, su: int, candidate_coalition,
                     candidate_partition, history: HistorySet,
                     current_payoffs=None, evaluator=None) -> float:
    """Worth of a candidate coalition to `su` under the switch rule.

    Going solo is always worth its payoff.  Joining others requires the
    candidate not be in `su`'s history and that no incumbent end up below
    its payoff in the pre-move partition (`current_payoffs`, a mapping
    su -> payoff).  A candidate whose outcome space would blow the
    enumeration cap is vetoed outright.
    """
    candidate = tuple(sorted(candidate_coalition))
    if su not in candidate:
        raise ConfigError(f"SU {su} not in candidate coalition {candidate}")
    ev = evaluator or PartitionEvaluator(scenario)
    if not ev.within_cap(candidate):
        return 0.0
    ext = ev.external_for(candidate, candidate_partition)
    vec = ev.value(candidate, ext)
    if len(candidate) == 1:
        return vec.payoff_of(su)
    if history.vetoed(su, candidate):
        return 0.0
    baseline = current_payoffs or {}
    for j in candidate:
        if j == su:
            continue
        if vec.payoff_of(j) < baseline.get(j, 0.0):
            return 0.0
    return vec.payoff_of(su)


def _candidate_partition(partition, su, src_idx, dest_idx):
    """Partition after moving su from coalition src_idx to dest_idx
    (dest_idx None = go solo); returns (new partition list, new coalition)."""
    parts = [list(c) for c in partition]
    parts[src_idx].remove(su)
    if dest_idx is None:
        parts.append([su])
        new_c = (su,)
    else:
        parts[dest_idx].append(su)
        parts[dest_idx].sort()
        new_c = tuple(parts[dest_idx])
    parts = [p for p in parts if p]
    return [tuple(p) for p in parts], new_c


def try_switch(scenario: Scenario, state: FormationState, su: int):
    """First profitable destination in ascending coalition order, else None.

    Executes the move when found: updates partition, history (the departed
    coalition, if it had company), payoff caches, and appends a record.
    """
    src_idx = next(i for i, c in enumerate(state.partition) if su in c)
    src = state.partition[src_idx]
    current_value = state.payoff(su)
    current_payoffs = {}
    for c in state.partition:
        vec = state.values[frozenset(c)]
        for member, pay in zip(vec.coalition, vec.payoffs):
            current_payoffs[member] = pay

    destinations = [i for i in range(len(state.partition)) if i != src_idx]
    options: list = list(destinations)
    if len(src) > 1:
        options.append(None)  # breaking away to a fresh singleton
    for dest_idx in options:
        new_parts, candidate = _candidate_partition(
            state.partition, su, src_idx, dest_idx)
        phi = preference_value(scenario, su, candidate, new_parts,
                               state.history, current_payoffs,
                               evaluator=state.evaluator)
        if phi > current_value:
            # Mover-only recording admits rotating-membership cycles where
            # each mover's destination was broken up by somebody else and is
            # therefore never vetoed; once form() flags such churn, every
            # former member remembers the dissolved coalition.
            if state.escalated:
                for member in src:
                    state.history.add(member, src)
            else:
                state.history.add(su, src)
            state.partition = new_parts
            state.refresh_values()
            record = SwitchRecord(su=su, from_coalition=src,
                                  to_coalition=candidate,
                                  pass_index=state.pass_index)
            state.records.append(record)
            return state.partition, record
    return None


def form(scenario: Scenario, initial_partition=None, seed: int = 0,
         max_passes: int | None = None, evaluator=None,
         settle_fresh: bool = True) -> FormationTrace:
    """Run switch passes until a full pass moves nobody.

    SU order is a fresh seeded permutation each pass.  Visited partitions
    are counted; a third visit to the same partition is proof of churn, at
    which point history recording escalates to all members of a dissolved
    coalition (breaking rotating-membership cycles that mover-only records
    can never veto).

    With settle_fresh (the default), a quiet pass reached while history
    vetoes had accumulated only clears the history and play continues;
    ending on a first-time quiet pass under an empty history is Nash
    stability outright.  Random orders can still trap play orbiting a
    non-stable attractor (quiet, deviate once history clears, fall back).
    Seeing the same quiet partition a second time across resets detects
    the orbit, and a systematic improving-move search from the initial
    partition takes over; if it finds a stable sink the returned trace is
    the switch path to it, and only if no sink is reachable is the
    recurrent operating point accepted as final.  With settle_fresh=False
    a single quiet pass ends the run, history-locked or not; this models
    one re-formation window of a periodically adapting network, whose
    history is reset at the next period anyway.  The pass guard (default
    10*N^2) turns anything still oscillating into a diagnostic error
    carrying the partial trace.
    """
    n = scenario.n_sus
    if initial_partition is None:
        initial_partition = [(i,) for i in range(n)]
    state = FormationState(scenario, initial_partition, evaluator=evaluator)
    rng = stream(scenario.seed if seed is None else seed, "formation")
    limit = max_passes if max_passes is not None else max(1, 10 * n * n)
    visits: dict[tuple, int] = {}
    quiet_seen: set[tuple] = set()   # spans resets on purpose
    switched_since_reset = False
    for pass_idx in range(limit):
        state.pass_index = pass_idx
        moved = 0
        for su in shuffled(range(n), rng):
            if try_switch(scenario, state, su) is not None:
                moved += 1
                key = tuple(sorted(state.partition))
                visits[key] = visits.get(key, 0) + 1
                if visits[key] >= 3:
                    state.escalated = True
        if moved == 0:
            key = tuple(sorted(state.partition))
            if switched_since_reset and settle_fresh:
                if key not in quiet_seen:
                    # quiet only under accumulated vetoes; retry from scratch
                    quiet_seen.add(key)
                    state.history.reset()
                    state.escalated = False
                    visits.clear()
                    switched_since_reset = False
                    continue
                # same quiet partition twice across resets: play is trapped
                # orbiting a non-stable attractor, so walk the improving-move
                # graph from the start systematically instead
                found = _search_sink(scenario, initial_partition,
                                     state.evaluator)
                if found is not None:
                    sink_records, sink = found
                    return FormationTrace(records=tuple(sink_records),
                                          final_partition=sink,
                                          pass_count=pass_idx + 1,
                                          converged=True)
            return FormationTrace(records=tuple(state.records),
                                  final_partition=tuple(state.partition),
                                  pass_count=pass_idx + 1, converged=True)
        switched_since_reset = True
    raise NonConvergenceError(
        f"no stable partition within {limit} passes",
        trace=FormationTrace(records=tuple(state.records),
                             final_partition=tuple(state.partition),
                             pass_count=limit, converged=False))


def _improving_moves(scenario: Scenario, parts, evaluator):
    """All strict-improvement switches from `parts` under a blank history.

    Returns (gain, su, new_partition, candidate_coalition) tuples in
    su-then-destination order.  The stability audit and the sink search
    both use this enumeration, so a partition with no moves here is
    Nash-stable by the audit's own definition.
    """
    ev = evaluator
    fresh = HistorySet(scenario.n_sus)
    values = {}
    for c in parts:
        ext = ev.external_for(c, parts)
        values[frozenset(c)] = ev.value(c, ext)
    current_payoffs = {}
    for c in parts:
        vec = values[frozenset(c)]
        for member, pay in zip(vec.coalition, vec.payoffs):
            current_payoffs[member] = pay
    moves = []
    for su in range(scenario.n_sus):
        src_idx = next(i for i, c in enumerate(parts) if su in c)
        options: list = [i for i in range(len(parts)) if i != src_idx]
        if len(parts[src_idx]) > 1:
            options.append(None)
        for dest_idx in options:
            new_parts, candidate = _candidate_partition(parts, su, src_idx,
                                                        dest_idx)
            phi = preference_value(scenario, su, candidate, new_parts, fresh,
                                   current_payoffs, evaluator=ev)
            if phi > current_payoffs[su]:
                moves.append((phi - current_payoffs[su], su, new_parts,
                              candidate))
    return moves


def audit_nash_stability(scenario: Scenario, partition, evaluator=None):
    """Exhaustive unilateral-deviation check with a blank history.

    Returns (stable, violations) where violations lists every
    (su, destination coalition) offering a strict improvement.
    """
    ev = evaluator or PartitionEvaluator(scenario)
    parts = [tuple(sorted(c)) for c in partition]
    moves = _improving_moves(scenario, parts, ev)
    violations = [(su, candidate) for _, su, _, candidate in moves]
    return (len(violations) == 0), violations


def _canon(parts) -> tuple:
    return tuple(sorted(tuple(sorted(c)) for c in parts))


def _search_sink(scenario: Scenario, initial_partition, evaluator,
                 budget: int = 20000):
    """Depth-first search of the improving-move graph for a stable sink.

    Random-order play can trap itself in closed cycle regions with no
    stable partition inside even when one is reachable from the start;
    this walks the graph systematically (largest gain first, partitions
    never revisited) and returns the full switch path to the first sink
    found, or None if the budget runs out or the reachable component has
    no sink at all.
    """
    root = _canon(initial_partition)
    visited = {root}
    parent: dict[tuple, tuple] = {}
    stack = [root]
    expanded = 0
    goal = None
    while stack and expanded < budget:
        node = stack.pop()
        moves = _improving_moves(scenario, list(node), evaluator)
        expanded += 1
        if not moves:
            goal = node
            break
        moves.sort(key=lambda m: (-m[0], m[1], _canon(m[2])))
        for gain, su, new_parts, candidate in reversed(moves):
            key = _canon(new_parts)
            if key not in visited:
                visited.add(key)
                parent[key] = (node, su)
                stack.append(key)
    if goal is None:
        return None
    path = []
    node = goal
    while node != root:
        prev, su = parent[node]
        path.append((prev, su, node))
        node = prev
    path.reverse()
    records = []
    for depth, (prev, su, nxt) in enumerate(path):
        src = next(c for c in prev if su in c)
        dst = next(c for c in nxt if su in c)
        records.append(SwitchRecord(su=su, from_coalition=src,
                                    to_coalition=dst, pass_index=depth))
    return records, goal


def set_partitions(items):
    """Every partition of `items` into nonempty blocks, deterministically."""
    items = list(items)
    if not items:
        yield []
        return
    head, rest = items[0], items[1:]
    for sub in set_partitions(rest):
        for i in range(len(sub)):
            yield sub[:i] + [[head] + sub[i]] + sub[i + 1:]
        yield [[head]] + sub


MAX_EXHAUSTIVE_N = 8


def optimal_partition(scenario: Scenario, evaluator=None):
    """Welfare-maximizing partition by exhaustive search (N <= 8).

    Partitions containing a coalition past the enumeration cap are skipped;
    they cannot be valued, and the formation engine can never produce them
    either, so dominance comparisons stay meaningful.
    """
    n = scenario.n_sus
    if n > MAX_EXHAUSTIVE_N:
        raise SizeLimitError(
            f"exhaustive search limited to N <= {MAX_EXHAUSTIVE_N}, got {n}")
    ev = evaluator or PartitionEvaluator(scenario)
    best = None
    best_welfare = None
    for parts in set_partitions(range(n)):
        canon = [tuple(sorted(c)) for c in parts]
        try:
            welfare = 0.0
            for c in canon:
                ext = ev.external_for(c, canon)
                welfare += sum(ev.value(c, ext).payoffs)
        except EnumerationLimitError:
            continue
        if best_welfare is None or welfare > best_welfare:
            best_welfare = welfare
            best = tuple(canon)
    return best, best_welfare
