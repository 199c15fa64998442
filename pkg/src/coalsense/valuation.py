"""Coalition values inside a partition.

A coalition's worth is the vector of member utilities: expected capacity
over the joint access outcomes (power solved per same-rank group, earlier
groups fixed for later ones) times the slot fraction left after sensing.
The partition enters through external interference: every other coalition
contributes its members' expected on-air power, estimated one-shot from
their access marginals at full budget.  An optional damped fixed-point
refinement replaces the full-power marginals with allocation-aware
expected powers.

`PartitionEvaluator` caches plans, marginals, sensing times, and valuations
so the formation loop can probe many candidate moves cheaply.
"""

from dataclasses import dataclass

import numpy as np

from . import backend
from .coopsort import CoalitionPlan, build_plan
from .errors import ConfigError, EnumerationLimitError
from .noncoop import OrderedChannelList, sensing_time
from .outcomes import DEFAULT_ENUMERATION_CAP
from .power import DEFAULT_SOLVER, SolverParams
from .scenario import Scenario

__all__ = ["PayoffVector", "PartitionContext", "PartitionEvaluator",
           "coalition_value", "external_interference", "evaluate_partition"]


@dataclass(frozen=True)
class PayoffVector:
    """Per-member utilities of one coalition, aligned with `coalition`."""
    coalition: tuple[int, ...]
    payoffs: tuple[float, ...]

    def payoff_of(self, su: int) -> float:
        return self.payoffs[self.coalition.index(su)]


@dataclass(frozen=True)
class PartitionContext:
    """A partition with per-coalition plans and external interference."""
    partition: tuple[tuple[int, ...], ...]
    plans: tuple[CoalitionPlan, ...]
    ext_interference: tuple[tuple[float, ...], ...]


def _check_partition(scenario: Scenario, partition) -> tuple[tuple[int, ...], ...]:
    coalitions = tuple(tuple(sorted(c)) for c in partition)
    seen: set[int] = set()
    for c in coalitions:
        if not c:
            raise ConfigError("empty coalition in partition")
        if seen & set(c):
            raise ConfigError("partition coalitions overlap")
        seen.update(c)
    if seen != set(range(scenario.n_sus)):
        raise ConfigError("partition does not cover all SUs")
    return coalitions


class PartitionEvaluator:
    """Valuation engine with caching, bound to one scenario.

    Caches are safe because every cached quantity depends only on the
    coalition's own membership (plans, sensing times, access marginals) or
    on membership plus the exact external interference vector (values).
    """

    def __init__(self, scenario: Scenario, solver: SolverParams = DEFAULT_SOLVER,
                 cap: int = DEFAULT_ENUMERATION_CAP):
        self.scenario = scenario
        self.solver = solver
        self.cap = cap
        self._thetas = scenario.thetas
        self._plans: dict[frozenset, CoalitionPlan] = {}
        self._contribs: dict[frozenset, np.ndarray] = {}
        self._taus: dict[frozenset, tuple[float, ...]] = {}
        self._values: dict[tuple, tuple] = {}
        self.kernel_calls = 0

    def plan(self, members) -> CoalitionPlan:
        key = frozenset(members)
        plan = self._plans.get(key)
        if plan is None:
            plan = build_plan(self.scenario, members)
            self._plans[key] = plan
        return plan

    def space_size(self, members) -> int:
        plan = self.plan(members)
        return (plan.n_channels + 1) ** len(plan.members)

    def check_cap(self, members) -> None:
        size = self.space_size(members)
        if size > self.cap:
            raise EnumerationLimitError(coalition=members, space_size=size,
                                        cap=self.cap)

    def within_cap(self, members) -> bool:
        return self.space_size(members) <= self.cap

    def _kernel(self, plan: CoalitionPlan, external, solve_power=True):
        local = {ch: j for j, ch in enumerate(plan.shared_channels)}
        orderings = [tuple(local[ch] for ch in row) for row in plan.orderings]
        g = self.scenario.gains.g
        gains = [[float(g[i, ch]) for ch in plan.shared_channels]
                 for i in plan.members]
        thetas = [self._thetas[ch] for ch in plan.shared_channels]
        ext = [float(external[ch]) for ch in plan.shared_channels]
        phys = self.scenario.phys
        self.kernel_calls += 1
        return backend.evaluate_coalition(
            orderings, thetas, gains, ext, phys.noise, phys.p_max,
            damping=self.solver.damping, tol=self.solver.tol,
            max_sweeps=self.solver.max_sweeps, solve_power=solve_power)

    def contrib(self, members) -> np.ndarray:
        """Expected full-power interference this coalition puts on each
        channel at the receiver: sum over members of gain * budget * the
        member's probability of transmitting there."""
        key = frozenset(members)
        cached = self._contribs.get(key)
        if cached is not None:
            return cached
        plan = self.plan(members)
        res = self._kernel(plan, np.zeros(self.scenario.n_channels),
                           solve_power=False)
        g = self.scenario.gains.g
        p_max = self.scenario.phys.p_max
        out = np.zeros(self.scenario.n_channels)
        for idx, i in enumerate(plan.members):
            for j, ch in enumerate(plan.shared_channels):
                out[ch] += g[i, ch] * p_max * res["sel_prob"][idx][j]
        self._contribs[key] = out
        return out

    def taus(self, members) -> tuple[float, ...]:
        key = frozenset(members)
        cached = self._taus.get(key)
        if cached is not None:
            return cached
        plan = self.plan(members)
        alpha = self.scenario.phys.alpha
        out = tuple(
            sensing_time(_as_ordering(i, row), self._thetas, alpha).tau
            for i, row in zip(plan.members, plan.orderings))
        self._taus[key] = out
        return out

    def external_for(self, coalition, partition) -> np.ndarray:
        """Sum of the other coalitions' contributions, in partition order."""
        target = frozenset(coalition)
        ext = np.zeros(self.scenario.n_channels)
        for other in partition:
            if frozenset(other) != target:
                ext += self.contrib(other)
        return ext

    def _value_key(self, coalition, external):
        # interference outside the coalition's own pool cannot change its
        # value, so the cache keys on the restriction only
        plan = self.plan(coalition)
        return (frozenset(coalition),
                tuple(float(external[ch]) for ch in plan.shared_channels))

    def value(self, coalition, external) -> PayoffVector:
        """Member payoffs of `coalition` under the given external
        interference vector (indexed by global channel id)."""
        self.check_cap(coalition)
        key = self._value_key(coalition, external)
        cached = self._values.get(key)
        if cached is not None:
            return cached[0]
        plan = self.plan(coalition)
        res = self._kernel(plan, external)
        taus = self.taus(coalition)
        payoffs = tuple(
            cap * max(0.0, 1.0 - tau)
            for cap, tau in zip(res["exp_capacity"], taus))
        vec = PayoffVector(coalition=plan.members, payoffs=payoffs)
        self._values[key] = (vec, res["exp_power"])
        return vec

    def value_with_powers(self, coalition, external):
        """Like value(), also returning expected per-(member, local channel)
        powers for the fixed-point refinement."""
        vec = self.value(coalition, external)
        return vec, self._values[self._value_key(coalition, external)][1]

    def partition_values(self, partition) -> dict[frozenset, PayoffVector]:
        canon = _check_partition(self.scenario, partition)
        out = {}
        for coalition in canon:
            ext = self.external_for(coalition, canon)
            out[frozenset(coalition)] = self.value(coalition, ext)
        return out


def _as_ordering(su_id, row):
    return OrderedChannelList(su_id=su_id, channels=tuple(row))


def external_interference(scenario: Scenario, partition, plans=None):
    """One-shot external interference per coalition (global channel axis)."""
    canon = _check_partition(scenario, partition)
    ev = PartitionEvaluator(scenario)
    if plans:
        for coalition, plan in zip(canon, plans):
            ev._plans[frozenset(coalition)] = plan
    return tuple(tuple(float(x) for x in ev.external_for(c, canon))
                 for c in canon)


def coalition_value(scenario: Scenario, ctx: PartitionContext,
                    coalition) -> PayoffVector:
    """Payoffs of one coalition inside a prepared partition context."""
    target = tuple(sorted(coalition))
    for c, ext in zip(ctx.partition, ctx.ext_interference):
        if c == target:
            ev = PartitionEvaluator(scenario)
            for cc, plan in zip(ctx.partition, ctx.plans):
                ev._plans[frozenset(cc)] = plan
            return ev.value(target, np.asarray(ext))
    raise ConfigError(f"coalition {target} not in the context partition")


def build_context(scenario: Scenario, partition) -> PartitionContext:
    canon = _check_partition(scenario, partition)
    ev = PartitionEvaluator(scenario)
    plans = tuple(ev.plan(c) for c in canon)
    ext = tuple(tuple(float(x) for x in ev.external_for(c, canon))
                for c in canon)
    return PartitionContext(partition=canon, plans=plans, ext_interference=ext)


def evaluate_partition(scenario: Scenario, partition, refine_rounds: int = 0,
                       refine_damping: float = 0.5,
                       solver: SolverParams = DEFAULT_SOLVER,
                       cap: int = DEFAULT_ENUMERATION_CAP) -> dict[int, float]:
    """Full payoff profile of a partition, SU id -> utility.

    Default is the one-shot interference estimate.  With refine_rounds > 0
    the estimate is re-derived from each coalition's expected allocated
    powers and damped toward the previous vector, up to the given rounds.
    """
    ev = PartitionEvaluator(scenario, solver=solver, cap=cap)
    canon = _check_partition(scenario, partition)
    exts = {frozenset(c): ev.external_for(c, canon) for c in canon}
    profile: dict[int, float] = {}
    powers: dict[frozenset, list] = {}
    for coalition in canon:
        vec, pw = ev.value_with_powers(coalition, exts[frozenset(coalition)])
        powers[frozenset(coalition)] = pw
        for su, pay in zip(vec.coalition, vec.payoffs):
            profile[su] = pay
    g = scenario.gains.g
    for _ in range(refine_rounds):
        contribs = {}
        for coalition in canon:
            key = frozenset(coalition)
            plan = ev.plan(coalition)
            vec = np.zeros(scenario.n_channels)
            for idx, i in enumerate(plan.members):
                for j, ch in enumerate(plan.shared_channels):
                    vec[ch] += g[i, ch] * powers[key][idx][j]
            contribs[key] = vec
        changed = False
        for coalition in canon:
            key = frozenset(coalition)
            est = np.zeros(scenario.n_channels)
            for other in canon:
                if frozenset(other) != key:
                    est += contribs[frozenset(other)]
            new_ext = (1.0 - refine_damping) * exts[key] + refine_damping * est
            if not np.allclose(new_ext, exts[key], rtol=0, atol=1e-15):
                changed = True
            exts[key] = new_ext
        for coalition in canon:
            vec, pw = ev.value_with_powers(coalition, exts[frozenset(coalition)])
            powers[frozenset(coalition)] = pw
            for su, pay in zip(vec.coalition, vec.payoffs):
                profile[su] = pay
        if not changed:
            break
    return profile
