"""Time-evolving runs: mobility, traffic changes, periodic re-formation.

The world advances in epochs of `eta` seconds.  At every boundary the SUs
take a straight step in a freshly drawn heading (reflecting off the
deployment square's walls), channel availabilities may be re-drawn on
traffic boundaries, gains are recomputed from the new geometry, histories
are cleared, and coalition formation re-runs from the partition carried
over.  Per-epoch switch counts and coalition birth/death times feed the
adaptation metrics.
"""

import json
import math
from dataclasses import dataclass

from . import prng
from .errors import ConfigError
from .formation import form
from .scenario import Scenario, with_world
from .valuation import PartitionEvaluator

__all__ = ["DynamicsParams", "EpochRecord", "EpochMetrics", "run_dynamics",
           "lifespan_stats", "switch_frequency"]


@dataclass(frozen=True)
class DynamicsParams:
    eta_seconds: float = 30.0
    duration_seconds: float = 150.0
    speed_kmh: float = 36.0
    traffic_redraw_seconds: float = 0.0   # 0 = availabilities never change
    freeze_fading: bool = True

    def __post_init__(self):
        if self.eta_seconds <= 0:
            raise ConfigError("eta_seconds must be positive")
        if self.duration_seconds < self.eta_seconds:
            raise ConfigError("duration_seconds must cover at least one epoch")
        if self.speed_kmh < 0:
            raise ConfigError("speed_kmh must be nonnegative")


@dataclass(frozen=True)
class EpochRecord:
    """State after one epoch's re-formation."""
    t: float
    partition: tuple[tuple[int, ...], ...]
    switches: int
    births: tuple[tuple[int, ...], ...]
    deaths: tuple[tuple[int, ...], ...]

    def to_json(self) -> str:
        return json.dumps({
            "t": self.t,
            "partition": [list(c) for c in self.partition],
            "switches": self.switches,
            "births": [list(c) for c in self.births],
            "deaths": [list(c) for c in self.deaths],
        })


@dataclass(frozen=True)
class EpochMetrics:
    """Aggregates over a run; index 0 is the initial formation epoch."""
    switch_counts: tuple[int, ...]
    lifespans: tuple[float, ...]
    duration: float
    eta: float

    @property
    def n_epochs(self) -> int:
        return len(self.switch_counts)


def _reflect(v: float, lo: float, hi: float) -> float:
    span = hi - lo
    w = (v - lo) % (2.0 * span)
    return lo + (w if w <= span else 2.0 * span - w)


def run_dynamics(scenario: Scenario, params: DynamicsParams,
                 seed: int | None = None):
    """Simulate epochs of movement, traffic change, and re-formation.

    Returns (records, metrics): one EpochRecord per settled epoch and the
    aggregated EpochMetrics.  Fully deterministic given the scenario and
    seed (defaults to the scenario's own).
    """
    base_seed = scenario.seed if seed is None else seed
    rng = prng.stream(base_seed, "dynamics")
    half = scenario.phys.area_side / 2.0
    step = params.speed_kmh / 3.6 * params.eta_seconds
    n = scenario.n_sus

    world = scenario
    positions = [su.position for su in scenario.sus]
    thetas = [c.theta for c in scenario.channels]
    fading = scenario.gains.a

    records: list[EpochRecord] = []
    switch_counts: list[int] = []
    birth_time: dict[frozenset, float] = {}
    lifespans: list[float] = []

    def settle(t: float, partition, n_switches: int) -> None:
        current = {frozenset(c) for c in partition}
        deaths = []
        for c in sorted(birth_time, key=lambda s: tuple(sorted(s))):
            if c not in current:
                lifespans.append(t - birth_time[c])
                deaths.append(tuple(sorted(c)))
                del birth_time[c]
        births = []
        for c in sorted(current, key=lambda s: tuple(sorted(s))):
            if c not in birth_time:
                birth_time[c] = t
                births.append(tuple(sorted(c)))
        records.append(EpochRecord(
            t=t, partition=tuple(tuple(c) for c in partition),
            switches=n_switches, births=tuple(births), deaths=tuple(deaths)))
        switch_counts.append(n_switches)

    # initial formation from singletons at t = 0; each epoch is one
    # re-formation window, so no fresh-history settling within an epoch
    form_seed = int(rng.random() * 2 ** 31)
    trace = form(world, seed=form_seed, evaluator=PartitionEvaluator(world),
                 settle_fresh=False)
    partition = trace.final_partition
    settle(0.0, partition, len(trace.records))

    next_traffic = params.traffic_redraw_seconds or math.inf
    n_boundaries = int(params.duration_seconds // params.eta_seconds)
    for b in range(1, n_boundaries + 1):
        t = b * params.eta_seconds
        # one straight step per epoch, new heading each time
        new_positions = []
        for x, y in positions:
            heading = prng.uniform(rng, 0.0, 2.0 * math.pi)
            nx = _reflect(x + step * math.cos(heading), -half, half)
            ny = _reflect(y + step * math.sin(heading), -half, half)
            new_positions.append((nx, ny))
        positions = new_positions
        if t + 1e-9 >= next_traffic:
            thetas = [rng.random() for _ in range(scenario.n_channels)]
            next_traffic += params.traffic_redraw_seconds
        if not params.freeze_fading:
            fading = [[prng.rayleigh(rng) for _ in range(scenario.n_channels)]
                      for _ in range(n)]
        world = with_world(scenario, positions=positions, thetas=thetas,
                           a=fading)
        form_seed = int(rng.random() * 2 ** 31)
        trace = form(world, initial_partition=partition, seed=form_seed,
                     evaluator=PartitionEvaluator(world), settle_fresh=False)
        partition = trace.final_partition
        settle(t, partition, len(trace.records))

    # run-end survivors close their books at the horizon
    for c in sorted(birth_time, key=lambda s: tuple(sorted(s))):
        lifespans.append(params.duration_seconds - birth_time[c])

    metrics = EpochMetrics(switch_counts=tuple(switch_counts),
                           lifespans=tuple(lifespans),
                           duration=params.duration_seconds,
                           eta=params.eta_seconds)
    return records, metrics


def lifespan_stats(metrics: EpochMetrics):
    """Mean coalition lifespan in seconds; None when nothing was tracked."""
    if not metrics.lifespans:
        return None
    return sum(metrics.lifespans) / len(metrics.lifespans)


def switch_frequency(metrics: EpochMetrics):
    """Mean switches per minute over the adaptation epochs (the initial
    formation is excluded: it builds the network rather than adapts it)."""
    adapt = metrics.switch_counts[1:]
    if not adapt:
        return None
    minutes = len(adapt) * metrics.eta / 60.0
    return sum(adapt) / minutes
