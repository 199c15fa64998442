"""Non-cooperative sensing and access: weights, orderings, sensing time,
average capacity under measured average interference, and the per-SU utility.

An SU senses its known channels sequentially in decreasing weight order and
transmits on the first one found free.  All capacities are log2, in
bits/s/Hz; utilities multiply capacity by the slot fraction left after
sensing.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .scenario import Scenario

__all__ = [
    "OrderedChannelList", "SensingReport", "channel_weight", "noncoop_order",
    "sensing_time", "access_probabilities", "noncoop_capacity",
    "noncoop_utility", "noncoop_external_interference",
]


@dataclass(frozen=True)
class OrderedChannelList:
    """Channels of one SU in the order they will be sensed."""
    su_id: int
    channels: tuple[int, ...]

    def __post_init__(self):
        if not self.channels:
            raise ConfigError(f"SU {self.su_id}: empty channel ordering")
        if len(set(self.channels)) != len(self.channels):
            raise ConfigError(f"SU {self.su_id}: duplicate channels in ordering")


@dataclass(frozen=True)
class SensingReport:
    """Average fraction of a slot spent before transmission can start."""
    tau: float


def channel_weight(theta: float, gain: float) -> float:
    """Sensing priority of a channel: availability times gain."""
    return theta * gain


def noncoop_order(scenario: Scenario, su_id: int) -> OrderedChannelList:
    """Known channels sorted by strictly descending weight, ties broken by
    ascending channel id."""
    su = scenario.sus[su_id]
    if not su.known_channels:
        raise ConfigError(f"SU {su_id} knows no channels")
    weights = {k: channel_weight(scenario.channels[k].theta, scenario.gains.g[su_id, k])
               for k in su.known_channels}
    ordered = sorted(su.known_channels, key=lambda k: (-weights[k], k))
    return OrderedChannelList(su_id=su_id, channels=tuple(ordered))


def sensing_time(ordered: OrderedChannelList, thetas, alpha: float) -> SensingReport:
    """Expected sensing fraction: each position j costs j*alpha when reached
    and found free; an entirely busy list idles the whole slot."""
    tau = 0.0
    prefix_busy = 1.0
    for j, k in enumerate(ordered.channels, start=1):
        tau += j * alpha * thetas[k] * prefix_busy
        prefix_busy *= 1.0 - thetas[k]
    return SensingReport(tau=tau + prefix_busy)


def access_probabilities(ordered: OrderedChannelList, thetas) -> list[float]:
    """Probability of transmitting on each position's channel (first one
    found free).  The complement of the sum is the all-busy idle mass."""
    probs = []
    prefix_busy = 1.0
    for k in ordered.channels:
        probs.append(thetas[k] * prefix_busy)
        prefix_busy *= 1.0 - thetas[k]
    return probs


def noncoop_capacity(scenario: Scenario, su_id: int, ordered: OrderedChannelList,
                     ext_interference) -> float:
    """Average capacity: access-probability-weighted log2(1 + SINR) with the
    measured average interference per channel (mW, indexed by channel id)."""
    phys = scenario.phys
    thetas = [c.theta for c in scenario.channels]
    probs = access_probabilities(ordered, thetas)
    cbar = 0.0
    for prob, k in zip(probs, ordered.channels):
        snr = scenario.gains.g[su_id, k] * phys.p_max / (phys.noise + ext_interference[k])
        cbar += prob * math.log2(1.0 + snr)
    return cbar


def noncoop_utility(scenario: Scenario, su_id: int, ext_interference) -> float:
    """Capacity times the expected slot fraction left for access.

    With long orderings and large alpha the expected sensing fraction can
    pass a full slot; the remainder is floored at zero so utilities stay
    nonnegative.
    """
    ordered = noncoop_order(scenario, su_id)
    thetas = [c.theta for c in scenario.channels]
    cbar = noncoop_capacity(scenario, su_id, ordered, ext_interference)
    tau = sensing_time(ordered, thetas, scenario.phys.alpha).tau
    return cbar * max(0.0, 1.0 - tau)


def noncoop_external_interference(scenario: Scenario) -> np.ndarray:
    """Synthesized receiver-side measurement for the all-singleton network:
    row i holds, per channel, the expected interference power at the BS from
    every other SU transmitting at full power with its own access
    probabilities.  No self-interference term."""
    n, k_total = scenario.n_sus, scenario.n_channels
    thetas = [c.theta for c in scenario.channels]
    contrib = np.zeros((n, k_total))
    for j in range(n):
        ordered = noncoop_order(scenario, j)
        for prob, k in zip(access_probabilities(ordered, thetas), ordered.channels):
            contrib[j, k] = scenario.gains.g[j, k] * scenario.phys.p_max * prob
    est = np.zeros((n, k_total))
    for i in range(n):
        for j in range(n):
            if j != i:
                est[i] += contrib[j]
    return est
