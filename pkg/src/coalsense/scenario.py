"""World model: channels, secondary users, gains, physical constants.

A `Scenario` is an immutable description of one network draw.  Randomized
generation is fully deterministic given a seed: positions, availability
probabilities, fading amplitudes and known-channel subsets are drawn from
separate named streams (see `prng`), in a fixed documented order, so equal
seeds yield bit-identical scenarios.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from . import prng

__all__ = [
    "Channel", "SecondaryUser", "GainMatrix", "PhysParams", "Scenario",
    "generate_scenario", "channel_gain", "dump_scenario", "load_scenario",
    "scenario_from_config", "SCENARIO_CONFIG_KEYS",
]


@dataclass(frozen=True)
class Channel:
    """One licensed channel with its availability probability."""
    id: int
    theta: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ConfigError(f"channel {self.id}: theta={self.theta} outside [0, 1]")


@dataclass(frozen=True)
class SecondaryUser:
    """One SU: position in meters relative to the base station at the origin,
    and the ids of the channels whose statistics it has learned."""
    id: int
    position: tuple[float, float]
    known_channels: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.known_channels)) != len(self.known_channels):
            raise ConfigError(f"SU {self.id}: duplicate known channels")

    @property
    def distance(self) -> float:
        return math.hypot(self.position[0], self.position[1])


@dataclass(frozen=True)
class GainMatrix:
    """Per (SU, channel) power gains to the BS and the fading draws behind them."""
    g: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        self.g.setflags(write=False)
        self.a.setflags(write=False)


@dataclass(frozen=True)
class PhysParams:
    """Physical constants.  Powers in mW, distances in meters.

    Defaults follow the simulation setup this model is normally run with:
    10 mW transmit budget, -90 dBm noise, path-loss exponent 3, 5% of a slot
    to sense one channel, 3 km deployment square.
    """
    p_max: float = 10.0
    noise: float = 1e-9
    mu: float = 3.0
    alpha: float = 0.05
    area_side: float = 3000.0
    # False: gain multiplies the raw Rayleigh amplitude (the literal model);
    # True: multiplies its square instead.
    fading_power_gain: bool = False

    def __post_init__(self):
        if self.p_max <= 0:
            raise ConfigError(f"p_max={self.p_max} must be positive")
        if self.noise <= 0:
            raise ConfigError(f"noise={self.noise} must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha={self.alpha} outside (0, 1)")


@dataclass(frozen=True)
class Scenario:
    channels: tuple[Channel, ...]
    sus: tuple[SecondaryUser, ...]
    gains: GainMatrix
    phys: PhysParams
    seed: int

    def __post_init__(self):
        if not self.channels or not self.sus:
            raise ConfigError("scenario needs at least one channel and one SU")
        ids = {c.id for c in self.channels}
        for su in self.sus:
            missing = set(su.known_channels) - ids
            if missing:
                raise ConfigError(f"SU {su.id} references unknown channels {sorted(missing)}")

    @property
    def n_sus(self) -> int:
        return len(self.sus)

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    @property
    def thetas(self) -> np.ndarray:
        arr = np.array([c.theta for c in self.channels])
        arr.setflags(write=False)
        return arr


def channel_gain(scenario: Scenario, su_id: int, channel_id: int) -> float:
    """Power gain of `su_id` on `channel_id`: fading times distance^-mu."""
    return float(scenario.gains.g[su_id, channel_id])


def generate_scenario(n_sus: int, n_channels: int, k_i: int,
                      phys: PhysParams | None = None, seed: int = 0,
                      theta_list=None) -> Scenario:
    """Draw a random scenario: uniform SU placement over the square centered
    at the BS, i.i.d. uniform channel availabilities (unless `theta_list`
    pins them), Rayleigh fading with unit mean square, and a uniform random
    k_i-subset of known channels per SU."""
    if phys is None:
        phys = PhysParams()
    if n_sus < 1 or n_channels < 1:
        raise ConfigError(f"n_sus={n_sus}, n_channels={n_channels}: both must be >= 1")
    if not 1 <= k_i <= n_channels:
        raise ConfigError(f"k_i={k_i} outside [1, n_channels={n_channels}]")
    if theta_list is not None and len(theta_list) != n_channels:
        raise ConfigError(f"theta_list has {len(theta_list)} entries, expected {n_channels}")

    pos_rng = prng.stream(seed, "positions")
    half = phys.area_side / 2.0
    positions = [(prng.uniform(pos_rng, -half, half), prng.uniform(pos_rng, -half, half))
                 for _ in range(n_sus)]

    if theta_list is None:
        theta_rng = prng.stream(seed, "thetas")
        thetas = [theta_rng.random() for _ in range(n_channels)]
    else:
        thetas = [float(t) for t in theta_list]

    fading_rng = prng.stream(seed, "fading")
    a = np.empty((n_sus, n_channels))
    for i in range(n_sus):
        for k in range(n_channels):
            a[i, k] = prng.rayleigh(fading_rng)

    subset_rng = prng.stream(seed, "subsets")
    known = [tuple(prng.k_subset(subset_rng, n_channels, k_i)) for _ in range(n_sus)]

    return _assemble(positions, thetas, a, known, phys, seed)


def _assemble(positions, thetas, a, known, phys, seed) -> Scenario:
    n_sus = len(positions)
    fade = a * a if phys.fading_power_gain else a
    dists = np.array([math.hypot(x, y) for x, y in positions])
    g = fade * (dists[:, None] ** -phys.mu)
    channels = tuple(Channel(k, thetas[k]) for k in range(len(thetas)))
    sus = tuple(SecondaryUser(i, positions[i], known[i]) for i in range(n_sus))
    return Scenario(channels=channels, sus=sus,
                    gains=GainMatrix(g=g, a=np.array(a)), phys=phys, seed=seed)


def with_world(scenario: Scenario, positions=None, thetas=None, a=None) -> Scenario:
    """New scenario with some world state replaced; gains are recomputed.

    Used by the dynamics layer for mobility and traffic changes.
    """
    if positions is None:
        positions = [su.position for su in scenario.sus]
    if thetas is None:
        thetas = [c.theta for c in scenario.channels]
    if a is None:
        a = scenario.gains.a
    known = [su.known_channels for su in scenario.sus]
    return _assemble(list(positions), list(thetas), np.array(a), known,
                     scenario.phys, scenario.seed)


# --- serialization ---------------------------------------------------------

def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "seed": scenario.seed,
        "phys": {
            "p_max": scenario.phys.p_max,
            "noise": scenario.phys.noise,
            "mu": scenario.phys.mu,
            "alpha": scenario.phys.alpha,
            "area_side": scenario.phys.area_side,
            "fading_power_gain": scenario.phys.fading_power_gain,
        },
        "channels": [{"id": c.id, "theta": c.theta} for c in scenario.channels],
        "sus": [{"id": su.id, "position": list(su.position),
                 "known_channels": list(su.known_channels)} for su in scenario.sus],
        "fading": scenario.gains.a.tolist(),
    }


def scenario_from_dict(d: dict) -> Scenario:
    phys = PhysParams(**d["phys"])
    positions = [tuple(su["position"]) for su in d["sus"]]
    thetas = [c["theta"] for c in d["channels"]]
    known = [tuple(su["known_channels"]) for su in d["sus"]]
    return _assemble(positions, thetas, np.array(d["fading"]), known, phys, d["seed"])


def dump_scenario(scenario: Scenario, path) -> None:
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(scenario), fh, indent=1)
        fh.write("\n")


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))


# --- config files ----------------------------------------------------------

SCENARIO_CONFIG_KEYS = {
    "n_sus", "n_channels", "k_i", "alpha", "p_max_mw", "noise_mw", "mu",
    "area_m", "seed", "theta_list", "fading_power_gain",
}


def scenario_from_config(cfg: dict) -> Scenario:
    """Build a scenario from a config mapping using the documented key names."""
    unknown = set(cfg) - SCENARIO_CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("n_sus", "n_channels", "seed"):
        if key not in cfg:
            raise ConfigError(f"missing config key: {key}")
    phys = PhysParams(
        p_max=float(cfg.get("p_max_mw", 10.0)),
        noise=float(cfg.get("noise_mw", 1e-9)),
        mu=float(cfg.get("mu", 3.0)),
        alpha=float(cfg.get("alpha", 0.05)),
        area_side=float(cfg.get("area_m", 3000.0)),
        fading_power_gain=bool(cfg.get("fading_power_gain", False)),
    )
    return generate_scenario(int(cfg["n_sus"]), int(cfg["n_channels"]),
                             int(cfg.get("k_i", 3)), phys, int(cfg["seed"]),
                             theta_list=cfg.get("theta_list"))
