import pytest

from coalsense.scenario import scenario_from_config
from coalsense.valuation import PartitionEvaluator


def make_scenario(n=6, k=10, k_i=3, alpha=0.05, seed=0, **extra):
    cfg = {"n_sus": n, "n_channels": k, "k_i": k_i, "alpha": alpha,
           "seed": seed}
    cfg.update(extra)
    return scenario_from_config(cfg)


@pytest.fixture
def small_scenario():
    return make_scenario()


@pytest.fixture
def evaluator(small_scenario):
    return PartitionEvaluator(small_scenario)
