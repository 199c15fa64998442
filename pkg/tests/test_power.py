"""Power allocation: waterfilling, best-response solver, grid dominance."""

import pytest

from coalsense import prng
from coalsense.oracles import grid_allocation_oracle
from coalsense.power import (RateContext, SolverParams, allocate,
                             member_rates, sum_rate, waterfill)


def test_waterfill_frozen_two_channel_example():
    # channel quality ratios (2, 1) with unit budget: level sits at 1.25,
    # powers (0.75, 0.25)
    assert waterfill([2.0, 1.0], 1.0) == pytest.approx([0.75, 0.25],
                                                       abs=1e-12)


def test_waterfill_spends_budget_and_equalizes_levels():
    rng = prng.stream(404, "test-wf")
    for trial in range(100):
        m = 1 + trial % 5
        ratios = [0.05 + rng.random() * 4 for _ in range(m)]
        p_max = 0.2 + rng.random() * 5
        p = waterfill(ratios, p_max)
        assert all(x >= -1e-12 for x in p)
        assert sum(p) == pytest.approx(p_max, abs=1e-9)
        # active channels share one water level; inactive sit above it
        levels = [pi + 1.0 / r for pi, r in zip(p, ratios)]
        active = [lv for pi, lv in zip(p, levels) if pi > 1e-12]
        if active:
            top = max(active)
            assert all(lv == pytest.approx(top, rel=1e-9) for lv in active)
            for pi, r in zip(p, ratios):
                if pi <= 1e-12:
                    assert 1.0 / r >= top - 1e-9


def test_single_member_allocation_is_waterfilling():
    rng = prng.stream(11, "test-single")
    for trial in range(50):
        m = 1 + trial % 4
        gains = [[0.1 + rng.random() for _ in range(m)]]
        fixed = [[rng.random() * 0.3 for _ in range(m)]]
        noise = 1e-3
        p_max = 1.0 + rng.random()
        ctx = RateContext(gains=gains, fixed_interference=fixed, noise=noise)
        got = allocate(ctx, p_max).p[0]
        ratios = [g / (noise + f) for g, f in zip(gains[0], fixed[0])]
        want = waterfill(ratios, p_max)
        assert got == pytest.approx(want, abs=1e-9)


def _random_context(rng, harsh):
    noise = 0.1 if harsh else 1e-3
    gains = [[0.1 + rng.random() for _ in range(2)] for _ in range(2)]
    fixed = [[rng.random() * 0.5 for _ in range(2)] for _ in range(2)]
    p_max = 0.5 + rng.random()
    return RateContext(gains=gains, fixed_interference=fixed,
                       noise=noise), p_max


@pytest.mark.parametrize("harsh", [False, True])
def test_two_member_allocation_dominates_grid_search(harsh):
    rng = prng.stream(55 + harsh, "test-grid")
    for trial in range(40):
        ctx, p_max = _random_context(rng, harsh)
        alloc = allocate(ctx, p_max)
        got = sum_rate(alloc.p, ctx.gains, ctx.fixed_interference, ctx.noise)
        best, _ = grid_allocation_oracle(ctx, p_max)
        assert got >= best - 1e-3 * max(1.0, abs(best))
        for row in alloc.p:
            assert all(x >= -1e-9 for x in row)
            assert sum(row) <= p_max + 1e-9


def test_rates_are_consistent_with_sum():
    rng = prng.stream(808, "test-rates")
    for trial in range(30):
        n, m = 1 + trial % 3, 1 + (trial // 3) % 3
        gains = [[0.2 + rng.random() for _ in range(m)] for _ in range(n)]
        fixed = [[rng.random() * 0.2 for _ in range(m)] for _ in range(n)]
        p = [[rng.random() for _ in range(m)] for _ in range(n)]
        rates = member_rates(p, gains, fixed, 1e-2)
        assert sum(rates) == pytest.approx(
            sum_rate(p, gains, fixed, 1e-2), abs=1e-12)
        assert all(r >= 0.0 for r in rates)


def test_solver_params_defaults():
    params = SolverParams()
    assert params.damping == 0.5
    assert params.tol == 1e-8
    assert params.max_sweeps == 200
