"""End-to-end acceptance gate.

Twelve checks covering the analytic building blocks (against brute-force
oracles), the formation engine (convergence plus exhaustive stability
audit), the headline simulation trends, and determinism.  Each test prints
one PASS/FAIL line with its headline numbers and wall time; assertions
fire after the line is printed so the printout is complete either way.
"""

import random
import time
from pathlib import Path

from coalsense.coopsort import build_plan, collision_profile
from coalsense.dynamics import DynamicsParams
from coalsense.formation import audit_nash_stability, form
from coalsense.harness import _dynamics_run, _static_run, build_spec, run_and_emit
from coalsense.noncoop import (OrderedChannelList, channel_weight,
                               noncoop_external_interference, noncoop_utility,
                               sensing_time)
from coalsense.oracles import (grid_allocation_oracle,
                               realization_outcome_oracle, sensing_time_oracle)
from coalsense.outcomes import enumerate_outcomes
from coalsense.power import RateContext, allocate, sum_rate
from coalsense.valuation import PartitionEvaluator, evaluate_partition

from conftest import make_scenario

STATIC_FIXED = {"k_i": 3, "optimal_max_n": 0}


def announce(capsys, idx, label, ok, detail, t0, budget_s):
    elapsed = time.perf_counter() - t0
    with capsys.disabled():
        status = "PASS" if ok else "FAIL"
        stamp = f"{elapsed:.1f}s" + (f"/{budget_s:.0f}s" if budget_s else "")
        print(f"\n[criterion {idx:2d}] {label}: {status} ({detail}, {stamp})",
              flush=True)
    return elapsed


def test_c01_access_probabilities_match_realization_enumeration(capsys):
    t0 = time.perf_counter()
    rng = random.Random(101)
    max_err = 0.0
    max_mass_err = 0.0
    checked = 0
    while checked < 200:
        if checked % 2 == 0:
            sc = make_scenario(n=6, k=6, k_i=2, seed=rng.randint(0, 999))
            size = rng.randint(1, 3)
        else:
            sc = make_scenario(n=6, k=10, k_i=3, seed=rng.randint(0, 999))
            size = rng.randint(1, 2)
        members = rng.sample(range(6), size)
        plan = build_plan(sc, members)
        if plan.n_channels > 6:
            continue
        thetas = [c.theta for c in sc.channels]
        dist = enumerate_outcomes(plan, thetas)
        model = {t.assignment: t.prob for t in dist.tuples}
        oracle = realization_outcome_oracle(plan, thetas)
        for key in set(model) | set(oracle):
            err = abs(model.get(key, 0.0) - oracle.get(key, 0.0))
            max_err = max(max_err, err)
        max_mass_err = max(max_mass_err, abs(dist.total_mass - 1.0))
        checked += 1
    ok = max_err <= 1e-12 and max_mass_err <= 1e-9
    elapsed = announce(capsys, 1, "access probabilities vs realization "
                       "enumeration", ok,
                       f"{checked} coalitions, max err {max_err:.2e}, "
                       f"mass err {max_mass_err:.2e}", t0, 60)
    assert ok and elapsed < 60


def test_c02_sensing_time_matches_realization_enumeration(capsys):
    t0 = time.perf_counter()
    rng = random.Random(202)
    max_err = 0.0
    for _ in range(500):
        k = rng.randint(1, 10)
        channels = tuple(rng.sample(range(12), k))
        thetas = [rng.random() for _ in range(12)]
        alpha = rng.uniform(0.005, 0.09)
        ordered = OrderedChannelList(su_id=0, channels=channels)
        got = sensing_time(ordered, thetas, alpha).tau
        want = sensing_time_oracle(ordered, thetas, alpha)
        max_err = max(max_err, abs(got - want))
    ok = max_err <= 1e-12
    elapsed = announce(capsys, 2, "sensing-time formula vs realization "
                       "enumeration", ok,
                       f"500 orderings, max err {max_err:.2e}", t0, 10)
    assert ok and elapsed < 10


def test_c03_cooperative_sort_properties(capsys):
    t0 = time.perf_counter()
    rng = random.Random(303)
    checked = 0
    forced_seen = 0
    bad = []
    while checked < 500:
        k_i = rng.choice((3, 4))
        sc = make_scenario(n=8, k=10, k_i=k_i, seed=rng.randint(0, 1999))
        size = rng.randint(2, 5)
        members = rng.sample(range(8), size)
        plan = build_plan(sc, members)
        pool = set(plan.shared_channels)
        for row in plan.orderings:
            if set(row) != pool or len(row) != len(pool):
                bad.append(("permutation", plan.members))
        # a forced pick must carry an empty-candidate witness, and forced
        # ranks must be exactly the ranks where a channel was picked twice
        for f in plan.forced:
            row = plan.ordering(f.member)
            used = set(row[:f.rank])
            if f.channel not in f.rank_selected:
                bad.append(("witness-channel", plan.members))
            if pool - used - set(f.rank_selected):
                bad.append(("witness-nonempty", plan.members))
            if row[f.rank] != f.channel:
                bad.append(("witness-rank", plan.members))
        forced_ranks = {f.rank for f in plan.forced}
        collide_ranks = {r for r, chans in enumerate(collision_profile(plan))
                        if chans}
        if forced_ranks != collide_ranks:
            bad.append(("collision-forced", plan.members))
        forced_seen += len(plan.forced)
        g = sc.gains.g
        for c in plan.conflicts:
            theta = sc.channels[c.channel].theta
            w_win = channel_weight(theta, g[c.winner, c.channel])
            for m in c.group:
                if m == c.winner:
                    continue
                w_m = channel_weight(theta, g[m, c.channel])
                if w_m > w_win or (w_m == w_win and m < c.winner):
                    bad.append(("weight-priority", plan.members))
        checked += 1
    ok = not bad
    elapsed = announce(capsys, 3, "cooperative sort: permutations, forced "
                       "collisions, weight priority", ok,
                       f"{checked} coalitions, {forced_seen} forced picks, "
                       f"{len(bad)} violations", t0, 30)
    assert ok and elapsed < 30, bad[:5]


def test_c04_power_solver_meets_grid_search(capsys):
    t0 = time.perf_counter()
    rng = random.Random(404)
    p_max = 10.0
    worst_gap = 0.0
    worst_feas = 0.0
    for trial in range(100):
        noise = 0.1 if trial % 2 else 1e-3
        gains = tuple(tuple(rng.uniform(0.05, 5.0) for _ in range(2))
                      for _ in range(2))
        fixed = tuple(tuple(rng.uniform(0.0, 0.5) if rng.random() < 0.7
                            else 0.0 for _ in range(2)) for _ in range(2))
        ctx = RateContext(gains=gains, fixed_interference=fixed, noise=noise)
        alloc = allocate(ctx, p_max)
        got = sum_rate(alloc.p, gains, fixed, noise)
        best, _ = grid_allocation_oracle(ctx, p_max, grid_points=100)
        worst_gap = max(worst_gap, (best - got) / abs(best))
        for row in alloc.p:
            worst_feas = max(worst_feas, sum(row) - p_max,
                             max(-min(row), 0.0))
    ok = worst_gap <= 1e-3 and worst_feas <= 1e-9
    elapsed = announce(capsys, 4, "power solver vs dense grid search", ok,
                       f"100 instances, worst rel gap {worst_gap:.2e}, "
                       f"worst feasibility err {worst_feas:.2e}", t0, 60)
    assert ok and elapsed < 60


def test_c05_formation_converges_and_audits_stable(capsys):
    t0 = time.perf_counter()
    converged = 0
    stable = 0
    total = 100
    for idx in range(total):
        n = 4 + idx % 12
        sc = make_scenario(n=n, k=14, k_i=3, alpha=0.05, seed=idx)
        ev = PartitionEvaluator(sc)
        trace = form(sc, seed=idx, evaluator=ev)
        if trace.converged:
            converged += 1
        is_stable, _ = audit_nash_stability(sc, trace.final_partition,
                                            evaluator=ev)
        if is_stable:
            stable += 1
    ok = converged == total and stable == total
    elapsed = announce(capsys, 5, "formation converges and audits "
                       "Nash-stable", ok,
                       f"{converged}/{total} converged, "
                       f"{stable}/{total} stable", t0, 600)
    assert ok and elapsed < 600


def test_c06_exhaustive_optimum_dominates_formed(capsys):
    t0 = time.perf_counter()
    dominated = 0
    ratios = []
    total = 0
    for n in (4, 5, 6):
        for seed in range(30):
            row, _ = _static_run({"k_i": 3, "optimal_max_n": 6},
                                 {"n_sus": n, "n_channels": 14,
                                  "alpha": 0.05}, seed)
            formed = row.mean_coop_payoff * n
            total += 1
            if row.optimal_welfare >= formed - 1e-9:
                dominated += 1
            ratios.append(formed / row.optimal_welfare)
    mean_ratio = sum(ratios) / len(ratios)
    ok = dominated == total and mean_ratio >= 0.7
    elapsed = announce(capsys, 6, "exhaustive optimum dominates formed "
                       "welfare", ok,
                       f"{dominated}/{total} dominated, mean ratio "
                       f"{mean_ratio:.3f}", t0, 900)
    assert ok and elapsed < 900


def test_c07_cooperation_gain_grows_with_network_size(capsys):
    t0 = time.perf_counter()
    gains = {}
    means = {}
    for n in (10, 15, 20):
        non = []
        coop = []
        for seed in range(50):
            row, _ = _static_run(STATIC_FIXED,
                                 {"n_sus": n, "n_channels": 14,
                                  "alpha": 0.05}, seed)
            non.append(row.mean_noncoop_payoff)
            coop.append(row.mean_coop_payoff)
        mean_non = sum(non) / len(non)
        mean_coop = sum(coop) / len(coop)
        means[n] = (mean_non, mean_coop)
        gains[n] = (mean_coop - mean_non) / mean_non
    ok = all(means[n][1] > means[n][0] for n in means) and gains[20] > gains[10]
    elapsed = announce(capsys, 7, "cooperation gain grows with network "
                       "size", ok,
                       "rel gain " + ", ".join(
                           f"N={n}: {gains[n]:+.1%}" for n in (10, 15, 20)),
                       t0, 1200)
    assert ok and elapsed < 1200


def test_c08_payoffs_fall_as_sensing_cost_rises(capsys):
    t0 = time.perf_counter()
    non_means = []
    coop_means = []
    alphas = (0.05, 0.15, 0.3, 0.5)
    for alpha in alphas:
        non = []
        coop = []
        for seed in range(30):
            row, _ = _static_run(STATIC_FIXED,
                                 {"n_sus": 10, "n_channels": 14,
                                  "alpha": alpha}, seed)
            non.append(row.mean_noncoop_payoff)
            coop.append(row.mean_coop_payoff)
        non_means.append(sum(non) / len(non))
        coop_means.append(sum(coop) / len(coop))
    falling = all(a >= b - 1e-12 for a, b in zip(non_means, non_means[1:]))
    falling &= all(a >= b - 1e-12 for a, b in zip(coop_means, coop_means[1:]))
    coop_wins = all(c >= n for c, n in zip(coop_means, non_means))
    ok = falling and coop_wins
    elapsed = announce(capsys, 8, "payoffs non-increasing in sensing cost",
                       ok,
                       "coop " + "/".join(f"{v:.3f}" for v in coop_means) +
                       ", noncoop " + "/".join(f"{v:.3f}" for v in non_means),
                       t0, 600)
    assert ok and elapsed < 600


def test_c09_payoffs_rise_with_channel_count(capsys):
    t0 = time.perf_counter()
    non_means = []
    coop_means = []
    for k in (10, 14, 20):
        non = []
        coop = []
        for seed in range(30):
            row, _ = _static_run(STATIC_FIXED,
                                 {"n_sus": 10, "n_channels": k,
                                  "alpha": 0.05}, seed)
            non.append(row.mean_noncoop_payoff)
            coop.append(row.mean_coop_payoff)
        non_means.append(sum(non) / len(non))
        coop_means.append(sum(coop) / len(coop))
    rising = all(b >= a - 1e-12 for a, b in zip(non_means, non_means[1:]))
    rising &= all(b >= a - 1e-12 for a, b in zip(coop_means, coop_means[1:]))
    coop_wins = all(c >= n for c, n in zip(coop_means, non_means))
    ok = rising and coop_wins
    elapsed = announce(capsys, 9, "payoffs non-decreasing in channel count",
                       ok,
                       "coop " + "/".join(f"{v:.3f}" for v in coop_means) +
                       ", noncoop " + "/".join(f"{v:.3f}" for v in non_means),
                       t0, 600)
    assert ok and elapsed < 600


def test_c10_formed_coalition_sizes_in_expected_bands(capsys):
    t0 = time.perf_counter()
    avg_sizes = []
    max_sizes = []
    for seed in range(30):
        row, _ = _static_run(STATIC_FIXED,
                             {"n_sus": 20, "n_channels": 14, "alpha": 0.05},
                             seed)
        avg_sizes.append(row.avg_coalition_size)
        max_sizes.append(row.max_coalition_size)
    mean_avg = sum(avg_sizes) / len(avg_sizes)
    mean_max = sum(max_sizes) / len(max_sizes)
    ok = 2.0 <= mean_avg <= 6.0 and 5.0 <= mean_max <= 12.0
    elapsed = announce(capsys, 10, "formed coalition sizes in expected "
                       "bands", ok,
                       f"mean size {mean_avg:.2f} in [2,6], mean max "
                       f"{mean_max:.2f} in [5,12]", t0, 600)
    assert ok and elapsed < 600


def test_c11_mobility_trends(capsys):
    t0 = time.perf_counter()
    fixed = {"k_i": 3, "eta_s": 10.0, "duration_s": 150.0, "redraw_s": 0.0}
    speeds = (18.0, 36.0, 72.0)
    freq = {}
    life = {}
    for n in (10, 15):
        for speed in speeds:
            fs = []
            ls = []
            for seed in range(20):
                row, _ = _dynamics_run(fixed,
                                       {"n_sus": n, "n_channels": 14,
                                        "alpha": 0.05, "speed_kmh": speed},
                                       seed)
                fs.append(row.switches_per_minute)
                ls.append(row.mean_lifespan_s)
            freq[n, speed] = sum(fs) / len(fs)
            life[n, speed] = sum(ls) / len(ls)
    ok = True
    for n in (10, 15):
        for a, b in zip(speeds, speeds[1:]):
            ok &= freq[n, a] <= freq[n, b]
            ok &= life[n, a] >= life[n, b]
    for speed in speeds:
        ok &= freq[10, speed] <= freq[15, speed]
        ok &= life[10, speed] >= life[15, speed]
    elapsed = announce(capsys, 11, "mobility: faster and larger networks "
                       "adapt more", ok,
                       "switches/min " + ", ".join(
                           f"N={n}@{int(s)}km/h {freq[n, s]:.1f}"
                           for n in (10, 15) for s in speeds), t0, 900)
    assert ok and elapsed < 900


def test_c12_singleton_consistency_and_byte_identical_reruns(capsys, tmp_path):
    t0 = time.perf_counter()
    max_err = 0.0
    for seed in range(6):
        n = 5 + seed
        sc = make_scenario(n=n, k=12, seed=seed)
        profile = evaluate_partition(sc, tuple((i,) for i in range(n)))
        ext = noncoop_external_interference(sc)
        for i in range(n):
            err = abs(profile[i] - noncoop_utility(sc, i, ext[i]))
            max_err = max(max_err, err)
    cfg = {"grid": {"alpha": [0.05, 0.15], "n_sus": [6], "n_channels": [10]}}

    def run(into):
        spec = build_spec("sweep_alpha", config=cfg, seeds=[0, 1],
                          out=str(into / "out.csv"))
        return {p.name: p.read_bytes() for p in run_and_emit(spec)
                if not p.name.endswith("_timing.json")}

    first = run(tmp_path / "a")
    second = run(tmp_path / "b")
    identical = first == second
    ok = max_err <= 1e-12 and identical and len(first) >= 1
    announce(capsys, 12, "singleton consistency and byte-identical reruns",
             ok, f"max singleton err {max_err:.2e}, "
             f"{len(first)} files byte-identical: {identical}", t0, None)
    assert ok
