"""Compare the compiled valuation kernel against the pure-Python twin.

Draws real coalitions from seeded scenarios, extracts the exact kernel
inputs the evaluator would pass, checks both backends return identical
results, and reports wall-time speedups.  Run from the repo root:

    python3 benchmarks/bench_backends.py --repeats 5
"""

import argparse
import time

from coalsense import prng
from coalsense.backend import get_backend
from coalsense.scenario import scenario_from_config
from coalsense.valuation import PartitionEvaluator


def collect_cases(n_scenarios=4, per_scenario=6):
    """Kernel argument tuples for a spread of coalition sizes."""
    cases = []
    for s in range(n_scenarios):
        sc = scenario_from_config({"n_sus": 12, "n_channels": 14, "k_i": 3,
                                   "alpha": 0.05, "seed": 100 + s})
        ev = PartitionEvaluator(sc)
        rng = prng.stream(s, "bench-coalitions")
        for t in range(per_scenario):
            size = 1 + t % 4
            members = tuple(sorted(rng.sample(range(sc.n_sus), size)))
            if not ev.within_cap(members):
                continue
            plan = ev.plan(members)
            local = {ch: j for j, ch in enumerate(plan.shared_channels)}
            orderings = [tuple(local[ch] for ch in row)
                         for row in plan.orderings]
            gains = [[float(sc.gains.g[i, ch])
                      for ch in plan.shared_channels] for i in plan.members]
            thetas = [float(sc.thetas[ch]) for ch in plan.shared_channels]
            ext = [0.05 * (1 + j % 3) for j in range(len(plan.shared_channels))]
            cases.append((size, (orderings, thetas, gains, ext,
                                 sc.phys.noise, sc.phys.p_max)))
    return cases


def run_backend(impl, cases, repeats):
    t0 = time.perf_counter()
    results = None
    for _ in range(repeats):
        results = [impl.evaluate_coalition(*args) for _, args in cases]
    return results, (time.perf_counter() - t0) / repeats


def check_equal(a, b):
    mismatches = 0
    for res_a, res_b in zip(a, b):
        for key in ("exp_capacity", "exp_power", "sel_prob"):
            va, vb = res_a[key], res_b[key]
            flat_a = [x for row in va for x in (row if isinstance(row, (list, tuple)) else [row])]
            flat_b = [x for row in vb for x in (row if isinstance(row, (list, tuple)) else [row])]
            mismatches += sum(x != y for x, y in zip(flat_a, flat_b))
    return mismatches


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--scenarios", type=int, default=4)
    args = ap.parse_args()

    try:
        compiled = get_backend("compiled")
    except ImportError:
        print("compiled backend not built; nothing to compare")
        return 1
    python = get_backend("python")

    cases = collect_cases(n_scenarios=args.scenarios)
    by_size = {}
    for size, case_args in cases:
        by_size.setdefault(size, []).append((size, case_args))

    print(f"{len(cases)} coalition cases, {args.repeats} repeats per backend")
    print(f"{'size':>4} {'cases':>6} {'python ms':>10} {'compiled ms':>12} "
          f"{'speedup':>8}")
    total_py = total_c = 0.0
    for size in sorted(by_size):
        group = by_size[size]
        res_c, t_c = run_backend(compiled, group, args.repeats)
        res_p, t_p = run_backend(python, group, args.repeats)
        bad = check_equal(res_c, res_p)
        if bad:
            print(f"size {size}: {bad} mismatching values between backends")
            return 1
        total_py += t_p
        total_c += t_c
        print(f"{size:>4} {len(group):>6} {t_p * 1e3:>10.2f} "
              f"{t_c * 1e3:>12.2f} {t_p / t_c:>7.1f}x")
    print(f"{'all':>4} {len(cases):>6} {total_py * 1e3:>10.2f} "
          f"{total_c * 1e3:>12.2f} {total_py / total_c:>7.1f}x")
    print("backends agree bit-for-bit on every case")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
