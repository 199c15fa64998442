"""Pure-Python coalition valuation kernel.

Walks the coalition's joint sensing process rank by rank: at each rank the
still-scanning members look at their next channels, every channel whose
state is not yet pinned branches free/busy, and members seeing a free
channel stop and transmit.  Each stopping group gets a power allocation
(best-response waterfilling against everything already on the air), whose
result is cached by (members, channels, fixed interference).  Leaves carry
exact probabilities, so the per-member expected capacities come out as true
expectations over the outcome distribution.

The compiled extension replays this algorithm with the same operation
order; results must agree to the last few bits.  Keep the two in lockstep
when editing.
"""

from .power import SolverParams, _best_response, _starts, member_rates

BACKEND_NAME = "python"


def evaluate_coalition(orderings, thetas, gains, external, noise, p_max,
                       damping=0.5, tol=1e-8, max_sweeps=200,
                       solve_power=True):
    """Expected capacities and transmit statistics for one coalition.

    All channel indices are local (0..K-1 over the coalition's pool);
    `orderings[i]` is member i's full sensing permutation.  Returns a dict
    with per-member expected capacity, expected per-channel power, selected
    -channel probabilities, total leaf mass, leaf count, and the number of
    distinct power solves.
    """
    n = len(orderings)
    n_ch = len(thetas)
    orderings = [tuple(o) for o in orderings]

    params = SolverParams(damping=damping, tol=tol, max_sweeps=max_sweeps)
    exp_cap = [0.0] * n
    exp_pow = [[0.0] * n_ch for _ in range(n)]
    sel_prob = [[0.0] * n_ch for _ in range(n)]
    stats = {"total": 0.0, "leaves": 0, "solves": 0}
    solve_cache = {}

    def solve_group(members, channels, fixed):
        key = (members, channels, fixed)
        hit = solve_cache.get(key)
        if hit is not None:
            return hit
        stats["solves"] += 1
        sub_g = [[gains[i][c] for c in channels] for i in members]
        sub_f = [list(fixed) for _ in members]
        best_rate = None
        best_p = None
        for start in _starts(sub_g, sub_f, noise, p_max):
            rate, p = _best_response([row[:] for row in start],
                                     sub_g, sub_f, noise, p_max, params)
            if best_rate is None or rate > best_rate:
                best_rate, best_p = rate, p
        caps = member_rates(best_p, sub_g, sub_f, noise)
        added = [0.0] * len(channels)
        for ci in range(len(channels)):
            for j in range(len(members)):
                added[ci] += best_p[j][ci] * sub_g[j][ci]
        result = (tuple(caps), tuple(tuple(r) for r in best_p), tuple(added))
        solve_cache[key] = result
        return result

    def leaf(prob, cap, sel, rows):
        stats["total"] += prob
        stats["leaves"] += 1
        for i in range(n):
            if cap[i]:
                exp_cap[i] += prob * cap[i]
            if sel[i] >= 0:
                sel_prob[i][sel[i]] += prob
            rec = rows[i]
            if rec is not None:
                chans, powers = rec
                for c, pw in zip(chans, powers):
                    exp_pow[i][c] += prob * pw

    def walk(rank, scanning, free_mask, busy_mask, prob, cap, sel, rows, acc):
        if not scanning or rank == n_ch:
            leaf(prob, cap, sel, rows)
            return
        cur = [(i, orderings[i][rank]) for i in scanning]
        unknown = []
        seen = 0
        for _, c in cur:
            bit = 1 << c
            if not (free_mask | busy_mask | seen) & bit:
                unknown.append(c)
                seen |= bit
        for s in range(1 << len(unknown)):
            p_branch = prob
            fm, bm = free_mask, busy_mask
            for idx, c in enumerate(unknown):
                if (s >> idx) & 1:
                    p_branch *= thetas[c]
                    fm |= 1 << c
                else:
                    p_branch *= 1.0 - thetas[c]
                    bm |= 1 << c
            if p_branch == 0.0:
                continue
            stoppers = [(i, c) for i, c in cur if (fm >> c) & 1]
            if not stoppers:
                walk(rank + 1, scanning, fm, bm, p_branch, cap, sel, rows, acc)
                continue
            g_members = tuple(i for i, _ in stoppers)
            g_channels = tuple(sorted({c for _, c in stoppers}))
            n_cap = cap
            n_sel = list(sel)
            n_rows = list(rows)
            n_acc = acc
            if solve_power:
                fixed = tuple(external[c] + acc[c] for c in g_channels)
                caps, alloc, added = solve_group(g_members, g_channels, fixed)
                n_cap = list(cap)
                for gi, i in enumerate(g_members):
                    n_cap[i] = caps[gi]
                    n_rows[i] = (g_channels, alloc[gi])
                n_acc = list(acc)
                for ci, c in enumerate(g_channels):
                    n_acc[c] = acc[c] + added[ci]
            for i, c in stoppers:
                n_sel[i] = c
            remaining = [i for i, c in cur if not (fm >> c) & 1]
            walk(rank + 1, remaining, fm, bm, p_branch, n_cap, n_sel, n_rows, n_acc)

    walk(0, list(range(n)), 0, 0, 1.0,
         [0.0] * n, [-1] * n, [None] * n, [0.0] * n_ch)
    return {
        "exp_capacity": exp_cap,
        "exp_power": exp_pow,
        "sel_prob": sel_prob,
        "total_prob": stats["total"],
        "n_outcomes": stats["leaves"],
        "group_solves": stats["solves"],
    }
