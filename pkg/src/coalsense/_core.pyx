# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled coalition valuation kernel.

Line-for-line mirror of `_purepy.evaluate_coalition` (same traversal order,
same arithmetic order) with the sensing-process walk and the best-response
power solver in C.  The two backends must agree to the last few bits; any
change here needs the matching change there.
"""

from libc.math cimport INFINITY, fabs, log2
from libc.stdlib cimport free, malloc, realloc
from libc.string cimport memcpy, memset

BACKEND_NAME = "compiled"

cdef enum:
    MAX_MEMBERS = 24
    MAX_CHANNELS = 60


cdef struct Solver:
    int n                  # group size
    int m                  # group channel count
    double noise
    double p_max
    double damping
    double tol
    int max_sweeps
    double* g              # n*m gains
    double* f              # m shared fixed interference
    double* p              # n*m working allocation
    double* best           # n*m best allocation seen
    double* start          # n*m start composition
    double* target         # m waterfill output
    double* ratios         # m
    double* inv            # m
    int* order             # m


cdef double _den(Solver* s, double* p, int i, int k):
    cdef double d = s.noise + s.f[k]
    cdef int j
    for j in range(s.n):
        if j != i:
            d += p[j * s.m + k] * s.g[j * s.m + k]
    return d


cdef void _waterfill(Solver* s, double* ratios, double* out):
    cdef int n = s.m
    cdef int j, m, cnt, pos, q
    cdef double level, running, cand, total, scale
    for j in range(n):
        if ratios[j] > 0.0:
            s.inv[j] = 1.0 / ratios[j]
        else:
            s.inv[j] = INFINITY
    cnt = 0
    for j in range(n):
        if s.inv[j] < INFINITY:
            pos = cnt
            while pos > 0 and s.inv[s.order[pos - 1]] > s.inv[j]:
                pos -= 1
            for q in range(cnt, pos, -1):
                s.order[q] = s.order[q - 1]
            s.order[pos] = j
            cnt += 1
    if cnt == 0:
        for j in range(n):
            out[j] = s.p_max / n
        return
    level = 0.0
    running = 0.0
    cdef int active = 0
    for m in range(1, cnt + 1):
        running += s.inv[s.order[m - 1]]
        cand = (s.p_max + running) / m
        if cand > s.inv[s.order[m - 1]]:
            level = cand
            active = m
    for j in range(n):
        out[j] = 0.0
    for m in range(active):
        out[s.order[m]] = level - s.inv[s.order[m]]
    total = 0.0
    for j in range(n):
        total += out[j]
    if total > 0.0:
        scale = s.p_max / total
        for m in range(active):
            out[s.order[m]] *= scale


cdef double _sum_rate(Solver* s, double* p):
    cdef double total = 0.0
    cdef double d, sv
    cdef int i, k
    for i in range(s.n):
        for k in range(s.m):
            if p[i * s.m + k] > 0.0:
                d = _den(s, p, i, k)
                sv = p[i * s.m + k] * s.g[i * s.m + k]
                if d > 0.0:
                    total += log2(1.0 + sv / d)
                elif sv > 0.0:
                    total += INFINITY
    return total


cdef void _member_rates(Solver* s, double* p, double* out):
    cdef double r, d, sv
    cdef int i, k
    for i in range(s.n):
        r = 0.0
        for k in range(s.m):
            if p[i * s.m + k] > 0.0:
                d = _den(s, p, i, k)
                sv = p[i * s.m + k] * s.g[i * s.m + k]
                if d > 0.0:
                    r += log2(1.0 + sv / d)
                elif sv > 0.0:
                    r += INFINITY
        out[i] = r


cdef double _best_response(Solver* s):
    """Damped sweeps from s.p; best allocation left in s.best."""
    cdef double best_rate = _sum_rate(s, s.p)
    memcpy(s.best, s.p, s.n * s.m * sizeof(double))
    cdef double prev = best_rate
    cdef double rate, d
    cdef int sweep, i, k
    for sweep in range(s.max_sweeps):
        for i in range(s.n):
            for k in range(s.m):
                d = _den(s, s.p, i, k)
                if d > 0.0:
                    s.ratios[k] = s.g[i * s.m + k] / d
                else:
                    s.ratios[k] = INFINITY
            _waterfill(s, s.ratios, s.target)
            for k in range(s.m):
                s.p[i * s.m + k] += s.damping * (s.target[k] - s.p[i * s.m + k])
        rate = _sum_rate(s, s.p)
        if rate > best_rate:
            best_rate = rate
            memcpy(s.best, s.p, s.n * s.m * sizeof(double))
        if fabs(rate - prev) < s.tol:
            break
        prev = rate
    return best_rate


cdef int _make_start(Solver* s, int which):
    """Fill s.start: 0 even split, 1 own-best spike, 2 sequential greedy,
    3+ pure one-channel-per-member corners (combo index little-endian by
    member)."""
    cdef int i, k, best_k, digits
    cdef double d, q, best_q
    if which == 0:
        for i in range(s.n):
            for k in range(s.m):
                s.start[i * s.m + k] = s.p_max / s.m
    elif which == 1:
        for i in range(s.n):
            best_k = 0
            best_q = -1.0
            for k in range(s.m):
                d = s.noise + s.f[k]
                if d > 0.0:
                    q = s.g[i * s.m + k] / d
                else:
                    q = INFINITY
                if q > best_q:
                    best_q = q
                    best_k = k
            for k in range(s.m):
                s.start[i * s.m + k] = 0.0
            s.start[i * s.m + best_k] = s.p_max
    elif which == 2:
        memset(s.start, 0, s.n * s.m * sizeof(double))
        for i in range(s.n):
            for k in range(s.m):
                d = _den(s, s.start, i, k)
                if d > 0.0:
                    s.ratios[k] = s.g[i * s.m + k] / d
                else:
                    s.ratios[k] = INFINITY
            _waterfill(s, s.ratios, s.target)
            for k in range(s.m):
                s.start[i * s.m + k] = s.target[k]
    else:
        digits = which - 3
        for i in range(s.n):
            for k in range(s.m):
                s.start[i * s.m + k] = 0.0
            s.start[i * s.m + digits % s.m] = s.p_max
            digits //= s.m
    return 0


cdef class _Eval:
    cdef int n, K, depth_cap
    cdef double noise, p_max, damping, tol
    cdef int max_sweeps
    cdef bint solve_power
    cdef double* thetas
    cdef double* gains      # n*K
    cdef double* ext        # K
    cdef int* orderings     # n*K local channel ids
    # per-depth DFS slabs
    cdef int* scan_ws       # depth*n
    cdef double* cap_ws     # depth*n
    cdef int* sel_ws        # depth*n
    cdef int* rown_ws       # depth*n (-1 = no allocation row yet)
    cdef int* rowch_ws      # depth*n*K
    cdef double* rowpw_ws   # depth*n*K
    cdef double* acc_ws     # depth*K
    # outputs
    cdef double* exp_cap
    cdef double* exp_pow    # n*K
    cdef double* sel_prob   # n*K
    cdef double total
    cdef long leaves, solves
    # group solver + cache
    cdef Solver sol
    cdef dict cache
    cdef double* arena
    cdef long arena_used, arena_size

    def __cinit__(self, orderings, thetas, gains, external, double noise,
                  double p_max, double damping, double tol, int max_sweeps,
                  bint solve_power):
        cdef int n = len(orderings)
        cdef int K = len(thetas)
        if n > MAX_MEMBERS or K > MAX_CHANNELS:
            raise ValueError("coalition too large for the compiled kernel")
        self.n = n
        self.K = K
        self.depth_cap = K + 2
        self.noise = noise
        self.p_max = p_max
        self.damping = damping
        self.tol = tol
        self.max_sweeps = max_sweeps
        self.solve_power = solve_power
        self.total = 0.0
        self.leaves = 0
        self.solves = 0
        self.cache = {}
        cdef int i, k, d
        self.thetas = <double*> malloc(K * sizeof(double))
        self.ext = <double*> malloc(K * sizeof(double))
        self.gains = <double*> malloc(n * K * sizeof(double))
        self.orderings = <int*> malloc(n * K * sizeof(int))
        for k in range(K):
            self.thetas[k] = thetas[k]
            self.ext[k] = external[k]
        for i in range(n):
            row = orderings[i]
            grow = gains[i]
            if len(row) != K:
                raise ValueError("ordering length mismatch")
            for k in range(K):
                self.orderings[i * K + k] = row[k]
                self.gains[i * K + k] = grow[k]
        d = self.depth_cap
        self.scan_ws = <int*> malloc(d * n * sizeof(int))
        self.cap_ws = <double*> malloc(d * n * sizeof(double))
        self.sel_ws = <int*> malloc(d * n * sizeof(int))
        self.rown_ws = <int*> malloc(d * n * sizeof(int))
        self.rowch_ws = <int*> malloc(d * n * K * sizeof(int))
        self.rowpw_ws = <double*> malloc(d * n * K * sizeof(double))
        self.acc_ws = <double*> malloc(d * K * sizeof(double))
        self.exp_cap = <double*> malloc(n * sizeof(double))
        self.exp_pow = <double*> malloc(n * K * sizeof(double))
        self.sel_prob = <double*> malloc(n * K * sizeof(double))
        memset(self.exp_cap, 0, n * sizeof(double))
        memset(self.exp_pow, 0, n * K * sizeof(double))
        memset(self.sel_prob, 0, n * K * sizeof(double))
        # solver scratch sized for the largest possible group
        self.sol.noise = noise
        self.sol.p_max = p_max
        self.sol.damping = damping
        self.sol.tol = tol
        self.sol.max_sweeps = max_sweeps
        self.sol.g = <double*> malloc(n * K * sizeof(double))
        self.sol.f = <double*> malloc(K * sizeof(double))
        self.sol.p = <double*> malloc(n * K * sizeof(double))
        self.sol.best = <double*> malloc(n * K * sizeof(double))
        self.sol.start = <double*> malloc(n * K * sizeof(double))
        self.sol.target = <double*> malloc(K * sizeof(double))
        self.sol.ratios = <double*> malloc(K * sizeof(double))
        self.sol.inv = <double*> malloc(K * sizeof(double))
        self.sol.order = <int*> malloc(K * sizeof(int))
        self.arena_size = 4096
        self.arena_used = 0
        self.arena = <double*> malloc(self.arena_size * sizeof(double))

    def __dealloc__(self):
        free(self.thetas); free(self.ext); free(self.gains); free(self.orderings)
        free(self.scan_ws); free(self.cap_ws); free(self.sel_ws)
        free(self.rown_ws); free(self.rowch_ws); free(self.rowpw_ws)
        free(self.acc_ws)
        free(self.exp_cap); free(self.exp_pow); free(self.sel_prob)
        free(self.sol.g); free(self.sol.f); free(self.sol.p)
        free(self.sol.best); free(self.sol.start); free(self.sol.target)
        free(self.sol.ratios); free(self.sol.inv); free(self.sol.order)
        free(self.arena)

    cdef long _arena_claim(self, long need):
        cdef long off = self.arena_used
        while self.arena_used + need > self.arena_size:
            self.arena_size *= 2
            self.arena = <double*> realloc(self.arena,
                                           self.arena_size * sizeof(double))
        self.arena_used += need
        return off

    cdef long _solve_group(self, int gm, int* members, int gc, int* channels,
                           double* fixed):
        """Solve (or fetch) one group's allocation; returns an arena offset.

        Arena layout per solve: caps[gm], rows[gm*gc], added[gc].
        """
        cdef int i, k, which
        cdef double rate, best_rate
        key = (tuple([members[i] for i in range(gm)]),
               tuple([channels[k] for k in range(gc)]),
               tuple([fixed[k] for k in range(gc)]))
        hit = self.cache.get(key)
        if hit is not None:
            return <long> hit
        self.solves += 1
        self.sol.n = gm
        self.sol.m = gc
        for i in range(gm):
            for k in range(gc):
                self.sol.g[i * gc + k] = self.gains[members[i] * self.K + channels[k]]
        for k in range(gc):
            self.sol.f[k] = fixed[k]
        best_rate = 0.0
        cdef bint first = True
        cdef long off = self._arena_claim(gm + gm * gc + gc)
        cdef double* caps = self.arena + off
        cdef double* rows = caps + gm
        cdef double* added = rows + gm * gc
        # corner starts exist only for multi-member groups small enough to
        # enumerate; mirrors power._starts
        cdef int n_starts = 3
        cdef long combos = 1
        if gm >= 2:
            for i in range(gm):
                combos *= gc
                if combos > 16:
                    break
            if combos <= 16:
                n_starts = 3 + <int> combos
        for which in range(n_starts):
            _make_start(&self.sol, which)
            memcpy(self.sol.p, self.sol.start, gm * gc * sizeof(double))
            rate = _best_response(&self.sol)
            if first or rate > best_rate:
                first = False
                best_rate = rate
                memcpy(rows, self.sol.best, gm * gc * sizeof(double))
        _member_rates(&self.sol, rows, caps)
        for k in range(gc):
            added[k] = 0.0
            for i in range(gm):
                added[k] += rows[i * gc + k] * self.sol.g[i * gc + k]
        self.cache[key] = off
        return off

    cdef void _leaf(self, int depth, double prob):
        cdef int i, c, base
        self.total += prob
        self.leaves += 1
        cdef int n = self.n
        cdef int K = self.K
        for i in range(n):
            if self.cap_ws[depth * n + i]:
                self.exp_cap[i] += prob * self.cap_ws[depth * n + i]
            c = self.sel_ws[depth * n + i]
            if c >= 0:
                self.sel_prob[i * K + c] += prob
            if self.rown_ws[depth * n + i] >= 0:
                base = (depth * n + i) * K
                for c in range(self.rown_ws[depth * n + i]):
                    self.exp_pow[i * K + self.rowch_ws[base + c]] += \
                        prob * self.rowpw_ws[base + c]

    cdef void _walk(self, int rank, int depth, int n_scan, double prob,
                    unsigned long long free_mask, unsigned long long busy_mask):
        cdef int n = self.n
        cdef int K = self.K
        if n_scan == 0 or rank == K:
            self._leaf(depth, prob)
            return
        cdef int* scan = self.scan_ws + depth * n
        cdef int cur_ch[MAX_MEMBERS]
        cdef int unknown[MAX_MEMBERS]
        cdef int u = 0
        cdef unsigned long long seen = 0, bit, fm, bm
        cdef int idx, i, c, ci, s_i
        for idx in range(n_scan):
            c = self.orderings[scan[idx] * K + rank]
            cur_ch[idx] = c
            bit = (<unsigned long long> 1) << c
            if not (free_mask | busy_mask | seen) & bit:
                unknown[u] = c
                u += 1
                seen |= bit
        cdef long sub
        cdef double p_branch
        cdef int n_stop, n_rem, gm, gc, pos, q
        cdef int child = depth + 1
        cdef int g_members[MAX_MEMBERS]
        cdef int g_channels[MAX_MEMBERS]
        cdef double fixed[MAX_MEMBERS]
        cdef long off
        cdef double* caps
        cdef double* rows
        cdef double* added
        for sub in range(<long> 1 << u):
            p_branch = prob
            fm = free_mask
            bm = busy_mask
            for idx in range(u):
                c = unknown[idx]
                bit = (<unsigned long long> 1) << c
                if (sub >> idx) & 1:
                    p_branch *= self.thetas[c]
                    fm |= bit
                else:
                    p_branch *= 1.0 - self.thetas[c]
                    bm |= bit
            if p_branch == 0.0:
                continue
            # split scanners into stoppers and the rest; copy child slab
            n_stop = 0
            n_rem = 0
            gm = 0
            for idx in range(n_scan):
                c = cur_ch[idx]
                if (fm >> c) & 1:
                    g_members[gm] = scan[idx]
                    gm += 1
                    n_stop += 1
                else:
                    self.scan_ws[child * n + n_rem] = scan[idx]
                    n_rem += 1
            if n_stop == 0:
                memcpy(self.scan_ws + child * n, scan, n_scan * sizeof(int))
                memcpy(self.cap_ws + child * n, self.cap_ws + depth * n,
                       n * sizeof(double))
                memcpy(self.sel_ws + child * n, self.sel_ws + depth * n,
                       n * sizeof(int))
                memcpy(self.rown_ws + child * n, self.rown_ws + depth * n,
                       n * sizeof(int))
                memcpy(self.rowch_ws + child * n * K, self.rowch_ws + depth * n * K,
                       n * K * sizeof(int))
                memcpy(self.rowpw_ws + child * n * K, self.rowpw_ws + depth * n * K,
                       n * K * sizeof(double))
                memcpy(self.acc_ws + child * K, self.acc_ws + depth * K,
                       K * sizeof(double))
                self._walk(rank + 1, child, n_scan, p_branch, fm, bm)
                continue
            # distinct selected channels, ascending
            gc = 0
            for idx in range(n_scan):
                c = cur_ch[idx]
                if not (fm >> c) & 1:
                    continue
                pos = 0
                while pos < gc and g_channels[pos] < c:
                    pos += 1
                if pos < gc and g_channels[pos] == c:
                    continue
                for q in range(gc, pos, -1):
                    g_channels[q] = g_channels[q - 1]
                g_channels[pos] = c
                gc += 1
            memcpy(self.cap_ws + child * n, self.cap_ws + depth * n,
                   n * sizeof(double))
            memcpy(self.sel_ws + child * n, self.sel_ws + depth * n,
                   n * sizeof(int))
            memcpy(self.rown_ws + child * n, self.rown_ws + depth * n,
                   n * sizeof(int))
            memcpy(self.rowch_ws + child * n * K, self.rowch_ws + depth * n * K,
                   n * K * sizeof(int))
            memcpy(self.rowpw_ws + child * n * K, self.rowpw_ws + depth * n * K,
                   n * K * sizeof(double))
            memcpy(self.acc_ws + child * K, self.acc_ws + depth * K,
                   K * sizeof(double))
            if self.solve_power:
                for ci in range(gc):
                    fixed[ci] = self.ext[g_channels[ci]] + \
                        self.acc_ws[depth * K + g_channels[ci]]
                off = self._solve_group(gm, g_members, gc, g_channels, fixed)
                caps = self.arena + off
                rows = caps + gm
                added = rows + gm * gc
                for s_i in range(gm):
                    i = g_members[s_i]
                    self.cap_ws[child * n + i] = caps[s_i]
                    self.rown_ws[child * n + i] = gc
                    for ci in range(gc):
                        self.rowch_ws[(child * n + i) * K + ci] = g_channels[ci]
                        self.rowpw_ws[(child * n + i) * K + ci] = rows[s_i * gc + ci]
                for ci in range(gc):
                    c = g_channels[ci]
                    self.acc_ws[child * K + c] = \
                        self.acc_ws[depth * K + c] + added[ci]
            for idx in range(n_scan):
                if (fm >> cur_ch[idx]) & 1:
                    self.sel_ws[child * n + scan[idx]] = cur_ch[idx]
            self._walk(rank + 1, child, n_rem, p_branch, fm, bm)

    def run(self):
        cdef int n = self.n
        cdef int K = self.K
        cdef int i
        for i in range(n):
            self.scan_ws[i] = i
            self.cap_ws[i] = 0.0
            self.sel_ws[i] = -1
            self.rown_ws[i] = -1
        memset(self.acc_ws, 0, K * sizeof(double))
        self._walk(0, 0, n, 1.0, 0, 0)
        return {
            "exp_capacity": [self.exp_cap[i] for i in range(n)],
            "exp_power": [[self.exp_pow[i * K + k] for k in range(K)]
                          for i in range(n)],
            "sel_prob": [[self.sel_prob[i * K + k] for k in range(K)]
                         for i in range(n)],
            "total_prob": self.total,
            "n_outcomes": self.leaves,
            "group_solves": self.solves,
        }


def evaluate_coalition(orderings, thetas, gains, external, noise, p_max,
                       damping=0.5, tol=1e-8, max_sweeps=200,
                       solve_power=True):
    """Compiled twin of `_purepy.evaluate_coalition`; same contract."""
    ev = _Eval(orderings, thetas, gains, external, noise, p_max,
               damping, tol, max_sweeps, solve_power)
    return ev.run()
