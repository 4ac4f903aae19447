# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled simulation core.

Runs every relocation scheme on flat instance records with priority
functions encoded as postfix opcode arrays. Mirrors ``crpgp.schemes``
decision for decision (same tie-breaking, same floating-point order).

Instance record layout (int32): ``S T sentinel crane h_1 ids... h_S ids...``.
"""

from cython.parallel cimport prange
from libc.math cimport fabs, isfinite, INFINITY
from libc.stdlib cimport abs, free, malloc


cdef enum:
    NTERM = 14
    OP_ADD = 14
    OP_SUB = 15
    OP_MUL = 16
    OP_DIV = 17
    EVAL_STACK = 512
    SCH_RE = 0
    SCH_REN = 1
    SCH_UN = 2
    SCH_UNC = 3
    SCH_UNT = 4
    SCH_UNP = 5
    BL_NONE = 0
    BL_TLP = 1
    BL_RI = 2
    BL_MINMAX = 3
    ST_OK = 0
    ST_DEADLOCK = 1
    ST_LOOP = 2
    ST_LOGFULL = 3

MAX_PROGRAM = EVAL_STACK - 1


cdef struct Rule:
    int scheme
    int baseline
    int ntrees
    int k
    const int* ops0
    int len0
    const int* ops1
    int len1
    double pickup
    double trolley
    int reset


cdef struct Sim:
    int S
    int T
    int n
    int sentinel
    int* st
    int* h
    int* order
    int* loc
    int nxt
    int crane
    long long reloc
    double secs
    int count
    int cap
    int* log
    double* logsec
    int nlog
    int logcap
    # per-decision constants
    int target
    int tstack
    int next_id
    int rem


cdef inline double move_time(Sim* s, const Rule* r, int o, int d) noexcept nogil:
    return (r.trolley * abs(s.crane - o) + r.trolley * abs(o - d)) + r.pickup


cdef inline int min_id(Sim* s, int i) noexcept nogil:
    cdef int j, c, lo = s.sentinel
    cdef int* base = s.st + i * s.T
    for j in range(s.h[i]):
        c = base[j]
        if c < lo:
            lo = c
    return lo


cdef inline int top(Sim* s, int i) noexcept nogil:
    return s.st[i * s.T + s.h[i] - 1]


cdef void decision(Sim* s) noexcept nogil:
    cdef int j
    cdef int* base
    s.target = s.order[s.nxt]
    s.tstack = s.loc[s.target]
    s.next_id = s.order[s.nxt + 1] if s.nxt + 1 < s.n else -1
    base = s.st + s.tstack * s.T
    j = s.h[s.tstack] - 1
    while base[j] != s.target:
        j -= 1
    s.rem = s.h[s.tstack] - 1 - j


cdef void features(Sim* s, const Rule* r, int origin, int cand, int cur, double* v) noexcept nogil:
    cdef int j, c
    cdef int h = s.h[cand]
    cdef int* base = s.st + cand * s.T
    cdef int ri = 0, nx = 0, wl = 0, dsm = 0, above = 0
    cdef int lo = s.sentinel
    cdef long long total = 0
    j = h - 1
    while j >= 0:
        c = base[j]
        total += c
        if c < lo:
            lo = c
        if c < cur:
            ri += 1
            if dsm == 0:
                dsm = j + 1
        if c == s.next_id:
            nx = 1
        if c > above:
            wl += 1
            above = c
        j -= 1
    v[0] = h
    v[1] = s.T - h
    v[2] = cur
    v[3] = move_time(s, r, origin + 1, cand + 1)
    v[4] = ri
    v[5] = lo
    v[6] = (<double>total) / (<double>h) if h > 0 else 0.0
    v[7] = s.rem
    v[8] = nx
    v[9] = lo - cur
    v[10] = 1.0 if h == 0 else 0.0
    v[11] = wl
    v[12] = h - wl
    v[13] = dsm


cdef double run_program(const int* ops, int n, const double* v) noexcept nogil:
    cdef double stack[EVAL_STACK]
    cdef int sp = 0, i, op
    cdef double a, b, res
    for i in range(n):
        op = ops[i]
        if op < NTERM:
            stack[sp] = v[op]
            sp += 1
        else:
            sp -= 1
            b = stack[sp]
            a = stack[sp - 1]
            if op == OP_ADD:
                res = a + b
            elif op == OP_SUB:
                res = a - b
            elif op == OP_MUL:
                res = a * b
            else:
                res = 1.0 if fabs(b) <= 1e-9 else a / b
            if not isfinite(res):
                return INFINITY
            stack[sp - 1] = res
    return stack[0]


cdef inline double score(const Rule* r, int first, int last, const double* v) noexcept nogil:
    # min over trees first..last-1
    cdef double x, y
    if first == 0:
        x = run_program(r.ops0, r.len0, v)
        if last == 2:
            y = run_program(r.ops1, r.len1, v)
            if y < x:
                x = y
        return x
    return run_program(r.ops1, r.len1, v)


cdef inline double baseline_priority(Sim* s, const Rule* r, const double* v) noexcept nogil:
    if r.baseline == BL_TLP:
        return v[0]
    if r.baseline == BL_RI:
        return v[4]
    if v[5] > v[2]:
        return v[5]
    return 2.0 * s.sentinel - v[5]


cdef int relocate(Sim* s, const Rule* r, int o, int d) noexcept nogil:
    cdef double t = move_time(s, r, o + 1, d + 1)
    cdef int c
    s.h[o] -= 1
    c = s.st[o * s.T + s.h[o]]
    s.st[d * s.T + s.h[d]] = c
    s.h[d] += 1
    s.loc[c] = d
    s.crane = d + 1
    s.reloc += 1
    s.secs += t
    if s.log != NULL:
        if s.nlog >= s.logcap:
            return ST_LOGFULL
        s.log[4 * s.nlog] = 0
        s.log[4 * s.nlog + 1] = o + 1
        s.log[4 * s.nlog + 2] = d + 1
        s.log[4 * s.nlog + 3] = c
        s.logsec[s.nlog] = t
        s.nlog += 1
    s.count += 1
    if s.count > s.cap:
        return ST_LOOP
    return ST_OK


cdef int retrieve(Sim* s, const Rule* r) noexcept nogil:
    cdef int c = s.order[s.nxt]
    cdef int ts = s.loc[c]
    cdef double t = move_time(s, r, ts + 1, 0)
    s.h[ts] -= 1
    s.nxt += 1
    s.crane = 0 if r.reset else ts + 1
    s.secs += t
    s.count = 0
    if s.log != NULL:
        if s.nlog >= s.logcap:
            return ST_LOGFULL
        s.log[4 * s.nlog] = 1
        s.log[4 * s.nlog + 1] = ts + 1
        s.log[4 * s.nlog + 2] = 0
        s.log[4 * s.nlog + 3] = c
        s.logsec[s.nlog] = t
        s.nlog += 1
    return ST_OK


cdef int restricted_dest(Sim* s, const Rule* r, int origin, int first, int last, double* v) noexcept nogil:
    cdef int d, excl = -1, others = 0, ns, cur, best = -1
    cdef double x, bestv = INFINITY
    decision(s)
    if r.scheme == SCH_REN and s.next_id >= 0:
        ns = s.loc[s.next_id]
        if ns != origin:
            for d in range(s.S):
                if d != origin and d != ns and s.h[d] < s.T:
                    others += 1
            if others > 0:
                excl = ns
    cur = top(s, origin)
    for d in range(s.S):
        if d == origin or d == excl or s.h[d] >= s.T:
            continue
        features(s, r, origin, d, cur, v)
        if r.baseline != BL_NONE:
            x = baseline_priority(s, r, v)
        else:
            x = score(r, first, last, v)
        if best < 0 or x < bestv:
            best = d
            bestv = x
    return best


cdef int cleanup(Sim* s, const Rule* r, int origin, int d, int sc, double* v) noexcept nogil:
    cdef int i, dc, best, m, bestm, st
    cdef double x, bestv
    while min_id(s, d) < sc:
        dc = top(s, d)
        best = -1
        bestm = 0
        bestv = INFINITY
        if r.scheme == SCH_UNP:
            decision(s)
        for i in range(s.S):
            if i == d or i == origin or s.h[i] >= s.T:
                continue
            m = min_id(s, i)
            if m <= dc:
                continue
            if r.scheme == SCH_UNP:
                features(s, r, d, i, dc, v)
                x = run_program(r.ops1, r.len1, v)
                if best < 0 or x < bestv:
                    best = i
                    bestv = x
            elif best < 0 or m < bestm:
                best = i
                bestm = m
        if best < 0:
            break
        st = relocate(s, r, d, best)
        if st != ST_OK:
            return st
    return ST_OK


cdef int pair_unc(Sim* s, const Rule* r, double* v, int* po, int* pd) noexcept nogil:
    cdef int o, d, cur
    cdef double x, bestv = INFINITY
    po[0] = -1
    decision(s)
    for o in range(s.S):
        if s.h[o] == 0:
            continue
        cur = top(s, o)
        for d in range(s.S):
            if d == o or s.h[d] >= s.T:
                continue
            features(s, r, o, d, cur, v)
            x = score(r, 0, r.ntrees, v)
            if po[0] < 0 or x < bestv:
                po[0] = o
                pd[0] = d
                bestv = x
    return po[0] >= 0


cdef int pair_unt(Sim* s, const Rule* r, double* v, int* po, int* pd) noexcept nogil:
    cdef int o, d, nopen = 0, best = -1
    cdef double x, bestv = INFINITY
    decision(s)
    for d in range(s.S):
        if s.h[d] < s.T:
            nopen += 1
    for o in range(s.S):
        if s.h[o] == 0:
            continue
        # needs an open stack other than itself
        if nopen - (1 if s.h[o] < s.T else 0) <= 0:
            continue
        features(s, r, o, o, top(s, o), v)
        x = run_program(r.ops0, r.len0, v)
        if best < 0 or x < bestv:
            best = o
            bestv = x
    if best < 0:
        return 0
    po[0] = best
    o = best
    best = -1
    bestv = INFINITY
    for d in range(s.S):
        if d == o or s.h[d] >= s.T:
            continue
        features(s, r, o, d, top(s, o), v)
        x = run_program(r.ops1, r.len1, v)
        if best < 0 or x < bestv:
            best = d
            bestv = x
    pd[0] = best
    return 1


cdef int solve_loop(Sim* s, const Rule* r) noexcept nogil:
    cdef double v[NTERM]
    cdef int target, ts, d, st, pairs, o = 0, dd = 0
    cdef int first = 0, last = r.ntrees
    if r.scheme == SCH_UNP:
        last = 1
    elif r.scheme == SCH_UNT:
        first = 1
        last = 2
    while s.nxt < s.n:
        target = s.order[s.nxt]
        ts = s.loc[target]
        pairs = 0
        while top(s, ts) != target:
            if (r.scheme == SCH_UNC or r.scheme == SCH_UNT) and pairs < r.k:
                if r.scheme == SCH_UNC:
                    if not pair_unc(s, r, v, &o, &dd):
                        return ST_DEADLOCK
                else:
                    if not pair_unt(s, r, v, &o, &dd):
                        return ST_DEADLOCK
                st = relocate(s, r, o, dd)
                if st != ST_OK:
                    return st
                pairs += 1
                continue
            d = restricted_dest(s, r, ts, first, last, v)
            if d < 0:
                return ST_DEADLOCK
            if r.scheme == SCH_UN or r.scheme == SCH_UNP:
                st = cleanup(s, r, ts, d, top(s, ts), v)
                if st != ST_OK:
                    return st
            st = relocate(s, r, ts, d)
            if st != ST_OK:
                return st
        st = retrieve(s, r)
        if st != ST_OK:
            return st
    return ST_OK


cdef int simulate(const int* rec, const Rule* r, long long* reloc, double* secs,
                  int* log, double* logsec, int logcap, int* nlog) noexcept nogil:
    cdef Sim s
    cdef int i, j, p, hh, c, maxid, n = 0, status
    s.S = rec[0]
    s.T = rec[1]
    s.sentinel = rec[2]
    s.crane = rec[3]
    maxid = s.sentinel
    s.st = <int*>malloc(sizeof(int) * s.S * s.T)
    s.h = <int*>malloc(sizeof(int) * s.S)
    s.loc = <int*>malloc(sizeof(int) * (maxid + 1))
    s.order = <int*>malloc(sizeof(int) * (maxid + 1))
    if s.st == NULL or s.h == NULL or s.loc == NULL or s.order == NULL:
        free(s.st); free(s.h); free(s.loc); free(s.order)
        return ST_DEADLOCK
    for c in range(maxid + 1):
        s.loc[c] = -1
    p = 4
    for i in range(s.S):
        hh = rec[p]
        p += 1
        s.h[i] = hh
        for j in range(hh):
            c = rec[p]
            p += 1
            s.st[i * s.T + j] = c
            s.loc[c] = i
            n += 1
    j = 0
    for c in range(1, maxid + 1):
        if s.loc[c] >= 0:
            s.order[j] = c
            j += 1
    s.n = n
    s.nxt = 0
    s.reloc = 0
    s.secs = 0.0
    s.count = 0
    s.cap = 2 * n + (r.k if (r.scheme == SCH_UNC or r.scheme == SCH_UNT) else 0)
    s.log = log
    s.logsec = logsec
    s.logcap = logcap
    s.nlog = 0
    status = solve_loop(&s, r)
    reloc[0] = s.reloc
    secs[0] = s.secs
    if nlog != NULL:
        nlog[0] = s.nlog
    free(s.st); free(s.h); free(s.loc); free(s.order)
    return status


cdef Rule make_rule(int scheme, int baseline, int k, const int[::1] ops, int len0, int len1,
                    double pickup, double trolley, int reset):
    cdef Rule r
    r.scheme = scheme
    r.baseline = baseline
    r.k = k
    r.len0 = len0
    r.len1 = len1
    r.ntrees = (1 if len0 > 0 else 0) + (1 if len1 > 0 else 0)
    r.ops0 = &ops[0]
    r.ops1 = &ops[len0] if len1 > 0 else &ops[0]
    r.pickup = pickup
    r.trolley = trolley
    r.reset = reset
    return r


def run_dataset(const int[::1] data, const long long[::1] offsets, int scheme, int baseline, int k,
                const int[::1] ops, int len0, int len1, double pickup, double trolley, int reset,
                long long[::1] reloc, double[::1] secs, int[::1] status, int workers=1):
    """Solve every instance; results land in ``reloc``/``secs``/``status``.

    A negative ``k`` means "number of stacks" per instance.
    """
    cdef Py_ssize_t i, n = offsets.shape[0]
    cdef Rule r = make_rule(scheme, baseline, k, ops, len0, len1, pickup, trolley, reset)
    cdef Rule local
    if workers <= 1:
        for i in range(n):
            local = r
            if local.k < 0:
                local.k = data[offsets[i]]
            status[i] = simulate(&data[offsets[i]], &local, &reloc[i], &secs[i], NULL, NULL, 0, NULL)
    else:
        for i in prange(n, nogil=True, num_threads=workers, schedule="dynamic"):
            status[i] = _run_one(&data[offsets[i]], &r, &reloc[i], &secs[i])


cdef int _run_one(const int* rec, const Rule* r, long long* reloc, double* secs) noexcept nogil:
    cdef Rule local = r[0]
    if local.k < 0:
        local.k = rec[0]
    return simulate(rec, &local, reloc, secs, NULL, NULL, 0, NULL)


def run_logged(const int[::1] rec, int scheme, int baseline, int k,
               const int[::1] ops, int len0, int len1, double pickup, double trolley, int reset,
               int[::1] log, double[::1] logsec):
    """Solve one instance recording moves; returns (status, nmoves, reloc, secs)."""
    cdef Rule r = make_rule(scheme, baseline, k, ops, len0, len1, pickup, trolley, reset)
    cdef long long reloc = 0
    cdef double secs = 0.0
    cdef int nlog = 0, st
    if r.k < 0:
        r.k = rec[0]
    st = simulate(&rec[0], &r, &reloc, &secs, &log[0], &logsec[0], logsec.shape[0], &nlog)
    return st, nlog, reloc, secs
