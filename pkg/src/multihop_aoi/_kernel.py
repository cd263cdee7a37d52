"""Compiled event loop used by ``run_simulation(..., engine="fast")``.

Semantics mirror the reference engine in :mod:`multihop_aoi.engine` event for
event; ``tests/test_engine.py`` checks the two produce identical traces.
"""

import numpy as np
from numba import njit

# status codes
OK = 0
SERVICE_EXHAUSTED = 1
RANDOM_EXHAUSTED = 2
EVENT_CAP = 3

# policy codes (same values as policies.PolicyKind)
PRMP_LGFS = 0
NP_LGFS = 1
NP_LCFS = 2
FCFS = 3
RANDOM_WC = 4


@njit(cache=True)
def _fresher(s, p, q):
    return s[p] > s[q] or (s[p] == s[q] and p > q)


@njit(cache=True)
def _sift_up(qb, l, i, s):
    while i > 0:
        par = (i - 1) >> 1
        if _fresher(s, qb[l, i], qb[l, par]):
            tmp = qb[l, i]
            qb[l, i] = qb[l, par]
            qb[l, par] = tmp
            i = par
        else:
            break


@njit(cache=True)
def _sift_down(qb, l, n, i, s):
    while True:
        c = 2 * i + 1
        if c >= n:
            break
        if c + 1 < n and _fresher(s, qb[l, c + 1], qb[l, c]):
            c += 1
        if _fresher(s, qb[l, c], qb[l, i]):
            tmp = qb[l, i]
            qb[l, i] = qb[l, c]
            qb[l, c] = tmp
            i = c
        else:
            break


@njit(cache=True)
def _push(qb, qhead, qlen, l, p, policy, s):
    cap = qb.shape[1]
    if qhead[l] + qlen[l] >= cap:
        if qhead[l] > 0:
            h = qhead[l]
            for k in range(qlen[l]):
                qb[l, k] = qb[l, h + k]
            qhead[l] = 0
        else:
            grown = np.empty((qb.shape[0], 2 * cap), np.int64)
            grown[:, :cap] = qb
            qb = grown
    pos = qhead[l] + qlen[l]
    qb[l, pos] = p
    qlen[l] += 1
    if policy == PRMP_LGFS or policy == NP_LGFS:
        _sift_up(qb, l, pos, s)
    return qb


@njit(cache=True)
def _remove(qb, qhead, qlen, l, pos, policy, s):
    n = qlen[l]
    if policy == PRMP_LGFS or policy == NP_LGFS:
        last = n - 1
        qlen[l] = last
        if pos != last:
            qb[l, pos] = qb[l, last]
            _sift_down(qb, l, last, pos, s)
            _sift_up(qb, l, pos, s)
    elif policy == NP_LCFS:
        for k in range(pos, n - 1):
            qb[l, k] = qb[l, k + 1]
        qlen[l] = n - 1
    elif policy == FCFS:
        qhead[l] += 1
        qlen[l] = n - 1
        if qlen[l] == 0:
            qhead[l] = 0
    else:
        qb[l, pos] = qb[l, n - 1]
        qlen[l] = n - 1


@njit(cache=True)
def _stalest(qb, l, n, s):
    best = 0
    for k in range(1, n):
        if _fresher(s, qb[l, best], qb[l, k]):
            best = k
    return best


@njit(cache=True)
def simulate(
    n_nodes,
    link_src,
    link_dst,
    link_buf,
    out_ptr,
    out_links,
    s,
    a0,
    order,
    horizon,
    policy,
    mode,
    svc,
    svc_len,
    rand_u,
    event_cap,
):
    L = link_src.shape[0]
    n = s.shape[0]
    inf = np.inf
    preemptive = policy == PRMP_LGFS
    evicts = policy == PRMP_LGFS or policy == NP_LGFS or policy == NP_LCFS

    qb = np.empty((max(L, 1), 16), np.int64)
    qhead = np.zeros(L, np.int64)
    qlen = np.zeros(L, np.int64)
    busy = np.zeros(L, np.bool_)
    insvc = np.full(L, -1, np.int64)
    comp = np.full(L, inf)
    cseq = np.zeros(L, np.int64)
    kidx = np.zeros(L, np.int64)
    starts = np.zeros(L, np.int64)
    drops = np.zeros(L, np.int64)
    preempts = np.zeros(L, np.int64)

    dcap = 2 * n + 64
    dt = np.empty(dcap, np.float64)
    dn = np.empty(dcap, np.int64)
    dp = np.empty(dcap, np.int64)
    dl = np.empty(dcap, np.int64)
    nd = 0

    seq = 0
    ru = 0
    events = 0
    status = OK
    info = -1
    ap = 0
    # scratch for the set of packets to hand to out-links after a delivery
    batch_l = np.empty(max(L, 1), np.int64)
    batch_q = np.empty(max(L, 1), np.int64)

    while True:
        ta = a0[order[ap]] if ap < n else inf
        tc = inf
        for l in range(L):
            if busy[l] and comp[l] < tc:
                tc = comp[l]
        t = ta if ta <= tc else tc
        if t > horizon or t == inf:
            break

        # --- external arrivals at t, then link completions at t --------------
        nb = 0
        for l in range(L):
            if busy[l] and comp[l] == t:
                batch_l[nb] = l
                batch_q[nb] = cseq[l]
                nb += 1
        # insertion sort by scheduling sequence
        for a in range(1, nb):
            kl = batch_l[a]
            kq = batch_q[a]
            b = a - 1
            while b >= 0 and batch_q[b] > kq:
                batch_l[b + 1] = batch_l[b]
                batch_q[b + 1] = batch_q[b]
                b -= 1
            batch_l[b + 1] = kl
            batch_q[b + 1] = kq

        n_arr = 0
        while ap < n and a0[order[ap]] == t:
            n_arr += 1
            ap += 1
        total = n_arr + nb
        for e in range(total):
            if e < n_arr:
                p = order[ap - n_arr + e]
                node = 0
                via = -1
            else:
                l = batch_l[e - n_arr]
                if not (busy[l] and cseq[l] == batch_q[e - n_arr] and comp[l] == t):
                    continue
                p = insvc[l]
                busy[l] = False
                insvc[l] = -1
                comp[l] = inf
                node = link_dst[l]
                via = l
            events += 1
            if nd >= dcap:
                dcap *= 2
                dt2 = np.empty(dcap, np.float64)
                dn2 = np.empty(dcap, np.int64)
                dp2 = np.empty(dcap, np.int64)
                dl2 = np.empty(dcap, np.int64)
                dt2[:nd] = dt[:nd]
                dn2[:nd] = dn[:nd]
                dp2[:nd] = dp[:nd]
                dl2[:nd] = dl[:nd]
                dt, dn, dp, dl = dt2, dn2, dp2, dl2
            dt[nd] = t
            dn[nd] = node
            dp[nd] = p
            dl[nd] = via
            nd += 1
            # propagate to every outgoing link of the receiving node
            for k in range(out_ptr[node], out_ptr[node + 1]):
                ol = out_links[k]
                if busy[ol] and preemptive and s[p] > s[insvc[ol]]:
                    old = insvc[ol]
                    insvc[ol] = p
                    preempts[ol] += 1
                    # preempted packet goes back through the buffer rule
                    b = link_buf[ol]
                    if b < 0 or qlen[ol] < b:
                        qb = _push(qb, qhead, qlen, ol, old, policy, s)
                    elif qlen[ol] > 0:
                        st = _stalest(qb, ol, qlen[ol], s)
                        drops[ol] += 1
                        if s[old] > s[qb[ol, st]]:
                            _remove(qb, qhead, qlen, ol, st, policy, s)
                            qb = _push(qb, qhead, qlen, ol, old, policy, s)
                    else:
                        drops[ol] += 1
                    # restart service for the preempting packet
                    if mode == 0:
                        if kidx[ol] >= svc_len[ol]:
                            return SERVICE_EXHAUSTED, ol, dt[:nd], dn[:nd], dp[:nd], dl[:nd], starts, drops, preempts, events
                        comp[ol] = t + svc[ol, kidx[ol]]
                        kidx[ol] += 1
                    else:
                        while svc[ol, kidx[ol]] <= t:
                            kidx[ol] += 1
                        comp[ol] = svc[ol, kidx[ol]]
                    cseq[ol] = seq
                    seq += 1
                    starts[ol] += 1
                else:
                    b = link_buf[ol]
                    room = b < 0 or qlen[ol] < b + (0 if busy[ol] else 1)
                    if room:
                        qb = _push(qb, qhead, qlen, ol, p, policy, s)
                    elif evicts and qlen[ol] > 0:
                        st = _stalest(qb, ol, qlen[ol], s)
                        drops[ol] += 1
                        if s[p] > s[qb[ol, st]]:
                            _remove(qb, qhead, qlen, ol, st, policy, s)
                            qb = _push(qb, qhead, qlen, ol, p, policy, s)
                    else:
                        drops[ol] += 1

        # --- idle links with waiting packets start sending ------------------
        for l in range(L):
            if busy[l] or qlen[l] == 0:
                continue
            m = qlen[l]
            if policy == PRMP_LGFS or policy == NP_LGFS:
                pos = 0
            elif policy == NP_LCFS:
                pos = m - 1
            elif policy == FCFS:
                pos = qhead[l]
            else:
                if ru >= rand_u.shape[0]:
                    return RANDOM_EXHAUSTED, -1, dt[:nd], dn[:nd], dp[:nd], dl[:nd], starts, drops, preempts, events
                pos = int(rand_u[ru] * m)
                if pos > m - 1:
                    pos = m - 1
                ru += 1
            p = qb[l, pos]
            _remove(qb, qhead, qlen, l, pos, policy, s)
            busy[l] = True
            insvc[l] = p
            if mode == 0:
                if kidx[l] >= svc_len[l]:
                    return SERVICE_EXHAUSTED, l, dt[:nd], dn[:nd], dp[:nd], dl[:nd], starts, drops, preempts, events
                comp[l] = t + svc[l, kidx[l]]
                kidx[l] += 1
            else:
                while svc[l, kidx[l]] <= t:
                    kidx[l] += 1
                comp[l] = svc[l, kidx[l]]
            cseq[l] = seq
            seq += 1
            starts[l] += 1

        if events > event_cap:
            status = EVENT_CAP
            break

    return status, info, dt[:nd], dn[:nd], dp[:nd], dl[:nd], starts, drops, preempts, events
