"""Compiled slot loop. Semantics are defined by engine.step; a test pins
this implementation to the pure-Python reference bit for bit."""

import numpy as np
from numba import njit

POL_QBMW = 0
POL_WBMW = 1
POL_VFMW = 2
POL_MAXWEIGHT = 3


@njit(cache=True, nogil=True, inline="always")
def _fill_waits(W, Q, ptr, job_off, job_arr, t, n):
    for i in range(n):
        if Q[i] > 0:
            W[i] = t - job_arr[job_off[i] + ptr[i]]
        else:
            W[i] = 0


@njit(cache=True, nogil=True)
def run_slots(A, S, sched, policy, alpha, ts, horizon, warmup, ceiling,
              job_off, job_arr, stride):
    n = A.shape[0]
    n_sched = sched.shape[0]

    Q = np.zeros(n, np.int64)
    W = np.zeros(n, np.int64)
    ptr = np.zeros(n, np.int64)
    dep = np.full(job_arr.shape[0], -1, np.int64)
    total_q = np.zeros(horizon, np.int64)

    cap = 1024
    istart = np.zeros(cap, np.int64)
    iq = np.zeros((cap, n), np.int32)
    iw = np.zeros((cap, n), np.int32)
    k = 0  # index of the interval in progress; interval 0 opens at t=0

    n_rows = horizon // stride + 1 if stride > 0 else 0
    row_t = np.zeros(n_rows, np.int64)
    row_q = np.zeros((n_rows, n), np.int32)
    row_w = np.zeros((n_rows, n), np.int32)
    row_mode = np.zeros(n_rows, np.int8)
    row_sched = np.zeros(n_rows, np.int32)
    row_shat = np.zeros((n_rows, n), np.int16)
    rows_used = 0

    active = True
    remaining = 0
    target = 0
    current = 0  # all queues empty at t=0: ties go to the lowest index
    frozen = 1.0
    pending = 1.0
    frame_end = 1  # initial frame covers slot 0 only

    window_qsum = np.zeros(n, np.int64)
    window_switch = 0
    window_slots = 0
    wc_viol = 0
    idle_run = 0  # consecutive ACTIVE slots serving empties with work elsewhere
    diverged = False
    end = horizon

    for t in range(horizon):
        tq = 0
        for i in range(n):
            tq += Q[i]
        total_q[t] = tq
        if t >= warmup:
            window_slots += 1
            for i in range(n):
                window_qsum[i] += Q[i]

        rec = stride > 0 and t % stride == 0
        if rec or policy == POL_WBMW:
            _fill_waits(W, Q, ptr, job_off, job_arr, t, n)
        if rec:
            row_t[rows_used] = t
            for i in range(n):
                row_q[rows_used, i] = Q[i]
                row_w[rows_used, i] = W[i]

        if active:
            dec = -1
            if policy == POL_VFMW:
                if t >= frame_end:
                    best_w = np.int64(-1)
                    best_j = -1
                    w_cur = np.int64(0)
                    for j in range(n_sched):
                        w = np.int64(0)
                        for i in range(n):
                            if sched[j, i] == 1:
                                w += Q[i]
                        if w > best_w:
                            best_w = w
                            best_j = j
                        if j == current:
                            w_cur = w
                    if w_cur >= best_w:
                        best_j = current
                    fl = int(np.floor(float(tq) ** alpha))
                    if fl < 1:
                        fl = 1
                    if best_j == current:
                        frame_end = t + fl
                    else:
                        dec = best_j
                        frame_end = t + ts + fl
            else:
                state = W if policy == POL_WBMW else Q
                best_w = np.int64(-1)
                best_j = -1
                w_cur = np.int64(0)
                for j in range(n_sched):
                    w = np.int64(0)
                    for i in range(n):
                        if sched[j, i] == 1:
                            w += state[i]
                    if w > best_w:
                        best_w = w
                        best_j = j
                    if j == current:
                        w_cur = w
                if w_cur >= best_w:
                    best_j = current
                if policy == POL_MAXWEIGHT:
                    if best_j != current:
                        dec = best_j
                else:
                    lhs = (1.0 + ts / frozen) * w_cur
                    if lhs <= best_w and best_j != current:
                        dec = best_j

            if dec >= 0:
                # open interval k+1 at the trigger slot
                k += 1
                if k == cap:
                    cap2 = cap * 2
                    istart2 = np.zeros(cap2, np.int64)
                    iq2 = np.zeros((cap2, n), np.int32)
                    iw2 = np.zeros((cap2, n), np.int32)
                    istart2[:cap] = istart
                    iq2[:cap] = iq
                    iw2[:cap] = iw
                    istart, iq, iw, cap = istart2, iq2, iw2, cap2
                _fill_waits(W, Q, ptr, job_off, job_arr, t, n)
                istart[k] = t
                tw = np.int64(0)
                for i in range(n):
                    iq[k, i] = Q[i]
                    iw[k, i] = W[i]
                    tw += W[i]
                if policy == POL_QBMW:
                    pending = max(1.0, float(tq) ** alpha)
                elif policy == POL_WBMW:
                    pending = max(1.0, float(tw) ** alpha)
                else:
                    pending = 1.0
                active = False
                remaining = ts
                target = dec

        if active:
            w_cur = np.int64(0)
            for i in range(n):
                if sched[current, i] == 1:
                    w_cur += Q[i]
            # Idling with backlog elsewhere only counts against work
            # conservation once it outlasts the T_s reaction latency.
            if w_cur == 0 and tq > 0:
                idle_run += 1
                if idle_run > ts:
                    wc_viol += 1
            else:
                idle_run = 0
            for i in range(n):
                if sched[current, i] == 1:
                    s = np.int64(S[i, t])
                    if s > Q[i]:
                        s = Q[i]
                    for _ in range(s):
                        dep[job_off[i] + ptr[i]] = t
                        ptr[i] += 1
                    Q[i] -= s
                    if rec:
                        row_shat[rows_used, i] = s
            if rec:
                row_mode[rows_used] = 1
                row_sched[rows_used] = current
        else:
            idle_run = 0
            if t >= warmup:
                window_switch += 1
            if rec:
                row_mode[rows_used] = 0
                row_sched[rows_used] = current
        if rec:
            rows_used += 1

        tq2 = np.int64(0)
        for i in range(n):
            Q[i] += A[i, t]
            tq2 += Q[i]

        if not active:
            remaining -= 1
            if remaining == 0:
                active = True
                current = target
                frozen = pending

        if tq2 > ceiling:
            diverged = True
            end = t + 1
            break

    n_int = k + 1
    ilen = np.zeros(n_int, np.int64)
    for j in range(k):
        ilen[j] = istart[j + 1] - istart[j]
    ilen[k] = end - istart[k]

    return (end, diverged, total_q[:end],
            istart[:n_int].copy(), ilen, iq[:n_int].copy(), iw[:n_int].copy(),
            dep, window_qsum, window_switch, window_slots, wc_viol,
            row_t[:rows_used].copy(), row_q[:rows_used].copy(),
            row_w[:rows_used].copy(), row_mode[:rows_used].copy(),
            row_sched[:rows_used].copy(), row_shat[:rows_used].copy())
