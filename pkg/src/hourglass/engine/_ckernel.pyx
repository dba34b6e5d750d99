# cython: language_level=3
"""Compiled event loop.

Draws come from the same PCG64 state through numpy's C-level samplers
(ziggurat exponential, gamma, uniform), in exactly the order documented in
``_pykernel``, so both backends produce bit-identical trajectories.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (
    random_standard_exponential,
    random_standard_gamma,
    random_standard_uniform,
)

cnp.import_array()

BACKEND_NAME = "compiled"

cdef int KIND_EXPONENTIAL = 0
cdef int KIND_GAMMA = 1
cdef int SIGN_EXCITATORY = 1


cdef bitgen_t *_bitgen(handle) except NULL:
    capsule = handle.bit_generator.capsule
    return <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")


cdef Py_ssize_t _event(
    cnp.int64_t[::1] edge_start,
    cnp.int64_t[::1] edge_dst,
    cnp.int8_t[::1] edge_sign,
    cnp.int8_t[::1] edge_kind,
    double[::1] edge_mean,
    double[::1] edge_shape,
    cnp.int64_t[::1] edge_slot,
    cnp.int8_t[::1] y_kind,
    double[::1] y_mean,
    double[::1] y_shape,
    double[::1] dl,
    cnp.uint8_t[::1] frz,
    cnp.uint8_t[::1] in_f1,
    cnp.int64_t[::1] f1,
    double t,
    Py_ssize_t z,
    bitgen_t *bg,
    bitgen_t *abg,
    bint record,
    cnp.int64_t[::1] spontaneous,
    cnp.int64_t[::1] total,
    cnp.int64_t[::1] deliveries,
    cnp.int64_t[::1] triggered,
    double[::1] overshoot_sum,
    double[:, ::1] reservoir,
    cnp.int64_t reservoir_cap,
    long *draws,
    long *aux_draws,
):
    cdef double y, m, xj, u, shape
    cdef Py_ssize_t e, i, j, idx, n_f1 = 0
    cdef cnp.int64_t slot = 0, seen, pos
    cdef int kind

    # the firing site refills first
    kind = y_kind[z]
    if kind == KIND_EXPONENTIAL:
        y = y_mean[z] * random_standard_exponential(bg)
        draws[0] += 1
    elif kind == KIND_GAMMA:
        shape = y_shape[z]
        y = (y_mean[z] / shape) * random_standard_gamma(bg, shape)
        draws[0] += 1
    else:
        y = y_mean[z]
    dl[z] = t + y
    if record:
        spontaneous[z] += 1
        total[z] += 1

    # direct impulses, destinations ascending
    for e in range(edge_start[z], edge_start[z + 1]):
        j = edge_dst[e]
        if frz[j]:
            continue
        kind = edge_kind[e]
        if kind == KIND_EXPONENTIAL:
            m = edge_mean[e] * random_standard_exponential(bg)
            draws[0] += 1
        elif kind == KIND_GAMMA:
            shape = edge_shape[e]
            m = (edge_mean[e] / shape) * random_standard_gamma(bg, shape)
            draws[0] += 1
        else:
            m = edge_mean[e]
        if edge_sign[e] == SIGN_EXCITATORY:
            xj = dl[j] - t
            if record:
                slot = edge_slot[e]
                deliveries[slot] += 1
                seen = deliveries[slot]
                if seen <= reservoir_cap:
                    reservoir[slot, seen - 1] = xj
                else:
                    u = random_standard_uniform(abg)
                    aux_draws[0] += 1
                    pos = <cnp.int64_t> (u * seen)
                    if pos < reservoir_cap:
                        reservoir[slot, pos] = xj
                if m > xj:
                    overshoot_sum[slot] += m - xj
            if xj <= m:
                f1[n_f1] = j
                n_f1 += 1
                in_f1[j] = 1
                if record:
                    triggered[slot] += 1
                    total[j] += 1
            else:
                dl[j] = dl[j] - m
        else:
            dl[j] = dl[j] + m

    # triggered sites refill and send only their inhibitory impulses
    for idx in range(n_f1):
        i = f1[idx]
        kind = y_kind[i]
        if kind == KIND_EXPONENTIAL:
            y = y_mean[i] * random_standard_exponential(bg)
            draws[0] += 1
        elif kind == KIND_GAMMA:
            shape = y_shape[i]
            y = (y_mean[i] / shape) * random_standard_gamma(bg, shape)
            draws[0] += 1
        else:
            y = y_mean[i]
        dl[i] = t + y
        for e in range(edge_start[i], edge_start[i + 1]):
            if edge_sign[e] == SIGN_EXCITATORY:
                continue
            j = edge_dst[e]
            if frz[j] or j == z or in_f1[j]:
                continue
            kind = edge_kind[e]
            if kind == KIND_EXPONENTIAL:
                m = edge_mean[e] * random_standard_exponential(bg)
                draws[0] += 1
            elif kind == KIND_GAMMA:
                shape = edge_shape[e]
                m = (edge_mean[e] / shape) * random_standard_gamma(bg, shape)
                draws[0] += 1
            else:
                m = edge_mean[e]
            dl[j] = dl[j] + m

    for idx in range(n_f1):
        in_f1[f1[idx]] = 0
    return n_f1


# placeholder bindings so the memoryview arguments are always valid even
# when nothing is being recorded
_EMPTY_I64 = np.zeros(1, dtype=np.int64)
_EMPTY_F64 = np.zeros(1, dtype=np.float64)
_EMPTY_F64_2D = np.zeros((1, 1), dtype=np.float64)


def run_kernel(conn, deadline, frozen, double clock, double until,
               dyn, aux, stats=None, trace=None):
    """Advance the network to time ``until``; returns ``(clock, events)``."""
    cdef cnp.int64_t[::1] edge_start = conn.edge_start
    cdef cnp.int64_t[::1] edge_dst = conn.edge_dst
    cdef cnp.int8_t[::1] edge_sign = conn.edge_sign
    cdef cnp.int8_t[::1] edge_kind = conn.edge_kind
    cdef double[::1] edge_mean = conn.edge_mean
    cdef double[::1] edge_shape = conn.edge_shape
    cdef cnp.int64_t[::1] edge_slot = conn.edge_slot
    cdef cnp.int8_t[::1] y_kind = conn.y_kind
    cdef double[::1] y_mean = conn.y_mean
    cdef double[::1] y_shape = conn.y_shape

    cdef double[::1] dl = deadline
    cdef cnp.uint8_t[::1] frz = frozen.view(np.uint8)
    cdef Py_ssize_t n = conn.n_sites

    cdef bitgen_t *bg = _bitgen(dyn)
    cdef bitgen_t *abg = _bitgen(aux)

    cdef bint record = stats is not None
    cdef cnp.int64_t[::1] spontaneous = stats.spontaneous if record else _EMPTY_I64
    cdef cnp.int64_t[::1] total = stats.total if record else _EMPTY_I64
    cdef cnp.int64_t[::1] deliveries = stats.deliveries if record else _EMPTY_I64
    cdef cnp.int64_t[::1] triggered = stats.triggered if record else _EMPTY_I64
    cdef double[::1] overshoot_sum = stats.overshoot_sum if record else _EMPTY_F64
    cdef double[:, ::1] reservoir = stats.reservoir if record else _EMPTY_F64_2D
    cdef cnp.int64_t reservoir_cap = stats.reservoir_cap if record else 1

    cdef cnp.int64_t[::1] f1 = np.zeros(n, dtype=np.int64)
    cdef cnp.uint8_t[::1] in_f1 = np.zeros(n, dtype=np.uint8)

    cdef long draws = 0, aux_draws = 0, events = 0
    cdef double best, t
    cdef double INF = np.inf
    cdef Py_ssize_t i, z, n_f1, idx

    while True:
        best = INF
        z = -1
        for i in range(n):
            if frz[i] == 0 and dl[i] < best:
                best = dl[i]
                z = i
        if z < 0:
            raise RuntimeError("no active site (all frozen)")
        if best > until:
            clock = until
            break
        t = best
        n_f1 = _event(
            edge_start, edge_dst, edge_sign, edge_kind, edge_mean, edge_shape,
            edge_slot, y_kind, y_mean, y_shape, dl, frz, in_f1, f1, t, z,
            bg, abg, record, spontaneous, total, deliveries, triggered,
            overshoot_sum, reservoir, reservoir_cap, &draws, &aux_draws,
        )
        if trace is not None:
            trace.append((t, z, tuple(f1[idx] for idx in range(n_f1))))
        clock = t
        events += 1

    dyn.position += draws
    aux.position += aux_draws
    if record:
        stats.t_end = until
        stats.n_events += events
    return clock, events


def fire_site(conn, deadline, frozen, double t, Py_ssize_t z,
              dyn, aux, stats=None):
    """Execute the single event of primary site ``z`` at time ``t``."""
    cdef cnp.int64_t[::1] edge_start = conn.edge_start
    cdef cnp.int64_t[::1] edge_dst = conn.edge_dst
    cdef cnp.int8_t[::1] edge_sign = conn.edge_sign
    cdef cnp.int8_t[::1] edge_kind = conn.edge_kind
    cdef double[::1] edge_mean = conn.edge_mean
    cdef double[::1] edge_shape = conn.edge_shape
    cdef cnp.int64_t[::1] edge_slot = conn.edge_slot
    cdef cnp.int8_t[::1] y_kind = conn.y_kind
    cdef double[::1] y_mean = conn.y_mean
    cdef double[::1] y_shape = conn.y_shape

    cdef double[::1] dl = deadline
    cdef cnp.uint8_t[::1] frz = frozen.view(np.uint8)
    cdef Py_ssize_t n = conn.n_sites

    cdef bitgen_t *bg = _bitgen(dyn)
    cdef bitgen_t *abg = _bitgen(aux)

    cdef bint record = stats is not None
    cdef cnp.int64_t[::1] spontaneous = stats.spontaneous if record else _EMPTY_I64
    cdef cnp.int64_t[::1] total = stats.total if record else _EMPTY_I64
    cdef cnp.int64_t[::1] deliveries = stats.deliveries if record else _EMPTY_I64
    cdef cnp.int64_t[::1] triggered = stats.triggered if record else _EMPTY_I64
    cdef double[::1] overshoot_sum = stats.overshoot_sum if record else _EMPTY_F64
    cdef double[:, ::1] reservoir = stats.reservoir if record else _EMPTY_F64_2D
    cdef cnp.int64_t reservoir_cap = stats.reservoir_cap if record else 1

    cdef cnp.int64_t[::1] f1 = np.zeros(n, dtype=np.int64)
    cdef cnp.uint8_t[::1] in_f1 = np.zeros(n, dtype=np.uint8)

    cdef long draws = 0, aux_draws = 0
    cdef Py_ssize_t n_f1, idx

    n_f1 = _event(
        edge_start, edge_dst, edge_sign, edge_kind, edge_mean, edge_shape,
        edge_slot, y_kind, y_mean, y_shape, dl, frz, in_f1, f1, t, z,
        bg, abg, record, spontaneous, total, deliveries, triggered,
        overshoot_sum, reservoir, reservoir_cap, &draws, &aux_draws,
    )
    dyn.position += draws
    aux.position += aux_draws
    if record:
        stats.n_events += 1
    return tuple(f1[idx] for idx in range(n_f1))
