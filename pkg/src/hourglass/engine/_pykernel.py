"""Pure-Python event loop — the always-available fallback kernel.

The compiled kernel (``_ckernel``) implements exactly the same loop over the
same arrays with the same draw order against the same PCG64 stream, so the
two backends produce bit-identical trajectories.  Any behavioural change
here must be mirrored there (``tests/test_backends.py`` pins them together).

Draw order within one event, which both kernels must respect:

1. the firing site's fresh Y;
2. one magnitude per link out of the firing site, destinations ascending
   (deleted destinations are skipped entirely — no draw);
3. for each triggered site in ascending order: its fresh Y, then one
   magnitude per *inhibitory* link out of it, destinations ascending,
   skipping deleted sites and sites that fired in this event.

Deterministic magnitudes consume no draws anywhere.
"""

from __future__ import annotations

import math

from ..connections import SIGN_EXCITATORY, ConnectionSpec

KIND_EXPONENTIAL = 0
KIND_GAMMA = 1
KIND_DETERMINISTIC = 2

BACKEND_NAME = "python"


def _tables(conn: ConnectionSpec):
    """Plain-list copies of the CSR arrays (cached on the spec)."""
    cached = conn.__dict__.get("_py_tables")
    if cached is None:
        cached = (
            conn.edge_start.tolist(),
            conn.edge_dst.tolist(),
            conn.edge_sign.tolist(),
            conn.edge_kind.tolist(),
            conn.edge_mean.tolist(),
            conn.edge_shape.tolist(),
            conn.edge_slot.tolist(),
            conn.y_kind.tolist(),
            conn.y_mean.tolist(),
            conn.y_shape.tolist(),
        )
        conn.__dict__["_py_tables"] = cached
    return cached


def _apply_event(tables, dl, frz, in_f1, f1, t, z, std_exp, std_gamma, aux_uniform, stats):
    """Execute the event of primary site ``z`` at time ``t`` on list ``dl``.

    Returns ``(n_f1, draws, aux_draws)``.  ``in_f1`` and ``f1`` are scratch
    buffers; ``in_f1`` is left cleared.
    """
    (
        edge_start,
        edge_dst,
        edge_sign,
        edge_kind,
        edge_mean,
        edge_shape,
        edge_slot,
        y_kind,
        y_mean,
        y_shape,
    ) = tables
    draws = 0
    aux_draws = 0
    record = stats is not None

    # the firing site refills first
    kind = y_kind[z]
    if kind == KIND_EXPONENTIAL:
        y = y_mean[z] * std_exp()
        draws += 1
    elif kind == KIND_GAMMA:
        shape = y_shape[z]
        y = (y_mean[z] / shape) * std_gamma(shape)
        draws += 1
    else:
        y = y_mean[z]
    dl[z] = t + y
    if record:
        stats.spontaneous[z] += 1
        stats.total[z] += 1

    # direct impulses, destinations ascending; an excitatory hit at or
    # above the destination's remaining time triggers it
    n_f1 = 0
    for e in range(edge_start[z], edge_start[z + 1]):
        j = edge_dst[e]
        if frz[j]:
            continue
        kind = edge_kind[e]
        if kind == KIND_EXPONENTIAL:
            m = edge_mean[e] * std_exp()
            draws += 1
        elif kind == KIND_GAMMA:
            shape = edge_shape[e]
            m = (edge_mean[e] / shape) * std_gamma(shape)
            draws += 1
        else:
            m = edge_mean[e]
        if edge_sign[e] == SIGN_EXCITATORY:
            xj = dl[j] - t
            if record:
                slot = edge_slot[e]
                stats.deliveries[slot] += 1
                seen = stats.deliveries[slot]
                if seen <= stats.reservoir_cap:
                    stats.reservoir[slot, seen - 1] = xj
                else:
                    pos = int(aux_uniform() * seen)
                    aux_draws += 1
                    if pos < stats.reservoir_cap:
                        stats.reservoir[slot, pos] = xj
                if m > xj:
                    stats.overshoot_sum[slot] += m - xj
            if xj <= m:
                f1[n_f1] = j
                n_f1 += 1
                in_f1[j] = True
                if record:
                    stats.triggered[slot] += 1
                    stats.total[j] += 1
            else:
                dl[j] = dl[j] - m
        else:
            dl[j] = dl[j] + m

    # triggered sites refill and send only their inhibitory impulses;
    # sites that fired in this event are refractory and receive nothing
    for idx in range(n_f1):
        i = f1[idx]
        kind = y_kind[i]
        if kind == KIND_EXPONENTIAL:
            y = y_mean[i] * std_exp()
            draws += 1
        elif kind == KIND_GAMMA:
            shape = y_shape[i]
            y = (y_mean[i] / shape) * std_gamma(shape)
            draws += 1
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
                m = edge_mean[e] * std_exp()
                draws += 1
            elif kind == KIND_GAMMA:
                shape = edge_shape[e]
                m = (edge_mean[e] / shape) * std_gamma(shape)
                draws += 1
            else:
                m = edge_mean[e]
            dl[j] = dl[j] + m

    for idx in range(n_f1):
        in_f1[f1[idx]] = False
    return n_f1, draws, aux_draws


def run_kernel(conn, deadline, frozen, clock, until, dyn, aux, stats=None, trace=None):
    """Advance the network to time ``until``; returns ``(clock, events)``.

    ``deadline`` holds absolute firing times (``x_i = deadline[i] - clock``)
    and is mutated in place.  Events due exactly at ``until`` execute.
    ``dyn`` drives the dynamics and ``aux`` only the reservoir subsampling,
    so recording never perturbs a trajectory.
    """
    tables = _tables(conn)
    n = conn.n_sites
    gen = dyn.generator
    aux_gen = aux.generator
    std_exp = gen.standard_exponential
    std_gamma = gen.standard_gamma
    aux_uniform = aux_gen.random

    dl = deadline.tolist()
    frz = frozen.tolist()
    in_f1 = [False] * n
    f1 = [0] * n
    draws = 0
    aux_draws = 0
    events = 0

    inf = math.inf
    while True:
        best = inf
        z = -1
        for i in range(n):
            if not frz[i] and dl[i] < best:
                best = dl[i]
                z = i
        if z < 0:
            raise RuntimeError("no active site (all frozen)")
        if best > until:
            clock = until
            break
        t = best
        n_f1, d, ad = _apply_event(
            tables, dl, frz, in_f1, f1, t, z, std_exp, std_gamma, aux_uniform, stats
        )
        draws += d
        aux_draws += ad
        if trace is not None:
            trace.append((t, z, tuple(f1[:n_f1])))
        clock = t
        events += 1

    deadline[:] = dl
    dyn.position += draws
    aux.position += aux_draws
    if stats is not None:
        stats.t_end = until
        stats.n_events += events
    return clock, events


def fire_site(conn, deadline, frozen, t, z, dyn, aux, stats=None):
    """Execute the single event of primary site ``z`` at time ``t``.

    Used by the fine-grained ``fire`` API; the batch loop above applies the
    identical body, so manual stepping and ``run`` agree draw for draw.
    Returns the triggered-site tuple.
    """
    tables = _tables(conn)
    n = conn.n_sites
    gen = dyn.generator
    dl = deadline.tolist()
    in_f1 = [False] * n
    f1 = [0] * n
    n_f1, draws, aux_draws = _apply_event(
        tables,
        dl,
        frozen.tolist(),
        in_f1,
        f1,
        t,
        z,
        gen.standard_exponential,
        gen.standard_gamma,
        aux.generator.random,
        stats,
    )
    deadline[:] = dl
    dyn.position += draws
    aux.position += aux_draws
    if stats is not None:
        stats.n_events += 1
    return tuple(f1[:n_f1])
