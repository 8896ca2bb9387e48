"""Pure-Python event loop; mirrors ``_kernel.pyx`` operation for operation."""

from math import log


def run_chunk(counts, g_table, exit_rates, cum_p, t, t_max, uniforms, ev_time, ev_src, ev_dst):
    """Advance the zero-range process until ``t_max`` or the uniforms run out.

    ``counts`` is updated in place; three uniforms are consumed per event.
    Returns ``(n_events, t, finished)``.
    """
    n = len(counts)
    eta = [int(c) for c in counts]
    g = g_table.tolist()
    er = exit_rates.tolist()
    cp = cum_p.tolist()
    u = uniforms.tolist()
    cap = len(u) // 3
    rate = [0.0] * n
    k = 0
    finished = False
    while k < cap:
        total = 0.0
        for i in range(n):
            if eta[i] > 0:
                rate[i] = g[eta[i]] * er[i]
            else:
                rate[i] = 0.0
            total += rate[i]
        dt = -log(1.0 - u[3 * k]) / total
        if t + dt > t_max:
            t = t_max
            finished = True
            break
        t += dt
        x = u[3 * k + 1] * total
        acc = 0.0
        src = -1
        for i in range(n):
            if rate[i] > 0.0:
                src = i
                acc += rate[i]
                if x < acc:
                    break
        y = u[3 * k + 2]
        row = cp[src]
        dst = n - 1
        for j in range(n):
            if y < row[j]:
                dst = j
                break
        eta[src] -= 1
        eta[dst] += 1
        ev_time[k] = t
        ev_src[k] = src
        ev_dst[k] = dst
        k += 1
    counts[:] = eta
    return k, t, finished
