# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled event loop for the zero-range process; see ``_pykernel.py``."""

from libc.math cimport log
from libc.stdint cimport int64_t, int32_t
from libc.stdlib cimport malloc, free


def run_chunk(int64_t[::1] counts, double[::1] g_table, double[::1] exit_rates,
              double[:, ::1] cum_p, double t, double t_max, double[::1] uniforms,
              double[::1] ev_time, int32_t[::1] ev_src, int32_t[::1] ev_dst):
    cdef Py_ssize_t n = counts.shape[0]
    cdef Py_ssize_t cap = uniforms.shape[0] // 3
    cdef Py_ssize_t k = 0, i, j, src, dst
    cdef double total, dt, x, y, acc
    cdef bint finished = False
    cdef double *rate = <double *> malloc(n * sizeof(double))
    if rate == NULL:
        raise MemoryError()
    try:
        with nogil:
            while k < cap:
                total = 0.0
                for i in range(n):
                    if counts[i] > 0:
                        rate[i] = g_table[counts[i]] * exit_rates[i]
                    else:
                        rate[i] = 0.0
                    total += rate[i]
                dt = -log(1.0 - uniforms[3 * k]) / total
                if t + dt > t_max:
                    t = t_max
                    finished = True
                    break
                t += dt
                x = uniforms[3 * k + 1] * total
                acc = 0.0
                src = -1
                for i in range(n):
                    if rate[i] > 0.0:
                        src = i
                        acc += rate[i]
                        if x < acc:
                            break
                y = uniforms[3 * k + 2]
                dst = n - 1
                for j in range(n):
                    if y < cum_p[src, j]:
                        dst = j
                        break
                counts[src] -= 1
                counts[dst] += 1
                ev_time[k] = t
                ev_src[k] = <int32_t> src
                ev_dst[k] = <int32_t> dst
                k += 1
    finally:
        free(rate)
    return k, t, finished
