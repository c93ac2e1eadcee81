# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled transient kernel.

Mirror of ``_kernel_py.py``: the arithmetic must stay textually in sync so
the two backends remain bit-identical (the extension is built with
``-ffp-contract=off`` to rule out FMA contraction).
"""

from libc.math cimport exp, fabs

import numpy as np

DEF EXP_CLAMP = 250.0
DEF MAX_SUBSTEPS = 1024
DEF MAX_DAMPING = 40


def backend_name():
    return "cython"


cdef Py_ssize_t _loop(double[::1] vs, double vs_prev, double h,
                      double c1, double l1, double c2,
                      double gs, double gld, double i_s, double nvt,
                      double tol, int max_iter,
                      double[::1] state, bint collect,
                      double[::1] tr_v1, double[::1] tr_v2, double[::1] tr_v3,
                      double[::1] tr_id, double[::1] tr_il, double[::1] tr_r,
                      int[::1] tr_it, unsigned char[::1] tr_ok,
                      double[::1] out) nogil:
    cdef double v1 = state[0]
    cdef double v2 = state[1]
    cdef double v3 = state[2]
    cdef double il = state[3]
    cdef bint merged = l1 <= 0.0
    cdef Py_ssize_t n = vs.shape[0]
    cdef double sum_v3 = 0.0
    cdef double max_resid = 0.0
    cdef int max_iters = 0
    cdef double s_prev = vs_prev

    cdef Py_ssize_t k
    cdef int nsub, j, it, step_iters, dampings
    cdef bint ok, converged, accepted
    cdef double s_target, hsub, gc1, gc2, gl, s, resid
    cdef double sv1, sv2, sv3, sil, pv1, pv2, pv3, pil
    cdef double vd, arg, ex, idd, gd, f1, f2, f3, r
    cdef double a11, a12, a22, a23, a33, m1, m2, b22, b33, g2, g3, d1, d2, d3
    cdef double alpha, w1, w2, w3, nidd, ngd, nf1, nf2, nf3, nr

    for k in range(n):
        s_target = vs[k]
        nsub = 1
        step_iters = 0
        while True:
            ok = True
            sv1 = v1
            sv2 = v2
            sv3 = v3
            sil = il
            hsub = h / nsub
            gc1 = c1 / hsub
            gc2 = c2 / hsub
            gl = 0.0 if merged else hsub / l1
            step_iters = 0
            resid = 0.0
            idd = 0.0
            for j in range(1, nsub + 1):
                s = s_prev + (s_target - s_prev) * ((<double> j) / (<double> nsub))
                pv1 = v1
                pv2 = v2
                pv3 = v3
                pil = il
                # --- damped Newton on the nodal equations -----------------
                vd = v2 - v3
                arg = vd / nvt
                if arg > EXP_CLAMP:
                    arg = EXP_CLAMP
                ex = exp(arg)
                idd = i_s * (ex - 1.0)
                gd = i_s * ex / nvt
                if merged:
                    f1 = 0.0
                    f2 = gs * (v2 - s) + gc1 * (v2 - pv2) + idd
                else:
                    f1 = gs * (v1 - s) + gc1 * (v1 - pv1) + pil + gl * (v1 - v2)
                    f2 = idd - pil - gl * (v1 - v2)
                f3 = gc2 * (v3 - pv3) + gld * v3 - idd
                r = fabs(f2)
                if fabs(f1) > r:
                    r = fabs(f1)
                if fabs(f3) > r:
                    r = fabs(f3)
                converged = r <= tol
                it = 0
                while not converged:
                    it += 1
                    if it > max_iter:
                        ok = False
                        break
                    if merged:
                        a22 = gs + gc1 + gd
                        a23 = -gd
                        a33 = gd + gc2 + gld
                        m2 = a23 / a22
                        b33 = a33 - m2 * a23
                        g3 = f3 - m2 * f2
                        d3 = g3 / b33
                        d2 = (f2 - a23 * d3) / a22
                        d1 = d2
                    else:
                        a11 = gs + gc1 + gl
                        a12 = -gl
                        a22 = gl + gd
                        a23 = -gd
                        a33 = gd + gc2 + gld
                        m1 = a12 / a11
                        b22 = a22 - m1 * a12
                        g2 = f2 - m1 * f1
                        m2 = a23 / b22
                        b33 = a33 - m2 * a23
                        g3 = f3 - m2 * g2
                        d3 = g3 / b33
                        d2 = (g2 - a23 * d3) / b22
                        d1 = (f1 - a12 * d2) / a11
                    # backtracking line search on the residual norm
                    alpha = 1.0
                    accepted = False
                    for dampings in range(MAX_DAMPING):
                        w1 = v1 - alpha * d1
                        w2 = v2 - alpha * d2
                        w3 = v3 - alpha * d3
                        vd = w2 - w3
                        arg = vd / nvt
                        if arg > EXP_CLAMP:
                            arg = EXP_CLAMP
                        ex = exp(arg)
                        nidd = i_s * (ex - 1.0)
                        ngd = i_s * ex / nvt
                        if merged:
                            nf1 = 0.0
                            nf2 = gs * (w2 - s) + gc1 * (w2 - pv2) + nidd
                        else:
                            nf1 = gs * (w1 - s) + gc1 * (w1 - pv1) + pil + gl * (w1 - w2)
                            nf2 = nidd - pil - gl * (w1 - w2)
                        nf3 = gc2 * (w3 - pv3) + gld * w3 - nidd
                        nr = fabs(nf2)
                        if fabs(nf1) > nr:
                            nr = fabs(nf1)
                        if fabs(nf3) > nr:
                            nr = fabs(nf3)
                        if nr < r or nr <= tol:
                            v1 = w1
                            v2 = w2
                            v3 = w3
                            f1 = nf1
                            f2 = nf2
                            f3 = nf3
                            gd = ngd
                            idd = nidd
                            r = nr
                            accepted = True
                            break
                        alpha *= 0.5
                    if not accepted:
                        ok = False
                        break
                    if r <= tol:
                        converged = True
                if merged:
                    v1 = v2
                if not ok:
                    break
                il = 0.0 if merged else pil + gl * (v1 - v2)
                step_iters += it
                resid = r
            if ok:
                break
            v1 = sv1
            v2 = sv2
            v3 = sv3
            il = sil
            nsub *= 2
            if nsub > MAX_SUBSTEPS:
                state[0] = sv1
                state[1] = sv2
                state[2] = sv3
                state[3] = sil
                out[0] = sum_v3
                out[1] = max_resid
                out[2] = max_iters
                return k
        s_prev = s_target
        sum_v3 += v3
        if resid > max_resid:
            max_resid = resid
        if step_iters > max_iters:
            max_iters = step_iters
        if collect:
            tr_v1[k] = v1
            tr_v2[k] = v2
            tr_v3[k] = v3
            tr_id[k] = idd
            tr_il[k] = il
            tr_r[k] = resid
            tr_it[k] = step_iters
            tr_ok[k] = 1

    state[0] = v1
    state[1] = v2
    state[2] = v3
    state[3] = il
    out[0] = sum_v3
    out[1] = max_resid
    out[2] = max_iters
    return -1


def run_segment(double[::1] vs, double vs_prev, double h,
                double c1, double l1, double c2,
                double gs, double gld, double i_s, double nvt,
                double tol, int max_iter, double[::1] state, trace=None):
    """Same contract as ``_kernel_py.run_segment``."""
    cdef bint collect = trace is not None
    cdef double[::1] dummy_d = np.empty(1)
    cdef int[::1] dummy_i = np.empty(1, dtype=np.int32)
    cdef unsigned char[::1] dummy_b = np.empty(1, dtype=np.uint8)
    cdef double[::1] tr_v1 = dummy_d, tr_v2 = dummy_d, tr_v3 = dummy_d
    cdef double[::1] tr_id = dummy_d, tr_il = dummy_d, tr_r = dummy_d
    cdef int[::1] tr_it = dummy_i
    cdef unsigned char[::1] tr_ok = dummy_b
    if collect:
        tr_v1 = trace[0]
        tr_v2 = trace[1]
        tr_v3 = trace[2]
        tr_id = trace[3]
        tr_il = trace[4]
        tr_r = trace[5]
        tr_it = trace[6]
        tr_ok = trace[7]
    cdef double[::1] out = np.zeros(3)
    cdef Py_ssize_t fail
    with nogil:
        fail = _loop(vs, vs_prev, h, c1, l1, c2, gs, gld, i_s, nvt, tol,
                     max_iter, state, collect, tr_v1, tr_v2, tr_v3, tr_id,
                     tr_il, tr_r, tr_it, tr_ok, out)
    return out[0], int(fail), out[1], int(out[2])
