"""Pure-Python transient kernel, the fallback when the compiled extension is
unavailable.

This module and ``_kernel.pyx`` implement the *same* sequence of IEEE double
operations (the extension is compiled with FP contraction disabled), so the
two backends produce bit-identical trajectories. Keep the arithmetic in the
two files textually in sync.

The circuit is the single-series-diode rectifier: source resistance into a
shunt matching capacitor C1, series matching inductor L1, diode, and an
output capacitor C2 in parallel with the load. Reactive elements use
backward-Euler companion models; the diode uses the full Shockley law solved
by damped Newton iteration at every step. Steps that fail to converge are
retried with halved substeps (source linearly interpolated) up to 1024x.
"""

from math import exp

#: exp() argument clamp; keeps intermediate Newton iterates finite without
#: affecting converged solutions (physical diode drops stay far below this).
_EXP_CLAMP = 250.0
_MAX_SUBSTEPS = 1024
_MAX_DAMPING = 40


def backend_name():
    return "python"


def run_segment(vs, vs_prev, h, c1, l1, c2, gs, gld, i_s, nvt, tol, max_iter,
                state, trace=None):
    """Advance the circuit state through ``len(vs)`` backward-Euler steps.

    ``vs`` holds the source voltage at each step's endpoint; ``vs_prev`` is
    the source value at the time of the incoming ``state`` (used when a step
    is subdivided). ``state`` is the length-4 array [v1, v2, v3, il],
    mutated in place.

    Returns ``(sum_v3, fail_index, max_resid, max_iters)`` where
    ``fail_index`` is -1 on success and the offending step index otherwise,
    ``max_resid`` the largest accepted Newton residual and ``max_iters`` the
    largest per-step Newton iteration count. When ``trace`` is given it must
    be the tuple of arrays ``(v1, v2, v3, i_d, i_l, resid, iters, converged)``
    of the same length as ``vs``.
    """
    v1 = state[0]
    v2 = state[1]
    v3 = state[2]
    il = state[3]
    merged = l1 <= 0.0
    n = len(vs)
    sum_v3 = 0.0
    max_resid = 0.0
    max_iters = 0
    s_prev = vs_prev
    collect = trace is not None
    if collect:
        tr_v1, tr_v2, tr_v3, tr_id, tr_il, tr_r, tr_it, tr_ok = trace

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
                s = s_prev + (s_target - s_prev) * (float(j) / float(nsub))
                pv1 = v1
                pv2 = v2
                pv3 = v3
                pil = il
                # --- damped Newton on the nodal equations -----------------
                # current point
                vd = v2 - v3
                arg = vd / nvt
                if arg > _EXP_CLAMP:
                    arg = _EXP_CLAMP
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
                r = abs(f2)
                if abs(f1) > r:
                    r = abs(f1)
                if abs(f3) > r:
                    r = abs(f3)
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
                    for _ in range(_MAX_DAMPING):
                        w1 = v1 - alpha * d1
                        w2 = v2 - alpha * d2
                        w3 = v3 - alpha * d3
                        vd = w2 - w3
                        arg = vd / nvt
                        if arg > _EXP_CLAMP:
                            arg = _EXP_CLAMP
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
                        nr = abs(nf2)
                        if abs(nf1) > nr:
                            nr = abs(nf1)
                        if abs(nf3) > nr:
                            nr = abs(nf3)
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
            if nsub > _MAX_SUBSTEPS:
                state[0] = sv1
                state[1] = sv2
                state[2] = sv3
                state[3] = sil
                return sum_v3, k, max_resid, max_iters
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
    return sum_v3, -1, max_resid, max_iters
