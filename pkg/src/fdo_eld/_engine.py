"""Hot optimizer and dispatch kernels.

Everything here is written as plain scalar loops over NumPy arrays so the
numba and numpy backends execute the identical floating-point operation
sequence (see :mod:`fdo_eld._backend`). Transcendentals are precomputed by
the callers: the Levy step vectors and the sine-map weight schedule arrive
as ready arrays, leaving only rational arithmetic, `abs` and comparisons in
the kernels.

Random draw consumption order (one Philox stream per run, fixed):
  1. uniform block ``(pop, dim)`` for uniform initialization (Sobol: none),
  2. per epoch: uniform block ``(pop,)`` on [-1, 1] (branch scalar r), then
     standard-normal blocks ``(pop, dim)`` twice (Levy numerator u, then
     denominator v).

The generic driver :func:`run_generic` accepts any Python objective; its
numba twin :func:`run_eld` inlines the dispatch fitness for speed. The two
bodies are kept statement-for-statement identical and a regression test
asserts bit-equality between them.
"""

import numpy as np

from ._backend import jit


def eld_fitness_kernel(
    x, afc, bfc, cfc, aec, bec, cec, demand, pen_b, pen_w, eced, e_limit
):
    """Scalarized dispatch fitness of one raw (box-clamped) power vector.

    CEED mode: fuel + pen_b * emission + pen_w * |sum(x) - demand|.
    ECED mode: fuel + pen_w * max(0, emission - e_limit) + the same balance
    penalty. The balance term uses the demand-only residual; transmission
    loss enters through the repair operator at reporting time, not here.
    """
    fc = 0.0
    ec = 0.0
    s = 0.0
    for j in range(x.shape[0]):
        xj = x[j]
        fc += afc[j] * xj * xj + bfc[j] * xj + cfc[j]
        ec += aec[j] * xj * xj + bec[j] * xj + cec[j]
        s += xj
    g = s - demand
    if g < 0.0:
        g = -g
    pen = pen_w * g
    if eced:
        excess = ec - e_limit
        if excess > 0.0:
            return fc + pen_w * excess + pen
        return fc + pen
    return fc + pen_b * ec + pen


def repair_kernel(p0, lo, hi, bmat, b0, b00, demand, tol, max_iter):
    """Clamp to the box, then redistribute power onto the balance manifold.

    Iteratively removes the residual ``sum(P) - loss(P) - demand`` by
    shifting power in proportion to the remaining headroom (down toward
    ``lo`` on surplus, up toward ``hi`` on deficit), re-clamping each pass.

    Returns ``(P, residual, iterations, converged)``.
    """
    dim = p0.shape[0]
    p = np.empty(dim)
    for j in range(dim):
        v = p0[j]
        if v < lo[j]:
            v = lo[j]
        elif v > hi[j]:
            v = hi[j]
        p[j] = v
    resid = 0.0
    for it in range(max_iter):
        loss = b00
        total = 0.0
        for j in range(dim):
            acc = b0[j]
            for k in range(dim):
                acc += bmat[j, k] * p[k]
            loss += acc * p[j]
            total += p[j]
        resid = total - loss - demand
        if -tol <= resid <= tol:
            return p, resid, it, True
        head_sum = 0.0
        if resid > 0.0:
            for j in range(dim):
                head_sum += p[j] - lo[j]
            if head_sum <= 0.0:
                return p, resid, it, False
            for j in range(dim):
                p[j] -= resid * (p[j] - lo[j]) / head_sum
        else:
            for j in range(dim):
                head_sum += hi[j] - p[j]
            if head_sum <= 0.0:
                return p, resid, it, False
            for j in range(dim):
                p[j] += (-resid) * (hi[j] - p[j]) / head_sum
        for j in range(dim):
            if p[j] < lo[j]:
                p[j] = lo[j]
            elif p[j] > hi[j]:
                p[j] = hi[j]
    loss = b00
    total = 0.0
    for j in range(dim):
        acc = b0[j]
        for k in range(dim):
            acc += bmat[j, k] * p[k]
        loss += acc * p[j]
        total += p[j]
    resid = total - loss - demand
    return p, resid, max_iter, (-tol <= resid <= tol)


def run_generic(objective, x, f, paces, lo, hi, wf_sched, r_u, r_levy, maximize):
    """Run the scout-swarm epoch loop with an arbitrary Python objective.

    Mutates ``x`` (positions), ``f`` (fitness cache) and ``paces`` (last
    accepted pace per agent) in place. ``wf_sched`` holds one effective
    weight-factor value per epoch. Returns
    ``(trace, best_x, best_f, evaluations)`` where ``trace[e]`` is the best
    fitness seen up to the end of epoch ``e``.
    """
    pop, dim = x.shape
    epochs = wf_sched.shape[0]
    trace = np.empty(epochs)
    best_i = 0
    for i in range(1, pop):
        if (f[i] > f[best_i]) if maximize else (f[i] < f[best_i]):
            best_i = i
    best_f = f[best_i]
    best_x = x[best_i].copy()
    pace = np.empty(dim)
    cand = np.empty(dim)
    evals = 0
    for e in range(epochs):
        wf = wf_sched[e]
        for i in range(pop):
            f_cur = f[i]
            num = f_cur if maximize else best_f
            den = best_f if maximize else f_cur
            if den == 0.0:
                walk = True
                fw = 0.0
            else:
                fw = abs(num / den) - wf
                if fw < 0.0:
                    fw = 0.0
                elif fw > 1.0:
                    fw = 1.0
                walk = fw == 0.0 or fw == 1.0
            if walk:
                for j in range(dim):
                    pace[j] = x[i, j] * r_levy[e, i, j]
            elif r_u[e, i] < 0.0:
                for j in range(dim):
                    pace[j] = (x[i, j] - best_x[j]) * fw * -1.0
            else:
                for j in range(dim):
                    pace[j] = (x[i, j] - best_x[j]) * fw
            for j in range(dim):
                v = x[i, j] + pace[j]
                if v < lo[j]:
                    v = lo[j]
                elif v > hi[j]:
                    v = hi[j]
                cand[j] = v
            f_new = objective(cand)
            evals += 1
            if (f_new > f_cur) if maximize else (f_new < f_cur):
                for j in range(dim):
                    paces[i, j] = pace[j]
                    x[i, j] = cand[j]
                f[i] = f_new
            else:
                for j in range(dim):
                    v = x[i, j] + paces[i, j]
                    if v < lo[j]:
                        v = lo[j]
                    elif v > hi[j]:
                        v = hi[j]
                    cand[j] = v
                f_new = objective(cand)
                evals += 1
                if (f_new > f_cur) if maximize else (f_new < f_cur):
                    for j in range(dim):
                        x[i, j] = cand[j]
                    f[i] = f_new
            if (f[i] > best_f) if maximize else (f[i] < best_f):
                best_f = f[i]
                for j in range(dim):
                    best_x[j] = x[i, j]
        trace[e] = best_f
    return trace, best_x, best_f, evals


def run_eld(
    x, f, paces, lo, hi, wf_sched, r_u, r_levy, maximize,
    afc, bfc, cfc, aec, bec, cec, demand, pen_b, pen_w, eced, e_limit,
):
    """Numba twin of :func:`run_generic` with the dispatch fitness inlined."""
    pop, dim = x.shape
    epochs = wf_sched.shape[0]
    trace = np.empty(epochs)
    best_i = 0
    for i in range(1, pop):
        if (f[i] > f[best_i]) if maximize else (f[i] < f[best_i]):
            best_i = i
    best_f = f[best_i]
    best_x = x[best_i].copy()
    pace = np.empty(dim)
    cand = np.empty(dim)
    evals = 0
    for e in range(epochs):
        wf = wf_sched[e]
        for i in range(pop):
            f_cur = f[i]
            num = f_cur if maximize else best_f
            den = best_f if maximize else f_cur
            if den == 0.0:
                walk = True
                fw = 0.0
            else:
                fw = abs(num / den) - wf
                if fw < 0.0:
                    fw = 0.0
                elif fw > 1.0:
                    fw = 1.0
                walk = fw == 0.0 or fw == 1.0
            if walk:
                for j in range(dim):
                    pace[j] = x[i, j] * r_levy[e, i, j]
            elif r_u[e, i] < 0.0:
                for j in range(dim):
                    pace[j] = (x[i, j] - best_x[j]) * fw * -1.0
            else:
                for j in range(dim):
                    pace[j] = (x[i, j] - best_x[j]) * fw
            for j in range(dim):
                v = x[i, j] + pace[j]
                if v < lo[j]:
                    v = lo[j]
                elif v > hi[j]:
                    v = hi[j]
                cand[j] = v
            f_new = eld_fitness_kernel(
                cand, afc, bfc, cfc, aec, bec, cec, demand, pen_b, pen_w, eced, e_limit
            )
            evals += 1
            if (f_new > f_cur) if maximize else (f_new < f_cur):
                for j in range(dim):
                    paces[i, j] = pace[j]
                    x[i, j] = cand[j]
                f[i] = f_new
            else:
                for j in range(dim):
                    v = x[i, j] + paces[i, j]
                    if v < lo[j]:
                        v = lo[j]
                    elif v > hi[j]:
                        v = hi[j]
                    cand[j] = v
                f_new = eld_fitness_kernel(
                    cand, afc, bfc, cfc, aec, bec, cec, demand, pen_b, pen_w, eced, e_limit
                )
                evals += 1
                if (f_new > f_cur) if maximize else (f_new < f_cur):
                    for j in range(dim):
                        x[i, j] = cand[j]
                    f[i] = f_new
            if (f[i] > best_f) if maximize else (f[i] < best_f):
                best_f = f[i]
                for j in range(dim):
                    best_x[j] = x[i, j]
        trace[e] = best_f
    return trace, best_x, best_f, evals


# Bind kernels to the selected backend. eld_fitness_kernel must be bound
# before run_eld so the compiled loop resolves it to the compiled version.
eld_fitness_kernel = jit(eld_fitness_kernel)
repair_kernel = jit(repair_kernel)
run_eld = jit(run_eld)
