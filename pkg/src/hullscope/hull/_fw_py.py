"""Pure numpy away-step Frank-Wolfe kernel.

Mirrors ``_fwcore.pyx`` step for step; used when the compiled extension is
unavailable or ``HULLSCOPE_PURE_PYTHON`` is set.
"""

import numpy as np

CONVERGED = 0
MAX_ITER = 1
STALLED = 2


def fw_run(V, q, alpha, p, gap_tol, max_iter, exact=True, trace=None):
    """Run away-step Frank-Wolfe on ``min ||V.T @ alpha - q||^2`` over the simplex.

    ``alpha`` and ``p`` (the current point ``V.T @ alpha``) are updated in
    place. When ``trace`` is given, ``trace[k]`` receives the objective after
    step ``k``. Returns ``(iterations, gap, status)``.
    """
    r = p - q
    fresh = False
    gap = np.inf
    it = 0
    while True:
        g = V @ r
        ga = float(g @ alpha)
        s = int(np.argmin(g))
        gap = 2.0 * (ga - g[s])
        if gap <= gap_tol:
            if fresh:
                return it, gap, CONVERGED
            # the incremental iterate drifts; confirm on an exact recompute
            p[:] = V.T @ alpha
            r = p - q
            fresh = True
            continue
        if it >= max_iter:
            return it, gap, MAX_ITER

        away = False
        if exact:
            masked = np.where(alpha > 0, g, -np.inf)
            v = int(np.argmax(masked))
            away_gap = 2.0 * (g[v] - ga)
            away = away_gap > gap and alpha[v] < 1.0
        if away:
            d = p - V[v]
            gmax = alpha[v] / (1.0 - alpha[v])
        else:
            d = V[s] - p
            gmax = 1.0
        dd = float(d @ d)
        rd = float(r @ d)
        if dd == 0.0 or rd >= 0.0:
            return it, gap, STALLED
        step = -rd / dd
        if not exact:
            step = min(step, 2.0 / (it + 2.0))
        if step > gmax:
            step = gmax
        r_new = r + step * d

        if away:
            alpha *= 1.0 + step
            alpha[v] -= step
            if step == gmax or alpha[v] < 0.0:
                alpha[v] = 0.0
        else:
            alpha *= 1.0 - step
            alpha[s] += step
            if step == 1.0:
                alpha[:] = 0.0
                alpha[s] = 1.0
        p += step * d
        r = r_new
        fresh = False
        if trace is not None:
            trace[it] = float(r @ r)
        it += 1
