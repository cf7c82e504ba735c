"""JIT-compiled core of the interacting-particle integrator.

One kernel serves both the plain and the tilted dynamics: the tilt drift
(sampled on its own grid, linearly interpolated at sub-step times) is
added to the current top particle, and the discrete log likelihood ratio
is accumulated from the exact Gaussian increments the integrator
consumes, so the plain simulation is the h = 0 special case bit for bit.

Near-collision handling is two-layered.  A stability cap keeps the
explicit step from overshooting the local configuration: the sub-step
never exceeds N * gap^2 / 2 for the current minimal gap, bounding the
repulsion displacement of the tightest pair by its own gap, so tight
configurations expand diffusively instead of exploding (the cap recovers
quadratically as gaps grow).  On top of that, a proposed step whose
minimal signed gap (ordering violations give negative gaps) falls below
min(min_gap, current gap / 2) is halved and retried, up to `max_halvings`
times; after that the step is accepted and the particles re-sorted.  The
accepted state is always descending.
"""

import numba
import numpy as np

STATUS_OK = 0
STATUS_NONFINITE = 1


@numba.njit(cache=True)
def integrate_particles(rng, lam0, t_grid, h_t, h_v, c, min_gap, max_halvings):
    """Euler-Maruyama for dl_i = c dB_i + (1/N) sum_{j!=i} dt/(l_i - l_j),
    with tilt drift h added to particle 0 (the running maximum).

    Returns (values, log_lr, status, fail_time, fail_gap) where values has
    one descending row per grid node and log_lr is the log density ratio
    of the tilted chain against the plain one at the realized path.
    """
    n_out = t_grid.shape[0]
    n = lam0.shape[0]
    out = np.empty((n_out, n))
    lam = -np.sort(-lam0)
    out[0, :] = lam
    log_lr = 0.0
    inv_c = 1.0 / c
    half_inv_c2 = 0.5 * inv_c * inv_c
    n_h = h_t.shape[0]
    hi = 0
    status = STATUS_OK
    fail_time = 0.0
    fail_gap = 0.0

    for k in range(n_out - 1):
        t = t_grid[k]
        t_end = t_grid[k + 1]
        while t_end - t > 1e-14:
            dt_rem = t_end - t
            g_cur = 1e300
            for i in range(n - 1):
                d = lam[i] - lam[i + 1]
                if d < g_cur:
                    g_cur = d
            if g_cur < 1e-13:
                g_cur = 1e-13
            dt_stab = 0.5 * n * g_cur * g_cur
            dt_try = dt_rem if dt_rem < dt_stab else dt_stab
            # never demand more separation than the current state has
            gap_floor = min_gap if min_gap < 0.5 * g_cur else 0.5 * g_cur
            # pairwise repulsion: state-only, shared by all halving retries
            drift = np.zeros(n)
            for i in range(n):
                li = lam[i]
                for j in range(i + 1, n):
                    r = 1.0 / (li - lam[j])
                    drift[i] += r
                    drift[j] -= r
            for i in range(n):
                drift[i] /= n
            hv = 0.0
            if n_h > 0:
                while hi < n_h - 2 and h_t[hi + 1] <= t:
                    hi += 1
                dt_h = h_t[hi + 1] - h_t[hi]
                w = (t - h_t[hi]) / dt_h
                if w < 0.0:
                    w = 0.0
                elif w > 1.0:
                    w = 1.0
                hv = h_v[hi] * (1.0 - w) + h_v[hi + 1] * w
            for halving in range(max_halvings + 1):
                z = rng.standard_normal(n)
                sq = np.sqrt(dt_try)
                prop = lam + drift * dt_try + (c * sq) * z
                if hv != 0.0:
                    prop[0] += hv * dt_try
                gap = 1e300
                for i in range(n - 1):
                    d = prop[i] - prop[i + 1]
                    if d < gap:
                        gap = d
                if gap >= gap_floor or halving == max_halvings:
                    if hv != 0.0:
                        log_lr += hv * (sq * z[0]) * inv_c + hv * hv * dt_try * half_inv_c2
                    lam = -np.sort(-prop)
                    ok = True
                    for i in range(n):
                        if not np.isfinite(lam[i]):
                            ok = False
                    if not ok:
                        status = STATUS_NONFINITE
                        fail_time = t + dt_try
                        fail_gap = gap
                        return out, log_lr, status, fail_time, fail_gap
                    if dt_try == dt_rem:
                        t = t_end
                    else:
                        t = t + dt_try
                    break
                dt_try *= 0.5
        out[k + 1, :] = lam
    return out, log_lr, status, fail_time, fail_gap
