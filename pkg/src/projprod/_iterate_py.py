"""Pure-numpy product-iteration kernel (fallback for the compiled one).

Both kernels implement the same contract; see projprod.kernels.
"""

from __future__ import annotations

import numpy as np


def run_product_iteration(q_stack, ks, labels, x0, px0, stop_tol,
                          ring_w, snapshot_steps, probes, keep_iterates):
    """Run x <- Q_l (Q_l^T x) along a label sequence, recording scalars.

    Parameters
    ----------
    q_stack : (L, d, kmax) float64, padded orthonormal factors per slot.
    ks : (L,) int64, actual rank of each slot.
    labels : (T_max,) int64, 0-based slot applied at step n = 1..T_max.
    x0, px0 : (d,) float64, start vector and its limit projection.
    stop_tol : float, stop once ||x_n - px0|| <= stop_tol (negative: never).
    ring_w : int, ring buffer width (most recent iterates kept).
    snapshot_steps : sorted unique int64 array of steps to snapshot.
    probes : (p, d) float64, may be empty; per-step inner products recorded.
    keep_iterates : bool, keep the full (T+1, d) iterate matrix.

    Returns
    -------
    dict with steps, norms, step_res, dist, gaps, ring, ring_steps,
    snaps, probe_dots, iterates, x_final (see projprod.kernels).
    """
    d = x0.shape[0]
    t_max = labels.shape[0]
    n_probe = probes.shape[0]
    n_snap = snapshot_steps.shape[0]

    norms = np.empty(t_max + 1)
    step_res = np.zeros(t_max + 1)
    dist = np.empty(t_max + 1)
    gaps = np.zeros(t_max + 1)
    ring = np.zeros((ring_w, d))
    ring_steps = np.full(ring_w, -1, dtype=np.int64)
    snaps = np.zeros((n_snap, d))
    probe_dots = np.empty((t_max + 1, n_probe)) if n_probe else None
    iterates = np.empty((t_max + 1, d)) if keep_iterates else None

    x = x0.astype(float, copy=True)
    norms[0] = np.linalg.norm(x)
    dist[0] = np.linalg.norm(x - px0)
    ring[0] = x
    ring_steps[0] = 0
    sp = 0
    if sp < n_snap and snapshot_steps[sp] == 0:
        snaps[sp] = x
        sp += 1
    if n_probe:
        probe_dots[0] = probes @ x
    if keep_iterates:
        iterates[0] = x

    steps = t_max
    for n in range(1, t_max + 1):
        slot = labels[n - 1]
        k = ks[slot]
        x_prev = x
        if k == 0:
            x = np.zeros(d)
        else:
            q = q_stack[slot, :, :k]
            x = q @ (q.T @ x)
        norms[n] = np.linalg.norm(x)
        res = np.linalg.norm(x - x_prev)
        step_res[n] = res
        gaps[n] = abs(norms[n - 1] ** 2 - norms[n] ** 2 - res * res)
        dist[n] = np.linalg.norm(x - px0)
        ring[n % ring_w] = x
        ring_steps[n % ring_w] = n
        if sp < n_snap and snapshot_steps[sp] == n:
            snaps[sp] = x
            sp += 1
        if n_probe:
            probe_dots[n] = probes @ x
        if keep_iterates:
            iterates[n] = x
        if dist[n] <= stop_tol:
            steps = n
            break

    t = steps
    return {
        "steps": t,
        "norms": norms[:t + 1],
        "step_res": step_res[:t + 1],
        "dist": dist[:t + 1],
        "gaps": gaps[:t + 1],
        "ring": ring,
        "ring_steps": ring_steps,
        "snaps": snaps,
        "snaps_filled": sp,
        "probe_dots": probe_dots[:t + 1] if n_probe else None,
        "iterates": iterates[:t + 1] if keep_iterates else None,
        "x_final": x,
    }
