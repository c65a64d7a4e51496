"""Kernel selection: compiled extension if available, numpy fallback.

Set PROJPROD_PURE_PYTHON=1 to force the fallback (used by the benchmark
and the parity tests). `kernel_name()` reports which one is active.
"""

from __future__ import annotations

import os

import numpy as np

from projprod import _iterate_py

_FORCE_PY = os.environ.get("PROJPROD_PURE_PYTHON", "") not in ("", "0")

if not _FORCE_PY:
    try:
        from projprod import _iterate_cy
        _active = _iterate_cy
        _ACTIVE_NAME = "compiled"
    except ImportError:
        _active = _iterate_py
        _ACTIVE_NAME = "python"
else:
    _active = _iterate_py
    _ACTIVE_NAME = "python"


def kernel_name() -> str:
    return _ACTIVE_NAME


def available_kernels() -> dict:
    """Name -> callable for every importable kernel (benchmark helper)."""
    kernels = {"python": _iterate_py.run_product_iteration}
    try:
        from projprod import _iterate_cy as ext
        kernels["compiled"] = ext.run_product_iteration
    except ImportError:
        pass
    return kernels


def run_product_iteration(q_stack, ks, labels, x0, px0, stop_tol=-1.0,
                          ring_w=64, snapshot_steps=None, probes=None,
                          keep_iterates=False, impl=None):
    """Normalize arguments and dispatch to the active kernel.

    See projprod._iterate_py.run_product_iteration for the contract.
    """
    q_stack = np.ascontiguousarray(q_stack, dtype=float)
    ks = np.ascontiguousarray(ks, dtype=np.int64)
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    x0 = np.ascontiguousarray(x0, dtype=float)
    px0 = np.ascontiguousarray(px0, dtype=float)
    if snapshot_steps is None:
        snapshot_steps = np.empty(0, dtype=np.int64)
    else:
        snapshot_steps = np.unique(np.asarray(snapshot_steps, dtype=np.int64))
    if probes is None:
        probes = np.empty((0, x0.shape[0]))
    else:
        probes = np.ascontiguousarray(np.atleast_2d(probes), dtype=float)
    if labels.size and (labels.min() < 0 or labels.max() >= ks.shape[0]):
        raise ValueError("label slot out of range of the projector stack")
    fn = available_kernels()[impl] if impl else _active.run_product_iteration
    return fn(q_stack, ks, labels, x0, px0, float(stop_tol), int(ring_w),
              snapshot_steps, probes, bool(keep_iterates))
