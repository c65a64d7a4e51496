import numpy as np
import pytest

from projprod.kernels import available_kernels, kernel_name, run_product_iteration

from conftest import random_subspace

HAVE_COMPILED = "compiled" in available_kernels()


def build_problem(rng, d=9, slots=(4, 7, 2), steps=800):
    kmax = max(slots)
    q_stack = np.zeros((len(slots), d, kmax))
    ks = np.array(slots, dtype=np.int64)
    for i, k in enumerate(slots):
        q_stack[i, :, :k] = random_subspace(d, k, rng).basis
    labels = rng.integers(0, len(slots), steps)
    x0 = rng.standard_normal(d)
    return q_stack, ks, labels, x0, np.zeros(d)


def test_active_kernel_reported():
    assert kernel_name() in ("compiled", "python")


@pytest.mark.skipif(not HAVE_COMPILED, reason="extension not built")
def test_compiled_matches_python(rng):
    q_stack, ks, labels, x0, px0 = build_problem(rng)
    kwargs = dict(stop_tol=-1.0, ring_w=16, snapshot_steps=[0, 5, 123],
                  probes=np.eye(9)[:3], keep_iterates=True)
    a = run_product_iteration(q_stack, ks, labels, x0, px0,
                              impl="compiled", **kwargs)
    b = run_product_iteration(q_stack, ks, labels, x0, px0,
                              impl="python", **kwargs)
    assert a["steps"] == b["steps"]
    np.testing.assert_allclose(a["norms"], b["norms"], atol=1e-13)
    np.testing.assert_allclose(a["step_res"], b["step_res"], atol=1e-13)
    np.testing.assert_allclose(a["dist"], b["dist"], atol=1e-13)
    np.testing.assert_allclose(a["gaps"], b["gaps"], atol=1e-13)
    np.testing.assert_allclose(a["iterates"], b["iterates"], atol=1e-12)
    np.testing.assert_allclose(a["probe_dots"], b["probe_dots"], atol=1e-12)
    np.testing.assert_allclose(a["snaps"], b["snaps"], atol=1e-12)
    np.testing.assert_array_equal(a["ring_steps"], b["ring_steps"])


@pytest.mark.skipif(not HAVE_COMPILED, reason="extension not built")
def test_compiled_early_stop_matches(rng):
    q_stack, ks, labels, x0, px0 = build_problem(rng, steps=5000)
    a = run_product_iteration(q_stack, ks, labels, x0, px0, stop_tol=1e-6,
                              impl="compiled")
    b = run_product_iteration(q_stack, ks, labels, x0, px0, stop_tol=1e-6,
                              impl="python")
    assert a["steps"] == b["steps"]
    assert a["dist"][-1] <= 1e-6


def test_zero_rank_slot_zeroes_vector(rng):
    d = 4
    q_stack = np.zeros((1, d, 1))
    ks = np.array([0], dtype=np.int64)
    labels = np.zeros(3, dtype=np.int64)
    x0 = rng.standard_normal(d)
    out = run_product_iteration(q_stack, ks, labels, x0, np.zeros(d),
                                stop_tol=-1.0)
    assert out["norms"][1] == 0.0
    np.testing.assert_array_equal(out["x_final"], np.zeros(d))


def test_slot_out_of_range_rejected(rng):
    q_stack = np.zeros((1, 3, 1))
    ks = np.array([1], dtype=np.int64)
    with pytest.raises(ValueError):
        run_product_iteration(q_stack, ks, np.array([2]), np.ones(3),
                              np.zeros(3))
