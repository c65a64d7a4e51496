import numpy as np
import pytest

from projprod.hilbert import Subspace, orthonormalize


def random_subspace(d: int, k: int, rng: np.random.Generator,
                    tol: float = 1e-10) -> Subspace:
    """Random k-dimensional subspace of R^d (Haar-ish via Gaussian spans)."""
    if k == 0:
        return Subspace.zero(d, tol)
    return orthonormalize(rng.standard_normal((k, d)), tol=tol)


def stacked_complement_nullspace(subspaces, tol: float = 1e-8) -> np.ndarray:
    """Oracle for the intersection of subspace ranges.

    Stacks the complement projectors (I - P_i) and returns an orthonormal
    basis (columns) of the common null space via dense SVD. Independent of
    projprod.hilbert.intersect, which uses an averaged-projector
    eigendecomposition.
    """
    d = subspaces[0].ambient_dim
    blocks = [np.eye(d) - (m.basis @ m.basis.T if m.dim else np.zeros((d, d)))
              for m in subspaces]
    a = np.vstack(blocks)
    _, s, vt = np.linalg.svd(a, full_matrices=True)
    s = np.concatenate([s, np.zeros(d - len(s))])
    return vt[s <= tol].T


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
