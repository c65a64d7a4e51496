"""Finite-dimensional Hilbert space primitives.

Vectors are plain 1-D float64 numpy arrays. Closed subspaces of R^d are
stored by an orthonormal basis (columns of a tall matrix Q), and the
orthogonal projection onto a subspace is applied factored as Q (Q^T x),
which is numerically stable and O(d k). The zero subspace (k = 0) and the
full space (k = d) are first-class.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_TOL = 1e-10


def as_vector(x, dim: int | None = None) -> np.ndarray:
    """Validate and return x as a finite 1-D float64 array."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


@dataclass(frozen=True, eq=False)
class Subspace:
    """A closed subspace of R^d held as an orthonormal basis.

    Parameters
    ----------
    basis : ndarray, shape (d, k)
        Orthonormal columns spanning the subspace; k = 0 encodes {0}.
    ambient_dim : int
        The dimension d of the surrounding space.
    tol : float
        Tolerance used in rank/membership decisions involving this space.
    """

    basis: np.ndarray
    ambient_dim: int
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        q = np.asarray(self.basis, dtype=float)
        if q.ndim != 2:
            q = q.reshape(self.ambient_dim, -1)
        if q.shape[0] != self.ambient_dim:
            raise ValueError(
                f"basis rows ({q.shape[0]}) do not match ambient_dim "
                f"({self.ambient_dim})")
        if q.shape[1] > self.ambient_dim:
            raise ValueError("more basis vectors than ambient dimension")
        if not np.all(np.isfinite(q)):
            raise ValueError("basis has non-finite entries")
        gram = q.T @ q
        if q.shape[1] and not np.allclose(gram, np.eye(q.shape[1]),
                                          atol=max(self.tol, 1e-12) * 100):
            raise ValueError("basis columns are not orthonormal; "
                             "use orthonormalize() to build a Subspace")
        q = np.ascontiguousarray(q)
        q.setflags(write=False)
        object.__setattr__(self, "basis", q)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def project(self, x) -> np.ndarray:
        x = as_vector(x, self.ambient_dim)
        if self.dim == 0:
            return np.zeros(self.ambient_dim)
        return self.basis @ (self.basis.T @ x)

    def contains(self, x, tol: float | None = None) -> bool:
        x = as_vector(x, self.ambient_dim)
        t = self.tol if tol is None else tol
        return float(np.linalg.norm(x - self.project(x))) <= t

    def to_dict(self) -> dict:
        """JSON form: ambient_dim plus basis vectors as rows."""
        return {
            "ambient_dim": self.ambient_dim,
            "basis": self.basis.T.tolist(),
            "tol": self.tol,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Subspace":
        d = int(data["ambient_dim"])
        rows = np.asarray(data.get("basis", []), dtype=float)
        if rows.size == 0:
            rows = np.empty((0, d))
        return cls(rows.T, d, float(data.get("tol", DEFAULT_TOL)))

    @classmethod
    def zero(cls, ambient_dim: int, tol: float = DEFAULT_TOL) -> "Subspace":
        return cls(np.empty((ambient_dim, 0)), ambient_dim, tol)

    @classmethod
    def full(cls, ambient_dim: int, tol: float = DEFAULT_TOL) -> "Subspace":
        return cls(np.eye(ambient_dim), ambient_dim, tol)

    def __repr__(self):
        return (f"Subspace(dim={self.dim}, ambient_dim={self.ambient_dim}, "
                f"tol={self.tol:g})")


@dataclass(frozen=True, eq=False)
class Projector:
    """Orthogonal projection onto `source`, applied factored as Q (Q^T x)."""

    source: Subspace
    _matrix: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def ambient_dim(self) -> int:
        return self.source.ambient_dim

    @property
    def rank(self) -> int:
        return self.source.dim

    def apply(self, x) -> np.ndarray:
        return self.source.project(x)

    __call__ = apply

    def matrix(self) -> np.ndarray:
        """Densified d x d projection matrix Q Q^T (cached)."""
        if self._matrix is None:
            q = self.source.basis
            m = q @ q.T if self.source.dim else np.zeros(
                (self.ambient_dim, self.ambient_dim))
            object.__setattr__(self, "_matrix", m)
        return self._matrix

    def complement_matrix(self) -> np.ndarray:
        return np.eye(self.ambient_dim) - self.matrix()


def orthonormalize(vectors, tol: float = DEFAULT_TOL,
                   ambient_dim: int | None = None) -> Subspace:
    """Build a Subspace from a spanning set.

    Runs modified Gram-Schmidt with one re-orthogonalization pass, keeping
    the order of the inputs (the first k accepted vectors span the same
    flag as the first inputs). Vectors whose residual norm after
    orthogonalization is <= tol are dropped as linearly dependent.

    Parameters
    ----------
    vectors : iterable of array-like
        Spanning set; may be rank deficient or empty.
    tol : float
        Absolute residual-norm threshold for dropping a vector.
    ambient_dim : int, optional
        Required when `vectors` is empty (the zero subspace of R^d).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    vecs = [np.asarray(v, dtype=float) for v in vectors]
    if not vecs:
        if ambient_dim is None:
            raise ValueError("ambient_dim required for an empty spanning set")
        return Subspace.zero(ambient_dim, tol)
    d = vecs[0].shape[0] if vecs[0].ndim == 1 else -1
    basis: list[np.ndarray] = []
    for v in vecs:
        v = as_vector(v, d if ambient_dim is None else ambient_dim)
        if ambient_dim is None and v.shape[0] != d:
            raise ValueError("vectors have mixed dimensions")
        u = v.copy()
        for _ in range(2):  # second pass restores orthogonality lost to cancellation
            for q in basis:
                u -= (q @ u) * q
        norm = np.linalg.norm(u)
        if norm > tol:
            basis.append(u / norm)
    d = d if ambient_dim is None else ambient_dim
    if not basis:
        return Subspace.zero(d, tol)
    return Subspace(np.column_stack(basis), d, tol)


def project(p: Projector, x) -> np.ndarray:
    """Apply the orthogonal projection p to x."""
    return p.apply(x)


def distance(x, m: Subspace) -> float:
    """Distance from x to the subspace m, i.e. ||x - P_m x||."""
    x = as_vector(x, m.ambient_dim)
    return float(np.linalg.norm(x - m.project(x)))


def complement(m: Subspace) -> Subspace:
    """Orthogonal complement of m, of dimension d - dim(m)."""
    d = m.ambient_dim
    if m.dim == 0:
        return Subspace.full(d, m.tol)
    if m.dim == d:
        return Subspace.zero(d, m.tol)
    # Right-singular vectors of Q^T with zero singular value span m-perp.
    _, _, vt = np.linalg.svd(m.basis.T, full_matrices=True)
    return Subspace(vt[m.dim:].T, d, m.tol)


def intersect(subspaces, tol: float = DEFAULT_TOL) -> Subspace:
    """Intersection of a nonempty list of subspaces of one ambient space.

    Uses the spectral method: the intersection is the eigenspace of the
    averaged projector S = (1/r) sum_i P_i for eigenvalue 1. A vector has
    Sx = x iff every P_i fixes it, so eigenvalues within tol of 1 are
    taken as the intersection. (Dense SVD of stacked complements is kept
    as an independent test oracle.)
    """
    subspaces = list(subspaces)
    if not subspaces:
        raise ValueError("intersect requires at least one subspace")
    d = subspaces[0].ambient_dim
    for m in subspaces:
        if m.ambient_dim != d:
            raise ValueError("subspaces live in different ambient dimensions")
    if len(subspaces) == 1:
        m = subspaces[0]
        return Subspace(m.basis, d, tol)
    if any(m.dim == 0 for m in subspaces):
        return Subspace.zero(d, tol)
    s = np.zeros((d, d))
    for m in subspaces:
        s += m.basis @ m.basis.T
    s /= len(subspaces)
    evals, evecs = np.linalg.eigh(s)
    keep = evals >= 1.0 - tol
    if not np.any(keep):
        return Subspace.zero(d, tol)
    return Subspace(evecs[:, keep], d, tol)


def operator_norm(a) -> float:
    """Largest singular value of a dense linear map on R^d."""
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError("operator has non-finite entries")
    if a.size == 0:
        return 0.0
    return float(np.linalg.svd(a, compute_uv=False)[0])


def projector_leq(p: Projector, q: Projector, tol: float | None = None) -> bool:
    """True iff range(p) is contained in range(q) (i.e. p <= q).

    Checked as: q fixes every basis vector of range(p), within tol.
    """
    if p.ambient_dim != q.ambient_dim:
        raise ValueError("projectors act on different ambient dimensions")
    t = p.source.tol if tol is None else tol
    if p.rank == 0:
        return True
    b = p.source.basis
    qb = q.source.basis @ (q.source.basis.T @ b) if q.rank else np.zeros_like(b)
    return float(np.max(np.linalg.norm(b - qb, axis=0))) <= t
