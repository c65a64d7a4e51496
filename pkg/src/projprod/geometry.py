"""Subspace geometry that gates convergence of projection products.

Three quantities for a tuple of closed subspaces M_1..M_r with
intersection M:

* the angle cosine  cb = || P_r ... P_1 P_{M-perp} ||  (order-sensitive),
* the inclination    l = inf over x outside M of
                         max_j dist(x; M_j) / dist(x; M),
* the inner inclination, the same infimum but restricted to each face
  M_i \\ M, minimized over faces.

cb is computed exactly (dense SVD). The two inclinations are infima over
noncompact sets with no closed form in general; they are estimated by
deterministic sphere grids (small sphere dimension) plus seeded
multi-start local descent, reporting an upper estimate and, where a
Lipschitz argument certifies one, a lower bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from projprod.hilbert import DEFAULT_TOL, Subspace, complement, intersect, operator_norm

CB_MARGIN = 1e-8


class EmptyFaceError(ValueError):
    """A face M_i \\ M is empty (M_i lies inside the intersection)."""

    def __init__(self, face_label):
        self.face_label = face_label
        super().__init__(
            f"face {face_label} is contained in the intersection; "
            "the face infimum ranges over an empty set")


@dataclass(frozen=True)
class AngleReport:
    """Angle cosine of an ordered subspace tuple."""

    cb: float
    subspace_count: int
    ordering: tuple
    tol: float

    def __post_init__(self):
        if not (0.0 <= self.cb <= 1.0 + self.tol):
            raise ValueError(f"cb={self.cb} outside [0, 1 + tol]")

    def to_dict(self) -> dict:
        return {"cb": self.cb, "subspace_count": self.subspace_count,
                "ordering": list(self.ordering), "tol": self.tol}


@dataclass(frozen=True)
class InclinationEstimate:
    """Bracketed estimate of an inclination-type infimum."""

    value_lower: float
    value_upper: float
    grid_resolution: int
    restarts: int
    kind: str  # "inclination" | "inner_inclination"
    per_face: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.value_lower > self.value_upper + 1e-15:
            raise ValueError("value_lower exceeds value_upper")

    def to_dict(self) -> dict:
        out = {"value_lower": self.value_lower,
               "value_upper": self.value_upper,
               "grid_resolution": self.grid_resolution,
               "restarts": self.restarts, "kind": self.kind}
        if self.per_face:
            out["per_face"] = {str(k): v for k, v in self.per_face.items()}
        return out


@dataclass(frozen=True)
class ClosedSumReport:
    """Quantitative form of the cb < 1 criterion, with margin."""

    closed: bool
    cb: float
    margin: float
    threshold: float = CB_MARGIN

    def __bool__(self) -> bool:
        return self.closed

    def to_dict(self) -> dict:
        return {"closed": self.closed, "cb": self.cb,
                "margin": self.margin, "threshold": self.threshold}


def _check_common_dim(subspaces) -> int:
    subspaces = list(subspaces)
    if not subspaces:
        raise ValueError("need at least one subspace")
    d = subspaces[0].ambient_dim
    for m in subspaces:
        if m.ambient_dim != d:
            raise ValueError("subspaces live in different ambient dimensions")
    return d


def friedrichs_cb(subspaces, labels=None, tol: float = DEFAULT_TOL) -> AngleReport:
    """Angle cosine ||P_r ... P_1 P_{M-perp}|| of an ordered tuple.

    The product applies the projections in list order (first element
    innermost); for three or more subspaces the value may depend on the
    order, which is recorded in the report.
    """
    subspaces = list(subspaces)
    d = _check_common_dim(subspaces)
    m = intersect(subspaces, tol=tol)
    perp = complement(m)
    a = perp.basis @ perp.basis.T if perp.dim else np.zeros((d, d))
    for sub in subspaces:
        a = (sub.basis @ (sub.basis.T @ a)) if sub.dim else np.zeros((d, d))
    cb = min(operator_norm(a), 1.0 + tol)
    if labels is None:
        labels = tuple(range(1, len(subspaces) + 1))
    return AngleReport(cb=cb, subspace_count=len(subspaces),
                       ordering=tuple(labels), tol=tol)


def closed_sum_criterion(subspaces, tol: float = DEFAULT_TOL) -> ClosedSumReport:
    """cb < 1 test with reported margin.

    In finite dimension every subspace sum is closed, so this holds for
    every valid input; the margin 1 - cb quantifies how far the tuple is
    from the degenerate regime.
    """
    report = friedrichs_cb(subspaces, tol=tol)
    margin = 1.0 - report.cb
    return ClosedSumReport(closed=report.cb < 1.0 - CB_MARGIN,
                           cb=report.cb, margin=margin)


def _ratio_quadratics(subspaces, sphere_basis: np.ndarray) -> list[np.ndarray]:
    """Gram matrices G_j with max_j sqrt(z G_j z) = ratio at x = B z."""
    grams = []
    for m in subspaces:
        c = sphere_basis - (m.basis @ (m.basis.T @ sphere_basis)
                            if m.dim else 0.0)
        grams.append(c.T @ c)
    return grams


def _ratio_at(grams, z: np.ndarray) -> float:
    zz = z @ z
    if zz == 0.0:
        return np.inf
    return np.sqrt(max(float(max(z @ g @ z for g in grams)), 0.0) / zz)


def _grid_points(dim: int, resolution: int) -> np.ndarray | None:
    """Deterministic unit-sphere grid for sphere dimension <= 3."""
    if dim == 1:
        return np.array([[1.0]])
    if dim == 2:
        phi = np.linspace(0.0, 2.0 * np.pi, resolution, endpoint=False)
        return np.column_stack([np.cos(phi), np.sin(phi)])
    if dim == 3:
        # Fibonacci sphere
        i = np.arange(resolution) + 0.5
        z = 1.0 - 2.0 * i / resolution
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        golden = np.pi * (3.0 - np.sqrt(5.0))
        phi = golden * i
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    return None


def _min_ratio_on_sphere(subspaces, sphere_basis, grid_resolution, restarts,
                         seed) -> tuple[float, float]:
    """(lower, upper) estimates of min over the unit sphere of B-coords."""
    dim = sphere_basis.shape[1]
    grams = _ratio_quadratics(subspaces, sphere_basis)

    best = np.inf
    best_z = None
    lower = 0.0
    points = _grid_points(dim, grid_resolution)
    if points is not None:
        vals_sq = np.max(np.stack([np.einsum("ni,ij,nj->n", points, g, points)
                                   for g in grams]), axis=0)
        idx = int(np.argmin(vals_sq))
        best = float(np.sqrt(max(vals_sq[idx], 0.0)))
        best_z = points[idx]
        if dim == 1:
            lower = best  # the sphere has two points with equal value
        elif dim == 2:
            # ratio is 1-Lipschitz on the sphere; every point lies within
            # arc pi/resolution of a grid point
            lower = max(0.0, best - np.pi / grid_resolution)
    if dim == 1:
        return lower, best
    if restarts == 0:
        if points is None:
            raise ValueError("restarts must be positive for sphere "
                             "dimension > 3 (no deterministic grid)")
        return lower, best  # pure grid mode: antitone in resolution

    starts = []
    if best_z is not None:
        starts.append(best_z)
    for i in range(restarts):
        rng_i = np.random.default_rng(seed + i)  # restart i -> seed + i
        z = rng_i.standard_normal(dim)
        starts.append(z / np.linalg.norm(z))
    for z0 in starts:
        res = minimize(lambda z: _ratio_at(grams, z), z0,
                       method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-14,
                                "maxiter": 400 * dim})
        val = _ratio_at(grams, res.x)
        if val < best:
            best = float(val)
    return lower, float(best)


def inclination(subspaces, grid_resolution: int = 4096, restarts: int = 8,
                seed: int = 0) -> InclinationEstimate:
    """Estimate inf over x outside M of max_j dist(x;M_j)/dist(x;M).

    The ratio is invariant under shifts along M and under scaling, so the
    search runs over the unit sphere of M-perp, where it equals
    max_j ||(I - P_j) x||. Upper estimate: minimum over a deterministic
    grid (sphere dimension <= 3) and seeded Nelder-Mead restarts (restart
    i uses seed + i). Lower bound: only where certified (sphere dimension
    1 exactly; dimension 2 via the grid and the 1-Lipschitz bound),
    otherwise 0.
    """
    subspaces = list(subspaces)
    d = _check_common_dim(subspaces)
    if grid_resolution < 8:
        raise ValueError("grid_resolution must be at least 8")
    m = intersect(subspaces)
    if m.dim == d:
        raise ValueError("intersection is the full space; the ratio is "
                         "undefined everywhere")
    perp = complement(m)
    lower, upper = _min_ratio_on_sphere(subspaces, perp.basis,
                                        grid_resolution, restarts, seed)
    return InclinationEstimate(value_lower=lower, value_upper=upper,
                               grid_resolution=grid_resolution,
                               restarts=restarts, kind="inclination")


def inner_inclination(subspaces, grid_resolution: int = 4096,
                      restarts: int = 8, seed: int = 0) -> InclinationEstimate:
    """Estimate the face-restricted inclination infimum.

    Runs the inclination estimator with x confined to each face
    M_i \\ M — equivalently the unit sphere of M_i intersected with
    M-perp — and takes the minimum over faces. Raises EmptyFaceError
    for faces with M_i contained in M.
    """
    subspaces = list(subspaces)
    d = _check_common_dim(subspaces)
    if grid_resolution < 8:
        raise ValueError("grid_resolution must be at least 8")
    m = intersect(subspaces)
    if m.dim == d:
        raise ValueError("intersection is the full space; the ratio is "
                         "undefined everywhere")
    perp = complement(m)
    lowers, uppers, per_face = [], [], {}
    for i, face_space in enumerate(subspaces, start=1):
        face = intersect([face_space, perp])
        if face.dim == 0:
            raise EmptyFaceError(i)
        lo, up = _min_ratio_on_sphere(subspaces, face.basis,
                                      grid_resolution, restarts,
                                      seed + 1000 * i)
        lowers.append(lo)
        uppers.append(up)
        per_face[i] = up
    return InclinationEstimate(value_lower=min(lowers),
                               value_upper=min(uppers),
                               grid_resolution=grid_resolution,
                               restarts=restarts, kind="inner_inclination",
                               per_face=per_face)
