"""Product iteration engine: x_n = P_{sigma(n)} x_{n-1} with trace capture.

A ProjectorFamily maps labels to projectors: labels 1..r index the finite
part, labels beyond r are served by an optional TailFamily (typically a
monotone decreasing chain that stabilizes at some depth, which pins down
the tail's contribution to the limit projector in a finite truncation).

iterate() runs the product along a schedule through the compiled/numpy
kernel, recording per step the applied label, the iterate norm, the step
residual, the distance to the limit projection of the start vector, and
the gap in the exact identity
||x_{n-1}||^2 - ||x_n||^2 = ||x_n - x_{n-1}||^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from projprod import kernels
from projprod.hilbert import Projector, Subspace, as_vector, intersect, projector_leq
from projprod.schedules import Schedule

DEFAULT_N_MAX = 1_000_000
DEFAULT_STOP_TOL = 1e-10
SNAPSHOT_CAP = 4096


class TailFamily:
    """Projectors for labels start_label, start_label + 1, ...

    `subspace_for(label)` must be defined for start_label <= label <=
    stabilization_depth; labels beyond the depth reuse the subspace at
    the depth (the family has stopped changing there), which gives the
    infinite tail a well-defined intersection in a finite truncation.
    """

    def __init__(self, subspace_for, start_label: int,
                 stabilization_depth: int, monotone_decreasing: bool):
        if stabilization_depth < start_label:
            raise ValueError("stabilization depth precedes start label")
        self._subspace_for = subspace_for
        self.start_label = int(start_label)
        self.stabilization_depth = int(stabilization_depth)
        self.monotone_decreasing = bool(monotone_decreasing)
        self._cache: dict[int, Projector] = {}

    def subspace(self, label: int) -> Subspace:
        if label < self.start_label:
            raise ValueError(f"tail starts at label {self.start_label}")
        return self._subspace_for(min(label, self.stabilization_depth))

    def projector(self, label: int) -> Projector:
        key = min(label, self.stabilization_depth)
        if key not in self._cache:
            self._cache[key] = Projector(self.subspace(key))
        return self._cache[key]

    def eventual_subspace(self) -> Subspace:
        """Intersection of the whole tail.

        For a monotone decreasing chain this is the subspace at the
        stabilization depth; otherwise the intersection is computed over
        the sampled range.
        """
        if self.monotone_decreasing:
            return self.subspace(self.stabilization_depth)
        return intersect([self.subspace(j) for j in
                          range(self.start_label,
                                self.stabilization_depth + 1)])

    def monotone_violations(self, up_to: int | None = None) -> list[int]:
        """Labels j with P_{j+1} not below P_j, sampled up to the depth."""
        stop = self.stabilization_depth if up_to is None \
            else min(up_to, self.stabilization_depth)
        bad = []
        for j in range(self.start_label, stop):
            if not projector_leq(self.projector(j + 1), self.projector(j)):
                bad.append(j)
        return bad


class ProjectorFamily:
    """Finite projector list (labels 1..r) plus an optional tail."""

    def __init__(self, finite_part, tail: TailFamily | None = None):
        self.finite = [p if isinstance(p, Projector) else Projector(p)
                       for p in finite_part]
        if not self.finite:
            raise ValueError("family needs at least one projector")
        d = self.finite[0].ambient_dim
        for p in self.finite:
            if p.ambient_dim != d:
                raise ValueError("projectors live in different dimensions")
        if tail is not None and tail.start_label != len(self.finite) + 1:
            raise ValueError(
                f"tail must start at label {len(self.finite) + 1}")
        self.tail = tail
        self.ambient_dim = d

    @property
    def r(self) -> int:
        return len(self.finite)

    def projector(self, label: int) -> Projector:
        if 1 <= label <= self.r:
            return self.finite[label - 1]
        if self.tail is not None and label > self.r:
            p = self.tail.projector(label)
            if p.ambient_dim != self.ambient_dim:
                raise ValueError("tail projector dimension mismatch")
            return p
        raise ValueError(f"schedule label {label} has no projector")

    def subspace(self, label: int) -> Subspace:
        return self.projector(label).source

    def limit_subspace(self, referenced_labels,
                       include_tail_eventual: bool) -> Subspace:
        """Intersection of the ranges the schedule can reach.

        referenced_labels are the labels observed in the prefix; when the
        schedule keeps inserting tail labels forever, the whole tail's
        eventual intersection joins the list.
        """
        subs = [self.subspace(l) for l in sorted(set(referenced_labels))]
        if include_tail_eventual and self.tail is not None:
            subs.append(self.tail.eventual_subspace())
        return intersect(subs)


@dataclass
class IterationTrace:
    """Per-step scalars of one product iteration plus vector caches.

    Row 0 is the initial state (label 0); rows 1..n_steps record the
    applied label and the scalar diagnostics. The ring buffer keeps the
    last `ring_width` iterates; snapshots keep marker-adjacent iterates;
    `iterates` is the full matrix when requested. vector_at() falls back
    to a provenance re-run for steps outside all caches.
    """

    labels: np.ndarray
    norms: np.ndarray
    step_residuals: np.ndarray
    dist_to_limit: np.ndarray
    identity_gaps: np.ndarray
    x0: np.ndarray
    px0: np.ndarray
    x_final: np.ndarray
    limit_dim: int
    stop_tol: float
    stopped_early: bool
    schedule_descriptor: dict | None
    marker_steps: tuple = ()
    ring: dict = field(default_factory=dict, repr=False)
    snapshots: dict = field(default_factory=dict, repr=False)
    iterates: np.ndarray | None = field(default=None, repr=False)
    probes: np.ndarray | None = field(default=None, repr=False)
    probe_dots: np.ndarray | None = field(default=None, repr=False)
    provenance: tuple | None = field(default=None, repr=False)

    @property
    def n_steps(self) -> int:
        return len(self.norms) - 1

    def vector_at(self, n: int) -> np.ndarray:
        got = self.vectors_at([n])
        return got[n]

    def vectors_at(self, steps) -> dict[int, np.ndarray]:
        """Iterate vectors at the given steps, recomputing if needed."""
        steps = sorted(set(int(s) for s in steps))
        out = {}
        missing = []
        for n in steps:
            if not 0 <= n <= self.n_steps:
                raise IndexError(f"step {n} outside trace of length "
                                 f"{self.n_steps}")
            if self.iterates is not None:
                out[n] = self.iterates[n]
            elif n in self.ring:
                out[n] = self.ring[n]
            elif n in self.snapshots:
                out[n] = self.snapshots[n]
            elif n == 0:
                out[n] = self.x0
            else:
                missing.append(n)
        if missing:
            if self.provenance is None:
                raise ValueError(
                    f"steps {missing} not cached and no provenance to "
                    "recompute them; run iterate(keep_iterates=True)")
            family, schedule = self.provenance
            redo = iterate(family, schedule, self.x0,
                           n_max=max(missing), stop_tol=-1.0,
                           snapshot_steps=missing, snapshot_markers=False)
            for n in missing:
                out[n] = redo.snapshots[n]
        return out

    def summary(self) -> dict:
        return {
            "steps": self.n_steps,
            "final_norm": float(self.norms[-1]),
            "final_dist_to_limit": float(self.dist_to_limit[-1]),
            "stopped_early": self.stopped_early,
            "max_identity_gap": float(np.max(self.identity_gaps)),
            "limit_dim": self.limit_dim,
        }

    def first_crossing(self, threshold: float) -> int | None:
        """First step with dist_to_limit <= threshold, if any."""
        hits = np.flatnonzero(self.dist_to_limit <= threshold)
        return int(hits[0]) if hits.size else None

    def to_csv(self, path) -> None:
        path = Path(path)
        with path.open("w") as fh:
            fh.write("n,label,norm,step_residual,dist_to_limit,identity_gap\n")
            for n in range(self.n_steps + 1):
                fh.write(f"{n},{int(self.labels[n])},"
                         f"{float(self.norms[n])!r},"
                         f"{float(self.step_residuals[n])!r},"
                         f"{float(self.dist_to_limit[n])!r},"
                         f"{float(self.identity_gaps[n])!r}\n")

    @classmethod
    def from_csv(cls, path) -> "IterationTrace":
        """Scalar-only trace (no vector caches, no provenance)."""
        data = np.genfromtxt(path, delimiter=",", names=True)
        data = np.atleast_1d(data)
        n = len(data)
        d0 = np.zeros(0)
        return cls(labels=data["label"].astype(np.int64),
                   norms=data["norm"].astype(float),
                   step_residuals=data["step_residual"].astype(float),
                   dist_to_limit=data["dist_to_limit"].astype(float),
                   identity_gaps=data["identity_gap"].astype(float),
                   x0=d0, px0=d0, x_final=d0, limit_dim=-1,
                   stop_tol=float("nan"),
                   stopped_early=bool(n and data["dist_to_limit"][-1] <= 0),
                   schedule_descriptor=None)


def iterate(family: ProjectorFamily, schedule: Schedule, x0,
            n_max: int = DEFAULT_N_MAX, stop_tol: float = DEFAULT_STOP_TOL,
            *, ring_width: int = 64, keep_iterates: bool = False,
            probes=None, snapshot_markers: bool = True,
            snapshot_steps=None) -> IterationTrace:
    """Run the scheduled product of projections from x0.

    Stops after n_max steps or once the distance to the limit projection
    drops to stop_tol (pass a negative stop_tol to always run n_max
    steps). The limit projection is onto the intersection of every range
    the schedule references: the labels seen in the prefix, joined with
    the tail family's eventual subspace when the rule inserts tail labels
    forever.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    x0 = as_vector(x0, family.ambient_dim)
    labels_arr = schedule.prefix(n_max)

    unique = [int(l) for l in np.unique(labels_arr)]
    slot_of = {label: i for i, label in enumerate(unique)}
    projs = [family.projector(label) for label in unique]
    d = family.ambient_dim
    kmax = max(1, max(p.rank for p in projs))
    q_stack = np.zeros((len(projs), d, kmax))
    ks = np.zeros(len(projs), dtype=np.int64)
    for i, p in enumerate(projs):
        ks[i] = p.rank
        if p.rank:
            q_stack[i, :, :p.rank] = p.source.basis

    limit = family.limit_subspace(
        unique, include_tail_eventual=schedule.has_unbounded_insertions())
    px0 = limit.project(x0)

    markers = tuple(schedule.markers_up_to(n_max)[:SNAPSHOT_CAP])
    snap = set(int(s) for s in snapshot_steps) if snapshot_steps else set()
    if snapshot_markers:
        for k in markers:
            snap.add(k - 1)
            snap.add(k)
    snap_arr = np.array(sorted(s for s in snap if 0 <= s <= n_max),
                        dtype=np.int64)

    slots = np.fromiter((slot_of[int(l)] for l in labels_arr),
                        dtype=np.int64, count=len(labels_arr))
    res = kernels.run_product_iteration(
        q_stack, ks, slots, x0, px0, stop_tol=stop_tol, ring_w=ring_width,
        snapshot_steps=snap_arr, probes=probes, keep_iterates=keep_iterates)

    t = res["steps"]
    trace_labels = np.concatenate([[0], labels_arr[:t]]).astype(np.int64)
    ring = {int(step): res["ring"][i].copy()
            for i, step in enumerate(res["ring_steps"])
            if 0 <= step <= t}
    snapshots = {int(snap_arr[i]): res["snaps"][i].copy()
                 for i in range(res["snaps_filled"])}
    probes_arr = None
    if probes is not None:
        probes_arr = np.ascontiguousarray(np.atleast_2d(probes), dtype=float)
    return IterationTrace(
        labels=trace_labels,
        norms=res["norms"],
        step_residuals=res["step_res"],
        dist_to_limit=res["dist"],
        identity_gaps=res["gaps"],
        x0=x0,
        px0=px0,
        x_final=res["x_final"],
        limit_dim=limit.dim,
        stop_tol=stop_tol,
        stopped_early=t < n_max,
        schedule_descriptor=schedule.descriptor(),
        marker_steps=tuple(k for k in markers if k <= t),
        ring=ring,
        snapshots=snapshots,
        iterates=res["iterates"],
        probes=probes_arr,
        probe_dots=res["probe_dots"],
        provenance=(family, schedule),
    )


def halperin_power(family: ProjectorFamily, x0, n: int) -> np.ndarray:
    """(P_r ... P_2 P_1)^n applied to x0, finite part only."""
    if n < 0:
        raise ValueError("power must be nonnegative")
    x = as_vector(x0, family.ambient_dim).copy()
    for _ in range(n):
        for p in family.finite:
            x = p(x)
    return x
