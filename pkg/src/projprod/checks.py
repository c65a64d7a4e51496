"""Runtime verification of the identities and inequalities the product
iteration must satisfy.

Every checker returns a CheckReport with the measured worst-case
quantity, the threshold it was held to, and enough detail to locate a
violation. Checkers are pure functions over traces; the ones that need
iterate vectors pull them from the trace caches or recompute them
through the trace's provenance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from projprod.hilbert import Projector, as_vector
from projprod.iteration import IterationTrace, ProjectorFamily
from projprod.schedules import from_descriptor, is_quasi_periodic

ALL_PAIRS_CAP = 5000


def product_bound_constant(b: int) -> int:
    """The quasi-periodic product-difference constant (b-1)(b-2) + 3."""
    if b < 1:
        raise ValueError("window bound b must be positive")
    return (b - 1) * (b - 2) + 3


@dataclass(frozen=True)
class CheckReport:
    name: str
    passed: bool
    measured: float
    threshold: float
    details: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed,
                "measured": self.measured, "threshold": self.threshold,
                "details": {k: v for k, v in self.details.items()}}


def _scale(trace: IterationTrace) -> float:
    return max(1.0, float(trace.norms[0]) ** 2)


def check_step_identity(trace: IterationTrace,
                        rel_tol: float = 1e-9) -> CheckReport:
    """Exactness of ||x_{n-1}||^2 - ||x_n||^2 = ||x_n - x_{n-1}||^2."""
    if trace.n_steps < 1:
        raise ValueError("empty trace")
    worst = float(np.max(trace.identity_gaps))
    threshold = rel_tol * _scale(trace)
    return CheckReport("step_identity", worst <= threshold, worst, threshold,
                       {"argmax_step": int(np.argmax(trace.identity_gaps))})


def check_sakai_bound(trace: IterationTrace, b: int,
                      segment: tuple[int, int] | None = None,
                      tol: float = 1e-12) -> CheckReport:
    """Quasi-periodic product-difference bound with C = (b-1)(b-2)+3:

        ||x_n - x_m||^2 <= C * sum_{k=m}^{n-1} ||x_{k+1} - x_k||^2

    over the requested segment (m, n), or over all pairs 1 <= m < n when
    no segment is given. Requires a quasi-periodic schedule (validated on
    the trace prefix with window length b) and stored iterates.
    """
    t = trace.n_steps
    if trace.schedule_descriptor is None:
        raise ValueError("trace carries no schedule descriptor")
    schedule = from_descriptor(trace.schedule_descriptor)
    labels = trace.labels[1:]
    r = int(labels.max())
    if not is_quasi_periodic(schedule, r, b, t):
        raise ValueError(f"schedule is not quasi-periodic with window {b} "
                         f"on [1..{t}]")
    c = product_bound_constant(b)
    if segment is None and t > ALL_PAIRS_CAP:
        raise ValueError(f"all-pairs check capped at {ALL_PAIRS_CAP} steps; "
                         "pass a segment")
    if trace.iterates is None:
        raise ValueError("bound needs iterate vectors; run "
                         "iterate(keep_iterates=True)")
    x = trace.iterates
    res_sq = trace.step_residuals ** 2
    scale = _scale(trace)
    # both sides summed per pair at the pair's own scale: a global prefix
    # sum (or a Gram-matrix distance) absorbs tiny tail increments
    # against the large early terms and flips tight slacks negative
    if segment is not None:
        m, n = segment
        if not 1 <= m < n <= t:
            raise ValueError(f"segment {segment} outside 1..{t}")
        lhs = float(np.sum((x[n] - x[m]) ** 2))
        rhs = c * float(np.sum(res_sq[m + 1:n + 1]))
        min_slack = rhs - lhs
        worst_pair = (m, n)
    else:
        min_slack = np.inf
        worst_pair = (1, 2)
        for m in range(1, t):
            d2 = np.einsum("ij,ij->i", x[m + 1:] - x[m], x[m + 1:] - x[m])
            slack = c * np.cumsum(res_sq[m + 1:t + 1]) - d2
            idx = int(np.argmin(slack))
            if slack[idx] < min_slack:
                min_slack = float(slack[idx])
                worst_pair = (m, m + 1 + idx)
    threshold = -tol * scale
    return CheckReport("sakai_bound", min_slack >= threshold,
                       min_slack, threshold,
                       {"constant": c, "b": b, "worst_pair": worst_pair})


def check_vanishing_differences(trace: IterationTrace, k: int,
                                window: int = 20,
                                decay_ratio: float = 0.1) -> CheckReport:
    """Decay of ||x_{n-k} - x_n|| between the first and last window.

    The max over the last `window` steps must fall below decay_ratio
    times the max over the first window after the k-th step.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    t = trace.n_steps
    if t <= window + k:
        raise ValueError(f"trace of {t} steps too short for window="
                         f"{window}, k={k}")
    if k == 0:
        return CheckReport("vanishing_differences", True, 0.0, 0.0,
                           {"k": 0, "note": "identically zero"})
    first_ns = range(k + 1, k + window + 1)
    last_ns = range(t - window + 1, t + 1)
    needed = set()
    for n in list(first_ns) + list(last_ns):
        needed.add(n)
        needed.add(n - k)
    vecs = trace.vectors_at(needed)
    first_max = max(float(np.linalg.norm(vecs[n - k] - vecs[n]))
                    for n in first_ns)
    last_max = max(float(np.linalg.norm(vecs[n - k] - vecs[n]))
                   for n in last_ns)
    floor = 1e-13 * max(1.0, float(trace.norms[0]))
    threshold = max(decay_ratio * first_max, floor)
    return CheckReport("vanishing_differences", last_max <= threshold,
                       last_max, threshold,
                       {"k": k, "window": window, "first_max": first_max})


def check_marker_residual(trace: IterationTrace, family: ProjectorFamily,
                          markers=None, tol: float = 1e-9,
                          decay_ratio: float = 0.5) -> CheckReport:
    """At every marker k: residual of the first tail projector obeys

        ||x_{k-1} - P_{r+1} x_{k-1}||^2 <= ||x_{k-1}||^2 - ||x_k||^2 + tol

    and the residual decays along the marker subsequence. The tail must
    be monotone decreasing; the report flags sampled violations of that
    precondition and fails if any exist.
    """
    if family.tail is None:
        raise ValueError("family has no tail projectors")
    markers = tuple(markers) if markers is not None else trace.marker_steps
    markers = tuple(k for k in markers if 1 <= k <= trace.n_steps)
    if not markers:
        raise ValueError("no markers inside the trace")
    scale = _scale(trace)
    violations = family.tail.monotone_violations(
        up_to=family.tail.start_label + 8)
    vecs = trace.vectors_at([k - 1 for k in markers])
    p_next = family.tail.projector(family.r + 1)
    worst = -np.inf
    residuals = []
    for k in markers:
        xk1 = vecs[k - 1]
        res_sq = float(np.sum((xk1 - p_next(xk1)) ** 2))
        drop = float(trace.norms[k - 1] ** 2 - trace.norms[k] ** 2)
        worst = max(worst, res_sq - drop)
        residuals.append(np.sqrt(res_sq))
    floor = 1e-12 * scale
    decays = residuals[-1] <= max(decay_ratio * residuals[0], floor)
    threshold = tol * scale
    passed = worst <= threshold and decays and not violations
    details = {"markers": list(markers), "residuals": residuals,
               "decays": decays}
    if violations:
        details["precondition"] = (f"tail not monotone decreasing at "
                                   f"labels {violations}")
    return CheckReport("marker_residual", passed, worst, threshold, details)


def check_three_point(q: Projector, x, y, tol: float = 1e-10) -> CheckReport:
    """Projection inequality
    ||x-y||^2 <= ||x-Qy||^2 + ||x-Qx||^2 + 2||y-Qy||^2."""
    x = as_vector(x, q.ambient_dim)
    y = as_vector(y, q.ambient_dim)
    qx, qy = q(x), q(y)
    lhs = float(np.sum((x - y) ** 2))
    rhs = float(np.sum((x - qy) ** 2) + np.sum((x - qx) ** 2)
                + 2.0 * np.sum((y - qy) ** 2))
    slack = rhs - lhs
    scale = max(1.0, float(x @ x + y @ y))
    threshold = -tol * scale
    return CheckReport("three_point", slack >= threshold, slack, threshold)


def check_weak_trace(trace: IterationTrace, tol: float = 1e-7,
                     tail_frac: float = 0.2) -> CheckReport:
    """Probe-wise convergence of <x_n, y> to <P x0, y>.

    Requires a trace produced with probes. In a finite truncation the
    probe sequences document the weak-convergence statement; norm
    convergence itself is covered by check_norm_limit_consistency.
    """
    if trace.probe_dots is None or trace.probes is None:
        raise ValueError("trace has no probe records; pass probes=... "
                         "to iterate()")
    t = trace.n_steps
    tail_len = max(1, int(tail_frac * (t + 1)))
    targets = trace.probes @ trace.px0
    dev = np.abs(trace.probe_dots[-tail_len:] - targets[None, :])
    worst = float(np.max(dev))
    probe_scale = float(np.max(np.linalg.norm(trace.probes, axis=1)))
    scale = max(1.0, float(trace.norms[0]) * max(probe_scale, 1.0))
    threshold = tol * scale
    per_probe = np.max(dev, axis=0)
    return CheckReport("weak_trace", worst <= threshold, worst, threshold,
                       {"per_probe": per_probe.tolist(),
                        "tail_steps": tail_len})


def check_norm_limit_consistency(trace: IterationTrace,
                                 expect_strong: bool = False,
                                 mono_tol: float = 1e-10,
                                 cauchy_tol: float = 1e-6,
                                 strong_tol: float = 1e-6,
                                 tail_frac: float = 0.1) -> CheckReport:
    """The norm sequence is nonincreasing and settles (is Cauchy).

    With expect_strong the limit of ||x_n|| must also equal ||P x0||,
    consistent with norm convergence to the limit projection.
    """
    norms = trace.norms
    diffs = np.diff(norms)
    scale = max(1.0, float(norms[0]))
    mono_violation = float(np.max(diffs, initial=-np.inf))
    mono_ok = mono_violation <= mono_tol * scale
    tail_len = max(1, int(tail_frac * len(norms)))
    cauchy_gap = float(np.max(np.abs(diffs[-tail_len:]))) if len(diffs) else 0.0
    cauchy_ok = cauchy_gap <= cauchy_tol * scale
    details = {"mono_violation": mono_violation, "cauchy_gap": cauchy_gap,
               "limit_norm": float(norms[-1])}
    passed = mono_ok and cauchy_ok
    if expect_strong:
        gap = abs(float(norms[-1]) - float(np.linalg.norm(trace.px0)))
        details["strong_limit_gap"] = gap
        passed = passed and gap <= strong_tol * scale
    measured = max(mono_violation, cauchy_gap - cauchy_tol * scale)
    return CheckReport("norm_limit_consistency", passed, measured,
                       mono_tol * scale, details)


def check_block_bound(trace: IterationTrace, b: int | None = None,
                      tol: float = 1e-12) -> CheckReport:
    """Inter-marker block bound with the block word's constant M:

        ||x_j - x_i||^2 <= M (||x_i||^2 - ||x_j||^2)

    for marker-free stretches k_n < i < j < k_{n+1} (and the stretch
    before the first marker). b defaults to the window bound of the
    schedule's quasi-periodic core.
    """
    if trace.iterates is None:
        raise ValueError("block bound needs iterate vectors; run "
                         "iterate(keep_iterates=True)")
    if b is None:
        if trace.schedule_descriptor is None:
            raise ValueError("no schedule descriptor; pass b explicitly")
        b = from_descriptor(trace.schedule_descriptor).window_bound()
        if b is None:
            raise ValueError("schedule has no window bound; pass b")
    m_const = product_bound_constant(b)
    t = trace.n_steps
    edges = [0, *[k for k in trace.marker_steps if k <= t], t + 1]
    x = trace.iterates
    norms_sq = trace.norms ** 2
    scale = _scale(trace)
    worst = -np.inf
    worst_pair = None
    blocks = 0
    for lo, hi in zip(edges, edges[1:]):
        inside = list(range(lo + 1, min(hi, t + 1)))
        inside = [i for i in inside if i >= 1]
        if len(inside) < 2:
            continue
        blocks += 1
        xs = x[inside]
        ns = norms_sq[inside]
        for a in range(len(inside) - 1):
            d2 = np.einsum("ij,ij->i", xs[a + 1:] - xs[a], xs[a + 1:] - xs[a])
            slack = m_const * (ns[a] - ns[a + 1:]) - d2
            idx = int(np.argmin(slack))
            if -slack[idx] > worst:
                worst = -float(slack[idx])
                worst_pair = (inside[a], inside[a + 1 + idx])
    if worst_pair is None:
        return CheckReport("block_bound", True, 0.0, tol * scale,
                           {"note": "no block with two interior steps"})
    threshold = tol * scale
    return CheckReport("block_bound", worst <= threshold, worst, threshold,
                       {"constant": m_const, "b": b, "blocks": blocks,
                        "worst_pair": worst_pair})
