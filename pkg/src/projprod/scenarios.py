"""Configuration-driven experiment scenarios.

A scenario JSON file declares an ambient dimension, subspaces (explicit
bases or named generators), an optional tail family, a schedule
descriptor, a start vector, iteration parameters, the checkers to run,
and expectations to assert. run_scenario() builds everything, runs the
iteration where configured, evaluates checkers and expectations into a
VerifyReport, and writes the trace CSV / report JSON artifacts.

Outputs are deterministic: identical config and seeds produce
byte-identical files (no timestamps, sorted JSON keys).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from projprod import checks as C
from projprod import geometry, schedules
from projprod.hilbert import Projector, Subspace, intersect, orthonormalize
from projprod.iteration import (
    IterationTrace,
    ProjectorFamily,
    TailFamily,
    halperin_power,
    iterate,
)

OUTPUT_DIR_ENV = "PROJPROD_OUTPUT_DIR"

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2


class ConfigError(ValueError):
    """Scenario config rejected; carries the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


# ---------------------------------------------------------------------------
# named subspace generators

def coordinate_span(d: int, indices) -> Subspace:
    """span{e_i : i in indices} (1-based); accepts "odd" / "even"."""
    if indices == "odd":
        indices = range(1, d + 1, 2)
    elif indices == "even":
        indices = range(2, d + 1, 2)
    vecs = []
    for i in indices:
        if not 1 <= i <= d:
            raise ValueError(f"coordinate index {i} outside 1..{d}")
        v = np.zeros(d)
        v[i - 1] = 1.0
        vecs.append(v)
    return orthonormalize(vecs, ambient_dim=d)


def pair_average(d: int) -> Subspace:
    """span{(e_{2k-1} + e_{2k}) / 2 : 2k <= d}."""
    vecs = []
    for k in range(1, d // 2 + 1):
        v = np.zeros(d)
        v[2 * k - 2] = 0.5
        v[2 * k - 1] = 0.5
        vecs.append(v)
    return orthonormalize(vecs, ambient_dim=d)


def tail_3j(d: int, label: int) -> Subspace:
    """span{e_{3j} : j >= label - 2, 3j <= d}; empty once j starts past d/3."""
    vecs = []
    for j in range(max(1, label - 2), d // 3 + 1):
        v = np.zeros(d)
        v[3 * j - 1] = 1.0
        vecs.append(v)
    return orthonormalize(vecs, ambient_dim=d)


def line_angle(theta: float) -> Subspace:
    """The line through the origin at angle theta in R^2."""
    return orthonormalize([(np.cos(theta), np.sin(theta))], ambient_dim=2)


def _build_subspace(d: int, spec: dict, path: str) -> Subspace:
    if "basis" in spec:
        try:
            sub = orthonormalize(np.asarray(spec["basis"], dtype=float),
                                 ambient_dim=d)
        except ValueError as exc:
            raise ConfigError(path + ".basis", str(exc)) from exc
        return sub
    gen = spec.get("generator")
    if gen == "coordinate_span":
        try:
            return coordinate_span(d, spec.get("indices", []))
        except ValueError as exc:
            raise ConfigError(path + ".indices", str(exc)) from exc
    if gen == "pair_average":
        return pair_average(d)
    if gen == "tail_3j":
        return tail_3j(d, int(spec.get("i", 3)))
    if gen == "line_angle":
        if d != 2:
            raise ConfigError(path, "line_angle requires ambient_dim = 2")
        return line_angle(float(spec["theta"]))
    raise ConfigError(path, f"unknown generator {gen!r}")


def _build_tail(d: int, r: int, spec: dict, path: str) -> TailFamily:
    gen = spec.get("generator")
    monotone = bool(spec.get("monotone", True))
    if gen == "tail_3j":
        depth = d // 3 + 3  # from there on the span is empty
        return TailFamily(lambda j: tail_3j(d, j), start_label=r + 1,
                          stabilization_depth=max(depth, r + 1),
                          monotone_decreasing=monotone)
    if gen == "explicit":
        subs = {int(k): _build_subspace(d, v, f"{path}.subspaces.{k}")
                for k, v in spec.get("subspaces", {}).items()}
        if not subs:
            raise ConfigError(path + ".subspaces", "empty explicit tail")
        depth = int(spec.get("stabilization_depth", max(subs)))
        missing = [j for j in range(r + 1, depth + 1) if j not in subs]
        if missing:
            raise ConfigError(path + ".subspaces",
                              f"missing tail labels {missing}")
        return TailFamily(lambda j: subs[j], start_label=r + 1,
                          stabilization_depth=depth,
                          monotone_decreasing=monotone)
    raise ConfigError(path, f"unknown tail generator {gen!r}")


def _build_x0(d: int, spec: dict, path: str) -> np.ndarray:
    kind = spec.get("kind")
    if kind == "basis":
        i = int(spec.get("i", 1))
        if not 1 <= i <= d:
            raise ConfigError(path + ".i", f"basis index {i} outside 1..{d}")
        v = np.zeros(d)
        v[i - 1] = 1.0
        return v
    if kind == "ones":
        v = np.ones(d)
    elif kind == "seeded_random":
        v = np.random.default_rng(int(spec.get("seed", 0))).standard_normal(d)
    else:
        raise ConfigError(path, f"unknown x0 kind {kind!r}")
    if spec.get("normalize", False):
        v = v / np.linalg.norm(v)
    return v


def _build_probes(d: int, spec, path: str) -> np.ndarray:
    if spec == "basis":
        return np.eye(d)
    kind = spec.get("kind")
    if kind == "basis":
        count = int(spec.get("count", min(d, 8)))
        return np.eye(d)[:count]
    if kind == "seeded_random":
        rng = np.random.default_rng(int(spec.get("seed", 0)))
        p = rng.standard_normal((int(spec.get("count", 4)), d))
        return p / np.linalg.norm(p, axis=1, keepdims=True)
    raise ConfigError(path, f"unknown probes kind {kind!r}")


# ---------------------------------------------------------------------------
# config

_DEF_ITER = {"n_max": 100_000, "stop_tol": 1e-10, "ring_width": 64,
             "keep_iterates": False}


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario description (canonical dict form in `raw`)."""

    name: str
    ambient_dim: int | None
    subspaces: dict
    tail: dict | None
    schedule: dict
    x0: dict | None
    iteration: dict
    checks: dict
    expect: dict
    output: dict

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "ambient_dim": self.ambient_dim,
            "subspaces": self.subspaces,
            "tail": self.tail,
            "schedule": self.schedule,
            "x0": self.x0,
            "iteration": self.iteration,
            "checks": self.checks,
            "expect": self.expect,
            "output": self.output,
        }

    def __eq__(self, other):
        return isinstance(other, ScenarioConfig) and \
            self.to_dict() == other.to_dict()


def _validate_config(data: dict, origin: str = "config") -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError(origin, "top level must be a JSON object")
    known = {"name", "ambient_dim", "subspaces", "tail", "schedule", "x0",
             "iteration", "checks", "expect", "output"}
    for key in data:
        if key not in known:
            raise ConfigError(key, "unknown config field")
    name = data.get("name")
    if not isinstance(name, str) or not name:
        raise ConfigError("name", "required nonempty string")
    if "schedule" not in data or not isinstance(data["schedule"], dict):
        raise ConfigError("schedule", "required schedule descriptor object")
    try:
        schedules.from_descriptor(data["schedule"])
    except (ValueError, KeyError) as exc:
        raise ConfigError("schedule", str(exc)) from exc

    subspace_specs = data.get("subspaces", {}) or {}
    d = data.get("ambient_dim")
    if subspace_specs:
        if not isinstance(d, int) or d < 1:
            raise ConfigError("ambient_dim",
                              "required positive integer with subspaces")
        labels = []
        for key in subspace_specs:
            try:
                labels.append(int(key))
            except ValueError:
                raise ConfigError(f"subspaces.{key}",
                                  "labels must be integers") from None
        labels.sort()
        if labels != list(range(1, len(labels) + 1)):
            raise ConfigError("subspaces",
                              f"labels must be 1..r, got {labels}")
        # build once now so generator errors surface at load time
        for key, spec in subspace_specs.items():
            sub = _build_subspace(d, spec, f"subspaces.{key}")
            if sub.ambient_dim != d:
                raise ConfigError(f"subspaces.{key}", "dimension mismatch")
        if data.get("tail") is not None:
            _build_tail(d, len(labels), data["tail"], "tail")
    elif data.get("x0") is not None:
        raise ConfigError("x0", "x0 given but no subspaces to iterate over")

    if data.get("x0") is not None:
        _build_x0(d, data["x0"], "x0")

    iteration = dict(_DEF_ITER)
    iteration.update(data.get("iteration", {}) or {})
    for key in iteration:
        if key not in _DEF_ITER:
            raise ConfigError(f"iteration.{key}", "unknown iteration field")

    checks_cfg = data.get("checks", {}) or {}
    for cname in checks_cfg:
        if cname not in CHECK_RUNNERS:
            raise ConfigError(f"checks.{cname}",
                              f"unknown checker; known: "
                              f"{sorted(CHECK_RUNNERS)}")
        if not subspace_specs:
            raise ConfigError(f"checks.{cname}", "checkers need subspaces")
        if cname in _ITERATION_CHECKS and data.get("x0") is None:
            raise ConfigError(f"checks.{cname}",
                              "checker runs the iteration; x0 required")
    expect = data.get("expect", {}) or {}
    for ename in expect:
        if ename not in EXPECT_RUNNERS:
            raise ConfigError(f"expect.{ename}",
                              f"unknown expectation; known: "
                              f"{sorted(EXPECT_RUNNERS)}")
        if ename in _ITERATION_EXPECTS and data.get("x0") is None:
            raise ConfigError(f"expect.{ename}",
                              "expectation needs a trace; x0 required")
        if ename in _GEOMETRY_EXPECTS and not subspace_specs:
            raise ConfigError(f"expect.{ename}",
                              "expectation needs subspaces")
    output = {"trace_csv": None, "report_json": None}
    output.update(data.get("output", {}) or {})
    return ScenarioConfig(
        name=name,
        ambient_dim=d if subspace_specs else data.get("ambient_dim"),
        subspaces={str(k): v for k, v in subspace_specs.items()},
        tail=data.get("tail"),
        schedule=data["schedule"],
        x0=data.get("x0"),
        iteration=iteration,
        checks=checks_cfg,
        expect=expect,
        output=output,
    )


def load_config(path) -> ScenarioConfig:
    """Load and validate a scenario config file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(str(path), "file not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}") from exc
    return _validate_config(data, origin=str(path))


def write_config(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True)
                          + "\n")


# ---------------------------------------------------------------------------
# verification report

@dataclass(frozen=True)
class ReportEntry:
    name: str
    status: str  # pass | fail | skipped
    measured: float | None
    threshold: float | None
    anchor: str

    def to_dict(self) -> dict:
        return {"name": self.name, "status": self.status,
                "measured": self.measured, "threshold": self.threshold,
                "anchor": self.anchor}


@dataclass
class VerifyReport:
    scenario: str
    entries: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def add(self, entry: ReportEntry) -> None:
        if any(e.name == entry.name for e in self.entries):
            raise ValueError(f"duplicate report entry {entry.name!r}")
        self.entries.append(entry)

    def add_check(self, report: C.CheckReport, anchor: str,
                  name: str | None = None) -> None:
        self.add(ReportEntry(name or report.name,
                             "pass" if report.passed else "fail",
                             float(report.measured), float(report.threshold),
                             anchor))

    @property
    def passed(self) -> bool:
        return all(e.status != "fail" for e in self.entries)

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, "passed": self.passed,
                "summary": self.summary,
                "entries": [e.to_dict() for e in self.entries]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def print_lines(self, out=print) -> None:
        for e in self.entries:
            measured = "" if e.measured is None else f" measured={e.measured:.3g}"
            out(f"[{e.status.upper():7s}] {self.scenario}:{e.name}{measured}")


# ---------------------------------------------------------------------------
# checker wiring

ANCHORS = {
    "step_identity": "per-step norm-difference identity",
    "sakai_bound": "product difference bound with constant (b-1)(b-2)+3",
    "vanishing_differences": "k-step iterate differences vanish",
    "marker_residual": "tail residual bounded by norm drop at markers",
    "three_point": "three-point projection inequality",
    "weak_trace": "probe inner products converge to the limit values",
    "norm_limit": "norm sequence monotone and settles at the limit norm",
    "block_bound": "inter-marker block difference bound",
    "closed_sum": "angle cosine stays below one (closed-sum criterion)",
    "intersection_stability": "finite intersection equals full intersection",
    "halperin_consistency": "cyclic power equals scheduled product",
    "profile": "schedule occurrence/gap/marker metadata",
    "pseudo_periodic": "finite-gap classes with growing marker gaps",
    "quasi_periodic": "every window carries the full alphabet",
    "final_dist_le": "distance to the limit projection falls below bound",
    "final_norm_le": "iterate norm falls below bound",
    "crossing": "threshold crossing happens within the step budget",
    "norm_equals_dist": "norm equals distance to limit when the limit is 0",
    "cb": "angle cosine value",
    "inner_inclination": "face-restricted inclination value",
    "inclination": "inclination estimate bracket",
}


class _Runtime:
    """Objects a scenario builds once and shares across checkers."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.schedule = schedules.from_descriptor(cfg.schedule)
        self.subspaces: dict[int, Subspace] = {}
        self.family = None
        self.trace: IterationTrace | None = None
        d = cfg.ambient_dim
        if cfg.subspaces:
            self.subspaces = {
                int(k): _build_subspace(d, spec, f"subspaces.{k}")
                for k, spec in cfg.subspaces.items()}
            finite = [Projector(self.subspaces[l])
                      for l in sorted(self.subspaces)]
            tail = _build_tail(d, len(finite), cfg.tail, "tail") \
                if cfg.tail is not None else None
            self.family = ProjectorFamily(finite, tail)

    def ordered_subspaces(self) -> list[Subspace]:
        return [self.subspaces[l] for l in sorted(self.subspaces)]

    def run_iteration(self) -> IterationTrace:
        if self.trace is None:
            cfg = self.cfg
            x0 = _build_x0(cfg.ambient_dim, cfg.x0, "x0")
            probes = None
            if "weak_trace" in cfg.checks:
                spec = cfg.checks["weak_trace"].get("probes",
                                                    {"kind": "basis"})
                probes = _build_probes(cfg.ambient_dim, spec,
                                       "checks.weak_trace.probes")
            need_iterates = cfg.iteration["keep_iterates"] or \
                {"sakai_bound", "block_bound"} & set(cfg.checks)
            self.trace = iterate(
                self.family, self.schedule, x0,
                n_max=int(cfg.iteration["n_max"]),
                stop_tol=float(cfg.iteration["stop_tol"]),
                ring_width=int(cfg.iteration["ring_width"]),
                keep_iterates=bool(need_iterates),
                probes=probes)
        return self.trace


def _run_step_identity(rt, params):
    return C.check_step_identity(rt.run_iteration(), **params)


def _run_sakai(rt, params):
    return C.check_sakai_bound(rt.run_iteration(), b=int(params["b"]),
                               segment=tuple(params["segment"])
                               if "segment" in params else None)


def _run_vanishing(rt, params):
    return C.check_vanishing_differences(rt.run_iteration(),
                                         k=int(params.get("k", 1)),
                                         window=int(params.get("window", 20)),
                                         decay_ratio=float(
                                             params.get("decay_ratio", 0.1)))


def _run_marker_residual(rt, params):
    return C.check_marker_residual(rt.run_iteration(), rt.family, **params)


def _run_three_point(rt, params):
    rng = np.random.default_rng(int(params.get("seed", 0)))
    samples = max(1, int(params.get("samples", 200)))
    d = rt.cfg.ambient_dim
    subs = rt.ordered_subspaces()
    worst = np.inf
    threshold = 0.0
    passed = True
    for i in range(samples):
        q = Projector(subs[i % len(subs)])
        rep = C.check_three_point(q, rng.standard_normal(d),
                                  rng.standard_normal(d),
                                  tol=float(params.get("tol", 1e-10)))
        worst = min(worst, rep.measured)
        threshold = rep.threshold
        passed = passed and rep.passed
    return C.CheckReport("three_point", passed, worst, threshold,
                         {"samples": samples})


def _run_weak_trace(rt, params):
    params = {k: v for k, v in params.items() if k != "probes"}
    return C.check_weak_trace(rt.run_iteration(), **params)


def _run_norm_limit(rt, params):
    return C.check_norm_limit_consistency(rt.run_iteration(), **params)


def _run_block_bound(rt, params):
    return C.check_block_bound(rt.run_iteration(),
                               b=params.get("b"))


def _run_closed_sum(rt, params):
    report = geometry.closed_sum_criterion(rt.ordered_subspaces())
    return C.CheckReport("closed_sum", report.closed, report.cb,
                         1.0 - report.threshold, {"margin": report.margin})


def _run_intersection_stability(rt, params):
    finite = intersect(rt.ordered_subspaces())
    if rt.family is not None and rt.family.tail is not None:
        full = intersect(rt.ordered_subspaces()
                         + [rt.family.tail.eventual_subspace()])
    else:
        full = finite
    same_dim = finite.dim == full.dim
    contained = all(full.contains(col) for col in finite.basis.T)
    ok = same_dim and contained
    return C.CheckReport("intersection_stability", ok,
                         float(finite.dim - full.dim), 0.0,
                         {"finite_dim": finite.dim, "full_dim": full.dim})


def _run_halperin(rt, params):
    n = int(params.get("n", 5))
    r = rt.family.r
    x0 = _build_x0(rt.cfg.ambient_dim, rt.cfg.x0, "x0")
    via_power = halperin_power(rt.family, x0, n)
    trace = iterate(rt.family, schedules.CyclicSchedule(r), x0,
                    n_max=r * n, stop_tol=-1.0)
    gap = float(np.linalg.norm(via_power - trace.x_final))
    tol = float(params.get("tol", 1e-12)) * max(1.0, float(np.linalg.norm(x0)))
    return C.CheckReport("halperin_consistency", gap <= tol, gap, tol)


CHECK_RUNNERS = {
    "step_identity": _run_step_identity,
    "sakai_bound": _run_sakai,
    "vanishing_differences": _run_vanishing,
    "marker_residual": _run_marker_residual,
    "three_point": _run_three_point,
    "weak_trace": _run_weak_trace,
    "norm_limit": _run_norm_limit,
    "block_bound": _run_block_bound,
    "closed_sum": _run_closed_sum,
    "intersection_stability": _run_intersection_stability,
    "halperin_consistency": _run_halperin,
}

_ITERATION_CHECKS = {"step_identity", "sakai_bound", "vanishing_differences",
                     "marker_residual", "weak_trace", "norm_limit",
                     "block_bound", "halperin_consistency"}
_ITERATION_EXPECTS = {"final_dist_le", "final_norm_le", "crossing",
                      "norm_equals_dist"}
_GEOMETRY_EXPECTS = {"cb", "inclination", "inner_inclination"}


# ---------------------------------------------------------------------------
# expectations

def _entry(name, ok, measured, threshold):
    return ReportEntry(name, "pass" if ok else "fail",
                       None if measured is None else float(measured),
                       None if threshold is None else float(threshold),
                       ANCHORS[name])


def _expect_final_dist(rt, params):
    trace = rt.run_iteration()
    bound = float(params)
    return _entry("final_dist_le", trace.dist_to_limit[-1] <= bound,
                  trace.dist_to_limit[-1], bound)


def _expect_final_norm(rt, params):
    trace = rt.run_iteration()
    bound = float(params)
    return _entry("final_norm_le", trace.norms[-1] <= bound,
                  trace.norms[-1], bound)


def _expect_crossing(rt, params):
    trace = rt.run_iteration()
    step = trace.first_crossing(float(params["threshold"]))
    ok = step is not None and step <= int(params["max_step"])
    return _entry("crossing", ok, -1 if step is None else step,
                  params["max_step"])


def _expect_norm_equals_dist(rt, params):
    trace = rt.run_iteration()
    gap = float(np.max(np.abs(trace.norms - trace.dist_to_limit)))
    tol = 1e-12 * max(1.0, float(trace.norms[0]))
    return _entry("norm_equals_dist", gap <= tol, gap, tol)


def _expect_profile(rt, params):
    prof = schedules.profile(rt.schedule, int(params["n"]))
    ok = True
    for label, want in params.get("gap_index", {}).items():
        ok = ok and prof.gap_index.get(int(label)) == int(want)
    if "markers" in params:
        ok = ok and list(prof.markers) == [int(k) for k in params["markers"]]
    return _entry("profile", ok, len(prof.markers), None)


def _expect_pseudo_periodic(rt, params):
    rep = schedules.is_pseudo_periodic(rt.schedule, int(params["r"]),
                                       int(params.get("n", 1000)))
    want = bool(params.get("value", True))
    return _entry("pseudo_periodic", bool(rep) == want,
                  1.0 if rep else 0.0, 1.0 if want else 0.0)


def _expect_quasi_periodic(rt, params):
    got = schedules.is_quasi_periodic(rt.schedule, int(params["r"]),
                                      int(params["m"]),
                                      int(params.get("n", 1000)))
    want = bool(params.get("value", True))
    return _entry("quasi_periodic", got == want, 1.0 if got else 0.0,
                  1.0 if want else 0.0)


def _expect_cb(rt, params):
    report = geometry.friedrichs_cb(rt.ordered_subspaces())
    tol = float(params.get("tol", 1e-10))
    ok = abs(report.cb - float(params["value"])) <= tol
    return _entry("cb", ok, report.cb, tol)


def _expect_inner_inclination(rt, params):
    est = geometry.inner_inclination(
        rt.ordered_subspaces(),
        grid_resolution=int(params.get("resolution", 10_000)),
        restarts=int(params.get("restarts", 2)),
        seed=int(params.get("seed", 0)))
    tol = float(params.get("tol", 1e-6))
    ok = abs(est.value_upper - float(params["value"])) <= tol
    return _entry("inner_inclination", ok, est.value_upper, tol)


def _expect_inclination(rt, params):
    est = geometry.inclination(
        rt.ordered_subspaces(),
        grid_resolution=int(params.get("resolution", 100_000)),
        restarts=int(params.get("restarts", 4)),
        seed=int(params.get("seed", 0)))
    ok = float(params["min"]) <= est.value_upper <= float(params["max"])
    if "target" in params:
        ok = ok and abs(est.value_upper - float(params["target"])) \
            <= float(params.get("target_tol", 1e-4))
    return _entry("inclination", ok, est.value_upper, params["max"])


EXPECT_RUNNERS = {
    "final_dist_le": _expect_final_dist,
    "final_norm_le": _expect_final_norm,
    "crossing": _expect_crossing,
    "norm_equals_dist": _expect_norm_equals_dist,
    "profile": _expect_profile,
    "pseudo_periodic": _expect_pseudo_periodic,
    "quasi_periodic": _expect_quasi_periodic,
    "cb": _expect_cb,
    "inner_inclination": _expect_inner_inclination,
    "inclination": _expect_inclination,
}


# ---------------------------------------------------------------------------
# running

def _output_dir(cfg: ScenarioConfig, out_dir) -> Path | None:
    env = os.environ.get(OUTPUT_DIR_ENV)
    if out_dir is not None:
        return Path(out_dir)
    if env:
        return Path(env)
    if cfg.output.get("trace_csv") or cfg.output.get("report_json"):
        return Path.cwd()
    return None


def run_scenario(cfg: ScenarioConfig,
                 out_dir=None) -> tuple[IterationTrace | None, VerifyReport]:
    """Build the scenario, run checkers and expectations, write artifacts."""
    rt = _Runtime(cfg)
    report = VerifyReport(cfg.name)
    for cname in sorted(cfg.checks):
        params = dict(cfg.checks[cname])
        try:
            cr = CHECK_RUNNERS[cname](rt, params)
            report.add_check(cr, ANCHORS[cname], name=cname)
        except ValueError as exc:
            report.add(ReportEntry(cname, "fail", None, None,
                                   f"{ANCHORS[cname]} (error: {exc})"))
    for ename in sorted(cfg.expect):
        report.add(EXPECT_RUNNERS[ename](rt, cfg.expect[ename]))
    if rt.trace is not None:
        report.summary = rt.trace.summary()

    directory = _output_dir(cfg, out_dir)
    if directory is not None:
        directory.mkdir(parents=True, exist_ok=True)
        trace_name = cfg.output.get("trace_csv") or f"{cfg.name}_trace.csv"
        report_name = cfg.output.get("report_json") or f"{cfg.name}_report.json"
        if rt.trace is not None:
            rt.trace.to_csv(directory / trace_name)
        (directory / report_name).write_text(report.to_json())
    return rt.trace, report


# ---------------------------------------------------------------------------
# bundled scenarios and the verification suite

def bundled_config_names() -> list[str]:
    root = resources.files("projprod") / "configs"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))


def bundled_config_path(name: str) -> Path:
    return Path(str(resources.files("projprod") / "configs" / name))


def load_bundled(name: str) -> ScenarioConfig:
    return load_config(bundled_config_path(name))


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("projprod") / "configs" / "fixtures"
                    / name))


def verify_all(out_dir=None) -> tuple[VerifyReport, int]:
    """Run every bundled scenario; aggregate one report."""
    total = VerifyReport("all")
    for name in bundled_config_names():
        cfg = load_bundled(name)
        _, report = run_scenario(cfg, out_dir=out_dir)
        for entry in report.entries:
            total.add(ReportEntry(f"{cfg.name}:{entry.name}", entry.status,
                                  entry.measured, entry.threshold,
                                  entry.anchor))
    code = EXIT_OK if total.passed else EXIT_CHECK_FAILED
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "verify_report.json").write_text(total.to_json())
    return total, code


# ---------------------------------------------------------------------------
# negative controls: corrupted fixtures every checker must reject

def _pair_tail_runtime(d=12):
    cfg = _validate_config({
        "name": "negative_base",
        "ambient_dim": d,
        "subspaces": {"1": {"generator": "coordinate_span", "indices": "odd"},
                      "2": {"generator": "pair_average"}},
        "tail": {"generator": "tail_3j"},
        "schedule": {"rule": "composed", "base_word": [1, 2],
                     "insert": {"kind": "growing_blocks", "first_label": 3,
                                "seed": 2},
                     "marker_gaps": {"kind": "power_markers", "base": 3}},
        "x0": {"kind": "ones", "normalize": True},
        "iteration": {"n_max": 2000, "stop_tol": -1.0,
                      "keep_iterates": True},
    })
    return _Runtime(cfg)


def negative_controls() -> list[tuple[str, C.CheckReport]]:
    """(checker name, report on its corrupted fixture) for every checker.

    Every report here must come back failed; verify --negative-controls
    exits 1 because of these failures.
    """
    out = []

    corrupted = IterationTrace.from_csv(fixture_path("corrupted_trace.csv"))
    out.append(("step_identity", C.check_step_identity(corrupted)))
    out.append(("norm_limit", C.check_norm_limit_consistency(corrupted)))

    rt = _pair_tail_runtime()
    trace = rt.run_iteration()

    bad_norms = _clone_trace(trace)
    bad_norms.norms[1:] = bad_norms.norms[1]  # no norm drops, so no bound
    out.append(("block_bound", C.check_block_bound(bad_norms, b=2)))

    bad_vec = _clone_trace(trace)
    bad_vec.iterates = trace.iterates.copy()
    bad_vec.iterates[-5] += 1.0
    out.append(("vanishing_differences",
                C.check_vanishing_differences(bad_vec, k=1, window=10)))

    d = 12
    depth = d // 3 + 3

    def swapped(j):
        if j == 3:
            return tail_3j(d, 4)
        if j == 4:
            return tail_3j(d, 3)
        return tail_3j(d, j)

    tail = TailFamily(swapped, start_label=3, stabilization_depth=depth,
                      monotone_decreasing=True)
    family = ProjectorFamily([Projector(coordinate_span(d, "odd")),
                              Projector(pair_average(d))], tail)
    nm_trace = iterate(family, rt.schedule, np.ones(d) / np.sqrt(d),
                       n_max=200, stop_tol=-1.0)
    out.append(("marker_residual",
                C.check_marker_residual(nm_trace, family)))

    base = coordinate_span(5, [1, 2])
    shrunk = Subspace.__new__(Subspace)
    object.__setattr__(shrunk, "basis", base.basis * np.sqrt(0.5))
    object.__setattr__(shrunk, "ambient_dim", 5)
    object.__setattr__(shrunk, "tol", 1e-10)
    x = base.basis[:, 0]
    out.append(("three_point",
                C.check_three_point(Projector(shrunk), x, -x)))

    probe_rt = _pair_tail_runtime()
    probe_trace = iterate(probe_rt.family, probe_rt.schedule,
                          np.ones(12) / np.sqrt(12.0), n_max=2000,
                          stop_tol=-1.0, probes=np.eye(12)[:4])
    bad_probe = _clone_trace(probe_trace)
    bad_probe.px0 = probe_trace.px0 + 0.5 * np.eye(12)[0]
    out.append(("weak_trace", C.check_weak_trace(bad_probe)))

    # product-difference bound with an impossible constant: corrupt the
    # residual column the bound sums over
    qp_cfg = _validate_config({
        "name": "negative_sakai",
        "ambient_dim": 6,
        "subspaces": {"1": {"generator": "coordinate_span",
                            "indices": [1, 2, 3]},
                      "2": {"generator": "coordinate_span",
                            "indices": [3, 4]},
                      "3": {"generator": "coordinate_span",
                            "indices": [3, 5, 6]}},
        "schedule": {"rule": "cyclic", "r": 3},
        "x0": {"kind": "seeded_random", "seed": 5},
        "iteration": {"n_max": 150, "stop_tol": -1.0,
                      "keep_iterates": True},
    })
    qp_rt = _Runtime(qp_cfg)
    sakai_trace = _clone_trace(qp_rt.run_iteration())
    sakai_trace.step_residuals[1:] *= 0.05
    out.append(("sakai_bound", C.check_sakai_bound(sakai_trace, b=3)))

    # closed-sum margin vanishes for an almost-degenerate pair
    close = geometry.closed_sum_criterion(
        [line_angle(0.0), line_angle(1e-4)])
    out.append(("closed_sum",
                C.CheckReport("closed_sum", close.closed, close.cb,
                              1.0 - close.threshold,
                              {"margin": close.margin})))

    return out


def _clone_trace(trace: IterationTrace) -> IterationTrace:
    import copy
    clone = copy.copy(trace)
    clone.norms = trace.norms.copy()
    clone.step_residuals = trace.step_residuals.copy()
    clone.dist_to_limit = trace.dist_to_limit.copy()
    clone.identity_gaps = trace.identity_gaps.copy()
    return clone


def verify_negative_controls(out_dir=None) -> tuple[VerifyReport, int]:
    """Run the corrupted fixtures; exit 1 expected (checkers must fail)."""
    report = VerifyReport("negative_controls")
    for name, cr in negative_controls():
        report.add_check(cr, ANCHORS.get(name, name), name=name)
    code = EXIT_CHECK_FAILED if not report.passed else EXIT_OK
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "negative_controls_report.json").write_text(
            report.to_json())
    return report, code
