"""Index schedules sigma: {1, 2, ...} -> projection labels.

A schedule is an immutable rule that fixes sigma(n) for every n >= 1,
deterministically given a seed. Labels whose occurrence gaps stay bounded
form the finite-gap set; the remaining positions are the "marker"
positions, and the gaps between consecutive markers must grow for the
convergence theory the iteration module verifies at runtime.

Rules provided:

* cyclic(r)            1, 2, ..., r repeating.
* word(w)              a finite word over {1..r} repeating.
* ternary_insertion    2, 1, *, 2, 1, 3, ... with a seeded label >= 4 at
                       every power-of-3 position and 3 at the other
                       multiples of 3.
* composed             a quasi-periodic base word interleaved with an
                       insertion-label stream at marker positions with
                       increasing gaps (see compose_pseudo).
* explicit             a stored finite prefix; classification of explicit
                       prefixes is heuristic and flagged as such.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from projprod.rng import derive_seed, shuffled


# ---------------------------------------------------------------------------
# label streams (values for marker positions)

class CycleStream:
    """Cycles over a fixed label tuple; each cycle optionally reshuffled.

    With a jitter seed, cycle c applies a seeded permutation of the
    labels, so every label still occurs exactly once per cycle (hence
    infinitely often) while the order varies.
    """

    def __init__(self, labels, jitter_seed: int | None = None):
        labels = [int(x) for x in labels]
        if not labels:
            raise ValueError("stream needs at least one label")
        self.labels = tuple(labels)
        self.jitter_seed = jitter_seed

    def value_at(self, t: int) -> int:
        if t < 1:
            raise ValueError("stream index starts at 1")
        cycle, pos = divmod(t - 1, len(self.labels))
        if self.jitter_seed is None:
            return self.labels[pos]
        return shuffled(list(self.labels),
                        derive_seed(self.jitter_seed, cycle))[pos]

    def min_label(self) -> int:
        return min(self.labels)

    def descriptor(self) -> dict:
        return {"kind": "cycle", "labels": list(self.labels),
                "jitter_seed": self.jitter_seed}


class GrowingBlockStream:
    """Unbounded label stream with every label recurring infinitely often.

    Block b (b >= 1) is a seeded permutation of
    {first_label, ..., first_label + b}, so label first_label + j appears
    in every block from max(1, j) on. Position lookups are O(sqrt(t)).
    """

    def __init__(self, first_label: int, seed: int = 0):
        self.first_label = int(first_label)
        self.seed = int(seed)

    def value_at(self, t: int) -> int:
        if t < 1:
            raise ValueError("stream index starts at 1")
        b = 1
        start = 1
        while start + b < t:  # block b covers [start, start + b]
            start += b + 1
            b += 1
        block = list(range(self.first_label, self.first_label + b + 1))
        return shuffled(block, derive_seed(self.seed, b))[t - start]

    def min_label(self) -> int:
        return self.first_label

    def descriptor(self) -> dict:
        return {"kind": "growing_blocks", "first_label": self.first_label,
                "seed": self.seed}


def stream_from_descriptor(desc) -> CycleStream | GrowingBlockStream:
    if isinstance(desc, (list, tuple)):
        return CycleStream(desc)
    kind = desc.get("kind")
    if kind == "cycle":
        return CycleStream(desc["labels"], desc.get("jitter_seed"))
    if kind == "growing_blocks":
        return GrowingBlockStream(desc["first_label"], desc.get("seed", 0))
    raise ValueError(f"unknown stream kind: {kind!r}")


# ---------------------------------------------------------------------------
# marker gap rules

class GapRule:
    """Gap sequence g(1), g(2), ... defining markers k_n = k_{n-1} + g(n)."""

    exact = True  # rule extends to all of the positive integers

    def gap(self, n: int) -> int:
        raise NotImplementedError

    def markers_up_to(self, n_max: int) -> list[int]:
        out = []
        k = 0
        i = 1
        while True:
            try:
                g = self.gap(i)
            except IndexError:
                break
            k += g
            if k > n_max:
                break
            out.append(k)
            i += 1
        return out

    def strictly_increasing(self, check_len: int = 64) -> bool:
        gaps = []
        for i in range(1, check_len + 1):
            try:
                gaps.append(self.gap(i))
            except IndexError:
                break
        return all(b > a for a, b in zip(gaps, gaps[1:]))

    def descriptor(self) -> dict:
        raise NotImplementedError


class ArithmeticGaps(GapRule):
    def __init__(self, first: int, step: int):
        self.first, self.step = int(first), int(step)
        if self.first < 1:
            raise ValueError("first gap must be positive")

    def gap(self, n: int) -> int:
        return self.first + (n - 1) * self.step

    def strictly_increasing(self, check_len: int = 64) -> bool:
        return self.step >= 1

    def descriptor(self) -> dict:
        return {"kind": "arithmetic", "first": self.first, "step": self.step}


class GeometricGaps(GapRule):
    def __init__(self, first: int, ratio: int):
        self.first, self.ratio = int(first), int(ratio)
        if self.first < 1 or self.ratio < 1:
            raise ValueError("first and ratio must be positive")

    def gap(self, n: int) -> int:
        return self.first * self.ratio ** (n - 1)

    def strictly_increasing(self, check_len: int = 64) -> bool:
        return self.ratio >= 2

    def descriptor(self) -> dict:
        return {"kind": "geometric", "first": self.first, "ratio": self.ratio}


class PowerMarkers(GapRule):
    """Markers at base, base^2, base^3, ..."""

    def __init__(self, base: int):
        self.base = int(base)
        if self.base < 2:
            raise ValueError("base must be at least 2")

    def gap(self, n: int) -> int:
        return self.base ** n - self.base ** (n - 1) if n > 1 else self.base

    def strictly_increasing(self, check_len: int = 64) -> bool:
        return self.base >= 3 or self.base * (self.base - 1) > self.base

    def descriptor(self) -> dict:
        return {"kind": "power_markers", "base": self.base}


class ExplicitGaps(GapRule):
    """Finite stored gap list; no markers beyond it (prefix semantics)."""

    exact = False

    def __init__(self, gaps):
        self.gaps = [int(g) for g in gaps]
        if any(g < 1 for g in self.gaps):
            raise ValueError("gaps must be positive")

    def gap(self, n: int) -> int:
        if n > len(self.gaps):
            raise IndexError(n)
        return self.gaps[n - 1]

    def strictly_increasing(self, check_len: int = 64) -> bool:
        return all(b > a for a, b in zip(self.gaps, self.gaps[1:]))

    def descriptor(self) -> dict:
        return {"kind": "explicit", "gaps": list(self.gaps)}


def gaps_from_descriptor(desc) -> GapRule:
    if isinstance(desc, (list, tuple)):
        return ExplicitGaps(desc)
    kind = desc.get("kind")
    if kind == "arithmetic":
        return ArithmeticGaps(desc["first"], desc["step"])
    if kind == "geometric":
        return GeometricGaps(desc["first"], desc["ratio"])
    if kind == "power_markers":
        return PowerMarkers(desc["base"])
    if kind == "explicit":
        return ExplicitGaps(desc["gaps"])
    raise ValueError(f"unknown gap rule kind: {kind!r}")


# ---------------------------------------------------------------------------
# schedules

class Schedule:
    """Base class: a total deterministic index function."""

    #: label classes are read off the generating rule (vs prefix heuristic)
    classified_by_rule = True
    #: the rule's classification claim extends to the whole function
    exact_classification = True

    def label_at(self, n: int) -> int:
        raise NotImplementedError

    def prefix(self, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError("prefix length must be nonnegative")
        return np.array([self.label_at(i) for i in range(1, n + 1)],
                        dtype=np.int64)

    def finite_labels(self) -> frozenset:
        """Labels the rule declares to have bounded occurrence gaps."""
        raise NotImplementedError

    def window_bound(self) -> int | None:
        """Known m with every m-window containing all finite-gap labels."""
        return None

    def markers_up_to(self, n: int) -> list[int]:
        """Positions <= n carrying labels outside finite_labels()."""
        return []

    def has_unbounded_insertions(self) -> bool:
        """True when marker positions continue for the whole function."""
        return False

    def descriptor(self) -> dict:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.descriptor()})"


class CyclicSchedule(Schedule):
    def __init__(self, r: int):
        if r < 1:
            raise ValueError("r must be positive")
        self.r = int(r)

    def label_at(self, n: int) -> int:
        if n < 1:
            raise ValueError("schedule index starts at 1")
        return (n - 1) % self.r + 1

    def prefix(self, n: int) -> np.ndarray:
        return (np.arange(n, dtype=np.int64) % self.r) + 1

    def finite_labels(self) -> frozenset:
        return frozenset(range(1, self.r + 1))

    def window_bound(self) -> int:
        return self.r

    def descriptor(self) -> dict:
        return {"rule": "cyclic", "r": self.r}


def _cyclic_gap_indices(word) -> dict[int, int]:
    """Occurrence gap index of each label in the infinite repetition,
    including the leading gap from position 0."""
    word = list(word)
    length = len(word)
    doubled = word + word
    out = {}
    for label in set(word):
        positions = [i + 1 for i, w in enumerate(doubled) if w == label]
        gaps = [positions[0]] + [b - a for a, b in zip(positions, positions[1:])]
        out[label] = max(gaps[:len(positions)])
        # the doubled word sees every wrap-around gap; the leading gap
        # l_1 - 0 never exceeds the first-period position
        out[label] = max(out[label], positions[0])
    return {k: out[k] for k in sorted(out)}


class WordSchedule(Schedule):
    """A finite word over {1..r} repeated forever (quasi-periodic)."""

    def __init__(self, word):
        word = [int(w) for w in word]
        if not word:
            raise ValueError("word must be nonempty")
        r = max(word)
        if min(word) < 1:
            raise ValueError("labels must be positive")
        if set(word) != set(range(1, r + 1)):
            missing = sorted(set(range(1, r + 1)) - set(word))
            raise ValueError(f"word must use every label 1..{r}; "
                             f"missing {missing}")
        self.word = tuple(word)
        self.r = r

    def label_at(self, n: int) -> int:
        if n < 1:
            raise ValueError("schedule index starts at 1")
        return self.word[(n - 1) % len(self.word)]

    def prefix(self, n: int) -> np.ndarray:
        reps = -(-n // len(self.word))
        return np.tile(np.array(self.word, dtype=np.int64), reps)[:n]

    def finite_labels(self) -> frozenset:
        return frozenset(range(1, self.r + 1))

    def window_bound(self) -> int:
        return max(_cyclic_gap_indices(self.word).values())

    def descriptor(self) -> dict:
        return {"rule": "word", "word": list(self.word)}


def _power_index(n: int, base: int) -> int | None:
    """k with base**k == n, else None."""
    if n < base:
        return None
    k = 0
    m = n
    while m % base == 0:
        m //= base
        k += 1
    return k if m == 1 else None


class TernaryInsertionSchedule(Schedule):
    """Label 2,1 on non-multiples of 3; label 3 on multiples of 3 except
    powers of 3, which draw a seeded label >= 4 from a stream.

    Gap indices are 3, 3 and 6 for labels 1, 2, 3; the marker positions
    are exactly the powers of 3, so marker gaps 3, 6, 18, 54, ... grow
    strictly.
    """

    def __init__(self, seed: int = 0, tail_labels: int | None = None):
        self.seed = int(seed)
        self.tail_labels = tail_labels
        if tail_labels is None:
            self.stream = GrowingBlockStream(4, seed)
        else:
            if tail_labels < 1:
                raise ValueError("tail_labels must be positive")
            self.stream = CycleStream(range(4, 4 + int(tail_labels)),
                                      jitter_seed=seed)

    def label_at(self, n: int) -> int:
        if n < 1:
            raise ValueError("schedule index starts at 1")
        rem = n % 3
        if rem == 2:
            return 1
        if rem == 1:
            return 2
        k = _power_index(n, 3)
        return 3 if k is None else self.stream.value_at(k)

    def prefix(self, n: int) -> np.ndarray:
        pos = np.arange(1, n + 1, dtype=np.int64)
        out = np.where(pos % 3 == 2, 1, np.where(pos % 3 == 1, 2, 3))
        p, k = 3, 1
        while p <= n:
            out[p - 1] = self.stream.value_at(k)
            p *= 3
            k += 1
        return out.astype(np.int64)

    def finite_labels(self) -> frozenset:
        return frozenset({1, 2, 3})

    def window_bound(self) -> int:
        return 6

    def markers_up_to(self, n: int) -> list[int]:
        out = []
        p = 3
        while p <= n:
            out.append(p)
            p *= 3
        return out

    def has_unbounded_insertions(self) -> bool:
        return True

    def descriptor(self) -> dict:
        return {"rule": "ternary_insertion", "seed": self.seed,
                "tail_labels": self.tail_labels}


class ComposedSchedule(Schedule):
    """Quasi-periodic base word with insertion labels at marker positions.

    Marker n sits at k_n = k_{n-1} + gap_rule.gap(n) and carries
    insert_stream.value_at(n); every other position carries the base word
    in order. Use compose_pseudo() for the validated constructor; this
    class accepts arbitrary gap lists so that misbehaving schedules can
    be built for negative tests.
    """

    def __init__(self, base_word, insert_stream, gap_rule):
        self.base = WordSchedule(base_word)
        self.stream = insert_stream if not isinstance(insert_stream, (list, tuple)) \
            else CycleStream(insert_stream)
        self.gap_rule = gap_rule if isinstance(gap_rule, GapRule) \
            else ExplicitGaps(gap_rule)

    @property
    def r(self) -> int:
        return self.base.r

    @property
    def exact_classification(self) -> bool:
        return self.gap_rule.exact

    def label_at(self, n: int) -> int:
        if n < 1:
            raise ValueError("schedule index starts at 1")
        markers = self.gap_rule.markers_up_to(n)
        if markers and markers[-1] == n:
            return self.stream.value_at(len(markers))
        n_before = len(markers)
        return self.base.label_at(n - n_before)

    def prefix(self, n: int) -> np.ndarray:
        markers = np.array(self.gap_rule.markers_up_to(n), dtype=np.int64)
        out = np.empty(n, dtype=np.int64)
        pos = np.arange(1, n + 1, dtype=np.int64)
        is_marker = np.zeros(n, dtype=bool)
        if markers.size:
            is_marker[markers - 1] = True
            for i, k in enumerate(markers, start=1):
                out[k - 1] = self.stream.value_at(i)
        base_pos = pos[~is_marker]
        shift = np.searchsorted(markers, base_pos) if markers.size else 0
        base_idx = base_pos - shift
        word = np.array(self.base.word, dtype=np.int64)
        out[~is_marker] = word[(base_idx - 1) % len(word)]
        return out

    def finite_labels(self) -> frozenset:
        return self.base.finite_labels()

    def window_bound(self) -> int:
        # bound for the quasi-periodic core between markers
        return self.base.window_bound()

    def markers_up_to(self, n: int) -> list[int]:
        return self.gap_rule.markers_up_to(n)

    def has_unbounded_insertions(self) -> bool:
        return self.gap_rule.exact

    def descriptor(self) -> dict:
        return {"rule": "composed", "base_word": list(self.base.word),
                "insert": self.stream.descriptor(),
                "marker_gaps": self.gap_rule.descriptor()}


class ExplicitSchedule(Schedule):
    """A stored prefix; undefined beyond it."""

    classified_by_rule = False
    exact_classification = False

    def __init__(self, labels, window_bound: int | None = None):
        self.labels = np.asarray(labels, dtype=np.int64)
        if self.labels.ndim != 1 or self.labels.size == 0:
            raise ValueError("labels must be a nonempty 1-D sequence")
        if self.labels.min() < 1:
            raise ValueError("labels must be positive")
        self._window_bound = window_bound

    def label_at(self, n: int) -> int:
        if n < 1:
            raise ValueError("schedule index starts at 1")
        if n > self.labels.size:
            raise IndexError(f"explicit schedule has only "
                             f"{self.labels.size} entries")
        return int(self.labels[n - 1])

    def prefix(self, n: int) -> np.ndarray:
        if n > self.labels.size:
            raise IndexError(f"explicit schedule has only "
                             f"{self.labels.size} entries")
        return self.labels[:n].copy()

    def finite_labels(self) -> frozenset:
        # prefix-based heuristic, refined in profile() with the window bound
        return frozenset(int(x) for x in np.unique(self.labels))

    def window_bound(self) -> int | None:
        return self._window_bound

    def descriptor(self) -> dict:
        return {"rule": "explicit", "labels": self.labels.tolist(),
                "window_bound": self._window_bound}


def from_descriptor(desc: dict) -> Schedule:
    """Rebuild a schedule from its JSON descriptor."""
    rule = desc.get("rule")
    if rule == "cyclic":
        return CyclicSchedule(desc["r"])
    if rule == "word":
        return WordSchedule(desc["word"])
    if rule == "ternary_insertion":
        return TernaryInsertionSchedule(desc.get("seed", 0),
                                        desc.get("tail_labels"))
    if rule == "composed":
        return ComposedSchedule(desc["base_word"],
                                stream_from_descriptor(desc["insert"]),
                                gaps_from_descriptor(desc["marker_gaps"]))
    if rule == "explicit":
        return ExplicitSchedule(desc["labels"], desc.get("window_bound"))
    raise ValueError(f"unknown schedule rule: {rule!r}")


# ---------------------------------------------------------------------------
# profiling and classification

@dataclass(frozen=True)
class ScheduleProfile:
    """Classification of a schedule prefix.

    occurrences maps each observed label to its (1-based) position list;
    gap_index includes the leading gap from position 0. Labels are split
    into finite-gap and marker classes either from the generating rule
    (exact) or from the prefix alone (heuristic, exact=False).
    """

    prefix_len: int
    occurrences: dict
    gap_index: dict
    gamma_f: frozenset
    gamma_inf: frozenset
    markers: tuple
    exact: bool
    window_bound: int | None = None

    def marker_gaps(self) -> list[int]:
        """Gaps k_n - k_{n-1} with k_0 = 0."""
        prev = 0
        out = []
        for k in self.markers:
            out.append(k - prev)
            prev = k
        return out

    def to_rows(self) -> list[tuple]:
        return [(label, len(self.occurrences[label]), self.gap_index[label],
                 "finite" if label in self.gamma_f else "marker")
                for label in sorted(self.occurrences)]


def sigma(s: Schedule, n: int) -> int:
    """The schedule's label at position n (n >= 1)."""
    return s.label_at(n)


def profile(s: Schedule, n: int) -> ScheduleProfile:
    """Occurrence lists, gap indices and label classification on [1..n]."""
    if n < 1:
        raise ValueError("profile length must be at least 1")
    labels = s.prefix(n)
    occurrences: dict[int, list[int]] = {}
    for pos, label in enumerate(labels, start=1):
        occurrences.setdefault(int(label), []).append(pos)
    gap_index = {}
    for label, occ in occurrences.items():
        prev = 0
        worst = 0
        for p in occ:
            worst = max(worst, p - prev)
            prev = p
        gap_index[label] = worst

    exact = s.exact_classification
    bound = s.window_bound()
    if s.classified_by_rule:
        known = s.finite_labels()
        gamma_f = frozenset(l for l in occurrences if l in known)
    else:
        m = bound if bound is not None else n
        gamma_f = frozenset(l for l in occurrences if gap_index[l] <= m)
    gamma_inf = frozenset(occurrences) - gamma_f
    markers = tuple(pos for pos, label in enumerate(labels, start=1)
                    if int(label) in gamma_inf)
    return ScheduleProfile(prefix_len=n, occurrences=occurrences,
                           gap_index=gap_index, gamma_f=gamma_f,
                           gamma_inf=gamma_inf, markers=markers,
                           exact=exact, window_bound=bound)


def is_quasi_periodic(s: Schedule, r: int, m: int, n: int) -> bool:
    """True iff every length-m window of the prefix [1..n] equals {1..r}.

    Equivalent occurrence-gap formulation: labels stay inside {1..r},
    every label occurs, leading/inner gaps are <= m and the last
    occurrence of each label lands within the final window.
    """
    if not (m >= r >= 1):
        raise ValueError("need m >= r >= 1")
    labels = s.prefix(n)
    wanted = set(range(1, r + 1))
    seen = set(int(x) for x in np.unique(labels))
    if not seen <= wanted:
        return False
    if seen != wanted:
        return False
    if n < m:
        return True  # no complete window to violate the condition
    for label in wanted:
        occ = np.flatnonzero(labels == label) + 1
        gaps = np.diff(np.concatenate([[0], occ]))
        if gaps.max() > m:
            return False
        if occ[-1] < n - m + 1:
            return False
    return True


@dataclass(frozen=True)
class PseudoPeriodicReport:
    """Outcome of the pseudo-periodicity check on a prefix."""

    result: bool
    degenerate_quasi_periodic: bool
    reason: str
    marker_gaps: tuple = field(default_factory=tuple)

    def __bool__(self) -> bool:
        return self.result


def is_pseudo_periodic(s: Schedule, r: int, n: int) -> PseudoPeriodicReport:
    """Check Gamma_F == {1..r} and strictly growing marker gaps on [1..n].

    A schedule with no marker positions reduces to the quasi-periodic
    case; it passes with the degenerate flag set.
    """
    if r < 1:
        raise ValueError("r must be positive")
    prof = profile(s, n)
    wanted = frozenset(range(1, r + 1))
    if prof.gamma_f != wanted:
        return PseudoPeriodicReport(
            False, False,
            f"finite-gap labels {sorted(prof.gamma_f)} != 1..{r}")
    gaps = tuple(prof.marker_gaps())
    if not prof.markers:
        return PseudoPeriodicReport(True, True,
                                    "no markers: quasi-periodic prefix")
    increasing = all(b > a for a, b in zip(gaps, gaps[1:]))
    if not increasing:
        return PseudoPeriodicReport(False, False,
                                    f"marker gaps {list(gaps)} not strictly "
                                    "increasing", gaps)
    return PseudoPeriodicReport(True, False, "ok", gaps)


def compose_pseudo(base_word, insert_labels, marker_gaps) -> ComposedSchedule:
    """Validated constructor for composed pseudo-periodic schedules.

    base_word must be quasi-periodic as a cyclic word (every label 1..r
    present), marker gaps strictly increasing, and insertion labels
    disjoint from {1..r}. Marker positions then satisfy
    k_{n+1} - k_n > 1 automatically.
    """
    schedule = ComposedSchedule(base_word, insert_labels, marker_gaps)
    if not schedule.gap_rule.strictly_increasing():
        raise ValueError("marker gaps must be strictly increasing")
    min_insert = schedule.stream.min_label()
    if min_insert <= schedule.r:
        raise ValueError(
            f"insertion labels must exceed the base alphabet 1..{schedule.r}; "
            f"got label {min_insert}")
    return schedule
