"""Ground truth for the samplers: exact design tables and seeded Monte Carlo.

Exact tables come from walking every branch of a sampler's decision tree,
so they are limited to small frames. Monte Carlo tables count realised
samples over replicates whose randomness depends only on ``(seed, r)``.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

import numpy as np

from . import deville as _deville
from . import ids as _ids
from .core import Frame, SamplingError

MAX_EXACT_UNITS = 20
PRUNE = 1e-15
#: Replicates per generator block in Monte Carlo runs.
BLOCK = 1 << 14


class Source(enum.Enum):
    IDS_EXACT = "ids_exact"
    DEVILLE_EXACT = "deville_exact"
    IDS_MONTE_CARLO = "ids_monte_carlo"
    DEVILLE_MONTE_CARLO = "deville_monte_carlo"


class Algorithm(enum.Enum):
    IDS = "ids"
    DEVILLE = "deville"


Sample = tuple[str, ...]


@dataclass
class DesignTable:
    """Probability of each sample; keys are sorted tuples of unit ids."""

    entries: dict[Sample, float]
    source: Source
    replications: int = 0
    pruned_mass: float = 0.0

    @property
    def total(self) -> float:
        return math.fsum(self.entries.values())

    def inclusion(self, ids: list[str]) -> dict[str, float]:
        acc: dict[str, list[float]] = {k: [] for k in ids}
        for s, p in self.entries.items():
            for k in s:
                acc[k].append(p)
        return {k: math.fsum(v) for k, v in acc.items()}

    def pairwise(self, ids: list[str]) -> np.ndarray:
        """Matrix of ``P(j and j' both in S)``; diagonal holds first-order marginals."""
        pos = {k: i for i, k in enumerate(ids)}
        terms: dict[tuple[int, int], list[float]] = defaultdict(list)
        for s, p in self.entries.items():
            idx = sorted(pos[k] for k in s)
            for a in idx:
                terms[a, a].append(p)
            for a, b in itertools.combinations(idx, 2):
                terms[a, b].append(p)
        out = np.zeros((len(ids), len(ids)))
        for (a, b), v in terms.items():
            out[a, b] = out[b, a] = math.fsum(v)
        return out

    def sizes(self) -> set[int]:
        return {len(s) for s in self.entries}

    def to_json(self) -> str:
        samples = [
            {"ids": list(s), "p": p}
            for s, p in sorted(self.entries.items(), key=lambda kv: (len(kv[0]), kv[0]))
        ]
        return json.dumps(
            {"samples": samples, "source": self.source.value, "replications": self.replications},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "DesignTable":
        raw = json.loads(text)
        entries = {tuple(sorted(d["ids"])): float(d["p"]) for d in raw["samples"]}
        return cls(entries, Source(raw["source"]), int(raw["replications"]))


def _canon(frame: Frame, idx) -> Sample:
    return tuple(sorted(frame.units[j].id for j in idx))


def _check_size(frame: Frame) -> None:
    if len(frame) > MAX_EXACT_UNITS:
        raise SamplingError(f"exact enumeration limited to {MAX_EXACT_UNITS} units, got {len(frame)}")


@dataclass
class Path:
    """One root-to-leaf branch of the streaming decision tree."""

    prob: float
    selected: list[int]
    # per unit: (threshold, window, cross_border, selected, n_before)
    steps: list[tuple[float, int, bool, bool, int]] = field(default_factory=list)


def ids_paths(
    frame: Frame,
    rule: str = "single",
    on_state: Optional[Callable[[float, float, int, float, bool, int], None]] = None,
) -> tuple[list[Path], float]:
    """Every branch of the streaming sampler with its probability.

    ``rule`` is ``"single"`` for the one-condition threshold or ``"four_case"``
    for the explicit case analysis. ``on_state`` is called at every visited
    node with ``(F_prev, F, n, pi, cross_border, window)``. Returns the paths
    and the mass of branches pruned below ``PRUNE``.
    """
    _check_size(frame)
    table = _ids.threshold_table([u.pi for u in frame.units])
    N = len(table)
    paths: list[Path] = []
    pruned = 0.0
    stack = [(0, 0, 1.0, [], [])]
    while stack:
        j, n, prob, sel, steps = stack.pop()
        if j == N:
            paths.append(Path(prob, sel, steps))
            continue
        F_prev, F, p, cross, window = table[j]
        if on_state is not None:
            on_state(F_prev, F, n, p, cross, window)
        if rule == "single":
            t = _ids.single_condition_threshold(F_prev, F, n, p)[0]
        elif rule == "four_case":
            t = _ids.four_case_threshold(F_prev, n, p, cross, window)
        else:
            raise ValueError(f"unknown rule {rule!r}")
        # push "not selected" first so "selected" is explored first
        for take, q in ((False, 1.0 - t), (True, t)):
            if q == 0.0:
                continue
            branch = prob * q
            if branch < PRUNE:
                pruned += branch
                continue
            stack.append(
                (
                    j + 1,
                    n + take,
                    branch,
                    sel + [j] if take else sel,
                    steps + [(t, window, cross, take, n)],
                )
            )
    return paths, pruned


def enumerate_ids_design(frame: Frame, rule: str = "single") -> DesignTable:
    """Exact design of the streaming sampler by depth-first traversal of its decisions."""
    paths, pruned = ids_paths(frame, rule)
    acc: dict[Sample, list[float]] = defaultdict(list)
    for path in paths:
        acc[_canon(frame, path.selected)].append(path.prob)
    return DesignTable({s: math.fsum(v) for s, v in acc.items()}, Source.IDS_EXACT, 0, pruned)


def enumerate_deville_design(frame: Frame, phantom: bool = False) -> DesignTable:
    """Exact Deville design by chaining per-window branch integrals."""
    _check_size(frame)
    plan = _deville._plan(frame, phantom)
    acc: dict[Sample, list[float]] = defaultdict(list)
    pruned = 0.0
    stack = [(1, False, 1.0, [])]
    while stack:
        i, prev_sel, prob, sel = stack.pop()
        if i > plan.n_windows:
            acc[_canon(frame, sel)].append(prob)
            continue
        k = plan.boundary[i - 1][0] if i <= len(plan.boundary) else None
        for j, q in _deville.branch_unit_probabilities(plan, i, prev_sel):
            branch = prob * q
            if branch < PRUNE:
                pruned += branch
                continue
            chosen = sel if j is None else sel + [j]
            stack.append((i + 1, j is not None and j == k, branch, chosen))
    return DesignTable({s: math.fsum(v) for s, v in acc.items()}, Source.DEVILLE_EXACT, 0, pruned)


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def replicate_blocks(
    frame: Frame,
    algorithm: Algorithm,
    replications: int,
    seed: int,
    phantom: bool = False,
) -> Iterator[np.ndarray]:
    """Boolean selection matrices, ``BLOCK`` replicates at a time.

    Replicate ``r`` draws from block ``r // BLOCK``'s generator, keyed by
    ``(seed, r // BLOCK)``, so any block can be computed independently.
    """
    algorithm = Algorithm(algorithm)
    pis = [u.pi for u in frame.units]
    n_cols = len(pis) if algorithm is Algorithm.IDS else _deville.window_count(frame, phantom)
    for b, start in enumerate(range(0, replications, BLOCK)):
        size = min(BLOCK, replications - start)
        u = _block_rng(seed, b).random((size, n_cols))
        if algorithm is Algorithm.IDS:
            yield _ids.batch_selections(pis, 1.0 - u)
        else:
            yield _deville.batch_selections(frame, u, phantom)


def monte_carlo_design(
    frame: Frame,
    algorithm: Algorithm,
    replications: int,
    seed: int,
    phantom: bool = False,
) -> DesignTable:
    if replications < 1:
        raise SamplingError("replications must be >= 1")
    algorithm = Algorithm(algorithm)
    counts: Counter[bytes] = Counter()
    for sel in replicate_blocks(frame, algorithm, replications, seed, phantom):
        packed = np.packbits(sel, axis=1)
        rows, freq = np.unique(packed, axis=0, return_counts=True)
        for row, c in zip(rows, freq):
            counts[row.tobytes()] += int(c)
    N = len(frame)
    entries = {}
    for key, c in counts.items():
        bits = np.unpackbits(np.frombuffer(key, dtype=np.uint8))[:N]
        entries[_canon(frame, np.flatnonzero(bits))] = c / replications
    source = Source.IDS_MONTE_CARLO if algorithm is Algorithm.IDS else Source.DEVILLE_MONTE_CARLO
    return DesignTable(entries, source, replications)


@dataclass(frozen=True)
class DeviationReport:
    max_deviation: float
    where: Optional[tuple[str, ...]]
    tolerance: Optional[float] = None

    @property
    def passed(self) -> bool:
        return self.tolerance is None or self.max_deviation <= self.tolerance

    def as_dict(self) -> dict:
        return {
            "max_deviation": self.max_deviation,
            "where": list(self.where) if self.where else None,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def _binomial_band(p: np.ndarray, replications: int, k: float = 4.0) -> np.ndarray:
    return k * np.sqrt(p * (1.0 - p) / replications)


def check_first_order(table: DesignTable, frame: Frame, tolerance: Optional[float] = None) -> DeviationReport:
    """Largest ``|Pr(k in S) - pi_k|`` over units.

    For Monte Carlo tables without an explicit tolerance, each unit is scored
    in units of its 4-sigma binomial band, and the report passes when no
    unit exceeds its band.
    """
    ids = frame.ids
    marg = table.inclusion(ids)
    dev = np.array([abs(marg[k] - u.pi) for k, u in zip(ids, frame.units)])
    if table.replications and tolerance is None:
        band = _binomial_band(frame.pi, table.replications)
        ratio = np.where(band > 0, dev / np.where(band > 0, band, 1.0), np.where(dev > 0, np.inf, 0.0))
        worst = int(np.argmax(ratio))
        return DeviationReport(float(ratio[worst]), (ids[worst],), 1.0)
    worst = int(np.argmax(dev))
    return DeviationReport(float(dev[worst]), (ids[worst],), tolerance)


def check_joint(
    table: DesignTable,
    matrix: np.ndarray,
    ids: list[str],
    tolerance: Optional[float] = None,
) -> DeviationReport:
    """Largest gap between pairwise table marginals and a closed-form joint matrix.

    Monte Carlo tables are scored against 4-sigma binomial bands, as in
    :func:`check_first_order`.
    """
    emp = table.pairwise(ids)
    matrix = np.asarray(getattr(matrix, "values", matrix))
    dev = np.abs(emp - matrix)
    np.fill_diagonal(dev, 0.0)
    if table.replications and tolerance is None:
        band = _binomial_band(np.clip(matrix, 0.0, 1.0), table.replications)
        # zero-probability pairs must never be observed
        score = np.where(band > 0, dev / np.where(band > 0, band, 1.0), np.where(dev > 0, np.inf, 0.0))
        np.fill_diagonal(score, 0.0)
        a, b = np.unravel_index(int(np.argmax(score)), score.shape)
        return DeviationReport(float(score[a, b]), (ids[a], ids[b]), 1.0)
    a, b = np.unravel_index(int(np.argmax(dev)), dev.shape)
    return DeviationReport(float(dev[a, b]), (ids[a], ids[b]), tolerance)


def compare_tables(
    left: DesignTable,
    right: DesignTable,
    tolerance: Optional[float] = None,
    k_se: float = 4.0,
) -> DeviationReport:
    """Per-sample agreement of two designs.

    Exact tables are compared by absolute difference. When either side is a
    Monte Carlo table the score is the gap in pooled standard errors, and the
    report passes when no sample exceeds ``k_se``.
    """
    keys = set(left.entries) | set(right.entries)
    if not (left.replications or right.replications):
        worst, where = 0.0, None
        for s in keys:
            d = abs(left.entries.get(s, 0.0) - right.entries.get(s, 0.0))
            if d > worst:
                worst, where = d, s
        return DeviationReport(worst, where, tolerance)
    worst, where = 0.0, None
    for s in keys:
        p1, p2 = left.entries.get(s, 0.0), right.entries.get(s, 0.0)
        se = 0.0
        if left.replications and right.replications:
            pooled = (p1 * left.replications + p2 * right.replications) / (left.replications + right.replications)
            se = math.sqrt(pooled * (1 - pooled) * (1 / left.replications + 1 / right.replications))
        else:
            mc, exact = (left, right.entries.get(s, 0.0)) if left.replications else (right, left.entries.get(s, 0.0))
            se = math.sqrt(exact * (1 - exact) / mc.replications)
        gap = abs(p1 - p2)
        score = gap / se if se > 0 else (math.inf if gap > 0 else 0.0)
        if score > worst:
            worst, where = score, s
    return DeviationReport(worst, where, k_se)


def window_violations(frame: Frame, paths: Optional[list[Path]] = None) -> list[str]:
    """Branches where some completed window lacks exactly one selection.

    Each selection is charged to the window holding the mass that produced
    it: the unit's own window, or the next one when a straddling unit is
    taken after its first window was already filled. Returns a description
    of every offending branch.
    """
    if paths is None:
        paths, _ = ids_paths(frame)
    full = math.floor(frame.total + 1e-9)
    bad = []
    for path in paths:
        charged = []
        for t, window, cross, take, n_before in path.steps:
            if take:
                charged.append(window + 1 if cross and n_before == window else window)
        expect = list(range(1, len(charged) + 1))
        if charged != expect or not full <= len(charged) <= math.ceil(frame.total - 1e-9):
            bad.append(f"selections charged to windows {charged} (complete windows: {full})")
    return bad
