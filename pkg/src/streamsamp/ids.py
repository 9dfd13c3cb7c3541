"""Immediate decision sampling: accept or reject each unit as it arrives.

The sampler keeps only the cumulative mass ``F`` and the selection count ``n``.
Windows of unit mass are implicit in ``F``; exactly one selection is owed per
window, and the acceptance probability of the current unit follows from how
much of its window is already spent and whether the window's selection has
already been made.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

import numpy as np

from .core import (
    EPS,
    Decision,
    Frame,
    NumericDriftError,
    SamplingError,
    StreamState,
    UnitRecord,
    crosses_integer,
    fractional_part,
    snap_floor,
    window_end,
)

# Thresholds may overshoot [0, 1] by float dust; anything beyond this is drift.
_CLIP_TOL = 1e-7


class EmitMode(enum.Enum):
    DECISIONS = "decisions_only"
    SELECTED = "selected_only"


def _clip(t: float) -> float:
    if t < 0.0:
        if t < -_CLIP_TOL:
            raise NumericDriftError(f"threshold {t} below 0")
        return 0.0
    if t > 1.0:
        if t > 1.0 + _CLIP_TOL:
            raise NumericDriftError(f"threshold {t} above 1")
        return 1.0
    return t


def single_condition_threshold(F_prev: float, F: float, n: int, pi: float) -> tuple[float, int, int]:
    """Acceptance probability from the one-line rule, with its ``(alpha, beta)``.

    ``alpha`` flags a unit straddling a window boundary, ``beta`` counts the
    selections still owed up to the window in which the unit ends.
    """
    if pi == 0.0:
        return 0.0, 0, 0
    ceil_F = window_end(F_prev, F)
    floor_prev = snap_floor(F_prev)
    alpha = ceil_F - floor_prev - 1
    beta = ceil_F - n
    m = fractional_part(F_prev)
    if alpha not in (0, 1) or beta not in (0, 1, 2):
        raise NumericDriftError(
            f"alpha={alpha}, beta={beta} at F_prev={F_prev!r}, F={F!r}, n={n}"
        )
    denom = (1 - alpha) * (1 - m) + alpha * ((2 - beta) * m + pi * (beta - 1))
    if min(beta, 1) == 0:
        return 0.0, alpha, beta
    if denom <= EPS:
        raise NumericDriftError(f"threshold denominator {denom} <= 0 at F_prev={F_prev!r}, n={n}")
    t = min(beta, 1) * (pi - alpha * (2 - beta) * (1 - m)) / denom
    return _clip(t), alpha, beta


def four_case_threshold(F_prev: float, n: int, pi_j: float, cross_border: bool, window: int) -> float:
    """Acceptance probability by explicit case analysis on (cross-border, window filled)."""
    if window != snap_floor(F_prev) + 1:
        raise SamplingError(f"window {window} inconsistent with F_prev={F_prev!r}")
    m = fractional_part(F_prev)
    if n not in (window - 1, window):
        raise NumericDriftError(f"selection count {n} unreachable in window {window}")
    owed = n < window
    if not cross_border:
        if pi_j == 0.0 or not owed:
            return 0.0
        return _clip(pi_j / (1.0 - m))
    if owed:
        return 1.0
    if m == 0.0:
        # a cross-border unit starting on a boundary would need pi_j > 1
        raise SamplingError("cross-border unit with zero fractional offset")
    return _clip((pi_j - (1.0 - m)) / m)


@dataclass
class IdsSampler:
    """Streaming sampler; one uniform draw per observed unit.

    >>> s = IdsSampler.seeded(7)
    >>> [s.observe(UnitRecord(i, 0.5)).selected for i in "ab"].count(True)
    1
    """

    state: StreamState
    emit_mode: EmitMode = EmitMode.DECISIONS

    @classmethod
    def seeded(cls, seed: int, emit_mode: EmitMode = EmitMode.DECISIONS) -> "IdsSampler":
        return cls(StreamState(rng=np.random.default_rng(seed)), emit_mode)

    def observe(self, unit: UnitRecord) -> Decision:
        st = self.state
        # u in (0, 1] so that threshold 0 never selects and threshold 1 always does
        u = 1.0 - st.rng.random()
        pi = unit.pi
        window = st.window
        if pi == 0.0:
            st.units_seen += 1
            return Decision(unit.id, False, 0.0, u, window, False)
        F_prev, F = st.advance(pi)
        threshold, alpha, _ = single_condition_threshold(F_prev, F, st.n, pi)
        selected = u <= threshold
        if selected:
            st.n += 1
        st.units_seen += 1
        return Decision(unit.id, selected, threshold, u, window, alpha == 1)

    def feed(self, units: Iterable[UnitRecord]) -> Iterator[Decision]:
        """Lazily observe ``units``; honours ``emit_mode``."""
        for pos, unit in enumerate(units):
            try:
                d = self.observe(unit)
            except (SamplingError, NumericDriftError) as exc:
                raise type(exc)(f"unit {unit.id!r} at position {pos}: {exc}") from exc
            if self.emit_mode is EmitMode.SELECTED and not d.selected:
                continue
            yield d


def run_stream(
    units: Union[Frame, Iterable[UnitRecord]],
    seed: int,
    emit_mode: EmitMode = EmitMode.DECISIONS,
) -> Iterator[Decision]:
    """Yield one decision per unit, each before the next unit is pulled."""
    return IdsSampler.seeded(seed, emit_mode).feed(iter(units))


def sample_ids(frame: Frame, seed: int) -> list[str]:
    return [d.unit_id for d in run_stream(frame, seed) if d.selected]


def threshold_table(pis) -> list[tuple[float, float, float, bool, int]]:
    """Per-unit ``(F_prev, F, pi, cross_border, window)`` along a fixed frame."""
    st = StreamState(rng=np.random.default_rng(0))
    out = []
    for p in pis:
        window = st.window
        if p == 0.0:
            F_prev = F = st.F
            out.append((F_prev, F, 0.0, False, window))
            continue
        F_prev, F = st.advance(p)
        out.append((F_prev, F, p, crosses_integer(F_prev, p), window))
    return out


def batch_selections(pis, uniforms: np.ndarray) -> np.ndarray:
    """Run the sampler on many replicates at once.

    ``uniforms`` has shape ``(R, N)`` with values in ``(0, 1]``; row ``r``
    plays the role of the per-unit draws of replicate ``r``. Returns an
    ``(R, N)`` boolean selection matrix identical to running ``observe``
    replicate by replicate with those draws.
    """
    R = uniforms.shape[0]
    n = np.zeros(R, dtype=np.int64)
    out = np.zeros(uniforms.shape, dtype=bool)
    for j, (F_prev, F, p, _, _) in enumerate(threshold_table(pis)):
        if p == 0.0:
            continue
        ceil_F = window_end(F_prev, F)
        beta = ceil_F - n
        t = np.empty(R)
        for b in np.unique(beta):
            t[beta == b] = single_condition_threshold(F_prev, F, int(ceil_F - b), p)[0]
        sel = uniforms[:, j] <= t
        out[:, j] = sel
        n += sel
    return out


__all__ = [
    "EmitMode",
    "IdsSampler",
    "batch_selections",
    "four_case_threshold",
    "run_stream",
    "sample_ids",
    "single_condition_threshold",
    "threshold_table",
]
