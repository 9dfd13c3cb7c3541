"""Horvitz-Thompson estimation of a population total."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Union

import numpy as np

from .core import Decision, Frame, SamplingError


@dataclass(frozen=True)
class EstimateReport:
    ht_total: float
    n_selected: int
    sum_pi: float
    units_missing_y: int

    def as_dict(self) -> dict:
        return asdict(self)


def ht_estimate(selection: Iterable[Union[Decision, str]], frame: Frame) -> EstimateReport:
    """Horvitz-Thompson total from decisions or selected unit ids.

    Only selected units need a ``y`` value; a selected unit without one, or
    with ``pi == 0``, is an error.
    """
    by_id = {u.id: u for u in frame.units}
    chosen = []
    for item in selection:
        if isinstance(item, Decision):
            if not item.selected:
                continue
            uid = item.unit_id
        else:
            uid = item
        if uid not in by_id:
            raise SamplingError(f"selected unit {uid!r} is not in the frame")
        chosen.append(by_id[uid])

    terms = []
    for u in chosen:
        if u.pi == 0.0:
            raise SamplingError(f"unit {u.id!r} selected with pi = 0")
        if u.y is None:
            raise SamplingError(f"unit {u.id!r} selected but has no y value")
        terms.append(u.y / u.pi)
    missing = sum(1 for u in frame.units if u.y is None)
    total = math.fsum(terms)
    if not math.isfinite(total):
        raise SamplingError("Horvitz-Thompson total is not finite")
    return EstimateReport(total, len(chosen), math.fsum(u.pi for u in frame.units), missing)


def ht_totals(selections: np.ndarray, frame: Frame) -> np.ndarray:
    """Vectorised estimates for a boolean ``(replicates, units)`` selection matrix.

    Unselected units may lack ``y``; they contribute nothing.
    """
    pi = frame.pi
    y = np.array([np.nan if u.y is None else u.y for u in frame.units])
    picked = selections.any(axis=0)
    if np.any(picked & (np.isnan(y) | (pi == 0))):
        bad = frame.ids[int(np.flatnonzero(picked & (np.isnan(y) | (pi == 0)))[0])]
        raise SamplingError(f"unit {bad!r} selected without usable y / pi")
    w = np.where(picked, np.nan_to_num(y) / np.where(pi > 0, pi, 1.0), 0.0)
    return selections.astype(float) @ w
