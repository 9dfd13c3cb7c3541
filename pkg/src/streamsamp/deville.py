"""Deville's systematic procedure: one draw per window from a two-piece density.

Batch reference for the streaming sampler. The whole frame is needed up
front because the density of window ``i`` depends on the unit straddling
the boundary ``i - 1`` and on whether that unit was taken in window ``i - 1``.
"""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import EPS, Frame, SamplingError, WindowLayout, build_window_layout, fractional_part


class DensityKind(enum.Enum):
    FIRST_WINDOW = "first_window"
    SELECTED_BRANCH = "selected_branch"
    NOT_SELECTED_BRANCH = "not_selected_branch"


@dataclass(frozen=True)
class WindowDensity:
    """Piecewise-constant density on [0, 1): ``low_value`` below ``break_point``, ``high_value`` above."""

    kind: DensityKind
    break_point: float
    low_value: float
    high_value: float

    def integral(self, lo: float, hi: float) -> float:
        """Mass of ``[lo, hi)`` clipped to [0, 1)."""
        lo, hi = max(lo, 0.0), min(hi, 1.0)
        if hi <= lo:
            return 0.0
        b = self.break_point
        below = max(0.0, min(hi, b) - lo)
        above = max(0.0, hi - max(lo, b))
        return below * self.low_value + above * self.high_value

    @property
    def total(self) -> float:
        return self.integral(0.0, 1.0)

    def ppf(self, q):
        """Inverse CDF; vectorised over ``q``."""
        q = np.asarray(q, dtype=float)
        b = self.break_point
        cut = b * self.low_value
        with np.errstate(divide="ignore", invalid="ignore"):
            low = q / self.low_value if self.low_value > 0 else np.full_like(q, b)
            high = b + (q - cut) / self.high_value if self.high_value > 0 else np.full_like(q, b)
        x = np.where(q < cut, low, high)
        return np.clip(x, 0.0, np.nextafter(1.0, 0.0))


UNIFORM = WindowDensity(DensityKind.FIRST_WINDOW, 0.0, 1.0, 1.0)


def build_window_density(F_prev_cross: float, F_cross: float, prev_selected: bool) -> WindowDensity:
    """Density of the offset drawn in the window following a boundary.

    ``F_prev_cross`` and ``F_cross`` are the cumulative masses just before and
    just after the unit straddling the boundary; ``prev_selected`` says whether
    that unit was taken in the previous window.
    """
    b = fractional_part(F_cross)
    if b > 0.0 and fractional_part(F_prev_cross) > 0.0 and math.floor(F_prev_cross) == math.floor(F_cross):
        raise SamplingError(f"no integer strictly between {F_prev_cross!r} and {F_cross!r}")
    if b == 0.0:
        kind = DensityKind.SELECTED_BRANCH if prev_selected else DensityKind.NOT_SELECTED_BRANCH
        return WindowDensity(kind, 0.0, 1.0, 1.0)
    if prev_selected:
        return WindowDensity(DensityKind.SELECTED_BRANCH, b, 0.0, 1.0 / (math.ceil(F_cross) - F_cross))
    a = math.ceil(F_prev_cross) - F_prev_cross
    if fractional_part(F_prev_cross) == 0.0:
        a = 0.0
    low = 1.0 / (1.0 - a)
    high = 1.0 - a * b / ((1.0 - a) * (1.0 - b))
    return WindowDensity(DensityKind.NOT_SELECTED_BRANCH, b, low, high)


@dataclass(frozen=True)
class _Plan:
    layout: WindowLayout
    n_windows: int
    # per boundary i (1-based, between window i and i+1): (index of straddling unit or None, F_before, F_after)
    boundary: tuple[tuple[Optional[int], float, float], ...]
    phantom: bool


def _plan(frame: Frame, phantom: bool) -> _Plan:
    if frame.sample_size is None and not phantom:
        raise SamplingError(
            f"total {frame.total!r} is not an integer; enable phantom completion to sample it"
        )
    layout = build_window_layout(frame)
    F = layout.cumulative
    boundary = []
    for w in layout.windows[:-1]:
        k = w.cross_border_index
        if k is None:
            boundary.append((None, 0.0, 0.0))
        else:
            boundary.append((k, F[k - 1] if k > 0 else 0.0, F[k]))
    return _Plan(layout, layout.n_windows, tuple(boundary), frame.sample_size is None)


def density_for(plan: _Plan, i: int, prev_selected: bool) -> WindowDensity:
    """Density used in window ``i`` (1-based)."""
    if i == 1:
        return UNIFORM
    k, F_before, F_after = plan.boundary[i - 2]
    if k is None:
        return WindowDensity(
            DensityKind.SELECTED_BRANCH if prev_selected else DensityKind.NOT_SELECTED_BRANCH,
            0.0, 1.0, 1.0,
        )
    return build_window_density(F_before, F_after, prev_selected)


def _locate(F: tuple[float, ...], point: float) -> Optional[int]:
    """Index ``j`` with ``F[j-1] <= point < F[j]``; None past the end (phantom)."""
    j = bisect.bisect_right(F, point)
    return j if j < len(F) else None


def deville_sample(frame: Frame, seed: int, phantom: bool = False) -> set[str]:
    """Select one unit per window with Deville's systematic procedure.

    With ``phantom=True`` a non-integer total is completed by phantom mass in
    the last window; when the draw lands there no real unit is taken.
    """
    plan = _plan(frame, phantom)
    rng = np.random.default_rng(seed)
    F = plan.layout.cumulative
    chosen: list[int] = []
    prev_selected = False
    for i in range(1, plan.n_windows + 1):
        dens = density_for(plan, i, prev_selected)
        x = float(dens.ppf(rng.random()))
        j = _locate(F, x + i - 1)
        if j is not None:
            chosen.append(j)
        if i <= len(plan.boundary):
            prev_selected = j is not None and j == plan.boundary[i - 1][0]
    return {frame.units[j].id for j in chosen}


def batch_selections(frame: Frame, uniforms: np.ndarray, phantom: bool = False) -> np.ndarray:
    """Vectorised Deville over replicates; ``uniforms`` has shape ``(R, n_windows)`` in [0, 1)."""
    plan = _plan(frame, phantom)
    F = np.asarray(plan.layout.cumulative)
    R = uniforms.shape[0]
    out = np.zeros((R, len(F)), dtype=bool)
    prev_selected = np.zeros(R, dtype=bool)
    rows = np.arange(R)
    for i in range(1, plan.n_windows + 1):
        x = np.empty(R)
        for flag in (False, True):
            mask = prev_selected == flag
            if mask.any():
                x[mask] = density_for(plan, i, flag).ppf(uniforms[mask, i - 1])
        j = np.searchsorted(F, x + (i - 1), side="right")
        real = j < len(F)
        out[rows[real], j[real]] = True
        if i <= len(plan.boundary):
            k = plan.boundary[i - 1][0]
            prev_selected = real & (j == k) if k is not None else np.zeros(R, dtype=bool)
    return out


def window_count(frame: Frame, phantom: bool = False) -> int:
    return _plan(frame, phantom).n_windows


def branch_unit_probabilities(plan: _Plan, i: int, prev_selected: bool) -> list[tuple[Optional[int], float]]:
    """Exact selection probabilities of each unit overlapping window ``i`` under one branch.

    ``None`` stands for the phantom piece of the last window.
    """
    dens = density_for(plan, i, prev_selected)
    F = plan.layout.cumulative
    lo_w = float(i - 1)
    out: list[tuple[Optional[int], float]] = []
    start = bisect.bisect_right(F, lo_w)
    F_prev = F[start - 1] if start > 0 else 0.0
    for j in range(start, len(F)):
        if F_prev >= i - EPS:
            break
        p = dens.integral(F_prev - lo_w, F[j] - lo_w)
        if p > 0.0:
            out.append((j, p))
        F_prev = F[j]
    if plan.phantom and i == plan.n_windows:
        p = dens.integral(F[-1] - lo_w, 1.0)
        if p > 0.0:
            out.append((None, p))
    return out
