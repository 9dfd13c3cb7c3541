"""Units, frames, stream state and the size-one window decomposition."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

#: Absolute tolerance for integer tests on cumulative probability mass.
EPS = 1e-9

#: Inclusion probabilities this close to 0 or 1 are snapped onto the endpoint.
PI_SNAP = 1e-12


class SamplingError(ValueError):
    """Invalid input to one of the samplers."""


class NumericDriftError(ArithmeticError):
    """Floating-point state left the region that valid inputs can reach."""


def snap_floor(x: float) -> int:
    r = round(x)
    if abs(x - r) <= EPS:
        return int(r)
    return math.floor(x)


def snap_ceil(x: float) -> int:
    r = round(x)
    if abs(x - r) <= EPS:
        return int(r)
    return math.ceil(x)


def fractional_part(F: float) -> float:
    """Return ``F - floor(F)``, or 0.0 when ``F`` is within ``EPS`` of an integer."""
    if abs(F - round(F)) <= EPS:
        return 0.0
    return F - math.floor(F)


def window_end(F_prev: float, F: float) -> int:
    """Snapped ceiling of ``F``, never below the window in which the unit starts."""
    return max(snap_ceil(F), snap_floor(F_prev) + 1)


def is_integral(x: float) -> bool:
    return abs(x - round(x)) <= EPS


def crosses_integer(F_prev: float, pi: float) -> bool:
    """True when the open interval ``(F_prev, F_prev + pi)`` strictly contains an integer.

    Boundaries that land within ``EPS`` of an integer do not count.
    """
    k = math.floor(F_prev + EPS) + 1
    return k - F_prev > EPS and (F_prev + pi) - k > EPS


def check_pi(pi: float, unit_id: object = None) -> float:
    """Validate an inclusion probability, snapping float dust at 0 and 1."""
    pi = float(pi)
    if not math.isfinite(pi):
        raise SamplingError(f"unit {unit_id!r}: inclusion probability {pi} is not finite")
    if abs(pi) <= PI_SNAP:
        pi = 0.0
    elif abs(pi - 1.0) <= PI_SNAP:
        pi = 1.0
    if not 0.0 <= pi <= 1.0:
        raise SamplingError(f"unit {unit_id!r}: inclusion probability {pi} outside [0, 1]")
    return pi


class CompensatedSum:
    """Running sum with Neumaier error compensation."""

    __slots__ = ("_sum", "_comp")

    def __init__(self, start: float = 0.0) -> None:
        self._sum = float(start)
        self._comp = 0.0

    def add(self, x: float) -> float:
        t = self._sum + x
        if abs(self._sum) >= abs(x):
            self._comp += (self._sum - t) + x
        else:
            self._comp += (x - t) + self._sum
        self._sum = t
        return self.value

    @property
    def value(self) -> float:
        return self._sum + self._comp


def cumulative(pis: Iterable[float]) -> list[float]:
    """Partial sums ``F_1, ..., F_N`` using the same accumulator as the stream sampler."""
    acc = CompensatedSum()
    return [acc.add(p) for p in pis]


@dataclass(frozen=True)
class UnitRecord:
    id: str
    pi: float
    y: Optional[float] = None

    def __post_init__(self) -> None:
        if not isinstance(self.id, str) or not self.id:
            raise SamplingError(f"unit id must be a nonempty string, got {self.id!r}")
        object.__setattr__(self, "pi", check_pi(self.pi, self.id))
        if self.y is not None:
            object.__setattr__(self, "y", float(self.y))


@dataclass(frozen=True)
class Frame:
    """An ordered population. The design depends on the order of ``units``."""

    units: tuple[UnitRecord, ...]
    total: float = field(init=False)

    def __post_init__(self) -> None:
        units = tuple(self.units)
        seen: set[str] = set()
        for u in units:
            if u.id in seen:
                raise SamplingError(f"duplicate unit id {u.id!r}")
            seen.add(u.id)
        object.__setattr__(self, "units", units)
        object.__setattr__(self, "total", math.fsum(u.pi for u in units))

    @classmethod
    def from_pis(
        cls,
        pis: Sequence[float],
        ids: Optional[Sequence[str]] = None,
        y: Optional[Sequence[Optional[float]]] = None,
    ) -> "Frame":
        """Build a frame with default ids ``"1", "2", ...``."""
        n = len(pis)
        ids = [str(k + 1) for k in range(n)] if ids is None else list(ids)
        ys = [None] * n if y is None else list(y)
        if len(ids) != n or len(ys) != n:
            raise SamplingError("pis, ids and y must have the same length")
        return cls(tuple(UnitRecord(i, p, v) for i, p, v in zip(ids, pis, ys)))

    def __len__(self) -> int:
        return len(self.units)

    def __iter__(self):
        return iter(self.units)

    @property
    def pi(self) -> np.ndarray:
        return np.array([u.pi for u in self.units], dtype=float)

    @property
    def ids(self) -> list[str]:
        return [u.id for u in self.units]

    @property
    def sample_size(self) -> Optional[int]:
        """The fixed sample size when the total is integral, else ``None``."""
        return int(round(self.total)) if is_integral(self.total) else None


@dataclass
class StreamState:
    """Constant-size cursor of the immediate-decision sampler."""

    rng: np.random.Generator
    n: int = 0
    units_seen: int = 0
    _acc: CompensatedSum = field(default_factory=CompensatedSum, repr=False)

    @property
    def F(self) -> float:
        return self._acc.value

    def advance(self, pi: float) -> tuple[float, float]:
        """Add ``pi`` to the cumulative mass; return ``(F_before, F_after)``."""
        before = self._acc.value
        return before, self._acc.add(pi)

    @property
    def window(self) -> int:
        return snap_floor(self.F) + 1


@dataclass(frozen=True)
class Decision:
    unit_id: str
    selected: bool
    threshold: float
    u: float
    window: int
    cross_border: bool

    def as_record(self) -> dict:
        return {
            "id": self.unit_id,
            "selected": self.selected,
            "threshold": self.threshold,
            "window": self.window,
            "cross_border": self.cross_border,
        }


@dataclass(frozen=True)
class Window:
    """One window of unit mass.

    ``start_index`` may point at the previous window's cross-border unit when
    that unit carries mass (``carry_in``) into this window. ``pi_v1`` and
    ``pi_v2`` describe the split of the cross-border unit closing this window;
    both are 0 when the window closes on a unit boundary.
    """

    index: int
    start_index: int
    end_index: int
    cross_border_index: Optional[int]
    pi_v1: float
    pi_v2: float
    carry_in: float


@dataclass(frozen=True)
class WindowLayout:
    windows: tuple[Window, ...]
    cumulative: tuple[float, ...]
    unit_window: tuple[int, ...]
    cross_border: tuple[bool, ...]
    phantom_mass: float

    @property
    def n_windows(self) -> int:
        return len(self.windows)

    def window_mass(self, w: Window, pis: Sequence[float]) -> float:
        """Total mass of a window, phantom included for the last one."""
        inner = [
            pis[k]
            for k in range(w.start_index, w.end_index + 1)
            if not (k == w.cross_border_index or (w.carry_in > 0 and k == w.start_index))
        ]
        mass = math.fsum(inner) + w.pi_v1 + w.carry_in
        if w.index == self.n_windows:
            mass += self.phantom_mass
        return mass

    def boundary_split(self, r: int) -> tuple[float, float]:
        """``(pi_v1, pi_v2)`` of the unit crossing from window ``r`` into ``r + 1``."""
        w = self.windows[r - 1]
        return w.pi_v1, w.pi_v2


def build_window_layout(frame: Frame) -> WindowLayout:
    """Decompose a frame into consecutive windows of unit mass.

    Cumulative sums within ``EPS`` of an integer are snapped onto it, so a unit
    ending exactly on a boundary closes its window without a split.
    """
    if len(frame) == 0:
        raise SamplingError("frame is empty")
    pis = [u.pi for u in frame.units]
    F = [float(round(f)) if is_integral(f) else f for f in cumulative(pis)]

    unit_window: list[int] = []
    cross: list[bool] = []
    windows: list[Window] = []
    start = 0
    carry_in = 0.0
    F_prev = 0.0
    for j, p in enumerate(pis):
        ell = snap_floor(F_prev) + 1
        is_cross = p > 0 and crosses_integer(F_prev, p)
        unit_window.append(ell)
        cross.append(is_cross)
        if is_cross:
            k = ell
            pi_v1 = k - F_prev
            pi_v2 = F[j] - k
            windows.append(Window(ell, start, j, j, pi_v1, pi_v2, carry_in))
            start, carry_in = j, pi_v2
        elif p > 0 and F[j] == ell:
            windows.append(Window(ell, start, j, None, 0.0, 0.0, carry_in))
            start, carry_in = j + 1, 0.0
        F_prev = F[j]

    total = F[-1]
    phantom = 0.0
    if not is_integral(total):
        phantom = math.ceil(total) - total
        ell = snap_floor(total) + 1
        windows.append(Window(ell, start, len(pis) - 1, None, 0.0, 0.0, carry_in))
    return WindowLayout(tuple(windows), tuple(F), tuple(unit_window), tuple(cross), phantom)
