"""Closed-form second-order inclusion probabilities.

Dependence between windows travels only through the units straddling window
boundaries. Boundary ``r`` contributes the factor

    c_r = a_r b_r / ((1 - a_r)(1 - b_r))

where ``a_r`` and ``b_r`` are the parts of the straddling unit on either side
of the boundary, and two windows ``l < l'`` are coupled by the product of
``c_r`` over the boundaries between them.

A straddling unit is positioned at the window holding its carried part when
the coupling product is taken: unit ``v_l`` sits at ``l + 1``. With that
convention every pair type reproduces exact enumeration of the design.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import EPS, Frame, NumericDriftError, WindowLayout, build_window_layout


@dataclass(frozen=True)
class CrossBorderChain:
    """Boundary coupling factors and their products.

    ``factors[r - 1]`` is ``c_r`` for boundary ``r`` (between windows ``r`` and
    ``r + 1``); boundaries without a straddling unit have ``c_r = 0``.
    """

    factors: np.ndarray
    _products: np.ndarray

    @classmethod
    def from_layout(cls, layout: WindowLayout) -> "CrossBorderChain":
        c = []
        for w in layout.windows:
            a, b = w.pi_v1, w.pi_v2
            if a <= EPS or b <= EPS:
                c.append(0.0)
                continue
            if 1.0 - a <= EPS or 1.0 - b <= EPS:
                raise NumericDriftError(f"degenerate split ({a}, {b}) at window {w.index}")
            c.append(a * b / ((1.0 - a) * (1.0 - b)))
        c = np.asarray(c, dtype=float)
        L = len(c) + 1
        prod = np.zeros((L + 1, L + 1))
        for lo in range(1, L + 1):
            prod[lo, lo] = 1.0
            if lo <= len(c):
                prod[lo, lo + 1 :] = np.cumprod(c[lo - 1 :])[: L - lo]
        return cls(c, prod)

    def between(self, lo: int, hi: int) -> float:
        """``c(lo, hi)``: product of ``c_r`` for ``lo <= r < hi``; 1 when ``lo == hi``."""
        if hi < lo:
            raise ValueError(f"c({lo}, {hi}) needs lo <= hi")
        return float(self._products[lo, hi])


@dataclass(frozen=True)
class JointMatrix:
    ids: tuple[str, ...]
    values: np.ndarray

    @property
    def n_units(self) -> int:
        return len(self.ids)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.ids)
        for row in self.values:
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


class _Context:
    """Layout-derived quantities reused across many pairs."""

    def __init__(self, frame: Frame, layout: Optional[WindowLayout] = None):
        self.frame = frame
        self.layout = layout if layout is not None else build_window_layout(frame)
        self.chain = CrossBorderChain.from_layout(self.layout)
        self.pi = [u.pi for u in frame.units]

    def split(self, j: int) -> tuple[float, float]:
        return self.layout.boundary_split(self.layout.unit_window[j])

    def is_cross(self, j: int) -> bool:
        if not self.layout.cross_border[j]:
            return False
        a, b = self.split(j)
        return a > EPS and b > EPS


def _pair(ctx: _Context, j: int, k: int) -> float:
    if j > k:
        j, k = k, j
    pj, pk = ctx.pi[j], ctx.pi[k]
    if pj == 0.0 or pk == 0.0:
        return 0.0
    wj, wk = ctx.layout.unit_window[j], ctx.layout.unit_window[k]
    xj, xk = ctx.is_cross(j), ctx.is_cross(k)
    c = ctx.chain.between

    if not xj and not xk:
        if wj == wk:
            return 0.0
        return pj * pk * (1.0 - c(wj, wk))
    if xj and not xk:
        _, b = ctx.split(j)
        ratio = b * (1.0 - pj) / (pj * (1.0 - b))
        return pj * pk * (1.0 - ratio * c(wj + 1, wk))
    if not xj and xk:
        _, b = ctx.split(k)
        ratio = (1.0 - b) * (1.0 - pk) / (pk * b)
        return pj * pk * (1.0 - ratio * c(wj, wk + 1))
    _, bj = ctx.split(j)
    _, bk = ctx.split(k)
    ratio = bj * (1.0 - bk) * (1.0 - pj) * (1.0 - pk) / (pj * pk * bk * (1.0 - bj))
    return pj * pk * (1.0 - ratio * c(wj + 1, wk + 1))


def joint_probability(
    layout: WindowLayout,
    frame: Frame,
    j: int,
    j_prime: int,
) -> float:
    """``P(j in S and j_prime in S)`` for distinct 0-based unit positions."""
    if j == j_prime:
        raise ValueError("joint_probability needs two distinct units")
    for idx in (j, j_prime):
        if not 0 <= idx < len(frame):
            raise IndexError(f"unit position {idx} out of range")
    return _pair(_Context(frame, layout), j, j_prime)


def joint_matrix(frame: Frame, layout: Optional[WindowLayout] = None) -> JointMatrix:
    """Symmetric matrix of joint inclusion probabilities; diagonal holds ``pi``."""
    ctx = _Context(frame, layout)
    N = len(frame)
    out = np.zeros((N, N))
    for j in range(N):
        out[j, j] = ctx.pi[j]
        for k in range(j + 1, N):
            out[j, k] = out[k, j] = _pair(ctx, j, k)
    # float dust from 1 - c products
    np.clip(out, 0.0, None, out=out)
    return JointMatrix(tuple(frame.ids), out)


def row_identity_gap(matrix: JointMatrix, frame: Frame) -> float:
    """Largest ``|sum_{j' != j} pi_jj' - (n - 1) pi_j|``; needs an integral total."""
    n = frame.sample_size
    if n is None:
        raise ValueError("row identity only holds for an integral total")
    v = matrix.values
    off = v.sum(axis=1) - np.diag(v)
    return float(np.max(np.abs(off - (n - 1) * frame.pi)))
