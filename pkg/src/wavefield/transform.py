"""Fast orthogonal wavelet transform on finite periodic signals.

One analysis step maps a length-N coefficient vector at scale k to a
coarse and a detail channel of length N/2 at scale k-1, via the filter
pair (h, g).  Periodization keeps the step exactly orthogonal, so the
multilevel pyramid preserves the Euclidean norm to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DepthError, ShapeError
from .filters import FilterPair

__all__ = [
    "CoeffVector",
    "CoeffPyramid",
    "analysis_step",
    "synthesis_step",
    "max_levels",
    "multilevel",
]


@dataclass(frozen=True)
class CoeffVector:
    """Periodic coefficient vector at a single scale.

    Length must be a power of two.  The per-step lower bound (length at
    least 2K) is checked where the filter is known, i.e. in the step
    functions, so the short coarse vector at the top of a deep pyramid
    remains representable.
    """

    scale: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        n = v.shape[0] if v.ndim == 1 else 0
        if v.ndim != 1 or n < 1 or (n & (n - 1)) != 0:
            raise ShapeError(
                "coefficient vector length must be a power of two",
                length=None if v.ndim != 1 else n,
            )
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class CoeffPyramid:
    """Multilevel decomposition: one coarse vector plus detail vectors,
    finest detail first, coarsest detail last."""

    coarse: CoeffVector
    details: tuple

    @property
    def levels(self):
        return len(self.details)

    def flatten(self):
        """Concatenate [coarse | detail_finest | ... | detail_coarsest]."""
        parts = [self.coarse.values] + [d.values for d in self.details]
        return np.concatenate(parts)


def _step_indices(half, taps, n):
    # row m holds the periodic source indices (2m + l) mod n, l = 0..taps-1
    return (2 * np.arange(half)[:, None] + np.arange(taps)[None, :]) % n


def analysis_step(v: CoeffVector, fp: FilterPair):
    """Split v into (coarse, detail) one scale down.

    coarse_m = sum_l h_l v_{(2m+l) mod N}, detail likewise with g.
    """
    n = len(v)
    if n < 2 * fp.order:
        raise ShapeError(
            "analysis step needs length >= 2K",
            length=n,
            order=fp.order,
        )
    idx = _step_indices(n // 2, len(fp.h), n)
    gathered = v.values[idx]
    coarse = gathered @ fp.h
    detail = gathered @ fp.g
    return (
        CoeffVector(v.scale - 1, coarse),
        CoeffVector(v.scale - 1, detail),
    )


def synthesis_step(coarse: CoeffVector, detail: CoeffVector, fp: FilterPair):
    """Exact inverse of analysis_step (adjoint of an orthogonal map)."""
    if len(coarse) != len(detail):
        raise ShapeError(
            "coarse/detail length mismatch",
            coarse=len(coarse),
            detail=len(detail),
        )
    if coarse.scale != detail.scale:
        raise ShapeError(
            "coarse/detail scale mismatch",
            coarse=coarse.scale,
            detail=detail.scale,
        )
    m = len(coarse)
    n = 2 * m
    if n < 2 * fp.order:
        raise ShapeError(
            "synthesis step would produce length < 2K",
            length=n,
            order=fp.order,
        )
    pos = _step_indices(m, len(fp.h), n)
    out = np.zeros(n)
    np.add.at(out, pos, fp.h[None, :] * coarse.values[:, None])
    np.add.at(out, pos, fp.g[None, :] * detail.values[:, None])
    return CoeffVector(coarse.scale + 1, out)


def max_levels(length: int, order: int) -> int:
    """Deepest admissible pyramid: every analysis step must see an input
    of length >= 2K, i.e. length / 2^(levels-1) >= 2K."""
    lv = 0
    while length >= 2 * order:
        lv += 1
        length //= 2
    return lv


def multilevel(data, fp: FilterPair, levels: int, direction: str = "forward"):
    """Repeated analysis of the coarse channel (forward) or its inverse.

    forward: CoeffVector -> CoeffPyramid with `levels` detail vectors.
    inverse: CoeffPyramid -> CoeffVector; `levels` must match the pyramid.
    """
    if direction == "forward":
        v = data
        if not isinstance(v, CoeffVector):
            raise ShapeError("forward multilevel expects a CoeffVector")
        if levels < 0 or levels > max_levels(len(v), fp.order):
            raise DepthError(
                "levels out of range for this length and order",
                levels=levels,
                max_levels=max_levels(len(v), fp.order),
            )
        details = []
        for _ in range(levels):
            v, d = analysis_step(v, fp)
            details.append(d)
        return CoeffPyramid(v, tuple(details))
    if direction == "inverse":
        p = data
        if not isinstance(p, CoeffPyramid):
            raise ShapeError("inverse multilevel expects a CoeffPyramid")
        if levels != p.levels:
            raise DepthError(
                "pyramid depth mismatch", levels=levels, pyramid=p.levels
            )
        v = p.coarse
        for d in reversed(p.details):
            v = synthesis_step(v, d, fp)
        return v
    raise ShapeError("direction must be forward or inverse", direction=direction)
