"""Scaling function and wavelet evaluation on dyadic grids.

The order-K scaling function s(x) is the compactly supported solution of

    s(x) = sqrt(2) sum_l h_l s(2x - l),      supp s = [0, 2K-1]

normalized by integral 1. Its values at integers are the eigenvalue-1
eigenvector of the refinement matrix M_ij = sqrt(2) h_{2i-j} over the
interior integers, fixed by sum_n s(n) = 1 (an exact linear condition, so
no quadrature enters). The derivative values (K >= 3) come from the
eigenvalue-1/2 eigenvector with sum_n n s'(n) = -1. Finer dyadic grids are
filled in by the cascade: even-index points are copied from the coarser
grid, odd points come from the refinement sum, so refinement never touches
previously computed values.

All evaluation is dyadic-exact; there is no interpolation to generic reals.
Moments <x^m> satisfy a closed recursion obtained by substituting the
scaling equation, and polynomial-reproduction coefficients c_n(m) expand
x^m = sum_n c_n(m) s(x - n) pointwise for m < K.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

from .errors import (
    DegenerateRefinementError,
    InsufficientResolutionError,
    InsufficientVanishingMomentsError,
    NonDifferentiableOrderError,
)
from .filters import make_filters


@dataclass(frozen=True)
class DyadicSamples:
    """Values of s (or s') on the grid i / 2**level over [0, 2K-1].

    values[i] is the sample at x = i / 2**level; index 0 sits at the left
    support edge, everything outside the array is an implicit zero.
    """

    order: int
    level: int
    derivative_order: int
    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)

    def grid(self):
        return np.arange(len(self.values)) / 2.0**self.level

    def value_at(self, numerator, denominator_level):
        """Sample at numerator / 2**denominator_level, zero off support."""
        if denominator_level > self.level:
            raise InsufficientResolutionError(
                f"grid level {self.level} cannot resolve 2^-{denominator_level}"
            )
        i = numerator << (self.level - denominator_level)
        if 0 <= i < len(self.values):
            return float(self.values[i])
        return 0.0


@dataclass(frozen=True)
class BasisIndex:
    kind: str  # 'scaling' | 'wavelet'
    scale: int
    translation: int


def integer_values(fp):
    """s(n) for n = 0..2K-1, the eigenvalue-1 refinement eigenvector."""
    K = fp.order
    h = fp.h
    if K == 1:
        # Haar, right-open convention: s = 1 on [0, 1)
        return DyadicSamples(1, 0, 0, np.array([1.0, 0.0]))
    return DyadicSamples(K, 0, 0, _eigenvector(h, K, 1.0))


def derivative_values(fp):
    """s'(n) for n = 0..2K-1, eigenvalue-1/2 eigenvector, sum n s'(n) = -1."""
    K = fp.order
    if K < 3:
        raise NonDifferentiableOrderError(
            f"order {K} scaling function is not differentiable; need K >= 3"
        )
    return DyadicSamples(K, 0, 1, _eigenvector(fp.h, K, 0.5))


def _eigenvector(h, K, lam):
    # interior integers 1..2K-2; endpoints vanish
    n_int = 2 * K - 2
    M = np.zeros((n_int, n_int))
    for i in range(1, 2 * K - 1):
        for j in range(1, 2 * K - 1):
            l = 2 * i - j
            if 0 <= l < 2 * K:
                M[i - 1, j - 1] = np.sqrt(2.0) * h[l]
    w, V = np.linalg.eig(M)
    sel = np.where(np.abs(w - lam) < 1e-8)[0]
    if len(sel) != 1:
        raise DegenerateRefinementError(
            f"eigenvalue {lam} multiplicity {len(sel)} in refinement matrix"
        )
    v = np.real(V[:, sel[0]])
    if lam == 1.0:
        v = v / v.sum()  # partition of unity at integers
    else:
        n = np.arange(1, 2 * K - 1)
        v = v / (n * v).sum() * -1.0  # differentiated x-reproduction
    out = np.zeros(2 * K)
    out[1 : 2 * K - 1] = v
    return out


def refine(samples, target_level, fp=None):
    """Cascade the samples down to target_level (never up).

    Even-index points of each new grid are copied verbatim from the previous
    one; odd points are filled from the refinement sum. Derivative samples
    refine with the extra factor 2 from the chain rule.
    """
    if target_level < samples.level:
        raise InsufficientResolutionError("cannot coarsen samples")
    if fp is None:
        fp = make_filters(samples.order)
    h = fp.h
    K = samples.order
    fac = 2.0 * np.sqrt(2.0) if samples.derivative_order else np.sqrt(2.0)
    vals = samples.values
    for j in range(samples.level, target_level):
        m = len(vals)
        new = np.zeros(2 * m - 1)
        new[0::2] = vals
        odd = new[1::2]  # odd new index 2t+1, t = 0..m-2
        t = np.arange(m - 1)
        for l in range(2 * K):
            # 2x - l at x = (2t+1)/2^{j+1} is level-j sample 2t+1 - l*2^j
            src = 2 * t + 1 - (l << j)
            ok = (src >= 0) & (src < m)
            odd[t[ok]] += fac * h[l] * vals[src[ok]]
        vals = new
    return DyadicSamples(K, target_level, samples.derivative_order, vals)


def scaling_samples(fp, level):
    """Convenience: s on the level grid."""
    return refine(integer_values(fp), level, fp)


def derivative_samples(fp, level):
    return refine(derivative_values(fp), level, fp)


def wavelet_samples(fp, level):
    """Mother wavelet w(x) = sqrt(2) sum_l g_l s(2x - l) on the level grid.

    w shares the support [0, 2K-1] (under the index convention where w is
    built from level-1 translates of s starting at 0).
    """
    s = refine(integer_values(fp), level + 1, fp)
    K = fp.order
    n = (2 * K - 1) * 2**level + 1
    out = np.zeros(n)
    sv = s.values
    i = np.arange(n)
    for l in range(2 * K):
        # at x = i/2^level the argument 2x - l sits at level-(level+1)
        # sample index (2x - l) * 2^(level+1) = 4i - l * 2^(level+1)
        src = 4 * i - (l << (level + 1))
        ok = (src >= 0) & (src < len(sv))
        out[i[ok]] += np.sqrt(2.0) * fp.g[l] * sv[src[ok]]
    return DyadicSamples(K, level, 0, out)


def evaluate_basis(idx, samples, x, fp=None):
    """Evaluate 2^{k/2} s(2^k x - n) (or the wavelet analogue) at dyadic x.

    x must be resolvable on the samples' grid after the affine map; callers
    holding only coarse samples must refine first.
    """
    xf = Fraction(x)
    k, n = idx.scale, idx.translation
    u = Fraction(2) ** k * xf - n  # argument of the unit-scale function
    amp = 2.0 ** (k / 2.0)
    if idx.kind == "scaling":
        return amp * _dyadic_eval(samples, u)
    if idx.kind == "wavelet":
        if fp is None:
            fp = make_filters(samples.order)
        # w(u) = sqrt(2) sum_l g_l s(2u - l)
        acc = 0.0
        for l in range(2 * samples.order):
            acc += fp.g[l] * _dyadic_eval(samples, 2 * u - l)
        return amp * np.sqrt(2.0) * acc
    raise ValueError(f"unknown basis kind {idx.kind!r}")


def _dyadic_eval(samples, u):
    q = u * 2**samples.level
    if q.denominator != 1:
        raise InsufficientResolutionError(
            f"{u} not on the level-{samples.level} grid; refine first"
        )
    i = q.numerator
    if 0 <= i < len(samples.values):
        return float(samples.values[i])
    return 0.0


@lru_cache(maxsize=None)
def _moment_cached(K, m):
    fp = make_filters(K)
    h = fp.h
    l = np.arange(2 * K, dtype=float)
    M = [1.0]
    for q in range(1, m + 1):
        acc = 0.0
        for p in range(q):
            acc += comb(q, p) * (l ** (q - p) * h).sum() * M[p]
        M.append(np.sqrt(2.0) / (2.0 ** (q + 1) - 2.0) * acc)
    return M[m]


def moments(fp, m):
    """<x^m> = integral x^m s(x) dx by the exact scaling-equation recursion."""
    if m < 0 or m > 2 * fp.order:
        raise ValueError(f"moment order {m} outside 0..{2 * fp.order}")
    return _moment_cached(fp.order, m)


def reproduction_coeffs(fp, m, n_range):
    """Coefficients c_n(m) with sum_n c_n(m) s(x - n) = x^m pointwise.

    c_n(m) = integral x^m s(x - n) dx = sum_p C(m, p) n^{m-p} <x^p>.
    Requires m < K (vanishing moments of the wavelet side).
    """
    if m >= fp.order:
        raise InsufficientVanishingMomentsError(
            f"degree {m} not reproducible at order {fp.order}; need m < K"
        )
    mom = [moments(fp, p) for p in range(m + 1)]
    out = []
    for n in n_range:
        out.append(sum(comb(m, p) * float(n) ** (m - p) * mom[p] for p in range(m + 1)))
    return np.array(out)
