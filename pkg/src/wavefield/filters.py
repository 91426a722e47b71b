"""Daubechies filter coefficients.

The order-K family is fixed by three algebraic constraint sets on the 2K
low-pass taps h_0..h_{2K-1}:

    sum_n h_n             = sqrt(2)
    sum_n h_n h_{n-2m}    = delta_{m0}          (double-shift orthonormality)
    sum_n n^m (-1)^n h_{2K-1-n} = 0,  m < K     (vanishing moments)

and the high-pass taps are the alternating flip g_l = (-1)^l h_{2K-1-l}.
The constraints do not single out one filter; we take the extremal-phase
(minimum-phase) solution, the classic tabulation, by spectral factorization
of the half-band polynomial: with y = (2 - z - 1/z)/4, the degree-(K-1)
polynomial P(y) = sum_{j<K} C(K-1+j, j) y^j is turned into a Laurent
polynomial in z, and of each reciprocal root pair the representative on one
side of the unit circle is kept. Root products are badly conditioned in
float64 for K around 8 and beyond (coefficients would lose ~10 digits), so
the factorization runs in 60-digit arithmetic, gets one Gauss-Newton polish
on the constraint system, and is rounded to float64 once at the end.

A note on residuals: the vanishing-moment sums contain terms n^m h_n that
grow to ~1e10 by K = 10, so the raw float64 sum cannot cancel below
eps * (largest term) no matter how the taps are produced. Residuals
reported by ``constraint_residuals`` are therefore scaled by the largest
term of each sum (for m = 0 this is just max|h|), which measures exactly
the cancellation float64 can express.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .errors import UnsupportedOrderError

K_MAX = 12


@dataclass(frozen=True)
class FilterPair:
    """Low-pass taps h and high-pass taps g for a Daubechies-K basis."""

    order: int
    h: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        self.h.setflags(write=False)
        self.g.setflags(write=False)

    @property
    def support_width(self):
        # both filters occupy taps 0 .. 2K-1
        return 2 * self.order


def _spectral_factor_mp(K):
    """Extremal-phase taps at 60-digit precision; returns a list of mpf."""
    from mpmath import mp, mpf, polyroots

    with mp.workdps(60):
        if K == 1:
            r2 = mp.sqrt(2)
            return [1 / r2, 1 / r2]

        # z^{K-1} P(y(z)) as coefficients of z^0 .. z^{2K-2}
        coeffs = [mpf(0)] * (2 * K - 1)
        for j in range(K):
            # (2 - z - 1/z)^j = (-1)^j (sqrt(z) - 1/sqrt(z))^(2j)
            c = mpf(comb(K - 1 + j, j)) * (-1) ** j / mpf(4) ** j
            for i in range(2 * j + 1):
                coeffs[K - 1 - j + i] += c * comb(2 * j, i) * (-1) ** i
        roots = polyroots(list(reversed(coeffs)), maxsteps=200, extraprec=160)
        keep = [r for r in roots if abs(r) > 1]
        # deterministic ordering of the kept half
        keep.sort(key=lambda r: (mp.re(r), mp.im(r)))

        # h(z) ~ ((1+z)/2)^K * prod (z - r) / prod(-r), normalized afterwards
        poly = [mpf(1)]
        for _ in range(K):
            nxt = [mpf(0)] * (len(poly) + 1)
            for i, c in enumerate(poly):
                nxt[i] += c / 2
                nxt[i + 1] += c / 2
            poly = nxt
        for r in keep:
            nxt = [mpf(0)] * (len(poly) + 1)
            for i, c in enumerate(poly):
                nxt[i] += c * (-r)
                nxt[i + 1] += c
            poly = nxt
        h = [mp.re(c) for c in poly]
        norm = mp.sqrt(2) / sum(h)
        h = [c * norm for c in h]
        return _newton_polish_mp(h, K)


def _newton_polish_mp(h, K):
    """One Gauss-Newton step on the full constraint system, full precision."""
    from mpmath import mp, mpf, matrix, qr_solve

    n = 2 * K
    eqs = []  # list of (residual, gradient) rows

    def add(res, grad):
        eqs.append((res, grad))

    add(sum(h) - mp.sqrt(2), [mpf(1)] * n)
    for m in range(K):  # orthonormality, m = 0..K-1
        res = -mpf(1 if m == 0 else 0)
        grad = [mpf(0)] * n
        for i in range(n):
            j = i - 2 * m
            if 0 <= j < n:
                res += h[i] * h[j]
                grad[i] += h[j]
                grad[j] += h[i]
        add(res, grad)
    for m in range(K):  # vanishing moments of the flipped alternating taps
        res = mpf(0)
        grad = [mpf(0)] * n
        for i in range(n):
            w = mpf(i) ** m * (-1) ** i
            res += w * h[n - 1 - i]
            grad[n - 1 - i] += w
        add(res, grad)

    J = matrix([g for _, g in eqs])
    F = matrix([r for r, _ in eqs])
    try:
        dx = qr_solve(J, F)[0]
    except ZeroDivisionError:  # defensive; system is full rank in practice
        return h
    return [h[i] - dx[i] for i in range(n)]


@lru_cache(maxsize=None)
def _make_h(K):
    h = np.array([float(c) for c in _spectral_factor_mp(K)])
    h.setflags(write=False)
    return h


def wavelet_taps(h):
    """Alternating flip g_l = (-1)^l h_{2K-1-l}, bit-identical mapping."""
    n = len(h)
    return np.array([(-1.0) ** l * h[n - 1 - l] for l in range(n)])


def make_filters(K):
    """Return the extremal-phase Daubechies-K FilterPair.

    Deterministic: repeated calls return bit-identical coefficient values.
    """
    if not isinstance(K, (int, np.integer)) or isinstance(K, bool):
        raise UnsupportedOrderError(f"order must be an integer, got {K!r}")
    if not 1 <= K <= K_MAX:
        raise UnsupportedOrderError(f"order {K} outside supported range 1..{K_MAX}")
    h = _make_h(int(K))
    return FilterPair(order=int(K), h=h, g=wavelet_taps(h))


def wavelet_filter(fp):
    """High-pass taps of the pair (the alternating flip of h)."""
    return wavelet_taps(fp.h)


def constraint_residuals(h):
    """Residuals of the three constraint families for taps h.

    Returns a dict with keys 'sum', 'orthonormality', 'moments'. The moment
    residuals are scaled per-sum by the largest term magnitude (see module
    docstring); the other two families have O(1) terms and are raw.
    """
    h = np.asarray(h, dtype=float)
    n = len(h)
    K = n // 2
    out = {"sum": abs(h.sum() - np.sqrt(2.0))}

    worst = 0.0
    for m in range(K):
        target = 1.0 if m == 0 else 0.0
        acc = 0.0
        for i in range(n):
            j = i - 2 * m
            if 0 <= j < n:
                acc += h[i] * h[j]
        worst = max(worst, abs(acc - target))
    out["orthonormality"] = worst

    worst = 0.0
    flipped = h[::-1]
    idx = np.arange(n, dtype=float)
    signs = (-1.0) ** np.arange(n)
    for m in range(K):
        terms = idx**m * signs * flipped
        scale = max(np.abs(terms).max(), 1e-300)
        worst = max(worst, abs(terms.sum()) / scale)
    out["moments"] = worst
    return out
