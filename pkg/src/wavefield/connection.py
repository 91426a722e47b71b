"""Overlap tensors of scaling-function products: the derivative matrix D
and the m-point tensors Gamma (m = 2, 3, 4).

Entries are exact integrals of products of (derivatives of) translated
scaling functions.  Compact support makes each tensor a finite table over
integer offset tuples relative to the first index.  The tables are NOT
computed by quadrature: substituting the refinement equation into the
integral turns each table into the eigenvalue-1 fixed point of a finite
linear map, solved here as a bordered least-squares system with one
inhomogeneous normalization row.  A plain-quadrature oracle on refined
dyadic samples provides the independent cross-check.

Normalizations:
  D:        sum_n n^2 D_{0n} = -2   (twice-differentiated quadratic
            reproduction, integrated against s)
  gamma-m:  sum over the full table = 1 (partition of unity applied to
            every factor but the first)

Scaling to scale k multiplies gamma-m by 2^{k(m-2)/2}.  For D the change
of variables gives 2^{2k}; resolve_d_exponent() rechecks that exponent
against a scale-1 oracle rather than trusting the derivation.
"""

from __future__ import annotations

import itertools
import os
import tempfile
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import (
    AlreadyScaledError,
    CorruptTableError,
    DegenerateFixedPointError,
    IndexRangeError,
    NonDifferentiableOrderError,
    ParseError,
    ShapeError,
)
from .filters import FilterPair, make_filters
from .scaling import scaling_samples

__all__ = [
    "CoeffTensor",
    "gamma_tensor",
    "derivative_overlaps",
    "rescale_tensor",
    "recursion_residual",
    "quadrature_oracle",
    "resolve_d_exponent",
    "validate_tensor",
    "save_tensor",
    "load_tensor",
    "wrap_matrix",
    "wrap_tensor_dense",
    "D_RESCALE_EXPONENT",
]

_KINDS = ("derivative-D", "gamma-2", "gamma-3", "gamma-4")

# per-unit-scale exponent for D; derived from the change of variables and
# settled against the scale-1 oracle (resolve_d_exponent), which rejects
# the alternative reading 2^k by three orders of magnitude
D_RESCALE_EXPONENT = 2

FORMAT_VERSION = 1


@dataclass(frozen=True)
class CoeffTensor:
    """Sparse offset table for one overlap tensor.

    entries maps offset tuples (n2, ..., nm), the translations of factors
    2..m relative to the first factor, to real values.  derivative-D and
    gamma-2 use 1-tuples.
    """

    kind: str
    order: int
    scale: int
    entries: dict = field(repr=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ShapeError("unknown tensor kind", kind=self.kind)

    @property
    def support_radius(self):
        return 2 * self.order - 2

    @property
    def arity(self):
        """Number of factors m in the underlying integrand."""
        return 2 if self.kind in ("derivative-D", "gamma-2") else int(self.kind[-1])

    def value(self, offsets):
        return self.entries.get(tuple(offsets), 0.0)

    def sorted_items(self):
        return sorted(self.entries.items())


def _admissible_offsets(radius, m):
    """All offset tuples with every |n_i| <= radius and every pairwise
    |n_i - n_j| <= radius (supports of all m factors must meet)."""
    rng = range(-radius, radius + 1)
    out = []
    for tup in itertools.product(rng, repeat=m - 1):
        ok = all(abs(a - b) <= radius for a, b in itertools.combinations(tup, 2))
        if ok:
            out.append(tup)
    return out


def _solve_bordered(a_mat, norm_row, norm_value, what):
    """Solve (A - I) x = 0 with one appended normalization row.

    Least squares keeps the solve robust near degeneracy; an eigenvalue-1
    multiplicity above one leaves the bordered matrix rank-deficient,
    which shows up as a vanishing smallest singular value.
    """
    n = a_mat.shape[0]
    b = np.vstack([a_mat - np.eye(n), np.asarray(norm_row, dtype=float)[None, :]])
    rhs = np.zeros(n + 1)
    rhs[-1] = norm_value
    x, _, _, sv = np.linalg.lstsq(b, rhs, rcond=None)
    if sv[-1] < 1e-8 * max(1.0, sv[0]):
        raise DegenerateFixedPointError(
            "eigenvalue-1 fixed point is not unique",
            system=what,
            smallest_singular_value=float(sv[-1]),
        )
    resid = np.abs(b @ x - rhs).max()
    if resid > 1e-10:
        raise DegenerateFixedPointError(
            "bordered fixed-point system is inconsistent",
            system=what,
            residual=float(resid),
        )
    return x


def _gamma_map(h, m, offsets):
    """Dense matrix of the m-factor refinement map on the offset set.

    Row for offset tuple n: 2^{(m-2)/2} sum_{l1..lm} h_{l1}..h_{lm} x at
    child tuple (2 n_i + l_{i+1} - l_1).  Assembled per l_1 with a dense
    tuple->index lookup cube and bincount accumulation.
    """
    taps = len(h)
    radius = taps - 2
    nt = len(offsets)
    width = m - 1
    pref = 2.0 ** ((m - 2) / 2.0)

    off_arr = np.array(offsets, dtype=np.int64)
    reach = 2 * radius + taps - 1
    side = 2 * reach + 1
    lut = np.full((side,) * width, -1, dtype=np.int64)
    for i, tup in enumerate(offsets):
        lut[tuple(t + reach for t in tup)] = i

    lgrids = np.meshgrid(*([np.arange(taps)] * width), indexing="ij")
    lcombo = np.stack([g.ravel() for g in lgrids], axis=1)
    hprod = np.prod(h[lcombo], axis=1)

    a_flat = np.zeros(nt * nt)
    rows = np.repeat(np.arange(nt, dtype=np.int64), lcombo.shape[0])
    for l1 in range(taps):
        child = 2 * off_arr[:, None, :] + (lcombo - l1)[None, :, :] + reach
        cols = lut[tuple(child[..., i] for i in range(width))].ravel()
        w = np.broadcast_to(pref * h[l1] * hprod, (nt, lcombo.shape[0])).ravel()
        keep = cols >= 0
        a_flat += np.bincount(
            rows[keep] * nt + cols[keep], weights=w[keep], minlength=nt * nt
        )
    return a_flat.reshape(nt, nt)


@lru_cache(maxsize=32)
def _gamma_cached(order, m):
    fp = make_filters(order)
    offsets = _admissible_offsets(2 * order - 2, m)
    a_mat = _gamma_map(fp.h, m, offsets)
    x = _solve_bordered(a_mat, np.ones(len(offsets)), 1.0, f"gamma-{m}")
    entries = {tup: float(v) for tup, v in zip(offsets, x)}
    return CoeffTensor(f"gamma-{m}", order, 0, entries)


def gamma_tensor(fp: FilterPair, m: int) -> CoeffTensor:
    """Scale-0 m-point overlap table Gamma_{0, n2..nm}.

    m=2 is orthonormality and returns the Kronecker delta without solving.
    """
    if m not in (2, 3, 4):
        raise IndexRangeError("gamma arity must be 2, 3 or 4", m=m)
    if m == 2:
        return CoeffTensor("gamma-2", fp.order, 0, {(0,): 1.0})
    return _gamma_cached(fp.order, m)


def derivative_overlaps(fp: FilterPair) -> CoeffTensor:
    """Scale-0 derivative overlap table D_{0n} = int s'(x) s'(x-n) dx."""
    if fp.order < 3:
        raise NonDifferentiableOrderError(
            "derivative overlaps need order >= 3", order=fp.order
        )
    return _derivative_cached(fp.order)


@lru_cache(maxsize=16)
def _derivative_cached(order):
    fp = make_filters(order)
    h = fp.h
    radius = 2 * fp.order - 2
    offs = np.arange(-radius, radius + 1)
    pos = {n: i for i, n in enumerate(offs)}
    a_mat = np.zeros((len(offs), len(offs)))
    for i, n in enumerate(offs):
        for l1 in range(len(h)):
            for l2 in range(len(h)):
                j = pos.get(2 * n + l2 - l1)
                if j is not None:
                    a_mat[i, j] += 4.0 * h[l1] * h[l2]
    x = _solve_bordered(a_mat, offs.astype(float) ** 2, -2.0, "derivative-D")
    entries = {(int(n),): float(v) for n, v in zip(offs, x)}
    return CoeffTensor("derivative-D", fp.order, 0, entries)


def recursion_residual(t: CoeffTensor, fp: FilterPair) -> float:
    """Max deviation when the refinement map is applied to the table.

    A correct table is an exact fixed point; the residual is solver noise.
    """
    if fp.order != t.order:
        raise ShapeError("tensor/filter order mismatch", tensor=t.order, filter=fp.order)
    h = fp.h
    m = t.arity
    worst = 0.0
    if t.kind == "derivative-D":
        for (n,), v in t.entries.items():
            acc = 0.0
            for l1 in range(len(h)):
                for l2 in range(len(h)):
                    acc += 4.0 * h[l1] * h[l2] * t.value((2 * n + l2 - l1,))
            worst = max(worst, abs(acc - v))
        return worst
    pref = 2.0 ** ((m - 2) / 2.0)
    taps = len(h)
    combos = list(itertools.product(range(taps), repeat=m))
    hp = {c: pref * float(np.prod(h[list(c)])) for c in combos}
    for tup, v in t.entries.items():
        acc = 0.0
        for c in combos:
            child = tuple(2 * tup[i] + c[i + 1] - c[0] for i in range(m - 1))
            if child in t.entries:
                acc += hp[c] * t.entries[child]
        worst = max(worst, abs(acc - v))
    return worst


def rescale_tensor(t: CoeffTensor, k: int) -> CoeffTensor:
    """Carry a scale-0 table to scale k.

    gamma-m scales by 2^{k(m-2)/2}; D scales by 2^{k * D_RESCALE_EXPONENT}.
    """
    if t.scale != 0:
        raise AlreadyScaledError("tensor is not at scale 0", scale=t.scale)
    if t.kind == "derivative-D":
        fac = 2.0 ** (D_RESCALE_EXPONENT * k)
    else:
        fac = 2.0 ** (k * (t.arity - 2) / 2.0)
    entries = {tup: v * fac for tup, v in t.entries.items()}
    return CoeffTensor(t.kind, t.order, k, entries)


def _fd_derivative(values, level):
    """Centered finite difference on a dyadic sample array (zero outside)."""
    out = np.empty(len(values))
    scale = 2.0**level / 2.0
    out[1:-1] = (values[2:] - values[:-2]) * scale
    out[0] = values[1] * scale
    out[-1] = -values[-2] * scale
    return out


@lru_cache(maxsize=48)
def _oracle_samples(order, level, derivative):
    s = scaling_samples(make_filters(order), level).values
    if not derivative:
        return s
    d = _fd_derivative(s, level)
    d.setflags(write=False)
    return d


def quadrature_oracle(fp: FilterPair, factors, level: int, scale: int = 0,
                      weight_power: int = 0) -> float:
    """Riemann-sum value of int x^p prod_i f_i(x - n_i) dx.

    factors: sequence of (translation, derivative_order) with derivative
    order 0 or 1; at most 4 factors.  Derivative factors use a centered
    finite difference of the refined samples, which keeps this path
    independent of the fixed-point solver AND of the derivative-value
    eigenproblem.  The plain scaled sum equals the trapezoid value for
    orders >= 2 (endpoint samples vanish) and is exact for the order-1
    indicator, where a literal trapezoid rule is not.

    scale k multiplies the scale-0 integral by 2^{k[(m-2)/2 + sum o_i]}
    (substitution u = 2^k x with one 2^{k/2} per factor and 2^k per
    derivative).  The x^p weight is supported at scale 0 only.
    """
    factors = [(int(n), int(d)) for n, d in factors]
    if not 1 <= len(factors) <= 4:
        raise ShapeError("oracle supports 1..4 factors", count=len(factors))
    if level > 16 or level < 1:
        raise IndexRangeError("oracle level must lie in 1..16", level=level)
    if any(d not in (0, 1) for _, d in factors):
        raise ShapeError("only first derivatives are supported")
    if any(d == 1 for _, d in factors) and fp.order < 3:
        raise NonDifferentiableOrderError(
            "derivative factors need order >= 3", order=fp.order
        )
    if weight_power and scale != 0:
        raise ShapeError("polynomial weight is only defined at scale 0")

    s = _oracle_samples(fp.order, level, False)
    ds = _oracle_samples(fp.order, level, True) if any(d for _, d in factors) else None
    g = 2**level
    n1 = len(s)
    lo = max([0] + [n * g for n, _ in factors])
    hi = min([n1] + [n1 + n * g for n, _ in factors])
    if hi <= lo:
        total = 0.0
    else:
        acc = np.ones(hi - lo)
        for n, d in factors:
            src = ds if d else s
            acc = acc * src[lo - n * g : hi - n * g]
        if weight_power:
            acc = acc * (np.arange(lo, hi) / g) ** weight_power
        total = acc.sum() / g
    m = len(factors)
    der = sum(d for _, d in factors)
    return float(total * 2.0 ** (scale * ((m - 2) / 2.0 + der)))


def resolve_d_exponent(fp: FilterPair, level: int = 12) -> dict:
    """Settle the per-scale exponent of D by direct scale-1 comparison.

    Candidate exponents 1 and 2 differ by a factor 2 at k=1, far above
    the finite-difference error of the oracle, so the comparison is
    unambiguous.  Returns the winning exponent and both deviations.
    """
    t = derivative_overlaps(fp)
    devs = {}
    for expo in (1, 2):
        worst = 0.0
        for (n,), v in t.sorted_items():
            if n < 0:
                continue
            oracle = quadrature_oracle(fp, [(0, 1), (n, 1)], level, scale=1)
            worst = max(worst, abs(v * 2.0**expo - oracle))
        devs[expo] = worst
    winner = min(devs, key=devs.get)
    return {
        "exponent": winner,
        "deviation": devs[winner],
        "rejected_exponent": max(devs, key=devs.get),
        "rejected_deviation": max(devs.values()),
    }


def _perm_asymmetry(t: CoeffTensor) -> float:
    """Max mismatch of entries under permutations of the full index tuple."""
    worst = 0.0
    m = t.arity
    for tup, v in t.entries.items():
        full = (0,) + tup
        for perm in itertools.permutations(full):
            rebased = tuple(perm[i] - perm[0] for i in range(1, m))
            worst = max(worst, abs(v - t.entries.get(rebased, 0.0)))
    return worst


def validate_tensor(t: CoeffTensor, gamma3: CoeffTensor | None = None):
    """Re-check every intrinsic invariant; raises corrupt-table on failure.

    The gamma-4 partition rule needs the matching gamma-3 table and is
    checked only when one is supplied.
    """
    radius = t.support_radius
    for tup in t.entries:
        if any(abs(n) > radius for n in tup):
            raise CorruptTableError(
                "offset outside support radius", offset=tup, radius=radius
            )
    if t.kind == "derivative-D":
        worst = max(
            abs(v - t.entries.get((-n,), 0.0)) for (n,), v in t.entries.items()
        )
        if worst > 1e-12:
            raise CorruptTableError("derivative table not even", deviation=worst)
        total = sum(t.entries.values())
        if abs(total) > 1e-10 * 2.0 ** (D_RESCALE_EXPONENT * t.scale):
            raise CorruptTableError("derivative row sum nonzero", total=total)
        wrapped = wrap_matrix(t, 4 * t.order)
        low = float(np.linalg.eigvalsh(wrapped)[0])
        if low < -1e-10 * max(1.0, np.abs(wrapped).max()):
            raise CorruptTableError(
                "periodized derivative matrix not PSD", smallest_eigenvalue=low
            )
        return
    worst = _perm_asymmetry(t)
    if worst > 1e-12 * 2.0 ** (t.scale * (t.arity - 2) / 2.0):
        raise CorruptTableError("table not permutation symmetric", deviation=worst)
    if t.kind == "gamma-3" and t.scale == 0:
        for n2 in range(-radius, radius + 1):
            acc = sum(v for (a, b), v in t.entries.items() if a == n2)
            target = 1.0 if n2 == 0 else 0.0
            if abs(acc - target) > 1e-10:
                raise CorruptTableError(
                    "three-point sum rule violated", n2=n2, total=acc
                )
    if t.kind == "gamma-4" and gamma3 is not None and t.scale == 0:
        worst = 0.0
        pairs = {tup[:2] for tup in t.entries}
        for pair in pairs:
            acc = sum(v for tup, v in t.entries.items() if tup[:2] == pair)
            worst = max(worst, abs(acc - gamma3.value(pair)))
        if worst > 1e-10:
            raise CorruptTableError(
                "four-point partition rule violated", deviation=worst
            )


def save_tensor(t: CoeffTensor, path):
    """Versioned text table; written atomically (temp file + rename)."""
    lines = [
        f"wavefield-tensor {FORMAT_VERSION}",
        f"kind {t.kind}",
        f"order {t.order}",
        f"scale {t.scale}",
        f"support-radius {t.support_radius}",
        f"entries {len(t.entries)}",
    ]
    for tup, v in t.sorted_items():
        lines.append(" ".join(str(n) for n in tup) + " " + format(v, ".17g"))
    payload = "\n".join(lines) + "\n"
    path = os.fspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", prefix=".tensor-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_header_line(line, key, lineno):
    parts = line.split()
    if len(parts) != 2 or parts[0] != key:
        raise ParseError("malformed header line", line=lineno, expected=key)
    return parts[1]


def load_tensor(path) -> CoeffTensor:
    """Read a table written by save_tensor and re-validate its invariants.

    Structural problems (bad header, counts, offsets, metadata that
    contradicts itself) raise a parse error; value-level invariant
    violations raise a corrupt-table error.
    """
    with open(path) as fh:
        raw = fh.read().splitlines()
    if not raw:
        raise ParseError("empty tensor file", path=os.fspath(path))
    head = raw[0].split()
    if len(head) != 2 or head[0] != "wavefield-tensor":
        raise ParseError("missing format line", path=os.fspath(path))
    if head[1] != str(FORMAT_VERSION):
        raise ParseError("unsupported format version", version=head[1])
    if len(raw) < 6:
        raise ParseError("truncated header", lines=len(raw))
    kind = _parse_header_line(raw[1], "kind", 2)
    if kind not in _KINDS:
        raise ParseError("unknown kind", kind=kind)
    try:
        order = int(_parse_header_line(raw[2], "order", 3))
        scale = int(_parse_header_line(raw[3], "scale", 4))
        radius = int(_parse_header_line(raw[4], "support-radius", 5))
        count = int(_parse_header_line(raw[5], "entries", 6))
    except ValueError as exc:
        raise ParseError("non-integer header field", detail=str(exc)) from None
    if order < 1:
        raise ParseError("order must be positive", order=order)
    if radius != 2 * order - 2:
        raise ParseError(
            "support radius inconsistent with order", order=order, radius=radius
        )
    body = raw[6:]
    if len(body) != count:
        raise ParseError("entry count mismatch", declared=count, found=len(body))
    width = 1 if kind in ("derivative-D", "gamma-2") else int(kind[-1]) - 1
    entries = {}
    for lineno, line in enumerate(body, start=7):
        parts = line.split()
        if len(parts) != width + 1:
            raise ParseError("bad record arity", line=lineno, fields=len(parts))
        try:
            tup = tuple(int(p) for p in parts[:width])
            val = float(parts[-1])
        except ValueError:
            raise ParseError("unparsable record", line=lineno) from None
        if not np.isfinite(val):
            raise ParseError("non-finite value", line=lineno)
        if any(abs(n) > radius for n in tup):
            raise ParseError("offset outside declared radius", line=lineno, offset=tup)
        if tup in entries:
            raise ParseError("duplicate offset", line=lineno, offset=tup)
        entries[tup] = val
    t = CoeffTensor(kind, order, scale, entries)
    validate_tensor(t)
    return t


def wrap_matrix(t: CoeffTensor, n_modes: int) -> np.ndarray:
    """Periodize a two-factor table onto n_modes translations.

    Offsets congruent mod n_modes alias onto the same entry, so the
    result is a circulant matrix valid for any n_modes >= 1.
    """
    if t.arity != 2:
        raise ShapeError("wrap_matrix needs a two-factor table", kind=t.kind)
    if n_modes < 1:
        raise ShapeError("need at least one mode", n_modes=n_modes)
    row = np.zeros(n_modes)
    for (n,), v in t.entries.items():
        row[n % n_modes] += v
    i = np.arange(n_modes)
    return row[(i[None, :] - i[:, None]) % n_modes]


def wrap_tensor_dense(t: CoeffTensor, n_modes: int) -> np.ndarray:
    """Periodize gamma-m offsets onto a dense (n_modes,)^{m-1} block.

    Entry [j2, ..., jm] holds the aliased sum over offsets congruent to
    (j2, ..., jm) mod n_modes; the full tensor is recovered by cyclic
    translation of the first index.
    """
    if n_modes < 1:
        raise ShapeError("need at least one mode", n_modes=n_modes)
    width = t.arity - 1
    out = np.zeros((n_modes,) * width)
    for tup, v in t.entries.items():
        out[tuple(n % n_modes for n in tup)] += v
    return out
