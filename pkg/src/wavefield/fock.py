"""Truncated normal-ordered phi^4 Hamiltonian on a periodic mode lattice.

Field and momentum at each retained translation n are expressed through
ladder operators of frequency gamma,

    Phi_n = (a_n + a_n^+) / sqrt(2 gamma)
    Pi_n  = i sqrt(gamma/2) (a_n^+ - a_n),

and every Hamiltonian monomial is normal ordered with respect to the
gamma-vacuum: expand in ladder operators, keep the creation-left
orderings, drop all contraction terms.  That makes <vac|H|vac> = 0 a
structural identity, not a numerical one.

Assembly collects ladder monomials into aggregated (creators,
annihilators) terms, applies each term to all occupation states at once,
and mirrors every off-diagonal block explicitly, so the stored matrix is
exactly symmetric (entry by entry, not within a tolerance).

The volume truncation wraps tensor offsets modulo the mode count.  The
wrapped sums are well defined for any N >= 1; for N < 2K distinct
offsets alias onto the same entry, which is exactly what restricting a
periodic lattice below the filter support means.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .connection import CoeffTensor, wrap_matrix, wrap_tensor_dense
from .errors import (
    ConvergenceFailureError,
    IndexRangeError,
    OrderMismatchError,
    ScaleMismatchError,
    ShapeError,
    TachyonicConfigurationError,
)

__all__ = [
    "LatticeConfig",
    "ModelParams",
    "FockBasis",
    "FockOperator",
    "mode_operator",
    "build_phi4_hamiltonian",
    "free_reference_spectrum",
    "lanczos_lowest",
    "block_leakage_counts",
]


@dataclass(frozen=True)
class LatticeConfig:
    """Periodic lattice of retained translations at one resolution."""

    order: int
    scale: int
    modes: int

    def __post_init__(self):
        if self.modes < 1:
            raise ShapeError("need at least one mode", modes=self.modes)


@dataclass(frozen=True)
class ModelParams:
    mass_squared: float
    coupling: float
    gamma: float = 0.0  # 0 requests the default sqrt(mass_squared)

    def __post_init__(self):
        g = self.gamma
        if g == 0.0:
            if self.mass_squared <= 0:
                raise ShapeError(
                    "default gamma needs mass_squared > 0",
                    mass_squared=self.mass_squared,
                )
            g = float(np.sqrt(self.mass_squared))
            object.__setattr__(self, "gamma", g)
        if g <= 0:
            raise ShapeError("gamma must be positive", gamma=g)


@lru_cache(maxsize=16)
def _occupations(modes, cutoff):
    dim = (cutoff + 1) ** modes
    idx = np.arange(dim, dtype=np.int64)
    occ = np.empty((dim, modes), dtype=np.int64)
    for j in range(modes):
        occ[:, j] = (idx // (cutoff + 1) ** j) % (cutoff + 1)
    occ.setflags(write=False)
    return occ


@dataclass(frozen=True)
class FockBasis:
    """Occupation-number basis, lexicographic with mode 0 fastest."""

    modes: int
    cutoff: int

    def __post_init__(self):
        if self.modes < 1 or self.cutoff < 1:
            raise ShapeError(
                "need modes >= 1 and cutoff >= 1",
                modes=self.modes,
                cutoff=self.cutoff,
            )

    @property
    def dimension(self):
        return (self.cutoff + 1) ** self.modes

    @property
    def strides(self):
        return (self.cutoff + 1) ** np.arange(self.modes, dtype=np.int64)

    def occupations(self):
        """(dimension, modes) table; row i is the occupation vector of i."""
        return _occupations(self.modes, self.cutoff)

    def index_of(self, occ):
        occ = np.asarray(occ, dtype=np.int64)
        if occ.shape != (self.modes,) or occ.min() < 0 or occ.max() > self.cutoff:
            raise IndexRangeError("occupation vector out of range")
        return int(occ @ self.strides)


@dataclass(frozen=True)
class FockOperator:
    basis: FockBasis
    matrix: sp.csr_matrix = field(repr=False)


def _apply_term(basis, creators, annihilators):
    """Matrix triplets of prod a^+_{creators} prod a_{annihilators}.

    Returns (source, target, amplitude) over all basis states where the
    amplitude is nonzero and the target stays under the cutoff.
    """
    occ = basis.occupations()
    dim = occ.shape[0]
    amp = np.ones(dim)
    work = occ.astype(np.int64).copy()
    for j in annihilators:
        amp = amp * np.sqrt(np.maximum(work[:, j], 0))
        work[:, j] -= 1
    for j in creators:
        work[:, j] += 1
        amp = amp * np.sqrt(np.maximum(work[:, j], 0))
    valid = amp != 0.0
    for j in set(creators):
        valid &= work[:, j] <= basis.cutoff
    strides = basis.strides
    shift = int(sum(strides[j] for j in creators) - sum(strides[j] for j in annihilators))
    src = np.nonzero(valid)[0]
    return src, src + shift, amp[valid]


def mode_operator(basis: FockBasis, mode: int, which: str, gamma: float = 1.0) -> FockOperator:
    """Single-mode ladder, field, or momentum matrix.

    which: annihilate | create | phi | pi_times_i, with
    phi = (a + a^+)/sqrt(2 gamma) and pi_times_i the real antisymmetric
    matrix sqrt(gamma/2) (a^+ - a) representing Pi/i.
    """
    if not 0 <= mode < basis.modes:
        raise IndexRangeError("mode out of range", mode=mode, modes=basis.modes)
    if gamma <= 0:
        raise ShapeError("gamma must be positive", gamma=gamma)
    dim = basis.dimension

    def mat(creators, annihilators, coeff):
        src, tgt, amp = _apply_term(basis, creators, annihilators)
        return sp.coo_matrix((coeff * amp, (tgt, src)), shape=(dim, dim)).tocsr()

    if which == "annihilate":
        out = mat((), (mode,), 1.0)
    elif which == "create":
        out = mat((mode,), (), 1.0)
    elif which == "phi":
        c = 1.0 / np.sqrt(2.0 * gamma)
        out = mat((), (mode,), c) + mat((mode,), (), c)
    elif which == "pi_times_i":
        c = np.sqrt(gamma / 2.0)
        out = mat((mode,), (), c) + mat((), (mode,), -c)
    else:
        raise ShapeError("unknown operator name", which=which)
    return FockOperator(basis, out)


def _quadratic_terms(w_mat, mass_squared, gamma, modes):
    """Aggregated ladder terms of 1/2 sum :Pi^2: + 1/2 sum (W + mu^2 I) :Phi Phi:."""
    terms = {}

    def add(creators, annihilators, coeff):
        key = (tuple(sorted(creators)), tuple(sorted(annihilators)))
        terms[key] = terms.get(key, 0.0) + coeff

    inv = 1.0 / (2.0 * gamma)
    for n in range(modes):
        # 1/2 :Pi_n^2: = (gamma/2) a+a - (gamma/4)(a+a+ + aa)
        add((n, n), (), -gamma / 4.0)
        add((), (n, n), -gamma / 4.0)
        add((n,), (n,), gamma / 2.0)
        cnn = 0.5 * (w_mat[n, n] + mass_squared)
        add((n, n), (), cnn * inv)
        add((), (n, n), cnn * inv)
        add((n,), (n,), 2.0 * cnn * inv)
    for m in range(modes):
        for n in range(m + 1, modes):
            # the ordered pairs (m,n) and (n,m) combine: 1/2 (W_mn + W_nm)
            c = 0.5 * (w_mat[m, n] + w_mat[n, m])
            if c == 0.0:
                continue
            add((m, n), (), c * inv)
            add((), (m, n), c * inv)
            add((m,), (n,), c * inv)
            add((n,), (m,), c * inv)
    return terms


def _quartic_terms(t_dense, coupling, gamma, modes, terms):
    """Fold lambda sum Gamma :Phi Phi Phi Phi: into the term table."""
    inv2 = coupling / (2.0 * gamma) ** 2
    splits = [
        tuple((1 << b) & s != 0 for b in range(4)) for s in range(16)
    ]
    nz = np.argwhere(t_dense != 0.0)
    for n in range(modes):
        for o2, o3, o4 in nz:
            tup = (n, (n + o2) % modes, (n + o3) % modes, (n + o4) % modes)
            w = t_dense[o2, o3, o4] * inv2
            for pick in splits:
                cr = tuple(sorted(tup[i] for i in range(4) if pick[i]))
                an = tuple(sorted(tup[i] for i in range(4) if not pick[i]))
                key = (cr, an)
                terms[key] = terms.get(key, 0.0) + w
    return terms


def _dedup(rows, cols, vals, dim):
    """Sum duplicate triplets with a stable ordering (mergesort lexsort),
    so mirrored triplet lists reduce to bit-identical sums."""
    if len(rows) == 0:
        return rows, cols, vals
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals)
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    keys = rows * dim + cols
    starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
    sums = np.add.reduceat(vals, starts)
    return rows[starts], cols[starts], sums


def build_phi4_hamiltonian(cfg: LatticeConfig, p: ModelParams, d_tensor: CoeffTensor,
                           g4_tensor: CoeffTensor | None, basis: FockBasis) -> FockOperator:
    """Assemble the normal-ordered Hamiltonian

    H = 1/2 sum :Pi^2: + 1/2 sum D :Phi Phi: + 1/2 mu^2 sum :Phi^2:
        + lambda sum Gamma4 :Phi Phi Phi Phi:

    with periodic wrapping of the tensor offsets.  Both tensors must
    already be rescaled to cfg.scale.
    """
    if basis.modes != cfg.modes:
        raise ShapeError("basis/config mode mismatch", basis=basis.modes, config=cfg.modes)
    _check_tensor(d_tensor, "derivative-D", cfg)
    if p.coupling != 0.0:
        if g4_tensor is None:
            raise ShapeError("interacting Hamiltonian needs the four-point table")
        _check_tensor(g4_tensor, "gamma-4", cfg)
    n_modes = cfg.modes
    w_mat = wrap_matrix(d_tensor, n_modes)
    terms = _quadratic_terms(w_mat, p.mass_squared, p.gamma, n_modes)
    if p.coupling != 0.0:
        t_dense = wrap_tensor_dense(g4_tensor, n_modes)
        terms = _quartic_terms(t_dense, p.coupling, p.gamma, n_modes, terms)

    dim = basis.dimension
    rows_d, cols_d, vals_d = [], [], []  # diagonal-shift terms
    rows_o, cols_o, vals_o = [], [], []  # strictly one triangle
    for key, coeff in terms.items():
        conj = (key[1], key[0])
        if key > conj:
            continue  # the conjugate pass covers it with the same amplitude
        if coeff == 0.0 and terms.get(conj, 0.0) == 0.0:
            continue
        src, tgt, amp = _apply_term(basis, key[0], key[1])
        if len(src) == 0:
            continue
        if key == conj:
            rows_d.append(tgt)
            cols_d.append(src)
            vals_d.append(coeff * amp)
        else:
            rows_o.append(tgt)
            cols_o.append(src)
            vals_o.append(coeff * amp)

    def cat(parts):
        return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)

    rd, cd, vd = _dedup(cat(rows_d), cat(cols_d), cat(vals_d), dim)
    ro, co, vo = _dedup(cat(rows_o), cat(cols_o), cat(vals_o), dim)
    rows = np.concatenate([rd, ro, co])
    cols = np.concatenate([cd, co, ro])
    vals = np.concatenate([vd, vo, vo])
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
    return FockOperator(basis, mat)


def _check_tensor(t, kind, cfg):
    if t.kind != kind:
        raise ShapeError("wrong tensor kind", expected=kind, got=t.kind)
    if t.order != cfg.order:
        raise OrderMismatchError("tensor order != lattice order", tensor=t.order, config=cfg.order)
    if t.scale != cfg.scale:
        raise ScaleMismatchError("tensor scale != lattice scale", tensor=t.scale, config=cfg.scale)


def free_reference_spectrum(cfg: LatticeConfig, p: ModelParams, d_tensor: CoeffTensor):
    """Closed-form normal-mode data for the quadratic (lambda = 0) sector.

    Diagonalizes Omega^2 = wrapped D + mu^2 I and returns (omega, E0)
    with E0 the exact vacuum energy of the gamma-normal-ordered
    quadratic Hamiltonian:

        E0 = sum_j [ omega_j / 2 - (gamma + omega_j^2 / gamma) / 4 ].
    """
    _check_tensor(d_tensor, "derivative-D", cfg)
    omega2 = np.linalg.eigvalsh(
        wrap_matrix(d_tensor, cfg.modes) + p.mass_squared * np.eye(cfg.modes)
    )
    if omega2[0] < -1e-10:
        raise TachyonicConfigurationError(
            "mode frequency squared is negative",
            smallest=float(omega2[0]),
        )
    omega = np.sqrt(np.clip(omega2, 0.0, None))
    e0 = float(np.sum(omega / 2.0 - (p.gamma + omega**2 / p.gamma) / 4.0))
    return omega, e0


def lanczos_lowest(op: FockOperator, count: int, tol: float = 1e-10, seed: int = 7):
    """Lowest eigenvalues with certified residual norms.

    Returns a list of (eigenvalue, residual) pairs sorted ascending.
    Small problems fall back to a dense solve; the iterative path uses a
    deterministic seeded start vector.
    """
    mat = op.matrix
    dim = mat.shape[0]
    if count < 1 or count > dim:
        raise IndexRangeError("eigenvalue count out of range", count=count, dimension=dim)
    hnorm = float(np.abs(mat).sum(axis=1).max()) or 1.0
    if dim <= max(128, count + 2):
        dense = mat.toarray()
        evals, evecs = np.linalg.eigh(dense)
        evals, evecs = evals[:count], evecs[:, :count]
        resid = np.linalg.norm(dense @ evecs - evecs * evals, axis=0)
    else:
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(dim)
        try:
            evals, evecs = spla.eigsh(mat, k=count, which="SA", v0=v0, tol=tol)
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceFailureError(
                "iterative eigensolver did not converge",
                eigenvalues=list(map(float, np.atleast_1d(exc.eigenvalues))),
                count=count,
            ) from None
        order = np.argsort(evals)
        evals, evecs = evals[order], evecs[:, order]
        resid = np.linalg.norm(mat @ evecs - evecs * evals, axis=0)
    bad = resid > tol * hnorm
    if bad.any():
        raise ConvergenceFailureError(
            "residual norms exceed the requested tolerance",
            eigenvalues=[float(e) for e in evals],
            residuals=[float(r) for r in resid],
            bound=tol * hnorm,
        )
    return [(float(e), float(r)) for e, r in zip(evals, resid)]


def block_leakage_counts(op: FockOperator, tol: float = 0.0):
    """Diagnostics for the truncation edge.

    parity_violations: entries connecting states of different total
    occupation parity (must be zero: every Hamiltonian monomial carries
    an even ladder count).
    off_block: entries connecting different total occupations.
    edge: the subset of off_block entries where an endpoint touches the
    cutoff, i.e. the states where the truncated ladder algebra fails.

    tol filters entries by magnitude; the default counts everything,
    including the ~1e-15 couplings inherited from tensor-table rounding.
    """
    coo = op.matrix.tocoo()
    occ = op.basis.occupations()
    totals = occ.sum(axis=1)
    keep = np.abs(coo.data) > tol
    r, c = coo.row[keep], coo.col[keep]
    parity_violations = int(np.sum((totals[r] - totals[c]) % 2 != 0))
    off = totals[r] != totals[c]
    at_edge = (occ[r].max(axis=1) == op.basis.cutoff) | (
        occ[c].max(axis=1) == op.basis.cutoff
    )
    return {
        "parity_violations": parity_violations,
        "off_block": int(off.sum()),
        "edge": int((off & at_edge).sum()),
    }
