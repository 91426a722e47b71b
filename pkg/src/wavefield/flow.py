"""Adjacent-scale splitting and similarity-renormalization flow.

One wavelet-transform stage W sends the fine-scale coefficient tensors
into coarse (s) and detail (w) blocks: quadratic tensors by congruence
W D W^T, quartic tensors by contracting one W factor per index.  The ss
and ssss blocks reproduce the directly rescaled coarse-scale tensors,
which is the coefficient-level statement that the coarse modes of a
fine lattice ARE the coarse lattice.

The flow dH/dlambda = [H, [H, G]] with G the diagonal (or block
diagonal) part of H is the Wegner generator written with the outer
commutator expanded: [H,[H,G]] = [[G,H],H], so the displayed nesting
already decays the off-generator blocks.  A sign probe still watches the
first accepted step and raises a flag instead of proceeding silently if
the off norm grows.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .connection import CoeffTensor, wrap_matrix, wrap_tensor_dense
from .errors import ShapeError, StiffnessError
from .filters import FilterPair

__all__ = [
    "StageMatrix",
    "SplitTensors",
    "FlowState",
    "StepControl",
    "stage_matrix",
    "split_tensors",
    "coupling_matrix",
    "srg_flow",
]

_PATTERNS4 = ("ssss", "sssw", "ssww", "swww", "wwww")


@dataclass(frozen=True)
class StageMatrix:
    """One analysis stage as an explicit orthogonal matrix.

    Rows 0..N/2-1 are the h (coarse) rows, rows N/2..N-1 the g rows,
    with periodic wrapping of the column index.
    """

    fine_dim: int
    matrix: np.ndarray = field(repr=False)

    @property
    def coarse_rows(self):
        return self.matrix[: self.fine_dim // 2]

    @property
    def detail_rows(self):
        return self.matrix[self.fine_dim // 2 :]


@dataclass(frozen=True)
class SplitTensors:
    """Two-scale blocks of the quadratic and quartic tensors."""

    order: int
    fine_scale: int
    fine_dim: int
    ss: np.ndarray | None
    sw: np.ndarray | None
    ws: np.ndarray | None
    ww: np.ndarray | None
    quartic: dict


@dataclass(frozen=True)
class FlowState:
    lam: float
    h_matrix: np.ndarray = field(repr=False)
    generator_spec: str = "wegner-diagonal"
    partition: int | None = None

    def __post_init__(self):
        h = np.asarray(self.h_matrix, dtype=np.float64)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ShapeError("flow matrix must be square", shape=h.shape)
        if h.shape[0] > 512:
            raise ShapeError("flow matrices are capped at 512", dim=h.shape[0])
        if np.abs(h - h.T).max() > 1e-12 * max(1.0, np.abs(h).max()):
            raise ShapeError("flow matrix must be symmetric")
        if self.lam < 0:
            raise ShapeError("flow parameter must be nonnegative", lam=self.lam)
        if self.generator_spec not in ("wegner-diagonal", "wegner-block"):
            raise ShapeError("unknown generator", generator=self.generator_spec)
        if self.generator_spec == "wegner-block":
            p = self.partition
            if p is None or not 0 < p < h.shape[0]:
                raise ShapeError("wegner-block needs a partition inside the matrix",
                                 partition=p)
        object.__setattr__(self, "h_matrix", h.copy())


@dataclass(frozen=True)
class StepControl:
    # default tol keeps trace/Frobenius conserved to 1e-10 over unit lambda spans
    tol: float = 1e-13
    initial_step: float = 1e-3
    max_steps: int = 200000
    min_step: float = 1e-14


def stage_matrix(fp: FilterPair, n: int) -> StageMatrix:
    """Analysis step as an N x N orthogonal matrix."""
    if n < 2 * fp.order or n % 2:
        raise ShapeError("stage needs even N >= 2K", n=n, order=fp.order)
    half = n // 2
    w = np.zeros((n, n))
    for m in range(half):
        for l in range(len(fp.h)):
            w[m, (2 * m + l) % n] += fp.h[l]
            w[half + m, (2 * m + l) % n] += fp.g[l]
    return StageMatrix(n, w)


def split_tensors(d_fine: CoeffTensor | None, g4_fine: CoeffTensor,
                  fp: FilterPair, n: int) -> SplitTensors:
    """Transform fine-scale tensors through one stage and partition.

    d_fine may be None (order 1 has no derivative table); the quadratic
    blocks are then omitted.  Both tensors must be wrapped on n modes at
    the same fine scale.
    """
    stage = stage_matrix(fp, n)
    half = n // 2
    scale = None
    if d_fine is not None:
        if d_fine.order != fp.order:
            raise ShapeError("derivative table order mismatch",
                             tensor=d_fine.order, filter=fp.order)
        scale = d_fine.scale
    if g4_fine.order != fp.order:
        raise ShapeError("four-point table order mismatch",
                         tensor=g4_fine.order, filter=fp.order)
    if scale is None:
        scale = g4_fine.scale
    elif g4_fine.scale != scale:
        raise ShapeError("tensors at different scales",
                         derivative=scale, four_point=g4_fine.scale)

    ss = sw = ws = ww = None
    if d_fine is not None:
        t = stage.matrix @ wrap_matrix(d_fine, n) @ stage.matrix.T
        ss, sw = t[:half, :half], t[:half, half:]
        ws, ww = t[half:, :half], t[half:, half:]

    dense = wrap_tensor_dense(g4_fine, n)
    i = np.arange(n)
    full = dense[
        (i[None, :, None, None] - i[:, None, None, None]) % n,
        (i[None, None, :, None] - i[:, None, None, None]) % n,
        (i[None, None, None, :] - i[:, None, None, None]) % n,
    ]
    rows = {"s": stage.coarse_rows, "w": stage.detail_rows}
    quartic = {}
    for pat in _PATTERNS4:
        quartic[pat] = np.einsum(
            "ai,bj,ck,dl,ijkl->abcd",
            rows[pat[0]], rows[pat[1]], rows[pat[2]], rows[pat[3]], full,
            optimize=True,
        )
    return SplitTensors(fp.order, scale, n, ss, sw, ws, ww, quartic)


def coupling_matrix(split: SplitTensors) -> np.ndarray:
    """Reassembled quadratic two-scale matrix [[ss, sw], [ws, ww]]."""
    if split.ss is None:
        raise ShapeError("no quadratic blocks in this split")
    return np.block([[split.ss, split.sw], [split.ws, split.ww]])


def _generator(h, spec, partition):
    if spec == "wegner-diagonal":
        return np.diag(np.diag(h))
    g = np.zeros_like(h)
    p = partition
    g[:p, :p] = h[:p, :p]
    g[p:, p:] = h[p:, p:]
    return g


def _off_norm2(h, spec, partition):
    if spec == "wegner-diagonal":
        return float((h**2).sum() - (np.diag(h) ** 2).sum())
    p = partition
    return float(2.0 * (h[:p, p:] ** 2).sum())


def _rhs(h, g):
    c = h @ g - g @ h
    return h @ c - c @ h


def _rk4(h, g, dt):
    k1 = _rhs(h, g)
    k2 = _rhs(h + 0.5 * dt * k1, g)
    k3 = _rhs(h + 0.5 * dt * k2, g)
    k4 = _rhs(h + dt * k3, g)
    return h + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def srg_flow(state: FlowState, lambda_end: float, control: StepControl | None = None):
    """Integrate the flow to lambda_end with embedded step doubling.

    The generator is refreshed at the start of every accepted macro step
    and frozen inside it, so each step is a continuous commutator flow
    and phase errors cannot leak into the spectrum.  Returns the final
    state, the trajectory log [(lambda, off_norm, eigen_drift), ...],
    and a report dict with step statistics and the sign-probe flag.
    """
    if control is None:
        control = StepControl()
    if lambda_end < state.lam:
        raise ShapeError("flow runs forward only", start=state.lam, end=lambda_end)
    h = state.h_matrix.copy()
    spec, part = state.generator_spec, state.partition
    eig0 = np.sort(np.linalg.eigvalsh(h))
    escale = max(1.0, float(np.abs(eig0).max()))
    hnorm = max(1.0, float(np.linalg.norm(h)))

    def drift_of(m):
        return float(np.abs(np.sort(np.linalg.eigvalsh(m)) - eig0).max()) / escale

    lam = state.lam
    off = _off_norm2(h, spec, part)
    trajectory = [(lam, np.sqrt(off), 0.0)]
    dt = min(control.initial_step, max(lambda_end - lam, control.min_step))
    sign_flag = False
    monotonicity_breaks = 0
    accepted = rejected = 0
    first_accept = True
    while lam < lambda_end and accepted + rejected < control.max_steps:
        remaining = lambda_end - lam
        dt_try = min(dt, remaining)
        g = _generator(h, spec, part)
        full = _rk4(h, g, dt_try)
        half = _rk4(_rk4(h, g, dt_try / 2.0), g, dt_try / 2.0)
        err = float(np.linalg.norm(full - half)) / 15.0
        tol_eff = control.tol * hnorm
        if err <= tol_eff:
            h = 0.5 * (half + half.T)  # keep exact symmetry against drift
            lam = lambda_end if dt_try >= remaining else lam + dt_try
            accepted += 1
            new_off = _off_norm2(h, spec, part)
            if new_off > off + 1e-13 * hnorm**2:
                if first_accept:
                    sign_flag = True
                monotonicity_breaks += 1
            off = new_off
            first_accept = False
            trajectory.append((lam, np.sqrt(max(off, 0.0)), drift_of(h)))
        else:
            rejected += 1
        grow = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * (tol_eff / err) ** 0.2))
        dt = dt_try * grow
        if dt < control.min_step and lam < lambda_end:
            raise StiffnessError(
                "step size underflow",
                lam=lam,
                step=dt,
                trajectory=trajectory,
                state=FlowState(lam, h, spec, part),
            )
    if lam < lambda_end:
        raise StiffnessError(
            "step budget exhausted before lambda_end",
            lam=lam,
            steps=accepted + rejected,
            trajectory=trajectory,
            state=FlowState(lam, h, spec, part),
        )
    final = FlowState(lam, h, spec, part)
    report = {
        "accepted": accepted,
        "rejected": rejected,
        "sign_convention_flipped": sign_flag,
        "monotonicity_breaks": monotonicity_breaks,
    }
    return final, trajectory, report
