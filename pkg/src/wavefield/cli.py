"""Command line driver.

One process per invocation; every subcommand computes, prints to stdout
(or --output), and optionally appends a JSON-line run manifest carrying
parameter sets and sha256 digests of inputs and outputs.  Primary
outputs carry no wall-clock or host state, so identical invocations are
byte-identical; the manifest is the only place timing lives.

Floating values in CSV output are printed with %.17g (full float64
round-trip precision, '.' decimal point always); JSON uses the shortest
exact round-trip rendering.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .connection import (
    FORMAT_VERSION,
    derivative_overlaps,
    gamma_tensor,
    load_tensor,
    quadrature_oracle,
    rescale_tensor,
    save_tensor,
    validate_tensor,
)
from .diagnostics import (
    KernelProbe,
    commutator_residual,
    gaussian_probe,
    kernel_projection_error,
    partition_check,
    polynomial_probe,
)
from .errors import ParseError, ShapeError, WavefieldError, WindowingError
from .filters import make_filters
from .fock import (
    FockBasis,
    LatticeConfig,
    ModelParams,
    build_phi4_hamiltonian,
    lanczos_lowest,
)
from .flow import FlowState, srg_flow
from .scaling import derivative_samples, scaling_samples
from .transform import CoeffPyramid, CoeffVector, multilevel

__all__ = ["build_parser", "run", "main"]


def _fmt(x) -> str:
    return "%.17g" % float(x)


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise ParseError(f"cannot read input file: {e}", path=path)


def _cache_dir(args) -> str:
    if args.cache:
        return args.cache
    env = os.environ.get("WAVEFIELD_CACHE")
    if env:
        return env
    base = os.environ.get("XDG_CACHE_HOME", os.path.expanduser("~/.cache"))
    return os.path.join(base, "wavefield")


def _cached_tensor(kind: str, order: int, scale: int, cache: str):
    """Fetch a coefficient table through the on-disk cache.

    Cache key is (kind, order, scale, format-version); a hit is re-read
    and re-validated, a miss is computed, stored, and returned.

    The standalone invariants do not pin every entry of a four-point
    table (an edit to the central entry keeps it permutation symmetric),
    so gamma4 is stored together with its gamma3 partner and checked
    against the four-point partition rule whenever both sit in the cache.
    """
    os.makedirs(cache, exist_ok=True)
    path = os.path.join(cache, f"{kind}-K{order}-s{scale}-v{FORMAT_VERSION}.tbl")
    partner = os.path.join(cache, f"gamma3-K{order}-s0-v{FORMAT_VERSION}.tbl")
    if os.path.exists(path):
        t = load_tensor(path)
        if kind == "gamma4" and scale == 0 and os.path.exists(partner):
            validate_tensor(t, load_tensor(partner))
        return t, path
    fp = make_filters(order)
    if kind == "d":
        t = derivative_overlaps(fp)
    elif kind == "gamma3":
        t = gamma_tensor(fp, 3)
    else:
        t = gamma_tensor(fp, 4)
        g3 = gamma_tensor(fp, 3)
        validate_tensor(t, g3)
        if not os.path.exists(partner):
            save_tensor(g3, partner)
    if scale:
        t = rescale_tensor(t, scale)
    save_tensor(t, path)
    return t, path


# ---------------------------------------------------------------- filters

def _cmd_filters(args):
    fp = make_filters(args.order)
    if args.format == "json":
        text = json.dumps(
            {"order": fp.order, "h": list(fp.h), "g": list(fp.g)}, indent=2
        ) + "\n"
    else:
        lines = ["tap,h,g"]
        for i in range(len(fp.h)):
            lines.append(f"{i},{_fmt(fp.h[i])},{_fmt(fp.g[i])}")
        text = "\n".join(lines) + "\n"
    return text, {}, []


# ---------------------------------------------------------------- scalfun

def _cmd_scalfun(args):
    fp = make_filters(args.order)
    samp = (derivative_samples if args.derivative else scaling_samples)(
        fp, args.level
    )
    xs = samp.grid()
    if args.format == "json":
        text = json.dumps(
            {
                "order": args.order,
                "level": args.level,
                "derivative": bool(args.derivative),
                "rows": [[float(x), float(v)] for x, v in zip(xs, samp.values)],
            },
            indent=2,
        ) + "\n"
    else:
        lines = ["x,value"]
        lines += [f"{_fmt(x)},{_fmt(v)}" for x, v in zip(xs, samp.values)]
        text = "\n".join(lines) + "\n"
    return text, {}, []


# ---------------------------------------------------------------- dwt

def _parse_plain_values(text, path):
    vals = []
    for ln, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if not s:
            continue
        try:
            vals.append(float(s))
        except ValueError:
            raise ParseError("non-numeric value in input", path=path, line=ln)
    if not vals:
        raise ParseError("empty input", path=path)
    return np.array(vals)


def _serialize_pyramid(p: CoeffPyramid, order: int) -> str:
    lines = [
        "# wavefield-pyramid 1",
        f"# order {order} levels {p.levels} length "
        f"{len(p.coarse) * 2 ** p.levels}",
        f"# coarse scale {p.coarse.scale} length {len(p.coarse)}",
    ]
    lines += [_fmt(v) for v in p.coarse.values]
    for i, d in enumerate(p.details, 1):  # finest detail first
        lines.append(f"# detail {i} scale {d.scale} length {len(d)}")
        lines += [_fmt(v) for v in d.values]
    return "\n".join(lines) + "\n"


def _parse_pyramid(text, path) -> tuple:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "# wavefield-pyramid 1":
        raise ParseError("missing pyramid header", path=path)
    head = lines[1].split()
    if len(head) != 7 or head[:2] != ["#", "order"]:
        raise ParseError("malformed pyramid metadata", path=path)
    order, levels = int(head[2]), int(head[4])
    blocks = []
    current = None
    for ln in lines[2:]:
        if ln.startswith("#"):
            parts = ln.split()
            kind = parts[1]
            if kind not in ("coarse", "detail"):
                raise ParseError(f"unknown pyramid block '{kind}'", path=path)
            scale = int(parts[parts.index("scale") + 1])
            current = (scale, [])
            blocks.append(current)
        else:
            if current is None:
                raise ParseError("values before any block header", path=path)
            try:
                current[1].append(float(ln))
            except ValueError:
                raise ParseError("non-numeric pyramid value", path=path)
    if len(blocks) != levels + 1:
        raise ParseError(
            f"expected {levels + 1} blocks, found {len(blocks)}", path=path
        )
    coarse = CoeffVector(blocks[0][0], np.array(blocks[0][1]))
    details = tuple(
        CoeffVector(scale, np.array(vals)) for scale, vals in blocks[1:]
    )
    return order, CoeffPyramid(coarse, details)


def _cmd_dwt(args):
    fp = make_filters(args.order)
    text_in = _read_text(args.input)
    if args.direction == "forward":
        vals = _parse_plain_values(text_in, args.input)
        pyr = multilevel(CoeffVector(0, vals), fp, args.levels, "forward")
        if args.format == "json":
            out = json.dumps(
                {
                    "order": args.order,
                    "levels": pyr.levels,
                    "coarse": {"scale": pyr.coarse.scale,
                               "values": list(map(float, pyr.coarse.values))},
                    "details": [
                        {"scale": d.scale, "values": list(map(float, d.values))}
                        for d in pyr.details
                    ],
                },
                indent=2,
            ) + "\n"
        else:
            out = _serialize_pyramid(pyr, args.order)
    else:
        order_in, pyr = _parse_pyramid(text_in, args.input)
        if order_in != args.order or pyr.levels != args.levels:
            raise ParseError(
                "pyramid metadata disagrees with the flags",
                file_order=order_in, flag_order=args.order,
                file_levels=pyr.levels, flag_levels=args.levels,
            )
        vec = multilevel(pyr, fp, args.levels, "inverse")
        if args.format == "json":
            out = json.dumps(
                {"order": args.order, "scale": vec.scale,
                 "values": list(map(float, vec.values))},
                indent=2,
            ) + "\n"
        else:
            out = "\n".join(_fmt(v) for v in vec.values) + "\n"
    return out, {}, [args.input]


# ---------------------------------------------------------------- coeffs

def _oracle_report(t, kind, order, level):
    fp = make_filters(order)
    worst = 0.0
    for tup, v in t.sorted_items():
        if kind == "d":
            factors = [(0, 1), (tup[0], 1)]
        else:
            factors = [(0, 0)] + [(n, 0) for n in tup]
        est = quadrature_oracle(fp, factors, level, scale=t.scale)
        worst = max(worst, abs(est - v))
    return worst


def _cmd_coeffs(args):
    t, cache_path = _cached_tensor(args.kind, args.order, args.scale,
                                   _cache_dir(args))
    if args.verify_oracle is not None:
        level = args.verify_oracle
        dev = _oracle_report(t, args.kind, args.order, level)
        if args.format == "json":
            text = json.dumps(
                {"kind": args.kind, "order": args.order, "scale": args.scale,
                 "level": level, "max_oracle_deviation": dev},
                indent=2,
            ) + "\n"
        else:
            text = ("kind,order,scale,level,max_oracle_deviation\n"
                    f"{args.kind},{args.order},{args.scale},{level},{_fmt(dev)}\n")
        return text, {}, []
    # without verification the table itself is the output, in its
    # canonical container format
    return _read_text(cache_path), {}, []


# ---------------------------------------------------------------- hamiltonian

def _matrix_coo_text(mat) -> str:
    coo = mat.tocsr().sorted_indices().tocoo()
    lines = [f"{coo.shape[0]} {coo.nnz}"]
    lines += [
        f"{r} {c} {_fmt(v)}"
        for r, c, v in zip(coo.row, coo.col, coo.data)
    ]
    return "\n".join(lines) + "\n"


def _cmd_hamiltonian(args):
    cache = _cache_dir(args)
    d_t, _ = _cached_tensor("d", args.order, args.scale, cache)
    g4_t, _ = _cached_tensor("gamma4", args.order, args.scale, cache)
    cfg = LatticeConfig(args.order, args.scale, args.modes)
    params = ModelParams(args.mass2, args.coupling, args.gamma)
    basis = FockBasis(args.modes, args.nmax)
    op = build_phi4_hamiltonian(cfg, params, d_t, g4_t, basis)
    pairs = lanczos_lowest(op, args.eigs)
    if args.format == "json":
        text = json.dumps(
            {
                "dimension": basis.dimension,
                "eigenvalues": [e for e, _ in pairs],
                "residuals": [r for _, r in pairs],
            },
            indent=2,
        ) + "\n"
    else:
        lines = ["index,eigenvalue,residual"]
        lines += [f"{i},{_fmt(e)},{_fmt(r)}" for i, (e, r) in enumerate(pairs)]
        text = "\n".join(lines) + "\n"
    files = {}
    if args.dump_matrix:
        files[args.dump_matrix] = _matrix_coo_text(op.matrix)
    return text, files, []


# ---------------------------------------------------------------- flow

def _parse_coo(text, path) -> np.ndarray:
    lines = [ln for ln in (raw.strip() for raw in text.splitlines()) if ln]
    if not lines:
        raise ParseError("empty matrix file", path=path)
    head = lines[0].split()
    if len(head) != 2:
        raise ParseError("matrix header must be 'dim nnz'", path=path)
    try:
        dim, nnz = int(head[0]), int(head[1])
    except ValueError:
        raise ParseError("matrix header must be 'dim nnz'", path=path)
    if len(lines) - 1 != nnz:
        raise ParseError(
            f"expected {nnz} entries, found {len(lines) - 1}", path=path
        )
    mat = np.zeros((dim, dim))
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 3:
            raise ParseError("matrix entries are 'row col value'", path=path)
        try:
            r, c, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError("matrix entries are 'row col value'", path=path)
        if not (0 <= r < dim and 0 <= c < dim):
            raise ParseError("matrix index out of range", path=path)
        mat[r, c] += v
    return mat


def _cmd_flow(args):
    h0 = _parse_coo(_read_text(args.input), args.input)
    genspec = "wegner-diagonal" if args.generator == "diag" else "wegner-block"
    if genspec == "wegner-block" and args.partition is None:
        raise ShapeError("--generator block requires --partition")
    state = FlowState(0.0, h0, genspec, args.partition)
    final, trajectory, report = srg_flow(state, args.lambda_end)
    files = {}
    if args.log:
        rows = ["lambda,offdiag_frobenius,max_eigen_drift"]
        rows += [f"{_fmt(l)},{_fmt(o)},{_fmt(d)}" for l, o, d in trajectory]
        files[args.log] = "\n".join(rows) + "\n"
    if args.format == "json":
        text = json.dumps(
            {
                "lambda": final.lam,
                "generator": genspec,
                "accepted_steps": report["accepted"],
                "sign_convention_flipped": report["sign_convention_flipped"],
                "matrix": [[float(v) for v in row] for row in final.h_matrix],
            },
            indent=2,
        ) + "\n"
    else:
        dense = final.h_matrix
        nz = [(r, c, dense[r, c])
              for r in range(dense.shape[0])
              for c in range(dense.shape[1]) if dense[r, c] != 0.0]
        lines = [f"{dense.shape[0]} {len(nz)}"]
        lines += [f"{r} {c} {_fmt(v)}" for r, c, v in nz]
        text = "\n".join(lines) + "\n"
    return text, files, [args.input]


# ---------------------------------------------------------------- diagnose

def _parse_probe_function(text):
    kind, _, rest = text.partition(":")
    try:
        if kind == "poly":
            return polynomial_probe(int(rest))
        if kind == "gauss":
            c, w = rest.split(",")
            return gaussian_probe(float(c), float(w))
    except (ValueError, WavefieldError) as e:
        raise argparse.ArgumentTypeError(f"bad probe function '{text}': {e}")
    raise argparse.ArgumentTypeError(
        f"unknown probe function '{text}' (use poly:d or gauss:c,w)"
    )


def _cmd_diagnose(args):
    fn = args.function
    rows = []
    for k in range(args.scale + 1):
        probe = KernelProbe(args.order, k, max(k + 4, 12))
        try:
            if args.probe == "partition":
                val = partition_check(probe)
            elif args.probe == "projection":
                val = kernel_projection_error(probe, fn)
            else:
                val = commutator_residual(probe, fn, fn)
        except WindowingError:
            # the probe function leaks into the seam buffer at this
            # scale; coarser rows are skipped rather than reported wrong
            continue
        rows.append((k, val))
    if not rows:
        raise WindowingError(
            "probe function violates the window at every requested scale",
            scale=args.scale,
        )
    if args.format == "json":
        text = json.dumps(
            {
                "order": args.order,
                "probe": args.probe,
                "function": getattr(fn, "label", None),
                "rows": [[k, v] for k, v in rows],
            },
            indent=2,
        ) + "\n"
    else:
        lines = ["k,value"]
        lines += [f"{k},{_fmt(v)}" for k, v in rows]
        text = "\n".join(lines) + "\n"
    return text, {}, []


# ---------------------------------------------------------------- plumbing

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--output", help="write the primary output here "
                        "instead of stdout")
    common.add_argument("--manifest", help="append a JSON-line run record "
                        "to this file")
    common.add_argument("--cache", help="coefficient cache directory "
                        "(default: $WAVEFIELD_CACHE or the user cache dir)")

    p = argparse.ArgumentParser(
        prog="wavefield",
        description="Daubechies wavelet discretization toolkit",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("filters", parents=[common],
                        help="print the order-K filter taps h and g")
    sp.add_argument("--order", type=int, required=True)
    sp.set_defaults(func=_cmd_filters)

    sp = sub.add_parser("scalfun", parents=[common],
                        help="scaling function samples on a dyadic grid")
    sp.add_argument("--order", type=int, required=True)
    sp.add_argument("--level", type=int, required=True)
    sp.add_argument("--derivative", action="store_true")
    sp.set_defaults(func=_cmd_scalfun)

    sp = sub.add_parser("dwt", parents=[common],
                        help="periodic wavelet transform of a CSV vector")
    sp.add_argument("--order", type=int, required=True)
    sp.add_argument("--levels", type=int, required=True)
    sp.add_argument("--input", required=True)
    sp.add_argument("--direction", choices=("forward", "inverse"),
                    required=True)
    sp.set_defaults(func=_cmd_dwt)

    sp = sub.add_parser("coeffs", parents=[common],
                        help="connection coefficient tables, cached")
    sp.add_argument("--order", type=int, required=True)
    sp.add_argument("--kind", choices=("d", "gamma3", "gamma4"),
                    required=True)
    sp.add_argument("--scale", type=int, default=0)
    sp.add_argument("--verify-oracle", type=int, metavar="LEVEL",
                    help="report the max deviation from the level-LEVEL "
                    "quadrature oracle instead of printing the table")
    sp.set_defaults(func=_cmd_coeffs)

    sp = sub.add_parser("hamiltonian", parents=[common],
                        help="truncated phi^4 Hamiltonian spectra")
    sp.add_argument("--order", type=int, required=True)
    sp.add_argument("--scale", type=int, default=0)
    sp.add_argument("--modes", type=int, required=True)
    sp.add_argument("--nmax", type=int, required=True)
    sp.add_argument("--mass2", type=float, required=True)
    sp.add_argument("--lambda", dest="coupling", type=float, required=True)
    sp.add_argument("--gamma", type=float, default=0.0,
                    help="oscillator parameter; default sqrt(mass2)")
    sp.add_argument("--eigs", type=int, required=True)
    sp.add_argument("--dump-matrix", metavar="PATH",
                    help="also write the sparse matrix (coordinate format)")
    sp.add_argument("--threads", type=int, default=os.cpu_count(),
                    help="worker cap; assembly is vectorized and "
                    "deterministic at any thread count")
    sp.set_defaults(func=_cmd_hamiltonian)

    sp = sub.add_parser("flow", parents=[common],
                        help="SRG flow on a symmetric matrix")
    sp.add_argument("--input", required=True,
                    help="coordinate-format matrix file (header 'dim nnz')")
    sp.add_argument("--generator", choices=("diag", "block"), required=True)
    sp.add_argument("--partition", type=int)
    sp.add_argument("--lambda-end", dest="lambda_end", type=float,
                    required=True)
    sp.add_argument("--log", help="write the trajectory CSV here")
    sp.set_defaults(func=_cmd_flow)

    sp = sub.add_parser("diagnose", parents=[common],
                        help="kernel diagnostics swept over scales 0..k")
    sp.add_argument("--order", type=int, required=True)
    sp.add_argument("--scale", type=int, required=True)
    sp.add_argument("--probe", choices=("partition", "projection",
                                        "commutator"), required=True)
    sp.add_argument("--function", type=_parse_probe_function,
                    default="gauss:12,1",
                    help="poly:d or gauss:center,width (default gauss:12,1)")
    sp.set_defaults(func=_cmd_diagnose)
    return p


def _manifest_value(v):
    if isinstance(v, (str, int, float, bool)) or v is None:
        return v
    return getattr(v, "label", str(v))


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    if isinstance(getattr(args, "function", None), str):
        args.function = _parse_probe_function(args.function)
    t0 = time.perf_counter()
    try:
        primary, extra_files, input_paths = args.func(args)
    except WavefieldError as e:
        print(f"{e.name}: {e}", file=sys.stderr)
        return 1
    wall = time.perf_counter() - t0

    outputs = {}
    try:
        if args.output:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(primary)
            outputs[args.output] = _sha256(primary.encode())
        else:
            sys.stdout.write(primary)
            outputs["stdout"] = _sha256(primary.encode())
        for path, text in extra_files.items():
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
            outputs[path] = _sha256(text.encode())
        if args.manifest:
            params = {
                k: _manifest_value(v)
                for k, v in vars(args).items()
                if k not in ("func",)
            }
            record = {
                "version": __version__,
                "subcommand": args.cmd,
                "parameters": params,
                "inputs": {
                    path: _sha256(_read_text(path).encode())
                    for path in input_paths
                },
                "outputs": outputs,
                "wall_time_s": round(wall, 6),
            }
            with open(args.manifest, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
    except OSError as e:
        print(f"io: {e}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())
