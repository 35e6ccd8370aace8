"""Command-line front end: compress, reconstruct, info, algebra, convert, bench.

Reports go to standard output as JSON; human diagnostics go to standard
error.  Exit status 0 means success, 2 an argument or file-format
problem, 3 a numeric failure.  The TRING_THREADS environment variable
caps BLAS parallelism (default 1, for run-to-run determinism); it must
take effect before numpy loads, so this module pins the thread
environment at import time and nothing above it may import numpy first.
"""

from __future__ import annotations

import argparse
import json
import os
import sys


def _pin_thread_env():
    count = os.environ.get("TRING_THREADS", "1")
    if not (count.isdigit() and int(count) >= 1):
        print(f"warning: ignoring invalid TRING_THREADS={count!r}", file=sys.stderr)
        count = "1"
    explicit = "TRING_THREADS" in os.environ
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        if explicit:
            os.environ[var] = count
        else:
            os.environ.setdefault(var, count)


_pin_thread_env()

import numpy as np

from . import bench
from .algebra import add, fro_norm, hadamard, inner_product, multilinear_vec_product
from .convert import CPRepr, TuckerRepr, cp_to_tr, tt_to_tr, tucker_to_tr
from .decompose import FitOptions, tr_als, tr_alsar, tr_bals, tr_svd, tt_svd
from .errors import CapacityError, FormatError
from .formats import (
    TRC1_MAGIC,
    TRT1_MAGIC,
    load_model_descriptor,
    read_dense,
    read_ring,
    write_dense,
    write_ring,
)

__all__ = ["main"]

_ALGORITHMS = ("tt-svd", "tr-svd", "tr-als", "tr-alsar", "tr-bals")
_ALIASES = {"als": "tr-als", "alsar": "tr-alsar", "bals": "tr-bals"}


def _parse_ranks(text: str):
    try:
        ranks = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"ranks must be comma-separated integers, got {text!r}")
    return ranks


def _fit_options(args) -> FitOptions:
    kwargs = {"seed": args.seed}
    if args.max_sweeps is not None:
        kwargs["max_sweeps"] = args.max_sweeps
    if args.tau is not None:
        kwargs["accept_tol"] = args.tau
    return FitOptions(**kwargs)


def cmd_compress(args) -> int:
    alg = _ALIASES.get(args.alg, args.alg)
    if alg not in _ALGORITHMS:
        raise ValueError(f"unknown algorithm {args.alg!r}; valid: {', '.join(_ALGORITHMS)}")
    if alg == "tr-als":
        if args.ranks is None:
            raise ValueError("--alg tr-als needs --ranks")
        if args.eps is not None:
            raise ValueError("--alg tr-als takes --ranks, not --eps")
    else:
        if args.eps is None:
            raise ValueError(f"--alg {alg} needs --eps")
        if args.ranks is not None:
            raise ValueError(f"--alg {alg} takes --eps, not --ranks")
    t = read_dense(args.input)
    opts = _fit_options(args)
    if alg == "tt-svd":
        tr, fit = tt_svd(t, args.eps)
    elif alg == "tr-svd":
        tr, fit = tr_svd(t, args.eps)
    elif alg == "tr-als":
        tr, fit = tr_als(t, args.ranks, opts)
    elif alg == "tr-alsar":
        tr, fit = tr_alsar(t, args.eps, opts)
    else:
        tr, fit = tr_bals(t, args.eps, opts)
    write_ring(args.output, tr)
    print(json.dumps(fit.to_dict()))
    return 0


def cmd_reconstruct(args) -> int:
    tr = read_ring(args.input)
    write_dense(args.output, tr.to_dense())
    return 0


def _sniff_magic(path) -> bytes:
    with open(path, "rb") as fh:
        return fh.read(4)


def cmd_info(args) -> int:
    magic = _sniff_magic(args.input)
    if magic == TRT1_MAGIC:
        t = read_dense(args.input)
        summary = {
            "format": "TRT1",
            "order": t.order,
            "dims": list(t.shape),
            "n_values": t.size,
            "fro_norm": float(np.linalg.norm(t.data)),
        }
    elif magic == TRC1_MAGIC:
        tr = read_ring(args.input)
        ranks = list(tr.ranks)
        summary = {
            "format": "TRC1",
            "order": tr.order,
            "dims": list(tr.shape),
            "ranks": ranks,
            "n_params": tr.num_params(),
            "r_avg": sum(ranks) / len(ranks),
            "r_max": max(ranks),
            "fro_norm": fro_norm(tr),
        }
    else:
        raise FormatError(f"unrecognized magic {magic!r}; expected TRT1 or TRC1")
    print(json.dumps(summary))
    return 0


def _ring_summary(tr) -> dict:
    return {"ranks": list(tr.ranks), "n_params": tr.num_params()}


def cmd_algebra(args) -> int:
    op = args.op
    paths = args.paths
    if op in ("add", "hadamard"):
        if len(paths) != 3:
            raise ValueError(f"{op} needs two input ring files and one output path")
        out = (add if op == "add" else hadamard)(read_ring(paths[0]), read_ring(paths[1]))
        write_ring(paths[2], out)
        print(json.dumps(_ring_summary(out)))
        return 0
    if op == "inner":
        if len(paths) != 2:
            raise ValueError("inner needs two input ring files")
        print(json.dumps(inner_product(read_ring(paths[0]), read_ring(paths[1]))))
        return 0
    if op == "norm":
        if len(paths) != 1:
            raise ValueError("norm needs one input ring file")
        print(json.dumps(fro_norm(read_ring(paths[0]))))
        return 0
    if op == "mvprod":
        if len(paths) != 1:
            raise ValueError("mvprod needs one input ring file plus --vec files")
        tr = read_ring(paths[0])
        if not args.vec:
            raise ValueError("mvprod needs one --vec file per mode")
        vectors = []
        for path in args.vec:
            v = read_dense(path)
            if v.order != 1:
                raise ValueError(f"{path}: mvprod vectors must be order-1, got order {v.order}")
            vectors.append(v.data)
        print(json.dumps(multilinear_vec_product(tr, vectors)))
        return 0
    raise ValueError(f"unknown algebra op {op!r}")


def cmd_convert(args) -> int:
    model = load_model_descriptor(args.descriptor)
    if isinstance(model, CPRepr):
        kind, tr = "cp", cp_to_tr(model)
    elif isinstance(model, TuckerRepr):
        kind, tr = "tucker", tucker_to_tr(model)
    else:
        kind, tr = "tt", tt_to_tr(model)
    write_ring(args.output, tr)
    print(json.dumps({"kind": kind, **_ring_summary(tr)}))
    return 0


def _load_config(args) -> dict:
    if args.config is None:
        return {}
    with open(args.config, "r", encoding="utf-8") as fh:
        try:
            config = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{args.config}: invalid JSON config: {exc}")
    if not isinstance(config, dict):
        raise FormatError(f"{args.config}: config must be a JSON object")
    return config


def cmd_bench(args) -> int:
    from . import plots

    config = _load_config(args)
    study = args.study
    seed = int(config.get("seed", 0))
    algorithms = tuple(config.get("algorithms", bench.ALL_ALGORITHMS))
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)
    ndjson_path = os.path.join(out_dir, f"{study}.ndjson")
    config_path = os.path.join(out_dir, f"{study}_config.json")
    figure_path = os.path.join(out_dir, f"{study}.png")

    rows = []
    labels = []

    def collect(report, label):
        rows.append(report)
        labels.append(label)

    try:
        if study == "table3":
            r_values = config.get("r_true", [1, 2, 3, 4])
            if isinstance(r_values, int):
                r_values = [r_values]
            noise = config.get("noise_snr_db")
            dims = tuple(config.get("dims", (4,) * 10))
            eps_p = config.get("eps")
            resolved = {
                "study": study,
                "r_true": list(r_values),
                "noise_snr_db": noise,
                "algorithms": list(algorithms),
                "dims": list(dims),
                "eps": eps_p,
                "seed": seed,
            }
            for r_true in r_values:
                bench.run_table3(
                    r_true,
                    noise_snr_db=noise,
                    algorithms=algorithms,
                    seed=seed,
                    dims=dims,
                    eps_p=eps_p,
                    on_report=lambda rep, r=r_true: collect(rep, f"r={r}"),
                )
            figure = plots.render_error_params_bars(
                rows, labels, figure_path, "synthetic ring recovery"
            )
        elif study == "functions":
            kinds = list(config.get("kinds", ("f1", "f2", "f3")))
            eps_p = float(config.get("eps", 1e-3))
            dims = tuple(config.get("dims", (4,) * 10))
            domains = config.get("domains", {})
            resolved = {
                "study": study,
                "kinds": kinds,
                "eps": eps_p,
                "algorithms": list(algorithms),
                "dims": list(dims),
                "domains": {k: list(v) for k, v in domains.items()},
                "seed": seed,
            }
            for kind in kinds:
                domain = domains.get(kind)
                spec = bench.default_function_spec(
                    kind, dims=dims, domain=tuple(domain) if domain else None
                )
                bench.run_function_study(
                    spec,
                    eps_p=eps_p,
                    algorithms=algorithms,
                    seed=seed,
                    on_report=lambda rep, k=kind: collect(rep, k),
                )
            figure = plots.render_error_params_bars(
                rows, labels, figure_path, "oscillatory function fits"
            )
        elif study == "shift":
            kind = config.get("kind", "f2")
            eps_p = float(config.get("eps", 1e-3))
            dims = tuple(config.get("dims", (4,) * 10))
            domain = config.get("domain")
            spec = bench.default_function_spec(
                kind, dims=dims, domain=tuple(domain) if domain else None
            )
            shifts = config.get("shifts")
            if shifts is None:
                shifts = list(range(1, len(dims)))
            shifts = [int(k) for k in shifts]
            resolved = {
                "study": study,
                "kind": kind,
                "shifts": shifts,
                "eps": eps_p,
                "algorithms": list(algorithms),
                "dims": list(dims),
                "domain": list(spec.domain),
                "seed": seed,
            }
            matrix = bench.run_shift_study(
                spec,
                shifts=shifts,
                algorithms=algorithms,
                eps_p=eps_p,
                seed=seed,
                on_report=lambda rep: collect(rep, None),
            )
            labels[:] = [f"shift {k}" for k in shifts for _ in matrix[0]]
            figure = plots.render_shift_lines(matrix, shifts, figure_path, "mode-shift study")
        else:
            raise ValueError(f"unknown study {study!r}")
    except Exception:
        # keep whatever completed: a crashed study still leaves its rows
        bench.write_ndjson(ndjson_path, rows)
        raise
    bench.write_ndjson(ndjson_path, rows)
    bench.write_study_config(config_path, resolved)
    print(
        json.dumps(
            {
                "study": study,
                "rows": len(rows),
                "reports": ndjson_path,
                "config": config_path,
                "figures": [figure],
            }
        )
    )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tring",
        description="Tensor-ring compression, algebra, and benchmark toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", help="fit a ring to a dense TRT1 file, write TRC1")
    p.add_argument("input", help="dense TRT1 input path")
    p.add_argument("output", help="TRC1 output path")
    p.add_argument("--alg", required=True, help=f"one of {', '.join(_ALGORITHMS)}")
    p.add_argument("--eps", type=float, help="prescribed relative error")
    p.add_argument("--ranks", type=_parse_ranks, help="comma-separated bond sizes (tr-als)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed for iterative fits")
    p.add_argument("--tau", type=float, help="bond-growth acceptance threshold (tr-alsar)")
    p.add_argument("--max-sweeps", type=int, help="sweep cap for iterative fits")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("reconstruct", help="expand a TRC1 ring back to a dense TRT1 file")
    p.add_argument("input", help="TRC1 input path")
    p.add_argument("output", help="dense TRT1 output path")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("info", help="print a JSON summary of a TRT1 or TRC1 file")
    p.add_argument("input", help="TRT1 or TRC1 path")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("algebra", help="ring arithmetic on TRC1 files")
    p.add_argument("op", choices=("add", "hadamard", "inner", "norm", "mvprod"))
    p.add_argument("paths", nargs="+", help="input paths; add/hadamard take a trailing output")
    p.add_argument(
        "--vec",
        action="append",
        help="order-1 TRT1 file for mvprod, one per mode, in mode order",
    )
    p.set_defaults(func=cmd_algebra)

    p = sub.add_parser("convert", help="build a TRC1 ring from a CP/Tucker/TT descriptor")
    p.add_argument("descriptor", help="JSON model descriptor path")
    p.add_argument("output", help="TRC1 output path")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("bench", help="run a benchmark study, write NDJSON + figures")
    p.add_argument("study", choices=("table3", "functions", "shift"))
    p.add_argument("--config", help="JSON study configuration path")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FloatingPointError, np.linalg.LinAlgError, CapacityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, IndexError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
