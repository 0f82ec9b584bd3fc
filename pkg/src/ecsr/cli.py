"""Command-line front end.

Subcommands:
    gen      write a seeded uniform random matrix as MatrixMarket
    convert  matrix.mtx -> model.ecsr, printing the storage report
    spmv     execute y = A @ x from a container, optionally dumping a trace
    verify   full round-trip and oracle-equivalence audit (nonzero exit on
             any violation)
    stats    gap distribution and extraction summary
    bench    informational CPU timings of the emulated kernel against the
             reference SpMV, for every available kernel backend
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from ecsr import _kernels, core, executor, storage
from ecsr.errors import EcsrError
from ecsr.extraction import ExtractionConfig, extract_blocks


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--warp-size", type=int, default=32)
    p.add_argument("--vector-size", type=int, default=4)
    p.add_argument("--delta-bits", type=int, default=8, choices=(4, 8, 16))
    p.add_argument("--max-levels", type=int, default=None,
                   help="cap on aggregation levels (default: unlimited)")
    p.add_argument("--clip-threshold", type=int, default=None,
                   help="override the clip width (rounded up to a chunk multiple)")


def _cfg(args) -> ExtractionConfig:
    return ExtractionConfig(
        warp_size=args.warp_size,
        vector_size=args.vector_size,
        delta_bits=args.delta_bits,
        max_levels=args.max_levels,
    )


def read_vector(path) -> np.ndarray:
    values = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError as exc:
                raise EcsrError(f"{path}: line {lineno}: {exc}") from exc
    return np.array(values, dtype=np.float64)


def write_vector(path, vec) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for v in vec:
            fh.write(f"{v:.17g}\n")


def _cmd_gen(args) -> int:
    matrix = core.generate_uniform(args.rows, args.cols, args.sparsity, args.seed)
    core.save_matrix_market(matrix, args.out)
    print(f"wrote {args.out}: {matrix.num_rows} x {matrix.num_cols}, nnz={matrix.nnz}")
    return 0


def _cmd_convert(args) -> int:
    matrix = core.load_matrix_market(args.infile)
    cfg = _cfg(args)
    ec = storage.convert_csr(matrix, cfg, clip_limit=args.clip_threshold)
    storage.save_container(ec, args.out)
    report = storage.storage_report(ec, value_bits=args.value_bits,
                                    index_bits_baseline=args.index_bits)
    print(report.to_text())
    if args.report_json:
        with open(args.report_json, "w", encoding="ascii") as fh:
            json.dump(report.to_json(), fh, indent=2)
    return 0


def _cmd_spmv(args) -> int:
    ec = storage.load_container(args.matrix)
    if args.precision == "f32":
        ec = ec.astype(np.float32)
    elif args.precision == "f64":
        ec = ec.astype(np.float64)
    x = read_vector(args.x)
    if args.trace:
        y, trace = executor.spmv_ec_traced(ec, x)
        with open(args.trace, "w", encoding="ascii") as fh:
            for rec in trace:
                fh.write(
                    f"warp={rec.warp} step={rec.step} array={rec.array} "
                    f"set={rec.set_index} start={rec.start} span={rec.span}\n"
                )
    else:
        y = executor.spmv_ec(ec, x)
    write_vector(args.out, y)
    print(f"wrote {args.out}: {y.size} values")
    return 0


def run_verification(matrix, cfg, clip_limit=None):
    """Run every pipeline invariant on one matrix; returns (name, ok, detail)."""
    results = []

    def check(name, ok, detail=""):
        results.append((name, bool(ok), detail))

    sets = extract_blocks(matrix, cfg)
    covered = np.zeros((matrix.num_rows, matrix.num_cols), dtype=np.int32)
    inserted_ok = True
    for bset in sets:
        for block in bset.blocks:
            real = ~block.inserted
            for row in block.row_ids:
                covered[row, block.col_ids[real]] += 1
            if np.any(block.values[:, block.inserted] != 0.0):
                inserted_ok = False
    structural = np.zeros_like(covered)
    rows = np.repeat(np.arange(matrix.num_rows), np.diff(matrix.row_ptr))
    structural[rows, matrix.col_idx] = 1
    check("partition", np.array_equal(covered, structural),
          "every structural nonzero covered exactly once")
    check("inserted_zeros", inserted_ok, "gap-bridging columns carry zeros")

    ec = storage.convert_csr(matrix, cfg, clip_limit=clip_limit, dtype=np.float64)
    back = storage.decode_ec_csr(ec)
    check("round_trip", back.same_as(matrix.astype(np.float64)),
          "decode(encode(A)) equals A")

    blob = storage.serialize(ec)
    check("serialization", storage.serialize(storage.deserialize(blob)) == blob,
          "serialize is byte-stable")

    limit = 1 << cfg.delta_bits
    delta_ok = all(
        s.delta_indices.size == 0 or int(s.delta_indices.max()) < limit
        for s in ec.sets
    )
    check("delta_bound", delta_ok, f"all deltas < 2^{cfg.delta_bits}")

    rng = np.random.default_rng(7)
    x = rng.uniform(-1.0, 1.0, size=matrix.num_cols)
    y_ref = core.spmv_oracle(matrix, x)
    y_ec, trace = executor.spmv_ec_traced(ec, x)
    scale = max(float(np.max(np.abs(y_ref))), 1e-30)
    rel = float(np.max(np.abs(y_ec - y_ref))) / scale if y_ref.size else 0.0
    check("oracle_equivalence", rel <= 1e-12, f"relative error {rel:.3e}")

    violations = executor.check_coalescing(ec, trace)
    check("coalescing", not violations,
          violations[0] if violations else "all warp reads single aligned spans")

    raw_sets = [s for s in sets]
    plain = storage.encode_ec_csr(
        _split_only(raw_sets, cfg), cfg, matrix.num_rows, matrix.num_cols,
        dtype=np.float64,
    )
    y_plain = executor.spmv_ec(plain, x)
    rel2 = float(np.max(np.abs(y_plain - y_ec))) / scale if y_ref.size else 0.0
    check("balance_invariance", rel2 <= 1e-12, f"relative error {rel2:.3e}")

    cost = executor.access_cost(sets, cfg)
    check("cost_monotone", cost.vector_units <= matrix.nnz,
          f"{cost.vector_units:.0f} <= nnz {matrix.nnz}")
    return results


def _split_only(sets, cfg):
    """Split the 1-grained set without clipping or reordering."""
    out = []
    for bset in sets:
        if bset.granularity == 1:
            long_set, short_set = storage.split_one_grained(bset, cfg)
            if long_set.blocks:
                out.append(long_set)
            if short_set.blocks:
                out.append(short_set)
        else:
            out.append(bset)
    return out


def _cmd_verify(args) -> int:
    matrix = core.load_matrix_market(args.infile)
    results = run_verification(matrix, _cfg(args), clip_limit=args.clip_threshold)
    failed = 0
    for name, ok, detail in results:
        status = "ok" if ok else "FAIL"
        print(f"{name}: {status} ({detail})")
        failed += not ok
    if failed:
        print(f"{failed} check(s) failed", file=sys.stderr)
        return 1
    print("all checks passed")
    return 0


def _cmd_stats(args) -> int:
    matrix = core.load_matrix_market(args.infile)
    hist = storage.delta_histogram(matrix)
    print(f"matrix.rows={matrix.num_rows}")
    print(f"matrix.cols={matrix.num_cols}")
    print(f"matrix.nnz={matrix.nnz}")
    print(f"gaps.total={hist.total}")
    for t, frac in hist.cdf_points((1, 2, 4, 8, 16, 32, 64, 128, 256)):
        print(f"gaps.cdf_le_{t}={frac:.6f}")
    cfg = _cfg(args)
    sets = storage.pipeline_sets(matrix, cfg, args.clip_threshold)
    total = max(matrix.nnz, 1)
    for bset in sets:
        real = sum(b.real_nnz for b in bset.blocks)
        tag = f"set.g{bset.granularity}v{bset.vector_size}"
        print(f"{tag}.blocks={len(bset.blocks)}")
        print(f"{tag}.real_nnz={real}")
        print(f"{tag}.coverage={real / total:.6f}")
    return 0


def _cmd_bench(args) -> int:
    matrix = core.load_matrix_market(args.infile)
    cfg = _cfg(args)
    ec = storage.convert_csr(matrix, cfg, clip_limit=args.clip_threshold)
    rng = np.random.default_rng(1)
    x = rng.uniform(-1.0, 1.0, size=matrix.num_cols)

    def timed(fn):
        fn()  # warm up
        t0 = time.perf_counter()
        for _ in range(args.iters):
            fn()
        return (time.perf_counter() - t0) / args.iters * 1e3

    oracle_ms = timed(lambda: core.spmv_oracle(matrix, x))
    print(f"oracle.ms={oracle_ms:.3f}")
    executor.validate_container(ec)
    current = _kernels.active_backend()
    for backend in _kernels.available_backends():
        _kernels.use_backend(backend)
        ms = timed(lambda: executor.spmv_ec(ec, x, validate=False))
        print(f"spmv_ec.{backend}.ms={ms:.3f}")
    _kernels.use_backend(current)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecsr",
        description="Block extraction, delta-compressed sparse storage, and emulated SpMV",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a seeded uniform random matrix")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--sparsity", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("convert", help="convert MatrixMarket to an ECSR container")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    _add_pipeline_flags(p)
    p.add_argument("--value-bits", type=int, default=32, choices=(16, 32, 64),
                   help="value precision for the storage model")
    p.add_argument("--index-bits", type=int, default=32,
                   help="CSR baseline index width for the storage model")
    p.add_argument("--report-json", default=None,
                   help="also write the storage report as JSON")
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("spmv", help="multiply a container by a vector")
    p.add_argument("--matrix", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--precision", choices=("f32", "f64"), default=None,
                   help="cast the computation (default: container precision)")
    p.add_argument("--trace", default=None,
                   help="write the per-warp access trace to this file")
    p.set_defaults(func=_cmd_spmv)

    p = sub.add_parser("verify", help="audit the full pipeline on a matrix")
    p.add_argument("--in", dest="infile", required=True)
    _add_pipeline_flags(p)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("stats", help="gap distribution and extraction summary")
    p.add_argument("--in", dest="infile", required=True)
    _add_pipeline_flags(p)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("bench", help="time the emulated kernel against the reference")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--iters", type=int, default=10)
    _add_pipeline_flags(p)
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EcsrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
