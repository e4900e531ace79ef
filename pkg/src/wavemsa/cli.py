"""Command line: ``wavemsa {align,plan,estimate,score,bench}``."""

import argparse
import csv
import random
import statistics
import sys
import time

from . import cost_model, partitioner
from .dp_core import dump_tensor, memory_cap, score_sequential, traceback
from .errors import ConfigError, FastaParseError, MemoryCapError, SchemeError
from .executor import build_plan, run_parallel, write_event_log
from .moa_index import Shape
from .sequences import (DEFAULT_SCHEME, SequenceSet, load_scheme, parse_alignment,
                        read_fasta, similarity_score)


def _shape(text):
    try:
        return Shape(tuple(int(x) for x in text.replace("x", ",").split(",") if x))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _int_range(text):
    if ".." in text:
        a, b = text.split("..", 1)
        return list(range(int(a), int(b) + 1))
    return [int(x) for x in text.split(",")]


def _int_list(text):
    return [int(x) for x in text.split(",") if x]


def _load_scheme(args):
    return load_scheme(args.scheme) if args.scheme else DEFAULT_SCHEME


def _check_cap(shape, args):
    cap = args.memory_cap if args.memory_cap is not None else memory_cap()
    if shape.size > cap:
        raise MemoryCapError(shape.size, cap)


def cmd_align(args):
    seqs = read_fasta(args.input, alphabet=args.alphabet)
    scheme = _load_scheme(args)
    _check_cap(seqs.shape, args)
    if args.mode == "sequential":
        tensor = score_sequential(seqs, scheme, cap=args.memory_cap)
        alignment = traceback(tensor, seqs)
        report = None
    else:
        if args.partition_size is None or args.workers is None:
            raise ConfigError("parallel mode needs --partition-size and --workers")
        tensor, alignment, report = run_parallel(
            seqs, scheme, args.partition_size, args.workers,
            policy=args.policy, record_events=bool(args.event_log))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(alignment.to_fasta())
    else:
        sys.stdout.write(alignment.to_fasta())
    if args.dump:
        dump_tensor(tensor, args.dump, scheme)
    if report is not None:
        if args.report:
            with open(args.report, "w") as fh:
                report.write_csv(fh)
        if args.event_log:
            with open(args.event_log, "w") as fh:
                write_event_log(fh, report.events)
        for warning in report.warnings:
            print("warning: %s" % warning, file=sys.stderr)
    print("terminal score: %s" % tensor.terminal_score)
    print("similarity score: %s" % similarity_score(scheme, alignment))
    return 0


def cmd_plan(args):
    out = sys.stdout
    if args.table1:
        partitioner.write_wave_count_table(out, args.k, args.waves)
        if args.shape is None and args.input is None:
            return 0
        out.write("\n")
    if args.input:
        shape = read_fasta(args.input, alphabet=args.alphabet).shape
    elif args.shape is not None:
        shape = args.shape
    else:
        raise ConfigError("plan needs --shape, --input or --table1")
    if args.partition_size is None:
        raise ConfigError("plan needs --partition-size for a shape")
    grid = partitioner.build_grid(shape, args.partition_size)
    sched = partitioner.schedule(grid, args.workers, args.policy)
    counts = partitioner.wave_counts(grid)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["shape", "S", "k", "P", "t", "workers"])
    writer.writerow(["x".join(map(str, shape.dims)), grid.S, grid.k, grid.P, grid.t,
                     args.workers])
    out.write("\n")
    writer.writerow(["per_wave"] + ["w%d" % (w + 1) for w in range(grid.t)])
    writer.writerow(["partitions"] + counts)
    if args.waves_csv:
        with open(args.waves_csv, "w") as fh:
            partitioner.write_wave_csv(fh, grid, sched)
    if args.edges_csv:
        with open(args.edges_csv, "w") as fh:
            partitioner.write_edge_csv(fh, grid, sched)
    return 0


def _estimate_allocation(args):
    if args.r is None or args.c is None:
        raise ConfigError("--allocation needs explicit --r and --c")
    params = cost_model.CostParams(args.r, args.c, args.allocation)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["P", "workers", "max_pm", "dT_corrected", "dT_printed"])
    writer.writerow([params.P, params.V, max(params.allocation),
                     "%.6g" % cost_model.predict_dt(params),
                     "%.6g" % cost_model.predict_dt(params, corrected=False)])
    return 0


def cmd_estimate(args):
    if args.allocation is not None:
        return _estimate_allocation(args)
    shape = args.shape
    if shape is None:
        raise ConfigError("estimate needs --shape (or --allocation)")
    if args.sweep:
        if args.r_unit is None or args.c_unit is None:
            args.r_unit, args.c_unit = cost_model.calibrate()
        rows = cost_model.sweep(shape, args.workers, args.r_unit, args.c_unit, args.policy)
        cost_model.write_sweep_csv(sys.stdout, rows)
        best = cost_model.recommend_partition_size(shape, args.workers, args.r_unit,
                                                   args.c_unit, args.policy)
        print("recommended partition size: %d" % best)
        return 0
    if args.partition_size is None:
        raise ConfigError("estimate needs --partition-size (or --sweep)")
    grid = partitioner.build_grid(shape, args.partition_size)
    sched = partitioner.schedule(grid, args.workers, args.policy)
    r, c = args.r, args.c
    if r is None or c is None:
        r_unit, c_unit = cost_model.calibrate()
        k, S = grid.k, grid.S
        r = r if r is not None else r_unit * cost_model.compute_units(S, k)
        c = c if c is not None else c_unit * cost_model.comm_units(S, k)
    params = cost_model.params_from_schedule(sched, r, c)
    report = cost_model.granularity(params)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["S", "P", "t", "workers", "max_pm", "dT_corrected", "dT_printed",
                     "R_max", "C_max", "R_over_C"])
    writer.writerow([grid.S, grid.P, grid.t, args.workers, max(params.allocation),
                     "%.6g" % cost_model.predict_dt(params),
                     "%.6g" % cost_model.predict_dt(params, corrected=False),
                     "%.6g" % report.R_max, "%.6g" % report.C_max,
                     "undefined" if report.ratio is None else "%.6g" % report.ratio])
    return 0


def cmd_score(args):
    with open(args.input, "rb") as fh:
        aln = parse_alignment(fh)
    print(similarity_score(_load_scheme(args), aln))
    return 0


def _random_seqs(spec, seed):
    k, length = (int(x) for x in spec.split(","))
    rng = random.Random(seed)
    return SequenceSet.from_strings(*["".join(rng.choice("ACGT") for _ in range(length))
                                      for _ in range(k)])


def cmd_bench(args):
    if args.input:
        seqs = read_fasta(args.input, alphabet=args.alphabet)
    elif args.random:
        seqs = _random_seqs(args.random, args.seed)
    else:
        raise ConfigError("bench needs --input or --random K,LENGTH")
    scheme = _load_scheme(args)
    _check_cap(seqs.shape, args)
    if seqs.shape.size < 100_000:
        print("warning: %d cells is too small to time meaningfully" % seqs.shape.size,
              file=sys.stderr)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["V", "elapsed_ns", "speedup", "idle_worker_waves", "terminal_score"])
    base = None
    for V in args.workers:
        build_plan(seqs.shape, args.partition_size, V, args.policy)
        times = []
        for _ in range(args.repeats):
            start = time.perf_counter_ns()
            tensor, _, report = run_parallel(seqs, scheme, args.partition_size, V,
                                             policy=args.policy)
            times.append(time.perf_counter_ns() - start)
        elapsed = int(statistics.median(times))
        base = base or elapsed
        idle = sum(w.idle_workers for w in report.waves)
        writer.writerow([V, elapsed, "%.3f" % (base / elapsed), idle, tensor.terminal_score])
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="wavemsa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scheme=True):
        p.add_argument("--alphabet", default="generic",
                       help="dna, protein, generic or a literal residue string")
        if scheme:
            p.add_argument("--scheme", help="key=value scheme file")
        p.add_argument("--memory-cap", type=int, default=None,
                       help="maximum tensor cells (default $WAVEMSA_MEMORY_CAP)")
        p.add_argument("--policy", choices=["block", "round-robin"], default="block")

    p = sub.add_parser("align", help="align a FASTA file")
    p.add_argument("input")
    p.add_argument("--mode", choices=["sequential", "parallel"], default="sequential")
    p.add_argument("-S", "--partition-size", type=int)
    p.add_argument("-V", "--workers", type=int)
    p.add_argument("-o", "--out", help="aligned FASTA output (default stdout)")
    p.add_argument("--report", help="per-wave report CSV (parallel mode)")
    p.add_argument("--dump", help="binary tensor dump")
    p.add_argument("--event-log", help="protocol event log (parallel mode)")
    common(p)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("plan", help="partition counts, waves and dependency edges")
    p.add_argument("--shape", type=_shape)
    p.add_argument("--input", help="take the shape from a FASTA file")
    p.add_argument("-S", "--partition-size", type=int)
    p.add_argument("-V", "--workers", type=int, default=1)
    p.add_argument("--table1", action="store_true",
                   help="print unbounded per-wave counts for a range of k")
    p.add_argument("--k", type=_int_range, default=list(range(2, 10)))
    p.add_argument("--waves", type=int, default=9)
    p.add_argument("--waves-csv")
    p.add_argument("--edges-csv")
    common(p, scheme=False)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("estimate", help="predicted distributed execution time")
    p.add_argument("--shape", type=_shape)
    p.add_argument("-S", "--partition-size", type=int)
    p.add_argument("-V", "--workers", type=int, default=1)
    p.add_argument("--allocation", type=_int_list,
                   help="partitions per worker, e.g. 8,8 (skips the schedule)")
    p.add_argument("--r", type=float, help="seconds per partition")
    p.add_argument("--c", type=float, help="seconds per unit of communication")
    p.add_argument("--r-unit", type=float, help="seconds per cell-neighbour op (sweep)")
    p.add_argument("--c-unit", type=float, help="seconds per communicated cell (sweep)")
    p.add_argument("--sweep", action="store_true")
    common(p, scheme=False)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("score", help="sum-of-pairs score of an aligned FASTA file")
    p.add_argument("input")
    common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("bench", help="elapsed time across worker counts")
    p.add_argument("--input")
    p.add_argument("--random", help="K,LENGTH random DNA instance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-S", "--partition-size", type=int, required=True)
    p.add_argument("-V", "--workers", type=_int_list, default=[1, 2, 4])
    p.add_argument("--repeats", type=int, default=3)
    common(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FastaParseError, SchemeError, ConfigError, MemoryCapError,
            OSError, ValueError) as exc:
        print("wavemsa: error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
