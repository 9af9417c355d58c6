"""Command-line entry point: ``snoopsim {generate,simulate,sweep}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import _backend
from .core import MAX_CORES, CacheGeometry
from .engine import run
from .errors import CoherenceViolation, TraceFormatError
from .generators import WorkloadKind, WorkloadSpec, write_workload
from .schemes import parse_scheme
from .sweep import DEFAULT_SCHEMES, load_plan, plan_from_mapping, execute
from .trace_io import max_core

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_VERIFY = 4

log = logging.getLogger("snoopsim")


def _cores(text: str) -> int:
    n = int(text)
    if not 1 <= n <= MAX_CORES:
        raise argparse.ArgumentTypeError(f"core count must be in 1-{MAX_CORES}, got {n}")
    return n


def _positive(text: str) -> int:
    n = int(text)
    if n <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {n}")
    return n


def _scheme(text: str):
    try:
        return parse_scheme(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_geometry(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("cache geometry")
    g.add_argument("--sets", type=_positive, default=64, help="sets per cache (default 64)")
    g.add_argument("--ways", type=_positive, default=4, help="blocks per set (default 4)")
    g.add_argument("--block-size", type=_positive, default=64, help="block size in bytes (default 64)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="snoopsim", description="MOESI snoopy-bus simulator with hybrid write policies.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic workload trace")
    g.add_argument("kind", choices=[k.value for k in WorkloadKind])
    g.add_argument("--cores", type=_cores, required=True)
    g.add_argument("--refs", type=_positive, default=5_000_000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="trace file to write")
    g.add_argument("--row-length", type=_positive, default=1024, help="arrays: elements per row")
    g.add_argument("--private-kib", type=_positive, default=64, help="locks/server: private range per core")
    g.add_argument("--public-kib", type=_positive, default=256, help="server: public section size")
    g.add_argument("--lock-prob", type=float, default=0.10, help="locks: chance a step targets a lock")

    s = sub.add_parser("simulate", help="run one trace under one scheme")
    s.add_argument("trace")
    s.add_argument("--scheme", type=_scheme, default="inv",
                   help="inv | upd | threshold:<T> | adapted | sharers:<K> (default inv)")
    s.add_argument("--cores", type=_cores, help="core count (default: highest core id in trace + 1)")
    s.add_argument("--verify", action="store_true", help="check coherence invariants after every step")
    s.add_argument("--report", help="write the metrics report here (default: stdout)")
    s.add_argument("--format", choices=("json", "csv"), default="json")
    s.add_argument("--counter-ceiling", type=_positive, default=15)
    s.add_argument("--count-local-reads", action="store_true",
                   help="threshold counter also counts the core's own read hits")
    s.add_argument("--backend", choices=sorted(_backend.KERNELS))
    _add_geometry(s)

    w = sub.add_parser("sweep", help="run the workload x cores x scheme matrix")
    w.add_argument("--config", help="plan file with a [sweep] section; flags override it")
    w.add_argument("--workloads", help="comma list of locks, arrays, server or trace paths")
    w.add_argument("--cores", help="comma list of core counts (default 2,4,8,16)")
    w.add_argument("--schemes", help=f"comma list of schemes (default {','.join(DEFAULT_SCHEMES)})")
    w.add_argument("--refs", type=_positive)
    w.add_argument("--seed", type=int)
    w.add_argument("--jobs", type=_positive)
    w.add_argument("--workdir", help="keep generated traces here")
    w.add_argument("--out", help="combined CSV (default: stdout)")
    return ap


def cmd_generate(args) -> int:
    spec = WorkloadSpec(WorkloadKind(args.kind), args.cores, args.refs, args.seed,
                        lock_prob=args.lock_prob, private_kib=args.private_kib,
                        row_length=args.row_length, public_kib=args.public_kib)
    n = write_workload(spec, args.out)
    print(f"wrote {n} records to {args.out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cores = args.cores
    if cores is None:
        cores = max(max_core(args.trace) + 1, 1)
    geom = CacheGeometry(args.sets, args.ways, args.block_size, cores)
    scheme = args.scheme
    if args.counter_ceiling != scheme.counter_ceiling:
        scheme = parse_scheme(str(scheme), args.counter_ceiling)
    table = run(args.trace, geom, scheme, verify=args.verify, backend=args.backend,
                count_local_reads=args.count_local_reads)
    report = table.render(args.format)
    if args.report:
        Path(args.report).write_text(report, encoding="utf-8")
    else:
        sys.stdout.write(report)
    t = table.totals()
    print(f"total={t.total} read_reqs={t.read_reqs} invalidates={t.invalidates} "
          f"updates={t.updates} writebacks={t.writebacks} refs={t.loads + t.stores} "
          f"scheme={scheme} cores={cores}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    overrides = {"workloads": args.workloads, "cores": args.cores, "schemes": args.schemes,
                 "refs": args.refs, "seed": args.seed, "jobs": args.jobs,
                 "workdir": args.workdir, "out": args.out}
    if args.config:
        plan = load_plan(args.config, **overrides)
    else:
        plan = plan_from_mapping({k: v for k, v in overrides.items() if v is not None})
    result = execute(plan)
    if not plan.out:
        sys.stdout.write(result.to_csv())
    for (name, cores, scheme), msg in result.failures:
        print(f"cell {name}/{cores}/{scheme} failed: {msg}", file=sys.stderr)
    return EXIT_INPUT if result.failures else EXIT_OK


COMMANDS = {"generate": cmd_generate, "simulate": cmd_simulate, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except CoherenceViolation as exc:
        print(f"snoopsim: coherence violation: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (TraceFormatError, ValueError, OSError) as exc:
        print(f"snoopsim: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
