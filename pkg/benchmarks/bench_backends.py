"""Compare the compiled and pure-Python backends on parsing and simulation.

    python3 benchmarks/bench_backends.py --refs 500000 --cores 16
"""

import argparse
import os
import tempfile
import time
from array import array

from snoopsim import CacheGeometry, Engine, parse_scheme
from snoopsim._backend import KERNELS
from snoopsim.generators import WorkloadKind, WorkloadSpec, write_workload
from snoopsim.trace_io import read_chunks


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def load(path, backend):
    ops, cores, addrs = array("B"), array("H"), array("Q")
    for o, c, a in read_chunks(path, backend=backend):
        ops.extend(o)
        cores.extend(c)
        addrs.extend(a)
    return ops, cores, addrs


def simulate(arrays, geom, scheme, backend, verify=False):
    eng = Engine(geom, parse_scheme(scheme), verify=verify, backend=backend)
    eng.run_arrays(*arrays)
    return eng.metrics.total


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--refs", type=int, default=500_000)
    ap.add_argument("--cores", type=int, default=16)
    ap.add_argument("--workload", choices=[k.value for k in WorkloadKind], default="locks")
    ap.add_argument("--schemes", default="inv,upd,threshold:2")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--verify", action="store_true", help="also time runs with invariant checking")
    args = ap.parse_args(argv)

    geom = CacheGeometry(num_cores=args.cores)
    backends = [b for b in ("python", "cython") if b in KERNELS]
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "bench.trace")
        write_workload(WorkloadSpec(WorkloadKind(args.workload), args.cores, args.refs), path)
        print(f"{args.workload}, {args.refs} refs, {args.cores} cores, best of {args.repeat}")
        print(f"{'task':<28}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")

        def row(name, times):
            speed = times[0] / times[-1] if len(times) > 1 else 1.0
            print(f"{name:<28}" + "".join(f"{t:>11.3f}s" for t in times) + f"{speed:>9.1f}x")

        row("parse", [best_of(lambda b=b: load(path, b), args.repeat) for b in backends])
        arrays = load(path, None)
        modes = [False, True] if args.verify else [False]
        for scheme in args.schemes.split(","):
            for verify in modes:
                totals, times = set(), []
                for b in backends:
                    times.append(best_of(lambda b=b: totals.add(simulate(arrays, geom, scheme, b, verify)),
                                         args.repeat))
                assert len(totals) == 1, f"backends disagree on {scheme}: {totals}"
                row(f"simulate {scheme}{' +verify' if verify else ''}", times)


if __name__ == "__main__":
    main()
