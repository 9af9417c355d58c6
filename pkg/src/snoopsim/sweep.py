"""Workload x core-count x scheme experiment matrix."""

from __future__ import annotations

import configparser
import csv
import io
import logging
import os
import tempfile
from array import array
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

from .core import CacheGeometry, SchemeConfig
from .engine import Engine
from .generators import WorkloadKind, WorkloadSpec, write_workload
from .schemes import parse_scheme
from .trace_io import read_chunks

log = logging.getLogger(__name__)

CSV_COLUMNS = ("workload", "cores", "scheme", "param", "read_reqs", "invalidates", "updates", "total")
DEFAULT_CORE_COUNTS = (2, 4, 8, 16)
DEFAULT_SCHEMES = ("inv", "upd", "threshold:*", "adapted", "sharers:*")
DEFAULT_THRESHOLDS = (1, 2, 3)

Workload = Union[WorkloadSpec, str, os.PathLike]


def expand_schemes(tokens, num_cores: int, counter_ceiling: int = 15) -> list[SchemeConfig]:
    """Resolve scheme tokens for one core count.

    ``threshold:*`` expands to thresholds 1-3 and ``sharers:*`` to every
    K from 2 to ``num_cores``; other tokens use the ordinary scheme grammar.
    """
    out = []
    for tok in tokens:
        tok = tok.strip()
        if tok == "threshold:*":
            out += [SchemeConfig.threshold(t, counter_ceiling) for t in DEFAULT_THRESHOLDS]
        elif tok == "sharers:*":
            out += [SchemeConfig.num_sharers(k) for k in range(2, num_cores + 1)]
        else:
            out.append(parse_scheme(tok, counter_ceiling))
    seen, uniq = set(), []
    for s in out:
        if s not in seen:
            seen.add(s)
            uniq.append(s)
    return uniq


@dataclass
class SweepPlan:
    workloads: list[Workload]
    core_counts: list[int] = field(default_factory=lambda: list(DEFAULT_CORE_COUNTS))
    schemes: list[str] = field(default_factory=lambda: list(DEFAULT_SCHEMES))
    out: Optional[str] = None
    jobs: int = 1
    workdir: Optional[str] = None
    geometry: CacheGeometry = CacheGeometry()
    counter_ceiling: int = 15

    def __post_init__(self):
        if not self.workloads or not self.core_counts or not self.schemes:
            raise ValueError("a sweep plan needs at least one workload, core count and scheme")
        for c in self.core_counts:
            self.geometry.with_cores(c)  # range check
        for c in self.core_counts:
            expand_schemes(self.schemes, c, self.counter_ceiling)  # grammar check


def workload_name(w: Workload) -> str:
    if isinstance(w, WorkloadSpec):
        return w.kind.value
    return Path(w).stem


def _load(path, num_cores: int):
    ops, cores, addrs = array("B"), array("H"), array("Q")
    for o, c, a in read_chunks(path, num_cores=num_cores):
        ops.extend(o)
        cores.extend(c)
        addrs.extend(a)
    return ops, cores, addrs


def _run_group(args):
    """One (workload, cores) pair against all of its schemes."""
    name, path, geometry, schemes = args
    rows, failures = [], []
    try:
        arrays = _load(path, geometry.num_cores)
    except Exception as exc:  # reported per cell
        for s in schemes:
            failures.append(((name, geometry.num_cores, str(s)), str(exc)))
        return rows, failures
    for s in schemes:
        try:
            eng = Engine(geometry, s)
            eng.run_arrays(*arrays)
            tot = eng.metrics.totals()
        except Exception as exc:
            failures.append(((name, geometry.num_cores, str(s)), str(exc)))
            continue
        rows.append({
            "workload": name,
            "cores": geometry.num_cores,
            "scheme": s.name,
            "param": "" if s.param is None else s.param,
            "read_reqs": tot.read_reqs,
            "invalidates": tot.invalidates,
            "updates": tot.updates,
            "total": tot.total,
        })
    return rows, failures


def _row_key(row):
    p = row["param"]
    return (row["workload"], row["cores"], row["scheme"], -1 if p == "" else p)


@dataclass
class SweepResult:
    rows: list[dict]
    failures: list[tuple[tuple, str]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(self.rows)
        return buf.getvalue()


def execute(plan: SweepPlan) -> SweepResult:
    """Run every (workload, cores, scheme) cell; generated traces are written once per
    (workload, cores) and shared by all schemes of that pair."""
    tmp = None
    workdir = plan.workdir
    if workdir is None:
        tmp = tempfile.TemporaryDirectory(prefix="snoopsim-sweep-")
        workdir = tmp.name
    os.makedirs(workdir, exist_ok=True)
    try:
        tasks = []
        names = [workload_name(w) for w in plan.workloads]
        if len(set(names)) != len(names):
            raise ValueError(f"workload names must be unique, got {names}")
        early_failures = []
        for w, name in zip(plan.workloads, names):
            for cores in sorted(set(plan.core_counts)):
                schemes = expand_schemes(plan.schemes, cores, plan.counter_ceiling)
                if isinstance(w, WorkloadSpec):
                    try:
                        spec = replace(w, num_cores=cores)
                        path = os.path.join(workdir, f"{name}-c{cores}-n{spec.num_refs}-s{spec.seed}.trace")
                        log.info("generating %s", path)
                        write_workload(spec, path)
                    except (ValueError, OSError) as exc:
                        early_failures += [((name, cores, str(s)), str(exc)) for s in schemes]
                        continue
                else:
                    path = os.fspath(w)
                tasks.append((name, path, plan.geometry.with_cores(cores), schemes))
        if plan.jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=plan.jobs) as pool:
                results = list(pool.map(_run_group, tasks))
        else:
            results = [_run_group(t) for t in tasks]
    finally:
        if tmp is not None:
            tmp.cleanup()
    rows = [r for rs, _ in results for r in rs]
    failures = early_failures + [f for _, fs in results for f in fs]
    rows.sort(key=_row_key)
    failures.sort()
    result = SweepResult(rows, failures)
    if plan.out:
        Path(plan.out).write_text(result.to_csv(), encoding="utf-8")
    return result


def _split(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def make_workloads(names, num_refs: int = 5_000_000, seed: int = 0, **params) -> list[Workload]:
    """Generated specs for the names ``locks``/``arrays``/``server``; anything else is a trace path.

    Specs are built with placeholder core counts; the sweep fills them in per cell.
    """
    kinds = {k.value for k in WorkloadKind}
    out: list[Workload] = []
    for n in names:
        if n in kinds:
            out.append(WorkloadSpec(WorkloadKind(n), 2, num_refs, seed, **params))
        else:
            out.append(n)
    return out


_GEN_PARAMS = {"row_length": int, "private_kib": int, "public_kib": int, "lock_prob": float, "num_locks": int}


def load_plan(path, **overrides) -> SweepPlan:
    """Read a ``[sweep]`` section of ``key = value`` lines; ``overrides`` win over the file."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    with open(path, encoding="utf-8") as f:
        cp.read_file(f)
    if not cp.has_section("sweep"):
        raise ValueError(f"{path}: missing [sweep] section")
    sec = cp["sweep"]
    known = {"workloads", "cores", "schemes", "refs", "seed", "jobs", "out", "workdir",
             "sets", "ways", "block_size", "counter_ceiling"} | set(_GEN_PARAMS)
    unknown = set(sec) - known
    if unknown:
        raise ValueError(f"{path}: unknown keys {sorted(unknown)}")
    cfg = {k: sec[k] for k in sec}
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    return plan_from_mapping(cfg)


def plan_from_mapping(cfg: dict) -> SweepPlan:
    def pick(key, conv, default):
        v = cfg.get(key)
        return default if v is None else conv(v)

    def as_list(v):
        return v if isinstance(v, (list, tuple)) else _split(v)

    gen = {k: conv(cfg[k]) for k, conv in _GEN_PARAMS.items() if cfg.get(k) is not None}
    workloads = make_workloads(
        as_list(cfg.get("workloads", "locks,arrays,server")),
        pick("refs", int, 5_000_000), pick("seed", int, 0), **gen)
    geometry = CacheGeometry(pick("sets", int, 64), pick("ways", int, 4), pick("block_size", int, 64))
    return SweepPlan(
        workloads=workloads,
        core_counts=[int(c) for c in as_list(cfg.get("cores", "2,4,8,16"))],
        schemes=as_list(cfg.get("schemes", ",".join(DEFAULT_SCHEMES))),
        out=cfg.get("out"),
        jobs=pick("jobs", int, 1),
        workdir=cfg.get("workdir"),
        geometry=geometry,
        counter_ceiling=pick("counter_ceiling", int, 15),
    )
