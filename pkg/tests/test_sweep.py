import csv
import io

import pytest

from snoopsim.generators import WorkloadKind, WorkloadSpec, write_workload
from snoopsim.sweep import CSV_COLUMNS, SweepPlan, execute, expand_schemes, load_plan, make_workloads


def _spec(kind="locks", refs=3000):
    return WorkloadSpec(WorkloadKind(kind), 2, refs, 1)


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_expand_wildcards():
    names = [str(s) for s in expand_schemes(["inv", "threshold:*", "sharers:*", "upd"], 4)]
    assert names == ["inv", "threshold:1", "threshold:2", "threshold:3", "sharers:2", "sharers:3",
                     "sharers:4", "upd"]
    assert [str(s) for s in expand_schemes(["sharers:*"], 2)] == ["sharers:2"]
    assert [str(s) for s in expand_schemes(["inv", "inv"], 2)] == ["inv"]


def test_one_cell_five_schemes():
    plan = SweepPlan([_spec()], [2], ["inv", "upd", "threshold:1", "adapted", "sharers:2"])
    res = execute(plan)
    assert len(res.rows) == 5 and not res.failures
    assert res.to_csv().splitlines()[0] == ",".join(CSV_COLUMNS)
    for r in res.rows:
        assert r["total"] == r["read_reqs"] + r["invalidates"] + r["updates"]


def test_threshold16_row_matches_inv():
    res = execute(SweepPlan([_spec("arrays")], [4], ["inv", "threshold:16"]))
    by = {r["scheme"]: r for r in res.rows}
    keys = ("read_reqs", "invalidates", "updates", "total")
    assert [by["inv"][k] for k in keys] == [by["threshold"][k] for k in keys]


def test_shuffled_axes_and_jobs_give_identical_output():
    a = SweepPlan([_spec("locks"), _spec("server")], [2, 4], ["inv", "upd", "threshold:2"])
    b = SweepPlan([_spec("server"), _spec("locks")], [4, 2], ["threshold:2", "upd", "inv"], jobs=3)
    assert execute(a).to_csv() == execute(b).to_csv()


def test_external_trace_and_out_file(tmp_path):
    trace = tmp_path / "mine.trace"
    write_workload(WorkloadSpec(WorkloadKind.LOCKS, 4, 2000, 5), trace)
    out = tmp_path / "out.csv"
    res = execute(SweepPlan([str(trace)], [4], ["inv", "upd"], out=str(out)))
    rows = _rows(out.read_text())
    assert [(r["workload"], r["cores"], r["scheme"]) for r in rows] == [("mine", "4", "inv"), ("mine", "4", "upd")]
    assert out.read_text() == res.to_csv()


def test_failed_cells_do_not_stop_others(tmp_path):
    trace = tmp_path / "wide.trace"
    write_workload(WorkloadSpec(WorkloadKind.LOCKS, 4, 500, 5), trace)
    # the 4-core trace cannot run at 2 cores; server cannot run at 1 core
    res = execute(SweepPlan([str(trace), _spec("server", 500)], [1, 2, 4], ["inv"]))
    failed = {cell for cell, _ in res.failures}
    assert failed == {("wide", 1, "inv"), ("wide", 2, "inv"), ("server", 1, "inv")}
    assert {(r["workload"], r["cores"]) for r in res.rows} == {("wide", 4), ("server", 2), ("server", 4)}


def test_plan_validation():
    with pytest.raises(ValueError):
        SweepPlan([], [2], ["inv"])
    with pytest.raises(ValueError):
        SweepPlan([_spec()], [2], ["threshold:"])
    with pytest.raises(ValueError):
        SweepPlan([_spec()], [17], ["inv"])
    with pytest.raises(ValueError):
        execute(SweepPlan([_spec(), _spec()], [2], ["inv"]))


def test_load_plan(tmp_path):
    cfg = tmp_path / "plan.ini"
    cfg.write_text("[sweep]\nworkloads = locks, arrays\ncores = 2,4  # small\nschemes = inv,sharers:*\n"
                   "refs = 1500\nseed = 9\nrow_length = 64\n")
    plan = load_plan(cfg, cores="2")
    assert plan.core_counts == [2]
    assert [w.kind.value for w in plan.workloads] == ["locks", "arrays"]
    assert plan.workloads[1].row_length == 64 and plan.workloads[0].num_refs == 1500
    rows = execute(plan).rows
    assert [(r["workload"], r["scheme"], r["param"]) for r in rows] == [
        ("arrays", "inv", ""), ("arrays", "sharers", 2), ("locks", "inv", ""), ("locks", "sharers", 2)]


def test_load_plan_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "plan.ini"
    cfg.write_text("[sweep]\nwrokloads = locks\n")
    with pytest.raises(ValueError, match="unknown keys"):
        load_plan(cfg)
    cfg.write_text("[other]\n")
    with pytest.raises(ValueError, match="missing"):
        load_plan(cfg)


def test_make_workloads_paths_pass_through():
    w = make_workloads(["locks", "some/file.trace"], num_refs=10)
    assert isinstance(w[0], WorkloadSpec) and w[1] == "some/file.trace"
