from __future__ import annotations

import io
from pathlib import Path

import pytest

from mapfsat.bench import (
    BenchRecord,
    discover_suite,
    read_csv,
    run_benchmark,
    sorted_runtimes,
    success_rate,
    write_csv,
)

SUITE = Path(__file__).parent / "data" / "suite8x8"


def record(algo="cbs", agents=2, status="solved", runtime=1.0, soc=4):
    return BenchRecord("m.map", "s.scen", agents, algo, status, runtime,
                       soc if status == "solved" else None,
                       0, 0)


class TestSuccessRate:
    def test_partial(self):
        records = [record(status="solved")] * 20 + [record(status="timeout")] * 5
        assert success_rate(records, "cbs", 2) == 0.8

    def test_none_solved(self):
        records = [record(status="timeout")] * 25
        assert success_rate(records, "cbs", 2) == 0.0

    def test_all_solved(self):
        records = [record(status="solved")] * 25
        assert success_rate(records, "cbs", 2) == 1.0

    def test_empty_group_is_absent(self):
        assert success_rate([record(algo="cbs")], "heuristic", 2) is None


class TestSortedRuntimes:
    def test_ascending(self):
        records = [record(runtime=5.0), record(runtime=1.0), record(runtime=3.0)]
        assert sorted_runtimes(records, "cbs") == [1.0, 3.0, 5.0]

    def test_all_timeouts(self):
        records = [record(status="timeout", runtime=9.0)] * 3
        assert sorted_runtimes(records, "cbs") == []

    def test_single_solved(self):
        assert sorted_runtimes([record(runtime=2.5)], "cbs") == [2.5]

    def test_length_matches_solved_count(self):
        records = [record(runtime=1.0), record(status="timeout"), record(runtime=0.5)]
        out = sorted_runtimes(records, "cbs")
        assert len(out) == 2
        assert out == sorted(out)


class TestRunBenchmark:
    def test_two_instances_one_algorithm(self, tmp_path):
        for name in ("open8.map", "open8-01.scen", "open8-02.scen"):
            (tmp_path / name).write_text((SUITE / name).read_text())
        records = run_benchmark(tmp_path, ["cbs"], [2], timeout_s=30)
        assert len(records) == 2
        assert all(r.status == "solved" for r in records)
        assert all(r.soc is not None for r in records)

    def test_timeout_status_has_no_soc(self, tmp_path):
        for name in ("open8.map", "open8-01.scen"):
            (tmp_path / name).write_text((SUITE / name).read_text())
        records = run_benchmark(tmp_path, ["mddsat"], [4], timeout_s=1e-9)
        assert records[0].status == "timeout"
        assert records[0].soc is None

    def test_empty_suite(self, tmp_path):
        assert run_benchmark(tmp_path, ["cbs"], [2]) == []

    def test_missing_map_gives_error_record_and_continues(self, tmp_path):
        (tmp_path / "a.scen").write_text(
            "version 1\n0\tmissing.map\t8\t8\t0\t0\t3\t0\t3\n0\tmissing.map\t8\t8\t1\t1\t4\t1\t3\n"
        )
        (tmp_path / "b.scen").write_text((SUITE / "open8-01.scen").read_text())
        (tmp_path / "open8.map").write_text((SUITE / "open8.map").read_text())
        records = run_benchmark(tmp_path, ["cbs"], [2], timeout_s=30)
        assert [r.status for r in records] == ["error", "solved"]

    def test_per_count_limits_scenarios(self, tmp_path):
        for name in ("open8.map", "open8-01.scen", "open8-02.scen", "open8-03.scen"):
            (tmp_path / name).write_text((SUITE / name).read_text())
        records = run_benchmark(tmp_path, ["cbs"], [2], per_count=2, timeout_s=30)
        assert len(records) == 2

    def test_unknown_algorithm_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            run_benchmark(tmp_path, ["nope"], [2])

    def test_worker_pool_matches_serial_run(self, tmp_path):
        for name in ("open8.map", "open8-01.scen", "open8-02.scen"):
            (tmp_path / name).write_text((SUITE / name).read_text())
        serial = run_benchmark(tmp_path, ["cbs"], [2, 4], timeout_s=30)
        parallel = run_benchmark(tmp_path, ["cbs"], [2, 4], timeout_s=30, workers=2)
        strip = lambda rs: [
            (r.map_name, r.scen_name, r.agents, r.algo, r.status, r.soc)
            for r in rs
        ]
        assert strip(serial) == strip(parallel)

    def test_record_order_is_stable(self, tmp_path):
        for name in ("open8.map", "open8-01.scen", "open8-02.scen"):
            (tmp_path / name).write_text((SUITE / name).read_text())
        records = run_benchmark(tmp_path, ["cbs", "heuristic"], [2, 3], timeout_s=30)
        keys = [(r.scen_name, r.agents, r.algo) for r in records]
        assert keys == [
            ("open8-01.scen", 2, "cbs"), ("open8-01.scen", 2, "heuristic"),
            ("open8-01.scen", 3, "cbs"), ("open8-01.scen", 3, "heuristic"),
            ("open8-02.scen", 2, "cbs"), ("open8-02.scen", 2, "heuristic"),
            ("open8-02.scen", 3, "cbs"), ("open8-02.scen", 3, "heuristic"),
        ]


class TestCsvRoundTrip:
    def test_identical_records(self):
        records = [
            BenchRecord("m.map", "s1.scen", 2, "cbs", "solved", 0.12345678901234, 7, 0, 3),
            BenchRecord("m.map", "s2.scen", 4, "heuristic", "timeout", 128.0, None, 9, 12),
            BenchRecord("", "s3.scen", 3, "sparse", "error", 0.0, None, 0, 0),
        ]
        buf = io.StringIO()
        write_csv(records, buf)
        buf.seek(0)
        assert read_csv(buf) == records

    def test_header_columns(self):
        buf = io.StringIO()
        write_csv([], buf)
        assert buf.getvalue().strip() == (
            "map,scen,agents,algo,status,runtime_s,soc,sat_calls,conflicts"
        )

    def test_file_path_round_trip(self, tmp_path):
        records = [record()]
        out = tmp_path / "records.csv"
        write_csv(records, out)
        assert read_csv(out) == records


def test_discover_suite_sorted():
    scens = discover_suite(SUITE)
    assert [p.name for p in scens[:3]] == [
        "open8-01.scen", "open8-02.scen", "open8-03.scen",
    ]
    assert len(scens) == 10
