#!/usr/bin/env python3
"""
Tests for run traces, normalization and pool summaries
"""

import pytest

from dlns.errors import ConfigError
from dlns.trace import (
    RunTrace, TraceRow, bucket_edges, compute_rho, first_feasible_iteration, normalize_quality, read_csv,
    summarize_pool, trace_to_csv, write_csv,
)
from dlns.utility import NEG_INF


def _row(k, sim_time, best_lb, best_ub, msgs=1):
    return TraceRow(k=k, sim_time=sim_time, wall_ms=0.5, lb=best_lb, ub=best_ub, best_lb=best_lb,
                    best_ub=best_ub, rho=compute_rho(best_lb, best_ub), msgs=msgs, payload=2 * msgs,
                    max_payload=2, ccs=3)


def _pool():
    bounded = RunTrace("tdbr", rows=[_row(0, 0.0, 10.0, 50.0), _row(1, 100.0, 30.0, 40.0)])
    local = RunTrace("dsa", rows=[_row(0, 0.0, 20.0, None)])
    return {"tdbr": bounded, "dsa": local}


def test_rho():
    assert compute_rho(38.0, 42.0) == pytest.approx(42.0 / 38.0)
    assert compute_rho(0.0, 5.0) is None
    assert compute_rho(5.0, None) is None
    assert compute_rho(NEG_INF, 5.0) is None


def test_first_feasible_iteration():
    trace = RunTrace("tdbr", rows=[_row(0, 0.0, NEG_INF, 9.0), _row(1, 1.0, NEG_INF, 9.0), _row(2, 2.0, 4.0, 9.0)])
    assert first_feasible_iteration(trace) == 2
    assert first_feasible_iteration(RunTrace("tdbr", rows=[_row(0, 0.0, NEG_INF, 9.0)])) is None


def test_csv_keeps_neg_inf_and_missing_bounds(tmp_path):
    trace = RunTrace("dsa", rows=[_row(0, 0.0, NEG_INF, None), _row(1, 250.0, 12.5, None, msgs=4)])
    path = tmp_path / "dsa.csv"
    write_csv(trace, path)
    text = path.read_text(encoding="utf-8")
    assert text.splitlines()[0] == "k,sim_time,wall_ms,lb,ub,best_lb,best_ub,rho,msgs,payload,max_payload,ccs"
    assert text.splitlines()[1].startswith("0,0.000000,0.500000,-inf,,-inf,,,1,2,2,3")
    assert text == trace_to_csv(trace)
    loaded = read_csv(path, algorithm="dsa")
    assert loaded.rows[0].lb is NEG_INF
    assert loaded.rows[0].ub is None
    assert loaded.rows[1].best_lb == pytest.approx(12.5)
    assert loaded.rows[1].msgs == 4


def test_csv_header_is_checked(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("k,lb\n0,1\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        read_csv(path)


def test_buckets_are_log_spaced():
    edges = bucket_edges(_pool(), "sim_time", buckets=3)
    assert edges == pytest.approx([1.0, 10.0, 100.0])
    assert bucket_edges(_pool(), "messages", buckets=2) == pytest.approx([1.0, 2.0])


def test_normalization_maps_the_best_to_one():
    result = normalize_quality(_pool(), axis="sim_time", buckets=3)
    assert result["axis"] == "sim_time"
    assert result["lb"]["tdbr"] == pytest.approx([0.0, 0.0, 1.0])
    assert result["lb"]["dsa"] == pytest.approx([1.0, 1.0, 0.0])
    # a single upper bound ties with itself; dsa has none
    assert result["ub"] == {"tdbr": [1.0, 1.0, 1.0]}


def test_normalization_of_infeasible_traces():
    pool = {
        "a": RunTrace("a", rows=[_row(0, 0.0, NEG_INF, None)]),
        "b": RunTrace("b", rows=[_row(0, 0.0, 5.0, None)]),
    }
    result = normalize_quality(pool, buckets=2)
    assert result["lb"]["a"] == [0.0, 0.0]
    assert result["lb"]["b"] == [1.0, 1.0]
    with pytest.raises(ConfigError):
        normalize_quality({})
    with pytest.raises(ConfigError):
        normalize_quality(pool, axis="wall")


def test_pool_summary():
    summary = summarize_pool(_pool())
    assert summary["tdbr"]["epsilon"] == pytest.approx(1.0)
    assert summary["dsa"]["epsilon"] == pytest.approx(20.0 / 30.0)
    assert summary["tdbr"]["rho"] == pytest.approx(40.0 / 30.0)
    assert summary["dsa"]["rho"] is None
    assert summary["dsa"]["best_ub"] is None
    assert summary["tdbr"]["messages"] == 2
    with pytest.raises(ConfigError):
        summarize_pool({})


if __name__ == "__main__":
    print("🧪 Testing run traces")
    print("=" * 50)
    raise SystemExit(pytest.main([__file__, "-v"]))
