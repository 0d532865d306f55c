"""
Run traces
Per-iteration bound records, CSV/JSON writers, quality normalization across
an algorithm pool and pool summaries.
"""

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, TextIO, Union

import numpy as np

import dlns_config
from dlns.dcop import Assignment
from dlns.errors import ConfigError
from dlns.utility import NEG_INF, NEG_INF_TOKEN, ExtendedUtility, format_utility, is_neg_inf

logger = logging.getLogger(__name__)


@dataclass
class TraceRow:
    k: int
    sim_time: float
    wall_ms: float
    lb: ExtendedUtility
    ub: Optional[ExtendedUtility]
    best_lb: ExtendedUtility
    best_ub: Optional[ExtendedUtility]
    rho: Optional[float]
    msgs: int
    payload: int
    max_payload: int
    ccs: int
    # not part of the CSV schema
    max_agent_ccs: int = 0


@dataclass
class RunTrace:
    algorithm: str
    rows: List[TraceRow] = field(default_factory=list)
    best_solution: Assignment = field(default_factory=dict)
    instance_name: str = "instance"
    seed: int = 0
    infeasible: bool = False

    @property
    def final(self) -> TraceRow:
        return self.rows[-1]

    @property
    def best_lb(self) -> ExtendedUtility:
        return self.final.best_lb

    @property
    def best_ub(self) -> Optional[ExtendedUtility]:
        return self.final.best_ub

    @property
    def iterations(self) -> int:
        return self.final.k

    def cumulative_messages(self) -> List[int]:
        return np.cumsum([row.msgs for row in self.rows]).tolist()


def compute_rho(best_lb: ExtendedUtility, best_ub: Optional[ExtendedUtility]) -> Optional[float]:
    """best_ub / best_lb, or None while best_lb <= 0 or no upper bound exists"""
    if best_ub is None or is_neg_inf(best_lb) or best_lb <= 0 or is_neg_inf(best_ub):
        return None
    return best_ub / best_lb


def first_feasible_iteration(trace: RunTrace) -> Optional[int]:
    """First iteration whose best lower bound is finite"""
    for row in trace.rows:
        if not is_neg_inf(row.best_lb):
            return row.k
    return None


def _cell(value: Any, float_format: str) -> str:
    if value is None:
        return ""
    if is_neg_inf(value):
        return NEG_INF_TOKEN
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return float_format.format(float(value))


def write_csv(trace: RunTrace, out: Union[str, Path, TextIO]) -> None:
    config = dlns_config.get_bench_config()
    header = config["csv_header"]
    fmt = config["float_format"]

    def emit(handle: TextIO):
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in trace.rows:
            writer.writerow([_cell(getattr(row, column), fmt) for column in header])

    if isinstance(out, (str, Path)):
        with open(out, "w", encoding="utf-8", newline="") as handle:
            emit(handle)
    else:
        emit(out)


def trace_to_csv(trace: RunTrace) -> str:
    buffer = io.StringIO()
    write_csv(trace, buffer)
    return buffer.getvalue()


def _parse_cell(raw: str, integral: bool):
    if raw == "":
        return None
    if raw == NEG_INF_TOKEN:
        return NEG_INF
    return int(raw) if integral else float(raw)


def read_csv(path: Union[str, Path], algorithm: str = "unknown") -> RunTrace:
    header = dlns_config.get_bench_config()["csv_header"]
    integral = {"k", "msgs", "payload", "max_payload", "ccs"}
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        found = next(reader, None)
        if found != header:
            raise ConfigError(f"{path}: unexpected trace header {found}")
        rows = []
        for line in reader:
            values = {name: _parse_cell(raw, name in integral) for name, raw in zip(header, line)}
            rows.append(TraceRow(**values))
    return RunTrace(algorithm=algorithm, rows=rows)


def _series_value(trace: RunTrace, axis: str, position: float, column: str) -> Optional[ExtendedUtility]:
    """Value of `column` in the last row reached at `position` along the axis"""
    if axis == "sim_time":
        positions = [row.sim_time for row in trace.rows]
    elif axis == "messages":
        positions = trace.cumulative_messages()
    else:
        raise ConfigError(f"unknown normalization axis {axis!r}")
    idx = int(np.searchsorted(positions, position, side="right")) - 1
    if idx < 0:
        return None
    return getattr(trace.rows[idx], column)


def bucket_edges(traces: Mapping[str, RunTrace], axis: str = "sim_time", buckets: Optional[int] = None) -> List[float]:
    """Log-spaced sample points covering every trace along the axis"""
    buckets = buckets or dlns_config.get_bench_config()["normalization_buckets"]
    ends = []
    for trace in traces.values():
        ends.append(trace.final.sim_time if axis == "sim_time" else trace.cumulative_messages()[-1])
    stop = max(max(ends), 1.0)
    return np.geomspace(1.0, stop, buckets).tolist()


def _minmax(values: Dict[str, Optional[ExtendedUtility]], higher_is_better: bool) -> Dict[str, Optional[float]]:
    finite = {name: float(v) for name, v in values.items() if v is not None and not is_neg_inf(v)}
    out: Dict[str, Optional[float]] = {}
    if not finite:
        return {name: None for name in values}
    lo, hi = min(finite.values()), max(finite.values())
    for name, v in values.items():
        if v is None:
            out[name] = None
        elif is_neg_inf(v):
            out[name] = 0.0
        elif hi == lo:
            out[name] = 1.0
        else:
            scaled = (finite[name] - lo) / (hi - lo)
            out[name] = scaled if higher_is_better else 1.0 - scaled
    return out


def normalize_quality(traces: Mapping[str, RunTrace], axis: str = "sim_time",
                      buckets: Optional[int] = None) -> Dict[str, Any]:
    """Per-bucket min-max normalization of LB and UB series across the pool.

    1 is best: the highest lower bound and the lowest upper bound. Ties map to 1.
    Traces without upper bounds are left out of the UB series.
    """
    if not traces:
        raise ConfigError("cannot normalize an empty pool")
    points = bucket_edges(traces, axis, buckets)
    with_ub = {name: t for name, t in traces.items() if any(row.ub is not None for row in t.rows)}
    lb_series: Dict[str, List[Optional[float]]] = {name: [] for name in traces}
    ub_series: Dict[str, List[Optional[float]]] = {name: [] for name in with_ub}
    for point in points:
        lbs = {name: _series_value(t, axis, point, "best_lb") for name, t in traces.items()}
        for name, value in _minmax(lbs, higher_is_better=True).items():
            lb_series[name].append(value)
        if with_ub:
            ubs = {name: _series_value(t, axis, point, "best_ub") for name, t in with_ub.items()}
            for name, value in _minmax(ubs, higher_is_better=False).items():
                ub_series[name].append(value)
    return {"axis": axis, "points": points, "lb": lb_series, "ub": ub_series}


def summarize_pool(traces: Mapping[str, RunTrace]) -> Dict[str, Dict[str, Any]]:
    """Final bounds, rho, epsilon and costs per algorithm.

    epsilon = own final quality / best final quality in the pool, so the pool best reads 1.
    """
    if not traces:
        raise ConfigError("cannot summarize an empty pool")
    finals = {name: t.best_lb for name, t in traces.items()}
    feasible = [float(v) for v in finals.values() if not is_neg_inf(v)]
    pool_best = max(feasible) if feasible else None
    summary = {}
    for name, trace in traces.items():
        own = finals[name]
        if pool_best is None or pool_best <= 0:
            epsilon = None
        elif is_neg_inf(own):
            epsilon = 0.0
        else:
            epsilon = own / pool_best
        summary[name] = {
            "best_lb": format_utility(trace.best_lb),
            "best_ub": None if trace.best_ub is None else format_utility(trace.best_ub),
            "rho": trace.final.rho,
            "epsilon": epsilon,
            "iterations": trace.iterations,
            "sim_time": trace.final.sim_time,
            "messages": trace.cumulative_messages()[-1],
            "first_feasible": first_feasible_iteration(trace),
        }
    return summary


def write_summary(summary: Mapping[str, Any], path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
