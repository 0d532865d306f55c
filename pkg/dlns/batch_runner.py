"""
Batch runner for DLNS benchmarks
Dispatches independent (instance, algorithm) jobs to an executor from asyncio
"""

import asyncio
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import dlns_config
from dlns.baselines import dsa_b, exact_trace
from dlns.dcop import DcopInstance
from dlns.engine import TerminationRule, run
from dlns.errors import ConfigError
from dlns.strategies import get_registry
from dlns.trace import RunTrace

logger = logging.getLogger(__name__)


@dataclass
class SolveOptions:
    algorithm: str = "tdbr"
    destroy: str = "random"
    p_destroy: Optional[float] = None
    iterations: Optional[int] = None
    wall_timeout: Optional[float] = None
    simulated_timeout: Optional[float] = None
    gap_threshold: Optional[float] = None
    seed: int = 0
    t_cc: Optional[float] = None
    t_msg: Optional[float] = None
    width_cap: Optional[int] = None
    bound_rule: Optional[str] = None
    init_mode: Optional[str] = None

    def termination(self) -> TerminationRule:
        iterations = self.iterations
        if all(v is None for v in (iterations, self.wall_timeout, self.simulated_timeout, self.gap_threshold)):
            iterations = dlns_config.get_solver_config()["iterations"]
        return TerminationRule(iterations, self.wall_timeout, self.simulated_timeout, self.gap_threshold)


def solve_instance(inst: DcopInstance, options: SolveOptions) -> RunTrace:
    """Run one algorithm on one instance"""
    algorithm = options.algorithm
    if algorithm == "exact":
        return exact_trace(inst)
    if algorithm == "dsa":
        return dsa_b(inst, seed=options.seed, term=options.termination(),
                     init_mode=options.init_mode or "random", t_cc=options.t_cc, t_msg=options.t_msg)
    if algorithm not in ("tdbr", "dpop-dbr"):
        raise ConfigError(f"unknown algorithm {algorithm!r}")
    registry = get_registry()
    repair_params = {"width_cap": options.width_cap} if algorithm == "dpop-dbr" else {}
    destroy_params: Dict[str, Any] = {}
    if options.destroy == "random":
        destroy_params = {"p_destroy": options.p_destroy, "seed": options.seed}
    elif options.p_destroy is not None:
        raise ConfigError("--p-destroy only applies to the random destroy strategy")
    return run(
        inst,
        registry.create_repair(algorithm, **repair_params),
        registry.create_destroy(options.destroy, **destroy_params),
        options.termination(),
        seed=options.seed,
        init_mode=options.init_mode,
        bound_rule=options.bound_rule,
        t_cc=options.t_cc,
        t_msg=options.t_msg,
    )


@dataclass
class BenchJob:
    name: str
    instance: DcopInstance
    options: SolveOptions = field(default_factory=SolveOptions)


class BatchRunner:
    def __init__(self, max_workers: Optional[int] = None, solver: Callable[[DcopInstance, SolveOptions], RunTrace] = solve_instance):
        self.max_workers = dlns_config.get_bench_config()["batch_workers"] if max_workers is None else max_workers
        self.solver = solver

    async def _run_job(self, loop, executor, job: BenchJob) -> RunTrace:
        trace = await loop.run_in_executor(executor, self.solver, job.instance, job.options)
        logger.info("job %s finished: best LB %s", job.name, trace.best_lb)
        return trace

    async def run_batch_async(self, jobs: List[BenchJob]) -> Dict[str, RunTrace]:
        """Run all jobs concurrently; results keyed by job name in submission order"""
        loop = asyncio.get_running_loop()
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            traces = await asyncio.gather(*(self._run_job(loop, executor, job) for job in jobs))
        return {job.name: trace for job, trace in zip(jobs, traces)}

    def run_batch(self, jobs: List[BenchJob]) -> Dict[str, RunTrace]:
        names = [job.name for job in jobs]
        if len(set(names)) != len(names):
            raise ConfigError("batch job names must be unique")
        return asyncio.run(self.run_batch_async(jobs))


# Global instance
batch_runner = None


def get_batch_runner() -> BatchRunner:
    global batch_runner
    if batch_runner is None:
        batch_runner = BatchRunner()
    return batch_runner


def run_batch(jobs: List[BenchJob]) -> Dict[str, RunTrace]:
    return get_batch_runner().run_batch(jobs)
