#!/usr/bin/env python3
"""
Quick benchmark launcher for DLNS

Checks the environment, then runs every configured algorithm on a few
generated instances per family and prints a pool summary for each.
"""

import importlib.util
import sys
from pathlib import Path

import dlns_config
from dlns.batch_runner import BenchJob, SolveOptions, run_batch
from dlns.errors import DlnsError
from dlns.generators import GENERATORS
from dlns.trace import summarize_pool

# small enough for the exact oracle
QUICK_FAMILIES = {
    "random": {"n": 8, "p1": 0.4, "d": 4},
    "scale-free": {"n": 8, "d": 4},
    "grid": {"rows": 3, "cols": 3, "d": 4},
    "meeting": {"m_meetings": 5, "horizon": 12},
}
QUICK_ITERATIONS = 30


def check_dependencies():
    """Check if all required packages are importable"""
    required_packages = ["numpy", "networkx", "psutil", "pytest"]

    missing_packages = [p for p in required_packages if importlib.util.find_spec(p) is None]
    for package in required_packages:
        print(f"{'❌' if package in missing_packages else '✅'} {package}")

    if missing_packages:
        print(f"Missing packages: {', '.join(missing_packages)}")
        print("Install them with: pip install -r requirements.txt")
        return False
    return True


def setup_environment():
    """Make sure we run from the project root"""
    print("🚀 Checking the DLNS workspace...")
    current_dir = Path.cwd()
    required_files = ["main.py", "dlns_config.py", "dlns/engine.py", "dlns/tdbr.py", "dlns/dpop_dbr.py"]

    missing_files = [f for f in required_files if not (current_dir / f).exists()]
    if missing_files:
        print(f"❌ Missing required files: {', '.join(missing_files)}")
        print("Please run this script from the project root directory.")
        return False

    print("✅ Environment setup complete!")
    return True


def _jobs(family, seed):
    inst = GENERATORS[family](seed=seed, **QUICK_FAMILIES[family])
    algorithms = dlns_config.get_bench_config()["algorithms"]
    return [
        BenchJob(algo, inst, SolveOptions(algorithm=algo, iterations=QUICK_ITERATIONS, seed=seed))
        for algo in algorithms
    ]


def run_quick_bench(seed):
    print(f"📊 Running {QUICK_ITERATIONS} iterations per algorithm (seed {seed})")
    print("-" * 60)
    for family in QUICK_FAMILIES:
        traces = run_batch(_jobs(family, seed))
        print(f"\n{family}:")
        for algo, row in summarize_pool(traces).items():
            rho = "-" if row["rho"] is None else f"{row['rho']:.3f}"
            ub = row["best_ub"] if row["best_ub"] is not None else "-"
            print(f"  {algo:<9} LB {row['best_lb']:>10}  UB {ub:>10}  rho {rho:>7}  msgs {row['messages']}")
    return True


def main():
    print("=" * 60)
    print("🧭 DLNS - QUICK BENCHMARK")
    print("=" * 60)
    print()

    if not check_dependencies():
        print("❌ Failed dependency check. Exiting...")
        sys.exit(1)

    if not setup_environment():
        print("❌ Failed to setup environment. Exiting...")
        sys.exit(1)

    dlns_config.configure_logging()
    try:
        run_quick_bench(dlns_config.get_default_seed())
    except KeyboardInterrupt:
        print("\n🛑 Benchmark interrupted")
    except DlnsError as e:
        print(f"❌ {type(e).__name__}: {e}")
        sys.exit(1)


if __name__ == "__main__":
    main()
