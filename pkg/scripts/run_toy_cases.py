"""
Toy trade-off runs through the CLI.

Cases:
1. Permissive controls - uniform alpha and beta, no optimization
2. Follower only - best alpha for the uniform beta
3. Stackelberg - beta in [0, 1]
4. Stackelberg relaxed - beta in [0.2, 0.8]
5. Report - comparison table ordered by J_P, then the trade-off ordering check
   (restrictive, relaxed and follower: J_P non-decreasing, J_T non-increasing)
"""

import subprocess
import sys
import time
from pathlib import Path

import pandas as pd

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

SCENARIO = "data/scenarios/toy_stackelberg.json"
RUNS_DIR = Path("runs/toy_cases")

TOY_CASES = [
    (["simulate", "--case", "permissive"], "permissive", "Case 1: Permissive controls"),
    (["follower", "--case", "follower"], "follower", "Case 2: Follower response to uniform beta"),
    (["stackelberg", "--case", "restrictive"], "restrictive", "Case 3: Stackelberg, beta in [0, 1]"),
    (["stackelberg", "--relaxed", "--case", "relaxed"], "relaxed", "Case 4: Stackelberg, beta in [0.2, 0.8]"),
]


def run_cli(args) -> subprocess.CompletedProcess:
    return subprocess.run(
        ["uv", "run", "main.py", *args],
        cwd=project_root,
        capture_output=True,
        text=True,
    )


def trade_off_holds(frame: pd.DataFrame) -> bool:
    """Restrictive <= relaxed <= follower in J_P, and the reverse in J_T."""
    order = ["restrictive", "relaxed", "follower"]
    if not set(order) <= set(frame.index):
        return False
    jp = frame.loc[order, "JP"].to_numpy()
    jt = frame.loc[order, "JT"].to_numpy()
    return bool((jp[:-1] <= jp[1:]).all() and (jt[:-1] >= jt[1:]).all())


def main():
    """Run every case, then the report, and print a summary."""
    print("\n" + "=" * 70)
    print("Traffic-Pollution Stackelberg - Toy Cases")
    print("=" * 70)

    results = []
    run_dirs = []
    for args, label, description in TOY_CASES:
        out_dir = RUNS_DIR / label
        print(f"\n{description}")
        started = time.time()
        completed = run_cli([*args, "--scenario", SCENARIO, "--out", str(out_dir)])
        elapsed = time.time() - started
        ok = completed.returncode == 0
        print(completed.stdout.strip())
        if not ok:
            print(f"[FAIL] exit {completed.returncode}\n{completed.stderr[-500:]}")
        else:
            print(f"[OK] {elapsed:.1f} s")
        results.append((description, ok))
        run_dirs.append(str(out_dir))

    print("\nCase 5: Report")
    completed = run_cli(["report", "--runs", *run_dirs, "--out", str(RUNS_DIR / "report")])
    results.append(("Case 5: Report", completed.returncode == 0))
    comparison = project_root / RUNS_DIR / "report" / "comparison.csv"
    if comparison.exists():
        frame = pd.read_csv(comparison).set_index("case")
        for case, row in frame.iterrows():
            print(f"  {case:<12} JP={row['JP']:.6e}  JT={row['JT']:.6e}")
        results.append(("Trade-off ordering", trade_off_holds(frame)))

    print(f"\n{'=' * 70}")
    passed = sum(1 for _, ok in results if ok)
    for description, ok in results:
        print(f"{'PASS' if ok else 'FAIL'}: {description}")
    print(f"\nResults: {passed}/{len(results)} runs succeeded")
    print(f"{'=' * 70}\n")
    return 0 if passed == len(results) else 1


if __name__ == "__main__":
    sys.exit(main())
