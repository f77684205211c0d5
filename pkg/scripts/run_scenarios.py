"""Run every scenario in ``scenarios/`` and write the reports to ``runs/``."""

import sys
from pathlib import Path

from outwave.experiments import emit_report, load_scenario, run_experiment

ROOT = Path(__file__).resolve().parents[1]


def main():
    status = 0
    for path in sorted((ROOT / "scenarios").glob("*.toml")):
        sc = load_scenario(path)
        rep = run_experiment(sc)
        emit_report(rep, ROOT / "runs" / sc.label)
        verdicts = ", ".join(f"{v.criterion}={'ok' if v.passed else 'FAIL'}" for v in rep.verdicts)
        print(f"{sc.label:18s} {'PASS' if rep.passed else 'FAIL'}  {verdicts}")
        for e in rep.errors:
            print(f"{'':18s} error: {e}")
        status |= not rep.passed
    return int(status)


if __name__ == "__main__":
    sys.exit(main())
