"""Result validation script for run output directories."""

import json
import sys
from pathlib import Path
from typing import List

import numpy as np
import pandas as pd

from src.utils.writers import ResultWriter, trajectory_columns

REQUIRED_SUMMARY_FIELDS = (
    'regime', 'R_min', 'R_max', 'final_sup_x', 'outcome', 'opinion_outcome', 'equilibria', 'plan',
)


class ResultValidator:
    """Validates the artifacts written by a simulation run."""

    def __init__(self, out_dir: str, box_tol: float = 0.0):
        self.out_dir = Path(out_dir)
        self.box_tol = box_tol
        self.issues: List[str] = []
        self.stats = {}

    def validate_all(self) -> List[str]:
        """Run all validation checks and return the list of issues."""
        print("=" * 80)
        print("SIMULATION RESULT VALIDATION REPORT")
        print("=" * 80)

        frame = self.validate_trajectory_schema()
        if frame is not None:
            self.validate_times(frame)
            self.validate_box(frame)
        self.validate_summary()

        self.print_report()
        return self.issues

    def _fail(self, message: str):
        self.issues.append(message)
        print(f"  [WARN] {message}")

    def validate_trajectory_schema(self):
        """Check the trajectory CSV header."""
        print("\n[1] TRAJECTORY SCHEMA CHECK")
        print("-" * 80)

        path = self.out_dir / ResultWriter.TRAJECTORY_FILE
        if not path.exists():
            self._fail(f"Missing {path.name}")
            return None
        frame = pd.read_csv(path)
        n = (len(frame.columns) - 3) // 2
        expected = trajectory_columns(n)
        if list(frame.columns) != expected:
            self._fail(f"Unexpected columns {list(frame.columns)[:6]}... (expected {expected[:6]}...)")
            return None
        self.stats['rows'] = len(frame)
        self.stats['n'] = n
        print(f"  [PASS] Columns t, x_1..x_{n}, o_1..o_{n}, R_t_o, n_switches_cum")
        print(f"  [INFO] Rows: {len(frame)}")
        return frame

    def validate_times(self, frame: pd.DataFrame):
        """Check that times strictly increase and switch counts never decrease."""
        print("\n[2] TIME AXIS CHECK")
        print("-" * 80)

        times = frame['t'].to_numpy()
        if np.all(np.diff(times) > 0):
            print("  [PASS] Times strictly increasing")
        else:
            self._fail("Times are not strictly increasing")

        switches = frame['n_switches_cum'].to_numpy()
        if np.all(np.diff(switches) >= 0):
            print(f"  [PASS] Switch counter non-decreasing (total {int(switches[-1])})")
        else:
            self._fail("Cumulative switch count decreases")

    def validate_box(self, frame: pd.DataFrame):
        """Check x in [0,1] and o in [-0.5,0.5] on every row."""
        print("\n[3] BOX CONSTRAINT CHECK")
        print("-" * 80)

        n = self.stats['n']
        x = frame[[f'x_{i}' for i in range(1, n + 1)]].to_numpy()
        o = frame[[f'o_{i}' for i in range(1, n + 1)]].to_numpy()
        bad_x = int(np.sum(np.any((x < -self.box_tol) | (x > 1 + self.box_tol), axis=1)))
        bad_o = int(np.sum(np.any((o < -0.5 - self.box_tol) | (o > 0.5 + self.box_tol), axis=1)))
        if bad_x == 0:
            print("  [PASS] Infection fractions within [0, 1]")
        else:
            self._fail(f"Rows with x outside [0, 1]: {bad_x}")
        if bad_o == 0:
            print("  [PASS] Opinions within [-0.5, 0.5]")
        else:
            self._fail(f"Rows with o outside [-0.5, 0.5]: {bad_o}")

    def validate_summary(self):
        """Check the summary report fields."""
        print("\n[4] SUMMARY CHECK")
        print("-" * 80)

        path = self.out_dir / ResultWriter.SUMMARY_FILE
        if not path.exists():
            self._fail(f"Missing {path.name}")
            return
        with open(path) as f:
            summary = json.load(f)
        missing = [k for k in REQUIRED_SUMMARY_FIELDS if k not in summary]
        if missing:
            self._fail(f"Summary missing fields: {missing}")
            return
        print("  [PASS] Summary has all required fields")
        print(f"  [INFO] Regime: {summary['regime']} (R_min={summary['R_min']:.4g}, R_max={summary['R_max']:.4g})")
        print(f"  [INFO] Outcome: {summary['outcome']}, opinions: {summary['opinion_outcome']}")
        print(f"  [INFO] Equilibria reported: {len(summary['equilibria'])}")
        if summary['R_min'] > summary['R_max'] + 1e-9:
            self._fail("R_min exceeds R_max")

    def print_report(self):
        """Print summary report."""
        print("\n" + "=" * 80)
        print("VALIDATION COMPLETE")
        print("=" * 80)
        if self.issues:
            print(f"\n[FAIL] {len(self.issues)} issue(s) found")
        else:
            print("\n[SUCCESS] Result validation successful!")


if __name__ == '__main__':
    validator = ResultValidator(sys.argv[1] if len(sys.argv) > 1 else 'output')
    sys.exit(1 if validator.validate_all() else 0)
