"""Result writers: trajectory CSV, plot data, JSON reports and error records."""

import json
import logging
from pathlib import Path
from typing import List

import numpy as np
import pandas as pd

from src.models.entities import Trajectory
from src.models.errors import ToolkitError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'


def trajectory_columns(n: int) -> List[str]:
    return (
        ['t']
        + [f'x_{i}' for i in range(1, n + 1)]
        + [f'o_{i}' for i in range(1, n + 1)]
        + ['R_t_o', 'n_switches_cum']
    )


def trajectory_frame(trajectory: Trajectory) -> pd.DataFrame:
    n = trajectory.final_state.n
    data = np.column_stack([
        np.asarray(trajectory.times),
        trajectory.x_history,
        trajectory.o_history,
        np.asarray(trajectory.r_values),
    ])
    frame = pd.DataFrame(data, columns=trajectory_columns(n)[:-1])
    frame['n_switches_cum'] = trajectory.cumulative_switches()
    return frame


class ResultWriter:
    """Writes run artifacts into one output directory."""

    TRAJECTORY_FILE = 'trajectory.csv'
    SUMMARY_FILE = 'summary.json'
    PLOT_FILE = 'plot_data.txt'
    ERROR_FILE = 'error.json'

    def __init__(self, out_dir: str):
        self.out_dir = Path(out_dir)
        self._ensure_directory()

    def _ensure_directory(self):
        """Ensure output directory exists."""
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def write_trajectory(self, trajectory: Trajectory) -> Path:
        path = self.out_dir / self.TRAJECTORY_FILE
        trajectory_frame(trajectory).to_csv(path, index=False, float_format=FLOAT_FORMAT)
        logger.info(f"Trajectory written: {path} ({len(trajectory.times)} rows)")
        return path

    def write_plot_data(self, trajectory: Trajectory) -> Path:
        """Whitespace-separated columns t, x_1..x_n, o_1..o_n, R_t_o for plotting tools."""
        path = self.out_dir / self.PLOT_FILE
        n = trajectory.final_state.n
        data = np.column_stack([
            np.asarray(trajectory.times), trajectory.x_history, trajectory.o_history,
            np.asarray(trajectory.r_values),
        ])
        np.savetxt(path, data, fmt=FLOAT_FORMAT, header=' '.join(trajectory_columns(n)[:-1]))
        logger.info(f"Plot data written: {path}")
        return path

    def write_json(self, name: str, payload: dict) -> Path:
        path = self.out_dir / name
        with open(path, 'w') as f:
            json.dump(payload, f, indent=2)
        logger.info(f"Report written: {path}")
        return path

    def write_summary(self, summary: dict) -> Path:
        return self.write_json(self.SUMMARY_FILE, summary)

    def write_error(self, error: Exception) -> Path:
        exit_code = error.exit_code if isinstance(error, ToolkitError) else 1
        return self.write_json(self.ERROR_FILE, {
            'error': type(error).__name__,
            'message': str(error),
            'exit_code': exit_code,
        })
