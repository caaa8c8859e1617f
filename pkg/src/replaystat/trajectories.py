"""Trajectory container and its on-disk format.

A trajectory is a 1-d state path sampled on a uniform time grid.  Files
store all trajectories of a dataset in one CSV with columns
``traj_id,step,state``; the step size and transition count live in a JSON
manifest next to the CSV (same path with a ``.manifest.json`` suffix), so
the CSV itself stays a plain long-format table.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import EmptyFile, ParseError, TrajectoryTooShort
from .validation import check_states

_CSV_HEADER = ["traj_id", "step", "state"]


@dataclass(frozen=True)
class Trajectory:
    """States on a uniform grid; L = len(states) - 1 transitions."""

    states: np.ndarray
    dt: float

    def __post_init__(self):
        object.__setattr__(self, "states", check_states(self.states))
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")

    @property
    def length(self) -> int:
        """Number of transitions."""
        return self.states.shape[0] - 1


def split_trajectory(traj: Trajectory, window: int) -> list[Trajectory]:
    """Overlapping windows of ``window`` states, advancing one step each.

    A trajectory with L transitions yields L - window + 2 pieces.
    """
    if window < 2:
        raise ValueError(f"window must be >= 2 states, got {window}")
    n_states = traj.states.shape[0]
    if window > n_states:
        raise TrajectoryTooShort(
            f"window of {window} states exceeds trajectory of {n_states}"
        )
    return [
        Trajectory(states=traj.states[j : j + window], dt=traj.dt)
        for j in range(n_states - window + 1)
    ]


def manifest_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".manifest.json")


def write_trajectories(csv_path, trajectories: list[Trajectory]) -> None:
    """Write a homogeneous trajectory set as CSV plus manifest."""
    if not trajectories:
        raise ValueError("nothing to write: empty trajectory list")
    dt = trajectories[0].dt
    L = trajectories[0].length
    for t in trajectories:
        if t.dt != dt or t.length != L:
            raise ValueError("trajectory files require uniform dt and length")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_HEADER)
        for tid, t in enumerate(trajectories):
            for step, s in enumerate(t.states):
                writer.writerow([tid, step, format(float(s), ".17g")])
    with open(manifest_path(csv_path), "w") as fh:
        json.dump({"dt": dt, "L": L}, fh)
        fh.write("\n")


def read_trajectories(csv_path) -> list[Trajectory]:
    """Read a trajectory CSV written by ``write_trajectories``."""
    mpath = manifest_path(csv_path)
    if not mpath.exists():
        raise ParseError(f"missing manifest {mpath}")
    with open(mpath) as fh:
        manifest = json.load(fh)
    dt = float(manifest["dt"])
    L = int(manifest["L"])

    rows: dict[int, dict[int, float]] = {}
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyFile(f"{csv_path} is empty")
        if [h.strip() for h in header] != _CSV_HEADER:
            raise ParseError(f"expected header {_CSV_HEADER}, got {header}", line=1)
        lineno = 1
        for row in reader:
            lineno += 1
            try:
                tid = int(row[0])
                step = int(row[1])
                state = float(row[2])
            except (ValueError, IndexError):
                raise ParseError(f"malformed row at line {lineno}: {row}", line=lineno) from None
            if not np.isfinite(state):
                raise ParseError(f"non-finite state at line {lineno}", line=lineno)
            rows.setdefault(tid, {})[step] = state
    if not rows:
        raise EmptyFile(f"{csv_path} has a header but no rows")

    out = []
    for tid in sorted(rows):
        steps = rows[tid]
        if sorted(steps) != list(range(L + 1)):
            raise ParseError(f"trajectory {tid} does not cover steps 0..{L}")
        out.append(Trajectory(states=np.array([steps[j] for j in range(L + 1)]), dt=dt))
    return out
