"""Time-stamped state sequences and their on-disk serialization.

A :class:`Trajectory` stores either a stack of complex matrices
(shape ``(N, n, n)``) or a stack of named real coordinate vectors
(shape ``(N, k)``).  Serialization flattens complex matrices
column-major into ``<name>_re_<row>_<col>`` / ``<name>_im_<row>_<col>``
columns; real coordinate stacks use their explicit column names.  All
floats are written with shortest round-trip formatting so repeated runs
produce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


def format_float(x) -> str:
    """Shortest decimal string that round-trips to the same float."""
    return repr(float(x))


@dataclass
class Trajectory:
    """Sampled states of one integration run.

    times : (N,) array of sample times.
    states : (N, n, n) complex matrices or (N, k) real vectors.
    name : column prefix for matrix states.
    column_names : names of the k coordinates when states are vectors.
    meta : free-form metadata (step size, warnings, singularity record).
    """

    times: np.ndarray
    states: np.ndarray
    name: str = "A"
    column_names: tuple | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states)
        if len(self.times) != len(self.states):
            raise ValueError("times and states lengths differ")

    @property
    def n_samples(self) -> int:
        return len(self.times)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def headers(self) -> list[str]:
        """Column headers, excluding the leading time column."""
        if self.states.ndim == 3:
            n = self.states.shape[1]
            cols = []
            for j in range(n):  # column-major flattening
                for i in range(n):
                    cols.append(f"{self.name}_re_{i}_{j}")
                    cols.append(f"{self.name}_im_{i}_{j}")
            return cols
        if self.column_names is None:
            return [f"{self.name}_{k}" for k in range(self.states.shape[1])]
        return list(self.column_names)

    def rows(self):
        """Yield one list of floats per sample, excluding the time."""
        if self.states.ndim == 3:
            n = self.states.shape[1]
            for s in self.states:
                row = []
                for j in range(n):
                    for i in range(n):
                        row.append(float(s[i, j].real))
                        row.append(float(s[i, j].imag))
                yield row
        else:
            for s in self.states:
                yield [float(v) for v in s]


def write_csv(traj: Trajectory, path) -> None:
    """Write a trajectory as CSV with a leading ``t`` column."""
    lines = [",".join(["t"] + traj.headers())]
    for t, row in zip(traj.times, traj.rows()):
        lines.append(",".join([format_float(t)] + [format_float(v) for v in row]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(traj: Trajectory, path) -> None:
    """Write a trajectory as JSON: time list plus per-column value lists."""
    headers = traj.headers()
    columns = {h: [] for h in headers}
    for row in traj.rows():
        for h, v in zip(headers, row):
            columns[h].append(v)
    doc = {"t": [float(t) for t in traj.times], "columns": columns}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
