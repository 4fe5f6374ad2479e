"""Expert score-matrix files: the exchange format for externally trained models.

Layout::

    expert,<name>,rows,<N>,stochastic,<0|1>
    v0,v1,...,v9        (N lines, 17 significant digits)

Row ``i`` always refers to row ``i`` of the canonical test batch.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

NUM_CLASSES = 10
ROW_SUM_TOL = 1e-3


class ExpertFormatError(ValueError):
    pass


@dataclass(frozen=True)
class ProbMatrix:
    scores: np.ndarray
    expert_name: str = "expert"
    row_stochastic: bool = True

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64)
        if s.ndim != 2 or s.shape[1] != NUM_CLASSES:
            raise ExpertFormatError(f"score matrix must be N x 10, got {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ExpertFormatError("non-finite score")
        if np.any(s < 0):
            raise ExpertFormatError("negative score")
        s.setflags(write=False)
        object.__setattr__(self, "scores", s)

    def __len__(self) -> int:
        return self.scores.shape[0]


def _check_name(name: str) -> None:
    if not name or any(ch in name for ch in ",\n\r"):
        raise ExpertFormatError(f"invalid expert name {name!r}")


def export_expert(pm: ProbMatrix, path) -> None:
    _check_name(pm.expert_name)
    lines = [f"expert,{pm.expert_name},rows,{len(pm)},stochastic,{int(pm.row_stochastic)}"]
    lines += [",".join(f"{v:.17g}" for v in row) for row in pm.scores]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_expert(path, expected_rows: int | None = None) -> ProbMatrix:
    """Read and validate an expert file.

    Stochastic rows must sum to 1 within 1e-3 and are renormalized on load.
    Errors name the offending (1-based) data row.
    """
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split(",")
        if (len(header) != 6 or header[0] != "expert" or header[2] != "rows"
                or header[4] != "stochastic" or header[5] not in ("0", "1")):
            raise ExpertFormatError(f"{path}: bad header {','.join(header)!r}")
        name = header[1]
        try:
            n_rows = int(header[3])
        except ValueError as exc:
            raise ExpertFormatError(f"{path}: bad row count {header[3]!r}") from exc
        stochastic = header[5] == "1"
        body = [line for line in fh.read().split("\n") if line.strip()]

    if len(body) != n_rows:
        raise ExpertFormatError(f"{path}: header says {n_rows} rows, file has {len(body)}")
    if expected_rows is not None and n_rows != expected_rows:
        raise ExpertFormatError(f"{path}: {n_rows} rows, expected {expected_rows}")

    scores = np.empty((n_rows, NUM_CLASSES))
    for i, line in enumerate(body):
        fields = line.split(",")
        if len(fields) != NUM_CLASSES:
            raise ExpertFormatError(f"{path}: row {i + 1} has {len(fields)} columns, expected 10")
        try:
            scores[i] = [float(v) for v in fields]
        except ValueError as exc:
            raise ExpertFormatError(f"{path}: row {i + 1} is not numeric") from exc
        if not np.all(np.isfinite(scores[i])) or np.any(scores[i] < 0):
            raise ExpertFormatError(f"{path}: row {i + 1} has a negative or non-finite entry")

    if stochastic and n_rows:
        sums = scores.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
        if bad.size:
            raise ExpertFormatError(
                f"{path}: row {bad[0] + 1} sums to {sums[bad[0]]:.6g}, outside 1 +/- {ROW_SUM_TOL}")
        # exact-sum rows pass through untouched so export/load round-trips bit for bit
        off = sums != 1.0
        scores[off] /= sums[off, None]
    return ProbMatrix(scores, name, stochastic)
