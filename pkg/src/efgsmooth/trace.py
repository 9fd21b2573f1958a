"""Per-iteration convergence records shared by all solvers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

__all__ = ["TraceRecord", "SolveTrace"]


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    epsilon: float
    mu1: Optional[float] = None  # None for regret-matching methods
    mu2: Optional[float] = None
    tau: Optional[float] = None
    phase: str = "main"  # "warm" during a centering warm start
    elapsed_ms: float = 0.0  # monotonic wall time since the solve started


@dataclass
class SolveTrace:
    records: list[TraceRecord] = field(default_factory=list)

    def append(self, record: TraceRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TraceRecord]:
        return iter(self.records)

    def __getitem__(self, idx):
        return self.records[idx]

    @property
    def final(self) -> TraceRecord:
        return self.records[-1]

    @property
    def iterations(self) -> np.ndarray:
        return np.array([r.iteration for r in self.records], dtype=np.int64)

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([r.epsilon for r in self.records], dtype=np.float64)
