from dataclasses import dataclass, field
from typing import Dict, List, Optional
import numpy as np

from api.v1.models.base import BaseModel

CSV_HEADER = ["step", "visited", "coverage", "avg_dist", "strategy", "seed"]


@dataclass(frozen=True)
class SimRecord(BaseModel):
    step: int
    visited: int
    coverage: float
    avg_dist: Optional[float]  # None once every node is visited


@dataclass(eq=False)
class SimTrace(BaseModel):
    strategy: str
    seed: int
    n_nodes: int
    records: List[SimRecord] = field(default_factory=list)

    def rows(self) -> List[list]:
        return [
            [r.step, r.visited, repr(r.coverage), "" if r.avg_dist is None else repr(r.avg_dist), self.strategy, self.seed]
            for r in self.records
        ]

    def milestone(self, fraction: float) -> Optional[int]:
        """First recorded step with coverage >= fraction"""
        for r in self.records:
            if r.coverage >= fraction - 1e-12:
                return r.step
        return None

    def distance_at(self, visited: int) -> Optional[float]:
        """Average distance at the first record with at least ``visited`` nodes"""
        for r in self.records:
            if r.visited >= visited:
                return r.avg_dist
        return None

    @property
    def final_coverage(self) -> float:
        return self.records[-1].coverage if self.records else 0.0

    def to_dict(self):
        return {
            "strategy": self.strategy,
            "seed": self.seed,
            "n_nodes": self.n_nodes,
            "steps": self.records[-1].step if self.records else 0,
            "final_coverage": self.final_coverage,
        }


@dataclass(eq=False)
class FleetResult(BaseModel):
    """Per-mule traces, the joint trace and pairwise overlaps"""

    traces: List[SimTrace]
    joint: SimTrace
    overlap: np.ndarray  # final overlap counts, (mules, mules)
    early_overlap: np.ndarray  # overlap among each mule's first ``early_count`` visited
    early_count: int
    labels: List[str] = field(default_factory=list)

    def to_dict(self):
        return {
            "labels": self.labels,
            "joint": self.joint.to_dict(),
            "traces": [t.to_dict() for t in self.traces],
            "overlap": self.overlap.tolist(),
            "early_overlap": self.early_overlap.tolist(),
            "early_count": self.early_count,
        }


@dataclass(eq=False)
class SimSummary(BaseModel):
    n_nodes: int
    milestones: Dict[str, Dict[str, Optional[int]]]
    distances: Dict[str, Dict[str, Optional[float]]]
