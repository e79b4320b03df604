from dataclasses import dataclass
from typing import Optional

from api.v1.models.base import BaseModel
from api.v1.models.forms import OneForm


@dataclass
class NodeState(BaseModel):
    """What one node knows after a flood"""

    node: int
    hop: Optional[int] = None
    parent: Optional[int] = None
    branch: Optional[int] = None  # child of the seed this node was reached through
    round: int = 0

    @property
    def reached(self) -> bool:
        return self.hop is not None


@dataclass(eq=False)
class DiffusionReport(BaseModel):
    form: OneForm
    rounds: int
    residual: float

    def to_dict(self):
        return {"rounds": self.rounds, "residual": self.residual}
