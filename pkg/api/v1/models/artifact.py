from dataclasses import dataclass, field
from typing import List

from api.v1.models.base import BaseModel


@dataclass(frozen=True)
class Artifact(BaseModel):
    name: str  # relative to the run directory
    kind: str  # json | csv | text | yaml | mesh | jsonl
    sha256: str
    size: int


@dataclass(eq=False)
class RunManifest(BaseModel):
    """Every file a run emitted, keyed to the mesh and seed that produced it"""

    mesh_digest: str
    seed: int
    artifacts: List[Artifact] = field(default_factory=list)

    def names(self) -> List[str]:
        return [a.name for a in self.artifacts]

    def __repr__(self):
        return f"<RunManifest {self.mesh_digest[:12]} seed={self.seed} files={len(self.artifacts)}>"
