from pydantic import BaseModel, Field, field_validator, model_validator
from typing import Optional, List, Dict, Union
from pathlib import Path
from enum import Enum
import math
import yaml

from core.config import settings

RESOLVED_NAME = "config.resolved.yaml"


class Strategy(str, Enum):
    DENSE = "dense"
    EULER = "euler"
    RANDOM_WALK = "random_walk"


class MeshFormat(str, Enum):
    OFF = "off"
    OBJ = "obj"


class MeshSource(BaseModel):
    """Either a mesh file or a generator spec such as ``genus=2,res=16`` or ``torus=8``"""

    path: Optional[str] = None
    generate: Optional[str] = None

    @field_validator('generate')
    def validate_generate(cls, v):
        if v is not None:
            MeshSource.parse_generator(v)
        return v

    @model_validator(mode='after')
    def exactly_one(self):
        if (self.path is None) == (self.generate is None):
            raise ValueError('give exactly one of mesh path or generator spec')
        return self

    @staticmethod
    def parse_generator(spec: str) -> Dict[str, int]:
        params = {}
        for part in spec.split(','):
            key, sep, value = part.partition('=')
            key = key.strip()
            if not sep or key not in ('genus', 'res', 'torus', 'm'):
                raise ValueError(f'unknown generator parameter: {part!r}')
            try:
                params[key] = int(value)
            except ValueError:
                raise ValueError(f'generator parameter {key} must be an integer')
        if 'torus' in params:
            if params['torus'] < 3:
                raise ValueError('torus grid needs at least 3 cells per side')
        elif params.get('genus', 0) < 1 or params.get('res', 0) < 4:
            raise ValueError('generator needs genus >= 1 and res >= 4, or torus=n')
        return params


class MuleSpec(BaseModel):
    strategy: Strategy = Strategy.DENSE
    start: Optional[int] = Field(None, ge=0)
    slope: Optional[float] = None
    seed: int = Field(0, ge=0)


class RunConfig(BaseModel):
    mesh: MeshSource
    seed: int = Field(0, ge=0)
    slope: float = math.e
    length: Optional[float] = Field(None, gt=0)  # flat curve length, derived from the belt when unset
    delta: Optional[float] = Field(None, gt=0)  # belt width
    start: Optional[int] = Field(None, ge=0)
    radius: Optional[float] = Field(None, gt=0)  # unit-disk communication graph
    strategies: List[Strategy] = Field(
        default_factory=lambda: [Strategy.DENSE, Strategy.EULER, Strategy.RANDOM_WALK]
    )
    walk_seeds: int = Field(20, ge=1)
    hops: Optional[int] = Field(None, ge=1)  # simulation budget, 3 V when unset
    fleet: List[MuleSpec] = Field(default_factory=list)
    output_dir: str = settings.OUTPUT_DIR
    stride: Optional[int] = Field(None, ge=1)

    @field_validator('strategies')
    def validate_strategies(cls, v):
        if not v:
            raise ValueError('at least one strategy is required')
        return list(dict.fromkeys(v))

    @classmethod
    def from_yaml(cls, path: Union[str, Path]) -> "RunConfig":
        data = yaml.safe_load(Path(path).read_text()) or {}
        return cls.model_validate(data)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.model_dump(mode='json'), sort_keys=True)

    def write_resolved(self, directory: Union[str, Path]) -> Path:
        target = Path(directory) / RESOLVED_NAME
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(self.to_yaml())
        return target
