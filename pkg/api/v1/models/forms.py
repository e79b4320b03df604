from dataclasses import dataclass
import numpy as np

from api.v1.models.base import BaseModel


@dataclass(frozen=True, eq=False)
class OneForm(BaseModel):
    """Value per edge in its canonical (low -> high) orientation"""

    values: np.ndarray

    def __add__(self, other: "OneForm") -> "OneForm":
        return OneForm(self.values + other.values)

    def __sub__(self, other: "OneForm") -> "OneForm":
        return OneForm(self.values - other.values)

    def __neg__(self) -> "OneForm":
        return OneForm(-self.values)

    def __mul__(self, scalar: float) -> "OneForm":
        return OneForm(self.values * scalar)

    __rmul__ = __mul__

    def __len__(self) -> int:
        return len(self.values)

    def on(self, edge: int, sign: int = 1) -> float:
        return float(sign * self.values[edge])

    @classmethod
    def zeros(cls, n_edges: int) -> "OneForm":
        return cls(np.zeros(n_edges))

    @classmethod
    def combine(cls, coefficients, forms) -> "OneForm":
        return cls(sum(c * f.values for c, f in zip(coefficients, forms)))


@dataclass(frozen=True, eq=False)
class TwoForm(BaseModel):
    """Value per oriented face"""

    values: np.ndarray

    def max_abs(self) -> float:
        return float(np.abs(self.values).max()) if len(self.values) else 0.0
