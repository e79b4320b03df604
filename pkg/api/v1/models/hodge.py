from dataclasses import dataclass
from typing import Sequence
import numpy as np

from api.v1.models.base import BaseModel
from api.v1.models.forms import OneForm


@dataclass(frozen=True, eq=False)
class CotanWeights(BaseModel):
    """w_ij = cot of the two corner angles opposite each edge"""

    values: np.ndarray


@dataclass(frozen=True, eq=False)
class HolomorphicForm(BaseModel):
    """Omega = omega + i * conj, a harmonic form and its conjugate"""

    omega: OneForm
    conj: OneForm

    @property
    def values(self) -> np.ndarray:
        return self.omega.values + 1j * self.conj.values

    @classmethod
    def from_complex(cls, values: np.ndarray) -> "HolomorphicForm":
        return cls(OneForm(np.real(values).copy()), OneForm(np.imag(values).copy()))

    def rotate(self, c: complex) -> "HolomorphicForm":
        """Complex multiple c * Omega"""
        return HolomorphicForm.from_complex(c * self.values)

    @classmethod
    def combine(cls, coefficients: Sequence[float], forms: Sequence["HolomorphicForm"]) -> "HolomorphicForm":
        return cls.from_complex(sum(c * f.values for c, f in zip(coefficients, forms)))

    def to_dict(self):
        return {"omega": self.omega.values.tolist(), "conj": self.conj.values.tolist()}
