from dataclasses import fields, is_dataclass
import numpy as np


def _plain(value):
    if is_dataclass(value) and not isinstance(value, type):
        return value.to_dict() if hasattr(value, "to_dict") else {
            f.name: _plain(getattr(value, f.name)) for f in fields(value)
        }
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return np.stack([value.real, value.imag], axis=-1).tolist()
        return value.tolist()
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


class BaseModel:
    """Mixin for the pipeline's dataclass records"""

    def to_dict(self):
        """Convert model instance to dictionary"""
        return {
            f.name: _plain(getattr(self, f.name))
            for f in fields(self)
            if f.repr and not f.name.startswith("_")
        }
