from dataclasses import dataclass, field
from typing import List, Optional

from api.v1.models.base import BaseModel

PASS = "pass"
FAIL = "fail"
VACUOUS = "vacuous"


@dataclass(frozen=True)
class Check(BaseModel):
    name: str
    status: str
    value: Optional[float] = None
    bound: Optional[float] = None
    detail: str = ""


@dataclass(eq=False)
class VerificationReport(BaseModel):
    checks: List[Check] = field(default_factory=list)

    def add(self, name: str, ok: bool, value=None, bound=None, detail: str = "") -> Check:
        check = Check(
            name=name,
            status=PASS if ok else FAIL,
            value=None if value is None else float(value),
            bound=None if bound is None else float(bound),
            detail=detail,
        )
        self.checks.append(check)
        return check

    def vacuous(self, name: str, detail: str = "") -> Check:
        check = Check(name=name, status=VACUOUS, detail=detail)
        self.checks.append(check)
        return check

    @property
    def passed(self) -> bool:
        return all(c.status != FAIL for c in self.checks)

    @property
    def failures(self) -> List[Check]:
        return [c for c in self.checks if c.status == FAIL]

    def get(self, name: str) -> Optional[Check]:
        return next((c for c in self.checks if c.name == name), None)

    def to_dict(self):
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}
