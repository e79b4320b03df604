from fastapi import HTTPException, status

# Domain errors

class SurfaceCurveError(Exception):
    """Base class; every error names the pipeline stage that raised it"""
    exit_code = 2
    default_hint = ""

    def __init__(self, detail: str, stage: str = "", hint: str = ""):
        super().__init__(detail)
        self.detail = detail
        self.stage = stage
        self.hint = hint or self.default_hint

    def to_dict(self) -> dict:
        return {
            "error": type(self).__name__,
            "stage": self.stage,
            "detail": self.detail,
            "hint": self.hint,
        }

class ValidationFailure(SurfaceCurveError):
    exit_code = 1

class NumericalFailure(SurfaceCurveError):
    exit_code = 2

# mesh
class ParseError(ValidationFailure):
    default_hint = "check the file is ASCII OFF/OBJ with triangular faces"

class NonManifold(ValidationFailure):
    default_hint = "every edge must bound exactly two faces"

class InconsistentOrientation(ValidationFailure):
    default_hint = "re-orient faces so each edge appears once in each direction"

class DegenerateFace(ValidationFailure):
    default_hint = "remove zero-area or repeated-vertex faces"

class GenusZero(ValidationFailure):
    default_hint = "the construction needs a surface with at least one handle"

class NonInteger(ValidationFailure):
    default_hint = "connectivity is corrupt: 2 - V + E - F must be even"

class DisconnectedMesh(ValidationFailure):
    default_hint = "split the input into connected components"

class DisconnectedGraph(ValidationFailure):
    default_hint = "the communication graph must be connected"

# topology / forms
class SliceFailure(NumericalFailure):
    default_hint = "the homology loop is not simple; rebuild the basis"

class RankDeficient(NumericalFailure):
    default_hint = "forms or loops do not span the first (co)homology"

# hodge
class SolverFailure(NumericalFailure):
    default_hint = "the cotangent Laplacian is singular beyond its constant kernel"

class SingularGram(NumericalFailure):
    default_hint = "harmonic basis is degenerate; check mesh quality"

# covering
class PathDependence(NumericalFailure):
    default_hint = "the holomorphic form is not closed enough; check upstream residuals"

class WrongZeroCount(NumericalFailure):
    default_hint = "refine the mesh or choose another holomorphic form"

class TraceEscape(NumericalFailure):
    default_hint = "the chosen form has no compact critical graph; try another form"

class WrongComponentCount(NumericalFailure):
    default_hint = "slits did not separate the surface into g handles"

class NonHorizontalSlit(NumericalFailure):
    default_hint = "slit holonomies are not parallel for this form"

# curve
class LocationMiss(NumericalFailure):
    default_hint = "flat layout has a gap; check for folded triangles"

class EmptyBelt(ValidationFailure):
    default_hint = "increase the belt width"

class EndpointHit(NumericalFailure):
    default_hint = "choose another slope"

class SlopeSelectionFailure(NumericalFailure):
    default_hint = "every perturbed slope hit a slit endpoint"

# distsim
class NonConvergence(NumericalFailure):
    default_hint = "increase the round budget or check for near-zero weight rows"

# HTTP mapping

class BadRequestException(HTTPException):
    def __init__(self, detail="Bad request"):
        super().__init__(status_code=status.HTTP_400_BAD_REQUEST, detail=detail)

class NotFoundException(HTTPException):
    def __init__(self, detail: str = "Resource not found"):
        super().__init__(status_code=status.HTTP_404_NOT_FOUND, detail=detail)

class UnprocessableException(HTTPException):
    def __init__(self, detail="Numerical failure"):
        super().__init__(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=detail)

def to_http(error: SurfaceCurveError) -> HTTPException:
    if isinstance(error, ValidationFailure):
        return BadRequestException(error.to_dict())
    return UnprocessableException(error.to_dict())
