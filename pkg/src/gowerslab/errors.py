"""Exception types shared across the package."""


class GowersLabError(Exception):
    """Base class for all package errors."""


class DomainError(GowersLabError):
    """Operation applied to an unsupported or mismatched domain."""


class PreconditionError(GowersLabError):
    """An operation's stated precondition was violated by the input."""


class WorkCapError(GowersLabError):
    """Requested computation exceeds the configured work cap."""


class PolyRejection(GowersLabError):
    """A value table failed the polynomial difference test.

    Carries the maximal difference defect (distance to 0 mod 1).
    """

    def __init__(self, defect: float, message: str = ""):
        self.defect = defect
        super().__init__(message or f"table is not polynomial: max difference defect {defect:.3e}")


class DecodeFailure(GowersLabError):
    """Structured failure of a phase decoder stage.

    ``stage`` names the failed step; ``detail`` holds stage-specific data
    (e.g. the uncovered shift, or a certification defect).
    """

    def __init__(self, stage: str, detail=None, message: str = ""):
        self.stage = stage
        self.detail = detail
        super().__init__(message or f"decode failed at stage '{stage}': {detail}")


class CosetFailure(GowersLabError):
    """Structured failure of the coset detection pipeline."""

    def __init__(self, stage: str, detail=None, message: str = ""):
        self.stage = stage
        self.detail = detail
        super().__init__(message or f"coset detection failed at stage '{stage}': {detail}")
