"""
Exception hierarchy shared by the numerical modules and the CLI.

Every error carries a human readable ``detail`` and the process ``exit_code``
the command line front end reports for it.
"""
from typing import Optional


class TorsionError(Exception):
    """Base error with an exit code and detail message"""

    exit_code = 1

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "detail": self.detail}


class ValidationError(TorsionError):
    """Bad input: dimensions, schemas, parameters, unknown cells"""

    exit_code = 2


class AssumptionViolation(TorsionError):
    """Acyclicity (Assumption I) or bijectivity (Assumption II) fails"""

    exit_code = 3

    def __init__(self, assumption: str, detail: str,
                 smallest_singular_value: Optional[float] = None):
        super().__init__(f"Assumption {assumption} violated: {detail}")
        self.assumption = assumption
        self.smallest_singular_value = smallest_singular_value

    def to_dict(self) -> dict:
        payload = super().to_dict()
        payload["assumption"] = self.assumption
        if self.smallest_singular_value is not None:
            payload["smallest_singular_value"] = self.smallest_singular_value
        return payload


class NumericalError(TorsionError):
    """A computation could not be carried out to the stated tolerance"""

    exit_code = 4


class SingularSpectrumError(NumericalError):
    pass


class OnCutError(NumericalError):
    pass


class SplittingError(NumericalError):
    pass


class DegenerateBasisError(NumericalError):
    pass


class GenerationError(NumericalError):
    pass
