"""Exception types raised across the package."""


class CurveFlowError(Exception):
    """Base class for all errors raised by curveflow.

    ``iteration`` is filled in by the flow loop when an error escapes a step.
    """

    iteration = None


class InvalidCurve(CurveFlowError, ValueError):
    pass


class DegenerateStencil(CurveFlowError):
    pass


class SingularEvaluation(CurveFlowError, ValueError):
    pass


class SingularSystem(CurveFlowError):
    pass


class ChargeExited(CurveFlowError):
    pass


class ChargeTooClose(ChargeExited):
    """A charge sits inside the curve but too close to a node."""


class BlowUp(CurveFlowError):
    pass


class MalformedImage(CurveFlowError, ValueError):
    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset
