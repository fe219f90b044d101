"""Exception hierarchy shared by all modules."""


class TransparentError(Exception):
    """Base class for every error raised by this package."""


class NotAProjector(TransparentError, ValueError):
    pass


class NotAnInvolution(TransparentError, ValueError):
    pass


class GridMismatch(TransparentError, ValueError):
    pass


class NotAConnection(TransparentError, ValueError):
    pass


class NotUnitary(TransparentError, ValueError):
    pass


class NotMode0(TransparentError, ValueError):
    pass


class NearPole(TransparentError, ValueError):
    pass


class DegenerateChart(TransparentError, ValueError):
    pass


class NotNormalized(TransparentError, ValueError):
    pass


class GateFailure(TransparentError):
    """A numerical gate was not met; carries the gate name and measured value."""

    def __init__(self, gate: str, value: float, limit: float, detail: str = ""):
        self.gate = gate
        self.value = float(value)
        self.limit = float(limit)
        msg = f"{gate}: {self.value:.3e} > {self.limit:.3e}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class SeedNotHolomorphic(GateFailure):
    pass


class PipelineResidual(GateFailure):
    pass


class DegreeNotLowered(GateFailure):
    pass


class VanishingSection(TransparentError, ValueError):
    pass


class RankDefect(TransparentError, ValueError):
    pass


class NoLineFound(TransparentError):
    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


class ContainerError(TransparentError, ValueError):
    """Malformed or inconsistent field container file."""
