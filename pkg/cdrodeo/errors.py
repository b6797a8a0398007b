"""
Exceptions raised by the cdrodeo package

Library code raises these; the command-line entry point maps them to exit codes.
"""

from typing import Optional


class CDRodeoError(Exception):
    """Base class for every error raised by cdrodeo"""


class InvalidInput(CDRodeoError, ValueError):
    """A parameter or data value is outside its admissible domain"""


class DimensionMismatch(InvalidInput):
    """Sample, evaluation point, bandwidth or marginal lengths disagree"""


class MissingAuxSample(InvalidInput):
    """The kernel pre-estimator was requested without an auxiliary sample"""


class NumericalFailure(CDRodeoError, ArithmeticError):
    """A statistic, threshold or estimate came out NaN or non-finite"""


class NonConvergence(NumericalFailure):
    """Adaptive quadrature did not reach the requested tolerance"""


class StageFailure(CDRodeoError):
    """A stage of the chained marginal pipeline failed"""

    def __init__(self, stage: int, message: str, index: Optional[int] = None):
        """
        Args:
            stage: 1-based stage number (stage j conditions X_j on X_1..X_{j-1})
            message: Description of the underlying failure
            index: Observation index being evaluated when the failure happened
        """
        self.stage = stage
        self.index = index
        where = f"stage {stage}" if index is None else f"stage {stage}, observation {index}"
        super().__init__(f"Chained marginal failed at {where}: {message}")
