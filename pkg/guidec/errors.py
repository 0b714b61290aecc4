"""
Exception hierarchy for guidec.

Errors raised on bad arguments also derive from ValueError so callers that
only catch ValueError keep working.
"""

from typing import Any


class GuidecError(Exception):
    """Base class for every error raised by guidec."""


class InvalidConfiguration(GuidecError, ValueError):
    """A vocabulary, policy spec, scenario or config failed validation."""


class NonFiniteInput(GuidecError, ValueError):
    """A log-weight or log-probability was NaN or infinite."""


class DimensionMismatch(GuidecError, ValueError):
    """Two distributions or vectors have different lengths."""


class AdvancePastTerminal(GuidecError):
    """An action was appended to a state that already ended with eos."""


class EmptyCorpus(GuidecError, ValueError):
    """Training was requested on an empty corpus."""


class SequenceMissingEos(GuidecError, ValueError):
    """A corpus sequence does not end with the eos token."""


class UnknownEvidenceId(GuidecError, KeyError):
    """A state refers to evidence the model has no table for."""


class MalformedModelFile(GuidecError):
    """A model, corpus or scenario file is missing fields or has the wrong shape."""


class InvariantViolation(GuidecError):
    """Loaded data breaks a numerical invariant (e.g. a row not summing to 1)."""


class NonTerminalSequence(GuidecError, ValueError):
    """The discriminator was asked to judge a sequence without trailing eos."""


class StateSpaceTooLarge(GuidecError):
    """Exact enumeration would exceed the configured state budget."""


class NonPositiveTemperature(GuidecError, ValueError):
    """Temperature must be strictly positive."""


class NegativeLambda(GuidecError, ValueError):
    """Guidance weight must be nonnegative."""


class NegativeKL(GuidecError, ValueError):
    """A divergence fed to the dynamic weight was negative."""


class MissingGuidanceInput(GuidecError, ValueError):
    """A policy or objective needs an input (p_uncond, Q/V) that was not supplied."""


class DidNotConverge(GuidecError):
    """An iterative solver hit its cap; the best iterate is attached as ``result``."""

    def __init__(self, message: str, result: Any = None):
        super().__init__(message)
        self.result = result


class DimensionTooLarge(GuidecError, ValueError):
    """Grid search only supports very small simplices."""


class PointTooCloseToBoundary(GuidecError, ValueError):
    """Finite differences need a point well inside the simplex."""


class EmptyTraceSet(GuidecError, ValueError):
    """Metrics were requested for an empty list of traces."""


class UnknownParameter(GuidecError, ValueError):
    """A sweep parameter is not a hyperparameter of the policy kind."""
