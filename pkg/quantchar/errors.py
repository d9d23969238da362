# This source code is licensed under the terms of the MIT license
# found in the "LICENSE" file in the root directory of this source tree.

"""Exceptions raised by quantchar.

Every error is a `ValueError`, so callers that only care about "bad input"
can catch that; the CLI catches `QuantcharError` and aborts with a message.
"""


class QuantcharError(ValueError):
    pass


class DimensionMismatchError(QuantcharError):
    pass


class UnsupportedMeasureError(QuantcharError):
    """The operation has no implementation for this measure representation."""


class MomentDivergenceError(QuantcharError):
    """A Monte Carlo moment came out nonfinite (heavy tails)."""


class NoConstructionKnownError(QuantcharError):
    pass


class OffSphereError(QuantcharError):
    pass


class EmptyGridError(QuantcharError):
    pass


class DegenerateBoxError(QuantcharError):
    pass


class UnboundedCellError(QuantcharError):
    pass


class AnalyticPathUnavailable(QuantcharError):
    """No closed form or quadrature rule for this (measure, p) pair."""


class EvaluatorInconsistencyError(QuantcharError):
    pass


class ConfigError(QuantcharError):
    pass
