"""Exception hierarchy shared by every opebench module.

All failures raised on purpose by this package derive from
:class:`OpeBenchError`, so callers can catch one type at the boundary.  The
subclasses are deliberately narrow: estimator code signals *why* a quantity
is undefined (zero normalizer, unsupported action, degenerate denominator)
instead of returning silent zeros that would corrupt downstream sweeps.
"""


class OpeBenchError(Exception):
    """Base class for all opebench errors."""


class DimensionMismatch(OpeBenchError, ValueError):
    """Vector arguments do not share the same action count."""


class NegativeProbability(OpeBenchError, ValueError):
    """A probability vector contains an entry below zero."""


class NotNormalized(OpeBenchError, ValueError):
    """A probability vector does not sum to one within tolerance."""

    def __init__(self, deviation: float):
        self.deviation = float(deviation)
        super().__init__(f"probabilities sum to 1{deviation:+.3e}, expected 1")


class ActionOutOfRange(OpeBenchError, IndexError):
    """A logged action index is outside [0, n_actions)."""


class UnsupportedAction(OpeBenchError, ValueError):
    """A logged action has zero probability under its own behavior policy."""


class ZeroNormalizer(OpeBenchError, ArithmeticError):
    """A self-normalized estimator has zero total weight mass."""


class ZeroFusedMass(OpeBenchError, ArithmeticError):
    """A logged action has zero probability under the pooled behavior mix."""


class ZeroVariance(OpeBenchError, ArithmeticError):
    """The closed-form optimal weights divide by a zero reward variance."""


class DegenerateAction(OpeBenchError, ArithmeticError):
    """An action with zero mean and zero variance has no defined weight."""


class DegenerateDenominator(OpeBenchError, ArithmeticError):
    """A weight formula denominator collapsed to zero."""


class InfiniteConditionalVariance(OpeBenchError, ArithmeticError):
    """Nonzero weight on an unsampled action with noisy rewards."""


class NonPositiveEntry(OpeBenchError, ValueError):
    """An argument that must be strictly positive is not."""


class InvalidP(OpeBenchError, ValueError):
    """Success probability outside (0, 1]."""


class OddK(OpeBenchError, ValueError):
    """The symmetric reward profile needs an even action count."""


class IndexClash(OpeBenchError, ValueError):
    """Peak action indices coincide or fall out of range."""


class ConfigInvalid(OpeBenchError, ValueError):
    """An experiment configuration fails validation."""


class EmptySamples(OpeBenchError, ValueError):
    """Bootstrap invoked on an empty sample vector."""


class IoFailure(OpeBenchError, OSError):
    """A report could not be written."""
