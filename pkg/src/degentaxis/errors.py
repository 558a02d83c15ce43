"""Exception hierarchy shared across the package."""


class DegenTaxisError(Exception):
    """Base class for all package-specific errors."""


# -- grid ------------------------------------------------------------------

class NonPositiveField(DegenTaxisError):
    """A field required to stay above a positive floor dipped below it."""


class NegativeFieldForFractionalPower(DegenTaxisError):
    """L^p norm with non-integer p requested for a field with negative values."""


class GridMismatch(DegenTaxisError):
    """Two fields that must share a grid do not."""


# -- model -----------------------------------------------------------------

class NegativeInitialData(DegenTaxisError):
    """Initial cell density has negative values."""


# -- stepper ---------------------------------------------------------------

class StepCollapse(DegenTaxisError):
    """Step size fell below dt_min while rejecting positivity-violating steps."""


class NonFiniteState(DegenTaxisError):
    """NaN or Inf appeared in the evolving state."""


# -- diagnostics -----------------------------------------------------------

class PositivityFloorViolated(DegenTaxisError):
    """State handed to the diagnostics is not positive enough to form ratios."""


# -- inequality lab --------------------------------------------------------

class PositivityViolated(DegenTaxisError):
    """Trial field violates the strict positivity the inequality requires."""


class DegenerateRHS(DegenTaxisError):
    """Right-hand side of an inequality vanished while the left did not."""


class ZeroField(DegenTaxisError):
    """Ratio undefined because the denominator field is identically zero."""


# -- experiments -----------------------------------------------------------

class UnknownPreset(DegenTaxisError):
    """Requested experiment preset name is not defined."""


class StudyConfigError(DegenTaxisError):
    """Experiment sweep configured with unusable parameters."""


# -- cli -------------------------------------------------------------------

class ParseError(DegenTaxisError):
    """Config text could not be parsed; carries a line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class UnknownKey(DegenTaxisError):
    """Config key is not part of the documented key space."""


class RangeError(DegenTaxisError):
    """Config value violates a model or scheme constraint."""
