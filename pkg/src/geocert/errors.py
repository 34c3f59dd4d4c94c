"""Exception types raised across the toolkit."""


class GeocertError(Exception):
    """Base class for all toolkit errors."""


class OutOfChart(GeocertError):
    """Chart point lies outside the (non-periodic) chart box."""


class RankDeficient(GeocertError):
    """Jacobian fails the immersion rank condition at a chart point."""


class NotUnit(GeocertError):
    """A direction that must have unit metric norm does not."""


class StepTooLarge(GeocertError):
    """A finite-difference stencil would leave the chart."""


class LeftChart(GeocertError):
    """An integrated path exited a non-periodic chart boundary."""


class Unreachable(GeocertError):
    """No path between the requested chart points on the sampled grid."""


class EmptyTail(GeocertError):
    """No samples beyond the largest exhaustion radius."""


class TooShort(GeocertError):
    """Sequence too short to classify."""


class NotMinimal(GeocertError):
    """Operation requires a minimal immersion (|H| below tolerance)."""


class NotApplicable(GeocertError):
    """Certificate preconditions not met (e.g. no tail bound below 1)."""


class NoIntersection(GeocertError):
    """Level-set extraction found no crossing along any ray."""


class AllTangential(GeocertError):
    """Every level-set hit failed the transversality floor."""


class CriticalPoint(GeocertError):
    """Radial direction field undefined: tangential projection below floor."""


class PsiFloor(GeocertError):
    """Flow stopped: transversality dropped below the floor."""


class UnknownSurface(GeocertError):
    """Requested builtin surface name is not in the gallery."""


class BadParams(GeocertError):
    """Builtin surface parameters outside their documented range."""


class ExpressionError(BadParams):
    """Rejected or malformed component expression."""


class ManifestParseError(GeocertError):
    """Manifest file failed to parse; message carries line info."""


class ManifestValidationError(GeocertError):
    """Manifest parsed but failed validation; message lists all violations."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
