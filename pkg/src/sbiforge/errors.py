"""Exception types shared across the toolkit."""


class SbiForgeError(Exception):
    """Base class for all toolkit errors."""


class DegenerateRegionError(SbiForgeError):
    """Landmark subset is collinear or has fewer than 3 distinct points."""


class EmptyMaskError(SbiForgeError):
    """A mask transform left no support on the canvas."""


class ShapeMismatchError(SbiForgeError):
    """Images or masks that must share dimensions do not."""


class EmptyPerturbationError(SbiForgeError):
    """The generation policy excludes every perturbation factor."""


class TableFormatError(SbiForgeError):
    """A caption table document violates its schema.

    Carries the offending entry index when one is known.
    """

    def __init__(self, message, entry_index=None):
        super().__init__(message)
        self.entry_index = entry_index


class SubThresholdSample(SbiForgeError):
    """Signal: all measured differences fell below their caption thresholds.

    Not a hard failure; the caller may resample the perturbation recipe.
    """


class EmptyEvidenceError(SbiForgeError):
    """A forged sample reached annotation with no key captions."""


class EndpointUnavailable(SbiForgeError):
    """The annotation endpoint could not be reached."""


class ValidationExhausted(SbiForgeError):
    """Endpoint responses kept failing validation past the retry budget."""

    def __init__(self, message, attempts=0, last_error=None):
        super().__init__(message)
        self.attempts = attempts
        self.last_error = last_error


class ParseError(SbiForgeError):
    """A tagged response does not conform to the response grammar.

    ``offset`` is the character position where parsing failed.
    """

    def __init__(self, message, offset=0):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class GroupTooSmallError(SbiForgeError):
    """Group-relative advantages need at least two rewards."""


class RewardRangeError(SbiForgeError):
    """A recorded reward lies outside [0, 4]."""


class LevelRangeError(SbiForgeError):
    """A difficulty level lies outside [0, D_max]."""


class ConfigError(SbiForgeError):
    """A run configuration is unusable."""


class BindError(SbiForgeError):
    """The scoring service could not bind its port."""
