"""Exception hierarchy shared by all quasilab modules."""


class QuasilabError(Exception):
    """Base class for every error raised by quasilab."""


class InsufficientPrecision(QuasilabError):
    """Not enough partial quotients are materialized for the request."""


class ToleranceTooCoarse(QuasilabError):
    """Interval enclosures overlap, so a comparison cannot be decided."""


class FormulaRegimeViolated(QuasilabError):
    """Inputs fall outside the regime where a closed form is valid."""


class SingularEvaluation(QuasilabError):
    """A potential was evaluated at its singular point."""


class KappaBelowResolution(QuasilabError):
    pass


class LevelSearchOverflow(QuasilabError):
    def __init__(self, message, ceiling):
        super().__init__(message)
        self.ceiling = ceiling


class CostGuardExceeded(QuasilabError):
    pass


class MissingSamples(QuasilabError):
    pass


class InvalidInput(QuasilabError, ValueError):
    pass


class DimensionCapExceeded(QuasilabError):
    pass


class PropagationRefused(QuasilabError):
    pass


class ConfigError(QuasilabError):
    pass
