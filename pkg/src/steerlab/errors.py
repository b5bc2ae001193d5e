"""Exception types raised across steerlab."""


class SteerlabError(Exception):
    """Base class for all library errors."""


class ConfigError(SteerlabError, ValueError):
    """Malformed or out-of-range configuration input."""


class UnstableConfig(SteerlabError):
    """Total damping of an oscillator is not positive, or the drift is not Hurwitz."""


class ChannelLossOutOfRange(ConfigError):
    pass


class NegativeRate(ConfigError):
    pass


class CooperativityUndefined(SteerlabError):
    """Cooperativity requested for an oscillator with zero thermal decoherence."""


class DegenerateVariance(SteerlabError, ZeroDivisionError):
    pass


class DivisionByZeroRatio(SteerlabError, ZeroDivisionError):
    pass


class InternalConsistencyError(SteerlabError, ArithmeticError):
    """A computed quantity violates an identity it must satisfy."""


class NotHurwitz(UnstableConfig):
    pass


class SolverSingular(SteerlabError):
    pass


class StiffStep(SteerlabError):
    pass


class RiccatiNoPSDSolution(SteerlabError):
    pass


class EmptyFeasibleSet(SteerlabError):
    pass
