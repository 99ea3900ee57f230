"""Exception hierarchy shared by every geonash module."""


class GeoNashError(Exception):
    """Base class for all library errors."""


class DomainError(GeoNashError, ValueError):
    """A scalar argument lies outside its mathematical domain."""


class ConfigError(GeoNashError, ValueError):
    """Invalid environment, sweep or CLI configuration."""


class OutOfRange(GeoNashError, IndexError):
    pass


class SteppedTerminal(GeoNashError, RuntimeError):
    pass


class NoValidSteps(GeoNashError, ValueError):
    """Every candidate term of a metric was skipped."""


class TooShort(GeoNashError, ValueError):
    pass


class EmptyGrid(GeoNashError, ValueError):
    pass


class EmptyInput(GeoNashError, ValueError):
    pass


class EmptyVector(GeoNashError, ValueError):
    pass


class ZeroVector(GeoNashError, ValueError):
    pass


class DegenerateRange(GeoNashError, ValueError):
    pass


class NotSorted(GeoNashError, ValueError):
    pass
