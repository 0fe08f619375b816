"""Exception hierarchy shared by all carforge modules."""


class CarforgeError(Exception):
    """Base class for everything raised on purpose by this package."""


class DimensionError(CarforgeError):
    """Mode counts or multiplicities of two objects do not match."""


class CapacityError(CarforgeError):
    """A size cap (mode count, dense dimension, sweep width) was exceeded."""


class SupportError(CarforgeError):
    """Evaluation requested at a configuration of measure zero."""


class InactiveModeError(CarforgeError):
    """An operator was requested for a mode outside the active set."""


class ValidationError(CarforgeError):
    """Constructed or loaded data violates a structural constraint."""


class TruncationError(ValidationError):
    """A built-in family refers to a mode index beyond the truncation."""


class InvarianceError(CarforgeError):
    """An operator does not commute with the given real structure."""


class PreconditionError(CarforgeError):
    """An operation was called outside its stated precondition."""


class DescriptorError(ValidationError):
    """A descriptor file failed to parse or validate.

    ``location`` is a dotted path into the document (e.g. ``triple.measure.p[2]``)
    so the CLI can point at the offending field.
    """

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)
