"""Exception hierarchy shared by every module."""


class WeakFlipError(ValueError):
    """Base class for all validation and domain errors."""


class NotHermitian(WeakFlipError):
    pass


class NotPSD(WeakFlipError):
    pass


class NotDensity(WeakFlipError):
    pass


class DimensionMismatch(WeakFlipError):
    pass


class BadNorm(WeakFlipError):
    pass


class NotPOVM(WeakFlipError):
    pass


class DegenerateOutcome(WeakFlipError):
    pass


class NotAligned(WeakFlipError):
    pass


class OutOfRange(WeakFlipError):
    pass


class DimensionTooLarge(WeakFlipError):
    pass


class BadDimension(WeakFlipError):
    pass


class UnsupportedStrategy(WeakFlipError):
    pass


class ParseError(WeakFlipError):
    """Malformed protocol document; message carries line or field context."""

    def __init__(self, message, *, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
