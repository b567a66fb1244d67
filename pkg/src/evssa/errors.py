"""Exception types shared across the simulator."""


class EvssaError(Exception):
    """Base class for all simulator errors."""


class ConfigError(EvssaError):
    """Invalid configuration; `field` names the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class OrderingError(EvssaError):
    """Timestamps or sequences went backwards."""


class EncodeError(EvssaError):
    """Message cannot be represented on the wire (caller must split)."""


class DecodeError(EvssaError):
    """Base class for wire-decoding failures."""


class BadMagicError(DecodeError):
    pass


class TruncatedError(DecodeError):
    pass


class CrcMismatchError(DecodeError):
    pass


class UnknownTypeError(DecodeError):
    pass


class FormatError(DecodeError):
    """CRC passed but a field holds an out-of-domain value."""
