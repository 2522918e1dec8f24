"""Exception hierarchy shared across the package."""


class HiSamError(Exception):
    pass


class DomainError(HiSamError, ValueError):
    """An input lies outside the region where a formula is defined."""


class NegotiationError(HiSamError):
    """The fixed-point negotiation did not reach its tolerance.

    The partial trace is attached so callers can inspect the error history.
    """

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


class EvictedError(HiSamError):
    """A device whose workload went negative tried to authenticate."""


class ProtocolError(HiSamError):
    pass


class IncompleteFrame(ProtocolError):
    """Raised by the frame decoder when more bytes are needed.

    ``needed`` is the minimum number of additional bytes before decoding
    can make progress.
    """

    def __init__(self, needed):
        super().__init__(f"need {needed} more byte(s)")
        self.needed = needed
