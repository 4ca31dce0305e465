"""Exception types shared across the simulator modules."""


class SounderSimError(Exception):
    """Base class for all sounder-sim errors."""


class ConfigError(SounderSimError, ValueError):
    """A configuration value violates its contract."""


class TapOutOfRange(ConfigError):
    """Tap word selects a tap position above the configured stage count."""


class EmptyTaps(ConfigError):
    """Tap word selects no feedback taps at all."""


class AllZeroState(SounderSimError):
    """Shift register reached (or was seeded with) the absorbing all-zero state."""


class NotMaximal(SounderSimError):
    """Generated sequence period fell short of 2^N - 1.

    The observed period is carried so callers can reject bad tap words.
    """

    def __init__(self, period: int, expected: int):
        self.period = period
        self.expected = expected
        super().__init__(
            f"sequence period {period} < maximal length {expected}; "
            "tap set is not primitive for this stage count"
        )


class InsufficientLength(SounderSimError):
    """Waveform too short for the requested spectral analysis."""


class JitterTooLarge(ConfigError):
    """Requested RMS jitter is half a chip period or more."""


class DelayExceedsDuration(ConfigError):
    """Channel path delay is not shorter than the waveform duration."""


class InvalidSnr(ConfigError):
    """SNR value is not a finite number of dB (or None for noiseless)."""


class InvalidRates(ConfigError):
    """Chip-rate pair does not satisfy 0 < beta < alpha."""


class SampleRateMismatch(SounderSimError):
    """Received waveform sample rate differs from the correlator configuration."""


class CaptureTooShort(SounderSimError):
    """Capture does not cover the required number of dilated code periods."""


class NoSyncPeak(SounderSimError):
    """Sync trace has no peak at least 6 dB above the trace median."""


class EmptyProfile(SounderSimError):
    """Power-delay profile holds no bins."""
