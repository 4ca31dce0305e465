"""Sampled baseband waveforms and their spectra.

Chip streams become rectangular NRZ complex-baseband waveforms (zero rise
time, no pulse shaping). Spectra come from an averaged periodogram with no
window by default, so a whole-period FFT puts every spectral line exactly on
a bin and the sinc^2 envelope nulls collapse to numerical zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import get_window

from .errors import ConfigError, InsufficientLength, JitterTooLarge
from .pn import ChipSequence

DB_FLOOR = -300.0  # spectra are clipped here so log10 never sees zero


@dataclass(frozen=True)
class SampledWaveform:
    """Complex baseband samples at a fixed rate.

    ``chip_rate``/``chips_per_period`` are optional provenance for waveforms
    built from a chip sequence; spectral-null search and jitter injection
    need them, generic math does not.
    """

    samples: np.ndarray
    sample_rate: float
    start_time: float = 0.0
    chip_rate: float | None = None
    chips_per_period: int | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.ndim != 1 or samples.size == 0:
            raise ConfigError("samples must be a nonempty 1-D array")
        if not self.sample_rate > 0:
            raise ConfigError(f"sample_rate must be positive, got {self.sample_rate}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    @property
    def samples_per_chip(self) -> int | None:
        if self.chip_rate is None:
            return None
        m = self.sample_rate / self.chip_rate
        return int(round(m))

    @property
    def samples_per_period(self) -> int | None:
        m = self.samples_per_chip
        if m is None or self.chips_per_period is None:
            return None
        return m * self.chips_per_period

    def times(self) -> np.ndarray:
        return self.start_time + np.arange(self.samples.size) / self.sample_rate

    def power(self) -> float:
        """Mean square magnitude."""
        return float(np.mean(np.abs(self.samples) ** 2))


@dataclass(frozen=True)
class PowerSpectrum:
    """Two-sided spectrum, dB relative to the peak bin.

    ``power_linear`` keeps the unnormalized periodogram so energy bookkeeping
    stays exact; ``line_spacing_hz`` is set for periodic inputs (reciprocal of
    the period) and drives null finding.
    """

    freqs: np.ndarray
    power_db: np.ndarray
    resolution_bw: float
    power_linear: np.ndarray | None = None
    line_spacing_hz: float | None = None
    chip_rate: float | None = None

    def __post_init__(self):
        freqs = np.asarray(self.freqs, dtype=np.float64)
        power_db = np.asarray(self.power_db, dtype=np.float64)
        if freqs.shape != power_db.shape or freqs.ndim != 1:
            raise ConfigError("freqs and power_db must be matching 1-D arrays")
        if freqs.size > 1 and not np.all(np.diff(freqs) > 0):
            raise ConfigError("freqs must be strictly increasing")
        for name in ("freqs", "power_db", "power_linear"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=np.float64)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    def peak_freq(self) -> float:
        return float(self.freqs[int(np.argmax(self.power_db))])


def chips_to_waveform(
    seq: ChipSequence, samples_per_chip: int = 1, periods: int = 1
) -> SampledWaveform:
    """Rectangular-hold bipolar waveform: chip 0 -> +1, chip 1 -> -1.

    Each chip is held for samples_per_chip samples; the result is periods
    identical concatenated periods, sample_rate = samples_per_chip x chip_rate.
    """
    if int(samples_per_chip) != samples_per_chip or samples_per_chip < 1:
        raise ConfigError(f"samples_per_chip must be an integer >= 1, got {samples_per_chip}")
    if int(periods) != periods or periods < 1:
        raise ConfigError(f"periods must be an integer >= 1, got {periods}")
    m = int(samples_per_chip)
    one = np.repeat(seq.bipolar(), m)
    samples = np.tile(one, int(periods)).astype(np.complex128)
    return SampledWaveform(
        samples=samples,
        sample_rate=seq.chip_rate * m,
        chip_rate=seq.chip_rate,
        chips_per_period=len(seq),
    )


def power_spectrum(
    w: SampledWaveform, fft_size: int | None = None, window: str | None = None
) -> PowerSpectrum:
    """Averaged periodogram, two-sided, normalized to 0 dB at the peak.

    The waveform is cut into consecutive non-overlapping fft_size blocks and
    the block periodograms |X[k]|^2 / fft_size^2 are averaged, so the total
    linear power equals the mean square of the covered samples (Parseval).
    With a window the power is rescaled by 1/mean(window^2) to preserve that
    total; windowing is only useful for captures that are not whole periods.
    """
    period = w.samples_per_period
    if fft_size is None:
        fft_size = period if period is not None else len(w)
    fft_size = int(fft_size)
    if fft_size < 1:
        raise ConfigError("fft_size must be >= 1")
    if period is not None and fft_size < period:
        raise InsufficientLength(
            f"fft_size {fft_size} shorter than one period ({period} samples); "
            "spectral lines would not resolve"
        )
    if len(w) < fft_size:
        raise InsufficientLength(
            f"waveform has {len(w)} samples, need at least fft_size = {fft_size}"
        )

    n_seg = len(w) // fft_size
    segments = w.samples[: n_seg * fft_size].reshape(n_seg, fft_size)
    if window is not None:
        win = get_window(window, fft_size, fftbins=True)
        segments = segments * win
        scale = 1.0 / (fft_size**2 * np.mean(win**2))
    else:
        scale = 1.0 / fft_size**2
    spectra = np.fft.fft(segments, axis=1)
    power = np.mean(np.abs(spectra) ** 2, axis=0) * scale

    power = np.fft.fftshift(power)
    freqs = np.fft.fftshift(np.fft.fftfreq(fft_size, d=1.0 / w.sample_rate))
    peak = float(power.max())
    if peak <= 0:
        raise ConfigError("all-zero waveform has no spectrum peak")
    power_db = 10.0 * np.log10(np.maximum(power / peak, 10.0 ** (DB_FLOOR / 10.0)))

    line_spacing = None
    if period is not None:
        # one line per harmonic of the period repetition rate
        line_spacing = w.sample_rate / period
    return PowerSpectrum(
        freqs=freqs,
        power_db=power_db,
        resolution_bw=w.sample_rate / fft_size,
        power_linear=power,
        line_spacing_hz=line_spacing,
        chip_rate=w.chip_rate,
    )


def _plateau_minima(values: np.ndarray) -> list[int]:
    """Indices of local minima, treating equal-valued plateaus as one point.

    A plateau counts only when both its flanking values exist and are
    strictly greater, so runs touching either end of the array never count.
    Returns the center index of each qualifying plateau.
    """
    n = values.size
    minima = []
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[j + 1] == values[i]:
            j += 1
        if i > 0 and j < n - 1 and values[i - 1] > values[i] and values[j + 1] > values[i]:
            minima.append((i + j) // 2)
        i = j + 1
    return minima


def find_spectral_nulls(
    ps: PowerSpectrum, count: int, clip_db: float = -120.0
) -> list[float]:
    """Positive frequencies of the count deepest envelope minima, ascending.

    For a periodic input the envelope is the spectrum sampled on the line
    grid; the sinc^2 nulls show up as line positions whose power collapses.
    Power below clip_db is clipped first so the depth ranking is not decided
    by numerical noise at the bottom of a null.
    """
    if count < 0:
        raise ConfigError("count must be >= 0")
    if ps.chip_rate is not None and count > 0:
        span = float(ps.freqs[-1])
        if span < count * ps.chip_rate:
            raise ConfigError(
                f"spectrum spans {span:g} Hz, cannot hold {count} nulls "
                f"of a {ps.chip_rate:g} Hz chip rate"
            )

    if ps.line_spacing_hz is not None:
        spacing = ps.line_spacing_hz
        k_lo = int(np.ceil(ps.freqs[0] / spacing))
        k_hi = int(np.floor(ps.freqs[-1] / spacing))
        grid = np.arange(k_lo, k_hi + 1) * spacing
        idx = np.clip(
            np.rint((grid - ps.freqs[0]) / ps.resolution_bw).astype(int),
            0,
            ps.freqs.size - 1,
        )
    else:
        idx = np.arange(ps.freqs.size)

    envelope = np.maximum(ps.power_db[idx], clip_db)
    found = []
    for j in _plateau_minima(envelope):
        freq = float(ps.freqs[idx[j]])
        if freq > 0:
            found.append((float(envelope[j]), freq))
    found.sort(key=lambda t: (t[0], t[1]))
    chosen = sorted(freq for _, freq in found[:count])
    return chosen


def inject_jitter(
    w: SampledWaveform, rms_jitter: float, rng_seed: int
) -> SampledWaveform:
    """Displace chip edges by independent zero-mean Gaussian offsets.

    Offsets are quantized to the sample grid. Edges that would cross after
    jittering are collapsed in order (the squeezed chip loses samples), which
    keeps the output length exact. rms_jitter = 0 returns the input as-is.
    """
    if rms_jitter < 0:
        raise ConfigError("rms_jitter must be >= 0")
    if w.chip_rate is None:
        raise ConfigError("waveform carries no chip framing; cannot jitter edges")
    chip_period = 1.0 / w.chip_rate
    if rms_jitter >= 0.5 * chip_period:
        raise JitterTooLarge(
            f"rms_jitter {rms_jitter:g} s >= half a chip period ({0.5 * chip_period:g} s)"
        )
    if rms_jitter == 0:
        return w

    m = w.samples_per_chip
    if m is None or m < 1 or w.sample_rate != w.chip_rate * m:
        raise ConfigError("sample_rate must be an integer multiple of chip_rate")
    n = len(w)
    if n % m:
        raise ConfigError("waveform must hold a whole number of chips")
    total_chips = n // m
    # chip values read back off the clean grid (rectangular hold)
    chip_values = w.samples[::m]

    rng = np.random.default_rng(rng_seed)
    offsets = rng.normal(0.0, rms_jitter, size=total_chips - 1)
    shifts = np.rint(offsets * w.sample_rate).astype(np.int64)
    edges = np.arange(1, total_chips) * m + shifts
    edges = np.clip(edges, 0, n)
    edges = np.maximum.accumulate(edges)
    bounds = np.concatenate(([0], edges, [n]))
    lengths = np.diff(bounds)
    samples = np.repeat(chip_values, lengths)
    return SampledWaveform(
        samples=samples,
        sample_rate=w.sample_rate,
        start_time=w.start_time,
        chip_rate=w.chip_rate,
        chips_per_period=w.chips_per_period,
    )
