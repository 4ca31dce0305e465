"""Dual-mode sounding baseband: TX code generation and the sliding correlator.

TX mode emits the spread-spectrum sounding waveform at chip rate alpha. RX
mode runs the received complex baseband against a local replica of the same
code clocked slightly slower at beta, through a pair of mixers and one-pole
low-pass filters, producing slow-time I/Q correlation traces plus a Sync
trace (local TX code times RX code) that marks the zero-delay reference.

The relative code slip sweeps one full code period every dilated_period
L*gamma/alpha seconds, with gamma = alpha/(alpha - beta); a true propagation
delay tau therefore appears gamma*tau after the sync peak in slow time. The
RX code is generated by time-indexed chip lookup, floor(t*beta) mod L, so the
slip is exact and no resampling error enters.
"""

from __future__ import annotations

import enum
import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import (
    CaptureTooShort,
    ConfigError,
    InvalidRates,
    NoSyncPeak,
    SampleRateMismatch,
)
from .channel import ChannelModel
from .pn import ChipSequence, PnConfig, generate_period
from .waveform import SampledWaveform

DB_FLOOR = -300.0
_BLOCK = 1 << 20  # streaming block length in samples


class Mode(enum.Enum):
    TX = "tx"
    RX = "rx"


def sliding_factor(alpha: float, beta: float) -> float:
    """gamma = alpha / (alpha - beta), the slow-time dilation ratio."""
    if not (0 < beta < alpha):
        raise InvalidRates(
            f"need 0 < beta < alpha, got alpha={alpha!r}, beta={beta!r}"
        )
    return alpha / (alpha - beta)


@dataclass(frozen=True)
class SounderConfig:
    """Rates and filter settings for one sounding run.

    The single pn config drives both code generators (they sit on one device
    and share the code programming). beta_ppm_error models residual RX clock
    offset from an imperfect frequency reference; the derived gamma and all
    delay mapping use the nominal beta, so a nonzero error skews the measured
    axis exactly as it would on the bench.
    """

    pn: PnConfig
    alpha: float
    beta: float
    sample_rate: float
    lpf_cutoff: float | None = None
    capture: float | None = None
    mode: Mode = Mode.RX
    beta_ppm_error: float = 0.0

    def __post_init__(self):
        if not (0 < self.beta < self.alpha):
            raise InvalidRates(
                f"need 0 < beta < alpha, got alpha={self.alpha!r}, beta={self.beta!r}"
            )
        if self.sample_rate < 2 * self.alpha:
            raise InvalidRates(
                f"sample_rate {self.sample_rate:g} below Nyquist for alpha={self.alpha:g}"
            )
        if self.lpf_cutoff is None:
            object.__setattr__(self, "lpf_cutoff", 2.0 * (self.alpha - self.beta))
        if not self.lpf_cutoff > (self.alpha - self.beta):
            raise ConfigError(
                f"lpf_cutoff {self.lpf_cutoff:g} must exceed alpha-beta ="
                f" {self.alpha - self.beta:g} or the correlation envelope is lost"
            )
        if self.capture is None:
            object.__setattr__(self, "capture", 5.25 * self.dilated_period)
        if not self.capture > 0:
            raise ConfigError(f"capture must be positive, got {self.capture}")

    @property
    def gamma(self) -> float:
        return sliding_factor(self.alpha, self.beta)

    @property
    def beta_effective(self) -> float:
        return self.beta * (1.0 + self.beta_ppm_error * 1e-6)

    @property
    def dilated_period(self) -> float:
        """Slow-time spacing of code realignments, L*gamma/alpha seconds."""
        return self.pn.length * self.gamma / self.alpha

    @property
    def decimation(self) -> int:
        return max(1, int(self.sample_rate // (8.0 * self.lpf_cutoff)))

    @property
    def slow_rate(self) -> float:
        return self.sample_rate / self.decimation


@dataclass(frozen=True)
class PdpTrace:
    """Slow-time correlator outputs, decimated to slow_rate."""

    i_out: np.ndarray
    q_out: np.ndarray
    sync: np.ndarray
    slow_rate: float
    gamma: float
    dilated_period: float
    code_length: int
    alpha: float

    def __post_init__(self):
        for name in ("i_out", "q_out", "sync"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.i_out.shape == self.q_out.shape == self.sync.shape):
            raise ConfigError("i_out, q_out, sync must have equal length")

    def __len__(self) -> int:
        return int(self.sync.size)

    def times(self) -> np.ndarray:
        return np.arange(self.sync.size) / self.slow_rate


@dataclass(frozen=True)
class PdpProfile:
    """Power-delay profile: absolute delay axis, dB relative to the peak."""

    delays: np.ndarray
    power_db: np.ndarray
    averaged_over: int
    power_linear: np.ndarray | None = None
    bins_per_chip: int = 1
    alpha: float | None = None

    def __post_init__(self):
        for name in ("delays", "power_db", "power_linear"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr, dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.delays.shape != self.power_db.shape:
            raise ConfigError("delays and power_db must have matching shape")

    @property
    def code_length(self) -> int:
        return int(self.delays.size // self.bins_per_chip)

    def peak_delay(self) -> float:
        return float(self.delays[int(np.argmax(self.power_db))])


@functools.lru_cache(maxsize=32)
def _bipolar_table(pn: PnConfig) -> np.ndarray:
    table = generate_period(pn).bipolar()
    table.setflags(write=False)
    return table


def _code_samples(
    table: np.ndarray, start: int, count: int, chips_per_sample: float
) -> np.ndarray:
    """Bipolar code sampled at indices start..start+count-1 of the chip clock."""
    n = np.arange(start, start + count, dtype=np.float64)
    idx = np.floor(n * chips_per_sample).astype(np.int64) % table.size
    return table[idx]


def tx_baseband(cfg: SounderConfig) -> SampledWaveform:
    """The sounding waveform: capture seconds of the bipolar code at rate alpha.

    Chip k spans [k/alpha, (k+1)/alpha); sample n takes the chip at t = n/fs,
    so chip boundaries sit on the exact time grid for any fs >= 2*alpha.
    """
    if cfg.mode is not Mode.TX:
        raise ConfigError("tx_baseband needs a config with mode=TX")
    table = _bipolar_table(cfg.pn)
    count = int(round(cfg.capture * cfg.sample_rate))
    if count < 1:
        raise ConfigError("capture too short for even one sample")
    samples = _code_samples(
        table, 0, count, cfg.alpha / cfg.sample_rate
    ).astype(np.complex128)
    ratio = cfg.sample_rate / cfg.alpha
    integer_oversampling = ratio == int(ratio)
    return SampledWaveform(
        samples=samples,
        sample_rate=cfg.sample_rate,
        chip_rate=cfg.alpha if integer_oversampling else None,
        chips_per_period=cfg.pn.length if integer_oversampling else None,
    )


def rx_pn_chip_at(t, cfg: SounderConfig):
    """Local RX code value at time t (seconds): chip floor(t*beta) mod L, bipolar.

    Accepts a scalar or an array; exact fractional-rate generation, no
    resampled waveform is ever built.
    """
    table = _bipolar_table(cfg.pn)
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0):
        raise ConfigError("t must be >= 0")
    idx = np.floor(t * cfg.beta_effective).astype(np.int64) % table.size
    out = table[idx]
    return float(out) if out.ndim == 0 else out


def sliding_correlate(received: SampledWaveform, cfg: SounderConfig) -> PdpTrace:
    """Stream the received samples through the sliding correlator.

    Per sample n at t = n/fs: mix Re/Im of the input and the clean local TX
    replica s(t) with the slower RX code r(t), low-pass each product with a
    one-pole IIR at lpf_cutoff, then integrate-and-dump: each run of
    decimation consecutive filter outputs averages into one slow sample.
    The averaging is the anti-alias guard the one-pole filter alone cannot
    provide; plain subsampling would fold the filter's high-frequency tail
    back into the slow band. Filter state carries across blocks and blocks
    are cut at window boundaries, so block size cannot change results.
    """
    if cfg.mode is not Mode.RX:
        raise ConfigError("sliding_correlate needs a config with mode=RX")
    if received.sample_rate != cfg.sample_rate:
        raise SampleRateMismatch(
            f"received at {received.sample_rate:g} Hz, config says {cfg.sample_rate:g} Hz"
        )
    n_total = len(received)
    if n_total / cfg.sample_rate < cfg.dilated_period:
        raise CaptureTooShort(
            f"{n_total / cfg.sample_rate:g} s of input covers less than one "
            f"dilated period ({cfg.dilated_period:g} s)"
        )

    table = _bipolar_table(cfg.pn)
    fs = cfg.sample_rate
    rx_ratio = cfg.beta_effective / fs
    tx_ratio = cfg.alpha / fs
    pole = math.exp(-2.0 * math.pi * cfg.lpf_cutoff / fs)
    b_coef = np.array([1.0 - pole])
    a_coef = np.array([1.0, -pole])
    zi_i = np.zeros(1)
    zi_q = np.zeros(1)
    zi_s = np.zeros(1)
    dec = cfg.decimation
    block = max(dec, (_BLOCK // dec) * dec)

    parts_i, parts_q, parts_s = [], [], []
    for start in range(0, n_total, block):
        stop = min(start + block, n_total)
        count = stop - start
        r = _code_samples(table, start, count, rx_ratio)
        s_local = _code_samples(table, start, count, tx_ratio)
        x = received.samples[start:stop]
        yi, zi_i = lfilter(b_coef, a_coef, x.real * r, zi=zi_i)
        yq, zi_q = lfilter(b_coef, a_coef, x.imag * r, zi=zi_q)
        ys, zi_s = lfilter(b_coef, a_coef, s_local * r, zi=zi_s)
        # full windows only; a trailing partial window (final block) is dropped
        whole = (count // dec) * dec
        parts_i.append(yi[:whole].reshape(-1, dec).mean(axis=1))
        parts_q.append(yq[:whole].reshape(-1, dec).mean(axis=1))
        parts_s.append(ys[:whole].reshape(-1, dec).mean(axis=1))

    return PdpTrace(
        i_out=np.concatenate(parts_i),
        q_out=np.concatenate(parts_q),
        sync=np.concatenate(parts_s),
        slow_rate=cfg.slow_rate,
        gamma=cfg.gamma,
        dilated_period=cfg.dilated_period,
        code_length=cfg.pn.length,
        alpha=cfg.alpha,
    )


def find_sync_peaks(trace: PdpTrace) -> list[int]:
    """Slow-time indices of sync-channel peaks, one per dilated period.

    Rule: within each dilated-period window the sync maximum counts as a peak
    only if its power is at least 6 dB above the whole-trace median power.
    Windows are walked outward from the global maximum in exact
    dilated-period steps, searching +-1/8 period around each predicted spot.
    """
    sync = trace.sync
    n = sync.size
    period = trace.dilated_period * trace.slow_rate
    if n < 1 or period <= 0:
        raise NoSyncPeak("empty sync trace")
    median_power = float(np.median(sync**2))
    threshold = 4.0 * median_power  # 6 dB in power

    # the filters start from zero state, so an alignment right at the trace
    # head produces a distorted, late-peaking lobe; ignore that region
    warmup = period / 8.0

    anchor = int(np.argmax(sync))
    if sync[anchor] <= 0 or sync[anchor] ** 2 < threshold:
        raise NoSyncPeak(
            "sync trace has no maximum 6 dB above its median; "
            "check the clock rates and filter cutoff, or extend the capture"
        )

    half_win = max(1, int(round(period / 8.0)))
    peaks = [anchor] if anchor >= warmup else []
    for direction in (-1, 1):
        k = 1
        while True:
            center = anchor + direction * k * period
            lo = int(round(center)) - half_win
            hi = int(round(center)) + half_win + 1
            if hi <= 0 or lo >= n:
                break
            lo_c, hi_c = max(lo, 0), min(hi, n)
            j = lo_c + int(np.argmax(sync[lo_c:hi_c]))
            if j >= warmup and sync[j] > 0 and sync[j] ** 2 >= threshold:
                peaks.append(j)
            k += 1
    if not peaks:
        raise NoSyncPeak("no sync peak clear of the filter warm-up region")
    return sorted(peaks)


def extract_pdp(
    trace: PdpTrace,
    periods_to_average: int = 4,
    bins_per_chip: int = 1,
    threads: int = 1,
) -> PdpProfile:
    """Fold the slow-time trace into an absolute power-delay profile.

    Each complete dilated period after a sync peak becomes one segment; slow
    time maps to delay as tau = (t_slow - t_sync)/gamma, binned to
    bins_per_chip bins per chip. Within a segment, I and Q average coherently
    per bin (the channel is static over a segment) before the power I^2+Q^2
    is formed; the per-segment powers then average into the profile. Segments
    are processed independently (optionally across threads) and merged in
    slow time order, so thread count cannot change the result.
    """
    if periods_to_average < 1:
        raise ConfigError("periods_to_average must be >= 1")
    if bins_per_chip < 1:
        raise ConfigError("bins_per_chip must be >= 1")
    n = len(trace)
    period = trace.dilated_period * trace.slow_rate
    seg_len = int(math.floor(period + 1e-9))
    if seg_len < 1 or n < seg_len:
        raise CaptureTooShort(
            f"trace holds {n} slow samples, one dilated period needs {seg_len}"
        )

    peaks = find_sync_peaks(trace)
    usable = [p for p in peaks if p + seg_len <= n]
    if len(usable) < periods_to_average:
        raise CaptureTooShort(
            f"only {len(usable)} complete dilated periods in the trace, "
            f"need {periods_to_average}; extend capture"
        )
    usable = usable[:periods_to_average]

    n_bins = trace.code_length * bins_per_chip
    # delay-bin index for each in-segment sample; identical for all segments.
    # The +0.5 centers bins on whole-chip delays so an on-grid path apex sits
    # mid-bin instead of on a bin edge.
    scale = trace.alpha * bins_per_chip / (trace.gamma * trace.slow_rate)
    bins = np.floor(np.arange(seg_len) * scale + 0.5).astype(np.int64) % n_bins
    counts = np.bincount(bins, minlength=n_bins).astype(np.float64)
    filled = counts > 0

    def segment_power(start: int) -> np.ndarray:
        sum_i = np.bincount(
            bins, weights=trace.i_out[start : start + seg_len], minlength=n_bins
        )
        sum_q = np.bincount(
            bins, weights=trace.q_out[start : start + seg_len], minlength=n_bins
        )
        mean_i = np.divide(sum_i, counts, out=np.zeros(n_bins), where=filled)
        mean_q = np.divide(sum_q, counts, out=np.zeros(n_bins), where=filled)
        return mean_i**2 + mean_q**2

    if threads > 1 and len(usable) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            seg_powers = list(pool.map(segment_power, usable))
    else:
        seg_powers = [segment_power(p) for p in usable]

    linear = np.mean(np.stack(seg_powers), axis=0)
    peak = float(linear.max())
    if peak <= 0:
        raise NoSyncPeak("profile is identically zero")
    normalized = linear / peak
    power_db = 10.0 * np.log10(np.maximum(normalized, 10.0 ** (DB_FLOOR / 10.0)))
    delays = np.arange(n_bins) / (trace.alpha * bins_per_chip)
    return PdpProfile(
        delays=delays,
        power_db=power_db,
        averaged_over=len(usable),
        power_linear=normalized,
        bins_per_chip=bins_per_chip,
        alpha=trace.alpha,
    )


def fast_pdp_oracle(seq: ChipSequence, ch: ChannelModel) -> PdpProfile:
    """Brute-force PDP at chip resolution, no sliding simulation.

    The received period is built by cyclically shifting the bipolar code to
    each path delay (rounded to the nearest chip) and summing complex gains;
    the profile is the cyclic cross-correlation against the clean code,
    computed in the frequency domain. Noiseless channels only.
    """
    if ch.snr_db is not None:
        raise ConfigError("oracle is defined for noiseless channels only")
    code = seq.bipolar()
    length = code.size
    chip_rate = seq.chip_rate
    received = np.zeros(length, dtype=np.complex128)
    for p in ch.paths:
        shift = int(round(p.delay * chip_rate)) % length
        received += p.complex_gain * np.roll(code, shift)

    spec_rx = np.fft.fft(received)
    spec_code = np.fft.fft(code)
    corr = np.fft.ifft(spec_rx * np.conj(spec_code)) / length
    linear = np.abs(corr) ** 2
    peak = float(linear.max())
    if peak <= 0:
        raise ConfigError("channel annihilates the code; empty profile")
    normalized = linear / peak
    power_db = 10.0 * np.log10(np.maximum(normalized, 10.0 ** (DB_FLOOR / 10.0)))
    return PdpProfile(
        delays=np.arange(length) / chip_rate,
        power_db=power_db,
        averaged_over=1,
        power_linear=normalized,
        bins_per_chip=1,
        alpha=chip_rate,
    )
