"""Programmable maximal-length PN sequence generation and validation.

Models the shift-register generator of the sounder baseband: an N-stage
register (N selectable 5..12 through a 3-bit stage-select code) with feedback
taps chosen by a 12-bit tap word, in either modular (MSRG) or simple (SSRG)
form. Stage 1 sits at the register input, stage N drives the output; tap
position i refers to stage i and the MSRG adder for tap t sits between stages
t and t+1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import (
    AllZeroState,
    ConfigError,
    EmptyTaps,
    NotMaximal,
    TapOutOfRange,
)

CHIP_STAGES_MIN = 5
CHIP_STAGES_MAX = 12

# One known-primitive tap set per programmable stage count, verified maximal
# by period measurement in the test suite (both MSRG and SSRG).
DEFAULT_TAPS: dict[int, tuple[int, ...]] = {
    5: (5, 3),
    6: (6, 5),
    7: (7, 6),
    8: (8, 6, 5, 4),
    9: (9, 5),
    10: (10, 7),
    11: (11, 8, 5, 2),
    12: (12, 6, 4, 1),
}


class Structure(enum.Enum):
    """Shift-register generator family."""

    MSRG = "msrg"
    SSRG = "ssrg"


def _parse_code(code: int | str, width: int, name: str) -> int:
    """Accept an int or a binary string for a control code, check bit width."""
    if isinstance(code, str):
        if not code or any(c not in "01" for c in code):
            raise ConfigError(f"{name} must be a binary string, got {code!r}")
        value = int(code, 2)
    else:
        value = int(code)
    if value < 0 or value >= (1 << width):
        raise ConfigError(f"{name} must fit in {width} bits, got {value}")
    return value


@dataclass(frozen=True)
class PnConfig:
    """Shift-register generator configuration.

    ``seed`` is the register content in stage order (index 0 = stage 1).
    ``stage_select``/``tap_word`` are only populated for configurations that
    map onto the chip's control codes (stages 5..12); analysis configs with
    other stage counts leave them ``None``.
    """

    stages: int
    structure: Structure = Structure.MSRG
    taps: tuple[int, ...] = ()
    seed: tuple[int, ...] = ()
    stage_select: int | None = None
    tap_word: int | None = None

    def __post_init__(self):
        if self.stages < 2:
            raise ConfigError(f"stages must be >= 2, got {self.stages}")
        taps = tuple(sorted(set(int(t) for t in self.taps), reverse=True))
        if not taps:
            raise EmptyTaps("no feedback taps selected")
        if taps[0] > self.stages or taps[-1] < 1:
            raise TapOutOfRange(
                f"taps {taps} outside [1, {self.stages}] for {self.stages} stages"
            )
        if self.stages not in taps:
            raise ConfigError(
                f"tap set {taps} must include stage {self.stages}; "
                "the feedback source is the last stage"
            )
        object.__setattr__(self, "taps", taps)

        seed = tuple(int(b) for b in self.seed) if self.seed else (1,) * self.stages
        if len(seed) != self.stages or any(b not in (0, 1) for b in seed):
            raise ConfigError(f"seed must be {self.stages} bits of 0/1")
        if not any(seed):
            raise AllZeroState("all-zero seed would lock the generator")
        object.__setattr__(self, "seed", seed)

        # Control codes, when present, must agree with the explicit fields.
        if self.stage_select is not None or self.tap_word is not None:
            if not CHIP_STAGES_MIN <= self.stages <= CHIP_STAGES_MAX:
                raise ConfigError(
                    f"control codes only cover stages {CHIP_STAGES_MIN}.."
                    f"{CHIP_STAGES_MAX}, got {self.stages}"
                )
            if self.stage_select is None or self.tap_word is None:
                raise ConfigError("stage_select and tap_word must be set together")
            if self.stages != CHIP_STAGES_MIN + self.stage_select:
                raise ConfigError(
                    f"stage_select {self.stage_select} implies "
                    f"{CHIP_STAGES_MIN + self.stage_select} stages, got {self.stages}"
                )
            word_taps = tuple(
                sorted((i for i in range(1, 13) if self.tap_word >> (i - 1) & 1),
                       reverse=True)
            )
            if word_taps != taps:
                raise ConfigError(f"tap_word selects {word_taps}, taps field says {taps}")

    @property
    def length(self) -> int:
        """Maximal sequence length 2^N - 1 for this stage count."""
        return (1 << self.stages) - 1

    def seed_int(self) -> int:
        """Seed packed into an int, stage i in bit i-1 (stage 1 = LSB)."""
        return sum(b << i for i, b in enumerate(self.seed))

    def to_json_dict(self) -> dict:
        """JSON object form: {stages, structure, taps, seed(hex), codes(binary)}."""
        return {
            "stages": self.stages,
            "structure": self.structure.value,
            "taps": list(self.taps),
            "seed": format(self.seed_int(), "x"),
            "stage_select": (
                None if self.stage_select is None else format(self.stage_select, "03b")
            ),
            "tap_word": (
                None if self.tap_word is None else format(self.tap_word, "012b")
            ),
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "PnConfig":
        stages = int(obj["stages"])
        structure = Structure(obj.get("structure", "msrg"))
        taps = tuple(int(t) for t in obj["taps"])
        seed_hex = obj.get("seed")
        if seed_hex:
            val = int(str(seed_hex), 16)
            seed = tuple((val >> i) & 1 for i in range(stages))
        else:
            seed = ()
        sel = obj.get("stage_select")
        word = obj.get("tap_word")
        return cls(
            stages=stages,
            structure=structure,
            taps=taps,
            seed=seed,
            stage_select=None if sel is None else _parse_code(sel, 3, "stage_select"),
            tap_word=None if word is None else _parse_code(word, 12, "tap_word"),
        )


def decode_controls(
    stage_select: int | str,
    tap_word: int | str,
    structure: Structure = Structure.MSRG,
    seed: Iterable[int] = (),
) -> PnConfig:
    """Decode the 3-bit stage select and 12-bit tap word into a PnConfig.

    stages = 5 + value(S<2:0>); bit i of SW<12:1> selects tap position i.
    Set bits above the selected stage count raise TapOutOfRange, so
    configuration mistakes surface immediately.
    """
    sel = _parse_code(stage_select, 3, "stage_select")
    word = _parse_code(tap_word, 12, "tap_word")
    stages = CHIP_STAGES_MIN + sel
    taps = tuple(i for i in range(1, 13) if word >> (i - 1) & 1)
    if not taps:
        raise EmptyTaps("tap_word selects no taps")
    high = [t for t in taps if t > stages]
    if high:
        raise TapOutOfRange(
            f"tap_word sets bit(s) {high} above the selected stage count {stages}"
        )
    return PnConfig(
        stages=stages,
        structure=structure,
        taps=taps,
        seed=tuple(seed),
        stage_select=sel,
        tap_word=word,
    )


def default_config(
    stages: int, structure: Structure = Structure.MSRG
) -> PnConfig:
    """Chip-style config with the shipped primitive tap set for this N."""
    if stages not in DEFAULT_TAPS:
        raise ConfigError(f"no default tap set for stages={stages}")
    taps = DEFAULT_TAPS[stages]
    word = sum(1 << (t - 1) for t in taps)
    return PnConfig(
        stages=stages,
        structure=structure,
        taps=taps,
        stage_select=stages - CHIP_STAGES_MIN,
        tap_word=word,
    )


def _tap_mask(config: PnConfig) -> int:
    return sum(1 << (t - 1) for t in config.taps)


def _msrg_inject_mask(config: PnConfig) -> int:
    # Feedback into stage 1 plus an adder between stage t and t+1 per tap t < N.
    mask = 1
    for t in config.taps:
        if t < config.stages:
            mask |= 1 << t
    return mask


def _step_int(state: int, config: PnConfig) -> tuple[int, int]:
    n = config.stages
    out = (state >> (n - 1)) & 1
    if config.structure is Structure.SSRG:
        fb = (state & _tap_mask(config)).bit_count() & 1
        nxt = ((state << 1) | fb) & ((1 << n) - 1)
    else:
        nxt = (state << 1) & ((1 << n) - 1)
        if out:
            nxt ^= _msrg_inject_mask(config)
    return nxt, out


def step(state: Iterable[int], config: PnConfig) -> tuple[tuple[int, ...], int]:
    """Advance the register one clock; return (next state, output chip).

    State is given in stage order (index 0 = stage 1). MSRG: the last stage's
    value is the output and is XOR-injected at each tap adder during the
    shift. SSRG: the XOR of all tapped stages is shifted in at stage 1 and the
    output is taken from stage N.
    """
    bits = tuple(int(b) for b in state)
    if len(bits) != config.stages:
        raise ConfigError(f"state must be {config.stages} bits")
    if not any(bits):
        raise AllZeroState("all-zero state is absorbing")
    s = sum(b << i for i, b in enumerate(bits))
    nxt, out = _step_int(s, config)
    return tuple((nxt >> i) & 1 for i in range(config.stages)), out


@dataclass(frozen=True)
class ChipSequence:
    """One period of binary chips plus its chip rate."""

    chips: np.ndarray
    chip_rate: float = 1.0
    config: PnConfig | None = None

    def __post_init__(self):
        chips = np.asarray(self.chips, dtype=np.uint8)
        if chips.ndim != 1 or chips.size == 0:
            raise ConfigError("chips must be a nonempty 1-D bit array")
        if chips.max(initial=0) > 1:
            raise ConfigError("chips must be 0/1")
        if self.chip_rate <= 0:
            raise ConfigError("chip_rate must be positive")
        chips.setflags(write=False)
        object.__setattr__(self, "chips", chips)

    def __len__(self) -> int:
        return int(self.chips.size)

    def bipolar(self) -> np.ndarray:
        """Chips mapped 0 -> +1, 1 -> -1, as float64."""
        return 1.0 - 2.0 * self.chips.astype(np.float64)

    def to_ascii(self) -> str:
        """One line of '0'/'1' characters."""
        return "".join("1" if c else "0" for c in self.chips)

    def to_packed_bytes(self) -> bytes:
        """Chips packed 8 per byte, MSB first, zero-padded at the tail."""
        return np.packbits(self.chips).tobytes()


def measure_period(config: PnConfig) -> int:
    """Orbit length of the seed state under the register update."""
    seed = config.seed_int()
    state = seed
    limit = config.length
    for count in range(1, limit + 1):
        state, _ = _step_int(state, config)
        if state == seed:
            return count
    # Unreachable for an invertible update, which N-in-taps guarantees.
    raise NotMaximal(limit + 1, limit)


def generate_period(config: PnConfig, chip_rate: float = 1.0) -> ChipSequence:
    """Generate exactly one full period starting from the seed.

    Raises NotMaximal (carrying the observed period) when the tap set is not
    primitive for this stage count, so callers can reject bad tap words.
    """
    seed = config.seed_int()
    state = seed
    limit = config.length
    out = np.empty(limit, dtype=np.uint8)
    for i in range(limit):
        state, chip = _step_int(state, config)
        out[i] = chip
        if state == seed and i + 1 < limit:
            raise NotMaximal(i + 1, limit)
    if state != seed:
        # Period did not divide 2^N - 1; find it to report something useful.
        raise NotMaximal(measure_period(config), limit)
    return ChipSequence(chips=out, chip_rate=chip_rate, config=config)


@dataclass(frozen=True)
class RunHistogram:
    """Cyclic run-length counts, split by the repeated symbol."""

    ones: dict[int, int] = field(default_factory=dict)
    zeros: dict[int, int] = field(default_factory=dict)

    def total_chips(self) -> int:
        return sum(k * c for k, c in self.ones.items()) + sum(
            k * c for k, c in self.zeros.items()
        )

    def count(self, length: int) -> tuple[int, int]:
        """(ones_runs, zeros_runs) of the given run length."""
        return self.ones.get(length, 0), self.zeros.get(length, 0)


def run_histogram(seq: ChipSequence) -> RunHistogram:
    """Count runs of consecutive equal chips on the cyclic sequence.

    Cyclic counting makes the histogram rotation-invariant; a constant
    sequence is a single run spanning the whole period.
    """
    chips = seq.chips
    n = chips.size
    boundaries = np.flatnonzero(chips != np.roll(chips, 1))
    ones: dict[int, int] = {}
    zeros: dict[int, int] = {}
    if boundaries.size == 0:
        target = ones if chips[0] else zeros
        target[n] = 1
        return RunHistogram(ones=ones, zeros=zeros)
    lengths = np.diff(np.append(boundaries, boundaries[0] + n))
    for start, length in zip(boundaries, lengths):
        target = ones if chips[start] else zeros
        length = int(length)
        target[length] = target.get(length, 0) + 1
    return RunHistogram(ones=ones, zeros=zeros)


def periodic_autocorrelation(seq: ChipSequence, lag: int) -> int:
    """Bipolar periodic autocorrelation at one lag: sum_i b[i]*b[(i+lag) mod L]."""
    n = len(seq)
    if not 0 <= lag < n:
        raise ConfigError(f"lag must be in [0, {n}), got {lag}")
    b = seq.bipolar()
    return int(round(float(np.dot(b, np.roll(b, -lag)))))


def expected_maximal_runs(stages: int) -> RunHistogram:
    """Run histogram an N-stage maximal sequence must show.

    One ones-run of length N and one zeros-run of length N-1; for each
    1 <= k <= N-2 there are exactly 2^(N-2-k) runs of ones and as many
    of zeros.
    """
    ones = {stages: 1}
    zeros = {stages - 1: 1}
    for k in range(1, stages - 1):
        ones[k] = 1 << (stages - 2 - k)
        zeros[k] = 1 << (stages - 2 - k)
    return RunHistogram(ones=ones, zeros=zeros)


def validate_m_sequence(seq: ChipSequence) -> dict:
    """Check every m-sequence law on one generated period.

    Returns a report dict with the measured quantities and a ``violations``
    list naming each failed law (empty for a proper maximal sequence).
    """
    n_stages = seq.config.stages if seq.config else None
    length = len(seq)
    ones = int(seq.chips.sum())
    zeros = length - ones
    hist = run_histogram(seq)
    b = seq.bipolar()
    spectrum = np.fft.fft(b)
    acf = np.fft.ifft(spectrum * np.conj(spectrum)).real
    acf = np.rint(acf).astype(np.int64)
    off_peak = acf[1:]

    violations = []
    if n_stages is not None:
        expected_len = (1 << n_stages) - 1
        if length != expected_len:
            violations.append(f"period: {length} != 2^{n_stages}-1 = {expected_len}")
        if ones != 1 << (n_stages - 1):
            violations.append(f"balance: {ones} ones != {1 << (n_stages - 1)}")
        expected_hist = expected_maximal_runs(n_stages)
        if (hist.ones, hist.zeros) != (expected_hist.ones, expected_hist.zeros):
            violations.append("runs: histogram deviates from the maximal-sequence law")
    else:
        if ones != zeros + 1:
            violations.append(f"balance: {ones} ones vs {zeros} zeros")
    if acf[0] != length:
        violations.append(f"autocorrelation: lag 0 gave {acf[0]} != {length}")
    if off_peak.size and (off_peak.min() != -1 or off_peak.max() != -1):
        violations.append(
            "autocorrelation: off-peak values span "
            f"[{off_peak.min()}, {off_peak.max()}], expected -1"
        )

    return {
        "stages": n_stages,
        "period": length,
        "ones": ones,
        "zeros": zeros,
        "run_histogram": {
            "ones": {str(k): v for k, v in sorted(hist.ones.items())},
            "zeros": {str(k): v for k, v in sorted(hist.zeros.items())},
        },
        "autocorrelation": {
            "lag0": int(acf[0]),
            "off_peak_min": int(off_peak.min()) if off_peak.size else None,
            "off_peak_max": int(off_peak.max()) if off_peak.size else None,
        },
        "violations": violations,
    }
