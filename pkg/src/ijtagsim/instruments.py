"""Behavioral models of the embedded instruments.

``AdcInstrument`` is an on-chip temperature / supply monitor with a
7-series style 12-bit transfer function and an over-temperature alarm.
``ImuInstrument`` replays raw accelerometer/gyro/temperature samples and
runs an even-parity checker over each sample.

Every instrument exposes ``step(cycle)``, ``capture_value()``,
``update(bits)``, ``inject(spec)`` and a ``fault`` output bit.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

TEMP_FULL_SCALE_K = 503.975
TEMP_OFFSET_K = 273.15
VCC_FULL_SCALE_V = 3.0
ADC_CODES = 4096


class OutOfRange(ValueError):
    pass


class BadSpec(ValueError):
    pass


class AnalogKind(enum.Enum):
    TEMPERATURE = "temp"
    SUPPLY_VOLTAGE = "vcc"


def adc_convert(analog: float, kind: AnalogKind) -> int:
    """Convert a temperature (deg C) or supply voltage (V) to a 12-bit code.

    Rounds half up and clamps to ``[0, 4095]``.
    """
    if kind is AnalogKind.TEMPERATURE:
        if not -TEMP_OFFSET_K <= analog <= 230.0:
            raise OutOfRange(f"temperature {analog} C outside [-273.15, 230]")
        scaled = (analog + TEMP_OFFSET_K) * ADC_CODES / TEMP_FULL_SCALE_K
    else:
        if not 0.0 <= analog <= VCC_FULL_SCALE_V:
            raise OutOfRange(f"supply voltage {analog} V outside [0, 3]")
        scaled = analog * ADC_CODES / VCC_FULL_SCALE_V
    return min(max(math.floor(scaled + 0.5), 0), ADC_CODES - 1)


def parity16(word: int) -> int:
    """Even parity (XOR of all bits) of a 16-bit word."""
    word &= 0xFFFF
    word ^= word >> 8
    word ^= word >> 4
    word ^= word >> 2
    word ^= word >> 1
    return word & 1


class FaultKind(enum.Enum):
    BIT_FLIP = "bitflip"
    STUCK_VALUE = "stuck"
    EXTERNAL_TRIGGER = "trigger"


@dataclass(frozen=True)
class FaultSpec:
    kind: FaultKind
    at_cycle: int = 0
    bit: Optional[int] = None
    value: Optional[int] = None

    @classmethod
    def bit_flip(cls, bit: int, at_cycle: int = 0) -> "FaultSpec":
        return cls(FaultKind.BIT_FLIP, at_cycle, bit=bit)

    @classmethod
    def stuck(cls, value: int, at_cycle: int = 0) -> "FaultSpec":
        return cls(FaultKind.STUCK_VALUE, at_cycle, value=value)

    @classmethod
    def trigger(cls, at_cycle: int = 0) -> "FaultSpec":
        return cls(FaultKind.EXTERNAL_TRIGGER, at_cycle)


def _check_spec(spec: FaultSpec, width: int):
    if spec.at_cycle < 0:
        raise BadSpec(f"negative fault cycle {spec.at_cycle}")
    if spec.kind is FaultKind.BIT_FLIP and (spec.bit is None or not 0 <= spec.bit < width):
        raise BadSpec(f"bit index {spec.bit} outside register width {width}")
    if spec.kind is FaultKind.STUCK_VALUE and (spec.value is None or not 0 <= spec.value < 1 << width):
        raise BadSpec(f"stuck value {spec.value} does not fit {width} bits")


class _FaultQueue:
    def __init__(self):
        self.pending: list[FaultSpec] = []

    def push(self, spec: FaultSpec):
        self.pending.append(spec)

    def due(self, cycle: int) -> list[FaultSpec]:
        """Pop specs scheduled at or before ``cycle``, in queue order."""
        ready = [s for s in self.pending if s.at_cycle <= cycle]
        self.pending = [s for s in self.pending if s.at_cycle > cycle]
        return ready


@dataclass
class AdcInstrument:
    """Internal sensor: die temperature and supply voltage monitor."""

    kind = "xadc"

    temp_c: float = 25.0
    vcc: float = 1.0
    alarm_threshold_c: float = 120.0
    vcc_threshold_v: float = 2.9
    select_vcc: bool = False
    status_temp: int = 0
    status_vcc: int = 0
    alarm: int = 0
    vcc_alarm: int = 0
    triggered: int = 0
    stimulus: list[tuple[int, AnalogKind, float]] = field(default_factory=list)
    _stuck: Optional[int] = field(default=None, repr=False)

    def __post_init__(self):
        self._faults = _FaultQueue()
        self.stimulus = sorted(self.stimulus, key=lambda s: s[0])

    def set_stimulus(self, kind: AnalogKind, value: float):
        if kind is AnalogKind.TEMPERATURE:
            self.temp_c = value
        else:
            self.vcc = value

    def inject(self, spec: FaultSpec):
        _check_spec(spec, 12)
        self._faults.push(spec)

    def step(self, cycle: int):
        while self.stimulus and self.stimulus[0][0] <= cycle:
            _, kind, value = self.stimulus.pop(0)
            self.set_stimulus(kind, value)
        self.status_temp = adc_convert(self.temp_c, AnalogKind.TEMPERATURE)
        self.status_vcc = adc_convert(self.vcc, AnalogKind.SUPPLY_VOLTAGE)
        self.triggered = 0
        for spec in self._faults.due(cycle):
            if spec.kind is FaultKind.BIT_FLIP:
                self.status_temp ^= 1 << spec.bit
            elif spec.kind is FaultKind.STUCK_VALUE:
                self._stuck = spec.value
            else:
                self.triggered = 1
        if self._stuck is not None:
            self.status_temp = self._stuck
        # Alarms compare the analog stimulus, not the (possibly faulty) code.
        self.alarm = int(self.temp_c > self.alarm_threshold_c)
        self.vcc_alarm = int(self.vcc > self.vcc_threshold_v)

    @property
    def fault(self) -> int:
        return self.alarm | self.vcc_alarm | self.triggered

    def capture_value(self) -> str:
        code = self.status_vcc if self.select_vcc else self.status_temp
        return format(code << 4, "016b")

    def update(self, bits: str):
        # LSB of the written TDR word selects the supply channel.
        self.select_vcc = bits.endswith("1")


Sample = tuple[int, int, int, int, int, int, int]


def to_word(value: int) -> int:
    """Two's-complement 16-bit encoding of a signed sample value."""
    if not -0x8000 <= value <= 0xFFFF:
        raise OutOfRange(f"sample value {value} does not fit 16 bits")
    return value & 0xFFFF


def to_signed(word: int) -> int:
    word &= 0xFFFF
    return word - 0x10000 if word & 0x8000 else word


def fold_sample(sample: Sequence[int]) -> int:
    """XOR-fold all channel words; its parity equals the whole sample's parity."""
    word = 0
    for v in sample:
        word ^= to_word(v)
    return word


@dataclass
class ImuInstrument:
    """External IMU replaying raw samples through a parity checker.

    Checker register layout (MSB first): bits 15..2 hold the upper 14 bits
    of the sampled word, bit 1 is the mismatch flag, bit 0 is the parity
    recomputed by the checker.
    """

    kind = "imu"

    playback: list[Sample] = field(default_factory=list)
    accel: tuple[int, int, int] = (0, 0, 0)
    gyro: tuple[int, int, int] = (0, 0, 0)
    temp_raw: int = 0
    word: int = 0
    source_parity: int = 0
    checker: int = 0
    fault_flag: int = 0
    _cursor: int = field(default=0, repr=False)
    _stuck: Optional[int] = field(default=None, repr=False)

    def __post_init__(self):
        self._faults = _FaultQueue()

    def inject(self, spec: FaultSpec):
        _check_spec(spec, 16)
        self._faults.push(spec)

    def _advance(self):
        if not self.playback:
            return
        idx = min(self._cursor, len(self.playback) - 1)
        sample = self.playback[idx]
        self._cursor += 1
        self.accel = tuple(sample[0:3])
        self.gyro = tuple(sample[3:6])
        self.temp_raw = sample[6]
        self.word = fold_sample(sample)
        self.source_parity = parity16(self.word)

    def step(self, cycle: int):
        self._advance()
        received = self.word
        triggered = False
        for spec in self._faults.due(cycle):
            if spec.kind is FaultKind.BIT_FLIP:
                received ^= 1 << spec.bit
            elif spec.kind is FaultKind.STUCK_VALUE:
                self._stuck = spec.value
            else:
                triggered = True
        if self._stuck is not None:
            received = self._stuck
        parity = parity16(received)
        mismatch = int(parity != self.source_parity)
        self.checker = ((received >> 2) << 2) | (mismatch << 1) | parity
        self.fault_flag = 1 if triggered else mismatch

    @property
    def fault(self) -> int:
        return self.fault_flag

    def capture_value(self) -> str:
        return format(self.checker, "016b")

    def update(self, bits: str):
        pass


def step_instrument(inst, cycle: int):
    inst.step(cycle)


def capture_value(inst) -> str:
    return inst.capture_value()


def inject_fault(inst, spec: FaultSpec):
    inst.inject(spec)


REGISTRY: dict[str, Callable[[], object]] = {
    "xadc": AdcInstrument,
    "imu": ImuInstrument,
}


def register_instrument(kind: str, factory: Callable[[], object]):
    REGISTRY[kind] = factory


def make_instrument(kind: str):
    try:
        factory = REGISTRY[kind]
    except KeyError:
        raise KeyError(f"no instrument model registered for {kind!r}") from None
    return factory()


def load_playback(path) -> list[Sample]:
    """Read an IMU playback file: 7 signed integers per line."""
    samples = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 7:
            raise ValueError(f"{path}:{lineno}: expected 7 values, got {len(parts)}")
        values = tuple(int(p) for p in parts)
        for v in values:
            if not -0x8000 <= v <= 0x7FFF:
                raise ValueError(f"{path}:{lineno}: {v} is not a signed 16-bit value")
        samples.append(values)
    return samples


def load_stimulus(path) -> list[tuple[int, AnalogKind, float]]:
    """Read an ADC stimulus file: ``<cycle> temp|vcc <value>`` per line."""
    entries = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected '<cycle> temp|vcc <value>'")
        try:
            kind = AnalogKind(parts[1])
            entries.append((int(parts[0]), kind, float(parts[2])))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: bad stimulus line {line!r}") from None
    return entries
