"""Line-oriented scenario language.

Header lines::

    network <file>                 scan network description (default: bundled paper network)
    playback <tdr> <file>          IMU samples for the instrument on <tdr>
    stimulus <tdr> <file>          ADC stimulus schedule for <tdr>
    horizon <cycles>               last simulated cycle (default: last event + 100)

Events, applied at the start of the given cycle in file order::

    at <c> stimulus <tdr> temp|vcc <value>
    at <c> inject <tdr> trigger | bitflip <bit> | stuck <value>
    at <c> read <tdr>
    at <c> write <tdr> <bits>
    at <c> mask <node> | unmask <node>
    at <c> flag <node> f|c 0|1
    at <c> reset

Expectations (order independent)::

    expect interrupt within <n>
    expect localized <hex4> ... | none
    expect latency <detection> <localization>
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .instruments import AnalogKind, FaultSpec


class ScenarioError(ValueError):
    def __init__(self, errors: list[tuple[int, str]], source: str = "<scenario>"):
        self.errors = errors
        super().__init__("\n".join(f"{source}:{line}: {msg}" for line, msg in errors))


@dataclass(frozen=True)
class Inject:
    target: str
    spec: FaultSpec


@dataclass(frozen=True)
class Stimulus:
    target: str
    kind: AnalogKind
    value: float


@dataclass(frozen=True)
class Access:
    target: str
    write_value: Optional[str] = None


@dataclass(frozen=True)
class Mask:
    node: str
    masked: bool = True


@dataclass(frozen=True)
class ForceFlag:
    node: str
    flag: str  # "f" | "c"
    value: int


@dataclass(frozen=True)
class Reset:
    pass


Action = Union[Inject, Stimulus, Access, Mask, ForceFlag, Reset]


@dataclass(frozen=True)
class Event:
    at_cycle: int
    action: Action
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class InterruptWithin:
    cycles: int

    def __str__(self):
        return f"interrupt within {self.cycles}"


@dataclass(frozen=True)
class LocalizedEquals:
    addresses: tuple[int, ...]

    def __str__(self):
        return "localized " + (" ".join(f"{a:04X}" for a in self.addresses) or "none")


@dataclass(frozen=True)
class LatencyEquals:
    detection: int
    localization: int

    def __str__(self):
        return f"latency {self.detection} {self.localization}"


Expectation = Union[InterruptWithin, LocalizedEquals, LatencyEquals]


@dataclass
class Scenario:
    name: str = "scenario"
    network_file: Optional[Path] = None
    playback: dict[str, Path] = field(default_factory=dict)
    stimulus: dict[str, Path] = field(default_factory=dict)
    events: list[Event] = field(default_factory=list)
    expectations: list[Expectation] = field(default_factory=list)
    horizon: Optional[int] = None

    def effective_horizon(self) -> int:
        if self.horizon is not None:
            return self.horizon
        return max((e.at_cycle for e in self.events), default=0) + 100


def _int(text: str) -> int:
    return int(text, 0)


def _parse_inject(args: list[str], at: int) -> FaultSpec:
    if args == ["trigger"]:
        return FaultSpec.trigger(at)
    if len(args) == 2 and args[0] == "bitflip":
        return FaultSpec.bit_flip(_int(args[1]), at)
    if len(args) == 2 and args[0] == "stuck":
        return FaultSpec.stuck(_int(args[1]), at)
    raise ValueError("inject expects 'trigger', 'bitflip <bit>' or 'stuck <value>'")


def _parse_action(words: list[str], at: int) -> Action:
    verb, args = words[0], words[1:]
    if verb == "reset" and not args:
        return Reset()
    if verb == "stimulus" and len(args) == 3:
        return Stimulus(args[0], AnalogKind(args[1]), float(args[2]))
    if verb == "inject" and len(args) >= 2:
        return Inject(args[0], _parse_inject(args[1:], at))
    if verb == "read" and len(args) == 1:
        return Access(args[0])
    if verb == "write" and len(args) == 2:
        if set(args[1]) - {"0", "1"}:
            raise ValueError(f"write value {args[1]!r} is not a bit string")
        return Access(args[0], args[1])
    if verb in ("mask", "unmask") and len(args) == 1:
        return Mask(args[0], verb == "mask")
    if verb == "flag" and len(args) == 3 and args[1] in ("f", "c") and args[2] in ("0", "1"):
        return ForceFlag(args[0], args[1], int(args[2]))
    raise ValueError(f"bad action: {' '.join(words)!r}")


def _parse_expect(words: list[str]) -> Expectation:
    if len(words) == 3 and words[:2] == ["interrupt", "within"]:
        return InterruptWithin(int(words[2]))
    if len(words) >= 2 and words[0] == "localized":
        if words[1:] == ["none"]:
            return LocalizedEquals(())
        addrs = []
        for w in words[1:]:
            if len(w) != 4:
                raise ValueError(f"address {w!r} is not 4 hex digits")
            addrs.append(int(w, 16))
        return LocalizedEquals(tuple(addrs))
    if len(words) == 3 and words[0] == "latency":
        return LatencyEquals(int(words[1]), int(words[2]))
    raise ValueError(f"bad expectation: {' '.join(words)!r}")


def parse_scenario(text: str, base_dir: Union[str, Path, None] = None,
                   name: str = "scenario", source: Optional[str] = None) -> Scenario:
    base = Path(base_dir) if base_dir is not None else Path.cwd()
    sc = Scenario(name=name)
    errors: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        words = raw.split("#", 1)[0].split()
        if not words:
            continue
        head, rest = words[0], words[1:]
        try:
            if head == "network" and len(rest) == 1:
                sc.network_file = base / rest[0]
            elif head in ("playback", "stimulus") and len(rest) == 2:
                getattr(sc, head)[rest[0]] = base / rest[1]
            elif head == "horizon" and len(rest) == 1:
                sc.horizon = int(rest[0])
                if sc.horizon < 0:
                    raise ValueError("horizon must be non-negative")
            elif head == "at" and len(rest) >= 2:
                at = int(rest[0])
                if at < 0:
                    raise ValueError("event cycle must be non-negative")
                sc.events.append(Event(at, _parse_action(rest[1:], at), lineno))
            elif head == "expect" and rest:
                sc.expectations.append(_parse_expect(rest))
            else:
                raise ValueError(f"unrecognized line: {raw.strip()!r}")
        except ValueError as exc:
            errors.append((lineno, str(exc)))
    if sc.horizon is not None and sc.events and sc.horizon < max(e.at_cycle for e in sc.events):
        errors.append((0, f"horizon {sc.horizon} is before the last event"))
    if errors:
        raise ScenarioError(errors, source or name)
    sc.events.sort(key=lambda e: e.at_cycle)
    return sc


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), path.parent, path.stem, str(path))
