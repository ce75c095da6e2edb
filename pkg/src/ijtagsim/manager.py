"""Instrument Manager: fault detection pipeline and ROM-address localization.

Timing model, per simulator cycle:

* F rises at cycle t -> three-stage latch pipeline -> interrupt at t + 3.
* Localization then walks the ROM in ascending address order. The first
  faulty node costs 16 cycles (serial 16-bit address), each further one
  14 cycles because the next lookup overlaps the previous emission.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .netlist import RomMap
from .scan import ScanNetwork

CLOCK_MHZ = 200
DETECTION_STAGES = 3


class NoFaultFound(RuntimeError):
    pass


class UnknownNode(KeyError):
    pass


class NotDone(RuntimeError):
    pass


class Phase(enum.Enum):
    IDLE = "idle"
    DETECTING = "detecting"
    LOCALIZING = "localizing"
    DONE = "done"


@dataclass(frozen=True)
class LocalizationCost:
    first: int = 16
    subsequent: int = 14

    def total(self, k: int) -> int:
        return 0 if k == 0 else self.first + self.subsequent * (k - 1)


@dataclass(frozen=True)
class LatencyReport:
    detection_cycles: int
    localization_cycles: int

    @property
    def detection_us(self) -> Fraction:
        return Fraction(self.detection_cycles, CLOCK_MHZ)

    @property
    def localization_us(self) -> Fraction:
        return Fraction(self.localization_cycles, CLOCK_MHZ)

    def as_dict(self) -> dict:
        return {
            "detection_cycles": self.detection_cycles,
            "localization_cycles": self.localization_cycles,
            "detection_us": float(self.detection_us),
            "localization_us": float(self.localization_us),
        }


@dataclass
class Episode:
    """One completed detect-and-localize run."""

    cycle_of_alarm: int
    cycle_of_interrupt: int
    cycle_localization_done: int
    localized: tuple[int, ...]
    no_fault_found: bool = False

    def latency(self) -> LatencyReport:
        return LatencyReport(self.cycle_of_interrupt - self.cycle_of_alarm,
                             self.cycle_localization_done - self.cycle_of_interrupt)


@dataclass
class ImState:
    phase: Phase = Phase.IDLE
    stage: int = 0
    interrupt: int = 0
    localized: list[int] = field(default_factory=list)
    cycle_of_alarm: Optional[int] = None
    cycle_of_interrupt: Optional[int] = None
    cycle_localization_done: Optional[int] = None
    no_fault_found: bool = False
    cursor: int = 0
    current: Optional[int] = None  # address being emitted
    remaining: int = 0
    cost: LocalizationCost = field(default_factory=LocalizationCost)
    c_events: list[int] = field(default_factory=list)
    episodes: list[Episode] = field(default_factory=list)
    _last_c: int = 0

    def reset(self):
        """Clear everything except the cost model and the episode log."""
        cost, episodes, c_events = self.cost, self.episodes, self.c_events
        self.__init__(cost=cost)
        self.episodes, self.c_events = episodes, c_events


def _flagged(net: ScanNetwork, nid: int) -> bool:
    node = net.nodes[nid]
    return bool(node.flag_f and not node.flag_x)


def _finish(state: ImState, cycle: int):
    state.phase = Phase.DONE
    state.current = None
    state.cycle_localization_done = cycle
    state.no_fault_found = not state.localized
    state.episodes.append(Episode(state.cycle_of_alarm, state.cycle_of_interrupt, cycle,
                                  tuple(state.localized), state.no_fault_found))


def _seek(state: ImState, rom: RomMap, net: ScanNetwork, cycle: int):
    """Advance the cursor to the next faulty node (combinational) or finish."""
    order = rom.by_address()
    while state.cursor < len(order):
        addr, nid = order[state.cursor]
        state.cursor += 1
        if _flagged(net, nid):
            state.current = addr
            state.remaining = state.cost.subsequent if state.localized else state.cost.first
            return
    _finish(state, cycle)


def im_tick(state: ImState, flags: tuple[int, int], rom: RomMap, net: ScanNetwork,
            cycle: int) -> ImState:
    f, c = flags
    if c and not state._last_c:
        state.c_events.append(cycle)
    state._last_c = c

    if state.phase is Phase.IDLE:
        if f:
            state.phase = Phase.DETECTING
            state.stage = 1
            state.cycle_of_alarm = cycle
    elif state.phase is Phase.DETECTING:
        if state.stage < DETECTION_STAGES:
            state.stage += 1
        else:
            state.interrupt = 1
            state.cycle_of_interrupt = cycle
            state.phase = Phase.LOCALIZING
            state.cursor = 0
            _seek(state, rom, net, cycle)
    elif state.phase is Phase.LOCALIZING:
        state.remaining -= 1
        if state.remaining == 0:
            state.localized.append(state.current)
            _seek(state, rom, net, cycle)
    return state


def faulty_addresses(rom: RomMap, net: ScanNetwork) -> list[int]:
    return [addr for addr, nid in rom.by_address() if _flagged(net, nid)]


def localize(state: ImState, rom: RomMap, net: ScanNetwork) -> tuple[list[int], int]:
    """Run the whole localization at once against the current flags.

    Produces the same addresses and cycle count as ticking the FSM while
    the flags are held constant.
    """
    if state.phase is not Phase.LOCALIZING:
        raise RuntimeError(f"localize needs phase LOCALIZING, not {state.phase.name}")
    found = faulty_addresses(rom, net)
    cycles = state.cost.total(len(found))
    state.localized = list(found)
    _finish(state, state.cycle_of_interrupt + cycles)
    if not found:
        raise NoFaultFound("F was latched but no unmasked flag is set")
    return found, cycles


def _node_id(rom: RomMap, net: ScanNetwork, node) -> int:
    nid = net.names.get(node) if isinstance(node, str) else node
    if nid is None or nid not in rom:
        raise UnknownNode(node)
    return nid


def mask_node(net: ScanNetwork, rom: RomMap, node):
    net.nodes[_node_id(rom, net, node)].flag_x = 1


def unmask_node(net: ScanNetwork, rom: RomMap, node):
    net.nodes[_node_id(rom, net, node)].flag_x = 0


def latency_report(state: ImState) -> LatencyReport:
    if state.phase is not Phase.DONE:
        raise NotDone(f"instrument manager is {state.phase.name}")
    return LatencyReport(state.cycle_of_interrupt - state.cycle_of_alarm,
                         state.cycle_localization_done - state.cycle_of_interrupt)
