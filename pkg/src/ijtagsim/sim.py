"""Top-level cycle loop: events -> instruments -> scan port -> flags -> IM."""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from . import manager
from .instruments import ImuInstrument, load_playback, load_stimulus
from .manager import Episode, ImState, LatencyReport, LocalizationCost
from .netlist import RomMap, load_network
from .retarget import AccessRequest, AccessPlan, plan_access
from .scan import CsuTransaction, ScanNetwork
from .scenario import (Access, ForceFlag, Inject, InterruptWithin, LatencyEquals,
                       LocalizedEquals, Mask, Reset, Scenario, Stimulus)


class SimulationError(RuntimeError):
    pass


def data_path(name: str) -> Path:
    """Path of a file bundled under ``ijtagsim/data``."""
    return Path(str(resources.files("ijtagsim") / "data" / name))


@dataclass(frozen=True)
class Record:
    cycle: int
    f: int
    c: int
    interrupt: int
    phase: str
    tdi: Optional[int] = None
    tdo: Optional[int] = None
    localized: tuple[int, ...] = ()
    faults: tuple[tuple[str, int], ...] = ()

    def as_dict(self) -> dict:
        return {
            "cycle": self.cycle, "F": self.f, "C": self.c, "interrupt": self.interrupt,
            "phase": self.phase, "tdi": self.tdi, "tdo": self.tdo,
            "localized": [f"{a:04X}" for a in self.localized],
            "faults": dict(self.faults),
        }


@dataclass(frozen=True)
class ReadResult:
    cycle: int
    target: str
    bits: str


@dataclass(frozen=True)
class Verdict:
    expectation: str
    passed: bool
    detail: str = ""


@dataclass
class SimReport:
    name: str = "scenario"
    records: list[Record] = field(default_factory=list)
    episodes: list[Episode] = field(default_factory=list)
    verdicts: list[Verdict] = field(default_factory=list)
    reads: list[ReadResult] = field(default_factory=list)
    c_events: list[int] = field(default_factory=list)

    @property
    def latency(self) -> Optional[LatencyReport]:
        return self.episodes[-1].latency() if self.episodes else None

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)


@dataclass
class _PlanRun:
    plan: AccessPlan
    outs: list[str] = field(default_factory=list)


def synthetic_playback(seed: int, n: int = 64) -> list[tuple[int, ...]]:
    """Quiet hover-like IMU samples for networks without a playback file."""
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        accel = [rng.randint(-200, 200), rng.randint(-200, 200), 16384 + rng.randint(-200, 200)]
        gyro = [rng.randint(-50, 50) for _ in range(3)]
        out.append(tuple(accel + gyro + [rng.randint(-600, -400)]))
    return out


class Simulator:
    def __init__(self, net: ScanNetwork, rom: RomMap, cost: Optional[LocalizationCost] = None):
        self.net = net
        self.rom = rom
        self.im = ImState(cost=cost or LocalizationCost())
        self.instruments = {t.name: t.instrument for t in net.tdrs() if t.instrument is not None}
        self.requests: deque[tuple[int, list[AccessRequest]]] = deque()
        self.run: Optional[_PlanRun] = None
        self.csu: Optional[CsuTransaction] = None
        self.reads: list[ReadResult] = []
        self.interrupts: list[tuple[int, int]] = []

    def instrument(self, name: str):
        try:
            return self.instruments[name]
        except KeyError:
            raise SimulationError(f"no instrument bound to {name!r}") from None

    def apply(self, action, cycle: int):
        if isinstance(action, Reset):
            self.net.reset()
            self.im.reset()
            self.requests.clear()
            self.run = self.csu = None
        elif isinstance(action, Stimulus):
            inst = self.instrument(action.target)
            if not hasattr(inst, "set_stimulus"):
                raise SimulationError(f"{action.target} does not take analog stimulus")
            inst.set_stimulus(action.kind, action.value)
        elif isinstance(action, Inject):
            self.instrument(action.target).inject(action.spec)
        elif isinstance(action, Access):
            req = (AccessRequest.read(action.target) if action.write_value is None
                   else AccessRequest.write(action.target, action.write_value))
            # Requests issued in the same cycle share one plan.
            if self.requests and self.requests[-1][0] == cycle:
                self.requests[-1][1].append(req)
            else:
                self.requests.append((cycle, [req]))
        elif isinstance(action, Mask):
            fn = manager.mask_node if action.masked else manager.unmask_node
            try:
                fn(self.net, self.rom, action.node)
            except manager.UnknownNode:
                raise SimulationError(f"unknown node {action.node!r}") from None
        elif isinstance(action, ForceFlag):
            if action.node not in self.net.names:
                raise SimulationError(f"unknown node {action.node!r}")
            setattr(self.net.node(action.node), f"flag_{action.flag}", action.value)
        else:
            raise TypeError(f"unknown action {action!r}")

    def _scan_step(self, cycle: int):
        if self.csu is None and self.run is None and self.requests:
            _, reqs = self.requests.popleft()
            self.run = _PlanRun(plan_access(self.net, reqs))
            if not self.run.plan.steps:
                self.run = None
        if self.csu is None and self.run is not None:
            self.csu = CsuTransaction(self.net, self.run.plan.steps[len(self.run.outs)])
        if self.csu is None:
            return None
        io = self.csu.step()
        if self.csu.done:
            self.run.outs.append(self.csu.shift_out)
            self.csu = None
            if len(self.run.outs) == len(self.run.plan.steps):
                for nid, e in self.run.plan.extraction.items():
                    bits = self.run.outs[e.step][e.start:e.stop][::-1]
                    self.reads.append(ReadResult(cycle, self.net.nodes[nid].name, bits))
                self.run = None
        return io

    def tick(self, cycle: int) -> Record:
        for name, inst in self.instruments.items():
            inst.step(cycle)
            if inst.fault:
                node = self.net.nodes[self.net.gating_node(self.net.names[name])]
                node.flag_f = 1
                node.flag_c = 1
        io = self._scan_step(cycle)
        f, c = self.net.propagate_flags()
        had_irq = self.im.interrupt
        manager.im_tick(self.im, (f, c), self.rom, self.net, cycle)
        if self.im.interrupt and not had_irq:
            self.interrupts.append((self.im.cycle_of_alarm, self.im.cycle_of_interrupt))
        return Record(
            cycle, f, c, self.im.interrupt, self.im.phase.value,
            io.tdi if io else None, io.tdo if io else None,
            tuple(self.im.localized),
            tuple((name, inst.fault) for name, inst in self.instruments.items()),
        )


def _check(exp, sim: Simulator) -> Optional[Verdict]:
    """Verdict if ``exp`` is satisfied by what has happened so far."""
    if isinstance(exp, InterruptWithin):
        for alarm, irq in sim.interrupts:
            if irq - alarm <= exp.cycles:
                return Verdict(str(exp), True, f"F at {alarm}, interrupt at {irq}")
    elif isinstance(exp, LocalizedEquals):
        for ep in sim.im.episodes:
            if ep.localized == exp.addresses:
                return Verdict(str(exp), True, f"localized by cycle {ep.cycle_localization_done}")
    elif isinstance(exp, LatencyEquals):
        for ep in sim.im.episodes:
            lat = ep.latency()
            if (lat.detection_cycles, lat.localization_cycles) == (exp.detection, exp.localization):
                return Verdict(str(exp), True, f"episode ending at {ep.cycle_localization_done}")
    return None


def _failure(exp, sim: Simulator) -> Verdict:
    if isinstance(exp, InterruptWithin):
        seen = [irq - alarm for alarm, irq in sim.interrupts]
        detail = f"detection latencies seen: {seen}" if seen else "no interrupt raised"
    elif isinstance(exp, LocalizedEquals):
        seen = [" ".join(f"{a:04X}" for a in ep.localized) or "none" for ep in sim.im.episodes]
        detail = f"localized lists seen: {seen}" if seen else "no localization completed"
    else:
        seen = [(ep.latency().detection_cycles, ep.latency().localization_cycles)
                for ep in sim.im.episodes]
        detail = f"latencies seen: {seen}" if seen else "no localization completed"
    return Verdict(str(exp), False, detail)


def build(scenario: Scenario, seed: int = 0, cost: Optional[LocalizationCost] = None) -> Simulator:
    network_file = scenario.network_file or data_path("paper_network.net")
    try:
        _, net, rom = load_network(network_file)
    except OSError as exc:
        raise SimulationError(f"cannot read network file: {exc}") from None
    sim = Simulator(net, rom, cost)
    for name, path in scenario.playback.items():
        sim.instrument(name).playback = load_playback(path)
    for name, path in scenario.stimulus.items():
        inst = sim.instrument(name)
        inst.stimulus = sorted(load_stimulus(path), key=lambda s: s[0])
    for i, (name, inst) in enumerate(sim.instruments.items()):
        if isinstance(inst, ImuInstrument) and not inst.playback:
            inst.playback = synthetic_playback(seed + i)
    return sim


def run(scenario: Scenario, horizon: Optional[int] = None, seed: int = 0,
        cost: Optional[LocalizationCost] = None) -> SimReport:
    sim = build(scenario, seed, cost)
    horizon = scenario.effective_horizon() if horizon is None else horizon
    report = SimReport(scenario.name)
    verdicts: dict[int, Verdict] = {}
    events = deque(scenario.events)
    for cycle in range(horizon + 1):
        while events and events[0].at_cycle <= cycle:
            sim.apply(events.popleft().action, cycle)
        report.records.append(sim.tick(cycle))
        for i, exp in enumerate(scenario.expectations):
            if i not in verdicts and (v := _check(exp, sim)) is not None:
                verdicts[i] = v
        if scenario.expectations and len(verdicts) == len(scenario.expectations) and not events:
            break
    report.verdicts = [verdicts.get(i) or _failure(exp, sim)
                       for i, exp in enumerate(scenario.expectations)]
    report.episodes = list(sim.im.episodes)
    report.reads = list(sim.reads)
    report.c_events = list(sim.im.c_events)
    return report
