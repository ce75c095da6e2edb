"""Compute CSU vector sequences that reach TDRs inside the SIB hierarchy."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Union

from .scan import ScanNetwork, SibNode, TdrNode, path_for


class UnknownTarget(KeyError):
    pass


class AccessMode(enum.Enum):
    READ = "read"
    WRITE = "write"


@dataclass(frozen=True)
class AccessRequest:
    target: Union[int, str]
    mode: AccessMode = AccessMode.READ
    write_value: Optional[str] = None

    def __post_init__(self):
        if (self.mode is AccessMode.WRITE) != (self.write_value is not None):
            raise ValueError("write_value is required for writes and forbidden for reads")

    @classmethod
    def read(cls, target):
        return cls(target)

    @classmethod
    def write(cls, target, value: str):
        return cls(target, AccessMode.WRITE, value)


@dataclass(frozen=True)
class Extraction:
    step: int
    start: int
    stop: int  # slice of shift_out; reversed, it is the TDR value MSB first


@dataclass
class AccessPlan:
    steps: list[str] = field(default_factory=list)
    extraction: dict[int, Extraction] = field(default_factory=dict)
    final_open: frozenset = frozenset()


def _resolve(net: ScanNetwork, target) -> TdrNode:
    try:
        node = net.node(target)
    except KeyError:
        raise UnknownTarget(target) from None
    if not isinstance(node, TdrNode):
        raise UnknownTarget(f"{target!r} is not a TDR")
    return node


def _vector(net: ScanNetwork, path, open_after, writes: dict[int, str]) -> str:
    bits = []
    for nid, idx in path:
        node = net.nodes[nid]
        if isinstance(node, SibNode):
            bits.append("1" if nid in open_after else "0")
        elif nid in writes:
            bits.append(writes[nid][idx])
        else:
            bits.append("0")
    return "".join(bits)


def plan_access(net: ScanNetwork, requests: list[AccessRequest], restore: bool = False) -> AccessPlan:
    """Plan the CSUs for ``requests`` without touching ``net``.

    One configuration CSU per hierarchy level still closed, then a single
    access CSU carrying every write and exposing every read.
    """
    if not requests:
        return AccessPlan(final_open=net.open_sibs())
    writes: dict[int, str] = {}
    reads: list[int] = []
    needed: set[int] = set()
    for req in requests:
        node = _resolve(net, req.target)
        if req.mode is AccessMode.WRITE:
            if len(req.write_value) != node.width or set(req.write_value) - {"0", "1"}:
                raise ValueError(f"write to {node.name} needs {node.width} bits")
            writes[node.id] = req.write_value
        else:
            reads.append(node.id)
        needed.update(net.ancestors(node.id))

    original = net.open_sibs()
    current = set(original)
    plan = AccessPlan()
    while True:
        path = path_for(net, current)
        on_path = {nid for nid, _ in path}
        to_open = {s for s in needed - current if s in on_path}
        if not to_open:
            break
        target_state = current | to_open
        plan.steps.append(_vector(net, path, target_state, {}))
        current = target_state

    path = path_for(net, current)
    n = len(path)
    step = len(plan.steps)
    for nid in reads:
        positions = [i for i, (cid, _) in enumerate(path) if cid == nid]
        first, last = positions[0], positions[-1]
        plan.extraction[nid] = Extraction(step, n - 1 - last, n - first)
    plan.steps.append(_vector(net, path, current, writes))

    if restore and current != original:
        plan.steps.append(_vector(net, path, original, {}))
        on_path = {nid for nid, _ in path}
        current = {s for s in current if s not in on_path} | (original & on_path)
    plan.final_open = frozenset(current)
    return plan


def execute_plan(net: ScanNetwork, plan: AccessPlan) -> dict[int, str]:
    outs = [net.csu(vec) for vec in plan.steps]
    return {nid: outs[e.step][e.start:e.stop][::-1] for nid, e in plan.extraction.items()}


def read(net: ScanNetwork, *targets) -> dict[str, str]:
    """Convenience: plan and execute reads, keyed by TDR name."""
    plan = plan_access(net, [AccessRequest.read(t) for t in targets])
    values = execute_plan(net, plan)
    return {net.nodes[nid].name: bits for nid, bits in values.items()}
