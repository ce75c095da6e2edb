"""Cycle-accurate model of a reconfigurable (IJTAG) scan network.

The network is a tree of segment insertion bits (SIBs) and test data
registers (TDRs). Bit strings are written in scan-path order: character
``i`` of a CSU input ends up in path cell ``i`` (index 0 nearest TDI), so
the leftmost character is the last one clocked in. Output strings are in
TDO emission order, i.e. the cell nearest TDO comes out first.

An open SIB splices its child segment into the path immediately *before*
its own cell.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union


class LengthMismatch(ValueError):
    """CSU input length differs from the active scan-path length."""


class CsuPhase(enum.Enum):
    CAPTURE = "capture"
    SHIFT = "shift"
    UPDATE = "update"


@dataclass
class SibNode:
    id: int
    name: str
    children: list[int] = field(default_factory=list)
    parent: Optional[int] = None
    shift_cell: int = 0
    update_cell: int = 0  # 1 = open
    flag_f: int = 0
    flag_c: int = 0
    flag_x: int = 0

    @property
    def is_open(self) -> bool:
        return self.update_cell == 1


@dataclass
class TdrNode:
    id: int
    name: str
    width: int
    parent: Optional[int] = None
    instrument: object = None
    shift_reg: list[int] = field(default_factory=list)
    shadow_reg: list[int] = field(default_factory=list)
    flag_f: int = 0
    flag_c: int = 0
    flag_x: int = 0

    def __post_init__(self):
        if self.width < 1:
            raise ValueError(f"TDR {self.name!r} needs width >= 1, got {self.width}")
        if not self.shift_reg:
            self.shift_reg = [0] * self.width
        if not self.shadow_reg:
            self.shadow_reg = [0] * self.width


Node = Union[SibNode, TdrNode]
# (node id, bit index); bit index is 0 for SIB cells, MSB-first for TDRs.
Cell = tuple[int, int]


def bits_to_str(bits) -> str:
    return "".join("1" if b else "0" for b in bits)


def str_to_bits(text: str) -> list[int]:
    if any(ch not in "01" for ch in text):
        raise ValueError(f"not a bit string: {text!r}")
    return [1 if ch == "1" else 0 for ch in text]


def fit_bits(bits: str, width: int) -> str:
    """Zero-extend or truncate an MSB-first bit string to ``width``."""
    if len(bits) >= width:
        return bits[len(bits) - width:]
    return "0" * (width - len(bits)) + bits


class ScanNetwork:
    """Elaborated scan network: node table plus the level-0 chain."""

    def __init__(self, nodes: dict[int, Node], top: list[int]):
        self.nodes = nodes
        self.top = list(top)
        self.names = {n.name: n.id for n in nodes.values()}
        self._check_tree()

    def _check_tree(self):
        seen: set[int] = set()

        def visit(ids, parent):
            for nid in ids:
                if nid in seen:
                    raise ValueError(f"node {nid} appears twice in the network")
                if nid not in self.nodes:
                    raise ValueError(f"unknown node id {nid}")
                seen.add(nid)
                node = self.nodes[nid]
                node.parent = parent
                if isinstance(node, SibNode):
                    visit(node.children, nid)

        visit(self.top, None)
        if seen != set(self.nodes):
            raise ValueError("network contains unreachable nodes")

    def __repr__(self):
        return f"ScanNetwork({len(self.nodes)} nodes, path={self.path_length()})"

    def node(self, key: Union[int, str]) -> Node:
        if isinstance(key, str):
            return self.nodes[self.names[key]]
        return self.nodes[key]

    def sibs(self) -> list[SibNode]:
        return [n for n in self.nodes.values() if isinstance(n, SibNode)]

    def tdrs(self) -> list[TdrNode]:
        return [n for n in self.nodes.values() if isinstance(n, TdrNode)]

    def ancestors(self, nid: int) -> list[int]:
        """Gating SIBs of ``nid``, innermost first."""
        out = []
        parent = self.nodes[nid].parent
        while parent is not None:
            out.append(parent)
            parent = self.nodes[parent].parent
        return out

    def gating_node(self, nid: int) -> int:
        """Node that carries flags on behalf of ``nid`` (its gating SIB, if any)."""
        parent = self.nodes[nid].parent
        return nid if parent is None else parent

    def open_sibs(self) -> frozenset[int]:
        return frozenset(n.id for n in self.sibs() if n.is_open)

    def structure(self):
        """Nested tuple describing topology, names and widths (no state)."""

        def walk(ids):
            out = []
            for nid in ids:
                n = self.nodes[nid]
                if isinstance(n, SibNode):
                    out.append(("sib", n.name, walk(n.children)))
                else:
                    kind = getattr(n.instrument, "kind", None)
                    out.append(("tdr", n.name, n.width, kind))
            return tuple(out)

        return walk(self.top)

    # -- scan path -------------------------------------------------------

    def active_scan_path(self) -> list[Cell]:
        return path_for(self, self.open_sibs())

    def path_length(self) -> int:
        return len(self.active_scan_path())

    def _get(self, cell: Cell) -> int:
        node = self.nodes[cell[0]]
        if isinstance(node, SibNode):
            return node.shift_cell
        return node.shift_reg[cell[1]]

    def _set(self, cell: Cell, value: int):
        node = self.nodes[cell[0]]
        if isinstance(node, SibNode):
            node.shift_cell = value
        else:
            node.shift_reg[cell[1]] = value

    # -- protocol --------------------------------------------------------

    def transaction(self, shift_in: str) -> "CsuTransaction":
        return CsuTransaction(self, shift_in)

    def csu(self, shift_in: str) -> str:
        return self.transaction(shift_in).run()

    def propagate_flags(self) -> tuple[int, int]:
        f = 0
        c = 0
        for n in self.nodes.values():
            f |= n.flag_f & (1 - n.flag_x)
            c |= n.flag_c
        return f, c

    def reset(self):
        for n in self.nodes.values():
            n.flag_f = n.flag_c = n.flag_x = 0
            if isinstance(n, SibNode):
                n.shift_cell = n.update_cell = 0
            else:
                n.shift_reg = [0] * n.width
                n.shadow_reg = [0] * n.width


def path_for(net: ScanNetwork, open_sibs) -> list[Cell]:
    """Scan path for a hypothetical set of open SIBs (pure)."""
    cells: list[Cell] = []

    def walk(ids):
        for nid in ids:
            node = net.nodes[nid]
            if isinstance(node, SibNode):
                if nid in open_sibs:
                    walk(node.children)
                cells.append((nid, 0))
            else:
                cells.extend((nid, i) for i in range(node.width))

    walk(net.top)
    return cells


@dataclass
class ScanIO:
    """What the serial port did during one simulator cycle."""

    phase: CsuPhase
    tdi: Optional[int] = None
    tdo: Optional[int] = None


class CsuTransaction:
    """One capture-shift-update transaction, advanced one cycle per ``step``.

    Occupies ``len(shift_in) + 2`` cycles: capture, one cycle per shifted
    bit, update.
    """

    def __init__(self, net: ScanNetwork, shift_in: str):
        path = net.active_scan_path()
        if len(shift_in) != len(path):
            raise LengthMismatch(
                f"CSU vector has {len(shift_in)} bits, active path has {len(path)}"
            )
        self.net = net
        self.shift_in = shift_in
        self.bits_in = str_to_bits(shift_in)
        self.path = path
        self.cycle = 0
        self.out: list[int] = []

    @property
    def cycles(self) -> int:
        return len(self.path) + 2

    @property
    def done(self) -> bool:
        return self.cycle >= self.cycles

    @property
    def shift_out(self) -> str:
        return bits_to_str(self.out)

    def _capture(self):
        for nid in dict.fromkeys(c[0] for c in self.path):
            node = self.net.nodes[nid]
            if isinstance(node, SibNode):
                node.shift_cell = node.update_cell
            elif node.instrument is not None:
                node.shift_reg = str_to_bits(fit_bits(node.instrument.capture_value(), node.width))
            else:
                node.shift_reg = list(node.shadow_reg)

    def _update(self):
        for nid in dict.fromkeys(c[0] for c in self.path):
            node = self.net.nodes[nid]
            if isinstance(node, SibNode):
                node.update_cell = node.shift_cell
            else:
                node.shadow_reg = list(node.shift_reg)
                hook = getattr(node.instrument, "update", None)
                if hook is not None:
                    hook(bits_to_str(node.shadow_reg))

    def step(self) -> ScanIO:
        if self.done:
            raise RuntimeError("CSU transaction already complete")
        n = len(self.path)
        k = self.cycle
        self.cycle += 1
        if k == 0:
            self._capture()
            return ScanIO(CsuPhase.CAPTURE)
        if k <= n:
            # Last character of shift_in goes in first.
            tdi = self.bits_in[n - k]
            tdo = self.net._get(self.path[-1])
            for i in range(n - 1, 0, -1):
                self.net._set(self.path[i], self.net._get(self.path[i - 1]))
            self.net._set(self.path[0], tdi)
            self.out.append(tdo)
            return ScanIO(CsuPhase.SHIFT, tdi, tdo)
        self._update()
        return ScanIO(CsuPhase.UPDATE)

    def steps(self) -> Iterator[ScanIO]:
        while not self.done:
            yield self.step()

    def run(self) -> str:
        for _ in self.steps():
            pass
        return self.shift_out


def active_scan_path(net: ScanNetwork) -> list[Cell]:
    return net.active_scan_path()


def csu(net: ScanNetwork, shift_in: str) -> str:
    return net.csu(shift_in)


def propagate_flags(net: ScanNetwork) -> tuple[int, int]:
    return net.propagate_flags()


def reset(net: ScanNetwork):
    net.reset()
