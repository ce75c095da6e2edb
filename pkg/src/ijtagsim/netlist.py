"""Text format for scan networks, plus elaboration into a ScanNetwork.

Grammar (``#`` starts a line comment, children are listed TDI side first)::

    network NAME { node* }
    sib NAME @ HEX4 { node* }
    tdr NAME @ HEX4 width INT [instrument IDENT]
"""
from __future__ import annotations

import enum
import random
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from . import instruments
from .scan import ScanNetwork, SibNode, TdrNode


class ErrorKind(enum.Enum):
    SYNTAX = "Syntax"
    DUPLICATE_NAME = "DuplicateName"
    DUPLICATE_ADDRESS = "DuplicateAddress"
    BAD_WIDTH = "BadWidth"
    BAD_ADDRESS = "BadAddress"
    UNKNOWN_INSTRUMENT = "UnknownInstrument"


@dataclass(frozen=True)
class ParseError:
    line: int
    column: int
    message: str
    kind: ErrorKind = ErrorKind.SYNTAX

    def __str__(self):
        return f"{self.line}:{self.column}: {self.kind.value}: {self.message}"


class NetworkParseError(ValueError):
    def __init__(self, errors: list[ParseError]):
        self.errors = errors
        super().__init__("\n".join(str(e) for e in errors))


class UnknownInstrument(KeyError):
    pass


@dataclass
class Decl:
    kind: str  # "sib" | "tdr"
    name: str
    address: int
    width: Optional[int] = None
    instrument: Optional[str] = None
    children: list["Decl"] = field(default_factory=list)
    line: int = field(default=0, compare=False, repr=False)
    column: int = field(default=0, compare=False, repr=False)

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass
class NetworkDesc:
    name: str
    declarations: list[Decl] = field(default_factory=list)

    def walk(self):
        for d in self.declarations:
            yield from d.walk()

    def counts(self) -> tuple[int, int]:
        sibs = sum(1 for d in self.walk() if d.kind == "sib")
        tdrs = sum(1 for d in self.walk() if d.kind == "tdr")
        return sibs, tdrs


@dataclass
class RomMap:
    """Node id -> 16-bit ROM address used by the instrument manager."""

    entries: dict[int, int]
    names: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.entries.values())) != len(self.entries):
            raise ValueError("ROM addresses must be unique")
        for addr in self.entries.values():
            if not 0 <= addr <= 0xFFFF:
                raise ValueError(f"ROM address {addr:#x} is not 16 bits")

    def __contains__(self, nid):
        return nid in self.entries

    def __getitem__(self, nid: int) -> int:
        return self.entries[nid]

    def by_address(self) -> list[tuple[int, int]]:
        """(address, node id) pairs in ascending address order."""
        return sorted((a, n) for n, a in self.entries.items())

    def by_name(self) -> dict[str, int]:
        return {self.names.get(n, str(n)): a for n, a in self.entries.items()}


_TOKEN = re.compile(r"\s*(?:(#[^\n]*)|([{}@])|([A-Za-z0-9_.\-]+)|(\S))")


@dataclass
class _Tok:
    text: str
    line: int
    column: int


def _tokenize(text: str, errors: list[ParseError]) -> list[_Tok]:
    toks = []
    for lineno, line in enumerate(text.splitlines(), 1):
        pos = 0
        while pos < len(line):
            m = _TOKEN.match(line, pos)
            if m is None:
                break
            comment, punct, word, junk = m.groups()
            col = m.start(m.lastindex) + 1 if m.lastindex else pos + 1
            pos = m.end()
            if comment:
                break
            if junk:
                errors.append(ParseError(lineno, col, f"unexpected character {junk!r}"))
                continue
            toks.append(_Tok(punct or word, lineno, col))
    return toks


_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_.\-]*$")
_HEX4 = re.compile(r"[0-9A-Fa-f]{4}$")
_KEYWORDS = {"network", "sib", "tdr", "width", "instrument"}


class _Parser:
    def __init__(self, text: str, known_instruments):
        self.errors: list[ParseError] = []
        self.toks = _tokenize(text, self.errors)
        self.pos = 0
        self.known = known_instruments
        lines = text.splitlines() or [""]
        self.eof = (len(lines), len(lines[-1]) + 1)

    def peek(self) -> Optional[_Tok]:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def next(self) -> Optional[_Tok]:
        tok = self.peek()
        if tok is not None:
            self.pos += 1
        return tok

    def error(self, tok: Optional[_Tok], msg: str, kind=ErrorKind.SYNTAX):
        line, col = (tok.line, tok.column) if tok else self.eof
        self.errors.append(ParseError(line, col, msg, kind))

    def expect(self, text: str) -> Optional[_Tok]:
        tok = self.peek()
        if tok is None or tok.text != text:
            self.error(tok, f"expected {text!r}, got {tok.text if tok else 'end of input'!r}")
            return None
        return self.next()

    def name(self, what: str) -> Optional[_Tok]:
        tok = self.peek()
        if tok is None or not _NAME.match(tok.text) or tok.text in _KEYWORDS:
            self.error(tok, f"expected {what} name")
            return None
        return self.next()

    def sync(self):
        """Skip to the next node keyword or closing brace."""
        while (tok := self.peek()) is not None and tok.text not in ("sib", "tdr", "}"):
            self.next()

    def address(self) -> Optional[int]:
        if self.expect("@") is None:
            return None
        tok = self.next()
        if tok is None:
            self.error(None, "expected address")
            return None
        if not _HEX4.match(tok.text):
            self.error(tok, f"address {tok.text!r} is not 4 hex digits", ErrorKind.BAD_ADDRESS)
            return None
        return int(tok.text, 16)

    def parse(self) -> Optional[NetworkDesc]:
        if not self.toks:
            if not self.errors:
                self.error(None, "empty network")
            return None
        if self.expect("network") is None:
            return None
        name = self.name("network")
        if self.expect("{") is None:
            return None
        decls = self.body()
        if self.expect("}") is not None and (extra := self.peek()) is not None:
            self.error(extra, "trailing input after network")
        return NetworkDesc(name.text if name else "", decls)

    def body(self) -> list[Decl]:
        decls = []
        while (tok := self.peek()) is not None and tok.text != "}":
            if tok.text == "sib":
                decl = self.sib()
            elif tok.text == "tdr":
                decl = self.tdr()
            else:
                self.error(tok, f"expected 'sib' or 'tdr', got {tok.text!r}")
                self.next()
                self.sync()
                continue
            if decl is not None:
                decls.append(decl)
        return decls

    def sib(self) -> Optional[Decl]:
        kw = self.next()
        name = self.name("sib")
        addr = self.address()
        if name is None or self.expect("{") is None:
            self.sync()
            return None
        children = self.body()
        self.expect("}")
        return Decl("sib", name.text, -1 if addr is None else addr,
                    children=children, line=kw.line, column=kw.column)

    def tdr(self) -> Optional[Decl]:
        kw = self.next()
        name = self.name("tdr")
        addr = self.address()
        if name is None or self.expect("width") is None:
            self.sync()
            return None
        tok = self.next()
        width = None
        if tok is None or not tok.text.isdigit() or int(tok.text) < 1:
            self.error(tok, f"width must be a positive integer", ErrorKind.BAD_WIDTH)
        else:
            width = int(tok.text)
        inst = None
        if (tok := self.peek()) is not None and tok.text == "instrument":
            self.next()
            itok = self.name("instrument")
            if itok is not None:
                inst = itok.text
                if self.known is not None and inst not in self.known:
                    self.error(itok, f"no instrument model for {inst!r}",
                               ErrorKind.UNKNOWN_INSTRUMENT)
        if width is None:
            return None
        return Decl("tdr", name.text, -1 if addr is None else addr, width=width,
                    instrument=inst, line=kw.line, column=kw.column)


def _check_unique(desc: NetworkDesc, errors: list[ParseError]):
    names: dict[str, Decl] = {}
    addrs: dict[int, Decl] = {}
    for d in desc.walk():
        if d.name in names:
            errors.append(ParseError(d.line, d.column, f"duplicate name {d.name!r}",
                                     ErrorKind.DUPLICATE_NAME))
        names.setdefault(d.name, d)
        if d.address < 0:
            continue
        if d.address in addrs:
            errors.append(ParseError(d.line, d.column,
                                     f"address {d.address:04X} already used by {addrs[d.address].name!r}",
                                     ErrorKind.DUPLICATE_ADDRESS))
        addrs.setdefault(d.address, d)


def parse_network(text: str, known_instruments: Optional[Iterable[str]] = ...) -> NetworkDesc:
    """Parse network text; raises ``NetworkParseError`` listing every problem found.

    ``known_instruments`` defaults to the instrument registry; pass ``None``
    to skip the instrument-tag check.
    """
    if known_instruments is ...:
        known_instruments = set(instruments.REGISTRY)
    parser = _Parser(text, None if known_instruments is None else set(known_instruments))
    desc = parser.parse()
    errors = parser.errors
    if desc is not None:
        _check_unique(desc, errors)
    if errors or desc is None:
        raise NetworkParseError(sorted(errors, key=lambda e: (e.line, e.column)))
    return desc


def _print_decl(d: Decl, indent: int, out: list[str]):
    pad = "  " * indent
    if d.kind == "tdr":
        line = f"{pad}tdr {d.name} @ {d.address:04X} width {d.width}"
        if d.instrument:
            line += f" instrument {d.instrument}"
        out.append(line)
    elif not d.children:
        out.append(f"{pad}sib {d.name} @ {d.address:04X} {{ }}")
    else:
        out.append(f"{pad}sib {d.name} @ {d.address:04X} {{")
        for child in d.children:
            _print_decl(child, indent + 1, out)
        out.append(f"{pad}}}")


def print_network(desc: NetworkDesc) -> str:
    out = [f"network {desc.name} {{"]
    for d in desc.declarations:
        _print_decl(d, 1, out)
    out.append("}")
    return "\n".join(out) + "\n"


def elaborate(desc: NetworkDesc, factories=None) -> tuple[ScanNetwork, RomMap]:
    """Build the network; node ids follow declaration (pre-)order."""
    factories = instruments.REGISTRY if factories is None else factories
    nodes: dict = {}
    rom: dict[int, int] = {}
    names: dict[int, str] = {}

    def build(decls) -> list[int]:
        ids = []
        for d in decls:
            nid = len(nodes)
            ids.append(nid)
            rom[nid] = d.address
            names[nid] = d.name
            if d.kind == "sib":
                node = SibNode(nid, d.name)
                nodes[nid] = node
                node.children = build(d.children)
            else:
                inst = None
                if d.instrument is not None:
                    if d.instrument not in factories:
                        raise UnknownInstrument(d.instrument)
                    inst = factories[d.instrument]()
                nodes[nid] = TdrNode(nid, d.name, d.width, instrument=inst)
        return ids

    top = build(desc.declarations)
    return ScanNetwork(nodes, top), RomMap(rom, names)


def load_network(path) -> tuple[NetworkDesc, ScanNetwork, RomMap]:
    from pathlib import Path

    desc = parse_network(Path(path).read_text(encoding="utf-8"))
    net, rom = elaborate(desc)
    return desc, net, rom


def random_desc(rng: random.Random, max_nodes: int = 8, max_depth: int = 3,
                max_width: int = 32, instrument_kinds: Union[tuple, list] = ()) -> NetworkDesc:
    """Random valid network description (at least one node)."""
    n_nodes = rng.randint(1, max_nodes)
    addrs = rng.sample(range(0x10000), n_nodes)
    counter = iter(range(n_nodes))

    def make(depth: int, budget: list[int]) -> list[Decl]:
        decls = []
        while budget[0] > 0 and (not decls or rng.random() < 0.6):
            budget[0] -= 1
            i = next(counter)
            if depth < max_depth and rng.random() < 0.5:
                d = Decl("sib", f"SIB-{i}", addrs[i])
                d.children = make(depth + 1, budget) if rng.random() < 0.8 else []
            else:
                kind = rng.choice(instrument_kinds) if instrument_kinds and rng.random() < 0.5 else None
                d = Decl("tdr", f"TDR-{i}", addrs[i], width=rng.randint(1, max_width),
                         instrument=kind)
            decls.append(d)
        return decls

    budget = [n_nodes]
    decls = make(0, budget)
    while budget[0] > 0:
        decls.extend(make(0, budget))
    return NetworkDesc(f"net{rng.randrange(1000)}", decls)
