"""Render a SimReport as a text table, a value change dump, or JSON."""
from __future__ import annotations

import json

from .sim import SimReport

NS_PER_CYCLE = 5  # 200 MHz

# (name, width, VCD identifier)
VCD_SIGNALS = [
    ("F", 1, "!"),
    ("C", 1, '"'),
    ("interrupt", 1, "#"),
    ("tdi", 1, "$"),
    ("tdo", 1, "%"),
    ("localized_addr", 16, "&"),
]


def _bit(v) -> str:
    return "x" if v is None else str(v)


def to_text(report: SimReport) -> str:
    lines = [f"# {report.name}",
             f"{'cycle':>6} {'F':>2} {'C':>2} {'INT':>3} {'TDI':>3} {'TDO':>3}  {'phase':<10} localized"]
    for r in report.records:
        loc = " ".join(f"{a:04X}" for a in r.localized)
        lines.append(f"{r.cycle:>6} {r.f:>2} {r.c:>2} {r.interrupt:>3} {_bit(r.tdi):>3} "
                     f"{_bit(r.tdo):>3}  {r.phase:<10} {loc}".rstrip())
    if report.latency is not None:
        lat = report.latency
        lines.append(f"# detection {lat.detection_cycles} cycles ({float(lat.detection_us):g} us), "
                     f"localization {lat.localization_cycles} cycles ({float(lat.localization_us):g} us)")
    for v in report.verdicts:
        lines.append(f"# {'PASS' if v.passed else 'FAIL'} expect {v.expectation}: {v.detail}")
    return "\n".join(lines) + "\n"


def _vcd_values(r) -> dict[str, str]:
    addr = "x" if not r.localized else format(r.localized[-1], "016b")
    return {"F": str(r.f), "C": str(r.c), "interrupt": str(r.interrupt),
            "tdi": _bit(r.tdi), "tdo": _bit(r.tdo), "localized_addr": addr}


def to_vcd(report: SimReport) -> str:
    out = ["$version ijtagsim $end", "$timescale 1 ns $end", "$scope module ijtag $end"]
    for name, width, ident in VCD_SIGNALS:
        out.append(f"$var wire {width} {ident} {name} $end")
    out += ["$upscope $end", "$enddefinitions $end"]
    last: dict[str, str] = {}
    for i, r in enumerate(report.records):
        changes = []
        for name, width, ident in VCD_SIGNALS:
            value = _vcd_values(r)[name]
            if last.get(name) == value:
                continue
            last[name] = value
            changes.append(f"{value}{ident}" if width == 1 else f"b{value} {ident}")
        if i == 0:
            out += [f"#{r.cycle * NS_PER_CYCLE}", "$dumpvars", *changes, "$end"]
        elif changes:
            out += [f"#{r.cycle * NS_PER_CYCLE}", *changes]
    return "\n".join(out) + "\n"


def to_json(report: SimReport) -> str:
    doc = {
        "scenario": report.name,
        "latency": report.latency.as_dict() if report.latency else None,
        "episodes": [
            {"cycle_of_alarm": ep.cycle_of_alarm,
             "cycle_of_interrupt": ep.cycle_of_interrupt,
             "cycle_localization_done": ep.cycle_localization_done,
             "localized": [f"{a:04X}" for a in ep.localized],
             "no_fault_found": ep.no_fault_found,
             **ep.latency().as_dict()}
            for ep in report.episodes
        ],
        "reads": [{"cycle": r.cycle, "target": r.target, "bits": r.bits} for r in report.reads],
        "c_events": report.c_events,
        "verdicts": [{"expectation": v.expectation, "passed": v.passed, "detail": v.detail}
                     for v in report.verdicts],
        "records": [r.as_dict() for r in report.records],
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


FORMATS = {"text": to_text, "vcd": to_vcd, "json": to_json}


def emit_trace(report: SimReport, fmt: str = "text") -> str:
    try:
        return FORMATS[fmt](report)
    except KeyError:
        raise ValueError(f"unknown trace format {fmt!r}; choose from {sorted(FORMATS)}") from None
