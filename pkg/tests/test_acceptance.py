"""Exit criteria. Each test carries a ``criterion`` marker; the terminal
summary prints one PASS/FAIL line per criterion."""
import random
import time
from fractions import Fraction

import pytest

from ijtagsim.instruments import FaultSpec, ImuInstrument, to_signed
from ijtagsim.manager import ImState, Phase, im_tick
from ijtagsim.netlist import elaborate, parse_network, print_network, random_desc
from ijtagsim.retarget import AccessRequest, execute_plan, plan_access
from ijtagsim.scan import SibNode, csu
from ijtagsim.scenario import load_scenario, parse_scenario
from ijtagsim.sim import data_path, run

from oracles import (FixedInstrument, brute_force_localized, captured_bits, naive_path,
                     naive_shift, parity_loop, randomize_sibs)

NS_PER_CYCLE = 5


def wall_us(cycles):
    return Fraction(cycles * NS_PER_CYCLE, 1000)


@pytest.mark.criterion("1", "latency table (3 / 16 / 30 cycles; 0.015 / 0.08 / 0.15 us)")
def test_latency_table():
    start = time.perf_counter()
    single = run(load_scenario(data_path("single_internal_fault.scn")))
    double = run(load_scenario(data_path("double_fault.scn")))
    elapsed = time.perf_counter() - start
    s, d = single.latency, double.latency
    assert (s.detection_cycles, s.localization_cycles) == (3, 16)
    assert d.localization_cycles == 30
    assert s.detection_us == wall_us(3) == Fraction("0.015")
    assert s.localization_us == wall_us(16) == Fraction("0.08")
    assert d.localization_us == wall_us(30) == Fraction("0.15")
    assert single.passed and double.passed
    assert elapsed < 1.0


@pytest.mark.criterion("2", "double fault localizes [0001, 0003] in that order")
def test_localization_order():
    report = run(load_scenario(data_path("double_fault.scn")))
    assert list(report.episodes[-1].localized) == [0x0001, 0x0003]


@pytest.mark.criterion("3", "'01' opens SIB-2 (+16 bits), '10' opens SIB-3")
def test_configuration_vectors():
    text = data_path("two_sib_network.net").read_text()
    net, _ = elaborate(parse_network(text))
    assert net.path_length() == 2
    csu(net, "01")
    assert net.node("SIB-2").is_open and not net.node("SIB-3").is_open
    assert net.path_length() == 2 + 16
    net, _ = elaborate(parse_network(text))
    csu(net, "10")
    assert net.node("SIB-3").is_open and not net.node("SIB-2").is_open
    assert net.path_length() == 2 + 16


@pytest.mark.criterion("4", "alarm at first cycle above 120 C, F same cycle, interrupt 3 later")
def test_alarm_behavior(tmp_path):
    (tmp_path / "adc.txt").write_text("0 temp 25\n60 temp 119.9\n80 temp 120.0\n100 temp 120.1\n")
    sc = parse_scenario(f"network {data_path('paper_network.net')}\nstimulus TDR-1 adc.txt\n"
                        "horizon 140\n", base_dir=tmp_path)
    records = run(sc).records
    alarm = [r.cycle for r in records if dict(r.faults)["TDR-1"]]
    assert alarm[0] == 100
    assert [r.cycle for r in records if r.f][0] == 100
    assert [r.cycle for r in records if r.c][0] == 100
    assert [r.cycle for r in records if r.interrupt][0] == 103


@pytest.mark.criterion("5a", "shift-register round trip vs per-bit oracle, 500 networks, < 10 s")
def test_shift_register_property():
    rng = random.Random(1687)
    start = time.perf_counter()
    for _ in range(500):
        net, _ = elaborate(random_desc(rng, max_nodes=8, max_depth=3, max_width=32))
        randomize_sibs(net, rng)
        zero_capture = rng.random() < 0.5
        for tdr in net.tdrs():
            tdr.shadow_reg = [rng.randint(0, 1) for _ in range(tdr.width)]
            if zero_capture:
                tdr.instrument = FixedInstrument("0" * tdr.width)
        path = naive_path(net)
        # keep SIB bits so the path survives the update
        x = "".join(str(net.nodes[nid].update_cell) if isinstance(net.nodes[nid], SibNode)
                    else rng.choice("01") for nid, _ in path)
        expected, _ = naive_shift(captured_bits(net, path), x)
        assert csu(net, x) == expected
        back = csu(net, "0" * len(path))
        recovered = "".join("0" if zero_capture and not isinstance(net.nodes[nid], SibNode) else b
                            for (nid, _), b in zip(path, x))
        assert back == recovered[::-1]
    assert time.perf_counter() - start < 10


@pytest.mark.criterion("5b", "retargeting extraction equals instrument inspection, 500 request sets, < 10 s")
def test_retargeting_property():
    rng = random.Random(2023)
    start = time.perf_counter()
    checked = 0
    while checked < 500:
        net, _ = elaborate(random_desc(rng, max_nodes=8, max_depth=3, max_width=32))
        tdrs = net.tdrs()
        if not tdrs:
            continue
        randomize_sibs(net, rng)
        for tdr in tdrs:
            tdr.instrument = FixedInstrument("".join(rng.choice("01") for _ in range(tdr.width)))
        targets = rng.sample(tdrs, rng.randint(1, len(tdrs)))
        values = execute_plan(net, plan_access(net, [AccessRequest.read(t.id) for t in targets]))
        assert values == {t.id: t.instrument.capture_value() for t in targets}
        checked += 1
    assert time.perf_counter() - start < 10


@pytest.mark.criterion("5c", "localized set equals brute force, 1000 flag patterns, < 10 s")
def test_localization_property():
    rng = random.Random(120)
    start = time.perf_counter()
    for _ in range(1000):
        net, rom = elaborate(random_desc(rng, max_nodes=8))
        for node in net.nodes.values():
            node.flag_f = rng.randint(0, 1)
            node.flag_x = int(rng.random() < 0.3)
        expected = brute_force_localized(net, rom)
        state = ImState()
        for cycle in range(200):
            im_tick(state, net.propagate_flags(), rom, net, cycle)
            if state.phase is Phase.DONE:
                break
        if expected:
            assert state.localized == expected
            assert state.cycle_localization_done - state.cycle_of_interrupt == 16 + 14 * (len(expected) - 1)
        else:
            assert state.phase is Phase.IDLE
    assert time.perf_counter() - start < 10


@pytest.mark.criterion("5d", "parity catches all 16 single-bit flips of 256 random words, < 10 s")
def test_parity_property():
    rng = random.Random(6050)
    start = time.perf_counter()
    for _ in range(256):
        word = rng.randrange(0x10000)
        for bit in range(16):
            assert parity_loop(word ^ (1 << bit)) != parity_loop(word)
            imu = ImuInstrument(playback=[(to_signed(word), 0, 0, 0, 0, 0, 0)])
            imu.inject(FaultSpec.bit_flip(bit, 0))
            imu.step(0)
            assert imu.fault_flag == 1
    assert time.perf_counter() - start < 10


@pytest.mark.criterion("6", "parse/print round trip (paper + 200 random); ROM map 0000/0001/0003")
def test_parser_round_trip():
    desc = parse_network(data_path("paper_network.net").read_text())
    assert parse_network(print_network(desc)) == desc
    _, rom = elaborate(desc)
    by_name = rom.by_name()
    assert {k: by_name[k] for k in ("SIB-1", "SIB-3", "SIB-2")} == {"SIB-1": 0x0000, "SIB-3": 0x0001, "SIB-2": 0x0003}
    rng = random.Random(1149)
    for _ in range(200):
        d = random_desc(rng, instrument_kinds=("xadc", "imu"))
        assert parse_network(print_network(d)) == d
