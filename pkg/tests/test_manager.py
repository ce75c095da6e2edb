import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ijtagsim.manager import (ImState, LatencyReport, LocalizationCost, NoFaultFound, NotDone,
                              Phase, UnknownNode, im_tick, latency_report, localize, mask_node,
                              unmask_node)
from ijtagsim.netlist import elaborate, parse_network, random_desc
from ijtagsim.sim import data_path

from oracles import brute_force_localized


@pytest.fixture
def paper():
    return elaborate(parse_network(data_path("paper_network.net").read_text()))


def run_until_done(state, rom, net, start=0, limit=500, flag_schedule=None):
    """Tick the IM; ``flag_schedule(cycle)`` may mutate flags before each tick."""
    for cycle in range(start, start + limit):
        if flag_schedule:
            flag_schedule(cycle)
        im_tick(state, net.propagate_flags(), rom, net, cycle)
        if state.phase is Phase.DONE:
            return cycle
    return None


def test_detection_takes_three_cycles(paper):
    net, rom = paper
    state = ImState()
    for cycle in range(10):
        im_tick(state, net.propagate_flags(), rom, net, cycle)
    assert state.phase is Phase.IDLE
    net.node("SIB-3").flag_f = 1
    for cycle in range(10, 13):
        im_tick(state, net.propagate_flags(), rom, net, cycle)
        assert state.interrupt == 0
    im_tick(state, net.propagate_flags(), rom, net, 13)
    assert state.interrupt == 1
    assert state.cycle_of_interrupt - state.cycle_of_alarm == 3


def test_single_fault_localization(paper):
    net, rom = paper
    net.node("SIB-3").flag_f = 1
    state = ImState()
    done = run_until_done(state, rom, net, start=100)
    assert state.localized == [0x0001]
    assert done - state.cycle_of_interrupt == 16
    assert latency_report(state) == LatencyReport(3, 16)


def test_double_fault_localization_order(paper):
    net, rom = paper
    net.node("SIB-2").flag_f = 1
    net.node("SIB-3").flag_f = 1
    state = ImState()
    run_until_done(state, rom, net)
    assert state.localized == [0x0001, 0x0003]
    assert latency_report(state).localization_cycles == 30


def test_three_faults_cost_model(paper):
    net, rom = paper
    for name in ("SIB-1", "SIB-2", "SIB-3"):
        net.node(name).flag_f = 1
    state = ImState()
    run_until_done(state, rom, net)
    assert state.localized == [0x0000, 0x0001, 0x0003]
    assert latency_report(state).localization_cycles == 44


def test_pulse_is_latched(paper):
    net, rom = paper

    def pulse(cycle):
        net.node("SIB-3").flag_f = int(cycle == 5)

    state = ImState()
    run_until_done(state, rom, net, flag_schedule=pulse)
    assert state.cycle_of_interrupt == 8
    assert state.localized == []
    assert state.no_fault_found


def test_localize_raises_on_transient(paper):
    net, rom = paper
    state = ImState(phase=Phase.LOCALIZING, cycle_of_alarm=0, cycle_of_interrupt=3)
    with pytest.raises(NoFaultFound):
        localize(state, rom, net)
    assert state.phase is Phase.DONE and state.localized == []


def test_c_only_never_leaves_idle(paper):
    net, rom = paper
    net.node("SIB-1").flag_c = 1
    state = ImState()
    assert run_until_done(state, rom, net, limit=50) is None
    assert state.phase is Phase.IDLE and state.c_events == [0]


def test_mask_suppresses_detection(paper):
    net, rom = paper
    mask_node(net, rom, "SIB-3")
    net.node("SIB-3").flag_f = 1
    state = ImState()
    assert run_until_done(state, rom, net, limit=50) is None
    assert state.phase is Phase.IDLE


def test_unmask_starts_detection(paper):
    net, rom = paper
    mask_node(net, rom, "SIB-3")
    net.node("SIB-3").flag_f = 1

    def schedule(cycle):
        if cycle == 20:
            unmask_node(net, rom, "SIB-3")

    state = ImState()
    run_until_done(state, rom, net, flag_schedule=schedule)
    assert state.cycle_of_alarm == 20
    assert state.localized == [0x0001]


def test_mask_unknown_node(paper):
    net, rom = paper
    with pytest.raises(UnknownNode):
        mask_node(net, rom, "SIB-9")


def test_latency_report_needs_done():
    with pytest.raises(NotDone):
        latency_report(ImState())


def test_wall_time_is_exact():
    single = LatencyReport(3, 16)
    assert single.detection_us == Fraction(15, 1000)
    assert single.localization_us == Fraction(8, 100)
    assert LatencyReport(3, 30).localization_us == Fraction(15, 100)


def test_custom_cost_model(paper):
    net, rom = paper
    net.node("SIB-3").flag_f = net.node("SIB-2").flag_f = 1
    state = ImState(cost=LocalizationCost(first=20, subsequent=20))
    run_until_done(state, rom, net)
    assert latency_report(state).localization_cycles == 40


def test_reset_clears_localization(paper):
    net, rom = paper
    net.node("SIB-3").flag_f = 1
    state = ImState()
    for cycle in range(8):
        im_tick(state, net.propagate_flags(), rom, net, cycle)
    assert state.phase is Phase.LOCALIZING
    net.reset()
    state.reset()
    assert state.phase is Phase.IDLE and state.localized == [] and state.interrupt == 0


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_localization_equals_brute_force(seed):
    rng = random.Random(seed)
    net, rom = elaborate(random_desc(rng, max_nodes=8))
    for node in net.nodes.values():
        node.flag_f = rng.randint(0, 1)
        node.flag_x = int(rng.random() < 0.3)
    expected = brute_force_localized(net, rom)
    state = ImState()
    done = run_until_done(state, rom, net)
    if not expected:
        assert done is None and state.phase is Phase.IDLE
        return
    assert state.localized == expected
    assert done - state.cycle_of_interrupt == 16 + 14 * (len(expected) - 1)
    batch = ImState(phase=Phase.LOCALIZING, cycle_of_alarm=0, cycle_of_interrupt=3)
    assert localize(batch, rom, net) == (expected, 16 + 14 * (len(expected) - 1))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_masking_equals_removing_source(seed):
    rng = random.Random(seed)
    desc = random_desc(rng, max_nodes=8)
    flags = [rng.randint(0, 1) for _ in range(8)]
    masked = rng.randrange(8)

    def outcome(use_mask):
        net, rom = elaborate(desc)
        for nid, node in net.nodes.items():
            node.flag_f = flags[nid]
            if nid == masked:
                if use_mask:
                    node.flag_x = 1
                else:
                    node.flag_f = 0
        state = ImState()
        run_until_done(state, rom, net, limit=200)
        return state.phase, state.interrupt, state.localized, state.cycle_localization_done

    assert outcome(True) == outcome(False)
