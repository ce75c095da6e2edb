"""Cycle-accurate IJTAG scan-network simulator for UAV health monitoring."""
from .instruments import AdcInstrument, FaultSpec, ImuInstrument, adc_convert, parity16
from .manager import ImState, LatencyReport, LocalizationCost, im_tick, latency_report, localize
from .netlist import NetworkDesc, RomMap, elaborate, parse_network, print_network
from .retarget import AccessPlan, AccessRequest, execute_plan, plan_access
from .scan import CsuTransaction, ScanNetwork, active_scan_path, csu, propagate_flags, reset
from .scenario import Scenario, load_scenario, parse_scenario
from .sim import SimReport, Simulator, data_path, run
from .trace import emit_trace

__version__ = "0.1.0"
