"""Run the bundled fault scenarios and print the latency table."""
import argparse

from ijtagsim.scenario import load_scenario
from ijtagsim.sim import data_path, run

ROWS = [
    ("Detection latency for single fault", "single_internal_fault", "detection"),
    ("Localization for single fault", "single_internal_fault", "localization"),
    ("Localization for two faults", "double_fault", "localization"),
    ("Localization for two faults (sequential)", "double_fault_sequential", "localization"),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    reports = {}
    print(f"{'Latency':<42} {'cycles':>6} {'us @ 200 MHz':>13}")
    for label, name, column in ROWS:
        if name not in reports:
            reports[name] = run(load_scenario(data_path(name + ".scn")), seed=args.seed)
        lat = reports[name].latency
        cycles = getattr(lat, f"{column}_cycles")
        us = getattr(lat, f"{column}_us")
        print(f"{label:<42} {cycles:>6} {float(us):>13g}")
    for name, report in reports.items():
        status = "ok" if report.passed else "FAILED"
        print(f"{name}: expectations {status}")


if __name__ == "__main__":
    main()
