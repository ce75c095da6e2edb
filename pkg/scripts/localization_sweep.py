"""Localization cost vs. number of simultaneous faults on random networks.

Raises k random flags, runs the instrument manager until it is done and
reports the observed localization cycles against 16 + 14 * (k - 1).
"""
import argparse
import random
from collections import defaultdict

from ijtagsim.manager import ImState, Phase, im_tick
from ijtagsim.netlist import elaborate, random_desc


def trial(rng, k, max_nodes):
    while True:
        net, rom = elaborate(random_desc(rng, max_nodes=max_nodes))
        if len(net.nodes) >= k:
            break
    for nid in rng.sample(sorted(net.nodes), k):
        net.nodes[nid].flag_f = 1
    state = ImState()
    for cycle in range(10_000):
        im_tick(state, net.propagate_flags(), rom, net, cycle)
        if state.phase is Phase.DONE:
            return state.cycle_localization_done - state.cycle_of_interrupt
    raise RuntimeError("localization did not finish")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--max-faults", type=int, default=6)
    ap.add_argument("--max-nodes", type=int, default=12)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    seen = defaultdict(set)
    for k in range(1, args.max_faults + 1):
        for _ in range(args.trials):
            seen[k].add(trial(rng, k, args.max_nodes))
    print(f"{'faults':>6} {'observed':>10} {'model':>6}")
    for k, values in seen.items():
        print(f"{k:>6} {','.join(map(str, sorted(values))):>10} {16 + 14 * (k - 1):>6}")


if __name__ == "__main__":
    main()
