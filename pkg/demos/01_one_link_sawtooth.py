"""
Two packets, one link
=====================

Two updates reach the gateway at the same moment. The second one was
generated later, so it carries fresher information. A freshest-first link
sends it straight away, while a first-come link wastes a full service on
the older packet.
"""

from multihop_aoi import AgeProcess, Packets, Scenario, build_graph, run_simulation
from multihop_aoi.distributions import Constant
from multihop_aoi.metrics import age_process, average_peak_age, time_average_age

# gateway 0 feeds node 1 over a link that always takes one second
graph = build_graph(2, [(0, 1, float("inf"), Constant(1.0))])

# (generation time, arrival time at the gateway)
packets = Packets.from_pairs([(0.5, 1.0), (1.0, 1.0)])
scenario = Scenario(graph, packets, horizon=6.0)

for policy in ("np-lgfs", "fcfs"):
    trace = run_simulation(scenario, policy, verbose=True)
    print(f"--- {policy}")
    for line in trace.link_events:
        print("   ", line)
    ages = age_process(trace, 1)
    print("    resets at node 1:", ages.resets)
    print(f"    average age {time_average_age(ages):.4f}, average peak age {average_peak_age(ages):.4f}")

# %%
# The age process is a sawtooth. Here is one with hand-checkable numbers:
# resets at t=2 (content from t=1) and t=5 (content from t=4), horizon 6.
toy = AgeProcess.from_resets([(2.0, 1.0), (5.0, 4.0)], horizon=6.0)
print()
print("age at t = 0, 1.9, 2, 4.9, 5, 6:", toy([0, 1.9, 2, 4.9, 5, 6]).round(2).tolist())
print(f"time-average age {time_average_age(toy):.6f} (11/6 = {11 / 6:.6f})")
print(f"average peak age {average_peak_age(toy):.6f}")
