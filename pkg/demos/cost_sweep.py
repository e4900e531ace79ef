"""
Choosing a partition size
=========================

Small partitions expose more parallelism but share more faces; large ones
communicate little but leave workers idle.  The cost model weighs the
busiest worker's compute time against the communication between workers.
"""

import random
import time

from wavemsa import SequenceSet, ScoringScheme, calibrate, run_parallel
from wavemsa.cost_model import recommend_partition_size, sweep

# Measure the two unit costs on this machine: one cell-neighbour update in
# the compiled kernel, and one mailbox round trip.
r_unit, c_unit = calibrate()
print("r_unit %.3g s   c_unit %.3g s" % (r_unit, c_unit))

shape = (41, 41, 41)
V = 4
print()
print(" S    P   t  max_pm  predicted dT")
for row in sweep(shape, V, r_unit, c_unit):
    if row["S"] not in (2, 3, 4, 6, 8, 11, 14, 21, 41):
        continue
    print("%2d %4d %3d %6d   %.3g s" % (row["S"], row["P"], row["t"], row["max_pm"],
                                        float(row["dT_corrected"])))
best = recommend_partition_size(shape, V, r_unit, c_unit)
print("recommended S:", best)

# Compare with measured runs on a random instance of that shape.
rng = random.Random(1)
seqs = SequenceSet.from_strings(*["".join(rng.choice("ACGT") for _ in range(40))
                                  for _ in range(3)])
print()
for S in (4, best, 20):
    run_parallel(seqs, ScoringScheme(), S, V)
    start = time.perf_counter()
    run_parallel(seqs, ScoringScheme(), S, V)
    print("S=%2d measured %.3f s" % (S, time.perf_counter() - start))
