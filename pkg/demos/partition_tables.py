"""
Partitions, waves and who computes what
=======================================

A k-sequence alignment fills a k-dimensional score tensor.  Cutting it into
cubes of side S gives a grid of partitions; all partitions whose grid
coordinates add up to the same number form a wave and can be scored at the
same time.
"""

from wavemsa import build_grid, count_wave, enumerate_wave, schedule

# Four 8-mers plus the leading gap row give a 9x9x9x9 tensor.  With S=3
# every axis holds 4 partitions, and neighbouring partitions share a face.
grid = build_grid((9, 9, 9, 9), 3)
print("partitions:", grid.P, " waves:", grid.t)

# partitions per wave: a bell shape, widest in the middle
print("per wave:  ", [len(enumerate_wave(grid, w)) for w in range(grid.t)])

# Ignoring the tensor bounds, the number of partitions in wave w of a
# k-dimensional grid is C(w+k-1, k-1).  This grows fast with k.
print()
print("k   waves 1..9")
for k in range(2, 10):
    print(k, " ", [count_wave(k, w) for w in range(9)])

# A wave's partitions are dealt to V workers in contiguous blocks.
sched = schedule(grid, 4)
print()
for w in (0, 2, 6):
    owners = [sched.worker_of(p) for p in sched.waves[w]]
    print("wave %d owners:" % w, owners)
print("partitions per worker:", sched.allocation())
