"""
Wavefront scoring on several workers
====================================

The same alignment is scored twice: once cell by cell in plain Python, once
with the partitioned wavefront executor.  The two tensors must agree exactly.
"""

import collections

from wavemsa import (DEFAULT_SCHEME, SequenceSet, run_parallel, score_sequential,
                     similarity_score, traceback)

seqs = SequenceSet.from_strings("ACGTACGT", "ACGAACGT", "TCGTACGA", "ACCTAGGT")
print("tensor shape:", seqs.shape.dims, "=", seqs.shape.size, "cells")

# the reference: one cell at a time, in row-major order
ref = score_sequential(seqs, DEFAULT_SCHEME)
aln = traceback(ref, seqs)
print(aln.to_fasta())
print("terminal score:", ref.terminal_score,
      " sum-of-pairs:", similarity_score(DEFAULT_SCHEME, aln))

# four workers, partitions of side 3; record the protocol events
tensor, par_aln, report = run_parallel(seqs, DEFAULT_SCHEME, 3, 4, record_events=True)
print("same tensor:", tensor.equals(ref), " same alignment:", par_aln.rows == aln.rows)

# After each wave the workers swap the cells on shared faces.  The report
# counts messages and cells per wave.
print()
print("wave  partitions  messages  cells")
for w in report.waves:
    print("%4d  %10d  %8d  %5d" % (w.wave, w.partitions, w.messages, w.payload_cells))
print("cells scored per worker:", report.cells_per_worker)

# Sends to lower ranks happen before sends to higher ranks, so no two
# workers ever wait on each other within a phase.
phases = collections.Counter(e.detail.split()[0] for e in report.events if e.event == "send")
print("messages by phase:", dict(phases))
