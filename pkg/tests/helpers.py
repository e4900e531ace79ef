"""Shared oracles and generators for the test suite."""

import random
from collections import defaultdict
from graphlib import CycleError, TopologicalSorter

from wavemsa.partitioner import dependency_edges
from wavemsa.sequences import ScoringScheme, SequenceSet


def random_seqs(rng, k, lo, hi, alphabet="ACGT"):
    return SequenceSet.from_strings(
        *["".join(rng.choice(alphabet) for _ in range(rng.randint(lo, hi)))
          for _ in range(k)])


def random_scheme(rng, alphabet="ACGT", with_table=False):
    kwargs = dict(match=rng.randint(0, 3), mismatch=rng.randint(-2, 1),
                  gap=rng.randint(-3, 0), gapgap=rng.randint(-1, 1))
    if with_table:
        sub = {}
        for i, x in enumerate(alphabet):
            for y in alphabet[i:]:
                sub[(x, y)] = rng.randint(-2, 3)
        kwargs["sub"] = sub
    return ScoringScheme(**kwargs)


def nw_score(a, b, sub, gap):
    """Textbook global alignment score with a linear gap penalty."""
    rows, cols = len(a) + 1, len(b) + 1
    prev = [j * gap for j in range(cols)]
    for i in range(1, rows):
        cur = [i * gap] + [0] * (cols - 1)
        for j in range(1, cols):
            cur[j] = max(prev[j - 1] + sub(a[i - 1], b[j - 1]),
                         prev[j] + gap,
                         cur[j - 1] + gap)
        prev = cur
    return prev[-1]


def wait_for_graphs(events):
    """Receiver -> sender edges for every (wave, phase) of a recorded run."""
    graphs = defaultdict(lambda: defaultdict(set))
    for e in events:
        if e.event == "recv":
            phase = e.detail.split()[0]
            graphs[(e.wave, phase)][e.worker].add(e.peer)
    return graphs


def assert_deadlock_free(events):
    for key, graph in wait_for_graphs(events).items():
        try:
            tuple(TopologicalSorter(graph).static_order())
        except CycleError as exc:  # pragma: no cover - failure path
            raise AssertionError("wait-for cycle in %r: %s" % (key, exc))
        wave, phase = key
        for dest, sources in graph.items():
            for src in sources:
                assert (src > dest) == (phase == "down"), (key, src, dest)


def assert_consumed_from_earlier_waves(events):
    for e in events:
        if e.event == "consume":
            fields = dict(f.split("=") for f in e.detail.split())
            assert int(fields["max_wave"]) < e.wave, e


def assert_wave_order(events, grid):
    start, end = {}, {}
    for e in events:
        if e.event == "compute_start":
            start[e.partition] = e.seq
        elif e.event == "compute_end":
            end[e.partition] = e.seq
    for edge in dependency_edges(grid):
        assert end[edge.src] < start[edge.dst], edge


def criterion3_instances(n=200, seed=2024):
    rng = random.Random(seed)
    cases = []
    for i in range(n):
        k = (2, 3, 4)[i % 3]
        seqs = random_seqs(rng, k, 2, 6)
        S = rng.choice((2, 3))
        V = (1, 2, 3, 4, 8)[i % 5]
        scheme = random_scheme(rng, with_table=rng.random() < 0.3)
        cases.append((seqs, scheme, S, V))
    return cases
