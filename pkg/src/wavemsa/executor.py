"""Wavefront execution of the partitioned DP over V worker threads.

Each worker owns a private cell store and the blocks it computes.  After
every wave the workers swap overlap cells in two phases: first every worker
posts to lower-ranked workers, then (after a barrier) to higher-ranked
ones.  Within a phase all messages flow in one direction, so no pair of
workers ever waits on each other.  The per-partition cell loop runs in a
compiled kernel that releases the GIL.
"""

import csv
import itertools
import queue
import threading
import time
from collections import defaultdict, namedtuple
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numba import njit

from .dp_core import ScoreTensor, move_order, score_dtype, traceback, _tolerance
from .errors import ConsistencyError, DependencyError, WorkerError
from .moa_index import offset_code, strides, unflatten
from .partitioner import (build_grid, owner_grid_coords, partition_sends,
                          schedule)
from .sequences import GAP, pair_score

UNKNOWN, LOCAL, RECEIVED = 0, 1, 2
PHASE_DOWN, PHASE_UP = "down", "up"

Event = namedtuple("Event", "seq worker wave event partition peer detail")


@njit(nogil=True, cache=True)
def _score_box(values, moves, todo, lo, extents, lstrides, codes, table,
               gap_code, bits, mcodes, eps):
    k = lo.shape[0]
    col = np.empty(k, np.int64)
    coord = np.empty(k, np.int64)
    for ii in range(todo.shape[0]):
        flat = todo[ii]
        rem = flat
        origin = True
        for a in range(k - 1, -1, -1):
            coord[a] = rem % extents[a]
            rem //= extents[a]
            if coord[a] + lo[a] != 0:
                origin = False
        if origin:
            values[flat] = 0
            moves[flat] = 0
            continue
        have = False
        best = values[flat]
        best_code = 0
        for m in range(bits.shape[0]):
            nflat = flat
            ok = True
            for a in range(k):
                if bits[m, a]:
                    if coord[a] == 0:
                        ok = False
                        break
                    nflat -= lstrides[a]
            if not ok:
                continue
            for a in range(k):
                if bits[m, a]:
                    col[a] = codes[a, coord[a] + lo[a] - 1]
                else:
                    col[a] = gap_code
            # column first, then the neighbour: same rounding as the oracle
            s = table[0, 0] - table[0, 0]
            for a in range(k):
                for b in range(a + 1, k):
                    s += table[col[a], col[b]]
            s = values[nflat] + s
            if not have or s > best + eps:
                best = s
                best_code = mcodes[m]
                have = True
        values[flat] = best
        moves[flat] = best_code


class Kernel:
    """Residue codes and the pair table the compiled cell loop needs."""

    def __init__(self, seqs, scheme):
        symbols = sorted(set("".join(seqs.residues)))
        if scheme.sub is not None:
            scheme.check_alphabet(symbols)
        index = {c: i for i, c in enumerate(symbols)}
        self.dtype = score_dtype(scheme)
        self.gap_code = len(symbols)
        alphabet = symbols + [GAP]
        self.table = np.array([[pair_score(scheme, x, y) for y in alphabet]
                               for x in alphabet], dtype=self.dtype)
        width = max(len(r) for r in seqs.residues)
        self.codes = np.full((seqs.k, width), self.gap_code, dtype=np.int64)
        for s, r in enumerate(seqs.residues):
            self.codes[s, :len(r)] = [index[c] for c in r]
        order = move_order(seqs.k)
        self.bits = np.array(order, dtype=np.int64)
        self.mcodes = np.array([offset_code(d) for d in order], dtype=np.int16)
        self.eps = self.dtype(_tolerance(scheme))
        # compile (or load from cache) outside any timed region
        _score_box(np.zeros(1, self.dtype), np.zeros(1, np.int16),
                   np.zeros(0, np.int64), np.zeros(seqs.k, np.int64),
                   np.ones(seqs.k, np.int64), np.ones(seqs.k, np.int64),
                   self.codes, self.table, self.gap_code, self.bits,
                   self.mcodes, self.eps)

    def run(self, values, moves, todo, geom):
        _score_box(values, moves, todo, geom.lo_arr, geom.extents_arr,
                   geom.lstrides_arr, self.codes, self.table, self.gap_code,
                   self.bits, self.mcodes, self.eps)


class Geometry:
    """Static layout of one partition: its box, owned cells and low faces."""

    def __init__(self, grid, pid):
        lo, hi = grid.box(pid.grid_coords)
        self.grid = grid
        self.pid = pid
        self.lo = lo
        self.extents = tuple(h - l + 1 for l, h in zip(lo, hi))
        k = grid.k
        self.lo_arr = np.array(lo, dtype=np.int64)
        self.extents_arr = np.array(self.extents, dtype=np.int64)
        self.lstrides_arr = np.array(strides(self.extents), dtype=np.int64)
        local = np.indices(self.extents).reshape(k, -1).T
        self.gidx = (local + self.lo_arr) @ np.array(strides(grid.shape), dtype=np.int64)
        low = np.zeros(len(local), dtype=bool)
        for a, g in enumerate(pid.grid_coords):
            if g > 0:
                low |= local[:, a] == 0
        self.low_local = np.flatnonzero(low)
        self.owned_local = np.flatnonzero(~low)
        self.low_global = self.gidx[self.low_local]
        self.owned_global = self.gidx[self.owned_local]

    @property
    def size(self):
        return len(self.gidx)


class Plan:
    """Everything fixed before the run: grid, schedule, geometry, send lists."""

    def __init__(self, shape, S, V, policy="block"):
        self.grid = build_grid(shape, S)
        self.schedule = schedule(self.grid, V, policy)
        self.V = V
        self.geometry = {pid: Geometry(self.grid, pid)
                         for wave in self.schedule.waves for pid in wave}
        self.sends = {pid: partition_sends(self.grid, self.schedule, pid.grid_coords)
                      for pid in self.geometry}


@lru_cache(maxsize=16)
def build_plan(shape, S, V, policy="block"):
    return Plan(shape, S, V, policy)


@dataclass
class ScoreBlock:
    partition: object
    extents: tuple
    values: np.ndarray
    moves: np.ndarray
    received: np.ndarray

    def local_array(self):
        return self.values.reshape(self.extents)


@dataclass
class DependencyMessage:
    source: int
    dest: int
    wave: int
    offsets: np.ndarray
    values: np.ndarray
    moves: np.ndarray

    def __post_init__(self):
        if self.source == self.dest:
            raise ValueError("worker %d addressed a message to itself" % self.source)

    @property
    def cells(self):
        return len(self.offsets)


class CellStore:
    """One worker's view of global cells: its own scores and received ones."""

    def __init__(self, size, dtype):
        self.values = np.zeros(size, dtype=dtype)
        self.moves = np.zeros(size, dtype=np.int16)
        self.state = np.zeros(size, dtype=np.int8)
        self.recv_wave = np.full(size, -1, dtype=np.int32)
        self.consumed = np.zeros(size, dtype=bool)

    def receive(self, msg):
        self.values[msg.offsets] = msg.values
        self.moves[msg.offsets] = msg.moves
        self.state[msg.offsets] = RECEIVED
        self.recv_wave[msg.offsets] = msg.wave

    def unconsumed(self):
        return int(np.count_nonzero((self.state == RECEIVED) & ~self.consumed))


class EventLog:
    def __init__(self, enabled):
        self.enabled = enabled
        self.events = []
        self._seq = itertools.count()
        self._lock = threading.Lock()

    def add(self, worker, wave, event, partition=None, peer=None, detail=None):
        if not self.enabled:
            return
        with self._lock:
            self.events.append(Event(next(self._seq), worker, wave, event,
                                     partition, peer, detail))



def write_event_log(fh, events):
    """One line per event: worker wave event partition [peer=N] [detail]."""
    for e in events:
        part = "-" if e.partition is None else str(e.partition)
        extra = "" if e.peer is None else " peer=%s" % e.peer
        if e.detail is not None:
            extra += " %s" % (e.detail,)
        fh.write("%d %d %s %s%s\n" % (e.worker, e.wave, e.event, part, extra))


@dataclass
class WaveStats:
    wave: int
    partitions: int
    messages: int = 0
    payload_cells: int = 0
    elapsed_ns: int = 0
    idle_workers: int = 0


@dataclass
class RunReport:
    terminal_score: object
    cells_per_worker: list
    waves: list
    distinct_cells: int = 0
    warnings: list = field(default_factory=list)
    events: list = field(default_factory=list)

    @property
    def messages(self):
        return sum(w.messages for w in self.waves)

    @property
    def payload_cells(self):
        return sum(w.payload_cells for w in self.waves)

    @property
    def elapsed_ns(self):
        return sum(w.elapsed_ns for w in self.waves)

    def write_csv(self, fh):
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["wave", "partitions", "messages", "payload_cells", "elapsed_ns"])
        for w in self.waves:
            out.writerow([w.wave, w.partitions, w.messages, w.payload_cells, w.elapsed_ns])


def compute_partition(geom, store, kernel, wave=None, log=None, worker=None):
    """Score the cells partition ``geom`` owns.

    Low-face cells are copied in from the worker's store: first its own
    scores, then received overlap cells.  A missing one means a predecessor
    was neither computed locally nor delivered.
    """
    low = geom.low_global
    state = store.state[low]
    if not state.all():
        missing = low[state == UNKNOWN][0]
        cell = unflatten(geom.grid.shape, int(missing))
        raise DependencyError(
            "partition %s needs cell %r, which is neither local nor received "
            "(expected from partition %r)"
            % (geom.pid, cell, owner_grid_coords(geom.grid, cell)))
    got = low[state == RECEIVED]
    if len(got):
        waves = store.recv_wave[got]
        delivered = int(waves.max())
        if wave is not None and delivered >= wave:
            raise DependencyError("partition %s in wave %d consumed a cell delivered "
                                  "in wave %d" % (geom.pid, wave, delivered))
        store.consumed[got] = True
        if log is not None:
            log.add(worker, wave, "consume", geom.pid, detail="cells=%d min_wave=%d max_wave=%d"
                    % (len(got), int(waves.min()), delivered))

    values = np.zeros(geom.size, dtype=store.values.dtype)
    moves = np.zeros(geom.size, dtype=np.int16)
    values[geom.low_local] = store.values[low]
    moves[geom.low_local] = store.moves[low]
    kernel.run(values, moves, geom.owned_local, geom)
    store.values[geom.owned_global] = values[geom.owned_local]
    store.moves[geom.owned_global] = moves[geom.owned_local]
    store.state[geom.owned_global] = LOCAL
    received = np.zeros(geom.size, dtype=bool)
    received[geom.low_local] = True
    return ScoreBlock(geom.pid, geom.extents, values, moves, received)


def _deliver(store, msg):
    store.receive(msg)


def exchange(wave, rank, outgoing, mailboxes, barrier, store, log=None):
    """Run this worker's side of the two-phase exchange after a wave.

    ``outgoing`` maps destination rank to a DependencyMessage.  Down-phase
    messages go to lower ranks, up-phase messages to higher ranks; each phase
    ends at a barrier, after which the worker drains its phase mailbox.
    """
    received = []
    for phase in (PHASE_DOWN, PHASE_UP):
        for dest, msg in sorted(outgoing.items()):
            if dest == rank:
                raise ValueError("worker %d addressed a message to itself" % rank)
            if (dest < rank) == (phase == PHASE_DOWN):
                mailboxes[dest][phase].put(msg)
                if log is not None:
                    log.add(rank, wave, "send", peer=dest, detail="%s cells=%d"
                            % (phase, msg.cells))
        barrier.wait()
        box = mailboxes[rank][phase]
        batch = []
        while True:
            try:
                batch.append(box.get_nowait())
            except queue.Empty:
                break
        # arrival order depends on thread timing; deliver in rank order
        for msg in sorted(batch, key=lambda m: m.source):
            _deliver(store, msg)
            received.append(msg)
            if log is not None:
                log.add(rank, wave, "recv", peer=msg.source, detail="%s cells=%d"
                        % (phase, msg.cells))
    return received


def assemble_global(blocks, plan):
    """Build the global tensor from each cell's owner block and cross-check copies."""
    shape = plan.grid.shape
    dtype = blocks[0].values.dtype if blocks else np.int64
    values = np.zeros(shape.size, dtype=dtype)
    moves = np.zeros(shape.size, dtype=np.int16)
    filled = np.zeros(shape.size, dtype=np.int64)
    for block in blocks:
        geom = plan.geometry[block.partition]
        values[geom.owned_global] = block.values[geom.owned_local]
        moves[geom.owned_global] = block.moves[geom.owned_local]
        filled[geom.owned_global] += 1
    if not (filled == 1).all():
        bad = int(np.flatnonzero(filled != 1)[0])
        raise ConsistencyError("cell %r computed %d times"
                               % (unflatten(shape, bad), filled[bad]))
    for block in blocks:
        geom = plan.geometry[block.partition]
        copy_v = block.values[geom.low_local]
        copy_m = block.moves[geom.low_local]
        diff = (copy_v != values[geom.low_global]) | (copy_m != moves[geom.low_global])
        if diff.any():
            bad = int(geom.low_global[np.flatnonzero(diff)[0]])
            raise ConsistencyError("partition %s holds a stale copy of cell %r"
                                   % (block.partition, unflatten(shape, bad)))
    return ScoreTensor(shape, values, moves)


class _Worker:
    def __init__(self, rank, plan, kernel, mailboxes, barrier, log, dtype):
        self.rank = rank
        self.plan = plan
        self.kernel = kernel
        self.mailboxes = mailboxes
        self.barrier = barrier
        self.log = log
        self.store = CellStore(plan.grid.shape.size, dtype)
        self.blocks = []
        self.wave_messages = defaultdict(list)
        self.cells = 0
        self.error = None
        self.wave_ns = []

    def __call__(self):
        wave, pid = -1, None
        log = self.log if self.log.enabled else None
        try:
            for wave, parts in enumerate(self.plan.schedule.waves):
                start = time.perf_counter_ns()
                outgoing = defaultdict(list)
                for pid in parts:
                    if self.plan.schedule.owner[pid] != self.rank:
                        continue
                    geom = self.plan.geometry[pid]
                    self.log.add(self.rank, wave, "compute_start", pid)
                    block = compute_partition(geom, self.store, self.kernel, wave,
                                              log, self.rank)
                    self.log.add(self.rank, wave, "compute_end", pid)
                    self.blocks.append(block)
                    self.cells += len(geom.owned_local)
                    for dest, offs in self.plan.sends[pid].items():
                        outgoing[dest].append(offs)
                pid = None
                packed = {}
                for dest, chunks in outgoing.items():
                    offs = np.concatenate(chunks)
                    packed[dest] = DependencyMessage(
                        self.rank, dest, wave, offs,
                        self.store.values[offs].copy(), self.store.moves[offs].copy())
                self.wave_messages[wave] = list(packed.values())
                exchange(wave, self.rank, packed, self.mailboxes, self.barrier,
                         self.store, log)
                self.wave_ns.append(time.perf_counter_ns() - start)
        except threading.BrokenBarrierError:
            if self.error is None:
                self.error = "aborted"
        except BaseException as exc:  # noqa: B036 - reported by the coordinator
            self.error = (wave, pid, exc)
            self.barrier.abort()


def run_parallel(seqs, scheme, S, V, policy="block", record_events=False, plan=None):
    """Score the full tensor with V workers and return (tensor, alignment, report)."""
    shape = seqs.shape
    plan = plan or build_plan(shape, int(S), int(V), policy)
    kernel = Kernel(seqs, scheme)
    log = EventLog(record_events)
    mailboxes = [{PHASE_DOWN: queue.SimpleQueue(), PHASE_UP: queue.SimpleQueue()}
                 for _ in range(plan.V)]
    barrier = threading.Barrier(plan.V)
    workers = [_Worker(m, plan, kernel, mailboxes, barrier, log, kernel.dtype)
               for m in range(plan.V)]
    threads = [threading.Thread(target=w, name="wavemsa-worker-%d" % w.rank, daemon=True)
               for w in workers]
    for th in threads:
        th.start()
    for th in threads:
        th.join()

    for w in workers:
        if isinstance(w.error, tuple):
            wave, pid, exc = w.error
            if isinstance(exc, (DependencyError, ConsistencyError)):
                raise exc
            raise WorkerError(w.rank, wave, pid, exc) from exc

    blocks = [b for w in workers for b in w.blocks]
    tensor = assemble_global(blocks, plan)
    alignment = traceback(tensor, seqs)

    waves = []
    all_offsets = []
    for wave, parts in enumerate(plan.schedule.waves):
        stats = WaveStats(wave, len(parts))
        busy = {plan.schedule.owner[p] for p in parts}
        stats.idle_workers = plan.V - len(busy)
        for w in workers:
            for msg in w.wave_messages.get(wave, ()):
                stats.messages += 1
                stats.payload_cells += msg.cells
                all_offsets.append(msg.offsets)
        stats.elapsed_ns = max(w.wave_ns[wave] for w in workers)
        waves.append(stats)
    distinct = len(np.unique(np.concatenate(all_offsets))) if all_offsets else 0
    report = RunReport(tensor.terminal_score, [w.cells for w in workers], waves,
                       distinct_cells=distinct, events=log.events)
    for w in workers:
        left = w.store.unconsumed()
        if left:
            report.warnings.append("worker %d: %d received cells never consumed"
                                   % (w.rank, left))
    return tensor, alignment, report
