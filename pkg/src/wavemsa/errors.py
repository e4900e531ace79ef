"""Exception types shared across the package."""


class BoundsError(IndexError):
    """An index or offset lies outside a tensor shape."""


class FastaParseError(ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line


class SchemeError(ValueError):
    """Scoring scheme is malformed or not total over the alphabet."""


class ConfigError(ValueError):
    """Invalid partition size, worker count or similar run setting."""


class MemoryCapError(MemoryError):
    def __init__(self, cells, cap):
        super().__init__(
            "tensor of %d cells (~%.1f MiB) exceeds the memory cap of %d cells"
            % (cells, cells * 10 / 2**20, cap))
        self.cells = cells
        self.cap = cap


class DependencyError(RuntimeError):
    """A cell needed for scoring was not available (a protocol bug)."""


class ConsistencyError(RuntimeError):
    """Two copies of a shared cell disagree after a parallel run."""


class WorkerError(RuntimeError):
    def __init__(self, worker, wave, partition, cause):
        super().__init__("worker %d failed in wave %d on partition %s: %r"
                         % (worker, wave, partition, cause))
        self.worker = worker
        self.wave = wave
        self.partition = partition
