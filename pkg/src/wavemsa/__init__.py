"""Dynamic-programming multiple sequence alignment over a partitioned score tensor."""

from .cost_model import (CostParams, calibrate, granularity, predict_dt,
                         recommend_partition_size)
from .dp_core import (ScoreTensor, brute_force_best, score_cell, score_sequential,
                      traceback)
from .executor import run_parallel
from .moa_index import (Shape, flatten, higher_neighbors, lower_neighbors, strides,
                        unflatten)
from .partitioner import (build_grid, count_wave, dependency_edges, enumerate_wave,
                          overlap_cells_formula, overlap_cells_oracle, owner_of_cell,
                          schedule)
from .sequences import (DEFAULT_SCHEME, Alignment, ScoringScheme, SequenceSet,
                        pair_score, parse_fasta, read_fasta, similarity_score)

__version__ = "0.1.0"
