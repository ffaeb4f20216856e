"""Multiple-instance learning workbench.

Converts MIL problems to standard supervised learning through per-bag
instance prototypes, visualizes datasets as two-level neighbor-joining
trees, and drives the train/inspect/update loop either interactively
(HTTP API + CLI) or unattended (benchmark harness).
"""

from .data import (
    Bag,
    Instance,
    MilDataset,
    SplitSpec,
    generate_multiclass,
    generate_multimodal,
    generate_synthetic,
    load_csv,
    save_csv,
    split,
)
from .evaluation import EvalResult, positioning_experiment, run_benchmark, score
from .miltree import (
    BagPosition,
    BagSlots,
    MilTree,
    build_miltree,
    classify_positions,
    suggest_training,
)
from .njtree import NjTree, euclidean_matrix, nj_build, radial_layout
from .selection import (
    PrototypePair,
    SelectionConfig,
    milsis_select,
    min_dist_to_set,
    positive_probability,
    salience,
    select_med,
    select_pairs,
    select_si,
)
from .session import ClassMatchReport, ErrorBranch, Session, UpdateAction
from .svm import LinearModel, MulticlassModel, SvmConfig, train_binary, train_multiclass

__version__ = "0.1.0"
