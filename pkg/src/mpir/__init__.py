"""Multi-message private information retrieval over replicated databases.

Two retrieval schemes (MDS-coded two-round, and multi-round side-information),
the capacity and bound formulas they are measured against, a linear-algebra
decode oracle, a privacy auditor, and the ``mpir`` command line.
"""

from .bounds_calc import (
    BoundsReport,
    bounds_report,
    capacity_high,
    capacity_int,
    gap_surface,
    region_corners,
    repetition_rate,
    single_capacity,
    upper_bound,
)
from .errors import (
    DecodeMismatch,
    DesiredUndetermined,
    DomainError,
    FieldTooSmall,
    IllConditioned,
    Inconsistent,
    IndexOutOfRange,
    LedgerUnderflow,
    MPIRError,
    NonIntegerStageCount,
    PoolUnderflow,
    ZeroInverse,
)
from .gf_core import FieldElement, FieldMatrix, field_inv, rs_generator, solve_linear
from .message_store import (
    MessageStore,
    ProblemParams,
    Query,
    QueryTable,
    RetrievalRequest,
    Term,
    answer,
    generate_store,
)
from .scheme_mds import mds_build_queries, mds_decode, mds_params
from .scheme_rounds import rounds_build_queries, rounds_decode, rounds_params
from .stage_planner import StagePlan, rational_rate, spectral_rate, stage_counts
from .verifier import oracle_decode, statistical_privacy_check, structural_privacy_check

__version__ = "0.1.0"
