"""Expert-system construction and inference over local event groups.

Distributions live per group as dense component marginals; knowledge
enters as a canonically ordered constraint sequence with feasible
intervals and minimum-information defaults; evidence flows through the
intersection tree by multiplicative updating that keeps every shared
marginal consistent.
"""

from .config import MAX_LEG_VARS, STRUCT_TOL
from .dist import (
    Cmd,
    ConjunctionTable,
    atom_label,
    condition,
    conjunction_prob,
    entropy,
    moebius,
    sum_out,
    zeta,
)
from .elicit import (
    ConditionalEntry,
    ConstraintKey,
    ConstraintRecord,
    ElicitationState,
    accept_constraint,
    accept_default,
    build_cmd,
    canonical_sequence,
    count_required_constraints,
    feasible_interval,
    forced_zero_atoms,
    forced_zero_keys,
    min_info_default,
    new_elicitation,
    next_key,
    remaining_keys,
    resolved_records,
    state_from_records,
)
from .errors import (
    ConflictingEvidence,
    ConsistencyError,
    ConstraintOutOfRange,
    GbiError,
    ImpossibleEvidence,
    InfeasibleConstraintSet,
    InvalidNet,
    NotEvidenceVariable,
    SchemaError,
    UndeterminedCondition,
    UnknownVariable,
    UnsupportedVersion,
    ZeroCondition,
)
from .infer import (
    ConsistencyReport,
    EvidenceAssertion,
    Session,
    UpdateStep,
    assert_evidence,
    check_consistency,
    gbi_update,
    goal_report,
    marginal,
    open_session,
    rank_evidence,
)
from .kbdoc import (
    KbDocument,
    SessionDocument,
    build_document,
    elicitation_states,
    net_from_document,
    open_document_session,
    parse_kb,
    parse_session,
    replay_session,
    serialize_kb,
    serialize_session,
    session_document,
    verify_cache,
)
from .net import (
    Cutoff,
    Forbidden,
    Leg,
    LegNet,
    ValidationReport,
    Variable,
    Violation,
    compute_intersections,
    storage_footprint,
    validate,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
