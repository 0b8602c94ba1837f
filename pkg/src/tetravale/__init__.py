"""Procurement-bidding classroom game with machine-learning cartel screening.

Four construction firms per group bid on public tenders, first competing,
then colluding; afterwards everyone turns antitrust investigator and flags
the rigged tenders with statistical screens and a random forest. The package
ships the deterministic game engine, the screen and forest math, the scoring
authority, and a session server plus lecturer CLI around them.
"""

from .authority import (
    ConsensusReport,
    ScoreRow,
    StaffSubmission,
    compute_consensus,
    final_leaderboard,
    score_participants,
    submission_from_csv,
    submission_to_csv,
)
from .engine import (
    AwardResult,
    BidRecord,
    GameEngine,
    GroupAllocation,
    Tender,
    allocate_groups,
    compute_cost,
    generate_schedule,
)
from .errors import (
    AllocationError,
    ClosedTenderError,
    DuplicateBidError,
    ForbiddenError,
    GameError,
    NotFoundError,
    PhaseError,
    StalenessError,
    UnknownEnumError,
    ValidationError,
)
from .forest import (
    ClassificationResult,
    DecisionForest,
    ForestParams,
    LabeledDataset,
    accuracy,
    classify,
    confusion_matrix,
    fit,
    load_training_csv,
    synthetic_training_data,
    train_test_split,
)
from .screens import (
    BidVector,
    ScreenRow,
    SealedTruth,
    dataset_from_csv,
    dataset_to_csv,
    prepare_part3_dataset,
    screen_tender,
)
from .session import Session
from .store import SessionStore

__version__ = "0.1.0"

__all__ = [
    "AllocationError",
    "AwardResult",
    "BidRecord",
    "BidVector",
    "ClassificationResult",
    "ClosedTenderError",
    "ConsensusReport",
    "DecisionForest",
    "DuplicateBidError",
    "ForbiddenError",
    "ForestParams",
    "GameEngine",
    "GameError",
    "GroupAllocation",
    "LabeledDataset",
    "NotFoundError",
    "PhaseError",
    "ScoreRow",
    "ScreenRow",
    "SealedTruth",
    "Session",
    "SessionStore",
    "StaffSubmission",
    "StalenessError",
    "Tender",
    "UnknownEnumError",
    "ValidationError",
    "accuracy",
    "allocate_groups",
    "classify",
    "compute_consensus",
    "compute_cost",
    "confusion_matrix",
    "dataset_from_csv",
    "dataset_to_csv",
    "final_leaderboard",
    "fit",
    "generate_schedule",
    "load_training_csv",
    "prepare_part3_dataset",
    "score_participants",
    "screen_tender",
    "submission_from_csv",
    "submission_to_csv",
    "synthetic_training_data",
    "train_test_split",
]
