"""Scoring engine for complexity measures that predict generalization gaps."""

__version__ = "0.1.0"

from .metrics import (
    CmiBreakdown,
    ScoringError,
    TaskScore,
    VoteJoint,
    cond_mi,
    kendall_tau,
    metric2_task,
    psi_axis,
    psi_overall,
    score_task,
    sign_vote,
    vote_joint,
)
from .population import (
    HyperparamSpace,
    ManifestError,
    MeasureVector,
    ModelRecord,
    Population,
    dump_manifest,
    gap,
    group_by,
    parse_manifest,
    validate_grid,
)
from .report import ScoreReport, aggregate
from .synth import PlantSpec, generate_population, preset_space
