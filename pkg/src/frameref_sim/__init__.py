"""Simulation testbed for framing-sensitive agents in a reinforcement-style
information stream: corpus handling, leakage-free splits, embedding
similarity sampling, calibrated personas, Monte Carlo trajectories, and
information-health metrics."""

__version__ = "0.1.0"

from .corpus import (  # noqa: F401
    ClaimPool,
    ClaimVariant,
    FramingType,
    Label,
    RawRecord,
    RecordSchema,
    load_pool,
    parse_record,
    summarize_corpus,
)
from .embeddings import (  # noqa: F401
    EmbeddingStore,
    WindowAggregate,
    build_store,
    export_store,
    import_store,
)
from .environment import (  # noqa: F401
    SamplerBranch,
    SimConfig,
    Trajectory,
    TrajectoryStep,
    compute_reward,
    run_monte_carlo,
    run_trajectory,
    select_next_claim,
)
from .metrics import (  # noqa: F401
    DiagnosticRow,
    TrajectorySummary,
    diagnostic_eval,
    per_step_curve,
    trajectory_summary,
)
from .personas import (  # noqa: F401
    CellTargets,
    Judgment,
    Policy,
    RemoteAgent,
    RemoteAgentConfig,
    SyntheticPersona,
    SyntheticPersonaConfig,
    TokenLogprob,
    aggregate_label_logprob,
    fit_synthetic_persona,
    normalize_and_decide,
    remote_judge,
    synthetic_judge,
)
from .splitter import (  # noqa: F401
    Split,
    SplitAssignment,
    assign_splits,
    build_components,
    verify_no_leakage,
)
