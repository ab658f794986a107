"""postpart: summarize posterior samples of clusterings with a few weighted
representative partitions under the variation-of-information metric."""

from .partition import (
    ContingencyTable,
    Partition,
    canonicalize,
    contingency,
    entropy,
    meet,
    vi_contribution,
    vi_contribution_by_group,
    vi_distance,
)
from .samples import (
    PSM,
    SampleSet,
    evi_contribution_mcmc,
    expected_vi,
    psm,
    subsample,
    vi_to_draws,
)
from .search import SearchConfig, greedy_minvi, linkage_candidates, top_candidates_by_evi
from .summarize import (
    ParticleSummary,
    SummaryConfig,
    elbow,
    initialize,
    n_update,
    run,
    vi_search_step,
)
from .diagnostics import (
    DiagnosticsReport,
    GroupedContribution,
    MeetDecomposition,
    ParticleComparison,
    build_report,
    collapsed_psm,
    compare_particles,
    evi_contribution_particles,
    particles_meet,
    region_evi,
    region_psm,
)
from .simulate import (
    DpmHyper,
    MixtureSpec,
    default_hyper,
    dpm_gibbs,
    gen_mixture,
)

__version__ = "0.1.0"
