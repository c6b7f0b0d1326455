"""Rank change detection for differential splicing on junction arrays."""

from ._core import (
    AnalysisResult,
    AnosvaCall,
    AnosvaResult,
    Dataset,
    EnrichmentResult,
    FitResult,
    FprRow,
    IncompatibleSet,
    JunctionProbe,
    ModelError,
    PowerPoint,
    RankCall,
    SetFailure,
    ValidationError,
    __version__,
    analyze,
    build_sets,
    call_dse,
    enrichment_ratio,
    estimate_pi0,
    fit_anosva_cells,
    fit_set,
    latent_ranks,
    lfdr,
    permutation_pvalue,
    qvalues,
    rank_change_probability,
    read_dataset,
    run_fpr_study,
    run_power_study,
    sigmoid_transform,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
