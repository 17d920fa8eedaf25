"""Ingredient-embedding analytics workbench.

Core surfaces: corpus I/O and pairwise geometry, catalog consolidation
with replayable overrides, label-driven semantic axes with honest
cross-validation, cuisine cluster structure, three-layer ingredient
matching, model-assisted tagging, and a JSON service for review UIs.
"""

from .corpus import (
    DataFormatError,
    EmbeddingMatrix,
    LabelSet,
    PairTable,
    cosine,
    load_embeddings,
    load_labels,
    pairwise,
    save_embeddings,
    save_labels,
)
from .curation import (
    CanonicalEntry,
    ConsolidationMap,
    OverrideError,
    OverrideSet,
    apply_overrides,
    back_project,
    consolidate,
    load_consolidation_map,
    save_consolidation_map,
    variant_noise,
)
from .stats import (
    Seed,
    StatResult,
    bootstrap,
    cohens_d,
    mann_whitney_u,
    midranks,
    permutation_p,
    spearman,
    wilcoxon_signed_rank,
)

__version__ = "0.1.0"

__all__ = [
    "DataFormatError", "EmbeddingMatrix", "LabelSet", "PairTable",
    "cosine", "load_embeddings", "load_labels", "pairwise",
    "save_embeddings", "save_labels",
    "CanonicalEntry", "ConsolidationMap", "OverrideError", "OverrideSet",
    "apply_overrides", "back_project", "consolidate",
    "load_consolidation_map", "save_consolidation_map", "variant_noise",
    "Seed", "StatResult", "bootstrap", "cohens_d", "mann_whitney_u",
    "midranks", "permutation_p", "spearman", "wilcoxon_signed_rank",
    "__version__",
]
