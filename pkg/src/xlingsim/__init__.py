"""xlingsim: pick cross-lingual transfer source languages from embedding similarity."""

from .analysis import (
    ConditionRho,
    JoinedPair,
    SimpsonFinding,
    Stratum,
    aggregate_conditions,
    bundled_conditions,
    correlate_stratified,
    detect_simpson,
    domain_effect,
    inter_metric_correlation,
    join,
    model_summary,
    pretraining_stratified,
    uriel_comparison,
)
from .errors import (
    AnalysisError,
    FormatError,
    SchemaError,
    ToolkitError,
    ValidationError,
)
from .metrics import (
    METRICS,
    MetricRecord,
    SimilarityMatrix,
    all_metrics,
    cka,
    cosine_gap,
    cosine_mean,
    csls_mean,
    load_metrics_csv,
    p_at_1,
    similarity_matrix,
    write_metrics_csv,
)
from .ranking import CorrelationResult, critical_rho, p_value, spearman, stars
from .selection import (
    SelectionReport,
    build_selection_report,
    random_baseline,
    rank_sources,
    top_k_accuracy,
)
from .store import (
    CoverageTable,
    EmbeddingMatrix,
    TransferRecord,
    UrielDistance,
    load_coverage_csv,
    load_embeddings,
    load_transfer_csv,
    load_uriel_csv,
    normalize_rows,
    write_embeddings,
)

__version__ = "0.1.0"
