"""Bias-controlled chart-to-table benchmark toolkit.

Generates chart-image benchmarks with exact ground-truth tables, queries
multimodal models (or ingests stored outputs), and scores predictions with
tick-based table-similarity metrics plus paired nonparametric statistics.
"""

__version__ = "0.1.0"

from .tables import (  # noqa: F401
    AxisSpec,
    BenchmarkItem,
    ChartType,
    Condition,
    DataTable,
    Part,
    TickFormat,
    digit_length,
    validate_table,
)
from .generator import (  # noqa: F401
    GenConfig,
    Manifest,
    derive_axis,
    generate_base_tables,
    generate_manifest,
    scale_table,
    shift_range,
)
from .numformat import NumberParseError, format_tick, parse_number  # noqa: F401
from .parsing import (  # noqa: F401
    Dialect,
    ParseDiagnostics,
    PredictionRecord,
    canonicalize_header,
    parse_prediction,
    to_linearized,
    to_markdown,
)
from .metrics import (  # noqa: F401
    Alignment,
    ScoreRecord,
    d_rms,
    d_tbe,
    d_tbe_raw,
    d_tbe_sig,
    match_headers,
    match_values,
    normalized_levenshtein,
    rms_f1_baseline,
    rms_tbe_f1,
    rms_tbe_f1_sig,
    rnss_tbe_f1,
    score_tables,
    ses,
    tbe_raw_score,
)
from .stats import (  # noqa: F401
    Direction,
    TestResult,
    coefficient_of_variation,
    count_crossings,
    pearson,
    wilcoxon_signed_rank,
)
from .analysis import (  # noqa: F401
    Dimension,
    GroupKey,
    aggregate,
    compare_conditions,
    emit_report,
)
from .render import StyleSpec, render, render_manifest, render_with_metadata  # noqa: F401
from .client import (  # noqa: F401
    EndpointConfig,
    PredictionStore,
    PromptVariant,
    build_prompt,
    query_item,
    run_batch,
)
