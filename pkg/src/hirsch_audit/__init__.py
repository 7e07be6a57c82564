"""Audit toolkit for Hirsch-type citation indices."""

from .errors import AuditError
from .ingest import (
    CitingDoc,
    CorrectionsLedger,
    Edit,
    MatchedPublication,
    SourceRecord,
    VenueAliases,
    apply_corrections,
    dedup_within_source,
    load_ledger,
    match_across_sources,
    normalize_key,
    parse_records,
)
from .metrics import (
    CitationProfile,
    PowerFit,
    PubKey,
    fit_power_curve,
    fit_power_law,
    h_index,
    mean_citations,
    rank_profile,
    total_citations,
)
from .robustness import (
    Perturbation,
    SensitivityRow,
    apply_perturbation,
    generate_synthetic_profile,
    sensitivity_report,
)
from .verify import (
    CombinedEntry,
    VerificationReport,
    build_verification_report,
    combine_max,
    exclude_self_citations,
    interim_h,
    threshold_worklist,
    union_check_candidates,
    union_citations,
)

__version__ = "0.1.0"
