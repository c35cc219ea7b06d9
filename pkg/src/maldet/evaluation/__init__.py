from .roc import RocCurve, roc, auc, auc_mann_whitney, auc_from_scores, tpr_at_fpr
from .timing import TimingResult, time_detector
from .report import (
    ScoreRecord, records_from_scores, write_score_csv, read_score_csv,
    write_json_report, cdf_points, write_points, emit_report,
)

__all__ = [
    "RocCurve", "roc", "auc", "auc_mann_whitney", "auc_from_scores", "tpr_at_fpr",
    "TimingResult", "time_detector",
    "ScoreRecord", "records_from_scores", "write_score_csv", "read_score_csv",
    "write_json_report", "cdf_points", "write_points", "emit_report",
]
