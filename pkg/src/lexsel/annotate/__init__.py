"""Annotation sessions: task construction, judgment storage, agreement
statistics, and the HTTP service the web interface talks to."""

from lexsel.annotate.agreement import (
    AgreementReport,
    agreement,
    judgment_matrix,
    precision_recall,
    rule_correct_fraction,
)
from lexsel.annotate.store import Judgment, JudgmentStore
from lexsel.annotate.tasks import (
    KINDS,
    AnnotationTask,
    Session,
    create_session,
    load_session,
    save_session,
)

__all__ = [
    "AgreementReport",
    "AnnotationTask",
    "Judgment",
    "JudgmentStore",
    "KINDS",
    "Session",
    "agreement",
    "create_session",
    "judgment_matrix",
    "load_session",
    "precision_recall",
    "rule_correct_fraction",
    "save_session",
]
