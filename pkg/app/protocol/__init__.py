"""
Decision protocol over evaluated systems.
"""

from app.protocol.decision import (
    DECISION_HEADER,
    POOLED_LAMBDA,
    build_rows,
    cce,
    cmc,
    decide,
    decision_frame,
    decision_report,
    performance,
    protocol_row,
    render_decision_table,
    write_decision,
)

__all__ = [
    "DECISION_HEADER",
    "POOLED_LAMBDA",
    "build_rows",
    "cce",
    "cmc",
    "decide",
    "decision_frame",
    "decision_report",
    "performance",
    "protocol_row",
    "render_decision_table",
    "write_decision",
]
