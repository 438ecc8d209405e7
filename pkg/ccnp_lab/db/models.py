"""
ORM models for the run ledger.
"""

import enum
from datetime import datetime, timezone

from sqlalchemy import Column, DateTime, Enum, Index, Integer, String, Text

from ccnp_lab.db.base import Base


class RunStatus(str, enum.Enum):
    SUCCESS = "success"
    FAILURE = "failure"


class RunLog(Base):
    """Audit row for every job the runner executed (train, eval, probe, sweep)."""
    __tablename__ = "run_logs"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(String(64), nullable=True, index=True)
    experiment = Column(String(255), nullable=False, index=True)
    job_kind = Column(String(32), nullable=False)
    variant = Column(String(32), nullable=True)
    seed = Column(Integer, nullable=True)
    status = Column(Enum(RunStatus), nullable=False, index=True)
    details = Column(Text, nullable=True)
    error_message = Column(Text, nullable=True)
    traceback = Column(Text, nullable=True)
    duration_ms = Column(Integer, nullable=True)
    created_at = Column(DateTime(timezone=True), default=lambda: datetime.now(timezone.utc))

    # Indexes
    __table_args__ = (
        Index("ix_run_logs_status_created", "status", "created_at"),
    )

    def __repr__(self):
        return f"<RunLog(experiment='{self.experiment}', variant='{self.variant}', seed={self.seed}, status='{self.status}')>"
