"""
Structured logging for experiment jobs.

Every record carries the job context (run_id, experiment, variant, seed)
of the job that emitted it; records outside a job get empty fields.
"""

import logging
import uuid
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import asdict, dataclass
from typing import Iterator, Optional

from pythonjsonlogger import jsonlogger

CONTEXT_FIELDS = ("run_id", "experiment", "variant", "seed")


@dataclass(frozen=True)
class JobContext:
    run_id: str = ""
    experiment: str = ""
    variant: str = ""
    seed: Optional[int] = None


job_context_var: ContextVar[JobContext] = ContextVar("job_context", default=JobContext())


def generate_run_id(prefix: str = "") -> str:
    rid = uuid.uuid4().hex[:12]
    return f"{prefix}-{rid}" if prefix else rid


@contextmanager
def job_context(experiment: str, variant: str, seed: int) -> Iterator[JobContext]:
    """Bind a fresh run_id plus the job's identity for the duration of the block."""
    ctx = JobContext(
        run_id=generate_run_id(f"{variant}-s{seed}"),
        experiment=experiment,
        variant=variant,
        seed=seed,
    )
    token = job_context_var.set(ctx)
    try:
        yield ctx
    finally:
        job_context_var.reset(token)


class JobContextFilter(logging.Filter):
    def filter(self, record):
        for key, value in asdict(job_context_var.get()).items():
            setattr(record, key, "" if value is None else value)
        return True


def build_formatter(json_format: bool = True) -> logging.Formatter:
    if json_format:
        fields = " ".join(f"%({name})s" for name in CONTEXT_FIELDS)
        return jsonlogger.JsonFormatter(f"%(asctime)s %(name)s %(levelname)s {fields} %(message)s")
    return logging.Formatter(
        "%(asctime)s %(levelname)-7s [%(experiment)s %(variant)s s%(seed)s %(run_id)s] %(name)s: %(message)s"
    )


def setup_logging(level: str = "INFO", json_format: bool = True):
    handler = logging.StreamHandler()
    handler.setFormatter(build_formatter(json_format))
    handler.addFilter(JobContextFilter())

    root = logging.getLogger()
    root.setLevel(getattr(logging, level.upper(), logging.INFO))
    root.handlers = [handler]

    logging.getLogger("sqlalchemy.engine").setLevel(logging.WARNING)
