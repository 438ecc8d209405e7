"""
SQLAlchemy engine, session factory, and base model for the run ledger.
"""

from functools import lru_cache
from pathlib import Path

from sqlalchemy import create_engine
from sqlalchemy.engine import Engine, make_url
from sqlalchemy.orm import DeclarativeBase, Session, sessionmaker

from ccnp_lab.config import get_settings


class Base(DeclarativeBase):
    """Declarative base for all ORM models."""
    pass


@lru_cache()
def get_engine(url: str = "") -> Engine:
    """Engine for `url` (DATABASE_URL when empty); sqlite parent dirs are created on demand."""
    url = url or get_settings().DATABASE_URL
    parsed = make_url(url)
    if parsed.get_backend_name() == "sqlite" and parsed.database not in (None, "", ":memory:"):
        Path(parsed.database).parent.mkdir(parents=True, exist_ok=True)
    return create_engine(
        url,
        pool_pre_ping=True,  # Verify connections before use
        echo=False,
    )


def SessionLocal(url: str = "") -> Session:
    return sessionmaker(autocommit=False, autoflush=False, bind=get_engine(url))()


def create_tables(url: str = "") -> None:
    """Create all tables (idempotent)."""
    from ccnp_lab.db import models  # noqa: F401  (registers the tables)

    Base.metadata.create_all(bind=get_engine(url))
