# src/database.py
# Журнал запусків (SQLite або PostgreSQL): таблиці lab_runs та lab_rows

import datetime
import logging
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from sqlalchemy import (Column, Integer, String, Text, DateTime, Boolean, Float, JSON,
                        create_engine, select, ForeignKey, Index, text)
from sqlalchemy.engine import Engine
from sqlalchemy.orm import sessionmaker, declarative_base, relationship

from config import settings

logger = logging.getLogger(__name__)

DEFAULT_DB_URL = "sqlite:///./data/lab.sqlite3"

Base = declarative_base()


def _utcnow() -> datetime.datetime:
    return datetime.datetime.now(datetime.timezone.utc)


class LabRun(Base):
    __tablename__ = "lab_runs"
    id = Column(Integer, primary_key=True, index=True)
    started_at = Column(DateTime(timezone=True), nullable=False, default=_utcnow)
    finished_at = Column(DateTime(timezone=True), nullable=True)
    scenario_file = Column(String, nullable=False)
    pipeline = Column(String, nullable=False)
    rows = Column(Integer, default=0)
    failures = Column(Integer, default=0)
    exit_code = Column(Integer, nullable=False)
    version = Column(String, nullable=False)
    release_notes = Column(Text, nullable=True)
    clamp_radius = Column(Float, nullable=True)
    k_max_exp = Column(Integer, nullable=True)
    seed = Column(Integer, nullable=True)
    row_records = relationship("LabRow", back_populates="run", cascade="all, delete-orphan")


class LabRow(Base):
    __tablename__ = "lab_rows"
    id = Column(Integer, primary_key=True)
    run_id = Column(Integer, ForeignKey("lab_runs.id", ondelete="CASCADE"), nullable=False)
    scenario = Column(String, nullable=False)
    payload = Column(JSON, nullable=False)
    passed = Column(Boolean, nullable=False)
    run = relationship("LabRun", back_populates="row_records")
    __table_args__ = (
        Index('ix_lab_rows_run_id_scenario', 'run_id', 'scenario'),
    )


_engine: Optional[Engine] = None
_SessionFactory: Optional[sessionmaker] = None


def init_db(url: Optional[str] = None) -> Engine:
    """Create (or reuse) the engine for url and make sure the tables exist."""
    global _engine, _SessionFactory
    db_url = url or settings.DATABASE_URL or DEFAULT_DB_URL
    is_sqlite = db_url.startswith("sqlite")
    if _engine is not None and str(_engine.url) == db_url:
        return _engine
    engine_args = {"connect_args": {"check_same_thread": False}} if is_sqlite else {}
    _engine = create_engine(db_url, echo=False, **engine_args)
    _SessionFactory = sessionmaker(bind=_engine, expire_on_commit=False)
    Base.metadata.create_all(_engine)
    if is_sqlite and ":memory:" not in db_url:
        try:
            with _engine.begin() as conn:
                conn.execute(text("PRAGMA journal_mode=WAL"))
        except Exception as e:
            logger.warning(f"SQLite PRAGMA setup failed: {e}")
    return _engine


def _session():
    if _SessionFactory is None:
        init_db()
    return _SessionFactory()


def record_run(scenario_file: str, pipeline: str, columns: Sequence[str], rows: Sequence[Sequence[Any]],
               exit_code: int, version: str, started_at: datetime.datetime,
               clamp_radius: Optional[float] = None, k_max_exp: Optional[int] = None,
               seed: Optional[int] = None, release_notes: Optional[str] = None) -> Optional[int]:
    """Stores one run with its rows; returns the run id, or None when the ledger is unavailable."""
    try:
        with _session() as session:
            run = LabRun(
                started_at=started_at,
                finished_at=_utcnow(),
                scenario_file=scenario_file,
                pipeline=pipeline,
                rows=len(rows),
                failures=sum(1 for r in rows if not r[-1]),
                exit_code=int(exit_code),
                version=version,
                release_notes=release_notes,
                clamp_radius=clamp_radius,
                k_max_exp=k_max_exp,
                seed=seed,
            )
            for r in rows:
                payload = {c: _plain(v) for c, v in zip(columns, r)}
                run.row_records.append(LabRow(scenario=str(r[0]), payload=payload, passed=bool(r[-1])))
            session.add(run)
            session.commit()
            return run.id
    except Exception as e:
        logger.error(f"Не вдалося записати запуск у журнал: {e}")
        return None


def _plain(value: Any) -> Any:
    # numpy scalars and bools to JSON-friendly values
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, (bool, int, str)) or value is None:
        return value
    try:
        return float(value)
    except (TypeError, ValueError):
        return str(value)


def get_recent_runs(limit: int = 10) -> List[LabRun]:
    with _session() as session:
        stmt = select(LabRun).order_by(LabRun.id.desc()).limit(limit)
        return list(session.execute(stmt).scalars().all())


def get_run_rows(run_id: int) -> List[Dict[str, Any]]:
    with _session() as session:
        stmt = select(LabRow).where(LabRow.run_id == run_id).order_by(LabRow.id.asc())
        return [dict(r.payload, passed=r.passed) for r in session.execute(stmt).scalars().all()]
