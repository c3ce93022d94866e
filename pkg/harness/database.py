import json
from contextlib import contextmanager

from sqlalchemy import Boolean, Column, Float, Integer, String, Text, create_engine
from sqlalchemy.exc import SQLAlchemyError
from sqlalchemy.orm import declarative_base, scoped_session, sessionmaker
from sqlalchemy.pool import StaticPool

from network.errors import LabError

DATABASE_URL = "sqlite://"

Base = declarative_base()


class TrialRecord(Base):
    """
    One random-search trial.
    Attributes:
        id (int): Auto-incremented primary key.
        search_id (str): Name of the search the trial belongs to.
        trial (int): Index of the trial within its search.
        variant (str): Model variant that was trained.
        valid_ce (float): Best validation cross-entropy, null if diverged
            before the first epoch.
        test_ce (float): Clean-weight test cross-entropy of the best epoch.
        diverged (bool): Whether training hit a non-finite value.
        epochs (int): Epochs recorded, the initialization record included.
        config_json (str): The trial's HyperConfig as JSON.
    """
    __tablename__ = "trials"

    id = Column(Integer, primary_key=True, autoincrement=True)
    search_id = Column(String, nullable=False, index=True)
    trial = Column(Integer, nullable=False)
    variant = Column(String, nullable=False)
    valid_ce = Column(Float, nullable=True)
    test_ce = Column(Float, nullable=True)
    diverged = Column(Boolean, nullable=False)
    epochs = Column(Integer, nullable=False)
    config_json = Column(Text, nullable=False)

    @property
    def config(self) -> dict:
        return json.loads(self.config_json)


class ResultStore:
    """
    SQLite store of search trials.
    Args:
        url (str): SQLAlchemy database URL; the default keeps the store in
            memory.
    """

    def __init__(self, url: str = DATABASE_URL):
        in_memory = url in ("sqlite://", "sqlite:///:memory:")
        self.engine = create_engine(
            url,
            connect_args={"check_same_thread": False},
            **({"poolclass": StaticPool} if in_memory else {}),
        )
        self.Session = scoped_session(sessionmaker(
            autocommit=False,
            autoflush=False,
            bind=self.engine,
            expire_on_commit=False,
        ))
        Base.metadata.create_all(self.engine)

    @contextmanager
    def session(self):
        """
        Provide a transactional scope around a series of operations.
        The session is committed if no exception occurs and rolled back if
        an SQLAlchemyError is raised.
        Raises:
            LabError: Wrapping any SQLAlchemyError.
        """
        session = self.Session()
        try:
            yield session
            session.commit()
        except SQLAlchemyError as e:
            session.rollback()
            raise LabError(f"Database error: {e}")
        finally:
            session.expunge_all()
            session.close()

    def add_trial(
        self,
        search_id: str,
        trial: int,
        variant: str,
        valid_ce: float | None,
        test_ce: float | None,
        diverged: bool,
        epochs: int,
        config: dict,
    ) -> TrialRecord:
        """Insert one trial and return it with its assigned id."""
        with self.session() as session:
            record = TrialRecord(
                search_id=search_id,
                trial=trial,
                variant=variant,
                valid_ce=valid_ce,
                test_ce=test_ce,
                diverged=diverged,
                epochs=epochs,
                config_json=json.dumps(config, sort_keys=True),
            )
            session.add(record)
            session.flush()
            session.refresh(record)
            return record

    def trials(self, search_id: str) -> list[TrialRecord]:
        with self.session() as session:
            return (
                session.query(TrialRecord)
                .filter_by(search_id=search_id)
                .order_by(TrialRecord.trial)
                .all()
            )

    def ranked_trials(self, search_id: str) -> list[TrialRecord]:
        """Trials that did not diverge, best validation CE first."""
        with self.session() as session:
            return (
                session.query(TrialRecord)
                .filter_by(search_id=search_id, diverged=False)
                .filter(TrialRecord.valid_ce.isnot(None))
                .order_by(TrialRecord.valid_ce, TrialRecord.trial)
                .all()
            )

    def clear_search(self, search_id: str) -> int:
        """Delete every trial of a search; returns how many were removed."""
        with self.session() as session:
            return (
                session.query(TrialRecord)
                .filter_by(search_id=search_id)
                .delete()
            )

    def close(self):
        self.Session.remove()
        self.engine.dispose()
