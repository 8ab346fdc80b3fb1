from dbhelper import Base
from sqlalchemy import Column, Integer, DateTime, ForeignKey, String, Text, Float
from sqlalchemy.orm import relationship
import datetime
import json

from modules.helpers import get_logger

logger = get_logger(__name__)


class RunManifest(Base):
    __tablename__ = 'run_manifests'
    id = Column(Integer, primary_key=True, autoincrement=True)
    command_line = Column(Text, nullable=False)
    subcommand = Column(String(64), nullable=False)
    seed = Column(Integer, nullable=False)
    caps = Column(Text, nullable=False)
    input_hashes = Column(Text, nullable=False, default='{}')
    tool_version = Column(String(32), nullable=False)
    wall_time = Column(Float, nullable=True)
    exit_code = Column(Integer, nullable=True)
    created_at = Column(DateTime, nullable=False, default=datetime.datetime.now)
    reports = relationship("Report", back_populates='manifest', lazy='dynamic')

    @classmethod
    def get_manifest(cls, session, id):
        return session.query(cls).filter(cls.id == id).first()

    @classmethod
    def get_all(cls, session):
        return session.query(cls).order_by(cls.id).all()

    @classmethod
    def get_by_subcommand(cls, session, subcommand):
        return session.query(cls).filter(cls.subcommand == subcommand).order_by(cls.id).all()

    def argv(self):
        return json.loads(self.command_line)

    def save(self, session):
        session.add(self)
        try:
            session.commit()
            return self
        except Exception:
            logger.error(f"could not persist manifest for {self.subcommand}", exc_info=True)
            session.rollback()
            return None

    def __repr__(self):
        return f"<RunManifest: id {self.id}, subcommand {self.subcommand}, seed {self.seed}, exit_code {self.exit_code}, tool_version {self.tool_version}, created_at {self.created_at}>"


class Report(Base):
    __tablename__ = 'reports'
    id = Column(Integer, primary_key=True, autoincrement=True)
    manifest_id = Column(Integer, ForeignKey('run_manifests.id'), nullable=False)
    kind = Column(String(64), nullable=False)
    payload = Column(Text, nullable=False)
    created_at = Column(DateTime, nullable=False, default=datetime.datetime.now)
    manifest = relationship('RunManifest', back_populates='reports')

    @classmethod
    def get_reports_by_manifest(cls, session, manifest_id):
        return session.query(cls).filter(cls.manifest_id == manifest_id).order_by(cls.id).all()

    def data(self):
        return json.loads(self.payload)

    def __repr__(self):
        return f"Report :- id - {self.id}, manifest_id - {self.manifest_id}, kind - {self.kind}, created_at - {self.created_at} "
