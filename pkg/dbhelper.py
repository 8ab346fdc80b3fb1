from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker, scoped_session
from sqlalchemy.ext.declarative import declarative_base
from sqlalchemy.pool import StaticPool
import dotenv

import constants

dotenv.load_dotenv()

db_url = constants.DB_URL
db_mode = constants.DB_MODE

if db_mode == 'memory':
    # one shared connection so every session sees the same in-memory tables
    engine = create_engine('sqlite://', echo=False, connect_args={'check_same_thread': False},
                           poolclass=StaticPool)
elif db_url.startswith('sqlite'):
    engine = create_engine(db_url, echo=False, connect_args={'check_same_thread': False})
else:
    engine = create_engine(db_url, pool_recycle=60)

session_factory = sessionmaker(bind=engine)
Session = scoped_session(session_factory=session_factory)
Base = declarative_base()
