import os

# keep test runs out of runs.db and the shared app log
os.environ.setdefault('HG_DB_MODE', 'memory')
os.environ.setdefault('HG_LOG_FILE', 'logs/test.log')
os.environ.setdefault('HG_THREADS', '1')
