import os
from dotenv import load_dotenv

load_dotenv()

TOOL_VERSION = '0.3.0'

# exhaustive-search caps, overridable per run from the command line
CAP_EXACT_DISC2 = int(os.environ.get('HG_CAP_EXACT_DISC2', 22))
CAP_EXACT_VDISC3 = int(os.environ.get('HG_CAP_EXACT_VDISC3', 26))
CAP_EXACT_DISC23 = int(os.environ.get('HG_CAP_EXACT_DISC23', 24))
VERTEX_CAP = int(os.environ.get('HG_VERTEX_CAP', 5000))
SEARCH_BUDGET = int(os.environ.get('HG_SEARCH_BUDGET', 200000))
THREADS = int(os.environ.get('HG_THREADS', os.cpu_count() or 1))
LOG_LEVEL = os.environ.get('HG_LOG_LEVEL', 'INFO')
LOG_FILE = os.environ.get('HG_LOG_FILE', 'logs/app.log')
DB_URL = os.environ.get('HG_DB_URL', 'sqlite:///runs.db')
DB_MODE = os.environ.get('HG_DB_MODE', 'file')

TREE_RANK_MEMO_SIZE = int(os.environ.get('HG_TREE_RANK_MEMO', 1 << 16))
EXACT_COVER_MAX_T = 8
EXACT_DTREE_MAX_LEAVES = 12
AXIOM_BUDGET = int(os.environ.get('HG_AXIOM_BUDGET', 5000))
SPECIAL_TENSOR_CAP = int(os.environ.get('HG_SPECIAL_TENSOR_CAP', 64_000_000))

# families accepted by construct.build_canonical
HALF_GRAPH = 'HALF_GRAPH'
POWERSET_GRAPH = 'POWERSET_GRAPH'
V = 'V'
HBAR = 'HBAR'
UBAR = 'UBAR'
USTAR = 'USTAR'
HSTAR = 'HSTAR'
F = 'F'
HP = 'HP'
GS = 'GS'
W = 'W'
W1 = 'W1'
W2 = 'W2'
TENSOR = 'TENSOR'
VCFOP_EXAMPLE = 'VCFOP_EXAMPLE'

FAMILIES = (HALF_GRAPH, POWERSET_GRAPH, V, HBAR, UBAR, USTAR, HSTAR, F, HP, GS, W, W1, W2, TENSOR, VCFOP_EXAMPLE)
BIPARTITE_FAMILIES = (HALF_GRAPH, POWERSET_GRAPH)

# search status
FOUND = 'FOUND'
ABSENT_CERTIFIED = 'ABSENT_CERTIFIED'
INCONCLUSIVE = 'INCONCLUSIVE'

# triad classification
DISC2_IRREGULAR = 'DISC2_IRREGULAR'
DISC3_IRREGULAR = 'DISC3_IRREGULAR'
REGULAR = 'REGULAR'

# error shapes
ZERO = 'ZERO'
BINARY = 'BINARY'
LINEAR = 'LINEAR'
NONE_OF_THESE = 'NONE_OF_THESE'

# symmetry lemma outcomes
DENSITY_LOW = 'DENSITY_LOW'
DENSITY_HIGH = 'DENSITY_HIGH'
HYPOTHESES_FAIL = 'HYPOTHESES_FAIL'

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_USAGE = 2
EXIT_CAP = 3

# how an axiom check covered its quantifier domain
EXHAUSTIVE = 'exhaustive'
SAMPLED = 'sampled'
VACUOUS = 'vacuous'

# where a splitting witness came from
FROM_FORMULA = 'formula'
FROM_SEARCH = 'search'
