"""All constants for the bench module.

Constants:
    TREE_KINDS: tuple[str, ...]
    VOLATILE_KINDS: dict[str, str]
    LATENCY_SWEEP: tuple[int, ...]
    NODE_SIZES: tuple[int, ...]
    DISTRIBUTIONS: tuple[str, ...]
    PHASES: tuple[str, ...]
    DEFAULT_THETA: float
    LATENCY_FLOOR_NS: int
    KEY_SPACE: int
    SESSION_FIELD: int
    CRASH_NODE_SLOTS: int
    CRASH_SAMPLES: int
    FIGURE1_NODE_SLOTS: int
    FIGURE1_LINE_SIZE: int
    FIGURE1_KEYS: tuple[int, ...]
    FIGURE1_NEW_KEY: int
    FIGURE1_EXPECTED: dict[str, int]
"""

TREE_KINDS = "circ", "circ_ls", "linear", "append", "volatile_circ", "volatile_linear"

# Same nodes on memory whose flushes cost nothing
VOLATILE_KINDS = {"volatile_circ": "circ", "volatile_linear": "linear"}

# Flush latencies, in ns, of the write latency sweep
LATENCY_SWEEP = 200, 300, 600
NODE_SIZES = 512, 1024, 2048, 4096
DISTRIBUTIONS = "uniform", "zipfian"
PHASES = "load", "session_store"

DEFAULT_THETA = 0.99

# Geometric mean of zero latencies
LATENCY_FLOOR_NS = 1

# Uniform keys are drawn from [1, KEY_SPACE)
KEY_SPACE = 1 << 62

SESSION_FIELD = 0

CRASH_NODE_SLOTS = 8
CRASH_SAMPLES = 64

FIGURE1_NODE_SLOTS = 8
FIGURE1_LINE_SIZE = 32
FIGURE1_KEYS = 8, 22, 31, 45, 57
FIGURE1_NEW_KEY = 15
FIGURE1_EXPECTED = {
    "linear_insert": 3,
    "circ_insert": 2,
    "linear_delete": 3,
    "circ_delete": 1,
}
