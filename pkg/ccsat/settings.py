from __future__ import annotations

import logging
from typing import Final

# Search (Max-Tries / Max-Flips regime of the reference experiments)
MAX_TRIES: Final[int] = 100
MAX_FLIPS: Final[int] = 100_000
NOISE: Final[float] = 0.4  # probability of the greedy move
SEED: Final[int] = 0
FLIP_BATCH: Final[int] = 1024  # flips between deadline checks

# Compilation
CLAUSE_BUDGET: Final[int] = 10**7

# Exit codes
EXIT_OK: Final[int] = 0
EXIT_CHECK_FAILED: Final[int] = 1  # verify/lint found a problem
EXIT_MODEL_FOUND: Final[int] = 10
EXIT_UNKNOWN: Final[int] = 20
EXIT_ERROR: Final[int] = 2

# Bench
BENCH_NOISES: Final[tuple[float, ...]] = (0.1, 0.2, 0.3, 0.4)
BENCH_TIMEOUT_S: Final[float] = 120.0
BENCH_REPS: Final[int] = 1
BENCH_WORKERS: Final[int] = 1
CSV_FIELDS: Final[tuple[str, ...]] = (
    "instance",
    "solver",
    "seed",
    "noise",
    "solved",
    "tries_used",
    "flips_used",
    "time_ms",
)

# Logging
LOG_FORMAT: Final[str] = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"
LOG_LEVEL: Final[int] = logging.INFO

# Instance files recognised by the bench runner
INSTANCE_SUFFIXES: Final[tuple[str, ...]] = (".ccnf", ".cnf")
