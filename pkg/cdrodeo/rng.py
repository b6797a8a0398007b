"""
Counter-based random streams

Draws come from numpy's Philox generator. The 128-bit key combines the user seed and
a stream id; rows are produced in fixed-size chunks and chunk c starts at counter
c·2^192, so a chunk's draws depend only on (seed, stream, c). Chunks can therefore be
generated in any order or in parallel and still assemble into the same sample.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional

import numpy as np

CHUNK_ROWS = 4096
_UINT64 = (1 << 64) - 1

# Stream ids
STREAM_SAMPLE = 0
STREAM_AUX = 1
STREAM_POINTS = 2


def generator(seed: int, stream: int = 0, chunk: int = 0) -> np.random.Generator:
    """Generator for one (seed, stream, chunk) block"""
    key = (int(seed) & _UINT64) | ((int(stream) & _UINT64) << 64)
    return np.random.Generator(np.random.Philox(key=key, counter=int(chunk) << 192))


def derive_seed(seed: int, *keys: int) -> int:
    """Independent 64-bit seed for a replicate, sample or point set"""
    state = np.random.SeedSequence([int(seed) & _UINT64, *[int(k) for k in keys]]).generate_state(1, np.uint64)
    return int(state[0])


def generate_rows(seed: int, stream: int, n: int, draw: Callable[[np.random.Generator, int], np.ndarray],
                  workers: Optional[int] = None) -> np.ndarray:
    """
    Assemble n rows from chunked counter-based draws

    Args:
        seed: User seed
        stream: Stream id (sample, auxiliary sample, evaluation points)
        n: Number of rows
        draw: Callable (generator, rows) -> rows×d array
        workers: Thread count for chunk generation (None or 1 for sequential)

    Returns:
        n×d array, identical for every worker count
    """
    starts = list(range(0, n, CHUNK_ROWS))

    def build(chunk: int) -> np.ndarray:
        rows = min(CHUNK_ROWS, n - starts[chunk])
        return draw(generator(seed, stream, chunk), rows)

    if workers is not None and workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(build, range(len(starts))))
    else:
        blocks = [build(chunk) for chunk in range(len(starts))]
    return np.vstack(blocks)
