"""Counter-based random streams.

Every draw is addressed by ``(seed, block, step, role)``.  Paths are grouped in
fixed logical blocks of ``BLOCK_SIZE`` paths; a block is always generated in
full and then sliced, so the values seen by path ``i`` never depend on how many
paths were requested or how the blocks were distributed over workers.
"""
from enum import IntEnum

import numpy as np

BLOCK_SIZE = 4096


class Role(IntEnum):
    SUBORDINATOR = 0
    GAUSSIAN = 1
    UNIFORM_TIME = 2
    BRIDGE = 3
    AUX = 4


def _key(seed):
    # 128 bit Philox key derived from the experiment seed
    return np.random.SeedSequence(int(seed)).generate_state(2, dtype=np.uint64)


def stream(seed, block=0, step=0, role=Role.AUX):
    """Return a generator for one (block, step, role) cell.

    Parameters
    ----------
    seed : int
        Experiment seed (non negative).
    block : int
        Logical path block index.
    step : int
        Time step index.
    role : Role or int
        What the draws are used for.

    Returns
    -------
    numpy.random.Generator
    """
    if int(seed) < 0:
        raise ValueError("seed must be non-negative")
    counter = np.array([0, int(step), int(role), int(block)], dtype=np.uint64)
    bitgen = np.random.Philox(key=_key(seed), counter=counter)
    return np.random.Generator(bitgen)


def blocks_for(M, block_size=BLOCK_SIZE):
    """Yield ``(block, start, stop)`` covering path indices ``0..M-1``."""
    nb = -(-int(M) // block_size)
    for b in range(nb):
        yield b, b * block_size, min((b + 1) * block_size, int(M))
