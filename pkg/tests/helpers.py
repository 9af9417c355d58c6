import random

from snoopsim.core import MemoryRef, Op


def random_refs(rng: random.Random, n: int, cores: int, blocks: int, block_size: int = 64):
    """Uniform references over ``blocks`` blocks with a random in-block offset."""
    out = []
    for _ in range(n):
        op = Op.STORE if rng.random() < 0.5 else Op.LOAD
        out.append(MemoryRef(op, rng.randrange(cores), rng.randrange(blocks) * block_size
                             + rng.randrange(block_size)))
    return out
