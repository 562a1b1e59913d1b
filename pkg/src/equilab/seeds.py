"""Deterministic seed derivation.

Every Monte Carlo cell (statistic, function, noise level, replicate) gets its
own 64-bit seed derived from the master seed by hashing the index tuple with a
splitmix64 avalanche mixer.  Adding a statistic or rearranging the execution
order therefore never perturbs the random stream of any other cell, which is
what makes results independent of the worker count.
"""

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One splitmix64 mixing step (Steele, Lea & Flood 2014)."""
    x = (x + _GOLDEN) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return (x ^ (x >> 31)) & _MASK


def derive_seed(master_seed: int, *indices: int) -> int:
    """Mix ``master_seed`` with an index tuple into a fresh 64-bit seed."""
    h = master_seed & _MASK
    for ix in indices:
        h = splitmix64(h ^ ((ix * _GOLDEN) & _MASK))
    return h
