"""Seeded random streams.

Every random draw in the package goes through a ``numpy.random.Generator``
backed by PCG64. The PCG64 bit stream is fixed by its algorithm, so a given
seed produces the same sequence on every platform.
"""

import hashlib

import numpy as np

Rng = np.random.Generator


def make_rng(seed: int) -> Rng:
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))


def derive_seed(master_seed: int, index: int, stage: str) -> int:
    """64-bit seed for one (image, stage) pair.

    Stages get independent streams so adding a new stage never perturbs the
    draws of an existing one.
    """
    key = f"{int(master_seed)}:{int(index)}:{stage}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def stage_rng(master_seed: int, index: int, stage: str) -> Rng:
    return make_rng(derive_seed(master_seed, index, stage))
