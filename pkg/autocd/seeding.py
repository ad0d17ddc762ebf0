from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(seed: int, *names: object) -> int:
    """Fold a base seed and a path of names into a 32-bit seed.

    Derivation depends only on the arguments, so a sub-stream for node "V3:0"
    in fold 2 is the same whether or not other nodes exist.
    """
    raw = ":".join([str(int(seed)), *(str(n) for n in names)]).encode("utf-8")
    return int.from_bytes(hashlib.sha256(raw).digest()[:4], "big")


def stream(seed: int, *names: object) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *names)))
