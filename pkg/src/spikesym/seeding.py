"""Named random sub-streams derived from one master seed.

``child_seed(master, "mutate", gen, i)`` is a stable 64-bit hash, so serial
and parallel runs draw identical numbers for the same named stream.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np


def child_seed(master: int, name: str, *index: int) -> int:
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack("<Q", master & 0xFFFFFFFFFFFFFFFF))
    h.update(name.encode())
    for i in index:
        h.update(struct.pack("<q", i))
    return int.from_bytes(h.digest(), "little")


def substream(master: int, name: str, *index: int) -> np.random.Generator:
    return np.random.default_rng(child_seed(master, name, *index))
