"""Reproducible randomness: counter-based substreams and Haar-random states.

Streams come from the Philox (4x64, 10 rounds) counter-based generator keyed
by the user seed.  Substream ``index`` starts the 256-bit counter at
``index * 2**192``, which gives every (seed, index) pair its own block of
2**192 draws.  Results therefore depend only on the pair, never on
scheduling, chunking, or worker count.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .linalg import Ket


def substream(seed: int, index: int) -> np.random.Generator:
    """An independent generator for draw ``index`` of stream ``seed``."""
    if not 0 <= seed < 2 ** 128:
        raise ValidationError(f"seed must be in [0, 2**128), got {seed}")
    if not 0 <= index < 2 ** 64:
        raise ValidationError(f"substream index must be in [0, 2**64), got {index}")
    return np.random.Generator(np.random.Philox(key=seed, counter=index << 192))


def random_ket(rng: np.random.Generator, dim: int) -> Ket:
    """A Haar-random pure state: normalized standard complex Gaussian."""
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return Ket.normalized(v)


def random_basis(rng: np.random.Generator, dim: int) -> list[Ket]:
    """Columns of a Haar-random unitary, as kets.

    QR of a complex Ginibre matrix with the R diagonal's phases divided out,
    which makes the distribution exactly Haar rather than merely orthonormal.
    """
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return [Ket(q[:, j]) for j in range(dim)]
