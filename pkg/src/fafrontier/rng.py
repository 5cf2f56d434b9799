"""Deterministic random streams for reproducible Monte Carlo.

The generator contract is frozen (see docs/FORMATS.md): every stream is a
Philox-4x64 counter-based generator keyed by a ``SeedSequence`` built from
``(master_seed, stream_id, *subkeys)``, and standard normals are produced by
inverse-CDF transformation of 53-bit uniforms.  Nothing here depends on
platform threading or on numpy's ziggurat sampler, so identical specs yield
bit-identical draws everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Philox, SeedSequence
from scipy.special import ndtri

_U64_SHIFT = np.uint64(11)
_U53_SCALE = 2.0**-53


@dataclass(frozen=True)
class RngSpec:
    """Addressable random stream: (master_seed, stream_id) -> byte stream.

    Distinct ``stream_id`` values give statistically independent streams of
    the same master seed, which is how parallel replicates stay decoupled.
    """

    master_seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        for name in ("master_seed", "stream_id"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)):
                raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
            if not 0 <= int(value) < 2**64:
                raise ValueError(f"{name} must fit in an unsigned 64-bit integer")

    def seed_sequence(self, *subkeys: int) -> SeedSequence:
        return SeedSequence(
            entropy=int(self.master_seed),
            spawn_key=(int(self.stream_id), *[int(k) for k in subkeys]),
        )

    def stream(self, *subkeys: int) -> Philox:
        return Philox(self.seed_sequence(*subkeys))


def uniform_from_raw(raw: np.ndarray) -> np.ndarray:
    """Map 64-bit words to uniforms on the open interval (0, 1).

    The top 53 bits are kept and offset by half an ulp so 0.0 and 1.0 are
    unreachable; this keeps the inverse normal CDF finite.
    """
    return ((raw >> _U64_SHIFT) + 0.5) * _U53_SCALE


def standard_normals_from_raw(raw: np.ndarray) -> np.ndarray:
    """Standard normal variates via the inverse CDF (no ziggurat, no rejection)."""
    return ndtri(uniform_from_raw(raw))


def uniform_open(bitgen: Philox, count: int) -> np.ndarray:
    """Draw ``count`` open-interval uniforms from ``bitgen``."""
    return uniform_from_raw(bitgen.random_raw(count))


def standard_normals(bitgen: Philox, count: int) -> np.ndarray:
    """Draw ``count`` standard normals from ``bitgen`` by inverse CDF."""
    return ndtri(uniform_open(bitgen, count))


def normals(spec: RngSpec, count: int, *subkeys: int) -> np.ndarray:
    """Draw ``count`` standard normals from the stream addressed by ``spec``/``subkeys``."""
    return standard_normals(spec.stream(*subkeys), count)
