"""Seeded random-matrix generation: the Gaussian test matrices used by the
randomized-basis detector and the four switched ensembles.

Streams are counter-based and splittable: a (master_seed, stream_index)
pair keys a Philox generator through numpy's SeedSequence spawn tree, so
parallel trials and the independent components inside one trial never
share a stream.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EnsembleKind",
    "SeedSpec",
    "gen_gaussian",
    "gen_bernoulli",
    "gen_markov",
    "gen_rademacher",
    "ensemble_matrix",
]


class EnsembleKind(enum.Enum):
    """The four random-matrix families the switched detector cycles through.

    Declaration order is the fixed tie-break order used when two candidate
    bases flag the same number of snapshots.
    """

    GAUSSIAN = "gaussian"
    BERNOULLI_HALF = "bernoulli-half"
    MARKOV = "markov-column-stochastic"
    RADEMACHER = "rademacher"

    @classmethod
    def from_tag(cls, tag: str) -> "EnsembleKind":
        tag = tag.strip().lower()
        if tag == "markov":  # accepted shorthand
            return cls.MARKOV
        for kind in cls:
            if kind.value == tag:
                return kind
        known = ", ".join(k.value for k in cls)
        raise ValueError(f"unknown ensemble kind {tag!r}; expected one of: {known}")


@dataclass(frozen=True)
class SeedSpec:
    """Reproducible stream address: (master_seed, stream_index) fully
    determines every value drawn from it.

    `branch` is an internal derivation path (see split) letting one stream
    hand disjoint substreams to the independent components it generates;
    user code normally leaves it empty.
    """

    master_seed: int
    stream_index: int = 0
    branch: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not 0 <= self.master_seed < 2**64:
            raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if self.stream_index < 0:
            raise ValueError(f"stream_index must be nonnegative, got {self.stream_index}")
        if any(label < 0 for label in self.branch):
            raise ValueError(f"branch labels must be nonnegative, got {self.branch}")

    def split(self, *labels: int) -> "SeedSpec":
        """Derive a child stream guaranteed disjoint from every other
        (stream_index, branch) path under the same master seed."""
        return SeedSpec(self.master_seed, self.stream_index, self.branch + labels)

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index, *self.branch))
        return np.random.Generator(np.random.Philox(seq))


def _check_shape(rows: int, cols: int) -> None:
    if rows < 1 or cols < 1:
        raise ValueError(f"matrix shape must be positive, got {rows}x{cols}")


def gen_gaussian(rows: int, cols: int, seed: SeedSpec, stddev: float = 1.0) -> np.ndarray:
    """i.i.d. N(0, stddev^2) entries."""
    _check_shape(rows, cols)
    if stddev <= 0.0:
        raise ValueError(f"stddev must be positive, got {stddev}")
    return seed.generator().normal(0.0, stddev, size=(rows, cols))


def gen_bernoulli(rows: int, cols: int, p: float, seed: SeedSpec) -> np.ndarray:
    """i.i.d. {0, 1} entries, each 1 with probability p."""
    _check_shape(rows, cols)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    return (seed.generator().random(size=(rows, cols)) < p).astype(float)


def gen_markov(rows: int, cols: int, seed: SeedSpec) -> np.ndarray:
    """Column-stochastic matrix: nonnegative entries, every column sums to 1.

    Built by normalizing i.i.d. uniforms drawn from (0, 1], so no column
    can be all-zero.
    """
    _check_shape(rows, cols)
    u = 1.0 - seed.generator().random(size=(rows, cols))
    return u / u.sum(axis=0)


def gen_rademacher(rows: int, cols: int, seed: SeedSpec) -> np.ndarray:
    """i.i.d. entries drawn equiprobably from {-1, +1}."""
    _check_shape(rows, cols)
    return seed.generator().integers(0, 2, size=(rows, cols)) * 2.0 - 1.0


def ensemble_matrix(kind: EnsembleKind, rows: int, cols: int, seed: SeedSpec) -> np.ndarray:
    """Draw one matrix from the given ensemble family."""
    if kind is EnsembleKind.GAUSSIAN:
        return gen_gaussian(rows, cols, seed, 1.0)
    if kind is EnsembleKind.BERNOULLI_HALF:
        return gen_bernoulli(rows, cols, 0.5, seed)
    if kind is EnsembleKind.MARKOV:
        return gen_markov(rows, cols, seed)
    if kind is EnsembleKind.RADEMACHER:
        return gen_rademacher(rows, cols, seed)
    raise ValueError(f"unknown ensemble kind: {kind!r}")
