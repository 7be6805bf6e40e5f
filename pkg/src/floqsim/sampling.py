"""Monte Carlo sampling of detector error models.

Shots are generated in fixed-size batches.  Batch ``b`` draws from its own
generator spawned from ``SeedSequence(seed)``, so results depend only on
``(model, shots, seed, batch_size)`` and never on how batches are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy.sparse import csr_matrix

from .dem import DetectorErrorModel

DEFAULT_BATCH = 1024


@dataclass(frozen=True)
class ShotBatch:
    syndromes: np.ndarray  # uint8 (shots, detectors)
    observables: np.ndarray  # uint8 (shots, observables)
    first_shot: int


class ShotSampler:
    """Samples (syndrome, actual observable flips) pairs from a model."""

    def __init__(self, model: DetectorErrorModel):
        H, L, priors, _ = model.check_matrices(include_undetectable=True)
        self.model = model
        # mechanisms as rows: fired @ HT gives syndromes
        self.HT = H.T.tocsr().astype(np.int32)
        self.LT = L.T.tocsr().astype(np.int32)
        self.priors = priors
        self.num_mechanisms = priors.shape[0]

    def batch(self, rng: np.random.Generator, shots: int, first_shot: int = 0) -> ShotBatch:
        fired = rng.random((shots, self.num_mechanisms)) < self.priors
        rows, cols = np.nonzero(fired)
        F = csr_matrix((np.ones(rows.size, dtype=np.int32), (rows, cols)), shape=(shots, self.num_mechanisms))
        syn = (F @ self.HT).toarray() & 1
        obs = (F @ self.LT).toarray() & 1
        return ShotBatch(syn.astype(np.uint8), obs.astype(np.uint8), first_shot)

    def batches(self, shots: int, seed: int, batch_size: int = DEFAULT_BATCH) -> Iterator[ShotBatch]:
        if shots < 0:
            raise ValueError("shots must be non-negative")
        nb = (shots + batch_size - 1) // batch_size
        seqs = np.random.SeedSequence(seed).spawn(nb)
        for b, ss in enumerate(seqs):
            n = min(batch_size, shots - b * batch_size)
            yield self.batch(np.random.default_rng(ss), n, b * batch_size)


def sample_shots(model: DetectorErrorModel, shots: int, seed: int,
                 batch_size: int = DEFAULT_BATCH) -> tuple[np.ndarray, np.ndarray]:
    """All shots at once: ``(syndromes, observable flips)`` as uint8 arrays."""
    sampler = ShotSampler(model)
    parts = list(sampler.batches(shots, seed, batch_size))
    if not parts:
        return (np.zeros((0, model.num_detectors), np.uint8), np.zeros((0, model.num_observables), np.uint8))
    return (np.concatenate([p.syndromes for p in parts]), np.concatenate([p.observables for p in parts]))
