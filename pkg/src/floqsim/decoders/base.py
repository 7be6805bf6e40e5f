"""Shared decoder types."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class UnmatchableSyndromeError(ValueError):
    """Raised when some defects cannot be paired with each other or the boundary."""


class UndecodableSyndromeError(ValueError):
    """Raised when a syndrome lies outside the column space of the check matrix."""


@dataclass(frozen=True)
class Correction:
    """Predicted observable flips plus decoder diagnostics and wall time (s)."""

    observables: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    elapsed: float = 0.0


def as_syndrome(syndrome, num_detectors: int) -> np.ndarray:
    """Validate a detector bit vector and return it as ``uint8``."""
    s = np.asarray(syndrome, dtype=np.uint8).reshape(-1)
    if s.shape[0] != num_detectors:
        raise ValueError(f"syndrome has length {s.shape[0]}, model has {num_detectors} detectors")
    return s
