"""Decoders: MWPM on a matching graph and BP+OSD on the full model."""

from .base import Correction, UndecodableSyndromeError, UnmatchableSyndromeError
from .bposd import BpOsdDecoder, bposd_decode
from .graph import WEIGHTINGS, MatchingGraph, edge_weight, shortest_paths, to_matching_graph
from .mwpm import MwpmDecoder, mwpm_decode

DECODERS = ("mwpm", "bposd")

__all__ = [
    "BpOsdDecoder",
    "Correction",
    "DECODERS",
    "MatchingGraph",
    "MwpmDecoder",
    "UndecodableSyndromeError",
    "UnmatchableSyndromeError",
    "WEIGHTINGS",
    "bposd_decode",
    "edge_weight",
    "mwpm_decode",
    "shortest_paths",
    "to_matching_graph",
]
