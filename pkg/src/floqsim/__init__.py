"""floqsim: Floquet color codes on (semi-)hyperbolic tilings.

Modules, bottom-up: ``lattice`` (tilings, refinement, homology), ``anyon``
(boson table and schedule checks), ``stabsim`` (tableau + Pauli frames),
``circuit`` (memory circuits with detectors, observables and noise), ``dem``
(detector error models), ``decoders`` (MWPM and BP+OSD) and ``experiments``
(sampling, sweeps, thresholds, timing).
"""

__version__ = "0.1.0"
