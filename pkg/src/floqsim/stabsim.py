"""Stabilizer tableau and Pauli-frame propagation for Pauli-measurement circuits.

The tableau follows Aaronson & Gottesman: rows ``0..n-1`` are
destabilizers, rows ``n..2n-1`` stabilizers, each a symplectic vector
``(x, z)`` with a sign bit.  A qubit with both bits set carries ``Y``.  Only
Pauli-product measurements and Pauli errors are supported, which is all the
Floquet memory circuits need.

Frame propagation exploits that Pauli measurements leave a Pauli error in
place: a fault injected before step ``t`` flips exactly the later
measurements whose operator anticommutes with it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .circuit import MeasurementCircuit

_PAULI_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}


def pauli_vectors(n: int, paulis: Mapping[int, str]) -> tuple[np.ndarray, np.ndarray]:
    """Symplectic (x, z) bool vectors for a sparse Pauli ``{qubit: 'X'|'Y'|'Z'}``."""
    x = np.zeros(n, dtype=bool)
    z = np.zeros(n, dtype=bool)
    for q, p in paulis.items():
        bx, bz = _PAULI_BITS[p.upper()]
        x[q] ^= bool(bx)
        z[q] ^= bool(bz)
    return x, z


def pauli_from_string(s: str) -> tuple[np.ndarray, np.ndarray]:
    """Dense label such as ``"XIZY"`` -> (x, z)."""
    return pauli_vectors(len(s), {i: c for i, c in enumerate(s) if c.upper() != "I"})


def _g_sum(x1, z1, x2, z2) -> np.ndarray:
    """Sum over qubits of the exponent of i picked up by P1 * P2 (per row)."""
    # Aaronson-Gottesman g(x1, z1, x2, z2), vectorised along the last axis.
    x1 = x1.astype(np.int8)
    z1 = z1.astype(np.int8)
    x2 = x2.astype(np.int8)
    z2 = z2.astype(np.int8)
    g = np.where(
        (x1 == 1) & (z1 == 1),
        z2 - x2,
        np.where(x1 == 1, z2 * (2 * x2 - 1), np.where(z1 == 1, x2 * (1 - 2 * z2), 0)),
    )
    return g.sum(axis=-1, dtype=np.int64)


class Tableau:
    """Stabilizer state on ``n`` qubits with destabilizers and signs."""

    def __init__(self, n: int, rng: np.random.Generator | int | None = None):
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=bool)
        self.z = np.zeros((2 * n, n), dtype=bool)
        self.r = np.zeros(2 * n, dtype=bool)
        idx = np.arange(n)
        self.x[idx, idx] = True  # destabilizers X_i
        self.z[n + idx, idx] = True  # stabilizers Z_i
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)

    @classmethod
    def product_state(cls, n: int, basis: str, rng=None) -> "Tableau":
        """All qubits in the +1 eigenstate of ``basis`` (``'Z'`` or ``'X'``)."""
        tab = cls(n, rng)
        if basis.upper() == "X":
            tab.x, tab.z = tab.z.copy(), tab.x.copy()
        elif basis.upper() != "Z":
            raise ValueError("product_state supports basis 'X' or 'Z'")
        return tab

    def copy(self) -> "Tableau":
        other = Tableau.__new__(Tableau)
        other.n = self.n
        other.x, other.z, other.r = self.x.copy(), self.z.copy(), self.r.copy()
        other.rng = self.rng
        return other

    # -- queries -----------------------------------------------------------

    def _anticommuting(self, px: np.ndarray, pz: np.ndarray) -> np.ndarray:
        return ((self.x & pz) ^ (self.z & px)).sum(axis=1) & 1 == 1

    def stabilizers(self) -> list[tuple[np.ndarray, np.ndarray, bool]]:
        n = self.n
        return [(self.x[i].copy(), self.z[i].copy(), bool(self.r[i])) for i in range(n, 2 * n)]

    def peek(self, px: np.ndarray, pz: np.ndarray) -> int | None:
        """Outcome bit of measuring P if determined, else ``None``. No state change."""
        n = self.n
        anti = self._anticommuting(px, pz)
        if anti[n:].any():
            return None
        return self._deterministic_outcome(anti[:n], px, pz)

    def is_stabilized(self, px: np.ndarray, pz: np.ndarray) -> bool:
        """True iff +P or -P is in the stabilizer group."""
        return self.peek(px, pz) is not None

    def _deterministic_outcome(self, anti_destab: np.ndarray, px, pz) -> int:
        n = self.n
        sx = np.zeros(n, dtype=bool)
        sz = np.zeros(n, dtype=bool)
        phase = 0
        for i in np.nonzero(anti_destab)[0]:
            row = n + i
            phase += 2 * int(self.r[row]) + int(_g_sum(self.x[row], self.z[row], sx, sz))
            sx ^= self.x[row]
            sz ^= self.z[row]
        if not (np.array_equal(sx, px) and np.array_equal(sz, pz)):
            raise AssertionError("deterministic measurement did not reconstruct the operator")
        phase %= 4
        if phase not in (0, 2):
            raise AssertionError("non-Hermitian product in stabilizer reconstruction")
        return phase // 2

    # -- updates -----------------------------------------------------------

    def measure(self, px: np.ndarray, pz: np.ndarray, forced: int | None = None) -> tuple[int, bool]:
        """Measure Pauli ``(px, pz)``; return ``(outcome bit, was_random)``.

        ``forced`` fixes the result of a random measurement (ignored if the
        outcome is determined).
        """
        if not (px.any() or pz.any()):
            raise ValueError("cannot measure the identity")
        n = self.n
        anti = self._anticommuting(px, pz)
        stab_anti = np.nonzero(anti[n:])[0]
        if stab_anti.size == 0:
            return self._deterministic_outcome(anti[:n], px, pz), False
        p = n + stab_anti[0]
        others = np.nonzero(anti)[0]
        others = others[(others != p) & (others != p - n)]
        if others.size:
            # row_i <- row_i * row_p for every other anticommuting row
            gx, gz = self.x[p], self.z[p]
            ph = 2 * self.r[others].astype(np.int64) + 2 * int(self.r[p])
            ph += _g_sum(np.broadcast_to(gx, (others.size, n)), np.broadcast_to(gz, (others.size, n)),
                         self.x[others], self.z[others])
            self.r[others] = (ph % 4) == 2
            self.x[others] ^= gx
            self.z[others] ^= gz
        self.x[p - n] = self.x[p]
        self.z[p - n] = self.z[p]
        self.r[p - n] = self.r[p]
        outcome = int(self.rng.integers(2)) if forced is None else int(forced) & 1
        self.x[p] = px
        self.z[p] = pz
        self.r[p] = bool(outcome)
        return outcome, True

    def apply_pauli(self, px: np.ndarray, pz: np.ndarray) -> None:
        """Apply a Pauli error: flips the sign of every anticommuting row."""
        self.r ^= self._anticommuting(px, pz)


def measure_pauli_product(tab: Tableau, paulis: Mapping[int, str] | str) -> tuple[int, Tableau]:
    """Measure a Pauli product on ``tab`` in place; returns ``(outcome, tab)``."""
    if isinstance(paulis, str):
        px, pz = pauli_from_string(paulis)
    else:
        px, pz = pauli_vectors(tab.n, paulis)
    out, _ = tab.measure(px, pz)
    return out, tab


# ---------------------------------------------------------------------------
# Pauli frames


@dataclass
class PauliFrame:
    """Accumulated Pauli error as bitsets (bit q <-> qubit q)."""

    n: int
    x: int = 0
    z: int = 0

    @classmethod
    def from_paulis(cls, n: int, paulis: Mapping[int, str]) -> "PauliFrame":
        f = cls(n)
        for q, p in paulis.items():
            bx, bz = _PAULI_BITS[p.upper()]
            f.x ^= bx << q
            f.z ^= bz << q
        return f

    def anticommutes(self, mx: int, mz: int) -> bool:
        return bin((self.x & mz) ^ (self.z & mx)).count("1") & 1 == 1

    def compose(self, other: "PauliFrame") -> "PauliFrame":
        return PauliFrame(self.n, self.x ^ other.x, self.z ^ other.z)


def frame_propagate(circuit: "MeasurementCircuit", fault: tuple[int, Mapping[int, str]]) -> np.ndarray:
    """Outcome flips caused by a Pauli fault injected before step ``time``.

    ``fault`` is ``(time, {qubit: pauli})``; ``time == len(steps)`` means just
    before the final readout.  Returns a bool vector over all measurements.
    """
    time, paulis = fault
    if not 0 <= time <= circuit.num_steps:
        raise ValueError(f"fault time {time} outside 0..{circuit.num_steps}")
    frame = PauliFrame.from_paulis(circuit.num_qubits, paulis)
    flips = np.zeros(circuit.num_measurements, dtype=bool)
    for m, (t, mx, mz) in enumerate(circuit.measurement_masks()):
        if t >= time and frame.anticommutes(mx, mz):
            flips[m] = True
    return flips


def run_tableau(
    circuit: "MeasurementCircuit",
    seed: int | None = None,
    faults: Mapping[int, Mapping[int, str]] | None = None,
    forced: Mapping[int, int] | None = None,
    on_step=None,
) -> tuple[np.ndarray, np.ndarray]:
    """Execute the noiseless circuit (plus optional injected Pauli faults).

    Returns ``(outcomes, random_mask)`` over all measurements.  ``faults``
    maps a time to a Pauli applied just before that step; ``forced`` pins
    the results of random measurements by index.  ``on_step(t, tab)`` is
    called after each step (and with ``t == num_steps`` after readout).
    """
    n = circuit.num_qubits
    tab = Tableau.product_state(n, circuit.prologue_basis, seed)
    outcomes = np.zeros(circuit.num_measurements, dtype=np.uint8)
    random_mask = np.zeros(circuit.num_measurements, dtype=bool)
    faults = faults or {}
    forced = forced or {}
    masks = circuit.measurement_masks()
    by_time: dict[int, list[int]] = {}
    for m, (t, _, _) in enumerate(masks):
        by_time.setdefault(t, []).append(m)
    for t in range(circuit.num_steps + 1):
        if t in faults:
            fx, fz = pauli_vectors(n, faults[t])
            tab.apply_pauli(fx, fz)
        for m in by_time.get(t, ()):
            _, mx, mz = masks[m]
            px = _bits_to_bool(mx, n)
            pz = _bits_to_bool(mz, n)
            out, rnd = tab.measure(px, pz, forced.get(m))
            outcomes[m] = out
            random_mask[m] = rnd
        if on_step is not None:
            on_step(t, tab)
    return outcomes, random_mask


def _bits_to_bool(mask: int, n: int) -> np.ndarray:
    return np.array([(mask >> q) & 1 for q in range(n)], dtype=bool)


def parities(outcomes: np.ndarray, index_sets) -> np.ndarray:
    return np.array([int(outcomes[list(s)].sum()) & 1 if len(s) else 0 for s in index_sets], dtype=np.uint8)


def check_detector_determinism(circuit: "MeasurementCircuit", repeats: int = 8, seed: int = 0) -> list[str]:
    """Run the noiseless circuit ``repeats`` times with random outcomes.

    Reports every detector whose parity is not 0 on every run (all detectors
    are defined relative to the noiseless value), and every observable whose
    parity differs from its recorded reference.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    det_sets = [d.outcomes for d in circuit.detectors]
    obs_sets = [o.outcomes for o in circuit.observables]
    report = []
    bad_det: set[int] = set()
    bad_obs: set[int] = set()
    ss = np.random.SeedSequence(seed)
    for child in ss.spawn(repeats):
        outcomes, _ = run_tableau(circuit, seed=np.random.default_rng(child))
        dp = parities(outcomes, det_sets) ^ np.array([d.reference for d in circuit.detectors], dtype=np.uint8) \
            if det_sets else np.zeros(0, dtype=np.uint8)
        op = parities(outcomes, obs_sets) ^ np.array([o.reference for o in circuit.observables], dtype=np.uint8) \
            if obs_sets else np.zeros(0, dtype=np.uint8)
        bad_det.update(np.nonzero(dp)[0].tolist())
        bad_obs.update(np.nonzero(op)[0].tolist())
    for i in sorted(bad_det):
        report.append(f"detector {i} ({circuit.detectors[i].label()}) is not deterministic")
    for i in sorted(bad_obs):
        report.append(f"observable {i} (loop {circuit.observables[i].loop}) is not deterministic")
    return report
