"""Detector error models compiled from noisy measurement circuits.

Every non-identity outcome of every noise site is an elementary fault.  Its
signature (detectors and observables it flips) follows from Pauli-frame
propagation: a Pauli fault before step ``t`` flips each later measurement it
anticommutes with, and an outcome-flip fault flips its own measurement.
Faults with equal signatures merge with ``p <- p1 (1 - p2) + p2 (1 - p1)``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .circuit import MeasurementCircuit, channel_outcomes
from .gf2 import bits


class DecompositionError(RuntimeError):
    pass


@dataclass(frozen=True)
class FaultMechanism:
    probability: float
    detectors: tuple[int, ...]
    observables: tuple[int, ...]
    provenance: tuple[tuple[int, tuple[int, ...], str], ...] = field(default=(), compare=False)

    @property
    def weight(self) -> int:
        return len(self.detectors)


@dataclass(frozen=True)
class DetectorErrorModel:
    num_detectors: int
    num_observables: int
    mechanisms: tuple[FaultMechanism, ...]
    merged: bool = True
    # weight -> number of raw (unmerged, non-trivial) faults with that weight
    raw_weight_counts: dict = field(default_factory=dict, compare=False)
    # per detector: (stream id, position in stream, stream length); optional
    detector_streams: tuple = field(default=(), compare=False)

    @property
    def histogram(self) -> dict[int, int]:
        return dict(sorted(Counter(m.weight for m in self.mechanisms).items()))

    def undetectable_logical(self) -> tuple[FaultMechanism, ...]:
        """Mechanisms flipping no detector but at least one observable."""
        return tuple(m for m in self.mechanisms if not m.detectors and m.observables)

    def check_matrices(self, include_undetectable: bool = False):
        """Sparse detector and observable incidence matrices plus priors.

        Columns follow ``mechanisms`` (optionally skipping those with no
        detectors).  Returns ``(H, L, priors, columns)``.
        """
        from scipy.sparse import csc_matrix

        cols = [i for i, m in enumerate(self.mechanisms) if include_undetectable or m.detectors]
        hr, hc, lr, lc = [], [], [], []
        for j, i in enumerate(cols):
            m = self.mechanisms[i]
            hr.extend(m.detectors)
            hc.extend([j] * len(m.detectors))
            lr.extend(m.observables)
            lc.extend([j] * len(m.observables))
        H = csc_matrix((np.ones(len(hr), dtype=np.uint8), (hr, hc)), shape=(self.num_detectors, len(cols)))
        L = csc_matrix((np.ones(len(lr), dtype=np.uint8), (lr, lc)), shape=(self.num_observables, len(cols)))
        priors = np.array([self.mechanisms[i].probability for i in cols], dtype=np.float64)
        return H, L, priors, np.array(cols, dtype=np.int64)


def merge_probability(p1: float, p2: float) -> float:
    return p1 * (1 - p2) + p2 * (1 - p1)


class _SignatureTable:
    """Per-qubit suffix XORs of detector/observable masks.

    ``x[q][t]`` is the (detector mask, observable mask) flipped by an X on
    qubit ``q`` injected before step ``t``; likewise ``z``.
    """

    def __init__(self, circuit: MeasurementCircuit):
        M = circuit.num_measurements
        self.det_of_meas = [0] * M
        self.obs_of_meas = [0] * M
        for i, d in enumerate(circuit.detectors):
            for m in d.outcomes:
                self.det_of_meas[m] ^= 1 << i
        for i, o in enumerate(circuit.observables):
            for m in o.outcomes:
                self.obs_of_meas[m] ^= 1 << i
        n, T = circuit.num_qubits, circuit.num_steps
        # per (qubit, time): accumulated flips of measurements at that time
        at_x = [[(0, 0)] * (T + 1) for _ in range(n)]
        at_z = [[(0, 0)] * (T + 1) for _ in range(n)]
        for m, (t, mx, mz) in enumerate(circuit.measurement_masks()):
            d, o = self.det_of_meas[m], self.obs_of_meas[m]
            if not (d or o):
                continue
            for q in bits(mx | mz):
                xb, zb = (mx >> q) & 1, (mz >> q) & 1
                if zb:  # X fault anticommutes with Z or Y component
                    a = at_x[q][t]
                    at_x[q][t] = (a[0] ^ d, a[1] ^ o)
                if xb:
                    a = at_z[q][t]
                    at_z[q][t] = (a[0] ^ d, a[1] ^ o)
        self.x = [self._suffix(row) for row in at_x]
        self.z = [self._suffix(row) for row in at_z]

    @staticmethod
    def _suffix(row: list[tuple[int, int]]) -> list[tuple[int, int]]:
        out = [(0, 0)] * (len(row) + 1)
        d = o = 0
        for t in range(len(row) - 1, -1, -1):
            d ^= row[t][0]
            o ^= row[t][1]
            out[t] = (d, o)
        return out

    def signature(self, time: int, paulis: dict[int, str], flip_meas: int | None) -> tuple[int, int]:
        d = o = 0
        for q, P in paulis.items():
            if P in "XY":
                a = self.x[q][time]
                d ^= a[0]
                o ^= a[1]
            if P in "ZY":
                a = self.z[q][time]
                d ^= a[0]
                o ^= a[1]
        if flip_meas is not None:
            d ^= self.det_of_meas[flip_meas]
            o ^= self.obs_of_meas[flip_meas]
        return d, o


def fault_signature(circuit: MeasurementCircuit, time: int, paulis: dict[int, str],
                    flip_meas: int | None = None) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """(detectors, observables) flipped by one fault; convenience wrapper."""
    d, o = _SignatureTable(circuit).signature(time, paulis, flip_meas)
    return tuple(bits(d)), tuple(bits(o))


def compile_dem(circuit: MeasurementCircuit, merge: bool = True) -> DetectorErrorModel:
    """Compile the circuit's noise sites into a detector error model.

    With ``merge=False`` every non-trivial elementary fault is kept as its own
    mechanism (useful for checking the merge).
    """
    table = _SignatureTable(circuit)
    merged: dict[tuple[int, int], list] = {}
    raw: list[FaultMechanism] = []
    raw_weights: Counter = Counter()
    for site in circuit.noise_sites:
        if site.probability <= 0:
            continue
        for paulis, flip, prob in channel_outcomes(site):
            if prob <= 0:
                continue
            d, o = table.signature(site.time, paulis, site.measurement if flip else None)
            if d == 0 and o == 0:
                continue
            kind = site.channel + ":" + ("".join(paulis.get(q, "I") for q in site.qubits) if paulis else "")
            if flip and paulis:
                kind += "+flip"
            prov = (site.time, site.qubits, kind)
            raw_weights[bin(d).count("1")] += 1
            if merge:
                slot = merged.get((d, o))
                if slot is None:
                    merged[(d, o)] = [prob, [prov]]
                else:
                    slot[0] = merge_probability(slot[0], prob)
                    slot[1].append(prov)
            else:
                raw.append(FaultMechanism(prob, tuple(bits(d)), tuple(bits(o)), (prov,)))
    if merge:
        mechs = [
            FaultMechanism(p, tuple(bits(d)), tuple(bits(o)), tuple(prov))
            for (d, o), (p, prov) in merged.items()
        ]
        mechs.sort(key=lambda m: (m.detectors, m.observables))
    else:
        mechs = raw
    return DetectorErrorModel(
        len(circuit.detectors),
        len(circuit.observables),
        tuple(mechs),
        merge,
        dict(sorted(raw_weights.items())),
        detector_streams(circuit),
    )


def detector_streams(circuit: MeasurementCircuit) -> tuple[tuple[int, int, int], ...]:
    """(stream id, position, stream length) per detector, streams = (face, Pauli)."""
    order: dict[tuple[int, str], list[int]] = {}
    for i, d in enumerate(circuit.detectors):
        order.setdefault((d.face, d.pauli), []).append(i)
    out = [None] * len(circuit.detectors)
    for sid, (key, members) in enumerate(sorted(order.items())):
        members.sort(key=lambda i: (circuit.detectors[i].t_final, circuit.detectors[i].t_initial))
        for pos, i in enumerate(members):
            out[i] = (sid, pos, len(members))
    return tuple(out)


# keep the spec-facing name available
compile = compile_dem  # noqa: A001


def weight_histogram(model: DetectorErrorModel) -> dict[int, tuple[int, float]]:
    """w -> (count, percent) over distinct mechanisms."""
    hist = model.histogram
    total = sum(hist.values())
    return {w: (c, 100.0 * c / total if total else 0.0) for w, c in hist.items()}


def raw_weight_histogram(model: DetectorErrorModel) -> dict[int, tuple[int, float]]:
    hist = model.raw_weight_counts
    total = sum(hist.values())
    return {w: (c, 100.0 * c / total if total else 0.0) for w, c in sorted(hist.items())}


# ---------------------------------------------------------------------------
# hyperedge decomposition


@dataclass(frozen=True)
class Component:
    """A graph-like piece of a decomposed mechanism.

    ``source`` is the index of the existing w<=2 mechanism supplying it, or
    ``None`` for a synthesized time-like piece (see ``decompose_hyperedges``).
    """

    detectors: tuple[int, ...]
    observables: tuple[int, ...]
    source: int | None


def decompose_hyperedges(model: DetectorErrorModel, synthesize: bool = True) -> dict[int, tuple[Component, ...]]:
    """Express every mechanism as a disjoint union of graph-like pieces.

    w<=2 mechanisms map to themselves.  For w>=3 the search enumerates exact
    covers of the detector set whose observable flips XOR to the
    mechanism's.  Pieces are detector sets of existing w<=2 mechanisms;
    covers with fewer parts win, then covers with more probable pieces.

    When no such cover exists and ``synthesize`` is set (and the model knows
    its detector streams), the search may also synthesize pieces: any pair
    of the mechanism's detectors, or a single detector at either end of its
    stream (a time-boundary piece).  A flipped HF check is the typical case:
    it lights two consecutive detectors in each of two streams.  Pieces that
    few other faults could also use are preferred, e.g. the cross-stream
    pairs that identify the flipped check, so that observable payloads stay
    consistent.  Payloads are solved jointly over all such mechanisms (see
    ``_solve_payloads``).
    """
    basis: dict[tuple[int, ...], list[int]] = {}
    for i, m in enumerate(model.mechanisms):
        if 1 <= m.weight <= 2:
            basis.setdefault(m.detectors, []).append(i)
    for key in basis:
        basis[key].sort(key=lambda i: (-model.mechanisms[i].probability, i))
    streams = model.detector_streams if synthesize else ()

    out: dict[int, tuple[Component, ...]] = {}
    unresolved: list[int] = []
    for i, m in enumerate(model.mechanisms):
        if m.weight <= 2:
            out[i] = (Component(m.detectors, m.observables, i),)
            continue
        best = _best_cover(model, m, basis)
        if best is not None:
            out[i] = tuple(Component(part, model.mechanisms[idx].observables, idx) for part, idx in best[0])
        elif not streams:
            raise DecompositionError(
                f"mechanism {i} (detectors {list(m.detectors)}, observables {list(m.observables)}) "
                "has no exact cover by weight-1/2 pieces"
            )
        else:
            unresolved.append(i)
    if unresolved:
        # how many unresolved mechanisms could use each candidate piece
        usage: Counter = Counter()
        for i in unresolved:
            for piece in _synthetic_candidates(model.mechanisms[i].detectors, streams):
                usage[piece] += 1
        pending = []
        for i in unresolved:
            m = model.mechanisms[i]
            chosen, acc = _best_cover(model, m, basis, streams, usage)
            pending.append((i, chosen, _mask_of(m.observables) ^ acc))
        payload = _solve_payloads(model, pending)
        for i, chosen, _ in pending:
            out[i] = tuple(
                Component(part, tuple(bits(payload.get(part, 0))), None) if idx is None
                else Component(part, model.mechanisms[idx].observables, idx)
                for part, idx in chosen
            )
    return dict(sorted(out.items()))


def _is_endpoint(d: int, streams) -> bool:
    _, pos, length = streams[d]
    return pos == 0 or pos == length - 1


def _synthetic_candidates(dets: tuple[int, ...], streams):
    for a, d in enumerate(dets):
        if _is_endpoint(d, streams):
            yield (d,)
        for e in dets[a + 1:]:
            yield (d, e)


def _solve_payloads(model: DetectorErrorModel, pending: list[tuple[int, list, int]]) -> dict[tuple[int, ...], int]:
    """Observable payload per synthesized piece.

    Each pending mechanism requires the payloads of its synthesized pieces
    to XOR to its residual observable mask.  Every observable bit is solved
    separately over GF(2); equations are admitted in order of decreasing
    mechanism probability and skipped when they contradict the ones already
    admitted, so any unavoidable inconsistency lands on the least likely
    faults.
    """
    index: dict[tuple[int, ...], int] = {}
    rows = []
    for i, chosen, residual in pending:
        row = 0
        for part, idx in chosen:
            if idx is None:
                row ^= 1 << index.setdefault(part, len(index))
        rows.append((-model.mechanisms[i].probability, i, row, residual))
    rows.sort(key=lambda r: (r[0], r[1]))
    pieces = list(index)
    payload = {part: 0 for part in pieces}
    nobs = max([r[3].bit_length() for r in rows] + [0])
    for b in range(nobs):
        pivots: dict[int, tuple[int, int]] = {}  # top bit -> (row, rhs)
        for _, _, row, residual in rows:
            rhs = (residual >> b) & 1
            while row:
                top = row.bit_length() - 1
                if top not in pivots:
                    pivots[top] = (row, rhs)
                    break
                prow, prhs = pivots[top]
                row ^= prow
                rhs ^= prhs
            # row == 0 with rhs == 1 is a contradiction: skipped
        # back substitution, free unknowns = 0
        x = 0
        for top in sorted(pivots):
            prow, prhs = pivots[top]
            val = prhs ^ (bin(prow & x & ~(1 << top)).count("1") & 1)
            if val:
                x |= 1 << top
        for u in bits(x):
            payload[pieces[u]] |= 1 << b
    return payload


def _mask_of(idx: Iterable[int]) -> int:
    v = 0
    for o in idx:
        v ^= 1 << o
    return v


def _best_cover(model: DetectorErrorModel, m: FaultMechanism, basis, streams=(), usage=None):
    """Best exact cover as ``(sorted [(part, source or None)], observable mask of sourced parts)``.

    Without ``streams`` only sourced pieces are used and the observable flips
    must match.  With them, synthesized pieces (any detector pair, or a
    single stream endpoint) are allowed; covers use as few synthesized
    pieces as possible, then as few parts, then the most specific pieces
    (smallest ``usage`` count, so a piece pins down the fault it came from),
    then the most probable sourced pieces.
    """
    target_obs = _mask_of(m.observables)
    mechs = model.mechanisms
    usage = usage or {}
    best: list = [None]

    def rec(remaining: tuple[int, ...], chosen: list, acc_obs: int, nsyn: int, shared: int, logp: float) -> None:
        if not remaining:
            if nsyn == 0 and acc_obs != target_obs:
                return
            key = (nsyn, len(chosen), shared, -logp, tuple(c[0] for c in chosen))
            if best[0] is None or key < best[0][0]:
                best[0] = (key, list(chosen), acc_obs)
            return
        if best[0] is not None:
            bk = best[0][0]
            if (nsyn, len(chosen) + (len(remaining) + 1) // 2) > (bk[0], bk[1]):
                return
        d0 = remaining[0]
        parts = [(d0,)] + [(d0, d) for d in remaining[1:]]
        for part in parts:
            rest = tuple(d for d in remaining if d not in part)
            for idx in basis.get(part, ()):
                chosen.append((part, idx))
                rec(rest, chosen, acc_obs ^ _mask_of(mechs[idx].observables), nsyn, shared,
                    logp + float(np.log(mechs[idx].probability)))
                chosen.pop()
        if streams:
            for part in parts:
                if len(part) == 1 and not _is_endpoint(d0, streams):
                    continue
                rest = tuple(d for d in remaining if d not in part)
                chosen.append((part, None))
                rec(rest, chosen, acc_obs, nsyn + 1, shared + usage.get(part, 0), logp)
                chosen.pop()

    rec(tuple(m.detectors), [], 0, 0, 0, 0.0)
    if best[0] is None:
        return None
    _, chosen, acc = best[0]
    return sorted(chosen, key=lambda c: c[0]), acc


# ---------------------------------------------------------------------------
# text format

_HEADER = "# floqsim-dem 1"


def dumps(model: DetectorErrorModel) -> str:
    lines = [_HEADER, f"detectors {model.num_detectors}", f"observables {model.num_observables}"]
    for d, (sid, pos, length) in enumerate(model.detector_streams):
        lines.append(f"stream D{d} {sid} {pos} {length}")
    for m in model.mechanisms:
        toks = [f"error({m.probability!r})"] + [f"D{d}" for d in m.detectors] + [f"L{o}" for o in m.observables]
        lines.append(" ".join(toks))
    return "\n".join(lines) + "\n"


def loads(text: str) -> DetectorErrorModel:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != _HEADER:
        raise ValueError("DEM file: bad header")
    nd = no = None
    mechs = []
    streams: dict[int, tuple[int, int, int]] = {}
    for ln in lines[1:]:
        if ln.startswith("detectors "):
            nd = int(ln.split()[1])
        elif ln.startswith("observables "):
            no = int(ln.split()[1])
        elif ln.startswith("stream "):
            _, d, sid, pos, length = ln.split()
            streams[int(d[1:])] = (int(sid), int(pos), int(length))
        elif ln.startswith("error("):
            head, *rest = ln.split()
            p = float(head[len("error("):-1])
            ds = tuple(int(t[1:]) for t in rest if t[0] == "D")
            os_ = tuple(int(t[1:]) for t in rest if t[0] == "L")
            mechs.append(FaultMechanism(p, ds, os_))
        else:
            raise ValueError(f"DEM file: unknown line {ln!r}")
    if nd is None or no is None:
        raise ValueError("DEM file: missing header counts")
    if streams and sorted(streams) != list(range(nd)):
        raise ValueError("DEM file: stream lines must cover every detector")
    return DetectorErrorModel(nd, no, tuple(mechs), detector_streams=tuple(streams[d] for d in sorted(streams)))


def from_mechanisms(num_detectors: int, num_observables: int,
                    mechanisms: Iterable[tuple[float, Sequence[int], Sequence[int]]]) -> DetectorErrorModel:
    """Build a model directly from (p, detectors, observables) triples (merged)."""
    merged: dict[tuple, float] = {}
    for p, ds, os_ in mechanisms:
        key = (tuple(sorted(set(ds))), tuple(sorted(set(os_))))
        merged[key] = merge_probability(merged[key], p) if key in merged else p
    mechs = [FaultMechanism(p, d, o, ((0, (), "manual"),)) for (d, o), p in merged.items() if p > 0]
    mechs.sort(key=lambda m: (m.detectors, m.observables))
    return DetectorErrorModel(num_detectors, num_observables, tuple(mechs))
