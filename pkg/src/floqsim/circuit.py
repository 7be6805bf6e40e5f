"""Noisy memory-experiment circuits for the HF and HCF Floquet codes.

A memory circuit prepares every data qubit in the memory basis, runs
``periods`` repetitions of the family's edge-check schedule and reads all
qubits out in the memory basis:

* HCF (two Pauli types, six steps): rXX, gZZ, bXX, rZZ, gXX, bZZ
* HF  (three Pauli types, three steps): rXX, gYY, bZZ

Measurements are numbered globally in execution order; the final
single-qubit readout of qubit ``q`` is measurement ``readout_offset + q``.

Detectors compare consecutive inferences of the same plaquette stream.
In HCF a plaquette is inferred from one step (its alternating boundary
half), and detectors pair inferences that are not separated by a
randomizing step; in HF a plaquette needs two consecutive steps and
detectors chain consecutive inferences, so neighbours overlap in time.

Logical observables follow a homology loop.  The representative starts as
the memory-basis Pauli on the vertices of one colour class of the loop's
edges, and is multiplied by the just-measured checks along the loop only
when that is needed to commute with the next step.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import anyon, stabsim
from .lattice import COLORS, HomologyBasis, Tiling, validate_tiling

FAMILY_SCHEDULES: dict[str, tuple[tuple[str, str], ...]] = {
    "hcf": (("r", "X"), ("g", "Z"), ("b", "X"), ("r", "Z"), ("g", "X"), ("b", "Z")),
    "hf": (("r", "X"), ("g", "Y"), ("b", "Z")),
}

_PBITS = {"X": (1, 0), "Y": (1, 1), "Z": (0, 1)}


class CircuitError(RuntimeError):
    pass


def normalize_family(family: str) -> str:
    f = family.strip().lower()
    if f not in FAMILY_SCHEDULES:
        raise ValueError(f"unknown code family {family!r} (expected 'hf' or 'hcf')")
    return f


def pauli_product_type(a: str, b: str) -> str:
    """Pauli type of a*b up to phase (a != b, both non-identity)."""
    if a == b:
        raise ValueError("product of equal Paulis is the identity")
    return next(p for p in "XYZ" if p not in (a, b))


def _mask(qubits: Iterable[int], pauli: str) -> tuple[int, int]:
    bx, bz = _PBITS[pauli]
    x = z = 0
    for q in qubits:
        x ^= bx << q
        z ^= bz << q
    return x, z


def _anticommute(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return bin((a[0] & b[1]) ^ (a[1] & b[0])).count("1") & 1 == 1


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class Step:
    """One layer of same-colour, same-basis edge checks."""

    time: int
    color: str
    basis: str  # "X", "Y" or "Z"; each check measures basis (x) basis
    checks: tuple[tuple[int, int, int], ...]  # (edge id, u, v)
    offset: int  # global index of the first check outcome

    @cached_property
    def index_of_edge(self) -> dict[int, int]:
        return {e: self.offset + i for i, (e, _, _) in enumerate(self.checks)}

    def check_mask(self, i: int) -> tuple[int, int]:
        _, u, v = self.checks[i]
        return _mask((u, v), self.basis)


@dataclass(frozen=True)
class Inference:
    """Outcomes whose product equals a plaquette operator (up to sign)."""

    times: tuple[int, ...]
    edges: tuple[int, ...]
    outcomes: tuple[int, ...]

    @property
    def time(self) -> int:
        return max(self.times)


@dataclass(frozen=True)
class Detector:
    face: int
    color: str
    pauli: str
    t_initial: int  # -1 for the prologue anchor
    t_final: int  # num_steps for the epilogue anchor
    outcomes: tuple[int, ...]
    reference: int = 0

    def label(self) -> str:
        return f"{self.color}{self.pauli} face {self.face} [{self.t_initial},{self.t_final}]"


@dataclass(frozen=True)
class Observable:
    loop: int
    pauli: str
    outcomes: tuple[int, ...]
    reference: int = 0
    # representative (x-mask, z-mask) before step t, t = 0..num_steps
    representatives: tuple[tuple[int, int], ...] = field(default=(), compare=False)


NOISE_KINDS = ("em3-ind", "em3-cor")


def normalize_noise_kind(kind: str) -> str:
    k = kind.strip().lower().replace("_", "-")
    if k in ("ind", "em3ind"):
        k = "em3-ind"
    if k in ("cor", "em3cor"):
        k = "em3-cor"
    if k not in NOISE_KINDS:
        raise ValueError(f"unknown noise model {kind!r} (expected one of {NOISE_KINDS})")
    return k


@dataclass(frozen=True)
class NoiseModel:
    kind: str
    p: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", normalize_noise_kind(self.kind))
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"noise probability {self.p} outside [0, 1]")


@dataclass(frozen=True)
class NoiseSite:
    """A noisy location.  ``measurement`` is set for outcome-flip channels."""

    time: int
    qubits: tuple[int, ...]
    channel: str
    probability: float
    measurement: int = -1


CHANNELS = ("X_ERROR", "Z_ERROR", "DEPOLARIZE1", "DEPOLARIZE2", "MEAS_FLIP", "PAULI2_FLIP")


def channel_outcomes(site: NoiseSite) -> list[tuple[dict[int, str], bool, float]]:
    """Non-identity outcomes of a site's channel: (Pauli, outcome flip, probability)."""
    p = site.probability
    ch = site.channel
    qs = site.qubits
    if ch == "X_ERROR":
        return [({qs[0]: "X"}, False, p)]
    if ch == "Z_ERROR":
        return [({qs[0]: "Z"}, False, p)]
    if ch == "DEPOLARIZE1":
        return [({qs[0]: P}, False, p / 3) for P in "XYZ"]
    if ch == "DEPOLARIZE2":
        out = []
        for a in "IXYZ":
            for b in "IXYZ":
                if a == b == "I":
                    continue
                pa = {q: P for q, P in zip(qs, (a, b)) if P != "I"}
                out.append((pa, False, p / 15))
        return out
    if ch == "MEAS_FLIP":
        return [({}, True, p)]
    if ch == "PAULI2_FLIP":
        out = []
        for a in "IXYZ":
            for b in "IXYZ":
                for flip in (False, True):
                    if a == b == "I" and not flip:
                        continue
                    pa = {q: P for q, P in zip(qs, (a, b)) if P != "I"}
                    out.append((pa, flip, p / 31))
        return out
    raise ValueError(f"unknown channel {ch!r}")


@dataclass(frozen=True)
class MeasurementCircuit:
    family: str
    num_qubits: int
    prologue_basis: str
    epilogue_basis: str
    steps: tuple[Step, ...]
    detectors: tuple[Detector, ...] = ()
    observables: tuple[Observable, ...] = ()
    noise_sites: tuple[NoiseSite, ...] = ()
    noise: NoiseModel | None = None

    @property
    def num_steps(self) -> int:
        return len(self.steps)

    @property
    def memory_basis(self) -> str:
        return self.epilogue_basis

    @cached_property
    def readout_offset(self) -> int:
        return sum(len(s.checks) for s in self.steps)

    @property
    def num_measurements(self) -> int:
        return self.readout_offset + self.num_qubits

    def readout_index(self, q: int) -> int:
        return self.readout_offset + q

    def measurement_masks(self) -> list[tuple[int, int, int]]:
        """(time, x-mask, z-mask) for every measurement; readout has time num_steps."""
        return self._masks

    @cached_property
    def _masks(self) -> list[tuple[int, int, int]]:
        out = []
        for s in self.steps:
            for i in range(len(s.checks)):
                out.append((s.time, *s.check_mask(i)))
        for q in range(self.num_qubits):
            out.append((self.num_steps, *_mask((q,), self.epilogue_basis)))
        return out

    def measurement_qubits(self, m: int) -> tuple[tuple[int, ...], str, int]:
        """(qubits, basis, time) of measurement ``m``."""
        if m >= self.readout_offset:
            return (m - self.readout_offset,), self.epilogue_basis, self.num_steps
        for s in self.steps:
            if m < s.offset + len(s.checks):
                _, u, v = s.checks[m - s.offset]
                return (u, v), s.basis, s.time
        raise IndexError(m)


# ---------------------------------------------------------------------------
# schedule


def schedule_bosons(family: str) -> tuple[anyon.Boson, ...]:
    fam = normalize_family(family)
    return tuple(anyon.Boson(c, b.lower()) for c, b in FAMILY_SCHEDULES[fam])


def build_schedule(family: str, t: Tiling, periods: int) -> tuple[Step, ...]:
    """Edge-check layers for ``periods`` repetitions of the family schedule."""
    fam = normalize_family(family)
    if periods < 1:
        raise ValueError("periods must be >= 1")
    report = anyon.validate_schedule(schedule_bosons(fam))
    if report:
        raise CircuitError("schedule violates the condensation rule: " + "; ".join(report))
    problems = validate_tiling(t)
    if problems:
        raise CircuitError("tiling is not a valid three-coloured tiling: " + "; ".join(problems))
    by_color = {c: [(e, u, v) for e, (u, v, cc) in enumerate(t.edges) if cc == c] for c in COLORS}
    for c, checks in by_color.items():
        touched = [q for _, u, v in checks for q in (u, v)]
        if len(touched) != len(set(touched)):
            raise CircuitError(f"colour-{c} edges are not vertex-disjoint")
    sched = FAMILY_SCHEDULES[fam]
    steps = []
    offset = 0
    for time in range(periods * len(sched)):
        c, b = sched[time % len(sched)]
        checks = tuple(by_color[c])
        steps.append(Step(time, c, b, checks, offset))
        offset += len(checks)
    return tuple(steps)


def build_circuit(family: str, t: Tiling, periods: int, basis: str = "Z") -> MeasurementCircuit:
    basis = basis.upper()
    if basis not in ("X", "Z"):
        raise ValueError("memory basis must be 'X' or 'Z'")
    fam = normalize_family(family)
    steps = build_schedule(fam, t, periods)
    return MeasurementCircuit(fam, t.num_vertices, basis, basis, steps)


# ---------------------------------------------------------------------------
# plaquette inference and detectors


def face_type(family: str, color: str) -> tuple[str, ...]:
    """Plaquette Pauli types available for a face of ``color``."""
    fam = normalize_family(family)
    if fam == "hcf":
        return ("X", "Z")
    bases = {c: b for c, b in FAMILY_SCHEDULES[fam]}
    a, b = (bases[c] for c in COLORS if c != color)
    return (pauli_product_type(a, b),)


def _cover_check(t: Tiling, f: int, edges: Sequence[int]) -> None:
    verts = sorted(q for e in edges for q in t.edges[e][:2])
    if verts != sorted(t.faces[f][0]):
        raise CircuitError(f"inference set for face {f} does not cover its qubits exactly once")


def plaquette_inference_sets(circuit: MeasurementCircuit, t: Tiling, f: int, mu: str) -> list[Inference]:
    """All inferences of plaquette ``mu^{(x) f}`` available in the circuit."""
    mu = mu.upper()
    color = t.faces[f][1]
    if mu not in face_type(circuit.family, color):
        raise ValueError(f"{mu} is not a plaquette type of a {color} face in {circuit.family}")
    boundary = t.face_edges[f]
    out = []
    if circuit.family == "hcf":
        for s in circuit.steps:
            if s.basis == mu and s.color != color:
                edges = tuple(e for e in boundary if t.edges[e][2] == s.color)
                _cover_check(t, f, edges)
                out.append(Inference((s.time,), edges, tuple(s.index_of_edge[e] for e in edges)))
    else:
        steps = circuit.steps
        for i in range(len(steps) - 1):
            s1, s2 = steps[i], steps[i + 1]
            if color in (s1.color, s2.color):
                continue
            e1 = tuple(e for e in boundary if t.edges[e][2] == s1.color)
            e2 = tuple(e for e in boundary if t.edges[e][2] == s2.color)
            _cover_check(t, f, e1)
            _cover_check(t, f, e2)
            if pauli_product_type(s1.basis, s2.basis) != mu:
                raise CircuitError("two-step product does not give the plaquette type")
            outs = tuple(s1.index_of_edge[e] for e in e1) + tuple(s2.index_of_edge[e] for e in e2)
            out.append(Inference((s1.time, s2.time), e1 + e2, outs))
    return out


def randomization_times(circuit: MeasurementCircuit, t: Tiling, f: int, mu: str) -> list[int]:
    """Steps containing a check that anticommutes with the plaquette."""
    plaq = _mask(t.faces[f][0], mu.upper())
    out = []
    for s in circuit.steps:
        if any(_anticommute(plaq, s.check_mask(i)) for i in range(len(s.checks))):
            out.append(s.time)
    return out


def _virtual_end_inference(circuit: MeasurementCircuit, t: Tiling, f: int, mu: str) -> Inference | None:
    beta = circuit.epilogue_basis
    color = t.faces[f][1]
    face = t.faces[f][0]
    boundary = t.face_edges[f]
    later: list[Step] = []
    for s in reversed(circuit.steps):
        if s.color != color and s.basis != beta and pauli_product_type(beta, s.basis) == mu:
            measured = _mask(face, s.basis)
            if any(_anticommute(measured, x.check_mask(i)) for x in later for i in range(len(x.checks))):
                return None
            edges = tuple(e for e in boundary if t.edges[e][2] == s.color)
            _cover_check(t, f, edges)
            outs = tuple(s.index_of_edge[e] for e in edges) + tuple(circuit.readout_index(q) for q in sorted(face))
            return Inference((s.time, circuit.num_steps), edges, outs)
        later.append(s)
    return None


def _virtual_start_inference(circuit: MeasurementCircuit, t: Tiling, f: int, mu: str) -> Inference | None:
    beta = circuit.prologue_basis
    color = t.faces[f][1]
    face = t.faces[f][0]
    boundary = t.face_edges[f]
    prepared = _mask(face, beta)
    for s in circuit.steps:
        if s.color != color and s.basis != beta and pauli_product_type(beta, s.basis) == mu:
            edges = tuple(e for e in boundary if t.edges[e][2] == s.color)
            _cover_check(t, f, edges)
            return Inference((-1, s.time), edges, tuple(s.index_of_edge[e] for e in edges))
        if any(_anticommute(prepared, s.check_mask(i)) for i in range(len(s.checks))):
            return None
    return None


def _stream_detectors(circuit: MeasurementCircuit, t: Tiling, f: int, mu: str,
                      anchoring: str = "extended") -> list[Detector]:
    T = circuit.num_steps
    color = t.faces[f][1]
    anchored = mu == circuit.prologue_basis
    closed = mu == circuit.epilogue_basis
    readout = tuple(circuit.readout_index(q) for q in sorted(t.faces[f][0]))
    infs = plaquette_inference_sets(circuit, t, f, mu)
    rands = randomization_times(circuit, t, f, mu)
    v_start = v_end = None
    if anchoring == "extended":
        if not anchored:
            v_start = _virtual_start_inference(circuit, t, f, mu)
        if not closed:
            v_end = _virtual_end_inference(circuit, t, f, mu)

    # events in time order: ("P", -1), ("I", time, inf), ("X", time), ("R", T)
    events: list[tuple] = []
    if anchored:
        events.append((-1, 0, "P", None))
    elif v_start is not None:
        events.append((-1, 0, "P", v_start))
    for inf in infs:
        events.append((inf.time, 1, "I", inf))
    for r in rands:
        events.append((r, 1, "X", None))
    if closed:
        events.append((T, 2, "R", None))
    elif v_end is not None:
        events.append((T, 2, "R", v_end))
    events.sort(key=lambda ev: (ev[0], ev[1]))

    groups: list[list[tuple]] = [[]]
    for ev in events:
        if ev[2] == "X":
            groups.append([])
        else:
            groups[-1].append(ev)

    def pts(ev) -> tuple[int, tuple[int, ...]]:
        if ev[2] == "P":
            return -1, (ev[3].outcomes if ev[3] is not None else ())
        if ev[2] == "R":
            return T, (ev[3].outcomes if ev[3] is not None else readout)
        return ev[0], ev[3].outcomes

    dets = []
    gapped = circuit.family == "hcf"
    for gi, grp in enumerate(groups):
        real = [ev for ev in grp if ev[2] == "I"]
        has_p = any(ev[2] == "P" for ev in grp)
        has_r = any(ev[2] == "R" for ev in grp)
        if gapped:
            seq = list(real)
            if len(seq) % 2:
                if has_p:
                    seq.insert(0, grp[0])
                elif has_r:
                    seq.append(grp[-1])
                else:
                    seq.pop()
            pairs = [(seq[i], seq[i + 1]) for i in range(0, len(seq), 2)]
        else:
            seq = ([grp[0]] if has_p else []) + real + ([grp[-1]] if has_r else [])
            pairs = [(seq[i], seq[i + 1]) for i in range(len(seq) - 1)]
        for a, b in pairs:
            ta, oa = pts(a)
            tb, ob = pts(b)
            outs = tuple(sorted(set(oa) ^ set(ob)))
            dets.append(Detector(f, color, mu, ta, tb, outs))
    return dets


ANCHORINGS = ("extended", "basis")


def attach_detectors(
    circuit: MeasurementCircuit, t: Tiling, all_streams: bool = False, verify: bool = True,
    anchoring: str = "extended",
) -> MeasurementCircuit:
    """Attach plaquette detectors.

    HF uses every face's single plaquette type.  HCF uses the memory-basis
    plaquette streams only, unless ``all_streams`` adds the other Pauli type
    (whose detectors only see the complementary error type and make Y
    faults weight four).

    ``anchoring="basis"`` anchors only streams whose plaquette type equals
    the memory basis.  ``"extended"`` (default) also anchors a stream of type
    ``mu = beta * Q`` through a virtual first inference: the prepared
    ``beta``-plaquette times the first ``Q``-check layer on the face
    boundary, provided nothing in between disturbs the prepared factor.  The
    last inference is closed the same way with the final ``Q`` layer and the
    readout.  Without it HF Z-memory has single preparation/readout faults
    that flip an observable while lighting one detector.
    """
    if anchoring not in ANCHORINGS:
        raise ValueError(f"anchoring must be one of {ANCHORINGS}")
    dets: list[Detector] = []
    for f in range(len(t.faces)):
        color = t.faces[f][1]
        types = face_type(circuit.family, color)
        if circuit.family == "hcf" and not all_streams:
            types = (circuit.memory_basis,)
        for mu in types:
            dets.extend(_stream_detectors(circuit, t, f, mu, anchoring))
    dets.sort(key=lambda d: (d.t_final, d.t_initial, d.face, d.pauli))
    out = replace(circuit, detectors=tuple(dets))
    if verify:
        out = _set_references(out, verify=True)
    return out


# ---------------------------------------------------------------------------
# logical observables


def _loop_representative(
    circuit: MeasurementCircuit, t: Tiling, loop_edges: Sequence[int], start_color: str
) -> tuple[tuple[int, ...], tuple[tuple[int, int], ...]] | None:
    beta = circuit.memory_basis
    loop_set = set(loop_edges)
    support = sorted({q for e in loop_edges if t.edges[e][2] == start_color for q in t.edges[e][:2]})
    if not support:
        return None
    L = _mask(support, beta)
    steps = circuit.steps
    T = len(steps)
    readout_masks = [_mask((q,), beta) for q in range(circuit.num_qubits)]

    def commutes_with(op: tuple[int, int], ti: int) -> bool:
        if ti == T:
            return not any(_anticommute(op, m) for m in readout_masks)
        s = steps[ti]
        return not any(_anticommute(op, s.check_mask(i)) for i in range(len(s.checks)))

    if not commutes_with(L, 0):
        return None
    outcomes: set[int] = set()
    reps = [L]
    for ti, s in enumerate(steps):
        if not commutes_with(L, ti + 1):
            ux = uz = 0
            used = []
            for i, (e, _, _) in enumerate(s.checks):
                if e in loop_set:
                    mx, mz = s.check_mask(i)
                    ux ^= mx
                    uz ^= mz
                    used.append(s.offset + i)
            L2 = (L[0] ^ ux, L[1] ^ uz)
            if L2 == (0, 0) or not commutes_with(L2, ti + 1):
                return None
            L = L2
            outcomes.symmetric_difference_update(used)
        reps.append(L)
    final_support = [q for q in range(circuit.num_qubits) if (L[0] | L[1]) >> q & 1]
    outcomes.symmetric_difference_update(circuit.readout_index(q) for q in final_support)
    return tuple(sorted(outcomes)), tuple(reps)


def attach_observables(
    circuit: MeasurementCircuit, t: Tiling, basis: HomologyBasis, verify: bool = True
) -> MeasurementCircuit:
    """One memory-basis logical observable per homology loop."""
    obs = []
    for i, loop in enumerate(basis.loops):
        if len(loop.edges) == 0:
            raise ValueError("empty loop cannot define an observable")
        res = None
        for c in COLORS:
            res = _loop_representative(circuit, t, loop.edges, c)
            if res is not None:
                break
        if res is None:
            raise CircuitError(
                f"loop {i}: representative anticommutes with a next-step check for every start colour"
            )
        outs, reps = res
        obs.append(Observable(i, circuit.memory_basis, outs, 0, reps))
    out = replace(circuit, observables=tuple(obs))
    if verify:
        out = _set_references(out, verify=True)
    return out


def _set_references(circuit: MeasurementCircuit, verify: bool = True, repeats: int = 2) -> MeasurementCircuit:
    """Record noiseless parities; optionally confirm they do not depend on randomness."""
    runs = []
    for s in range(repeats if verify else 1):
        outcomes, _ = stabsim.run_tableau(circuit, seed=1000 + s)
        runs.append(outcomes)
    d_ref = [stabsim.parities(r, [d.outcomes for d in circuit.detectors]) for r in runs]
    o_ref = [stabsim.parities(r, [o.outcomes for o in circuit.observables]) for r in runs]
    if verify:
        for r in d_ref[1:]:
            bad = np.nonzero(r != d_ref[0])[0]
            if bad.size:
                raise CircuitError(
                    "non-deterministic detectors: " + ", ".join(circuit.detectors[i].label() for i in bad[:5])
                )
        for r in o_ref[1:]:
            bad = np.nonzero(r != o_ref[0])[0]
            if bad.size:
                raise CircuitError(f"non-deterministic observables: {bad.tolist()}")
    dets = tuple(replace(d, reference=int(v)) for d, v in zip(circuit.detectors, d_ref[0]))
    obs = tuple(replace(o, reference=int(v)) for o, v in zip(circuit.observables, o_ref[0]))
    return replace(circuit, detectors=dets, observables=obs)


# ---------------------------------------------------------------------------
# noise


def apply_noise(circuit: MeasurementCircuit, model: NoiseModel) -> MeasurementCircuit:
    """Insert EM3 noise sites (sites with zero probability are omitted)."""
    p = model.p
    sites: list[NoiseSite] = []
    if p > 0:
        n = circuit.num_qubits
        prep_channel = "X_ERROR" if circuit.prologue_basis == "Z" else "Z_ERROR"
        prep_p = p if model.kind == "em3-ind" else p / 2
        for q in range(n):
            sites.append(NoiseSite(0, (q,), prep_channel, prep_p))
        for s in circuit.steps:
            busy = set()
            for i, (_, u, v) in enumerate(s.checks):
                busy.update((u, v))
                m = s.offset + i
                if model.kind == "em3-ind":
                    sites.append(NoiseSite(s.time, (u, v), "DEPOLARIZE2", p))
                    sites.append(NoiseSite(s.time, (u, v), "MEAS_FLIP", p, m))
                else:
                    sites.append(NoiseSite(s.time, (u, v), "PAULI2_FLIP", p, m))
            for q in range(n):
                if q not in busy:
                    sites.append(NoiseSite(s.time, (q,), "DEPOLARIZE1", p))
    return replace(circuit, noise_sites=tuple(sites), noise=model)


# ---------------------------------------------------------------------------
# end-to-end builder


def memory_circuit(
    t: Tiling,
    family: str,
    periods: int,
    basis: str = "Z",
    noise: NoiseModel | None = None,
    homology: HomologyBasis | None = None,
    all_streams: bool = False,
    verify: bool = True,
    anchoring: str = "extended",
) -> MeasurementCircuit:
    from .lattice import homology_basis

    c = build_circuit(family, t, periods, basis)
    c = attach_detectors(c, t, all_streams=all_streams, verify=False, anchoring=anchoring)
    c = attach_observables(c, t, homology if homology is not None else homology_basis(t), verify=False)
    c = _set_references(c, verify=verify)
    if noise is not None:
        c = apply_noise(c, noise)
    return c


# ---------------------------------------------------------------------------
# text format

_HEADER = "floqsim-circuit 1"


def dumps(c: MeasurementCircuit) -> str:
    lines = [_HEADER, f"FAMILY {c.family}", f"QUBITS {c.num_qubits}", f"PROLOGUE {c.prologue_basis}"]
    if c.noise is not None:
        lines.append(f"NOISE_MODEL {c.noise.kind} {c.noise.p!r}")
    for s in c.steps:
        checks = " ".join(f"{e}:{u}-{v}" for e, u, v in s.checks)
        lines.append(f"STEP {s.time} {s.color} {s.basis}{s.basis} {checks}")
    lines.append(f"EPILOGUE {c.epilogue_basis}")
    for ns in c.noise_sites:
        q = ",".join(map(str, ns.qubits))
        extra = f" m={ns.measurement}" if ns.measurement >= 0 else ""
        lines.append(f"NOISE {ns.time} {ns.channel} {ns.probability!r} q={q}{extra}")
    for d in c.detectors:
        lines.append(
            f"DETECTOR f={d.face} c={d.color} P={d.pauli} ti={d.t_initial} tf={d.t_final} ref={d.reference} : "
            + " ".join(map(str, d.outcomes))
        )
    for o in c.observables:
        lines.append(f"OBSERVABLE loop={o.loop} P={o.pauli} ref={o.reference} : " + " ".join(map(str, o.outcomes)))
    return "\n".join(lines) + "\n"


def _kv(tokens: Sequence[str]) -> dict[str, str]:
    return dict(tok.split("=", 1) for tok in tokens)


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split())


def loads(text: str) -> MeasurementCircuit:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != _HEADER:
        raise ValueError("circuit file: bad header")
    family = qubits = prologue = epilogue = None
    noise = None
    steps, sites, dets, obs = [], [], [], []
    offset = 0
    for ln in lines[1:]:
        head, _, rest = ln.partition(" ")
        if head == "FAMILY":
            family = rest
        elif head == "QUBITS":
            qubits = int(rest)
        elif head == "PROLOGUE":
            prologue = rest
        elif head == "EPILOGUE":
            epilogue = rest
        elif head == "NOISE_MODEL":
            kind, p = rest.split()
            noise = NoiseModel(kind, float(p))
        elif head == "STEP":
            toks = rest.split()
            time, color, bb = int(toks[0]), toks[1], toks[2]
            checks = []
            for tok in toks[3:]:
                e, uv = tok.split(":")
                u, v = uv.split("-")
                checks.append((int(e), int(u), int(v)))
            steps.append(Step(time, color, bb[0], tuple(checks), offset))
            offset += len(checks)
        elif head == "NOISE":
            toks = rest.split()
            kv = _kv(toks[3:])
            sites.append(
                NoiseSite(
                    int(toks[0]),
                    tuple(int(x) for x in kv["q"].split(",")),
                    toks[1],
                    float(toks[2]),
                    int(kv.get("m", -1)),
                )
            )
        elif head == "DETECTOR":
            meta, _, outs = rest.partition(" : ")
            kv = _kv(meta.split())
            dets.append(
                Detector(int(kv["f"]), kv["c"], kv["P"], int(kv["ti"]), int(kv["tf"]), _ints(outs), int(kv["ref"]))
            )
        elif head == "OBSERVABLE":
            meta, _, outs = rest.partition(" : ")
            kv = _kv(meta.split())
            obs.append(Observable(int(kv["loop"]), kv["P"], _ints(outs), int(kv["ref"])))
        else:
            raise ValueError(f"circuit file: unknown record {head!r}")
    if None in (family, qubits, prologue, epilogue):
        raise ValueError("circuit file: missing header records")
    return MeasurementCircuit(
        family, qubits, prologue, epilogue, tuple(steps), tuple(dets), tuple(obs), tuple(sites), noise
    )
