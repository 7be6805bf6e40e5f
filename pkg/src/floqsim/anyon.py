"""Color-code boson algebra and the schedule compatibility rule.

The nine bosons of the color code form a 3x3 table: rows are Pauli types
(x, y, z) and columns are colours (r, g, b).  Two distinct bosons sharing a
row or a column fuse to the third boson of that line and braid trivially;
bosons sharing neither fuse to a fermion and braid with a -1.

Measuring the checks labelled by boson ``a`` condenses ``a``.  Bosons on
``a``'s row or column stay deconfined (D), the other four become confined
(C).  A schedule step ``a -> b`` is safe iff ``b`` is confined under ``a``,
i.e. ``b`` differs from ``a`` in both colour and Pauli type.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

COLORS = ("r", "g", "b")
PAULIS = ("x", "y", "z")


@dataclass(frozen=True, order=True)
class Boson:
    color: str
    pauli: str

    def __post_init__(self) -> None:
        if self.color not in COLORS or self.pauli not in PAULIS:
            raise ValueError(f"not a color-code boson: {self.color}{self.pauli}")

    def __str__(self) -> str:
        return self.color + self.pauli

    @classmethod
    def parse(cls, label: str) -> "Boson":
        label = label.strip().lower()
        if len(label) != 2:
            raise ValueError(f"boson label must look like 'rx', got {label!r}")
        return cls(label[0], label[1])


@dataclass(frozen=True)
class Vacuum:
    def __str__(self) -> str:
        return "1"


@dataclass(frozen=True)
class Composite:
    """Fermionic fusion product of two bosons in different rows and columns."""

    parts: frozenset

    def __str__(self) -> str:
        return "(" + "*".join(sorted(str(p) for p in self.parts)) + ")"


VACUUM = Vacuum()
Anyon = Union[Boson, Vacuum, Composite]

ALL_BOSONS = tuple(Boson(c, p) for p in PAULIS for c in COLORS)


def _third(options: tuple[str, ...], a: str, b: str) -> str:
    return next(x for x in options if x not in (a, b))


def _as_boson(x: Boson | str) -> Boson:
    return x if isinstance(x, Boson) else Boson.parse(x)


def fuse(a: Boson | str, b: Boson | str) -> Anyon:
    a, b = _as_boson(a), _as_boson(b)
    if a == b:
        return VACUUM
    if a.pauli == b.pauli:
        return Boson(_third(COLORS, a.color, b.color), a.pauli)
    if a.color == b.color:
        return Boson(a.color, _third(PAULIS, a.pauli, b.pauli))
    return Composite(frozenset((a, b)))


def monodromy(a: Boson | str, b: Boson | str) -> int:
    """Braiding sign M_{a,b}: +1 on a shared row/column, -1 otherwise.

    For ``a == b`` this returns +1 (every table entry is a boson).
    """
    a, b = _as_boson(a), _as_boson(b)
    if a.pauli == b.pauli or a.color == b.color:
        return 1
    return -1


@dataclass(frozen=True)
class CondensationTable:
    condensed: Boson
    status: dict  # Boson -> "V" | "D" | "C"

    def with_status(self, s: str) -> tuple[Boson, ...]:
        return tuple(b for b in ALL_BOSONS if self.status[b] == s)


def classify(condensed: Boson | str) -> CondensationTable:
    a = _as_boson(condensed)
    status = {}
    for b in ALL_BOSONS:
        if b == a:
            status[b] = "V"
        elif b.pauli == a.pauli or b.color == a.color:
            status[b] = "D"
        else:
            status[b] = "C"
    return CondensationTable(a, status)


def validate_schedule(seq: Iterable[Boson | str]) -> list[str]:
    """Check every cyclic transition a -> b has b confined under a.

    Returns an empty list when the schedule is safe, else one entry per
    offending transition.
    """
    bs = [_as_boson(x) for x in seq]
    if not bs:
        raise ValueError("schedule must be non-empty")
    report = []
    n = len(bs)
    for i in range(n):
        a, b = bs[i], bs[(i + 1) % n]
        kind = classify(a).status[b]
        if kind == "V":
            report.append(f"step {i}->{(i + 1) % n}: {b} repeats {a} (V, condensed again)")
        elif kind == "D":
            why = "same Pauli row" if a.pauli == b.pauli else "same color column"
            report.append(
                f"step {i}->{(i + 1) % n}: {b} deconfined under {a} ({why}; logical erasure risk)"
            )
    return report


HCF_SEQUENCE = tuple(Boson.parse(s) for s in ("rx", "gz", "bx", "rz", "gx", "bz"))
HF_SEQUENCE = tuple(Boson.parse(s) for s in ("rx", "gy", "bz"))
