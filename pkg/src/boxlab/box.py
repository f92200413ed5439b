"""Exact multi-subsystem boxes and their algebra.

A box assigns a probability distribution over joint outputs to every joint
input of a collection of subsystems.  Subsystems are grouped into sites (the
parties); the flat subsystem order is site by site, in layout order, and every
table is a numpy object array of :class:`~fractions.Fraction` with shape
``inputs + outputs`` so that C-order flattening is the mixed-radix row-major
order used for serialization.
"""

from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np


class BoxError(ValueError):
    """Base class for box-level contract violations."""


class MalformedTableError(BoxError):
    pass


class IncompatibleBoxesError(BoxError):
    pass


class SignalingError(BoxError):
    """Raised when an operation needs a non-signaling input and did not get one."""


def to_fraction(value) -> Fraction:
    """Exact conversion; floats are refused so that no rounding sneaks in."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (bool, float)) or isinstance(value, np.floating):
        raise TypeError(f"refusing inexact probability {value!r}")
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational")


def format_fraction(value: Fraction) -> str:
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class Subsystem:
    inputs: int
    outputs: int

    def __post_init__(self):
        if int(self.inputs) < 1 or int(self.outputs) < 1:
            raise MalformedTableError(f"cardinalities must be positive: {self}")


@dataclass(frozen=True)
class SystemLayout:
    sites: tuple[tuple[Subsystem, ...], ...]

    def __post_init__(self):
        sites = tuple(tuple(_as_subsystem(s) for s in site) for site in self.sites)
        if not sites or any(not site for site in sites):
            raise MalformedTableError("a layout needs at least one site and one subsystem per site")
        object.__setattr__(self, "sites", sites)

    @classmethod
    def of(cls, spec) -> "SystemLayout":
        """Build from nested ``[[(in, out), ...], ...]`` (or Subsystem objects)."""
        if isinstance(spec, SystemLayout):
            return spec
        return cls(tuple(tuple(_as_subsystem(s) for s in site) for site in spec))

    @property
    def subsystems(self) -> tuple[Subsystem, ...]:
        return tuple(s for site in self.sites for s in site)

    @property
    def n_subsystems(self) -> int:
        return sum(len(site) for site in self.sites)

    @property
    def input_shape(self) -> tuple[int, ...]:
        return tuple(s.inputs for s in self.subsystems)

    @property
    def output_shape(self) -> tuple[int, ...]:
        return tuple(s.outputs for s in self.subsystems)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.input_shape + self.output_shape

    def site_of(self, index: int) -> int:
        return self.site_indices_map()[index]

    def site_indices_map(self) -> tuple[int, ...]:
        return tuple(k for k, site in enumerate(self.sites) for _ in site)

    def site_members(self, site: int) -> tuple[int, ...]:
        start = sum(len(s) for s in self.sites[:site])
        return tuple(range(start, start + len(self.sites[site])))

    def joint_inputs(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*(range(c) for c in self.input_shape))

    def joint_outputs(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*(range(c) for c in self.output_shape))

    def restrict(self, keep: Iterable[int]) -> "SystemLayout":
        """Layout of the kept flat subsystems, dropping sites left empty."""
        keep = set(keep)
        sites, flat = [], 0
        for site in self.sites:
            kept = []
            for sub in site:
                if flat in keep:
                    kept.append(sub)
                flat += 1
            if kept:
                sites.append(tuple(kept))
        return SystemLayout(tuple(sites))

    def compatible(self, other: "SystemLayout") -> bool:
        return self == other

    def to_json(self) -> list:
        return [[{"in": s.inputs, "out": s.outputs} for s in site] for site in self.sites]

    def __str__(self) -> str:
        return " | ".join(
            " ".join(f"{s.inputs}x{s.outputs}" for s in site) for site in self.sites
        )


def _as_subsystem(spec) -> Subsystem:
    if isinstance(spec, Subsystem):
        return spec
    if isinstance(spec, Mapping):
        return Subsystem(int(spec["in"]), int(spec["out"]))
    inputs, outputs = spec
    return Subsystem(int(inputs), int(outputs))


_as_fraction_array = np.vectorize(to_fraction, otypes=[object])


class BoxTable:
    """Immutable exact conditional probability table ``P(outputs | inputs)``.

    Validity (non-negativity, normalization) is *not* enforced here so that
    invalid tables can be represented and reported; see :func:`validate_box`.
    """

    __slots__ = ("layout", "probs", "_key")

    def __init__(self, layout, probs):
        layout = SystemLayout.of(layout)
        arr = np.asarray(probs, dtype=object)
        if arr.shape != layout.shape:
            raise MalformedTableError(
                f"table shape {arr.shape} does not match layout shape {layout.shape}"
            )
        arr = _as_fraction_array(arr) if arr.size else arr
        arr = np.asarray(arr, dtype=object).reshape(layout.shape)
        arr.setflags(write=False)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "probs", arr)
        object.__setattr__(self, "_key", None)

    def __setattr__(self, name, value):
        raise AttributeError("BoxTable is immutable")

    @classmethod
    def from_function(cls, layout, fn) -> "BoxTable":
        """``fn(outputs, inputs)`` gives each probability."""
        layout = SystemLayout.of(layout)
        arr = np.empty(layout.shape, dtype=object)
        n = layout.n_subsystems
        for idx in itertools.product(*(range(c) for c in layout.shape)):
            arr[idx] = fn(idx[n:], idx[:n])
        return cls(layout, arr)

    @classmethod
    def _trusted(cls, layout: SystemLayout, arr: np.ndarray) -> "BoxTable":
        # skips conversion; caller guarantees Fraction/int entries of the right shape
        box = cls.__new__(cls)
        arr = np.asarray(arr, dtype=object)
        arr.setflags(write=False)
        object.__setattr__(box, "layout", layout)
        object.__setattr__(box, "probs", arr)
        object.__setattr__(box, "_key", None)
        return box

    @property
    def n_subsystems(self) -> int:
        return self.layout.n_subsystems

    def prob(self, outputs: Sequence[int], inputs: Sequence[int]) -> Fraction:
        return self.probs[tuple(inputs) + tuple(outputs)]

    def row(self, inputs: Sequence[int]) -> np.ndarray:
        return self.probs[tuple(inputs)]

    def support(self) -> frozenset:
        """Set of ``(outputs, inputs)`` pairs carrying positive probability."""
        n = self.n_subsystems
        return frozenset(
            (tuple(int(v) for v in idx[n:]), tuple(int(v) for v in idx[:n]))
            for idx in zip(*np.nonzero(self.probs > 0))
        )

    def relayout(self, layout) -> "BoxTable":
        """Regroup the same flat subsystems into different sites."""
        layout = SystemLayout.of(layout)
        if layout.subsystems != self.layout.subsystems:
            raise IncompatibleBoxesError("relayout must keep the flat subsystem list")
        return BoxTable._trusted(layout, self.probs)

    def key(self) -> tuple:
        if self._key is None:
            object.__setattr__(self, "_key", (self.layout, tuple(self.probs.flat)))
        return self._key

    def __eq__(self, other) -> bool:
        if not isinstance(other, BoxTable):
            return NotImplemented
        return self.layout == other.layout and bool(np.all(self.probs == other.probs))

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"BoxTable({self.layout})"


# ----------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    kind: str  # "negativity" | "normalization"
    inputs: tuple[int, ...]
    outputs: tuple[int, ...] | None
    value: Fraction


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_box(table: BoxTable) -> ValidationReport:
    if table.probs.shape != table.layout.shape:
        raise MalformedTableError("table shape does not match its layout")
    n = table.n_subsystems
    found = []
    for idx in zip(*np.nonzero(table.probs < 0)):
        idx = tuple(int(i) for i in idx)
        found.append(Violation("negativity", idx[:n], idx[n:], table.probs[idx]))
    for inputs in table.layout.joint_inputs():
        total = sum(table.probs[inputs].flat, Fraction(0))
        if total != 1:
            found.append(Violation("normalization", inputs, None, total))
    return ValidationReport(tuple(found))


# ----------------------------------------------------------------------------
# non-signaling


@dataclass(frozen=True)
class Bipartition:
    left: frozenset[int]
    right: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "left", frozenset(self.left))
        object.__setattr__(self, "right", frozenset(self.right))
        if not self.left or not self.right or self.left & self.right:
            raise BoxError("a cut needs two disjoint nonempty groups")

    @classmethod
    def split(cls, layout: SystemLayout, left: Iterable[int]) -> "Bipartition":
        left = frozenset(left)
        return cls(left, frozenset(range(layout.n_subsystems)) - left)

    def check(self, layout: SystemLayout) -> None:
        if self.left | self.right != frozenset(range(layout.n_subsystems)):
            raise BoxError(f"cut {self} does not cover the layout's subsystems")


@dataclass(frozen=True)
class ViolationWitness:
    """Receivers' marginal differs between two input assignments that only
    differ on the senders' inputs."""

    senders: tuple[int, ...]
    receivers: tuple[int, ...]
    inputs: tuple[int, ...]
    other_inputs: tuple[int, ...]
    receiver_outputs: tuple[int, ...]
    values: tuple[Fraction, Fraction]


@dataclass(frozen=True)
class NSResult:
    ok: bool
    witness: ViolationWitness | None = None

    def __bool__(self) -> bool:
        return self.ok


def _signal_witness(probs: np.ndarray, n: int, senders, receivers) -> ViolationWitness | None:
    senders = tuple(sorted(senders))
    receivers = tuple(sorted(receivers))
    marg = probs.sum(axis=tuple(n + s for s in senders), keepdims=True) if senders else probs
    ref = marg
    for s in senders:
        ref = ref.take([0], axis=s)
    diff = np.nonzero(marg != ref)
    if not len(diff[0]):
        return None
    idx = tuple(int(d[0]) for d in diff)
    inputs = idx[:n]
    other = tuple(0 if k in senders else v for k, v in enumerate(inputs))
    ref_idx = other + idx[n:]
    return ViolationWitness(
        senders=senders,
        receivers=receivers,
        inputs=inputs,
        other_inputs=other,
        receiver_outputs=tuple(idx[n + r] for r in receivers),
        values=(marg[idx], marg[ref_idx]),
    )


def _integer_table(probs: np.ndarray) -> tuple[np.ndarray, int]:
    """``probs * scale`` as integers (int64 when nothing can overflow)."""
    flat = probs.reshape(-1)
    scale = lcm(*{v.denominator for v in flat}) if flat.size else 1
    values = [v.numerator * (scale // v.denominator) for v in flat]
    if values and max(map(abs, values)) * len(values) < 2**62:
        return np.array(values, dtype=np.int64).reshape(probs.shape), scale
    ints = np.empty(len(values), dtype=object)
    ints[:] = values
    return ints.reshape(probs.shape), scale


def _fraction_table(ints: np.ndarray, scale: int) -> np.ndarray:
    """Inverse of :func:`_integer_table`: ``ints / scale`` as Fractions."""
    out = np.empty(ints.size, dtype=object)
    out[:] = [Fraction(int(v), scale) for v in ints.reshape(-1)]
    return out.reshape(ints.shape)


def _cut_witness(ints: np.ndarray, scale: int, n: int, cut: "Bipartition") -> ViolationWitness | None:
    for senders, receivers in ((cut.right, cut.left), (cut.left, cut.right)):
        witness = _signal_witness(ints, n, senders, receivers)
        if witness is not None:
            values = tuple(Fraction(int(v), scale) for v in witness.values)
            return dataclasses.replace(witness, values=values)
    return None


def is_nonsignaling(box: BoxTable, cut: Bipartition) -> NSResult:
    """Both marginal families of a cut: neither group's inputs move the other's marginal."""
    cut.check(box.layout)
    ints, scale = _integer_table(box.probs)
    witness = _cut_witness(ints, scale, box.n_subsystems, cut)
    return NSResult(True) if witness is None else NSResult(False, witness)


def all_cuts(layout: SystemLayout) -> Iterator[Bipartition]:
    """Every nontrivial bipartition of the subsystems, each listed once."""
    n = layout.n_subsystems
    rest = range(1, n)
    for size in range(0, n - 1):
        for extra in itertools.combinations(rest, size):
            yield Bipartition.split(layout, (0,) + extra)


def is_fully_nonsignaling(box: BoxTable, exhaustive: bool = False) -> NSResult:
    """Full non-signaling over every subsystem bipartition.

    By default only single-subsystem cuts are checked: if no single subsystem's
    input moves the marginal of all the others, changing a group's inputs one
    subsystem at a time leaves every group marginal fixed.  ``exhaustive``
    checks all ``2**(n-1) - 1`` cuts directly.
    """
    layout = box.layout
    n = layout.n_subsystems
    if n == 1:
        return NSResult(True)
    if exhaustive:
        cuts = all_cuts(layout)
    else:
        cuts = (Bipartition.split(layout, (k,)) for k in range(n))
    # exact integer arithmetic after one common rescaling; far cheaper than Fractions
    ints, scale = _integer_table(box.probs)
    for cut in cuts:
        witness = _cut_witness(ints, scale, n, cut)
        if witness is not None:
            return NSResult(False, witness)
    return NSResult(True)


# ----------------------------------------------------------------------------
# algebra


def _check_same_layout(boxes: Sequence[BoxTable]) -> SystemLayout:
    layout = boxes[0].layout
    for b in boxes[1:]:
        if not layout.compatible(b.layout):
            raise IncompatibleBoxesError(f"incompatible layouts {layout} and {b.layout}")
    return layout


def tensor(b1: BoxTable, b2: BoxTable, site_assignment: Sequence[int | None] | None = None) -> BoxTable:
    """Product box.

    ``site_assignment[k]`` names the site of ``b1`` that receives the
    subsystems of ``b2``'s site ``k`` (appended after ``b1``'s own); ``None``
    (or no assignment at all) makes it a new site after ``b1``'s sites.
    """
    l1, l2 = b1.layout, b2.layout
    if site_assignment is None:
        site_assignment = [None] * len(l2.sites)
    if len(site_assignment) != len(l2.sites):
        raise IncompatibleBoxesError("site assignment must name a target for every site of b2")
    n1, n2 = l1.n_subsystems, l2.n_subsystems
    merged: list[list[tuple[int, int]]] = [[(1, i) for i in l1.site_members(k)] for k in range(len(l1.sites))]
    for k, target in enumerate(site_assignment):
        members = [(2, i) for i in l2.site_members(k)]
        if target is None:
            merged.append(members)
        elif 0 <= target < len(l1.sites):
            merged[target].extend(members)
        else:
            raise IncompatibleBoxesError(f"site {target} does not exist in the first box")
    order = [m for site in merged for m in site]
    in_axes = [i if src == 1 else 2 * n1 + i for src, i in order]
    out_axes = [n1 + i if src == 1 else 2 * n1 + n2 + i for src, i in order]
    probs = _sparse_outer(b1.probs, b2.probs).transpose(in_axes + out_axes)
    subs = {1: l1.subsystems, 2: l2.subsystems}
    layout = SystemLayout(tuple(tuple(subs[src][i] for src, i in site) for site in merged))
    return BoxTable._trusted(layout, np.ascontiguousarray(probs))


def sparse_sum(tables: Iterable[np.ndarray]) -> np.ndarray:
    """Entrywise sum of same-shape Fraction tables, touching nonzero entries only."""
    total = None
    for t in tables:
        if total is None:
            total = np.full(t.shape, Fraction(0), dtype=object)
            flat = total.reshape(-1)
        src = t.reshape(-1)
        nz = np.flatnonzero(src != 0)
        flat[nz] = flat[nz] + src[nz]
    if total is None:
        raise BoxError("nothing to add")
    return total


def _sparse_outer(p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    """``np.multiply.outer`` that only multiplies nonzero pairs (tables are mostly zero)."""
    f1, f2 = p1.reshape(-1), p2.reshape(-1)
    nz1, nz2 = np.flatnonzero(f1 != 0), np.flatnonzero(f2 != 0)
    out = np.full((f1.size, f2.size), Fraction(0), dtype=object)
    out[np.ix_(nz1, nz2)] = np.multiply.outer(f1[nz1], f2[nz2])
    return out.reshape(p1.shape + p2.shape)


@dataclass(frozen=True)
class Ensemble:
    members: tuple[tuple[Fraction, BoxTable], ...]

    def __post_init__(self):
        members = tuple((to_fraction(w), b) for w, b in self.members)
        if not members:
            raise BoxError("empty ensemble")
        if any(w < 0 for w, _ in members):
            raise BoxError("ensemble weights must be non-negative")
        if sum(w for w, _ in members) != 1:
            raise BoxError("ensemble weights must sum to 1")
        _check_same_layout([b for _, b in members])
        object.__setattr__(self, "members", members)

    @classmethod
    def of(cls, pairs) -> "Ensemble":
        return cls(tuple((w, b) for w, b in pairs))

    @property
    def weights(self) -> tuple[Fraction, ...]:
        return tuple(w for w, _ in self.members)

    @property
    def boxes(self) -> tuple[BoxTable, ...]:
        return tuple(b for _, b in self.members)

    def __len__(self) -> int:
        return len(self.members)


def mix(ens: Ensemble | Iterable) -> BoxTable:
    if not isinstance(ens, Ensemble):
        ens = Ensemble.of(ens)
    layout = ens.members[0][1].layout
    total = np.full(ens.members[0][1].probs.shape, Fraction(0), dtype=object)
    flat = total.reshape(-1)
    for w, b in ens.members:
        if w == 0:
            continue
        src = b.probs.reshape(-1)
        nz = np.flatnonzero(src != 0)
        flat[nz] = flat[nz] + w * src[nz]
    return BoxTable._trusted(layout, total)


def trace_out(box: BoxTable, subsystems: Iterable[int]) -> BoxTable:
    """Marginal on the remaining subsystems.

    The traced inputs are fixed to 0 and their outputs summed; every other
    value of the traced inputs must give the same result, otherwise the box
    signals from the traced part and the marginal is not defined.
    """
    traced = sorted(set(subsystems))
    n = box.n_subsystems
    if any(not 0 <= t < n for t in traced):
        raise BoxError(f"no such subsystems {traced}")
    keep = [k for k in range(n) if k not in traced]
    if not keep:
        raise BoxError("cannot trace out every subsystem")
    summed = box.probs.sum(axis=tuple(n + t for t in traced))
    by_traced_input = np.moveaxis(summed, traced, range(len(traced)))
    rows = by_traced_input.reshape((-1,) + by_traced_input.shape[len(traced):])
    first = rows[0]
    for other in rows[1:]:
        if np.any(other != first):
            raise SignalingError("marginal depends on the traced inputs; box is signaling")
    return BoxTable._trusted(box.layout.restrict(keep), np.ascontiguousarray(first))


def measure(box: BoxTable, inputs: Sequence[int]) -> dict[tuple[int, ...], Fraction]:
    """Outcome distribution (nonzero entries only) for one joint input."""
    inputs = tuple(int(i) for i in inputs)
    shape = box.layout.input_shape
    if len(inputs) != len(shape) or any(not 0 <= i < c for i, c in zip(inputs, shape)):
        raise BoxError(f"input {inputs} out of range for layout {box.layout}")
    row = box.probs[inputs]
    return {
        tuple(int(v) for v in idx): row[idx]
        for idx in itertools.product(*(range(c) for c in row.shape))
        if row[idx] != 0
    }


def variational_distance(p: Mapping, q: Mapping) -> Fraction:
    """Unnormalized L1 distance ``sum |p - q|`` between two outcome distributions."""
    keys = set(p) | set(q)
    lengths = {len(k) if isinstance(k, tuple) else 1 for k in keys}
    if len(lengths) > 1:
        raise BoxError("distributions live on different outcome spaces")
    return sum((abs(Fraction(p.get(k, 0)) - Fraction(q.get(k, 0))) for k in keys), Fraction(0))
