"""Operations on boxes: local relabelings (twirl, O_j), control-O_j,
comparing operations, and the post-processing used to bound discrimination.

Relabelings act subsystem by subsystem: the new box at (x, a) reads the old box
at (in_perm[x], out_perm[x][a]).  Every map here is an involution or a product
of commuting flips, so pre- versus post-composition never matters except where
noted for the twirl.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .box import (
    BoxError,
    BoxTable,
    Subsystem,
    SystemLayout,
    _fraction_table,
    _integer_table,
    mix,
    tensor,
    trace_out,
    to_fraction,
)
from .catalog import (
    ALL_LABELS,
    HALF,
    LAYOUT_2X2,
    ONE,
    ZERO,
    Label,
    b_rst,
    flag_pair,
    isotropic,
)


# ----------------------------------------------------------------------------
# relabelings


@dataclass(frozen=True)
class SubsystemMap:
    """Input permutation and input-dependent output permutation of one subsystem."""

    in_perm: tuple[int, ...]
    out_perm: tuple[tuple[int, ...], ...]  # out_perm[x][a]

    def __post_init__(self):
        n_in = len(self.in_perm)
        if sorted(self.in_perm) != list(range(n_in)) or len(self.out_perm) != n_in:
            raise BoxError("input map must be a permutation with one output map per input")
        for perm in self.out_perm:
            if sorted(perm) != list(range(len(perm))):
                raise BoxError("output maps must be permutations")

    @classmethod
    def flips(cls, x_flip: int = 0, a_flip=0) -> "SubsystemMap":
        """Binary subsystem: x -> x ^ x_flip, a -> a ^ a_flip(x) (a_flip int or per-input tuple)."""
        if isinstance(a_flip, int):
            a_flip = (a_flip, a_flip)
        return cls((x_flip, 1 - x_flip), tuple((f, 1 - f) for f in a_flip))

    @property
    def is_identity(self) -> bool:
        return self.in_perm == tuple(range(len(self.in_perm))) and all(
            p == tuple(range(len(p))) for p in self.out_perm
        )


def _apply_subsystem_map(probs: np.ndarray, n: int, k: int, m: SubsystemMap) -> np.ndarray:
    if probs.shape[k] != len(m.in_perm) or probs.shape[n + k] != len(m.out_perm[0]):
        raise BoxError(f"relabeling of subsystem {k} does not match its cardinalities")
    moved = np.moveaxis(probs, (k, n + k), (0, 1))
    xs = np.array([[m.in_perm[x]] * len(m.out_perm[x]) for x in range(len(m.in_perm))])
    As = np.array([list(m.out_perm[x]) for x in range(len(m.in_perm))])
    return np.moveaxis(moved[xs, As], (0, 1), (k, n + k))


@dataclass(frozen=True)
class Relabeling:
    """Local relabeling: one :class:`SubsystemMap` per acted subsystem."""

    maps: Mapping[int, SubsystemMap] = field(default_factory=dict)

    def apply_array(self, probs: np.ndarray, n: int) -> np.ndarray:
        for k, m in sorted(self.maps.items()):
            if not m.is_identity:
                probs = _apply_subsystem_map(probs, n, k, m)
        return probs

    def apply(self, box: BoxTable) -> BoxTable:
        n = box.n_subsystems
        if any(not 0 <= k < n for k in self.maps):
            raise BoxError("relabeling names a subsystem the box does not have")
        return BoxTable._trusted(box.layout, np.ascontiguousarray(self.apply_array(box.probs, n)))

    def restricted(self, members: Sequence[int]) -> "Relabeling":
        """The part acting on ``members``, reindexed to positions within them."""
        return Relabeling({i: self.maps[k] for i, k in enumerate(members) if k in self.maps})


def _check_binary_pair(box: BoxTable, acted: Sequence[int]) -> tuple[int, int]:
    alice, bob = acted
    subs = box.layout.subsystems
    for k in (alice, bob):
        if not 0 <= k < len(subs) or subs[k] != Subsystem(2, 2):
            raise BoxError(f"subsystem {k} is not a binary two-input subsystem")
    sites = box.layout.site_indices_map()
    if sites[alice] == sites[bob]:
        raise BoxError("the acted pair must span the two sites")
    return alice, bob


def twirl_relabelings(acted: Sequence[int] = (0, 1)) -> list[Relabeling]:
    """The 8 relabelings averaged by the twirl, indexed by (delta, gamma, theta).

    Reading pinned by the fixed points: the new box at (a, b | x, y) is the old
    one at (a ^ gamma x ^ delta gamma ^ theta, b ^ delta y ^ theta | x ^ delta,
    y ^ gamma), with x and y the new inputs.  This keeps B_000 and B_001 fixed
    and sends the other six B_rst to the uniform box.
    """
    alice, bob = acted
    out = []
    for delta, gamma, theta in itertools.product((0, 1), repeat=3):
        a_flip = tuple((gamma * x) ^ (delta * gamma) ^ theta for x in (0, 1))
        b_flip = tuple((delta * y) ^ theta for y in (0, 1))
        out.append(Relabeling({alice: SubsystemMap.flips(delta, a_flip), bob: SubsystemMap.flips(gamma, b_flip)}))
    return out


def twirl(box: BoxTable, acted: Sequence[int] | None = None) -> BoxTable:
    """Uniform average of the 8 twirl relabelings on a 2x2 pair (default: the whole 2x2 box)."""
    if acted is None:
        if not box.layout.compatible(LAYOUT_2X2):
            raise BoxError(f"twirl needs a 2x2 box or an explicit acted pair, got layout {box.layout}")
        acted = (0, 1)
    acted = _check_binary_pair(box, acted)
    n = box.n_subsystems
    # relabelings only move entries, so work on one integer rescaling of the table
    ints, scale = _integer_table(box.probs)
    total = sum(r.apply_array(ints, n) for r in twirl_relabelings(acted))
    return BoxTable._trusted(box.layout, np.ascontiguousarray(_fraction_table(total, 8 * scale)))


def o_flips(label) -> tuple[int, int, int]:
    """(x_flip, y_flip, b_flip) of O_j for f(j) = rst.

    Chosen so that O_j(B_r's't') = B_(r^r')(s^s')(r's ^ s'r ^ t ^ t'): flipping x
    adds s to the constant term, flipping y adds r, and flipping both adds rs
    on top, which the b-flip t ^ rs cancels.
    """
    label = Label.parse(label)
    return label.s, label.r, label.t ^ (label.r & label.s)


def o_rotation(label, acted: Sequence[int] = (0, 1)) -> Relabeling:
    x_flip, y_flip, b_flip = o_flips(label)
    alice, bob = acted
    return Relabeling({alice: SubsystemMap.flips(x_flip, 0), bob: SubsystemMap.flips(y_flip, b_flip)})


def apply_o(label, box: BoxTable, acted: Sequence[int] | None = None) -> BoxTable:
    if acted is None:
        if not box.layout.compatible(LAYOUT_2X2):
            raise BoxError(f"O_j needs a 2x2 box or an explicit acted pair, got layout {box.layout}")
        acted = (0, 1)
    acted = _check_binary_pair(box, acted)
    return o_rotation(label, acted).apply(box)


def rotated_label(j_label, i_label) -> Label:
    """Label arithmetic j|i for O_j applied to B_i."""
    j, i = Label.parse(j_label), Label.parse(i_label)
    return Label(j.r ^ i.r, j.s ^ i.s, (i.r & j.s) ^ (i.s & j.r) ^ j.t ^ i.t)


# ----------------------------------------------------------------------------
# control-O_j


@dataclass(frozen=True)
class ControlRotation:
    """Flag value j selects the rotation O_j with f(j) = labels[j]."""

    labels: tuple[Label, ...]

    def __post_init__(self):
        labels = tuple(Label.parse(l) for l in self.labels)
        if not labels:
            raise BoxError("need at least one flag value")
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return len(self.labels)

    def site_maps(self, site: int) -> list[SubsystemMap]:
        """Per flag value, the map on this site's target subsystem."""
        maps = []
        for label in self.labels:
            x_flip, y_flip, b_flip = o_flips(label)
            maps.append(SubsystemMap.flips(x_flip, 0) if site == 0 else SubsystemMap.flips(y_flip, b_flip))
        return maps


def _controlled(probs: np.ndarray, n: int, flag: int, target: int, maps: Sequence[SubsystemMap]) -> np.ndarray:
    """Apply maps[e] to ``target`` on the slice where ``flag`` outputs e (flag input is unary)."""
    out = probs.copy()
    for e, m in enumerate(maps):
        if m.is_identity:
            continue
        sl = [slice(None)] * probs.ndim
        sl[n + flag] = slice(e, e + 1)
        out[tuple(sl)] = _apply_subsystem_map(probs[tuple(sl)], n, target, m)
    return out


def _composite_roles(layout: SystemLayout, n_flags: int) -> None:
    flag = Subsystem(1, n_flags)
    if len(layout.sites) != 2 or any(len(site) != 2 or site[0] != flag for site in layout.sites):
        raise BoxError(
            f"expected one {n_flags}-valued flag followed by one target per site, got {layout}"
        )
    if any(site[1] != Subsystem(2, 2) for site in layout.sites):
        raise BoxError("control-O_j targets must be binary two-input subsystems")


def control_o_site(side_box: BoxTable, site: int, rotation: ControlRotation) -> BoxTable:
    """One party's half of control-O_j on a single-site (flag, target) box."""
    if side_box.n_subsystems != 2 or side_box.layout.subsystems[0] != Subsystem(1, rotation.n):
        raise BoxError("side box must hold the flag first and the target second")
    probs = _controlled(side_box.probs, 2, 0, 1, rotation.site_maps(site))
    return BoxTable._trusted(side_box.layout, probs)


def control_o(composite: BoxTable, rotation: ControlRotation, strict: bool = True) -> BoxTable:
    """Rotate the target by O_j where j is the flag value.

    Layout ``[[flag, C], [flag, D]]``.  Alice flips her target input according
    to her own flag, Bob his input and output according to his.  With
    ``strict`` the two flags must agree with certainty (the output form of a
    discriminating operation).
    """
    _composite_roles(composite.layout, rotation.n)
    n = 4
    if strict:
        flags = composite.probs[0, 0, 0, 0].sum(axis=(1, 3))  # (e, f) at all-zero target inputs
        for e, f in zip(*np.nonzero(flags != 0)):
            if e != f:
                raise BoxError(f"flags disagree with probability {flags[e, f]} at (e, f) = ({e}, {f})")
    probs = _controlled(composite.probs, n, 0, 1, rotation.site_maps(0))
    probs = _controlled(probs, n, 2, 3, rotation.site_maps(1))
    return BoxTable._trusted(composite.layout, np.ascontiguousarray(probs))


# ----------------------------------------------------------------------------
# comparing operations


@dataclass(frozen=True)
class ComparingOperation:
    """Measure (i, j), pool the outcome pair into class k, emit flags k on both sides."""

    measurement: tuple[int, int]
    partition: tuple[frozenset, ...]
    n_flags: int | None = None

    def __post_init__(self):
        meas = tuple(int(v) for v in self.measurement)
        parts = tuple(frozenset(tuple(int(v) for v in pair) for pair in block) for block in self.partition)
        if len(meas) != 2:
            raise BoxError("measurement must be a pair of inputs")
        seen = set()
        for block in parts:
            if seen & block:
                raise BoxError("partition blocks overlap")
            seen |= block
        n_flags = len(parts) if self.n_flags is None else int(self.n_flags)
        if n_flags < len(parts):
            raise BoxError("fewer flags than partition blocks")
        object.__setattr__(self, "measurement", meas)
        object.__setattr__(self, "partition", parts)
        object.__setattr__(self, "n_flags", n_flags)

    @classmethod
    def of(cls, measurement, partition, n_flags=None) -> "ComparingOperation":
        return cls(tuple(measurement), tuple(frozenset(map(tuple, b)) for b in partition), n_flags)

    def check_against(self, alice: Subsystem, bob: Subsystem) -> None:
        i, j = self.measurement
        if not (0 <= i < alice.inputs and 0 <= j < bob.inputs):
            raise BoxError(f"measurement {self.measurement} out of range")
        space = set(itertools.product(range(alice.outputs), range(bob.outputs)))
        covered = set().union(*self.partition) if self.partition else set()
        if covered != space:
            missing = sorted(space - covered)
            extra = sorted(covered - space)
            raise BoxError(f"partition does not cover the outcome pairs (missing {missing}, unknown {extra})")

    def block_of(self, a: int, b: int) -> int:
        for k, block in enumerate(self.partition):
            if (a, b) in block:
                return k
        raise BoxError(f"outcome {(a, b)} not in any block")


def comparing_apply_tensored(op: ComparingOperation, box: BoxTable, acted: Sequence[int]) -> BoxTable:
    """Lambda on the acted (Alice, Bob) pair, identity elsewhere; the pair is
    replaced in place by the two flag subsystems."""
    alice, bob = (int(v) for v in acted)
    layout = box.layout
    subs = layout.subsystems
    n = len(subs)
    if not (0 <= alice < n and 0 <= bob < n) or alice == bob:
        raise BoxError(f"bad acted pair {acted}")
    sites = layout.site_indices_map()
    if sites[alice] == sites[bob]:
        raise BoxError("the acted pair must span two sites")
    op.check_against(subs[alice], subs[bob])
    i, j = op.measurement
    moved = np.moveaxis(box.probs, (alice, bob, n + alice, n + bob), (0, 1, 2, 3))
    sel = moved[i, j]
    rest_shape = sel.shape[2:]
    out = np.full((1, 1, op.n_flags, op.n_flags) + rest_shape, ZERO, dtype=object)
    for k, block in enumerate(op.partition):
        acc = np.full(rest_shape, ZERO, dtype=object)
        for a, b in sorted(block):
            acc = acc + sel[a, b]
        out[0, 0, k, k] = acc
    out = np.moveaxis(out, (0, 1, 2, 3), (alice, bob, n + alice, n + bob))
    flag = Subsystem(1, op.n_flags)
    new_sites, flat = [], 0
    for site in layout.sites:
        row = []
        for sub in site:
            row.append(flag if flat in (alice, bob) else sub)
            flat += 1
        new_sites.append(tuple(row))
    return BoxTable._trusted(SystemLayout(tuple(new_sites)), np.ascontiguousarray(out))


def comparing_apply(op: ComparingOperation, box: BoxTable) -> BoxTable:
    if len(box.layout.sites) != 2 or box.n_subsystems != 2:
        raise BoxError("comparing_apply acts on a bipartite box with one subsystem per site")
    return comparing_apply_tensored(op, box, (0, 1))


def example_comparing_op() -> ComparingOperation:
    """Measure (1, 1); class 0 is a != b, class 1 is a = b."""
    return ComparingOperation.of((1, 1), [[(0, 1), (1, 0)], [(0, 0), (1, 1)]])


# ----------------------------------------------------------------------------
# discrimination post-processing


def _as_matrix(p_joint) -> list[list[Fraction]]:
    rows = [[to_fraction(v) for v in row] for row in p_joint]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise BoxError("p_joint must be square (hypothesis i by guess j)")
    if any(v < 0 for r in rows for v in r) or sum(sum(r) for r in rows) != 1:
        raise BoxError("p_joint must be a joint probability distribution")
    return rows


def out_box(p_joint, labels, betas) -> BoxTable:
    """sum_ij p(i, j) F(j) (x) F(j) (x) B_i^{beta_i}, flags first on each site."""
    P = _as_matrix(p_joint)
    labels = [Label.parse(l) for l in labels]
    betas = [to_fraction(b) for b in betas]
    n = len(P)
    if len(labels) != n or len(betas) != n:
        raise BoxError("need one label and one beta per hypothesis")
    members = []
    for i, j in itertools.product(range(n), repeat=2):
        if P[i][j]:
            members.append((P[i][j], tensor(flag_pair(j, n), isotropic(labels[i], betas[i]), (0, 1))))
    return mix(members)


def isotropic_parameter(box: BoxTable) -> Fraction:
    """q with box = q B_000 + (1 - q) B_001; error if the box is off that line."""
    if not box.layout.compatible(LAYOUT_2X2):
        raise BoxError("not a 2x2 box")
    q = box.probs[0, 0, 0, 0] + box.probs[0, 0, 1, 1]
    expected = q * b_rst("000").probs + (1 - q) * b_rst("001").probs
    if np.any(expected != box.probs):
        raise BoxError("box is not on the B_000 - B_001 line")
    return q


def theorem1_pipeline(b_out: BoxTable, labels) -> tuple[Fraction, BoxTable]:
    """Control-O_j on the target, twirl it, trace out the flags."""
    rotation = ControlRotation(tuple(labels))
    rotated = control_o(b_out, rotation)
    twirled = twirl(rotated, acted=(1, 3))
    final = trace_out(twirled, (0, 2))
    return isotropic_parameter(final), final


def b000_coefficient(p_joint, labels, betas) -> Fraction:
    """Weight of B_000 after the post-processing, summed term by term."""
    P = _as_matrix(p_joint)
    labels = [Label.parse(l) for l in labels]
    betas = [to_fraction(b) for b in betas]
    n = len(P)
    q = sum((P[i][i] * betas[i] for i in range(n)), ZERO)
    for i, j in itertools.product(range(n), repeat=2):
        if i == j:
            continue
        ji = rotated_label(labels[j], labels[i])
        if ji == Label(0, 0, 0):
            q += P[i][j] * betas[i]
        elif ji == Label(0, 0, 1):
            q += P[i][j] * (1 - betas[i])
        else:
            q += P[i][j] * HALF
    return q


def coefficient_floor(p_joint, betas) -> Fraction:
    """sum_i p(i, i)(beta_i + max beta - 1) + (1 - max beta)."""
    P = _as_matrix(p_joint)
    betas = [to_fraction(b) for b in betas]
    top = max(betas)
    return sum((P[i][i] * (betas[i] + top - 1) for i in range(len(P))), ZERO) + (1 - top)


def success_probability(p_joint) -> Fraction:
    P = _as_matrix(p_joint)
    return sum((P[i][i] for i in range(len(P))), ZERO)
