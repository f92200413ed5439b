"""Named boxes of the 2x2 scenario, flag boxes, and the vertex sets used as
local models by the cost LP."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .box import BoxError, BoxTable, SystemLayout, mix, tensor, to_fraction

ZERO = Fraction(0)
ONE = Fraction(1)
HALF = Fraction(1, 2)

LAYOUT_2X2 = SystemLayout.of([[(2, 2)], [(2, 2)]])
# Alice holds A and C, Bob holds B and D
LAYOUT_ABCD = SystemLayout.of([[(2, 2), (2, 2)], [(2, 2), (2, 2)]])


@dataclass(frozen=True, order=True)
class Label:
    """Index ``rst`` of the maximally nonlocal box a^b = xy ^ rx ^ sy ^ t."""

    r: int
    s: int
    t: int

    def __post_init__(self):
        if any(bit not in (0, 1) for bit in (self.r, self.s, self.t)):
            raise BoxError(f"label bits must be 0/1, got {self.r}{self.s}{self.t}")

    @classmethod
    def parse(cls, text) -> "Label":
        if isinstance(text, Label):
            return text
        if isinstance(text, (tuple, list)):
            return cls(*(int(b) for b in text))
        text = str(text).strip()
        if len(text) != 3 or set(text) - {"0", "1"}:
            raise BoxError(f"bad label {text!r}; expected three bits like '010'")
        return cls(int(text[0]), int(text[1]), int(text[2]))

    @property
    def negated(self) -> "Label":
        return Label(self.r, self.s, 1 - self.t)

    def __str__(self) -> str:
        return f"{self.r}{self.s}{self.t}"


ALL_LABELS: tuple[Label, ...] = tuple(Label(*bits) for bits in itertools.product((0, 1), repeat=3))


@dataclass(frozen=True)
class IsotropicSpec:
    label: Label
    alpha: Fraction

    def __post_init__(self):
        object.__setattr__(self, "label", Label.parse(self.label))
        alpha = to_fraction(self.alpha)
        object.__setattr__(self, "alpha", alpha)
        if not 0 <= alpha <= 1:
            raise BoxError(f"alpha must lie in [0, 1], got {alpha}")
        if alpha < HALF:
            warnings.warn(f"alpha={alpha} below 1/2: outside the range the bounds assume", stacklevel=3)

    def box(self) -> BoxTable:
        return isotropic(self.label, self.alpha)


def _parity_box(label: Label) -> BoxTable:
    r, s, t = label.r, label.s, label.t
    probs = np.full(LAYOUT_2X2.shape, ZERO, dtype=object)
    for x, y, a, b in itertools.product((0, 1), repeat=4):
        if a ^ b == (x & y) ^ (r & x) ^ (s & y) ^ t:
            probs[x, y, a, b] = HALF
    return BoxTable._trusted(LAYOUT_2X2, probs)


@lru_cache(maxsize=None)
def b_rst(label) -> BoxTable:
    return _parity_box(Label.parse(label))


def pr_box() -> BoxTable:
    return b_rst(Label(0, 0, 0))


def anti_pr_box() -> BoxTable:
    return b_rst(Label(0, 0, 1))


def uniform_box(layout=LAYOUT_2X2) -> BoxTable:
    layout = SystemLayout.of(layout)
    size = math.prod(layout.output_shape)
    return BoxTable._trusted(layout, np.full(layout.shape, Fraction(1, size), dtype=object))


def isotropic(label, alpha) -> BoxTable:
    """``alpha * B_rst + (1 - alpha) * B_rs(not t)``."""
    label = Label.parse(label)
    alpha = to_fraction(alpha)
    if not 0 <= alpha <= 1:
        raise BoxError(f"alpha must lie in [0, 1], got {alpha}")
    if alpha == 1:
        return b_rst(label)
    return mix([(alpha, b_rst(label)), (1 - alpha, b_rst(label.negated))])


def alpha_q(tolerance=Fraction(1, 10**9)) -> Fraction:
    """Small-denominator rational within ``tolerance`` of (2 + sqrt 2)/4."""
    tolerance = to_fraction(tolerance)
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    digits = 4
    while Fraction(1, 10**digits) > tolerance / 4:
        digits += 1
    scale = 10**digits
    # floor of sqrt(2) * scale, so |approx - alpha_q| < 1/(4*scale) <= tolerance/16
    approx = Fraction(2 * scale + math.isqrt(2 * scale * scale), 4 * scale)
    bound = 1
    while True:
        candidate = approx.limit_denominator(bound)
        if abs(candidate - approx) <= tolerance / 2:
            return candidate
        bound *= 2


def flag_box(j: int, n: int) -> BoxTable:
    """Unary-input box whose single output is deterministically ``j`` out of ``n``."""
    if not 0 <= j < n:
        raise BoxError(f"flag {j} outside alphabet of size {n}")
    probs = np.full((1, n), ZERO, dtype=object)
    probs[0, j] = ONE
    return BoxTable._trusted(SystemLayout.of([[(1, n)]]), probs)


def flag_pair(j: int, n: int) -> BoxTable:
    """``F^A(j) (x) F^B(j)`` on two sites."""
    return tensor(flag_box(j, n), flag_box(j, n))


# ----------------------------------------------------------------------------
# vertex sets


@dataclass(frozen=True)
class VertexSet:
    layout: SystemLayout
    vertices: tuple[BoxTable, ...]
    kind: str  # "local-deterministic" | "ns-extremal" | "lrns-product"

    def __len__(self) -> int:
        return len(self.vertices)

    def __iter__(self) -> Iterator[BoxTable]:
        return iter(self.vertices)

    def __getitem__(self, index: int) -> BoxTable:
        return self.vertices[index]

    def index(self, box: BoxTable) -> int:
        return self.vertices.index(box)

    def matrix(self) -> np.ndarray:
        """Vertices as columns of flattened tables."""
        return np.stack([v.probs.reshape(-1) for v in self.vertices], axis=1)


def _dedupe(boxes) -> tuple[BoxTable, ...]:
    seen, out = set(), []
    for b in boxes:
        key = b.key()
        if key not in seen:
            seen.add(key)
            out.append(b)
    return tuple(out)


def deterministic_box(layout, functions: Sequence[Sequence[int]]) -> BoxTable:
    """Each subsystem outputs ``functions[k][input_k]``; a product of local functions."""
    layout = SystemLayout.of(layout)
    subs = layout.subsystems
    if len(functions) != len(subs):
        raise BoxError("need one output function per subsystem")
    probs = np.full(layout.shape, ZERO, dtype=object)
    for inputs in layout.joint_inputs():
        outputs = tuple(functions[k][x] for k, x in enumerate(inputs))
        probs[inputs + outputs] = ONE
    return BoxTable._trusted(layout, probs)


def _all_functions(sub) -> list[tuple[int, ...]]:
    return list(itertools.product(range(sub.outputs), repeat=sub.inputs))


def local_deterministic_vertices(layout) -> VertexSet:
    """Every box where each subsystem's output is a fixed function of its own input."""
    layout = SystemLayout.of(layout)
    return _local_deterministic_vertices(layout)


@lru_cache(maxsize=None)
def _local_deterministic_vertices(layout: SystemLayout) -> VertexSet:
    per_sub = [_all_functions(s) for s in layout.subsystems]
    verts = tuple(deterministic_box(layout, fs) for fs in itertools.product(*per_sub))
    return VertexSet(layout, verts, "local-deterministic")


@lru_cache(maxsize=None)
def ns_extremal_vertices_2x2() -> VertexSet:
    """The 24 vertices of the 2x2 NS polytope: 16 deterministic plus the 8 B_rst."""
    verts = local_deterministic_vertices(LAYOUT_2X2).vertices + tuple(b_rst(l) for l in ALL_LABELS)
    return VertexSet(LAYOUT_2X2, _dedupe(verts), "ns-extremal")


def site_ns_vertices(site_layout) -> tuple[BoxTable, ...]:
    """Vertices of the fully-NS polytope of one site's subsystems.

    Supported cases: at most one subsystem with more than one input (every NS
    box is then a mixture of deterministic ones), or exactly two binary
    2-input subsystems (the 2x2 NS polytope, regrouped on one site).
    """
    site_layout = SystemLayout.of(site_layout)
    subs = site_layout.subsystems
    if sum(1 for s in subs if s.inputs > 1) <= 1:
        return local_deterministic_vertices(site_layout).vertices
    if len(subs) == 2 and all(s.inputs == 2 and s.outputs == 2 for s in subs):
        return tuple(v.relayout(site_layout) for v in ns_extremal_vertices_2x2())
    raise NotImplementedError(f"no NS vertex enumeration for site {site_layout}")


def lrns_product_vertices(layout=LAYOUT_ABCD) -> VertexSet:
    """Products across the two sites of per-site fully-NS vertices (576 for ABCD)."""
    layout = SystemLayout.of(layout)
    return _lrns_product_vertices(layout)


@lru_cache(maxsize=None)
def _lrns_product_vertices(layout: SystemLayout) -> VertexSet:
    if len(layout.sites) != 2:
        raise BoxError("LR_ns vertices need a bipartite layout")
    alice = site_ns_vertices(SystemLayout((layout.sites[0],)))
    bob = site_ns_vertices(SystemLayout((layout.sites[1],)))
    verts = tuple(tensor(a, b) for a in alice for b in bob)
    return VertexSet(layout, _dedupe(verts), "lrns-product")


def build_b_in(pairs: Sequence[tuple[IsotropicSpec, IsotropicSpec]], weights: Sequence) -> BoxTable:
    """``sum_i p_i B_i^alpha (AB) (x) B_i^beta (CD)`` with A, C on Alice's site."""
    if len(pairs) != len(weights) or not pairs:
        raise BoxError("need one weight per (alpha-box, beta-box) pair")
    members = []
    for (first, second), w in zip(pairs, weights):
        members.append((to_fraction(w), tensor(first.box(), second.box(), (0, 1))))
    return mix(members)


def b_in_for_labels(labels: Sequence, alpha=ONE, beta=ONE, weights: Sequence | None = None) -> BoxTable:
    """Equal-weight (by default) ``B_in`` for a list of labels sharing alpha and beta."""
    labels = [Label.parse(l) for l in labels]
    if weights is None:
        weights = [Fraction(1, len(labels))] * len(labels)
    pairs = [(IsotropicSpec(l, alpha), IsotropicSpec(l, beta)) for l in labels]
    return build_b_in(pairs, weights)
