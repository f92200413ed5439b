"""Bounds on discriminating isotropic boxes, and exact distinguishers for pairs
of boxes (Helstrom-style, perfect, conclusive), with the extremality and
support tools they rely on."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .box import (
    BoxError,
    BoxTable,
    IncompatibleBoxesError,
    measure,
    variational_distance,
    to_fraction,
)
from .catalog import (
    ALL_LABELS,
    HALF,
    ONE,
    ZERO,
    IsotropicSpec,
    Label,
    build_b_in,
)
from .cost import CostProblem, batch_costs, cost_of, local_model, ns_equalities
from .simplex import rank
from .transforms import ComparingOperation, comparing_apply

FORMULAS = ("theorem1", "corollary-alpha", "corollary-maxflags")


@dataclass(frozen=True)
class DiscriminationScenario:
    labels: tuple[Label, ...]
    weights: tuple[Fraction, ...]
    alphas: tuple[Fraction, ...]
    betas: tuple[Fraction, ...]

    def __post_init__(self):
        labels = tuple(Label.parse(l) for l in self.labels)
        n = len(labels)
        cast = lambda seq: tuple(to_fraction(v) for v in seq)
        weights, alphas, betas = cast(self.weights), cast(self.alphas), cast(self.betas)
        if not n or not (len(weights) == len(alphas) == len(betas) == n):
            raise BoxError("need one weight, alpha and beta per box")
        if any(w < 0 for w in weights) or sum(weights) != 1:
            raise BoxError("weights must form a probability distribution")
        for name, seq in (("alpha", alphas), ("beta", betas)):
            if any(not HALF <= v <= 1 for v in seq):
                raise BoxError(f"every {name} must lie in [1/2, 1]")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "betas", betas)

    @classmethod
    def uniform(cls, labels, alpha=ONE, beta=ONE) -> "DiscriminationScenario":
        n = len(labels)
        return cls(tuple(labels), (Fraction(1, n),) * n, (to_fraction(alpha),) * n, (to_fraction(beta),) * n)

    @property
    def n(self) -> int:
        return len(self.labels)

    def b_in(self) -> BoxTable:
        pairs = [(IsotropicSpec(l, a), IsotropicSpec(l, b)) for l, a, b in zip(self.labels, self.alphas, self.betas)]
        return build_b_in(pairs, self.weights)


@dataclass(frozen=True)
class BoundReport:
    bound: Fraction
    cost_used: Fraction
    formula: str
    model: str
    success_bound: Fraction | None = None  # bound on p_s when it can be isolated


def _cost(box: BoxTable, model: str) -> Fraction:
    return cost_of(box, local_model(model, box.layout))


def theorem1_bound(scenario: DiscriminationScenario, model: str = "lrns576", cost: Fraction | None = None) -> BoundReport:
    """Right-hand side (C + 3)/4 + max beta - 1; with a common beta > 1/2 the
    left side is p_s (2 beta - 1), which isolates a bound on p_s."""
    C = _cost(scenario.b_in(), model) if cost is None else cost
    top = max(scenario.betas)
    rhs = (C + 3) / 4 + top - 1
    success = None
    if len(set(scenario.betas)) == 1 and top > HALF:
        success = rhs / (2 * top - 1)
    formula = "corollary-maxflags" if all(b == 1 for b in scenario.betas) else "theorem1"
    return BoundReport(rhs, C, formula, model, success)


def corollary_alpha_formula(cost: Fraction, alpha: Fraction) -> Fraction:
    alpha = to_fraction(alpha)
    if alpha <= HALF:
        raise BoxError("the alpha bound is undefined at alpha <= 1/2 (division by zero at 1/2)")
    return (cost - 1 + 4 * alpha) / (4 * (2 * alpha - 1))


def corollary_alpha_bound(labels, alpha, weights=None, model: str = "lrns576") -> BoundReport:
    alpha = to_fraction(alpha)
    if alpha <= HALF:
        raise BoxError("the alpha bound is undefined at alpha <= 1/2 (division by zero at 1/2)")
    labels = tuple(labels)
    n = len(labels)
    weights = (Fraction(1, n),) * n if weights is None else tuple(weights)
    scen = DiscriminationScenario(labels, weights, (alpha,) * n, (alpha,) * n)
    C = _cost(scen.b_in(), model)
    value = corollary_alpha_formula(C, alpha)
    return BoundReport(value, C, "corollary-alpha", model, value)


def maxflags_formula(cost: Fraction) -> Fraction:
    return (cost + 3) / 4


@dataclass(frozen=True)
class SweepRow:
    labels: tuple[Label, ...]
    cost: Fraction
    bound: Fraction


@dataclass(frozen=True)
class SweepResult:
    k: int
    alpha: Fraction
    model: str
    rows: tuple[SweepRow, ...]
    aggregation: str = "min"

    @property
    def min_bound(self) -> Fraction:
        return min(r.bound for r in self.rows)

    @property
    def max_bound(self) -> Fraction:
        return max(r.bound for r in self.rows)

    @property
    def aggregate(self) -> Fraction:
        return self.min_bound if self.aggregation == "min" else self.max_bound


def sweep_ensembles(k: int) -> list[tuple[Label, ...]]:
    if not 2 <= k <= 8:
        raise BoxError("k must lie between 2 and 8")
    return list(itertools.combinations(ALL_LABELS, k))


def sweep_b_in(labels: Sequence[Label], alpha) -> BoxTable:
    return DiscriminationScenario.uniform(labels, alpha, ONE).b_in()


def universal_bound_sweep(k: int, alpha=ONE, aggregation: str = "min", model: str = "lrns576",
                          workers: int | None = None) -> SweepResult:
    """Every equal-weight k-subset of the eight B^alpha_rst, flags at beta = 1,
    bound (C + 3)/4; rows in lexicographic label order."""
    if aggregation not in ("min", "max"):
        raise BoxError("aggregation must be 'min' or 'max'")
    alpha = to_fraction(alpha)
    ensembles = sweep_ensembles(k)
    costs = batch_costs([sweep_b_in(e, alpha) for e in ensembles], model, workers)
    rows = tuple(SweepRow(e, c, maxflags_formula(c)) for e, c in zip(ensembles, costs))
    return SweepResult(k, alpha, model, rows, aggregation)


def simulate_discriminator(op: ComparingOperation, scenario: DiscriminationScenario) -> list[list[Fraction]]:
    """p(i, j): prior of box i times the weight of flag pair (j, j) in its image."""
    n = scenario.n
    if op.n_flags != n:
        raise BoxError(f"operation emits {op.n_flags} flags for {n} hypotheses")
    P = []
    for label, w, a in zip(scenario.labels, scenario.weights, scenario.alphas):
        image = comparing_apply(op, IsotropicSpec(label, a).box())
        P.append([w * image.probs[0, 0, j, j] for j in range(n)])
    return P


# ----------------------------------------------------------------------------
# pairwise distinguishers


def _check_pair(x1: BoxTable, x2: BoxTable) -> None:
    if not x1.layout.compatible(x2.layout):
        raise IncompatibleBoxesError(f"boxes live on different layouts: {x1.layout} vs {x2.layout}")


@dataclass(frozen=True)
class HelstromResult:
    bound: Fraction
    measurement: tuple[int, ...]
    distance: Fraction
    operation: ComparingOperation | None


def helstrom_lower_bound(x1: BoxTable, x2: BoxTable) -> HelstromResult:
    """1/2 + max_xy sum_ab |P1 - P2| / 4, achieved by guessing the likelier box.

    Ties in the maximization go to the lexicographically largest input, so
    that PR versus anti-PR picks (1, 1) as in the textbook strategy.  The
    induced comparing operation sends outcomes with P1 > P2 to flag 0 and the
    rest to flag 1 (only built for one subsystem per site).
    """
    _check_pair(x1, x2)
    best, best_d = None, Fraction(-1)
    for inputs in x1.layout.joint_inputs():
        d = variational_distance(measure(x1, inputs), measure(x2, inputs))
        if d >= best_d:
            best, best_d = inputs, d
    op = None
    if len(x1.layout.sites) == 2 and x1.n_subsystems == 2:
        r1, r2 = x1.probs[best], x2.probs[best]
        outcomes = list(itertools.product(*(range(c) for c in r1.shape)))
        first = [o for o in outcomes if r1[o] > r2[o]]
        second = [o for o in outcomes if not r1[o] > r2[o]]
        op = ComparingOperation.of(best, [first, second], 2)
    return HelstromResult(HALF + best_d / 4, best, best_d, op)


@dataclass(frozen=True)
class DistinguishStrategy:
    measurement: tuple[int, ...]
    partition: tuple[frozenset, ...]  # block 0 -> guess first box, block 1 -> second
    success_probability: Fraction

    def operation(self) -> ComparingOperation:
        return ComparingOperation(self.measurement, self.partition, 2)


def _support(row) -> frozenset:
    return frozenset(tuple(int(i) for i in idx) for idx in zip(*row.nonzero()))


def perfect_distinguish_search(e1: BoxTable, e2: BoxTable) -> DistinguishStrategy | None:
    """First joint input (lexicographic) whose two rows have disjoint supports."""
    _check_pair(e1, e2)
    for inputs in e1.layout.joint_inputs():
        r1, r2 = e1.probs[inputs], e2.probs[inputs]
        s1, s2 = _support(r1 != 0), _support(r2 != 0)
        if s1 & s2:
            continue
        everything = frozenset(itertools.product(*(range(c) for c in r1.shape)))
        return DistinguishStrategy(tuple(inputs), (s1, everything - s1), ONE)
    return None


@dataclass(frozen=True)
class ConclusiveResult:
    measurement: tuple[int, ...]
    outcomes: frozenset
    probability: Fraction


def conclusive_distinguish(x: BoxTable, y: BoxTable) -> ConclusiveResult | None:
    """Measurement and outcome set seen with positive probability under x and
    never under y, maximizing that probability; None when no such set exists."""
    _check_pair(x, y)
    best = None
    for inputs in x.layout.joint_inputs():
        rx, ry = x.probs[inputs], y.probs[inputs]
        outs = _support(rx != 0) - _support(ry != 0)
        p = sum((rx[o] for o in outs), ZERO)
        if p > 0 and (best is None or p > best.probability):
            best = ConclusiveResult(tuple(inputs), frozenset(outs), p)
    return best


def support_containment(e1: BoxTable, e2: BoxTable) -> bool:
    """supp(e1) is a subset of supp(e2)."""
    _check_pair(e1, e2)
    return e1.support() <= e2.support()


def is_extremal(box: BoxTable) -> bool:
    """No nonzero perturbation supported inside supp(box) keeps it NS and normalized."""
    layout = box.layout
    flat = box.probs.reshape(-1)
    support = [i for i, v in enumerate(flat) if v != 0]
    col = {i: c for c, i in enumerate(support)}
    rows = []
    for eq in ns_equalities(layout):
        row = [0] * len(support)
        touched = False
        for i, v in eq.items():
            if i in col:
                row[col[i]] = v
                touched = True
        if touched:
            rows.append(row)
    out_size = 1
    for c in layout.output_shape:
        out_size *= c
    for r in range(len(flat) // out_size):
        row = [0] * len(support)
        for i in range(r * out_size, (r + 1) * out_size):
            if i in col:
                row[col[i]] = 1
        rows.append(row)
    return rank(rows) == len(support)


def k3_audit(model: str = "lrns576", workers: int | None = None) -> dict:
    """Triples with cost below 1, their costs, and both bounds the text mentions."""
    sweep = universal_bound_sweep(3, ONE, "min", model, workers)
    below = [r for r in sweep.rows if r.cost < 1]
    costs = sorted({r.cost for r in below})
    return {
        "count_below_one": len(below),
        "costs": costs,
        "rows": below,
        "bound_if_cost_1_3": maxflags_formula(Fraction(1, 3)),
        "bound_if_cost_2_3": maxflags_formula(Fraction(2, 3)),
        "supported": sorted({maxflags_formula(c) for c in costs}),
    }
