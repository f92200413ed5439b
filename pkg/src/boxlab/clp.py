"""Executable checks that an operation on boxes is completely locality
preserving: it maps boxes to boxes, is linear, keeps full non-signaling (alone
and next to an idle context), keeps LR_ns boxes LR_ns, and, as a
discriminator, emits identical flags on both sides.

Locality is checked constructively.  An input comes with an LR_ns witness
(weights and per-site side boxes); each family knows how to push the witness
through the operation, and the pushed witness must reconstruct the image
exactly.  Operations without such a construction are checked with the cost LP
instead (C = 0 under the LR_ns product model).
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .box import (
    BoxError,
    BoxTable,
    Subsystem,
    SystemLayout,
    format_fraction,
    is_fully_nonsignaling,
    mix,
    tensor,
    trace_out,
    validate_box,
)
from .catalog import (
    ALL_LABELS,
    LAYOUT_2X2,
    ZERO,
    Label,
    anti_pr_box,
    flag_box,
    lrns_product_vertices,
    ns_extremal_vertices_2x2,
    pr_box,
    site_ns_vertices,
)
from .cost import cost_of
from .transforms import (
    ComparingOperation,
    ControlRotation,
    Relabeling,
    _controlled,
    comparing_apply_tensored,
    twirl,
    example_comparing_op,
    twirl_relabelings,
)

FAMILIES = ("comparing", "control-o", "twirl", "trace")
CHECKS = ("validity", "linearity", "ns", "locality", "discriminating-form")
BINARY = Subsystem(2, 2)
CONTEXT_2X2 = SystemLayout.of([[(2, 2)], [(2, 2)]])


# ----------------------------------------------------------------------------
# witnesses


@dataclass(frozen=True)
class LrnsWitness:
    """``sum_l p(l) A_l (x) B_l`` with every side box fully NS on its site."""

    layout: SystemLayout
    terms: tuple[tuple[Fraction, BoxTable, BoxTable], ...]

    def reconstruct(self) -> BoxTable:
        return mix([(w, tensor(a, b)) for w, a, b in self.terms])

    def problems(self) -> list[str]:
        out = []
        if not self.terms:
            return ["empty witness"]
        if any(w < 0 for w, _, _ in self.terms) or sum(w for w, _, _ in self.terms) != 1:
            out.append("weights are not a distribution")
        for k, (_, a, b) in enumerate(self.terms):
            for name, side in (("Alice", a), ("Bob", b)):
                if not validate_box(side):
                    out.append(f"term {k}: {name} side box is not a valid box")
                elif not is_fully_nonsignaling(side, exhaustive=True):
                    out.append(f"term {k}: {name} side box signals inside its site")
        if not out and not self.reconstruct().layout.compatible(self.layout):
            out.append("side boxes do not assemble into the declared layout")
        return out

    def to_json(self) -> dict:
        def side(box):
            return [[format_fraction(v) for v in box.probs.reshape(-1)], box.layout.to_json()]
        return {
            "layout": self.layout.to_json(),
            "terms": [{"weight": format_fraction(w), "alice": side(a), "bob": side(b)} for w, a, b in self.terms],
        }


def _site_split(layout: SystemLayout) -> tuple[SystemLayout, SystemLayout]:
    if len(layout.sites) != 2:
        raise BoxError("LR_ns witnesses need a bipartite layout")
    return SystemLayout((layout.sites[0],)), SystemLayout((layout.sites[1],))


# ----------------------------------------------------------------------------
# operations


def _merge(home: SystemLayout, context: SystemLayout | None) -> SystemLayout:
    if context is None:
        return home
    if len(context.sites) != len(home.sites):
        raise BoxError("idle context must have one site per site of the operation")
    return SystemLayout(tuple(h + c for h, c in zip(home.sites, context.sites)))


def _home_positions(home: SystemLayout, layout: SystemLayout) -> list[int]:
    """Flat index, in ``layout``, of every home subsystem (home first on each site)."""
    out = []
    for site in range(len(home.sites)):
        members = layout.site_members(site)
        out.extend(members[: len(home.sites[site])])
    return out


def _within_site(layout: SystemLayout, flat: int) -> tuple[int, int]:
    site = layout.site_of(flat)
    return site, layout.site_members(site).index(flat)


def _conditionals(side: BoxTable, pos: int, x: int) -> list[tuple[Fraction, int, np.ndarray]]:
    """Measure subsystem ``pos`` of a side box at input ``x``: per outcome a
    with mass N_a > 0, (N_a, a, table of the other subsystems given a)."""
    n = side.n_subsystems
    moved = np.moveaxis(side.probs, (pos, n + pos), (0, 1))
    out = []
    for a in range(moved.shape[1]):
        sel = np.asarray(moved[x, a], dtype=object)
        # the site is NS, so the mass of a does not depend on the other inputs
        mass = Fraction(sel[(0,) * (n - 1)].sum()) if n > 1 else Fraction(sel[()])
        if mass:
            out.append((mass, a, sel / mass))
    return out


def _with_flag(side: BoxTable, pos: int, cond: np.ndarray, flag: int, n_flags: int) -> BoxTable:
    """Side box whose subsystem ``pos`` is replaced by the deterministic flag."""
    n = side.n_subsystems
    cond = np.asarray(cond, dtype=object)
    table = np.full((1, n_flags) + cond.shape, ZERO, dtype=object)
    table[0, flag] = cond
    table = np.moveaxis(table, (0, 1), (pos, n + pos))
    subs = list(side.layout.sites[0])
    subs[pos] = Subsystem(1, n_flags)
    return BoxTable._trusted(SystemLayout((tuple(subs),)), np.ascontiguousarray(table))


@dataclass(frozen=True)
class OperationUnderTest:
    """One operation family instance on its home layout, optionally next to an
    idle context whose subsystems follow the home ones on each site."""

    family: str
    descriptor: object
    layout: SystemLayout
    tensor_context: SystemLayout | None = None
    n_flags: int = 2
    custom: Callable[[BoxTable, list[int]], BoxTable] | None = field(default=None, compare=False)

    @property
    def extended_layout(self) -> SystemLayout:
        return _merge(self.layout, self.tensor_context)

    def positions(self, layout: SystemLayout) -> list[int]:
        if layout.compatible(self.layout):
            return list(range(self.layout.n_subsystems))
        if self.tensor_context is not None and layout.compatible(self.extended_layout):
            return _home_positions(self.layout, layout)
        raise BoxError(f"{self.family} acts on {self.layout}, not on {layout}")

    def apply(self, box: BoxTable) -> BoxTable:
        pos = self.positions(box.layout)
        n = box.n_subsystems
        if self.custom is not None:
            return self.custom(box, pos)
        if self.family == "comparing":
            return comparing_apply_tensored(self.descriptor, box, (pos[0], pos[1]))
        if self.family == "control-o":
            maps = self.descriptor
            probs = _controlled(box.probs, n, pos[0], pos[1], maps.site_maps(0))
            probs = _controlled(probs, n, pos[2], pos[3], maps.site_maps(1))
            return BoxTable._trusted(box.layout, np.ascontiguousarray(probs))
        if self.family == "twirl":
            return twirl(box, (pos[1], pos[3]))
        if self.family == "trace":
            return trace_out(box, (pos[1], pos[3]))
        raise BoxError(f"unknown family {self.family!r}")

    def image_flag_positions(self, layout: SystemLayout) -> tuple[int, int] | None:
        """Where the two flags sit in an image of a box on ``layout``."""
        if self.family in ("comparing", "asymmetric-flag"):
            pos = self.positions(layout)
            return pos[0], pos[1]
        if self.family in ("control-o", "twirl"):
            pos = self.positions(layout)
            return pos[0], pos[2]
        if self.family == "trace":
            pos = self.positions(layout)
            return pos[0], pos[2] - 1
        return None

    def lift_witness(self, witness: LrnsWitness) -> LrnsWitness | None:
        """LR_ns witness of the image, built term by term; None if the family
        has no construction (the cost LP is used instead)."""
        layout = witness.layout
        pos = self.positions(layout)
        alice_layout, _ = _site_split(layout)
        n_a = alice_layout.n_subsystems
        terms = []
        if self.custom is not None:
            return None
        if self.family == "comparing":
            op: ComparingOperation = self.descriptor
            i, j = op.measurement
            pa = _within_site(layout, pos[0])[1]
            pb = _within_site(layout, pos[1])[1]
            for w, A, B in witness.terms:
                # lambda' = (lambda, a, b) with weight p(lambda) N_a N_b
                for a_mass, a, a_cond in _conditionals(A, pa, i):
                    for b_mass, b, b_cond in _conditionals(B, pb, j):
                        k = op.block_of(a, b)
                        terms.append((w * a_mass * b_mass, _with_flag(A, pa, a_cond, k, op.n_flags),
                                      _with_flag(B, pb, b_cond, k, op.n_flags)))
        elif self.family == "control-o":
            rot: ControlRotation = self.descriptor
            fa, ta = pos[0], pos[1]
            fb, tb = pos[2] - n_a, pos[3] - n_a
            for w, A, B in witness.terms:
                A2 = _controlled(A.probs, A.n_subsystems, fa, ta, rot.site_maps(0))
                B2 = _controlled(B.probs, B.n_subsystems, fb, tb, rot.site_maps(1))
                terms.append((w, BoxTable._trusted(A.layout, A2), BoxTable._trusted(B.layout, B2)))
        elif self.family == "twirl":
            # lambda' = (lambda, delta, gamma, theta), each with weight p(lambda) / 8
            rels = twirl_relabelings((pos[1], pos[3]))
            alice_members = list(range(n_a))
            bob_members = list(range(n_a, layout.n_subsystems))
            for w, A, B in witness.terms:
                for r in rels:
                    terms.append((w / 8, r.restricted(alice_members).apply(A), r.restricted(bob_members).apply(B)))
        elif self.family == "trace":
            for w, A, B in witness.terms:
                terms.append((w, trace_out(A, (pos[1],)), trace_out(B, (pos[3] - n_a,))))
        else:
            return None
        image_layout = tensor(terms[0][1], terms[0][2]).layout
        return LrnsWitness(image_layout, tuple(terms))


def comparing_family(op: ComparingOperation | None = None, context=CONTEXT_2X2) -> OperationUnderTest:
    op = example_comparing_op() if op is None else op
    i, j = op.measurement
    outs = [max(p[k] for block in op.partition for p in block) + 1 for k in (0, 1)]
    home = SystemLayout.of([[(max(2, i + 1), max(2, outs[0]))], [(max(2, j + 1), max(2, outs[1]))]])
    op.check_against(*home.subsystems)
    return OperationUnderTest("comparing", op, home, context, op.n_flags)


def composite_layout(n_flags: int) -> SystemLayout:
    return SystemLayout.of([[(1, n_flags), (2, 2)], [(1, n_flags), (2, 2)]])


def control_o_family(labels=("000", "011", "101"), context=CONTEXT_2X2) -> OperationUnderTest:
    rot = ControlRotation(tuple(labels))
    return OperationUnderTest("control-o", rot, composite_layout(rot.n), context, rot.n)


def twirl_family(n_flags: int = 2, context=CONTEXT_2X2) -> OperationUnderTest:
    return OperationUnderTest("twirl", None, composite_layout(n_flags), context, n_flags)


def trace_family(n_flags: int = 2, context=CONTEXT_2X2) -> OperationUnderTest:
    return OperationUnderTest("trace", None, composite_layout(n_flags), context, n_flags)


def family(name: str, **kwargs) -> OperationUnderTest:
    makers = {"comparing": comparing_family, "control-o": control_o_family,
              "twirl": twirl_family, "trace": trace_family}
    if name not in makers:
        raise BoxError(f"unknown family {name!r}; expected one of {FAMILIES}")
    return makers[name](**kwargs)


# negative controls


def signaling_control() -> OperationUnderTest:
    """Bob's output is overwritten by Alice's input."""
    def run(box: BoxTable, pos: list[int]) -> BoxTable:
        n = box.n_subsystems
        a, b = pos[0], pos[1]
        moved = np.moveaxis(box.probs, (a, b, n + a, n + b), (0, 1, 2, 3))
        summed = moved.sum(axis=3)
        out = np.full(moved.shape, ZERO, dtype=object)
        for x in range(moved.shape[0]):
            out[x, :, :, x % moved.shape[3]] = summed[x]
        out = np.moveaxis(out, (0, 1, 2, 3), (a, b, n + a, n + b))
        return BoxTable._trusted(box.layout, np.ascontiguousarray(out))
    return OperationUnderTest("signaling", None, LAYOUT_2X2, CONTEXT_2X2, 2, run)


def asymmetric_flag_control(op: ComparingOperation | None = None) -> OperationUnderTest:
    """A comparing operation whose Bob flag is shifted by one: k on Alice, k + 1 on Bob."""
    base = comparing_family(op)
    n_flags = base.n_flags

    def run(box: BoxTable, pos: list[int]) -> BoxTable:
        image = base.apply(box)
        shift = Relabeling({pos[1]: _shift_map(n_flags)})
        return shift.apply(image)
    return OperationUnderTest("asymmetric-flag", base.descriptor, base.layout, base.tensor_context, n_flags, run)


def _shift_map(n_flags: int):
    from .transforms import SubsystemMap
    return SubsystemMap((0,), (tuple((a - 1) % n_flags for a in range(n_flags)),))


def swap_control() -> OperationUnderTest:
    """Exchange Alice's and Bob's home subsystems."""
    def run(box: BoxTable, pos: list[int]) -> BoxTable:
        n = box.n_subsystems
        a, b = pos[0], pos[1]
        perm = list(range(2 * n))
        perm[a], perm[b] = b, a
        perm[n + a], perm[n + b] = n + b, n + a
        return BoxTable._trusted(box.layout, np.ascontiguousarray(box.probs.transpose(perm)))
    return OperationUnderTest("swap", None, LAYOUT_2X2, CONTEXT_2X2, 2, run)


# ----------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class CheckFailure:
    case: int
    detail: str
    witness: dict | None = None


@dataclass(frozen=True)
class CheckReport:
    check: str
    family: str
    cases: int
    failures: tuple[CheckFailure, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.failures

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        return {
            "check": self.check,
            "family": self.family,
            "cases": self.cases,
            "passed": self.ok,
            "failures": [{"case": f.case, "detail": f.detail, "witness": f.witness} for f in self.failures[:10]],
            "n_failures": len(self.failures),
        }


def _table_json(box: BoxTable) -> dict:
    return {"layout": box.layout.to_json(), "probs": [format_fraction(v) for v in box.probs.reshape(-1)]}


# ----------------------------------------------------------------------------
# checks


def check_validity(op: OperationUnderTest, corpus: Sequence[BoxTable]) -> CheckReport:
    failures = []
    for k, box in enumerate(corpus):
        try:
            image = op.apply(box)
        except BoxError as exc:
            failures.append(CheckFailure(k, f"operation raised: {exc}", _table_json(box)))
            continue
        report = validate_box(image)
        if not report:
            failures.append(CheckFailure(k, str(report.violations[0]), _table_json(box)))
    return CheckReport("validity", op.family, len(corpus), tuple(failures))


def check_linearity(op: OperationUnderTest, pairs: Sequence[tuple[BoxTable, BoxTable]],
                    weights: Sequence[Fraction]) -> CheckReport:
    failures = []
    for k, ((P, Q), w) in enumerate(zip(pairs, weights)):
        left = op.apply(mix([(w, P), (1 - w, Q)]))
        right = mix([(w, op.apply(P)), (1 - w, op.apply(Q))])
        if left != right:
            failures.append(CheckFailure(k, f"op(mix) != mix(op) at weight {w}", _table_json(P)))
    return CheckReport("linearity", op.family, len(pairs), tuple(failures))


def check_ns_preservation(op: OperationUnderTest, corpus: Sequence[BoxTable]) -> CheckReport:
    """Every image, on the home layout or with the idle context, must be fully
    NS under the exhaustive all-cuts checker."""
    failures = []
    for k, box in enumerate(corpus):
        image = op.apply(box)
        result = is_fully_nonsignaling(image, exhaustive=True)
        if not result:
            w = result.witness
            failures.append(CheckFailure(
                k, f"subsystems {w.senders} signal to {w.receivers}",
                {"input": _table_json(box), "inputs": list(w.inputs), "other_inputs": list(w.other_inputs),
                 "values": [format_fraction(v) for v in w.values]}))
    return CheckReport("ns", op.family, len(corpus), tuple(failures))


def check_locality_preservation(op: OperationUnderTest, witnesses: Sequence[LrnsWitness],
                                cross_check: bool = False) -> CheckReport:
    """Push each witness through the operation and verify the result is an
    LR_ns witness of the image.  Without a construction, or with
    ``cross_check``, the image must also have zero cost under the LR_ns
    product model."""
    failures = []
    for k, wit in enumerate(witnesses):
        image = op.apply(wit.reconstruct())
        lifted = op.lift_witness(wit)
        if lifted is not None:
            problems = lifted.problems()
            if not problems and lifted.reconstruct() != image:
                problems = ["lifted witness does not reconstruct the image"]
            if problems:
                failures.append(CheckFailure(k, problems[0], wit.to_json()))
                continue
        if lifted is None or cross_check:
            cost = cost_of(image, lrns_product_vertices(image.layout))
            if cost != 0:
                failures.append(CheckFailure(k, f"image has LR_ns cost {cost}", wit.to_json()))
    return CheckReport("locality", op.family, len(witnesses), tuple(failures))


def check_discriminating_form(op: OperationUnderTest, ensemble: Sequence[BoxTable]) -> CheckReport:
    """Each image must put zero weight on unequal flag pairs."""
    failures = []
    for k, box in enumerate(ensemble):
        image = op.apply(box)
        flags = op.image_flag_positions(box.layout)
        if flags is None:
            failures.append(CheckFailure(k, "operation declares no flags"))
            continue
        n = image.n_subsystems
        fa, fb = flags
        moved = np.moveaxis(image.probs, (n + fa, n + fb), (0, 1))
        bad = [(e, f) for e in range(moved.shape[0]) for f in range(moved.shape[1])
               if e != f and np.any(moved[e, f] != 0)]
        if bad:
            failures.append(CheckFailure(k, f"flag pairs {bad[:3]} carry weight", _table_json(box)))
    return CheckReport("discriminating-form", op.family, len(ensemble), tuple(failures))


# ----------------------------------------------------------------------------
# seeded corpora


def random_weights(rng: random.Random, k: int, max_den: int = 64) -> list[Fraction]:
    """k positive rational weights summing to one, denominator at most max_den."""
    den = rng.randint(k, max_den)
    cuts = sorted(rng.sample(range(1, den), k - 1))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [den])]
    return [Fraction(p, den) for p in parts]


def random_ns_2x2(rng: random.Random, terms: int | None = None) -> BoxTable:
    verts = ns_extremal_vertices_2x2().vertices
    k = terms or rng.randint(1, 4)
    return mix(zip(random_weights(rng, k), (rng.choice(verts) for _ in range(k))))


def _regroup(b1: BoxTable, b2: BoxTable, crossed: bool) -> BoxTable:
    """Two 2x2 boxes on the layout [[A, A'], [B, B']]; ``crossed`` pairs A
    with B' and A' with B instead of A with B and A' with B'."""
    box = tensor(b1, b2, (0, 1))  # A, A', B, B'
    if not crossed:
        return box
    # b1 on (A, B'), b2 on (A', B): swap the Bob subsystems
    perm = [0, 1, 3, 2, 4, 5, 7, 6]
    return BoxTable._trusted(box.layout, np.ascontiguousarray(box.probs.transpose(perm)))


def random_ns_extended(rng: random.Random) -> BoxTable:
    """Fully NS box on [[A, A'], [B, B']] mixing both cross pairings and
    correlations held inside one site."""
    verts = ns_extremal_vertices_2x2().vertices
    layout = SystemLayout.of([[(2, 2), (2, 2)], [(2, 2), (2, 2)]])
    members = []
    for w in random_weights(rng, rng.randint(1, 3)):
        kind = rng.randrange(3)
        if kind < 2:
            members.append((w, _regroup(rng.choice(verts), rng.choice(verts), kind == 1)))
        else:
            a = rng.choice(verts).relayout(SystemLayout.of([[(2, 2), (2, 2)]]))
            b = rng.choice(verts).relayout(SystemLayout.of([[(2, 2), (2, 2)]]))
            members.append((w, tensor(a, b)))
    return mix(members).relayout(layout)


def _with_flags(rng: random.Random, body: BoxTable, n_flags: int, diagonal: bool) -> BoxTable:
    e = rng.randrange(n_flags)
    f = e if diagonal else rng.randrange(n_flags)
    flags = tensor(flag_box(e, n_flags), flag_box(f, n_flags))
    return tensor(flags, body, (0, 1))


def random_box(op: OperationUnderTest, rng: random.Random, extended: bool, diagonal: bool = False) -> BoxTable:
    """Seeded NS box on the operation's home (or extended) layout."""
    composite = op.layout.subsystems[0].inputs == 1
    if not composite:
        return random_ns_extended(rng) if extended else random_ns_2x2(rng)
    members = []
    for w in random_weights(rng, rng.randint(1, 3)):
        body = random_ns_extended(rng) if extended else random_ns_2x2(rng, 1)
        members.append((w, _with_flags(rng, body, op.n_flags, diagonal)))
    return mix(members)


def _random_side(rng: random.Random, site_layout: SystemLayout, n_flags: int) -> BoxTable:
    subs = site_layout.sites[0]
    if subs[0].inputs == 1:
        flag = flag_box(rng.randrange(n_flags), n_flags)
        rest = SystemLayout((subs[1:],))
        return tensor(flag, rng.choice(site_ns_vertices(rest)), (0,))
    return rng.choice(site_ns_vertices(site_layout))


def random_witness(op: OperationUnderTest, rng: random.Random, extended: bool) -> LrnsWitness:
    layout = op.extended_layout if extended else op.layout
    alice, bob = _site_split(layout)
    k = rng.randint(1, 3)
    terms = tuple((w, _random_side(rng, alice, op.n_flags), _random_side(rng, bob, op.n_flags))
                  for w in random_weights(rng, k))
    return LrnsWitness(layout, terms)


def named_boxes(op: OperationUnderTest) -> list[BoxTable]:
    """PR, anti-PR and the eight B_rst, wrapped with diagonal flags for composite families."""
    from .catalog import b_rst
    boxes = [pr_box(), anti_pr_box()] + [b_rst(l) for l in ALL_LABELS]
    if op.layout.subsystems[0].inputs != 1:
        return boxes
    out = []
    for k, b in enumerate(boxes):
        j = k % op.n_flags
        flags = tensor(flag_box(j, op.n_flags), flag_box(j, op.n_flags))
        out.append(tensor(flags, b, (0, 1)))
    return out


@dataclass(frozen=True)
class SuiteReport:
    family: str
    trials: int
    seed: int
    reports: tuple[CheckReport, ...]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.reports)

    def report(self, check: str) -> CheckReport:
        return next(r for r in self.reports if r.check == check)

    def to_json(self) -> dict:
        return {"family": self.family, "trials": self.trials, "seed": self.seed,
                "passed": self.ok, "checks": [r.to_json() for r in self.reports]}


def run_suite(op: OperationUnderTest, trials: int = 1000, seed: int = 0,
              checks: Sequence[str] = CHECKS) -> SuiteReport:
    """All five checks on ``trials`` seeded cases plus the named boxes.  Cases
    alternate between the home layout and the idle-context layout."""
    rng = random.Random(seed)
    has_context = op.tensor_context is not None
    ext = [has_context and k % 2 == 1 for k in range(trials)]
    named = named_boxes(op)
    reports = []
    if "validity" in checks:
        corpus = named + [random_box(op, rng, e) for e in ext]
        reports.append(check_validity(op, corpus))
    if "linearity" in checks:
        pairs = [(random_box(op, rng, e), random_box(op, rng, e)) for e in ext]
        weights = [Fraction(rng.randint(0, 64), 64) for _ in ext]
        reports.append(check_linearity(op, pairs, weights))
    if "ns" in checks:
        corpus = named + [random_box(op, rng, e) for e in ext]
        reports.append(check_ns_preservation(op, corpus))
    if "locality" in checks:
        witnesses = [random_witness(op, rng, e) for e in ext]
        reports.append(check_locality_preservation(op, witnesses))
    if "discriminating-form" in checks:
        corpus = [random_box(op, rng, e, diagonal=True) for e in ext]
        if op.family in ("comparing", "asymmetric-flag"):
            corpus = named + corpus
        reports.append(check_discriminating_form(op, corpus))
    return SuiteReport(op.family, trials, seed, tuple(reports))
