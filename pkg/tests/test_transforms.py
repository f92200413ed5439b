import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from boxlab.box import BoxError, is_fully_nonsignaling, mix, tensor, trace_out, validate_box
from boxlab.catalog import (
    ALL_LABELS,
    Label,
    b_rst,
    flag_pair,
    isotropic,
    ns_extremal_vertices_2x2,
    pr_box,
    uniform_box,
)
from boxlab.cost import chsh_gamma
from boxlab.transforms import (
    ComparingOperation,
    ControlRotation,
    SubsystemMap,
    coefficient_floor,
    apply_o,
    comparing_apply,
    control_o,
    example_comparing_op,
    isotropic_parameter,
    o_flips,
    out_box,
    b000_coefficient,
    rotated_label,
    success_probability,
    theorem1_pipeline,
    twirl,
    twirl_relabelings,
)

VERTS = ns_extremal_vertices_2x2().vertices
ns_boxes = st.lists(st.tuples(st.integers(1, 6), st.integers(0, len(VERTS) - 1)), min_size=1, max_size=4).map(
    lambda pairs: mix([(Fraction(w, sum(p[0] for p in pairs)), VERTS[i]) for w, i in pairs])
)


def test_twirl_fixes_the_isotropic_line():
    assert twirl(pr_box()) == pr_box()
    assert twirl(b_rst("001")) == b_rst("001")
    assert twirl(isotropic("000", Fraction(5, 6))) == isotropic("000", Fraction(5, 6))


@pytest.mark.parametrize("label", [l for l in ALL_LABELS if (l.r, l.s) != (0, 0)])
def test_twirl_flattens_other_parity_boxes(label):
    assert twirl(b_rst(label)) == uniform_box()


def test_eight_distinct_relabelings():
    images = {r.apply(b_rst("010")).key() for r in twirl_relabelings()}
    assert len(twirl_relabelings()) == 8
    assert len(images) >= 2


@given(ns_boxes)
def test_twirl_is_idempotent_and_keeps_chsh(box):
    t = twirl(box)
    assert twirl(t) == t
    assert chsh_gamma(t) == chsh_gamma(box)
    # the image sits on the B_000/B_001 line at (gamma + 4) / 8
    assert isotropic_parameter(t) == (chsh_gamma(box) + 4) / 8


@given(ns_boxes)
def test_twirl_preserves_validity_and_ns(box):
    t = twirl(box)
    assert validate_box(t) and is_fully_nonsignaling(t)


def test_twirl_on_embedded_pair():
    box = tensor(flag_pair(0, 2), b_rst("110"), (0, 1))  # [[F, A], [F, B]]
    out = twirl(box, (1, 3))
    assert trace_out(out, (0, 2)) == uniform_box()
    with pytest.raises(BoxError):
        twirl(box, (0, 2))


def test_label_arithmetic_all_pairs():
    """O_j B_i equals B_(j|i) for all 64 pairs; O_j B_j is B_000 only when rs = 0."""
    for j, i in itertools.product(ALL_LABELS, repeat=2):
        assert apply_o(j, b_rst(i)) == b_rst(rotated_label(j, i))
    for j in ALL_LABELS:
        assert rotated_label(j, j) == Label(0, 0, 0)


def test_apply_o_worked_example():
    # x flips with s=1, b flips by t ^ rs = 0, the constant term gains r's ^ s'r = 1
    assert o_flips("010") == (1, 0, 0)
    assert apply_o("010", b_rst("100")) == b_rst("111")


def test_rotations_compose_like_labels():
    for j, k, i in [("010", "100", "001"), ("111", "011", "110")]:
        assert apply_o(j, apply_o(k, b_rst(i))) == b_rst(rotated_label(j, rotated_label(k, i)))


def test_subsystem_map_rejects_non_permutations():
    with pytest.raises(BoxError):
        SubsystemMap((0, 0), ((0, 1), (0, 1)))


def test_control_o_rotates_per_flag():
    labels = ("000", "011", "101")
    rot = ControlRotation(labels)
    for j, target in enumerate(["000", "011", "101", "110"][:3]):
        box = tensor(flag_pair(j, 3), b_rst(target), (0, 1))
        out = control_o(box, rot)
        assert trace_out(out, (0, 2)) == b_rst(rotated_label(labels[j], target))
        assert trace_out(out, (0, 2)) == pr_box()


def test_control_o_strict_flags():
    mixed = mix([(Fraction(1, 2), tensor(flag_pair(0, 2), pr_box(), (0, 1))),
                 (Fraction(1, 2), tensor(flag_pair(1, 2), pr_box(), (0, 1)))])
    control_o(mixed, ControlRotation(("000", "010")))
    from boxlab.catalog import flag_box
    off = tensor(tensor(flag_box(0, 2), flag_box(1, 2)), pr_box(), (0, 1))
    with pytest.raises(BoxError):
        control_o(off, ControlRotation(("000", "010")))


def test_comparing_example_on_pr_and_anti_pr():
    op = example_comparing_op()
    assert comparing_apply(op, pr_box()).probs[0, 0].tolist() == [[1, 0], [0, 0]]
    assert comparing_apply(op, b_rst("001")).probs[0, 0].tolist() == [[0, 0], [0, 1]]
    half = comparing_apply(op, uniform_box()).probs[0, 0]
    assert half[0, 0] == half[1, 1] == Fraction(1, 2)


def test_comparing_partition_must_cover():
    op = ComparingOperation.of((0, 0), [[(0, 0)], [(1, 1)]])
    with pytest.raises(BoxError):
        comparing_apply(op, pr_box())
    with pytest.raises(BoxError):
        ComparingOperation.of((0, 0), [[(0, 0)], [(0, 0), (1, 1)]])


@given(ns_boxes)
def test_comparing_output_is_valid_and_flags_agree(box):
    out = comparing_apply(example_comparing_op(), box)
    assert validate_box(out) and is_fully_nonsignaling(out)
    flags = out.probs[0, 0]
    assert flags[0, 1] == flags[1, 0] == 0


def joint(rng, n):
    weights = [rng.randint(0, 5) for _ in range(n * n)]
    weights[0] += 1
    total = sum(weights)
    return [[Fraction(weights[i * n + j], total) for j in range(n)] for i in range(n)]


@pytest.mark.parametrize("seed", range(6))
def test_pipeline_matches_term_by_term_coefficient(seed):
    import random

    rng = random.Random(seed)
    n = rng.randint(2, 4)
    labels = rng.sample(ALL_LABELS, n)
    betas = [Fraction(rng.randint(5, 10), 10) for _ in range(n)]
    P = joint(rng, n)
    q, final = theorem1_pipeline(out_box(P, labels, betas), labels)
    assert q == b000_coefficient(P, labels, betas)
    assert final == mix([(q, b_rst("000")), (1 - q, b_rst("001"))])
    # every off-diagonal term contributes at least 1 - max beta
    assert q >= coefficient_floor(P, betas)
    assert 0 <= success_probability(P) <= 1


def test_perfect_success_gives_beta():
    labels = ["000", "011", "101"]
    P = [[Fraction(1, 3) if i == j else 0 for j in range(3)] for i in range(3)]
    q, _ = theorem1_pipeline(out_box(P, labels, [1, 1, 1]), labels)
    assert q == 1 == coefficient_floor(P, [1, 1, 1])
