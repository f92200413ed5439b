import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from boxlab.box import BoxError, mix, tensor
from boxlab.catalog import (
    ALL_LABELS,
    LAYOUT_2X2,
    b_in_for_labels,
    b_rst,
    deterministic_box,
    isotropic,
    ns_extremal_vertices_2x2,
    pr_box,
    uniform_box,
)
from boxlab.cost import (
    CostCertificate,
    CostProblem,
    chsh_gamma,
    cost_of,
    isotropic_cost_closed_form,
    local_model,
    nonlocal_cost,
    verify_certificate,
)

DET16 = local_model("det16")
VERTS = ns_extremal_vertices_2x2().vertices


def float_cost(box, model):
    """Same program solved in floating point by HiGHS, used as an oracle."""
    V = np.array([[float(v) for v in vert.probs.reshape(-1)] for vert in model]).T
    P = np.array([float(v) for v in box.probs.reshape(-1)])
    n = V.shape[1]
    # maximize sum(lambda) with V lambda <= P
    res = linprog(-np.ones(n), A_ub=V, b_ub=P, bounds=(0, None), method="highs")
    return 1 + res.fun


def test_chsh_values():
    assert chsh_gamma(pr_box()) == 4
    assert chsh_gamma(b_rst("001")) == -4
    assert chsh_gamma(uniform_box()) == 0
    assert chsh_gamma(deterministic_box(LAYOUT_2X2, [(0, 0), (0, 0)])) == 2


def test_pr_costs_one_and_local_boxes_cost_zero():
    assert cost_of(pr_box(), DET16) == 1
    assert cost_of(uniform_box(), DET16) == 0
    assert cost_of(VERTS[3], DET16) == 0


@pytest.mark.parametrize("k", range(21))
def test_isotropic_closed_form(k):
    alpha = Fraction(k, 20)
    box = isotropic("000", alpha)
    if alpha < Fraction(1, 2):
        # below 1/2 the box is isotropic around the negated label
        assert cost_of(box, DET16) == isotropic_cost_closed_form(1 - alpha)
    else:
        assert cost_of(box, DET16) == isotropic_cost_closed_form(alpha) == max(0, 4 * alpha - 3)


def test_cost_agrees_with_float_oracle(rng):
    for _ in range(15):
        ws = [rng.randint(0, 5) for _ in VERTS]
        total = sum(ws) or 1
        box = mix([(Fraction(w, total), v) for w, v in zip(ws, VERTS) if w] or [(1, VERTS[0])])
        assert abs(float(cost_of(box, DET16)) - float_cost(box, DET16)) < 1e-9


def test_certificate_verifies_and_tampering_is_caught():
    box = isotropic("000", Fraction(7, 8))
    cert = nonlocal_cost(CostProblem(box, DET16))
    assert cert.p == Fraction(1, 2)
    assert verify_certificate(box, cert, DET16)
    bad = CostCertificate(cert.p, cert.Y.copy(), dict(cert.weights), cert.model_kind)
    k = next(iter(bad.weights))
    bad.weights[k] += Fraction(1, 100)
    kinds = {i.kind for i in verify_certificate(box, bad, DET16).issues}
    assert "reconstruction" in kinds and "lambda-sum" in kinds
    worse = CostCertificate(cert.p, -cert.Y, dict(cert.weights), cert.model_kind)
    assert "negative-Y" in {i.kind for i in verify_certificate(box, worse, DET16).issues}


def test_certificate_json_round_trip():
    box = isotropic("000", Fraction(7, 8))
    cert = nonlocal_cost(CostProblem(box, DET16))
    data = json.loads(json.dumps(cert.to_json()))
    back = CostCertificate.from_json(data, box.probs.shape)
    assert back.p == cert.p and back.weights == cert.weights
    assert np.all(back.Y == cert.Y)
    assert verify_certificate(box, back, DET16)


def test_guided_and_plain_paths_agree():
    box = isotropic("110", Fraction(9, 10))
    a = nonlocal_cost(CostProblem(box, DET16), guided=False)
    b = nonlocal_cost(CostProblem(box, DET16))
    c = nonlocal_cost(CostProblem(box, DET16), bland=True)
    assert a.p == b.p == c.p == Fraction(3, 5)


def test_model_layout_mismatch_refused():
    with pytest.raises(BoxError):
        CostProblem(pr_box(), local_model("det256"))
    with pytest.raises(BoxError):
        local_model("nope")


def test_a4_cost_both_models():
    box = b_in_for_labels(["000", "001", "010", "100"])
    for tag in ("det256", "lrns576"):
        vs = local_model(tag)
        cert = nonlocal_cost(CostProblem(box, vs))
        assert verify_certificate(box, cert, vs)
        assert cert.p == Fraction(1, 2)


def test_lrns_never_costs_more_than_det(rng):
    det, lrns = local_model("det256"), local_model("lrns576")
    for _ in range(3):
        labels = rng.sample(ALL_LABELS, rng.randint(2, 5))
        box = b_in_for_labels(labels, Fraction(rng.randint(6, 10), 10))
        assert cost_of(box, lrns) <= cost_of(box, det)


ns_boxes = st.lists(st.tuples(st.integers(1, 6), st.integers(0, len(VERTS) - 1)), min_size=1, max_size=4).map(
    lambda pairs: mix([(Fraction(w, sum(p[0] for p in pairs)), VERTS[i]) for w, i in pairs])
)


@given(ns_boxes, ns_boxes, st.fractions(0, 1))
def test_cost_is_convex(p, q, w):
    lhs = cost_of(mix([(w, p), (1 - w, q)]), DET16)
    assert lhs <= w * cost_of(p, DET16) + (1 - w) * cost_of(q, DET16)


@given(ns_boxes)
def test_cost_in_unit_interval_and_certified(box):
    cert = nonlocal_cost(CostProblem(box, DET16))
    assert 0 <= cert.p <= 1
    assert verify_certificate(box, cert, DET16)


@settings(max_examples=8)
@given(ns_boxes, ns_boxes)
def test_cost_subadditive_under_tensor(p, q):
    # the product of two decompositions is a decomposition of the product
    bound = 1 - (1 - cost_of(p, DET16)) * (1 - cost_of(q, DET16))
    assert cost_of(tensor(p, q, (0, 1)), local_model("lrns576")) <= bound
