import itertools
from fractions import Fraction

import pytest

from boxlab.box import BoxError, IncompatibleBoxesError, mix
from boxlab.catalog import (
    LAYOUT_2X2,
    anti_pr_box,
    b_rst,
    deterministic_box,
    flag_pair,
    isotropic,
    ns_extremal_vertices_2x2,
    pr_box,
    uniform_box,
)
from boxlab.discrimination import (
    DiscriminationScenario,
    conclusive_distinguish,
    corollary_alpha_bound,
    corollary_alpha_formula,
    helstrom_lower_bound,
    is_extremal,
    maxflags_formula,
    perfect_distinguish_search,
    simulate_discriminator,
    support_containment,
    theorem1_bound,
    universal_bound_sweep,
)
from boxlab.transforms import comparing_apply, example_comparing_op

VERTS = ns_extremal_vertices_2x2().vertices


def test_helstrom_pr_versus_anti_pr():
    res = helstrom_lower_bound(pr_box(), anti_pr_box())
    assert res.bound == 1 and res.measurement == (1, 1) and res.distance == 2
    image = comparing_apply(res.operation, pr_box())
    assert image.probs[0, 0, 0, 0] == 1


def test_helstrom_identical_boxes_is_a_coin():
    res = helstrom_lower_bound(pr_box(), pr_box())
    assert res.bound == Fraction(1, 2)


def test_helstrom_isotropic_pair():
    a = Fraction(3, 4)
    res = helstrom_lower_bound(isotropic("000", a), b_rst("001"))
    assert res.bound == Fraction(1, 2) + 2 * a / 4


def test_helstrom_refuses_other_layouts():
    with pytest.raises(IncompatibleBoxesError):
        helstrom_lower_bound(pr_box(), flag_pair(0, 2))


def test_perfect_search():
    strat = perfect_distinguish_search(pr_box(), anti_pr_box())
    assert strat.measurement == (0, 0) and strat.success_probability == 1
    assert perfect_distinguish_search(pr_box(), uniform_box()) is None
    op = strat.operation()
    assert comparing_apply(op, pr_box()).probs[0, 0, 0, 0] == 1
    assert comparing_apply(op, anti_pr_box()).probs[0, 0, 1, 1] == 1


def test_conclusive():
    det = deterministic_box(LAYOUT_2X2, [(0, 0), (0, 0)])
    res = conclusive_distinguish(det, pr_box())
    # at (1, 1) the PR box never outputs a = b, the deterministic box always does
    assert res.probability == 1 and res.measurement == (1, 1)
    assert conclusive_distinguish(pr_box(), uniform_box()) is None
    half = conclusive_distinguish(uniform_box(), pr_box())
    assert half.probability == Fraction(1, 2)


def test_extremality():
    assert all(is_extremal(v) for v in VERTS)
    assert not is_extremal(uniform_box())
    assert not is_extremal(isotropic("000", Fraction(7, 8)))


def test_support_containment_between_vertices():
    for v, w in itertools.permutations(VERTS, 2):
        assert not support_containment(v, w)
    assert support_containment(pr_box(), uniform_box())


def test_every_vertex_pair_has_a_perfect_strategy():
    for v, w in itertools.combinations(VERTS, 2):
        assert perfect_distinguish_search(v, w) is not None


def test_bound_formulas():
    assert maxflags_formula(Fraction(1, 2)) == Fraction(7, 8)
    assert corollary_alpha_formula(Fraction(1), Fraction(1)) == 1
    assert corollary_alpha_formula(Fraction(0), Fraction(3, 4)) == Fraction(1)
    with pytest.raises(BoxError):
        corollary_alpha_formula(Fraction(0), Fraction(1, 2))
    with pytest.raises(BoxError):
        corollary_alpha_bound(["000", "001"], Fraction(2, 5))


def test_theorem1_with_flags_at_one_is_maxflags():
    scen = DiscriminationScenario.uniform(["000", "001"])
    rep = theorem1_bound(scen, cost=Fraction(1, 3))
    assert rep.bound == maxflags_formula(Fraction(1, 3)) == rep.success_bound
    assert rep.formula == "corollary-maxflags"


def test_theorem1_common_beta_isolates_success():
    scen = DiscriminationScenario.uniform(["000", "001"], alpha=1, beta=Fraction(3, 4))
    rep = theorem1_bound(scen, cost=Fraction(1))
    assert rep.bound == Fraction(3, 4)
    assert rep.success_bound == Fraction(3, 2)


def test_scenario_validation():
    with pytest.raises(BoxError):
        DiscriminationScenario(("000",), (Fraction(1, 2),), (1,), (1,))
    with pytest.raises(BoxError):
        DiscriminationScenario.uniform(["000", "001"], alpha=Fraction(1, 4))


def test_pr_pair_alpha_corollary():
    rep = corollary_alpha_bound(["000", "001"], Fraction(1), model="det256")
    assert rep.cost_used == 1 and rep.bound == 1


def test_simulate_discriminator_on_pr_pair():
    scen = DiscriminationScenario.uniform(["000", "001"])
    P = simulate_discriminator(example_comparing_op(), scen)
    assert P == [[Fraction(1, 2), 0], [0, Fraction(1, 2)]]


def test_sweep_k8_is_three_quarters():
    res = universal_bound_sweep(8, model="det256", workers=1)
    assert len(res.rows) == 1 and res.rows[0].cost == 0
    assert res.aggregate == Fraction(3, 4)


def test_sweep_k7_min_and_max_agree():
    res = universal_bound_sweep(7, model="det256", workers=1)
    assert len(res.rows) == 8
    assert res.min_bound == res.max_bound == Fraction(11, 14)


def test_sweep_range_checked():
    with pytest.raises(BoxError):
        universal_bound_sweep(1)
    with pytest.raises(BoxError):
        universal_bound_sweep(3, aggregation="mean")
