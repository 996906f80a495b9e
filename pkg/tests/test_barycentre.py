import itertools
import math

import pytest

from trickleflow.tda import (PersistenceDiagram, PersistencePair, barycentre,
                             diagram_matching_cost)


def diagram(points, essential_first=True):
    pairs = []
    for i, (b, d) in enumerate(points):
        pairs.append(PersistencePair(birth=float(b), death=float(d),
                                     cell=i, essential=(i == 0
                                                        and essential_first)))
    return PersistenceDiagram(pairs=pairs)


def exhaustive_matching_cost(a_pts, b_pts):
    """Minimum over all partial matchings, by enumeration: every subset
    of a-points maps injectively onto b-points, the rest pay their
    squared distance to the diagonal."""
    def diag(p):
        return (p[0] - p[1]) ** 2 / 2.0

    best = math.inf
    m, n = len(a_pts), len(b_pts)
    for k in range(0, min(m, n) + 1):
        for a_sub in itertools.combinations(range(m), k):
            for b_perm in itertools.permutations(range(n), k):
                cost = 0.0
                for ai, bi in zip(a_sub, b_perm):
                    cost += ((a_pts[ai][0] - b_pts[bi][0]) ** 2
                             + (a_pts[ai][1] - b_pts[bi][1]) ** 2)
                matched_a = set(a_sub)
                matched_b = set(b_perm)
                cost += sum(diag(a_pts[i]) for i in range(m)
                            if i not in matched_a)
                cost += sum(diag(b_pts[j]) for j in range(n)
                            if j not in matched_b)
                best = min(best, cost)
    return best


# -- matching cost ---------------------------------------------------------------

def test_identical_diagrams_cost_zero():
    d = diagram([(4, 0), (2, 1)])
    assert diagram_matching_cost(d, d) == 0.0


def test_single_point_to_empty_pays_diagonal():
    a = diagram([(1, 0)])
    b = PersistenceDiagram(pairs=[])
    assert diagram_matching_cost(a, b) == pytest.approx(0.5)
    assert diagram_matching_cost(b, a) == pytest.approx(0.5)


def test_match_beats_double_diagonal():
    a = diagram([(1, 0)])
    b = diagram([(3, 0)])
    assert diagram_matching_cost(a, b) == pytest.approx(4.0)


def test_matching_cost_against_enumeration():
    cases = [
        ([(1, 0)], [(3, 0)]),
        ([(5, 1), (2, 0)], [(4, 2)]),
        ([(3, 0), (1, 0.5)], [(3.2, 0.1), (0.9, 0.4), (6, 5.5)]),
        ([(2, 2)], [(9, 0)]),
        ([], [(1, 0), (4, 3)]),
    ]
    for a_pts, b_pts in cases:
        a = diagram(a_pts) if a_pts else PersistenceDiagram(pairs=[])
        b = diagram(b_pts) if b_pts else PersistenceDiagram(pairs=[])
        got = diagram_matching_cost(a, b)
        expected = exhaustive_matching_cost(
            [p.point() for p in a.pairs], [p.point() for p in b.pairs])
        assert got == pytest.approx(expected), (a_pts, b_pts)


# -- barycentre --------------------------------------------------------------------

def test_identical_diagrams_idempotent():
    d = diagram([(4, 0), (2, 1), (1.5, 1.0)])
    out = barycentre([d, d, d])
    assert [(p.birth, p.death) for p in out.pairs] == \
        [(p.birth, p.death) for p in d.pairs]


def test_two_point_mean():
    out = barycentre([diagram([(1, 0)]), diagram([(3, 0)])])
    assert len(out.pairs) == 1
    assert out.pairs[0].birth == pytest.approx(2.0, abs=1e-9)
    assert out.pairs[0].death == pytest.approx(0.0, abs=1e-9)
    assert out.pairs[0].cell == -1


def test_singleton_list_identity():
    d = diagram([(4, 0), (2, 1)])
    out = barycentre([d])
    assert [(p.birth, p.death) for p in out.pairs] == \
        [(p.birth, p.death) for p in d.pairs]


def test_empty_list_rejected():
    with pytest.raises(ValueError):
        barycentre([])


def test_median_cardinality_initializer():
    d1 = diagram([(9, 0)])
    d3 = diagram([(5, 0), (4, 1), (3, 2)])
    d2 = diagram([(5, 0), (2, 1)])
    out = barycentre([d3, d1, d2])
    # sizes 1, 2, 3 -> median 2 -> d2 seeds the candidate
    assert len(out.pairs) == 2


def test_permutation_invariance_with_fixed_initializer():
    d1 = diagram([(4, 0), (2, 1)])
    d2 = diagram([(5, 1), (2.5, 0.5)])
    d3 = diagram([(4.5, 0.2), (1.8, 0.9)])
    init = d1
    reference = barycentre([d1, d2, d3], initial=init)
    for perm in itertools.permutations([d1, d2, d3]):
        out = barycentre(list(perm), initial=init)
        assert [(p.birth, p.death) for p in out.pairs] == \
            [(p.birth, p.death) for p in reference.pairs]


def test_majority_diagonal_points_dropped():
    # the second candidate point matches the diagonal in both of the
    # other diagrams -> strict majority -> dropped
    wide = diagram([(6, 0), (0.2, 0.1)])
    lone1 = diagram([(6.2, 0.1)])
    lone2 = diagram([(5.8, 0.2)])
    out = barycentre([wide, lone1, lone2], initial=wide)
    assert len(out.pairs) == 1


def test_barycentre_reduces_total_cost():
    diagrams = [diagram([(4, 0), (2, 1)]),
                diagram([(5, 1), (2.5, 0.5)]),
                diagram([(4.5, 0.2), (1.8, 0.9)])]
    out = barycentre(diagrams)
    total_out = sum(diagram_matching_cost(out, d) for d in diagrams)
    for d in diagrams:
        total_d = sum(diagram_matching_cost(d, other) for other in diagrams)
        assert total_out <= total_d + 1e-9
