import math
from fractions import Fraction as F

import pytest
from hypothesis import given

from ordinalpower.construction import independent_minimizer
from ordinalpower.matrix_core import (
    DegenerateAgreement,
    MarginalPair,
    ProbMatrix,
    check_stochastic_dominance,
    cohens_kappa,
    dominance_violation,
    hellinger_distance,
    marginals,
)
from strategies import P1, P2, P3, any_marginals, count_vectors


def test_marginals_of_example_matrices():
    assert marginals(ProbMatrix(P2)) == MarginalPair((F(1, 3),) * 3, (F(1, 3),) * 3)
    mp = marginals(ProbMatrix(P1))
    assert mp.p1 == (F(1, 2), F(1, 3), F(1, 6))
    assert mp.p0 == (F(1, 3), F(1, 3), F(1, 3))


def test_marginals_of_diagonal():
    d = (F(1, 5), F(3, 10), F(1, 2))
    mp = marginals(ProbMatrix.diagonal(d))
    assert mp.p1 == d and mp.p0 == d


@pytest.mark.parametrize("p1,p0,expected", [
    ((F(3, 10), F(7, 10)), (F(3, 5), F(2, 5)), 0.216),
    ((F(9, 40), F(9, 40), F(11, 20)), (F(2, 5), F(2, 5), F(1, 5)), 0.261),
])
def test_hellinger_quoted_values(p1, p0, expected):
    assert hellinger_distance(MarginalPair(p1, p0)) == pytest.approx(expected, abs=5e-4)


def test_hellinger_extremes():
    assert hellinger_distance(MarginalPair((1, 0), (0, 1))) == pytest.approx(1.0)
    assert hellinger_distance(MarginalPair((F(1, 3), F(2, 3)), (F(1, 3), F(2, 3)))) == 0


@given(any_marginals())
def test_hellinger_symmetric_and_bounded(mp):
    d = hellinger_distance(mp)
    assert d == hellinger_distance(mp.swapped())
    assert 0 <= d <= 1
    assert (d == 0) == (mp.p1 == mp.p0)


def test_kappa_examples():
    assert cohens_kappa(ProbMatrix(P2)) == F(-1, 2)
    assert cohens_kappa(ProbMatrix(P3)) == 0
    assert cohens_kappa(ProbMatrix.diagonal((F(1, 4), F(3, 4)))) == 1


@given(any_marginals())
def test_kappa_endpoints(mp):
    if mp.agreement_by_chance() == 1:
        with pytest.raises(DegenerateAgreement):
            cohens_kappa(independent_minimizer(mp))
    else:
        assert cohens_kappa(independent_minimizer(mp)) == 0
    if max(mp.p0) < 1:
        assert cohens_kappa(ProbMatrix.diagonal(mp.p0)) == 1


def test_kappa_degenerate_point_mass():
    with pytest.raises(DegenerateAgreement):
        cohens_kappa(ProbMatrix.diagonal((0, 1, 0)))


def test_dominance_examples():
    bad = marginals(ProbMatrix(P1))
    assert not check_stochastic_dominance(bad)
    assert dominance_violation(bad) == 1
    assert check_stochastic_dominance(MarginalPair((F(3, 10), F(7, 10)), (F(3, 5), F(2, 5))))


@given(count_vectors(4, 30))
def test_dominance_reflexive(counts):
    mp = MarginalPair.from_counts(counts, counts, 30)
    assert check_stochastic_dominance(mp)


def test_dominance_swapped_fails():
    mp = MarginalPair((F(3, 10), F(7, 10)), (F(3, 5), F(2, 5)))
    assert dominance_violation(mp.swapped()) == 1


@given(any_marginals())
def test_marginal_sums_exact(mp):
    m = independent_minimizer(mp)
    back = marginals(m)
    assert sum(back.p1) == 1 and sum(back.p0) == 1
    assert all(isinstance(v, F) and v >= 0 for v in back.p1 + back.p0)


@pytest.mark.parametrize("entries", [
    ((F(1, 2), F(-1, 4)), (F(1, 2), F(1, 4))),
    ((F(1, 2), 0), (F(1, 4), F(1, 5))),
    ((1, 0, 0), (0, 0, 0)),
])
def test_invalid_matrix_rejected(entries):
    with pytest.raises(ValueError):
        ProbMatrix(entries)


def test_invalid_marginals_rejected():
    with pytest.raises(ValueError):
        MarginalPair((F(1, 2), F(1, 3)), (F(1, 2), F(1, 2)))
    with pytest.raises(ValueError):
        MarginalPair((F(3, 2), F(-1, 2)), (F(1, 2), F(1, 2)))
    with pytest.raises(ValueError):
        MarginalPair((1,), (1,))


def test_json_round_trip():
    mp = MarginalPair.from_json({"j": 2, "den": 10, "p1": [3, 7], "p0": [6, 4]})
    assert mp.p1 == (F(3, 10), F(7, 10))
    assert mp.to_json() == {"j": 2, "den": 10, "p1": [3, 7], "p0": [6, 4]}
    m = ProbMatrix(P2)
    js = m.to_json()
    assert js["den"] == 6 and js["entries"][0] == [0, 1, 1]
    assert ProbMatrix.from_json(js) == m
    with pytest.raises(ValueError):
        MarginalPair.from_json({"j": 3, "den": 10, "p1": [3, 7], "p0": [6, 4]})


def test_hellinger_matches_formula_by_hand():
    # sqrt(0.5 * sum (sqrt a - sqrt b)^2), written out for case 2
    expected = math.sqrt(0.5 * ((math.sqrt(0.5) - math.sqrt(0.8)) ** 2 + (math.sqrt(0.5) - math.sqrt(0.2)) ** 2))
    assert hellinger_distance(MarginalPair((F(1, 2), F(1, 2)), (F(4, 5), F(1, 5)))) == pytest.approx(expected, rel=1e-12)
