import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from abcwalk.catalog import load_catalog
from abcwalk.group import (
    BallCapError,
    DecompositionError,
    GroupElement,
    GroupSpec,
    ball,
    decompose_kernel,
    evaluate_word,
    expansion_factor,
    inverse,
    length_lower_bound,
    length_upper_bound,
    multiply,
    project_to_Z,
    sol_trace_word,
    sphere_profile,
    trace_value,
)
from abcwalk.laurent import LaurentPoly, parse_poly

E = GroupElement
SOL_Y = parse_poly("t^2-3*t+1")

# sizes of the Sol balls of radius 0..6, frozen from the first verified BFS run
SOL_BALL_SIZES = [1, 5, 17, 53, 153, 377, 867]


def words_oracle(spec, radius):
    """Shortest length of every element reachable by words of length <= radius, by brute force."""
    best = {}
    for n in range(radius + 1):
        for w in itertools.product(range(spec.n_generators), repeat=n):
            g = evaluate_word(spec, w)
            best.setdefault(g, n)
    return best


def formal_inverse(word):
    return [i ^ 1 for i in reversed(word)]


def test_multiply_examples(sol):
    spec = sol.spec
    assert multiply(spec, E((1, 0), 1), E((1, 0), 0)) == E((3, 1), 1)
    g = E((4, -2), 3)
    assert multiply(spec, g, spec.identity) == g
    assert multiply(spec, g, inverse(spec, g)) == spec.identity


def test_inverse_examples(sol):
    spec = sol.spec
    assert inverse(spec, spec.identity) == spec.identity
    assert inverse(spec, E((1, 0), 0)) == E((-1, 0), 0)
    assert inverse(spec, E((0, 0), 3)) == E((0, 0), -3)


def test_evaluate_word_examples(sol):
    spec = sol.spec
    assert evaluate_word(spec, []) == spec.identity
    assert evaluate_word(spec, spec.parse_word("ata")) == E((3, 1), 1)
    w = spec.parse_word("atTAttaT")
    assert evaluate_word(spec, w + formal_inverse(w)) == spec.identity


def test_word_text_round_trip(catalog):
    spec = catalog["golden"].spec
    assert spec.generator_names() == ["a", "A", "b", "B", "t", "T"]
    w = [0, 4, 3, 5, 1, 2]
    assert spec.parse_word(spec.format_word(w)) == w


def test_ball_small(sol):
    spec = sol.spec
    assert ball(spec, 0) == {spec.identity: 0}
    assert len(ball(spec, 1)) == 5
    assert len(ball(spec, 2)) == 17


def test_ball_fixture_sizes(sol):
    lengths = ball(sol.spec, 6)
    sizes = [sum(1 for r in lengths.values() if r <= R) for R in range(7)]
    assert sizes == SOL_BALL_SIZES


@pytest.mark.parametrize("name", ["sol", "bs12", "heisenberg_action"])
def test_ball_matches_word_enumeration(catalog, name):
    spec = catalog[name].spec
    assert ball(spec, 4) == words_oracle(spec, 4)


def test_ball_cap(sol):
    with pytest.raises(BallCapError):
        ball(sol.spec, 11)


def test_expansion_factor_examples(sol, catalog):
    assert expansion_factor(sol.spec) == 3
    assert expansion_factor(GroupSpec("id", [[1, 0], [0, 1]], [[1, 0]])) == 1
    assert expansion_factor(catalog["heisenberg_action"].spec) == 2


def test_lower_bound_examples(sol):
    spec = sol.spec
    assert length_lower_bound(spec, spec.identity) == 0
    assert length_lower_bound(spec, E((0, 0), 7)) >= 7
    lengths = ball(spec, 10)
    g = E((3**6, 0), 0)
    lb = length_lower_bound(spec, g)
    assert lb >= 1
    if g in lengths:
        assert lb <= lengths[g]


@pytest.mark.parametrize("name", ["sol", "bs12", "heisenberg_action", "golden", "g2"])
def test_lower_bound_and_projection_below_bfs(catalog, name):
    spec = catalog[name].spec
    for g, r in ball(spec, 5).items():
        assert length_lower_bound(spec, g) <= r
        assert abs(project_to_Z(g)) <= r


def test_upper_bound_examples(sol, catalog):
    spec = sol.spec
    assert length_upper_bound(spec, spec.identity, SOL_Y) == (0, [])
    g = E((10, 0), 0)
    bound, word = length_upper_bound(spec, g, SOL_Y, polys=[LaurentPoly.constant(10)])
    assert bound == 12 and len(word) <= bound
    assert evaluate_word(spec, word) == g
    bs = catalog["bs12"]
    g = E((5,), 0)
    bound, word = length_upper_bound(bs.spec, g, bs.reducer)
    assert bound == 6
    assert bs.spec.format_word(word) == "attaTT"
    assert evaluate_word(bs.spec, word) == g


def test_upper_bound_rejects_non_annihilating_reducer(sol):
    with pytest.raises(ValueError):
        length_upper_bound(sol.spec, E((1, 0), 0), parse_poly("2-t"))


def test_upper_bound_valid_on_sol_ball(sol):
    spec = sol.spec
    for g, r in ball(spec, 6).items():
        bound, word = length_upper_bound(spec, g, SOL_Y)
        assert r <= len(word) <= bound
        assert evaluate_word(spec, word) == g


@pytest.mark.parametrize("k, value", [(0, 2), (1, 3), (2, 7)])
def test_trace_word_examples(sol, k, value):
    w = sol_trace_word(sol.spec, 1, k)
    assert len(w) == 4 * k + 2
    assert evaluate_word(sol.spec, w) == E((value, 0), 0)


def test_trace_word_identity_to_15(sol):
    spec = sol.spec
    A = np.array([[2, 1], [1, 1]], dtype=object)
    Ak = np.identity(2, dtype=object).astype(object)
    for k in range(16):
        tr = int(Ak[0, 0] + Ak[1, 1])
        w = sol_trace_word(spec, 1, k)
        assert len(w) == 4 * k + 2
        assert evaluate_word(spec, w) == E((tr, 0), 0)
        Ak = Ak.dot(A)


def test_trace_word_needs_hyperbolic(catalog):
    with pytest.raises(ValueError):
        sol_trace_word(catalog["heisenberg_action"].spec, 1, 2)


def test_project_to_Z():
    assert project_to_Z(E((0, 0), 0)) == 0
    assert project_to_Z(E((3, 1), 1)) == 1


def test_decompose_examples(catalog, sol):
    bs = catalog["bs12"].spec
    assert decompose_kernel(bs, [Fraction(5, 4)]) == (parse_poly("5*t^-2"),)
    polys = decompose_kernel(sol.spec, (3, 1))
    assert trace_value(sol.spec, polys) == (3, 1)


def test_decompose_failure_reported():
    spec = GroupSpec("thin", [[1, 0], [0, 1]], [[1, 0]])
    with pytest.raises(DecompositionError):
        decompose_kernel(spec, (0, 1))


def test_distortion_dichotomy(sol, catalog):
    prof = sphere_profile(ball(sol.spec, 10), 10)
    rate = np.exp(np.polyfit(np.arange(1, 11), np.log(prof[1:]), 1)[0])
    assert rate >= 1.3
    prof_h = sphere_profile(ball(catalog["heisenberg_action"].spec, 10), 10)
    slope = np.polyfit(np.log(np.arange(1, 11)), np.log(prof_h[1:]), 1)[0]
    assert slope <= 3


def test_spec_validation():
    with pytest.raises(ValueError):
        GroupSpec("sing", [[1, 2], [2, 4]], [[1, 0]])
    with pytest.raises(ValueError):
        GroupSpec("den", [[Fraction(1, 3)]], [[1]], modulus=2)
    with pytest.raises(ValueError):
        GroupSpec("zero", [[2, 1], [1, 1]], [[0, 0]])


CAT = load_catalog()
GROUPS = ["sol", "bs12", "golden", "g2", "heisenberg_action"]


@st.composite
def element_triples(draw):
    name = draw(st.sampled_from(GROUPS))
    spec = CAT[name].spec
    word = st.lists(st.integers(0, spec.n_generators - 1), max_size=10)
    return spec, [evaluate_word(spec, draw(word)) for _ in range(3)]


@given(element_triples())
def test_group_axioms(data):
    spec, (g, h, k) = data
    assert multiply(spec, multiply(spec, g, h), k) == multiply(spec, g, multiply(spec, h, k))
    assert multiply(spec, g, spec.identity) == g == multiply(spec, spec.identity, g)
    assert multiply(spec, g, inverse(spec, g)) == spec.identity
    assert multiply(spec, inverse(spec, g), g) == spec.identity


@given(st.sampled_from(GROUPS), st.data())
def test_word_evaluation_is_a_homomorphism(name, data):
    spec = CAT[name].spec
    word = st.lists(st.integers(0, spec.n_generators - 1), max_size=12)
    u, v = data.draw(word), data.draw(word)
    assert evaluate_word(spec, u + v) == multiply(spec, evaluate_word(spec, u), evaluate_word(spec, v))
    assert evaluate_word(spec, formal_inverse(u)) == inverse(spec, evaluate_word(spec, u))


@given(st.sampled_from(["sol", "golden", "g2", "bs12"]), st.data())
def test_decompose_round_trip(name, data):
    spec = CAT[name].spec
    poly = st.builds(lambda cs, lo: LaurentPoly(cs, lo),
                     st.lists(st.integers(-30, 30), max_size=5), st.integers(-4, 4))
    polys = [data.draw(poly) for _ in spec.kernel_gens]
    a = trace_value(spec, polys)
    assert trace_value(spec, decompose_kernel(spec, a)) == a
