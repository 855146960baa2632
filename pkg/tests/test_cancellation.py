"""Tests for decompositions, configuration cancellation and the labelled-loop involution."""

import math

import numpy as np
import pytest

from slising.cancellation import (
    LoopConfiguration,
    bijection_audit,
    decompose_even_subset,
    enumerate_configurations,
    expected_labelling_count,
    involution,
    label_loop,
    labelled_weight,
    minimal_label_pair,
    pairing_parity_census,
    pairing_recursion_holds,
    pairings,
    verify_cancellation,
    verify_signed_decomposition,
    z_from_configurations,
    z_from_decompositions,
)
from slising.errors import CapExceededError, InputError
from slising.fixtures import fixture_names, load_fixture
from slising.graph import EdgeWeights, build_rectangle, enumerate_even_subsets, generating_function_bruteforce
from slising.loops import enumerate_loops, loop_weight

SQUARE = (0, 3, 2, 1)

# Closed walk on the 3x2 rectangle crossing the middle edge up, then down
ZIGZAG = [2, 3, 1, 0, 2, 4, 5, 3, 2, 0, 1, 3, 5, 4]


class TestPairings:
    def test_counts(self):
        assert list(pairings([])) == [[]]
        assert len(list(pairings(list(range(6))))) == 15
        assert len(list(pairings(list(range(8))))) == 105

    @pytest.mark.parametrize("k, expected", [(1, (1, 0)), (2, (2, 1)), (3, (8, 7))])
    def test_parity_census(self, k, expected):
        assert pairing_parity_census(k) == expected

    @pytest.mark.parametrize("k", range(1, 6))
    def test_even_minus_odd_is_one(self, k):
        even, odd = pairing_parity_census(k)
        assert even - odd == 1
        assert pairing_recursion_holds(k)

    @pytest.mark.parametrize("k", [0, 7])
    def test_census_range(self, k):
        with pytest.raises(InputError):
            pairing_parity_census(k)


class TestDecompositions:
    def test_figure_eight(self, figure_eight):
        everything = range(figure_eight.n_edges)
        decompositions = list(decompose_even_subset(figure_eight, everything))
        assert len(decompositions) == 3
        assert sorted(len(d) for d in decompositions) == [1, 1, 2]
        report = verify_signed_decomposition(figure_eight, everything)
        assert (report.signed_sum, report.expected) == (1, 1)
        assert report.ok

    def test_bowtie(self, crossing_pair):
        bowtie = [crossing_pair.edge_id(a, b) for a, b in ((0, 1), (1, 3), (3, 2), (2, 0))]
        report = verify_signed_decomposition(crossing_pair, bowtie)
        assert (report.decompositions, report.signed_sum, report.expected) == (1, -1, -1)
        assert report.whitney_ok

    @pytest.mark.parametrize("name", fixture_names())
    def test_every_even_subset(self, name):
        g = load_fixture(name)
        for subset in enumerate_even_subsets(g):
            assert verify_signed_decomposition(g, subset).ok, sorted(subset)

    def test_empty_subset(self, four_cycle):
        assert list(decompose_even_subset(four_cycle, [])) == [()]

    def test_odd_subset_rejected(self, four_cycle):
        with pytest.raises(InputError):
            list(decompose_even_subset(four_cycle, [0, 1]))

    @pytest.mark.parametrize("name", fixture_names())
    def test_generating_function(self, name):
        g = load_fixture(name)
        rng = np.random.default_rng(11)
        x = EdgeWeights(g, rng.uniform(-0.5, 0.5, size=g.n_edges))
        assert z_from_decompositions(g, x) == pytest.approx(
            generating_function_bruteforce(g, x), rel=1e-12
        )


class TestConfigurations:
    def test_doubled_square_cancels_two_squares(self, four_cycle):
        x = EdgeWeights.constant(four_cycle, 0.3)
        report = verify_cancellation(four_cycle, 8, x)
        assert report.n_terms == 2
        assert sorted(w for _, w in report.terms) == pytest.approx([-(0.3**8) / 2, 0.3**8 / 2])
        assert report.ok

    def test_single_square_is_edge_disjoint(self, four_cycle):
        report = verify_cancellation(four_cycle, 4, EdgeWeights.constant(four_cycle, 0.3))
        assert (report.n_terms, report.total) == (0, 0)

    @pytest.mark.parametrize("name", ["two_squares", "rectangle_2x3", "figure_eight"])
    def test_cancellation_up_to_eight(self, name):
        g = load_fixture(name)
        rng = np.random.default_rng(5)
        x = EdgeWeights(g, rng.uniform(-0.5, 0.5, size=g.n_edges))
        for r in range(1, 9):
            assert verify_cancellation(g, r, x).ok, r

    def test_configuration_weight(self, four_cycle):
        square = next(enumerate_loops(four_cycle, 4))
        x = EdgeWeights.constant(four_cycle, 0.5)
        config = LoopConfiguration((square, square))
        assert config.total_length == 8
        assert not config.is_edge_disjoint
        assert config.weight(x) == pytest.approx(loop_weight(square, x) ** 2 / 2)

    def test_caps(self, four_cycle):
        with pytest.raises(CapExceededError):
            list(enumerate_configurations(four_cycle, 11))
        with pytest.raises(CapExceededError):
            list(enumerate_configurations(build_rectangle(4, 4), 4))

    def test_resummation(self, four_cycle):
        x = 0.2
        value, tail = z_from_configurations(four_cycle, EdgeWeights.constant(four_cycle, x), 8)
        assert tail < 1e-3
        assert abs(value - (1 + x**4)) <= tail


class TestLabelledLoops:
    def test_canonical_labels(self, four_cycle):
        loop = label_loop(four_cycle, SQUARE, (1, 2, 3, 4))
        assert label_loop(four_cycle, (3, 2, 1, 0), (2, 3, 4, 1)) == loop
        reversed_loop = label_loop(four_cycle, (0, 1, 2, 3), (4, 3, 2, 1))
        assert reversed_loop == loop

    def test_periodic_loop_starts_at_smallest_label(self, four_cycle):
        doubled = label_loop(four_cycle, SQUARE * 2, (5, 6, 7, 8, 1, 2, 3, 4))
        assert doubled.labels == (1, 2, 3, 4, 5, 6, 7, 8)
        assert doubled.base.multiplicity == 2

    def test_invalid_labels(self, four_cycle):
        with pytest.raises(InputError):
            label_loop(four_cycle, SQUARE, (1, 1, 2, 3))
        with pytest.raises(InputError):
            label_loop(four_cycle, SQUARE, (0, 1, 2, 3))

    def test_labelled_weight_drops_multiplicity(self, four_cycle):
        x = EdgeWeights.constant(four_cycle, 0.5)
        doubled = label_loop(four_cycle, SQUARE * 2, range(1, 9))
        assert labelled_weight(doubled, x) == pytest.approx(-(0.5**8))

    def test_merge_and_split(self, four_cycle):
        pair = frozenset(
            [
                label_loop(four_cycle, SQUARE, (1, 3, 5, 7)),
                label_loop(four_cycle, SQUARE, (2, 4, 6, 8)),
            ]
        )
        assert minimal_label_pair(four_cycle, pair) == (1, 2)
        merged, case = involution(four_cycle, pair)
        assert case == 1
        assert merged == frozenset([label_loop(four_cycle, SQUARE * 2, (1, 3, 5, 7, 2, 4, 6, 8))])
        assert involution(four_cycle, merged) == (pair, 2)

    def test_reversal_flips_the_sign(self):
        g = build_rectangle(3, 2)
        config = frozenset([label_loop(g, ZIGZAG, range(1, len(ZIGZAG) + 1))])
        assert minimal_label_pair(g, config) == (1, 8)
        image, case = involution(g, config)
        assert case == 3
        (before,) = config
        (after,) = image
        assert before.base.winding_turns == 0
        assert after.base.winding_turns % 2 == 1
        assert after.sign == -before.sign
        assert involution(g, image) == (config, 3)

    def test_edge_disjoint_is_fixed(self, four_cycle):
        config = frozenset([label_loop(four_cycle, SQUARE, (1, 2, 3, 4))])
        assert minimal_label_pair(four_cycle, config) is None
        with pytest.raises(InputError):
            involution(four_cycle, config)

    def test_labelling_counts(self, four_cycle):
        square, doubled = enumerate_loops(four_cycle, 8)
        assert expected_labelling_count([square]) == 24
        assert expected_labelling_count([doubled]) == math.factorial(8) // 2
        assert expected_labelling_count([square, square]) == math.factorial(8) // 2


class TestBijectionAudit:
    def test_four_steps(self, four_cycle):
        report = bijection_audit(four_cycle, 4)
        assert report.configurations == 24
        assert sum(report.cases.values()) == 0
        assert report.ok

    @pytest.mark.slow
    def test_eight_steps(self, four_cycle):
        report = bijection_audit(four_cycle, 8)
        half = math.factorial(8) // 2
        assert report.configurations == 2 * half
        assert (report.cases[1], report.cases[2], report.cases[3]) == (half, half, 0)
        assert report.ok, report.counterexample

    def test_cap(self, four_cycle):
        with pytest.raises(CapExceededError):
            bijection_audit(four_cycle, 12)
