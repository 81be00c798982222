"""Tests for decorated_chain.py: down-up moves on decorated k-trees."""

from collections import Counter
from fractions import Fraction

import pytest

from src.decorated_chain import (
    Case,
    DecoratedChainConfig,
    alpha_decorated_step,
    classify,
    decorated_kernel_row,
    decorated_step,
    decorated_transitions,
    drop_label,
    insert_label,
    insert_label_pmf,
    resample_label,
    resample_label_pmf,
    selection_pmf,
    swap_decorated,
    uniform_decorated_step,
    up_move,
    up_move_pmf,
)
from src.distributions import RngStream, mixture
from src.exceptions import ChainError, ChainSizeError, InvalidAlphaError, MovePreconditionError
from src.harness import gof_test
from src.projection import DecoratedKTree, decorated_marginal_pmf, state_to_json
from src.tree_core import Tree, mask_of

HALF = Fraction(1, 2)
THIRD = Fraction(1, 3)

CHERRY = Tree.from_edges([[1], [2], [1, 2]])
CATERPILLAR = Tree.from_edges([[1], [2], [3], [1, 2], [1, 2, 3]])
ROOT2 = mask_of([1, 2])
ROOT3 = mask_of([1, 2, 3])


def cherry(x1: int, x2: int, y: int) -> DecoratedKTree:
    return DecoratedKTree.build(CHERRY, {1: x1, 2: x2, ROOT2: y})


def caterpillar(x: tuple[int, int, int], y_low: int, y_root: int) -> DecoratedKTree:
    masses = {1: x[0], 2: x[1], 4: x[2], ROOT2: y_low, ROOT3: y_root}
    return DecoratedKTree.build(CATERPILLAR, masses)


class TestConfig:
    """Variant and alpha handling."""

    def test_uniform_runs_at_half(self):
        """Test the uniform chain fixes alpha at 1/2."""
        assert DecoratedChainConfig("uniform").move_alpha == HALF
        with pytest.raises(ChainError):
            DecoratedChainConfig("uniform", THIRD)

    def test_alpha_range(self):
        """Test the alpha chain needs 0 < alpha < 1."""
        assert DecoratedChainConfig("alpha", THIRD).move_alpha == THIRD
        with pytest.raises(ChainError):
            DecoratedChainConfig("alpha")
        with pytest.raises(InvalidAlphaError):
            DecoratedChainConfig("alpha", Fraction(1))


class TestSelection:
    """Edge selection and case classification."""

    def test_selection_is_mass_proportional(self):
        """Test edges are picked with probability mass / n."""
        pmf = selection_pmf(cherry(1, 1, 3))
        assert pmf.prob(ROOT2) == Fraction(3, 5)

    def test_cases(self):
        """Test the three branches."""
        d = cherry(1, 1, 3)
        assert classify(d, ROOT2) is Case.A
        assert classify(d, 1) is Case.B
        e = cherry(1, 4, 0)
        assert classify(e, 1) is Case.C
        assert classify(e, 2) is Case.A

    def test_empty_edge(self):
        """Test an edge without mass cannot be selected."""
        with pytest.raises(MovePreconditionError):
            classify(cherry(1, 4, 0), ROOT2)


class TestLabelMoves:
    """Dropping, inserting and resampling labels."""

    def test_drop_label(self):
        """Test dropping leaf 1 removes its parent and relabels down."""
        d = caterpillar((1, 2, 1), y_low=0, y_root=1)
        assert drop_label(d, 1) == cherry(2, 1, 1)

    def test_drop_needs_empty_parent(self):
        """Test a leaf with a massive parent cannot be dropped."""
        with pytest.raises(MovePreconditionError):
            drop_label(caterpillar((1, 2, 1), y_low=1, y_root=0), 1)

    def test_swap_decorated(self):
        """Test masses stay on their edges when labels swap."""
        swapped = swap_decorated(caterpillar((1, 2, 3), 0, 0), 1, 3)
        assert swapped.x(3) == 1
        assert swapped.x(1) == 3
        assert swapped.y(mask_of([2, 3])) == 0

    def test_insert_preserves_mass(self):
        """Test insertion adds a leaf without changing the total."""
        d = cherry(3, 1, 2)
        law = insert_label_pmf(d, THIRD)
        assert all(s.k == 3 and s.total == 6 for s in law.support)

    def test_insert_needs_spare_mass(self):
        """Test insertion fails when every leaf has mass 1 and internal edges are empty."""
        with pytest.raises(MovePreconditionError):
            insert_label_pmf(cherry(1, 1, 0), THIRD)

    def test_insert_leaf_edge_split(self):
        """Test a leaf edge of mass 2 splits into two unit leaves and an empty edge."""
        law = insert_label_pmf(cherry(2, 1, 0), THIRD)
        assert len(law) == 1
        (state,) = law.support
        assert (state.x(1), state.x(3), state.y(mask_of([1, 3]))) == (1, 1, 0)

    def test_insert_sampler_in_support(self):
        """Test sampled insertions are in the exact support."""
        d = cherry(3, 1, 2)
        law = insert_label_pmf(d, THIRD)
        rng = RngStream(5)
        for _ in range(30):
            assert law.prob(insert_label(d, THIRD, rng)) > 0

    def test_up_move_weights(self):
        """Test the up-move picks edges with weights x - alpha and y + alpha."""
        law = up_move_pmf(cherry(1, 1, 1), THIRD)
        assert law.prob(cherry(1, 1, 2)) == HALF
        assert law.prob(cherry(2, 1, 1)) == Fraction(1, 4)

    def test_up_move_sampler_in_support(self):
        """Test sampled up-moves are in the exact support."""
        d = cherry(1, 1, 1)
        law = up_move_pmf(d, THIRD)
        rng = RngStream(13)
        for _ in range(20):
            assert law.prob(up_move(d, THIRD, rng)) > 0

    def test_resample_preserves_mass_and_labels(self):
        """Test resampling keeps n and k."""
        d = caterpillar((1, 2, 1), y_low=0, y_root=1)
        law = resample_label_pmf(d, 1)
        assert all(s.total == 5 and s.k == 3 for s in law.support)
        rng = RngStream(6)
        for _ in range(20):
            assert law.prob(resample_label(d, 1, rng)) > 0

    def test_resample_on_cherry(self):
        """Test label 1 returns to the remaining leaf edge with DM(1; 1/2, 1/2, 1/2) splits."""
        law = resample_label_pmf(cherry(1, 2, 0), 1)
        third = Fraction(1, 3)
        assert law.as_dict == {cherry(1, 2, 0): third, cherry(2, 1, 0): third, cherry(1, 1, 1): third}


class TestTransitions:
    """Exact rows and their invariant law."""

    @pytest.mark.parametrize("cfg", [DecoratedChainConfig("uniform"), DecoratedChainConfig("alpha", THIRD)])
    def test_rows_conserve_mass(self, cfg):
        """Test every row is a pmf on states of the same mass and size."""
        for d in (cherry(1, 1, 3), cherry(1, 4, 0), caterpillar((1, 2, 1), 0, 1)):
            row = decorated_kernel_row(d, cfg)
            assert all(s.total == d.total and s.k == d.k for s in row.support)

    def test_case_c_records_dropped_label(self):
        """Test case C transitions carry the label that was resampled."""
        moves = [t.move for t in decorated_transitions(cherry(1, 4, 0), DecoratedChainConfig("uniform"))]
        dropped = {m.dropped for m in moves if m.case is Case.C}
        assert dropped == {2}

    def test_case_b_records_decrement(self):
        """Test case B transitions carry the mass taken from the parent."""
        moves = decorated_transitions(cherry(1, 1, 3), DecoratedChainConfig("alpha", THIRD))
        decrements = {t.move.decrement for t in moves if t.move.case is Case.B}
        assert decrements == {1, 2, 3}

    def test_named_steps(self):
        """Test the named one-step samplers stay within their exact rows."""
        d = caterpillar((1, 2, 1), y_low=0, y_root=2)
        rng = RngStream(12)
        uniform_row = decorated_kernel_row(d, DecoratedChainConfig("uniform"))
        alpha_row = decorated_kernel_row(d, DecoratedChainConfig("alpha", THIRD))
        for _ in range(20):
            assert uniform_row.prob(uniform_decorated_step(d, rng)) > 0
            assert alpha_row.prob(alpha_decorated_step(d, THIRD, rng)) > 0

    def test_too_little_mass(self):
        """Test a total mass below 3 cannot move."""
        with pytest.raises(ChainSizeError):
            decorated_kernel_row(cherry(1, 1, 0), DecoratedChainConfig("uniform"))

    @pytest.mark.parametrize(
        ("n", "k", "cfg"),
        [
            (5, 2, DecoratedChainConfig("uniform")),
            (5, 3, DecoratedChainConfig("uniform")),
            (5, 2, DecoratedChainConfig("alpha", THIRD)),
        ],
    )
    def test_marginal_is_invariant(self, n, k, cfg):
        """Test the projected stationary law is fixed by the decorated chain."""
        law = decorated_marginal_pmf(n, k, cfg.move_alpha)
        after = mixture((p, decorated_kernel_row(d, cfg)) for d, p in law.items())
        assert after.as_dict == law.as_dict

    @pytest.mark.statistical
    @pytest.mark.parametrize("cfg", [DecoratedChainConfig("uniform"), DecoratedChainConfig("alpha", THIRD)])
    def test_sampled_step_matches_row(self, cfg):
        """Test the urn-driven step against the exact row."""
        d = caterpillar((1, 2, 1), y_low=0, y_root=2)
        rng = RngStream(77)
        counts = Counter(state_to_json(decorated_step(d, cfg, rng)) for _ in range(5000))
        expected = decorated_kernel_row(d, cfg).pushforward(state_to_json)
        assert gof_test(counts, expected).passed
