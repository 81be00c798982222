"""Tests for growth.py: Rémy and Ford growth laws and samplers."""

from collections import Counter
from fractions import Fraction

import pytest

from src.distributions import RngStream
from src.exceptions import InvalidAlphaError, TreeError
from src.growth import (
    REMY,
    GrowthConfig,
    attachment_pmf,
    edge_weights,
    growth_law,
    grow_step,
    growth_pmf,
    sample_tree,
)
from src.harness import gof_test
from src.tree_core import Tree, count_trees, delete_leaf, encode, mask_of

THIRD = Fraction(1, 3)
CHERRY = Tree.from_edges([[1], [2], [1, 2]])
ON_ROOT = Tree.from_edges([[1], [2], [3], [1, 2], [1, 2, 3]])


class TestGrowthConfig:
    """Alpha ranges for the two variants."""

    def test_defaults_to_remy(self):
        """Test the default config is alpha 1/2, unmodified."""
        assert REMY == GrowthConfig(Fraction(1, 2))

    def test_modified_needs_open_alpha(self):
        """Test the modified variant rejects alpha 0 and 1."""
        with pytest.raises(InvalidAlphaError):
            GrowthConfig(Fraction(0), modified=True)
        GrowthConfig(Fraction(0))

    def test_alpha_from_text(self):
        """Test alpha may be given as p/q text."""
        assert GrowthConfig("1/3").alpha == THIRD  # type: ignore[arg-type]


class TestAttachment:
    """Edge weights of a single growth step."""

    def test_plain_weights(self):
        """Test external edges get 1 - alpha and internal edges alpha."""
        weights = dict(edge_weights(CHERRY, GrowthConfig(THIRD)))
        assert weights[mask_of([1])] == Fraction(2, 3)
        assert weights[mask_of([1, 2])] == THIRD

    def test_modified_weights(self):
        """Test the modified variant gives edge {1} weight alpha."""
        weights = dict(edge_weights(CHERRY, GrowthConfig(THIRD, modified=True)))
        assert weights[mask_of([1])] == THIRD
        assert weights[mask_of([2])] == Fraction(2, 3)

    def test_single_leaf(self):
        """Test the one-leaf tree attaches on its only edge."""
        assert attachment_pmf(Tree.leaf(1), GrowthConfig(THIRD)).probs == (1,)


class TestGrowthLaw:
    """Exact laws over all trees on [n]."""

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_remy_is_uniform(self, n):
        """Test Rémy growth is uniform on trees."""
        law = growth_law(n)
        assert set(law.probs) == {Fraction(1, count_trees(n))}

    def test_three_leaves(self):
        """Test the root attachment has probability alpha / (2 - alpha)."""
        law = growth_law(3, GrowthConfig(THIRD))
        assert law.prob(ON_ROOT) == Fraction(1, 5)
        assert growth_pmf(ON_ROOT, GrowthConfig(THIRD)) == Fraction(1, 5)

    def test_alpha_zero_never_uses_internal_edges(self):
        """Test alpha 0 gives zero mass to trees built by internal attachment."""
        assert growth_law(3, GrowthConfig(Fraction(0))).prob(ON_ROOT) == 0

    def test_alpha_one_gives_the_comb(self):
        """Test alpha 1 always attaches at the root."""
        law = growth_law(3, GrowthConfig(Fraction(1)))
        assert law.prob(ON_ROOT) == 1

    def test_modified_agrees_at_half(self):
        """Test the modified variant coincides with Rémy at alpha 1/2."""
        assert growth_law(4, GrowthConfig(Fraction(1, 2), modified=True)).probs == growth_law(4).probs

    @pytest.mark.parametrize("alpha", [Fraction(1, 4), THIRD, Fraction(2, 3)])
    def test_modified_is_a_law(self, alpha):
        """Test the modified weights normalize on five leaves."""
        law = growth_law(5, GrowthConfig(alpha, modified=True))
        assert sum(law.probs) == 1

    def test_requires_prefix_labels(self):
        """Test growth probabilities need labels 1..m."""
        with pytest.raises(TreeError):
            growth_pmf(Tree.from_edges([[1], [3], [1, 3]]), REMY)


class TestSampler:
    """Sampling trees by running the growth process."""

    def test_sample_is_a_tree_on_n(self):
        """Test sampled trees have labels 1..n."""
        t = sample_tree(7, GrowthConfig(THIRD), RngStream(1))
        assert t.label_list == tuple(range(1, 8))
        Tree.from_masks(t.edges)

    def test_grow_step_adds_next_label(self):
        """Test one growth step attaches leaf m+1 and keeps the rest."""
        grown = grow_step(CHERRY, GrowthConfig(THIRD), RngStream(2))
        assert grown.label_list == (1, 2, 3)
        assert delete_leaf(grown, 3) == CHERRY

    def test_sample_is_reproducible(self):
        """Test the same stream gives the same tree."""
        assert sample_tree(6, REMY, RngStream(4, 2)) == sample_tree(6, REMY, RngStream(4, 2))

    def test_bad_size(self):
        """Test n must be at least one."""
        with pytest.raises(TreeError):
            sample_tree(0, REMY, RngStream(0))

    @pytest.mark.statistical
    def test_sampler_matches_law(self):
        """Test sampled four-leaf trees fit the exact Ford law."""
        cfg = GrowthConfig(THIRD)
        rng = RngStream(2024)
        counts = Counter(encode(sample_tree(4, cfg, rng)).decode("ascii") for _ in range(6000))
        expected = growth_law(4, cfg).pushforward(lambda t: encode(t).decode("ascii"))
        assert gof_test(counts, expected).passed
