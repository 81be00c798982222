"""Tests for verify.py: the exact verification engine."""

import json
from fractions import Fraction

import pytest

from src.decorated_chain import DecoratedChainConfig
from src.distributions import FinitePmf
from src.exceptions import ConfigurationError, ProjectionRangeError
from src.growth import growth_law
from src.kernels import StochasticKernel
from src.ntree_chain import label_law
from src.tree_core import Tree
from src.verify import (
    VerificationReport,
    check_collapsed_intertwining,
    check_collapsed_kemeny_snell,
    check_consistency,
    check_decrement,
    check_direct_kemeny_snell,
    check_down_invariance,
    check_first_drop_law,
    check_insertion_law,
    check_intertwining,
    check_intertwining_power,
    check_marginal_law,
    check_ntree_stationarity,
    check_projective_chain_markov,
    check_resample_law,
    check_resampling_law,
    check_spatial_markov,
    check_stationary,
    check_state_space,
    first_drop_pmf,
    ntree_kernel,
    projection_setup,
    run_named_check,
    summarize,
)

HALF = Fraction(1, 2)
THIRD = Fraction(1, 3)


class TestStationarity:
    """Invariance of the growth laws under the tree chains."""

    @pytest.mark.parametrize("n", [4, 5])
    def test_uniform_chain(self, n):
        """Test the uniform law is an exact fixed vector."""
        report = check_ntree_stationarity(n)
        assert report.passed
        assert report.details["states"] == len(growth_law(n).support)

    @pytest.mark.parametrize("alpha", [Fraction(1, 4), THIRD, HALF, Fraction(2, 3)])
    def test_alpha_chain(self, alpha):
        """Test q_{4,alpha} is an exact fixed vector of the alpha chain."""
        assert check_ntree_stationarity(4, alpha).passed

    @pytest.mark.slow
    @pytest.mark.parametrize("alpha", [None, Fraction(1, 4), THIRD, Fraction(2, 3)])
    def test_six_leaves(self, alpha):
        """Test stationarity on the 945 trees with six leaves."""
        assert check_ntree_stationarity(6, alpha).passed

    @pytest.mark.slow
    def test_seven_leaves(self):
        """Test the uniform law is fixed by the uniform chain on the 10395 trees with seven leaves."""
        report = check_ntree_stationarity(7)
        assert report.passed
        assert report.details["states"] == 10395

    def test_perturbed_law_fails(self):
        """Test moving mass between two trees is detected."""
        pi = growth_law(4)
        probs = list(pi.probs)
        probs[0] += Fraction(1, 30)
        probs[1] -= Fraction(1, 30)
        report = check_stationary(FinitePmf(pi.support, tuple(probs)), ntree_kernel(4))
        assert not report.passed
        assert set(report.counterexample) == {"state", "pi_K", "pi"}


class TestLumpingAndIntertwining:
    """Kemeny–Snell and intertwining for the collapsed chain."""

    @pytest.mark.parametrize(("n", "k"), [(4, 2), (5, 2)])
    def test_collapsed_kemeny_snell(self, n, k):
        """Test the collapsed chain lumps onto decorated trees."""
        result = check_collapsed_kemeny_snell(n, k)
        assert result.report.passed
        assert result.induced is not None

    def test_direct_pair_is_not_lumpable(self):
        """Test the uniform chain with the decorated projection fails Kemeny–Snell."""
        result = check_direct_kemeny_snell(4, 2)
        assert not result.report.passed
        assert result.induced is None
        assert {"x1", "x2", "y", "Kg_x1", "Kg_x2"} <= set(result.report.counterexample)

    def test_direct_pair_reports_rows(self):
        """Test the failing report carries both lumped rows as laws."""
        report = check_direct_kemeny_snell(4, 2).report
        y = report.counterexample["y"]
        for side in ("x1", "x2"):
            row = report.details[f"Kg_row_{side}"]
            assert sum(row.values()) == 1
            assert row.get(y, 0) == report.counterexample[f"Kg_{side}"]

    @pytest.mark.parametrize(("n", "k"), [(4, 2), (5, 2)])
    def test_collapsed_intertwining(self, n, k):
        """Test Λ⋆P = QΛ⋆ and its two-step consequence."""
        report = check_collapsed_intertwining(n, k)
        assert report.passed
        assert report.details["two_step"] == "pass"

    def test_perturbed_q_fails(self):
        """Test moving mass within one row of Q breaks intertwining."""
        setup = projection_setup("star", 4, 2)
        p = ntree_kernel(4)
        q = setup.link.compose(p).compose(setup.g)
        rows = [dict(row) for row in q.rows]
        r = next(idx for idx, row in enumerate(rows) if len(row) >= 2)
        c1, c2 = sorted(rows[r])[:2]
        delta = rows[r][c1] / 2
        rows[r][c1] -= delta
        rows[r][c2] += delta
        bad = StochasticKernel(q.domain, q.codomain, tuple(rows), "Q perturbed")
        report = check_intertwining(setup.link, p, bad)
        assert not report.passed
        assert check_intertwining_power(setup.link, p, setup.g).passed


class TestConsistency:
    """Decorated chains against ΛPρ•."""

    @pytest.mark.parametrize(("n", "k"), [(4, 2), (5, 2)])
    def test_uniform(self, n, k):
        """Test the uniform decorated chain equals Λ•Pρ•."""
        assert check_consistency(n, k, DecoratedChainConfig("uniform")).passed

    @pytest.mark.parametrize("alpha", [THIRD, HALF])
    def test_alpha(self, alpha):
        """Test the alpha decorated chain equals Λ•P_αρ•."""
        assert check_consistency(4, 2, DecoratedChainConfig("alpha", alpha)).passed

    @pytest.mark.slow
    def test_uniform_three_leaf_shape(self):
        """Test consistency with three-leaf shapes."""
        assert check_consistency(5, 3, DecoratedChainConfig("uniform")).passed


class TestStructuralLaws:
    """Spatial Markov property, decrement and label laws."""

    @pytest.mark.parametrize(("n", "k", "alpha"), [(4, 2, HALF), (5, 2, THIRD), (5, 3, THIRD)])
    def test_spatial_markov(self, n, k, alpha):
        """Test internal structures are independent given the collapsed tree."""
        assert check_spatial_markov(n, k, alpha).passed

    @pytest.mark.parametrize("alpha", [THIRD, HALF])
    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_decrement(self, n, alpha):
        """Test the first spinal mass of q̃_{n+1,alpha} and the split independence."""
        report = check_decrement(n, alpha)
        assert report.passed
        if alpha == HALF:
            assert report.details["bridge_form"] == "pass"

    @pytest.mark.slow
    @pytest.mark.parametrize("alpha", [THIRD, HALF])
    def test_decrement_seven(self, alpha):
        """Test the decrement law on the modified law with eight leaves."""
        report = check_decrement(7, alpha)
        assert report.passed
        if alpha == HALF:
            assert report.details["bridge_form"] == "pass"

    @pytest.mark.parametrize(("n", "alpha"), [(4, THIRD), (4, HALF), (5, THIRD), (5, HALF)])
    def test_resample_law(self, n, alpha):
        """Test the stationary law of the resampled label."""
        assert check_resample_law(n, alpha).passed

    @pytest.mark.parametrize("alpha", [THIRD, HALF])
    def test_down_invariance(self, alpha):
        """Test the relabelled reduced tree follows q_{n-1,alpha} given (i, ĩ)."""
        assert check_down_invariance(5, alpha).passed

    @pytest.mark.parametrize(("n", "k"), [(4, 2), (5, 2), (5, 3)])
    def test_marginal_law(self, n, k):
        """Test the decorated marginal of q_{n,alpha}."""
        assert check_marginal_law(n, k, THIRD).passed

    @pytest.mark.parametrize(("m", "k"), [(4, 2), (5, 3)])
    def test_insertion_law(self, m, k):
        """Test the conditional law of adding label k."""
        assert check_insertion_law(m, k, THIRD).passed

    @pytest.mark.parametrize(("n", "k", "i"), [(4, 2, 1), (4, 2, 2), (5, 3, 2)])
    def test_resampling_law(self, n, k, i):
        """Test the reattachment law of label i."""
        assert check_resampling_law(n, k, i).passed

    def test_resampling_law_range(self):
        """Test k must be below n."""
        with pytest.raises(ProjectionRangeError):
            check_resampling_law(4, 4, 1)


class TestFirstDrop:
    """Law of the first label dropped by a decorated chain."""

    def test_matches_label_law(self):
        """Test the absorbing computation at (5, 3, 1/2)."""
        assert check_first_drop_law(5, 3, HALF).passed

    def test_uniform_variant(self):
        """Test the uniform decorated chain drops labels with the same law."""
        pmf = first_drop_pmf(5, 3, DecoratedChainConfig("uniform"))
        assert pmf.as_dict == label_law(3, HALF).as_dict

    @pytest.mark.slow
    def test_six_three_third(self):
        """Test the absorbing computation at (6, 3, 1/3)."""
        assert check_first_drop_law(6, 3, THIRD).passed


class TestBeadStrings:
    """Markov property of the projected chain over three slices."""

    def test_stationary_start(self):
        """Test the bead-string projection factorizes from stationarity."""
        assert check_projective_chain_markov(4, 2, "beads").passed

    def test_stationary_start_breaks_nothing(self):
        """Test no slice is reported for the stationary start."""
        report = check_projective_chain_markov(4, 2, "beads")
        assert report.counterexample is None
        assert "breaks_at" not in report.details

    def test_point_mass_start_fails(self):
        """Test the pinned start breaks both the first step and the step after it."""
        report = check_projective_chain_markov(4, 2, "beads", "point-mass")
        assert not report.passed
        assert report.counterexample["start"] != "stationary"
        assert report.details["breaks_at"] == [1, 2]
        assert report.counterexample["breaks_at_slice"] == 2
        assert len(report.counterexample["slices"]) == 3

    def test_pinned_start_tree(self):
        """Test the pinned start at (4, 2) is leaf 1 beside the cherry {3,4}, with 2 above."""
        tree = Tree.from_edges([[1], [2], [3], [4], [3, 4], [1, 3, 4], [1, 2, 3, 4]])
        pinned = check_projective_chain_markov(4, 2, "beads", "point-mass")
        explicit = check_projective_chain_markov(4, 2, "beads", tree)
        assert pinned.parameters["start"] == explicit.parameters["start"]
        assert explicit.details["breaks_at"] == [1, 2]

    def test_unknown_projection(self):
        """Test only star and beads are accepted."""
        with pytest.raises(ConfigurationError):
            check_projective_chain_markov(4, 2, "mass")  # type: ignore[arg-type]


class TestStateSpaceCheck:
    """Direct enumeration against projection images."""

    @pytest.mark.parametrize("kind", ["mass", "star", "beads"])
    def test_images(self, kind):
        """Test every projection at (5, 2)."""
        report = check_state_space(5, 2, kind)
        assert report.passed
        assert report.details["states"] > 0


class TestReports:
    """Report serialization and dispatch."""

    def test_report_json(self, tmp_path):
        """Test fractions become strings and the report is written as JSON."""
        report = VerificationReport("demo", {"alpha": THIRD}, False, {"p": HALF})
        path = tmp_path / "report.json"
        report.write(path)
        data = json.loads(path.read_text(encoding="utf-8"))
        assert data["verdict"] == "fail"
        assert data["parameters"] == {"alpha": "1/3"}
        assert data["counterexample"] == {"p": "1/2"}

    def test_summarize(self):
        """Test the summary passes only if every report passes."""
        ok = VerificationReport("a", {}, True)
        bad = VerificationReport("b", {}, False)
        assert summarize([ok])["passed"]
        assert not summarize([ok, bad])["passed"]

    def test_dispatch(self):
        """Test checks are dispatched by name."""
        (report,) = run_named_check("resample-law", n=4, alpha=THIRD)
        assert report.check == "resample-law"
        assert report.passed

    def test_dispatch_direct_pair(self):
        """Test projection mass selects the non-lumpable direct pair."""
        (report,) = run_named_check("kemeny-snell", n=4, k=2, projection="mass")
        assert not report.passed

    def test_dispatch_errors(self):
        """Test unknown names and missing k are configuration errors."""
        with pytest.raises(ConfigurationError):
            run_named_check("no-such-check", n=4)
        with pytest.raises(ConfigurationError):
            run_named_check("consistency", n=4)

    def test_projection_setup_range(self):
        """Test k outside 1..n is rejected."""
        with pytest.raises(ProjectionRangeError):
            projection_setup("mass", 4, 5)
