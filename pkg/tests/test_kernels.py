"""Tests for kernels.py: exact sparse stochastic matrices."""

import logging
from fractions import Fraction

import numpy as np
import pytest

from src.distributions import FinitePmf
from src.exceptions import (
    NonStochasticRowError,
    ShapeMismatchError,
    StateSpaceTooLargeError,
    VerificationError,
)
from src.kernels import (
    StateSpace,
    StochasticKernel,
    build_kernel,
    check_size,
    describe,
    deterministic_kernel,
    identity_matrix,
    solve_linear_system,
)
from src.projection import DecoratedKTree
from src.tree_core import Tree

HALF = Fraction(1, 2)
THIRD = Fraction(1, 3)

AB = StateSpace.of("ab")
FLIP = StochasticKernel(AB, AB, ({1: Fraction(1)}, {0: Fraction(1)}), "flip")
LAZY = StochasticKernel(AB, AB, ({0: HALF, 1: HALF}, {1: Fraction(1)}), "lazy")


class TestStateSpace:
    """Index bijection over canonical states."""

    def test_positions(self):
        """Test states map to their positions."""
        assert AB.position("b") == 1
        assert "a" in AB
        assert "z" not in AB
        assert list(AB) == ["a", "b"]

    def test_unknown_state(self):
        """Test looking up a foreign state raises."""
        with pytest.raises(ShapeMismatchError):
            AB.position("z")

    def test_duplicates(self):
        """Test duplicate states are rejected."""
        with pytest.raises(VerificationError):
            StateSpace.of("aa")


class TestStochasticKernel:
    """Validation and algebra."""

    def test_row_must_sum_to_one(self):
        """Test a substochastic row is rejected."""
        with pytest.raises(NonStochasticRowError):
            StochasticKernel(AB, AB, ({0: HALF}, {1: Fraction(1)}))

    def test_row_must_stay_in_codomain(self):
        """Test a column outside the codomain is rejected."""
        with pytest.raises(NonStochasticRowError):
            StochasticKernel(AB, AB, ({2: Fraction(1)}, {1: Fraction(1)}))

    def test_row_count(self):
        """Test one row per domain state."""
        with pytest.raises(ShapeMismatchError):
            StochasticKernel(AB, AB, ({0: Fraction(1)},))

    def test_compose(self):
        """Test the matrix product of two kernels."""
        product = FLIP.compose(LAZY)
        assert product.rows == ({1: Fraction(1)}, {0: HALF, 1: HALF})
        assert product.name == "flip·lazy"

    def test_left_apply(self):
        """Test pushing a law through a kernel."""
        pi = FinitePmf(("a", "b"), (THIRD, 2 * THIRD))
        assert LAZY.left_apply(pi).as_dict == {"a": Fraction(1, 6), "b": Fraction(5, 6)}

    def test_first_difference(self):
        """Test the first differing entry in canonical order."""
        diff = FLIP.first_difference(LAZY)
        assert (diff.row, diff.column, diff.left, diff.right) == (0, 0, 0, HALF)
        assert FLIP.first_difference(FLIP) is None

    def test_accessors(self):
        """Test entries, supports and row laws."""
        assert LAZY.entry(1, 0) == 0
        assert LAZY.n_entries == 3
        assert LAZY.max_support == 2
        assert LAZY.row_pmf("a").prob("b") == HALF
        assert LAZY.row_pmf("b").as_dict == {"b": 1}


class TestBuilders:
    """Kernels from row functions and maps."""

    def test_build_kernel(self):
        """Test rows are indexed against the codomain."""
        kernel = build_kernel(AB, lambda s: FinitePmf.point_mass("b"), name="to-b")
        assert kernel.rows == ({1: Fraction(1)}, {1: Fraction(1)})

    def test_build_kernel_outside_codomain(self):
        """Test rows charging unknown states raise."""
        with pytest.raises(ShapeMismatchError):
            build_kernel(AB, lambda s: FinitePmf.point_mass("z"))

    def test_build_kernel_bound(self):
        """Test the entry bound comes from the environment."""
        with pytest.MonkeyPatch.context() as mp:
            mp.setenv("DOWNUP_MAX_KERNEL_ENTRIES", "1")
            with pytest.raises(StateSpaceTooLargeError):
                build_kernel(AB, lambda s: FinitePmf.point_mass(s))

    def test_deterministic_kernel(self):
        """Test a map becomes a 0/1 kernel."""
        target = StateSpace.of([0])
        g = deterministic_kernel(AB, target, lambda s: 0)
        assert g.rows == ({0: Fraction(1)}, {0: Fraction(1)})

    def test_check_size_warns(self, caplog):
        """Test a warning above half the bound, an error above it."""
        with caplog.at_level(logging.WARNING, logger="src.kernels"):
            check_size("test", 6, 10)
        assert "6 of 10" in caplog.text
        with pytest.raises(StateSpaceTooLargeError):
            check_size("test", 11, 10)


class TestLinearSolve:
    """Exact Gauss–Jordan elimination."""

    def test_two_by_two(self):
        """Test a small system with a pivot swap."""
        a = np.array([[Fraction(0), Fraction(1)], [Fraction(2), Fraction(1)]], dtype=object)
        b = np.array([[Fraction(3)], [Fraction(5)]], dtype=object)
        x = solve_linear_system(a, b)
        assert x[0, 0] == 1
        assert x[1, 0] == 3

    def test_identity(self):
        """Test the identity solves to the right-hand side."""
        b = np.array([THIRD, HALF], dtype=object)
        assert list(solve_linear_system(identity_matrix(2), b)) == [THIRD, HALF]

    def test_singular(self):
        """Test a singular matrix raises."""
        a = np.array([[Fraction(1), Fraction(1)], [Fraction(1), Fraction(1)]], dtype=object)
        with pytest.raises(VerificationError):
            solve_linear_system(a, np.array([Fraction(1), Fraction(1)], dtype=object))

    def test_not_square(self):
        """Test a rectangular matrix raises."""
        with pytest.raises(ShapeMismatchError):
            solve_linear_system(np.zeros((2, 3), dtype=object), np.zeros(2, dtype=object))


class TestDescribe:
    """Printable state descriptions."""

    def test_tree(self):
        """Test trees print as their edge sets."""
        assert describe(Tree.from_edges([[1], [2], [1, 2]])) == "{{1},{2},{1,2}}"

    def test_decorated(self):
        """Test decorated states print their JSON form."""
        shape = Tree.from_edges([[1], [2], [1, 2]])
        d = DecoratedKTree.build(shape, {1: 1, 2: 2, 3: 0})
        assert "'x': {'1': 1, '2': 2}" in describe(d)
