"""Tests for exceptions.py: the error hierarchy."""

import json

import pytest

from src.exceptions import (
    AlphaFormatError,
    ChainError,
    ChainSizeError,
    ConfigurationError,
    DistributionError,
    DownUpError,
    InvalidAlphaError,
    InvalidDrawCountError,
    InvalidTreeError,
    MassConservationError,
    NonStochasticRowError,
    ProjectionRangeError,
    SettingsConfigError,
    SimSpecError,
    StateSpaceTooLargeError,
    TreeError,
    TreeFormatError,
    VerificationError,
)


class TestHierarchy:
    """Subclass relationships."""

    @pytest.mark.parametrize(
        ("error", "base"),
        [
            (InvalidTreeError("not laminar"), TreeError),
            (ProjectionRangeError("k=0"), TreeError),
            (InvalidAlphaError(2, "[0, 1]"), DistributionError),
            (AlphaFormatError("0.5"), DistributionError),
            (InvalidDrawCountError(-1), DistributionError),
            (ChainSizeError(2, 3), ChainError),
            (StateSpaceTooLargeError("kernel", 11, 10), VerificationError),
            (SettingsConfigError("DOWNUP_WORKERS", "x"), ConfigurationError),
            (SimSpecError("bad"), ConfigurationError),
        ],
    )
    def test_bases(self, error, base):
        """Test each error is caught by its family and by the root."""
        assert isinstance(error, base)
        assert isinstance(error, DownUpError)


class TestDetails:
    """Messages and structured details."""

    def test_to_dict(self):
        """Test the dictionary form is JSON serializable."""
        data = ChainSizeError(2, 3).to_dict()
        assert data["error"] == "ChainSizeError"
        assert data["details"] == {"size": 2, "minimum": 3}
        json.dumps(data)

    def test_default_details(self):
        """Test details default to an empty dict."""
        assert DownUpError("plain").details == {}

    def test_tree_format_position(self):
        """Test the parse position appears in the message."""
        error = TreeFormatError("unbalanced parenthesis", 4)
        assert "position 4" in error.message
        assert error.details["position"] == 4

    def test_invalid_tree_truncates_edges(self):
        """Test long edge lists are cut in the details."""
        error = InvalidTreeError("duplicate edge", [[1]] * 30)
        assert len(error.details["edges"]) == 20

    def test_alpha_format(self):
        """Test the rejected text is kept."""
        error = AlphaFormatError("0.5")
        assert error.details == {"value": "0.5", "expected": "p/q"}

    def test_numeric_details_are_strings(self):
        """Test fractions and totals are stored as text."""
        assert NonStochasticRowError("x", 0.5).details["total"] == "0.5"
        assert InvalidAlphaError(2, "[0, 1]").details["alpha"] == "2"

    def test_mass_conservation(self):
        """Test both totals are reported."""
        error = MassConservationError(5, 4, "up-move")
        assert "expected 5, got 4" in error.message
