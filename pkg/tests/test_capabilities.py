"""Tests for the capability description exposed by the info command."""

from src.constants import CAPABILITIES_DATA, CHECK_NAMES, PACKAGE_VERSION
from src.verify import run_named_check


class TestCapabilities:
    """Test suite for CAPABILITIES_DATA."""

    def test_structure(self):
        """Test that required fields exist."""
        for key in ("version", "chains", "projections", "growth_models", "checks", "limits"):
            assert key in CAPABILITIES_DATA

    def test_version_format(self):
        """Test that version follows semantic versioning."""
        version = CAPABILITIES_DATA["version"]
        assert version == PACKAGE_VERSION
        parts = version.split(".")
        assert len(parts) == 3
        for part in parts:
            assert part.isdigit()

    def test_limits(self):
        """Test that limits are positive integers."""
        for value in CAPABILITIES_DATA["limits"].values():
            assert isinstance(value, int)
            assert value > 0

    def test_every_check_is_dispatchable(self):
        """Test that each advertised check name is known to the dispatcher."""
        assert CAPABILITIES_DATA["checks"] == list(CHECK_NAMES)
        for name in CHECK_NAMES:
            reports = run_named_check(name, n=3, k=2)
            assert reports[0].check == name
