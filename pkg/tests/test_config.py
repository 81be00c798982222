"""Tests for config.py: environment-driven settings."""

import os

import pytest

from src.config import Settings, get_settings, get_settings_info
from src.constants import DEFAULT_MAX_ENUM_LEAVES, DEFAULT_MAX_KERNEL_ENTRIES
from src.exceptions import SettingsConfigError

ENV_KEYS = [
    "DOWNUP_MAX_ENUM_LEAVES",
    "DOWNUP_MAX_KERNEL_ENTRIES",
    "DOWNUP_LOG_LEVEL",
    "DOWNUP_WORKERS",
]


class TestSettings:
    """Test suite for get_settings."""

    def setup_method(self):
        """Clear environment variables before each test for isolation."""
        self.original_env = {}
        for key in ENV_KEYS:
            self.original_env[key] = os.environ.get(key)
            if key in os.environ:
                del os.environ[key]

    def teardown_method(self):
        """Restore original environment variables after each test."""
        for key, value in self.original_env.items():
            if value is not None:
                os.environ[key] = value
            elif key in os.environ:
                del os.environ[key]

    def test_defaults(self):
        """Test defaults when nothing is set."""
        settings = get_settings()
        assert settings.max_enum_leaves == DEFAULT_MAX_ENUM_LEAVES
        assert settings.max_kernel_entries == DEFAULT_MAX_KERNEL_ENTRIES
        assert settings.log_level == "WARNING"
        assert settings.workers == 1

    def test_overrides(self):
        """Test values are read on every call."""
        os.environ["DOWNUP_MAX_ENUM_LEAVES"] = "7"
        os.environ["DOWNUP_WORKERS"] = "4"
        os.environ["DOWNUP_LOG_LEVEL"] = "debug"
        settings = get_settings()
        assert settings.max_enum_leaves == 7
        assert settings.workers == 4
        assert settings.log_level == "DEBUG"

    def test_blank_means_default(self):
        """Test an empty variable falls back to the default."""
        os.environ["DOWNUP_WORKERS"] = " "
        assert get_settings().workers == 1

    @pytest.mark.parametrize(
        ("key", "value"),
        [
            ("DOWNUP_MAX_ENUM_LEAVES", "abc"),
            ("DOWNUP_MAX_ENUM_LEAVES", "65"),
            ("DOWNUP_MAX_KERNEL_ENTRIES", "0"),
            ("DOWNUP_WORKERS", "-2"),
            ("DOWNUP_LOG_LEVEL", "LOUD"),
        ],
    )
    def test_invalid(self, key, value):
        """Test invalid values raise SettingsConfigError naming the variable."""
        os.environ[key] = value
        with pytest.raises(SettingsConfigError) as exc_info:
            get_settings()
        assert exc_info.value.details["variable"] == key

    def test_frozen(self):
        """Test settings cannot be mutated."""
        settings = get_settings()
        with pytest.raises(Exception):
            settings.workers = 3  # type: ignore[misc]

    def test_info(self):
        """Test the display dictionary mirrors the model."""
        info = get_settings_info()
        assert set(info) == set(Settings.model_fields)

