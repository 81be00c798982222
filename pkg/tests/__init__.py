"""Test package for the down-up chain toolkit."""
