"""Tests for the mimo package."""
