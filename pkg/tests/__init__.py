"""Tests for the PNC lab package."""
