"""Committed calibration artifacts (JSON)."""
