"""Resident scorer service for MT metrics, with deterministic stub modes."""

__version__ = "0.1.0"
