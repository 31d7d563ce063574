"""Scenario selection and scenario-generation methods for robust combinatorial problems."""

__version__ = "0.1.0"
