"""Fairness-as-intervention toolkit: back-door ACE estimation and DAID training."""

__version__ = "0.1.0"
SPEC_VERSION = "1"
