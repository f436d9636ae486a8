"""Acoustic intelligibility measurements and severity classification for dysarthric speech."""

__version__ = "0.1.0"

from .features import FEATURE_NAMES, FEATURE_DIMENSIONS  # noqa: F401
