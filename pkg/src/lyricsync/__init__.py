"""Lyrics-to-audio forced alignment on phoneme, pitch and boundary posteriorgrams."""

__version__ = "0.1.0"
