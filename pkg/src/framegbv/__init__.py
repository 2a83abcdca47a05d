"""Frame-semantic classification of gender-based violence in clinical records."""

__version__ = "0.1.0"
