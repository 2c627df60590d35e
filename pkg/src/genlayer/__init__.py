"""Rate-quality learning and prompt-size selection for generative relaying."""

__version__ = "0.1.0"
