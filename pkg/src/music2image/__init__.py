"""Music-derived captions and affect signals to validated text-to-image prompts,
plus the measurement harness that scores the results."""

__version__ = "0.1.0"
