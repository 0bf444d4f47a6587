"""sbiforge: self-blended face forgery synthesis with exact ground truth,
CoT annotation, four-part reward scoring, and a reward-feedback curriculum."""

__version__ = "0.1.0"
