"""Audio-visual emotion recognition with top-3 fusion and sarcasm flagging."""

__version__ = "0.1.0"
